from ._lidartrack import (
    ContractViolation,
    DegenerateInput,
    FrameAbort,
    MalformedFile,
    ParseError,
    cdf_of,
    chi_squared_distance,
    dbscan,
    generate_drive,
    mdt_score,
    run_config,
    run_scenario,
    scenario_text,
    vfh,
)

__all__ = [
    "ContractViolation",
    "DegenerateInput",
    "FrameAbort",
    "MalformedFile",
    "ParseError",
    "cdf_of",
    "chi_squared_distance",
    "dbscan",
    "generate_drive",
    "mdt_score",
    "run_config",
    "run_scenario",
    "scenario_text",
    "vfh",
]
