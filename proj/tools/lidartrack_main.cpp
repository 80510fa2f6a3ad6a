#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lidartrack/errors.hpp"
#include "lidartrack/evaluation.hpp"
#include "lidartrack/ingest.hpp"
#include "lidartrack/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lidartrack;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kRuntimeAbort = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool passthrough = false;
  std::optional<std::size_t> frames;
};

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "pipeline config file (key = value)");
  if (config_required) c->required();
  cmd->add_option("--seed", o.seed, "rng seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--pose-passthrough", o.passthrough, "use GPS/INS pose directly instead of the EKF");
  cmd->add_option("--frames", o.frames, "maximum number of frames");
}

PipelineConfig make_config(const Overrides& o) {
  PipelineConfig cfg = load_pipeline_config(o.config);
  if (o.seed) cfg.rng_seed = *o.seed;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.passthrough) cfg.pose_mode = PoseMode::Passthrough;
  if (o.frames) cfg.max_frames = *o.frames;
  return cfg;
}

SyntheticScenario builtin_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "cyclists") return cyclists_and_vehicle_scenario(seed);
  if (name == "twins") return twin_crossing_scenario(seed);
  if (name == "dense") return dense_scenario(seed);
  throw ContractViolation("unknown scenario '" + name + "' (expected cyclists, twins or dense)");
}

void print_run(const RunResult& r) {
  std::printf("frames %zu, track rows %zu, super frames %zu\n", r.frames, r.tracks.size(), r.superframes.size());
  std::printf("resolutions: single %zu, mdt %zu, motion %zu, nearest %zu, none %zu\n",
              r.resolutions[static_cast<int>(Resolution::SingleCandidate)],
              r.resolutions[static_cast<int>(Resolution::HighestMdt)],
              r.resolutions[static_cast<int>(Resolution::MotionLikelihood)],
              r.resolutions[static_cast<int>(Resolution::NearestCentroid)],
              r.resolutions[static_cast<int>(Resolution::NoCandidate)]);
  if (r.accuracy) {
    const auto& s = r.accuracy->per_frame;
    std::printf("accuracy: pooled %.4f, per-frame median %.4f [q1 %.4f, q3 %.4f], id switches %zu\n",
                r.accuracy->pooled, s.median, s.q1, s.q3, r.accuracy->id_switches);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR multi-object tracking pipeline"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run the pipeline and write logs");
  add_common(run, run_opts, true);

  Overrides bench_opts;
  std::string bench_scenario = "dense";
  auto* bench = app.add_subcommand("bench", "per-stage timing table");
  add_common(bench, bench_opts, false);
  bench->add_option("--scenario", bench_scenario, "built-in scenario when no --config is given");

  std::string tracks_path, truth_path;
  double radius = 1.0;
  auto* score = app.add_subcommand("score", "identity-preservation accuracy from logs");
  score->add_option("--tracks", tracks_path, "tracks.log")->required();
  score->add_option("--truth", truth_path, "groundtruth.log")->required();
  score->add_option("--radius", radius, "match radius in metres");

  std::string gen_scenario = "cyclists", gen_config;
  std::uint64_t gen_seed = 1;
  std::optional<std::size_t> gen_frames;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "write a synthetic scenario as a KITTI-style drive");
  gen->add_option("--scenario", gen_scenario, "cyclists, twins or dense");
  gen->add_option("--config", gen_config, "scenario file (overrides --scenario)");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--frames", gen_frames, "number of frames");
  gen->add_option("--out", gen_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  PipelineConfig cfg;
  try {
    if (*run) {
      cfg = make_config(run_opts);
      if (cfg.out_dir.empty()) throw ContractViolation("run: an output directory is required (--out or 'out =')");
      cfg.validate();
    } else if (*bench) {
      if (!bench_opts.config.empty()) {
        cfg = make_config(bench_opts);
      } else {
        cfg.scenario = builtin_scenario(bench_scenario, bench_opts.seed.value_or(1));
        if (!bench_opts.out.empty()) cfg.out_dir = bench_opts.out;
        if (bench_opts.passthrough) cfg.pose_mode = PoseMode::Passthrough;
        if (bench_opts.frames) cfg.max_frames = *bench_opts.frames;
      }
      cfg.validate();
    } else if (*score) {
      const auto report = score_accuracy(read_track_log(tracks_path), read_ground_truth(truth_path), radius);
      std::cout << format_accuracy(report);
      return kOk;
    } else if (*gen) {
      SyntheticScenario sc = gen_config.empty() ? builtin_scenario(gen_scenario, gen_seed) : load_scenario(gen_config);
      if (!gen_config.empty() && gen->count("--seed")) sc.rng_seed = gen_seed;
      if (gen_frames) sc.frames = *gen_frames;
      materialize_synthetic(sc, gen_out);
      std::printf("wrote %zu frames to %s\n", sc.frames, gen_out.c_str());
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    const RunResult r = run_pipeline(cfg);
    if (*bench) {
      std::cout << format_timing_table(report_timings(r.timings));
    } else {
      print_run(r);
    }
  } catch (const FrameAbort& e) {
    std::cerr << "abort at frame " << e.frame() << ": " << e.what() << '\n';
    return kRuntimeAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kOk;
}
