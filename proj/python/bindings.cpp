#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lidartrack/association.hpp"
#include "lidartrack/descriptor.hpp"
#include "lidartrack/errors.hpp"
#include "lidartrack/evaluation.hpp"
#include "lidartrack/pipeline.hpp"
#include "lidartrack/segmentation.hpp"

namespace py = pybind11;
using namespace lidartrack;

namespace {

// Rows are x, y, z.
PointCloud cloud_from(const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>& xyz) {
  PointCloud c;
  c.points.reserve(static_cast<std::size_t>(xyz.rows()));
  for (Eigen::Index i = 0; i < xyz.rows(); ++i) c.points.push_back({xyz(i, 0), xyz(i, 1), xyz(i, 2), 0.0});
  return c;
}

std::vector<Eigen::Vector3d> rows_of(const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>& xyz) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(static_cast<std::size_t>(xyz.rows()));
  for (Eigen::Index i = 0; i < xyz.rows(); ++i) out.emplace_back(xyz.row(i).transpose());
  return out;
}

SyntheticScenario scenario_named(const std::string& name, std::uint64_t seed, std::size_t frames) {
  if (name == "cyclists") return cyclists_and_vehicle_scenario(seed, frames);
  if (name == "twins") return twin_crossing_scenario(seed, frames);
  if (name == "dense") return dense_scenario(seed, frames);
  throw ContractViolation("unknown scenario '" + name + "'");
}

py::dict run_to_dict(const RunResult& r) {
  py::dict d;
  d["frames"] = r.frames;
  py::list rows;
  for (const auto& e : r.tracks) {
    rows.append(py::make_tuple(e.frame, e.track_id, e.position.x(), e.position.y(), e.position.z(), e.velocity.x(),
                               e.velocity.y(), e.heading, e.confidence, e.matched));
  }
  d["tracks"] = rows;
  py::dict res;
  for (int i = 0; i < static_cast<int>(r.resolutions.size()); ++i) {
    res[to_string(static_cast<Resolution>(i))] = r.resolutions[static_cast<std::size_t>(i)];
  }
  d["resolutions"] = res;
  d["superframes"] = r.superframes.size();
  if (r.accuracy) {
    py::dict a;
    a["pooled"] = r.accuracy->pooled;
    a["median"] = r.accuracy->per_frame.median;
    a["q1"] = r.accuracy->per_frame.q1;
    a["q3"] = r.accuracy->per_frame.q3;
    a["id_switches"] = r.accuracy->id_switches;
    a["misses"] = r.accuracy->misses;
    d["accuracy"] = a;
  } else {
    d["accuracy"] = py::none();
  }
  if (!r.timings.empty()) d["timing_table"] = format_timing_table(report_timings(r.timings));
  return d;
}

}  // namespace

PYBIND11_MODULE(_lidartrack, m) {
  m.doc() = "LiDAR segmentation, descriptor association and tracking";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<MalformedFile>(m, "MalformedFile", PyExc_IOError);
  py::register_exception<FrameAbort>(m, "FrameAbort", PyExc_RuntimeError);

  m.def("chi_squared_distance",
        py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&chi_squared_distance),
        py::arg("h1"), py::arg("h2"));
  m.def("cdf_of", &cdf_of, py::arg("pdf"));
  m.def(
      "mdt_score", [](const std::vector<double>& f1, const std::vector<double>& f2) { return mdt_score(f1, f2); },
      py::arg("cdf1"), py::arg("cdf2"));

  m.def(
      "dbscan",
      [](const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>& xyz, double eps, std::size_t min_pts) {
        DbscanConfig cfg{eps, min_pts};
        cfg.validate();
        const PointCloud cloud = cloud_from(xyz);
        return dbscan(cloud, build_kdtree(cloud), cfg).labels;
      },
      py::arg("points"), py::arg("eps") = 0.5, py::arg("min_pts") = 10,
      "Cluster label per row, -1 for noise.");

  m.def(
      "vfh",
      [](const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>& xyz, std::size_t k,
         const Eigen::Vector3d& viewpoint) {
        const auto pts = rows_of(xyz);
        const auto d = compute_vfh(pts, estimate_normals(pts, k, viewpoint), viewpoint);
        return py::make_tuple(std::vector<double>(d.pdf.begin(), d.pdf.end()),
                              std::vector<double>(d.cdf.begin(), d.cdf.end()));
      },
      py::arg("points"), py::arg("k") = 10, py::arg("viewpoint") = Eigen::Vector3d::Zero(),
      "(pdf, cdf) of the viewpoint feature histogram.");

  m.def(
      "scenario_text",
      [](const std::string& name, std::uint64_t seed, std::size_t frames) {
        return format_scenario(scenario_named(name, seed, frames));
      },
      py::arg("name"), py::arg("seed") = 1, py::arg("frames") = 20);

  m.def(
      "generate_drive",
      [](const std::string& name, std::uint64_t seed, std::size_t frames, const std::filesystem::path& out) {
        materialize_synthetic(scenario_named(name, seed, frames), out);
      },
      py::arg("name"), py::arg("seed"), py::arg("frames"), py::arg("out"));

  m.def(
      "run_scenario",
      [](const std::string& name, std::uint64_t seed, std::size_t frames, bool passthrough) {
        PipelineConfig cfg;
        cfg.scenario = scenario_named(name, seed, frames);
        cfg.rng_seed = seed;
        if (passthrough) cfg.pose_mode = PoseMode::Passthrough;
        cfg.validate();
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(cfg);
        }
        return run_to_dict(r);
      },
      py::arg("name"), py::arg("seed") = 1, py::arg("frames") = 20, py::arg("passthrough") = false);

  m.def(
      "run_config",
      [](const std::filesystem::path& path) {
        const PipelineConfig cfg = load_pipeline_config(path);
        cfg.validate();
        return run_to_dict(run_pipeline(cfg));
      },
      py::arg("path"), "Runs a key-value config file and writes its artifacts.");
}
