#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "s2wef/cluster.hpp"
#include "s2wef/config.hpp"
#include "s2wef/detect.hpp"
#include "s2wef/error.hpp"
#include "s2wef/fedsim.hpp"
#include "s2wef/wef.hpp"

namespace py = pybind11;
using namespace s2wef;

namespace {

// Python side sees matrices as lists of rows.
using Rows = std::vector<std::vector<double>>;
using IntRows = std::vector<std::vector<int>>;

Matrix to_matrix(const Rows& rows) {
  if (rows.empty() || rows.front().empty()) throw ShapeError("matrix must have at least one row and column");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw ShapeError("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

IntRows from_wef(const wef::WefMatrix& f) {
  IntRows out(f.rows(), std::vector<int>(f.cols()));
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t c = 0; c < f.cols(); ++c) out[r][c] = f(r, c);
  return out;
}

// Bound defaults to the largest entry, which is all the scoring functions need.
wef::WefMatrix to_wef(const IntRows& rows, int bound = -1) {
  if (rows.empty() || rows.front().empty()) throw ShapeError("WEF matrix must be non-empty");
  std::vector<int> counts;
  int top = 0;
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) throw ShapeError("ragged WEF rows");
    for (int v : row) counts.push_back(v), top = std::max(top, v);
  }
  return {rows.size(), rows.front().size(), bound < 0 ? top : bound, counts};
}

std::vector<wef::WefMatrix> to_wefs(const std::vector<IntRows>& list, int bound) {
  std::vector<wef::WefMatrix> out;
  for (const auto& rows : list) out.push_back(to_wef(rows, bound));
  return out;
}

std::vector<detect::Point2> to_points(const std::vector<std::pair<double, double>>& pts) {
  std::vector<detect::Point2> out;
  for (auto [g, d] : pts) out.push_back({g, d});
  return out;
}

py::dict cluster_dict(const detect::ClusterOutcome& c) {
  py::dict d;
  d["k"] = c.k;
  d["assignment"] = c.assignment;
  d["suspicious"] = c.suspicious;
  d["s2"] = c.s2;
  d["delta"] = c.delta;
  d["heights"] = c.heights;
  return d;
}

py::dict metrics_dict(const fedsim::Metrics& m) {
  py::dict d;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  d["fpr"] = m.fpr;
  return d;
}

}  // namespace

PYBIND11_MODULE(_s2wef, m) {
  m.doc() = "Free-rider detection for federated learning from weight-evolution frequency matrices";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<HistoryError>(m, "HistoryError", base.ptr());

  m.def("dynamic_threshold", [](const Rows& prev, const Rows& curr) {
    return wef::dynamic_threshold(to_matrix(prev), to_matrix(curr));
  }, py::arg("prev"), py::arg("curr"));

  m.def("build_wef", [](const std::vector<Rows>& snapshots) {
    std::vector<Matrix> snaps;
    for (const auto& s : snapshots) snaps.push_back(to_matrix(s));
    return from_wef(wef::build_wef(snaps));
  }, py::arg("snapshots"));

  m.def("counterfeit_one_step", [](const Rows& fake, const Rows& global, int e, bool use_abs) {
    return from_wef(wef::counterfeit_one_step(to_matrix(fake), to_matrix(global), e, use_abs));
  }, py::arg("fake"), py::arg("global_weights"), py::arg("e"), py::arg("use_abs") = true);

  m.def("simulate_global_wef", [](const Rows& current, const Rows& previous, int e) {
    return from_wef(detect::simulate_global_wef(to_matrix(current), to_matrix(previous), e));
  }, py::arg("current"), py::arg("previous"), py::arg("e"));

  m.def("dev_scores", [](const std::vector<IntRows>& wefs) {
    return detect::dev_scores(to_wefs(wefs, -1));
  }, py::arg("wefs"));

  m.def("gamma_scores", [](const std::vector<IntRows>& wefs, const IntRows& simulated, bool cos_only) {
    return detect::gamma_scores(to_wefs(wefs, -1), to_wef(simulated),
                                cos_only ? detect::GammaMode::CosOnly : detect::GammaMode::CosOverL1);
  }, py::arg("wefs"), py::arg("simulated"), py::arg("cos_only") = false);

  m.def("robust_standardize", [](const std::vector<double>& v) { return detect::robust_standardize(v); },
        py::arg("values"));

  m.def("ward_hac", [](const std::vector<std::pair<double, double>>& points) {
    const auto hac = detect::ward_hac(to_points(points));
    py::list merges;
    for (const auto& mg : hac.merges) merges.append(py::make_tuple(mg.left, mg.right, mg.height, mg.members));
    py::dict d;
    d["merges"] = merges;
    d["heights"] = hac.heights;
    d["assignment"] = hac.assignment;
    return d;
  }, py::arg("points"));

  m.def("decide_k", [](const std::vector<std::pair<double, double>>& points) {
    const auto pts = to_points(points);
    return cluster_dict(detect::decide_k(detect::ward_hac(pts), pts));
  }, py::arg("points"));

  m.def("detect_round", [](const std::vector<IntRows>& wefs, const Rows& current, const Rows& previous, int e,
                           const std::string& detector) {
    const auto kind = detect::parse_detector_kind(detector);
    if (!kind) throw ConfigError("unknown detector: " + detector);
    const auto f = to_wefs(wefs, e);
    const Matrix prev = to_matrix(previous);
    const auto a = detect::run_detector(*kind, f, f, to_matrix(current), &prev, e);
    py::dict d;
    d["active"] = a.active;
    d["gamma"] = a.scores.gamma;
    d["dev"] = a.scores.dev;
    d["cluster"] = a.cluster ? py::object(cluster_dict(*a.cluster)) : py::none();
    d["flags_gamma"] = a.decision.flags_gamma;
    d["flags_dev"] = a.decision.flags_dev;
    d["p_gamma"] = a.decision.p_gamma;
    d["p_dev"] = a.decision.p_dev;
    d["detected"] = a.decision.detected;
    d["free_riders"] = a.decision.free_rider_list;
    return d;
  }, py::arg("wefs"), py::arg("current"), py::arg("previous"), py::arg("e"), py::arg("detector") = "S2WEF");

  m.def("compute_metrics", [](const std::vector<bool>& truth, const std::vector<std::size_t>& flagged) {
    return metrics_dict(fedsim::compute_metrics(truth, flagged));
  }, py::arg("truth"), py::arg("flagged"));

  m.def("parse_config", [](const std::string& text) { return fedsim::dump_config(fedsim::parse_config(text)); },
        py::arg("text"), "Validate a JSON config; returns it with every default filled in.");

  m.def("run_simulation", [](const std::string& config_text, unsigned threads, bool with_trace) {
    const auto cfg = fedsim::parse_config(config_text);
    std::ostringstream trace;
    fedsim::RunOptions opts;
    opts.threads = threads;
    if (with_trace) opts.trace = &trace;
    fedsim::MetricsReport r;
    {
      py::gil_scoped_release release;
      r = fedsim::run_simulation(cfg, opts);
    }
    py::list trials;
    for (const auto& t : r.trials) {
      py::dict d;
      d["seed"] = t.seed;
      d["mean"] = metrics_dict(t.mean);
      d["attack_mean"] = metrics_dict(t.attack_mean);
      d["final_accuracy"] = t.final_accuracy;
      d["total_flags"] = t.total_flags;
      trials.append(d);
    }
    py::dict d;
    d["trials"] = trials;
    d["mean"] = metrics_dict(r.mean);
    d["attack_mean"] = metrics_dict(r.attack_mean);
    d["final_accuracy"] = r.final_accuracy;
    d["total_flags"] = r.total_flags;
    if (with_trace) d["trace"] = trace.str();
    return d;
  }, py::arg("config"), py::arg("threads") = 0, py::arg("trace") = false,
     "Run every seed of a JSON config and return summary metrics.");
}
