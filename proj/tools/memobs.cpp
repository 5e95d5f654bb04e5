#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/format.h>

#include "memobs/errors.hpp"
#include "memobs/evolution.hpp"
#include "memobs/inverse.hpp"
#include "memobs/io.hpp"
#include "memobs/kernels.hpp"
#include "memobs/modal.hpp"
#include "memobs/parallel.hpp"
#include "memobs/sampling.hpp"
#include "memobs/spectral.hpp"

namespace fs = std::filesystem;
using memobs::io::Json;

namespace {

constexpr const char* kOutputEnv = "MEMOBS_OUTPUT_DIR";
constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

struct Run {
  std::string command;
  Json config;  // after overrides, without "output"
  std::string config_hash;
  fs::path out;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> artifacts;

  const Json& params() const { return config.contains("params") ? config["params"] : empty_object(); }
  static const Json& empty_object() {
    static const Json object = Json::object();
    return object;
  }

  void write_json(const std::string& name, Json body) {
    Json doc = Json::object();
    doc["config_sha256"] = config_hash;
    doc["command"] = command;
    for (auto& item : body.items()) doc[item.key()] = std::move(item.value());
    memobs::io::write_text(out / name, memobs::io::dump(doc));
    artifacts.push_back(name);
  }
  void write_csv(const std::string& name, const memobs::io::CsvTable& table) {
    memobs::io::write_text(out / name, memobs::io::to_csv(table, "config_sha256: " + config_hash));
    artifacts.push_back(name);
  }
  template <class F>
  auto timed(const std::string& label, F&& f) {
    const auto start = Clock::now();
    auto result = f();
    timings.emplace_back(label, std::chrono::duration<double>(Clock::now() - start).count());
    return result;
  }
};

// ---- config access ---------------------------------------------------------

const Json& section(const Json& config, const char* key) {
  if (!config.contains(key)) throw memobs::ValidationError(fmt::format("{}: missing required section", key));
  return config[key];
}

double number_or(const Json& object, const char* key, double fallback, const std::string& path) {
  return object.contains(key) ? memobs::io::get_number(object, key, path) : fallback;
}

int int_or(const Json& object, const char* key, int fallback, const std::string& path) {
  return object.contains(key) ? memobs::io::get_int(object, key, path) : fallback;
}

std::vector<double> numbers(const Json& object, const char* key, const std::string& path) {
  const std::string here = fmt::format("{}.{}", path, key);
  if (!object.contains(key)) throw memobs::ValidationError(fmt::format("{}: missing required field", here));
  const Json& v = object[key];
  if (!v.is_array() || v.empty()) throw memobs::ValidationError(fmt::format("{}: expected a nonempty array", here));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw memobs::ValidationError(fmt::format("{}[{}]: expected a number", here, i));
    out.push_back(v[i].get<double>());
  }
  return out;
}

double positive(double value, const std::string& path) {
  if (!(value > 0.0)) throw memobs::ValidationError(fmt::format("{}: must be positive, got {}", path, value));
  return value;
}

memobs::SpectralBasis basis_of(const Run& run) { return memobs::io::basis_from_json(section(run.config, "basis")); }
memobs::MemoryKernel kernel_of(const Run& run) { return memobs::io::kernel_from_json(section(run.config, "kernel")); }

memobs::SamplingPlan plan_of(const Run& run, double length) {
  memobs::SamplingPlan plan = memobs::io::plan_from_json(section(run.config, "plan"));
  try {
    plan.check_within(length);
  } catch (const memobs::ValidationError& e) {
    throw memobs::ValidationError(fmt::format("plan: {}", e.what()));
  }
  return plan;
}

memobs::ModalEvaluator evaluator_of(const Run& run) {
  memobs::ModalOptions options;
  std::shared_ptr<memobs::ModalCache> cache;
  if (run.config.contains("modal")) {
    const Json& m = run.config["modal"];
    memobs::io::require_keys(m, {"method", "max_step_lambda", "min_steps", "cache"}, "modal");
    if (m.contains("method")) {
      if (!m["method"].is_string()) throw memobs::ValidationError("modal.method: expected a string");
      options.method = memobs::parse_modal_method(m["method"].get<std::string>());
    }
    options.max_step_lambda = positive(number_or(m, "max_step_lambda", options.max_step_lambda, "modal"),
                                       "modal.max_step_lambda");
    if (options.max_step_lambda > 2.0) throw memobs::ValidationError("modal.max_step_lambda: must not exceed 2");
    options.min_steps = int_or(m, "min_steps", options.min_steps, "modal");
    if (options.min_steps < 8) throw memobs::ValidationError("modal.min_steps: must be at least 8");
    if (m.contains("cache")) {
      if (!m["cache"].is_string()) throw memobs::ValidationError("modal.cache: expected a path string");
      cache = std::make_shared<memobs::ModalCache>(m["cache"].get<std::string>());
      cache->load();
    }
  }
  return memobs::ModalEvaluator(kernel_of(run), options, cache);
}

memobs::SpectralField field_param(const Run& run, const char* key, const memobs::SpectralBasis& basis) {
  const Json& p = run.params();
  if (!p.contains(key)) throw memobs::ValidationError(fmt::format("params.{}: missing required field", key));
  return memobs::io::field_from_json(p[key], basis, fmt::format("params.{}", key));
}

memobs::io::CsvTable coefficient_table(const memobs::SpectralBasis& basis,
                                       std::vector<std::pair<std::string, const Eigen::VectorXd*>> columns) {
  memobs::io::CsvTable table{{"k", "lambda"}, {}};
  for (const auto& [name, _] : columns) table.columns.push_back(name);
  for (int k = 0; k < basis.size(); ++k) {
    std::vector<memobs::io::Cell> row{static_cast<long long>(k + 1), basis.eigenvalues()[k]};
    for (const auto& [_, v] : columns) row.emplace_back((*v)[k]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---- commands --------------------------------------------------------------

void cmd_modal(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"lambda", "T", "samples"}, "params");
  const double lambda = positive(memobs::io::get_number(p, "lambda", "params"), "params.lambda");
  const double T = positive(memobs::io::get_number(p, "T", "params"), "params.T");
  const int samples = int_or(p, "samples", 200, "params");
  if (samples < 1) throw memobs::ValidationError("params.samples: must be at least 1");
  const memobs::ModalEvaluator evaluator = evaluator_of(run);

  std::vector<double> values(samples + 1);
  run.timed("solve", [&] {
    if (evaluator.uses_closed_form()) {
      for (int i = 0; i <= samples; ++i) values[i] = evaluator.value(lambda, T * i / samples);
    } else {
      const int base = evaluator.volterra_steps(lambda, T);
      const int stride = (base + samples - 1) / samples;
      const memobs::ModalTrajectory traj =
          memobs::solve_modal_volterra(lambda, evaluator.kernel(), T, stride * samples);
      for (int i = 0; i <= samples; ++i) values[i] = traj.values[static_cast<std::size_t>(i) * stride];
    }
    return 0;
  });
  memobs::io::CsvTable table{{"t", "x"}, {}};
  for (int i = 0; i <= samples; ++i) table.rows.push_back({T * i / samples, values[i]});
  run.write_csv("trajectory.csv", table);
  Json body{{"lambda", lambda}, {"T", T}, {"solver", evaluator.uses_closed_form() ? "closed-form" : "volterra"}};
  if (std::holds_alternative<memobs::LinearKernel>(evaluator.kernel().variant())) {
    const memobs::CubicExponents e = memobs::linear_kernel_exponents(lambda);
    body["exponents"] = Json{{"real_root", e.real_root},
                             {"complex_real", e.complex_root.real()},
                             {"complex_imag", e.complex_root.imag()},
                             {"gap_exponent", e.gap_exponent()}};
  }
  run.write_json("modal.json", body);
}

void cmd_nodal(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"lambda", "T", "resolution", "method"}, "params");
  const double lambda = positive(memobs::io::get_number(p, "lambda", "params"), "params.lambda");
  const memobs::MemoryKernel kernel = kernel_of(run);
  const double T = p.contains("T") ? positive(memobs::io::get_number(p, "T", "params"), "params.T")
                                   : memobs::default_nodal_horizon(lambda, kernel);
  const int resolution = int_or(p, "resolution", 8192, "params");
  if (resolution < 16) throw memobs::ValidationError("params.resolution: must be at least 16");
  std::string method = "numeric";
  if (p.contains("method")) {
    if (!p["method"].is_string()) throw memobs::ValidationError("params.method: expected a string");
    method = p["method"].get<std::string>();
  }
  memobs::NodalSet set;
  if (method == "numeric") {
    set = run.timed("scan", [&] { return memobs::nodal_set_numeric(lambda, kernel, T, resolution); });
  } else if (method == "closed-form") {
    const auto form = kernel.exponential_form();
    if (!form || !(form->c > 0.0)) {
      throw memobs::ValidationError("params.method: closed-form zeros need an exponential kernel with c > 0");
    }
    set = memobs::nodal_set_exp_closed(lambda, form->c, form->alpha, T);
  } else {
    throw memobs::ValidationError(fmt::format("params.method: unknown method '{}'", method));
  }
  run.write_json("nodal.json", Json{{"lambda", lambda}, {"horizon", T}, {"method", method},
                                     {"zeros", memobs::io::to_json(set)}});
}

void cmd_propagate(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"y0", "t"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const double t = memobs::io::get_number(p, "t", "params");
  if (t < 0.0) throw memobs::ValidationError("params.t: must be nonnegative");
  const memobs::SpectralField y0 = field_param(run, "y0", basis);
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  const memobs::SpectralField yt = run.timed("propagate", [&] { return memobs::propagate(y0, evaluator, t); });
  run.write_json("propagate.json", Json{{"t", t}, {"field", memobs::io::to_json(yt)},
                                        {"norm_l2", yt.hs_norm(0)}, {"norm_h_minus4", yt.hs_norm(-4)}});
  run.write_csv("coefficients.csv", coefficient_table(basis, {{"a0", &y0.coeffs()}, {"a_t", &yt.coeffs()}}));
}

void cmd_residual(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"t", "k_first", "k_last"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const double t = positive(memobs::io::get_number(p, "t", "params"), "params.t");
  const int k_first = int_or(p, "k_first", 1, "params");
  const int k_last = int_or(p, "k_last", basis.size(), "params");
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  const memobs::ResidualTable res = run.timed(
      "residual", [&] { return memobs::decomposition_residual(basis, evaluator, t, k_first, k_last); });
  memobs::io::CsvTable table{{"k", "lambda", "x_k_t", "residual"}, {}};
  for (const memobs::ResidualRow& row : res.rows) {
    table.rows.push_back({static_cast<long long>(row.k), row.lambda, row.x, row.residual});
  }
  run.write_csv("residual.csv", table);
  Json remainder = Json::array();
  for (double r : res.remainder) remainder.push_back(r);
  run.write_json("residual.json", Json{{"t", t}, {"kernel_value", evaluator.kernel()(t)}, {"slope", res.slope},
                                       {"sup_scaled", res.sup_scaled}, {"remainder", remainder}});
}

void cmd_check_plan(Run& run) {
  memobs::io::require_keys(run.params(), {}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const memobs::MemoryKernel kernel = kernel_of(run);
  const memobs::SamplingPlan plan = plan_of(run, basis.length());
  const memobs::NonvanishingCheck nonvanishing = memobs::check_kernel_nonvanishing(plan, kernel);
  const memobs::GeometricCheck geometry = memobs::check_geometric_condition(plan, kernel, basis.length());
  Json active = Json::array();
  for (int j : geometry.active) active.push_back(j);
  Json uncovered = Json::array();
  for (const memobs::Interval& gap : geometry.uncovered) {
    uncovered.push_back(memobs::io::to_json(memobs::ObservationRegion({gap}))[0]);
  }
  Json points = Json::array();
  for (double x : geometry.uncovered_points) points.push_back(x);
  run.write_json("plan_check.json", Json{{"kernel_nonvanishing", nonvanishing.holds},
                                         {"active_instants", active},
                                         {"verdict", memobs::to_string(geometry.verdict)},
                                         {"uncovered_intervals", uncovered},
                                         {"uncovered_points", points}});
}

void cmd_constants(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"truncations"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  std::vector<int> truncations;
  if (p.contains("truncations")) {
    const std::vector<double> raw = numbers(p, "truncations", "params");
    for (double k : raw) {
      if (k < 1 || k != std::floor(k)) throw memobs::ValidationError("params.truncations: expected positive integers");
      truncations.push_back(static_cast<int>(k));
    }
  } else {
    truncations.push_back(basis.size());
  }
  const memobs::SamplingPlan plan = plan_of(run, basis.length());
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  memobs::io::CsvTable table{{"K", "c_min", "c_max", "lower_bracket", "upper_bracket"}, {}};
  Json rows = Json::array();
  for (int K : truncations) {
    const memobs::ObservabilityConstants c = run.timed(fmt::format("K={}", K), [&] {
      return memobs::observability_constants(plan, evaluator, memobs::SpectralBasis(basis.length(), K));
    });
    table.rows.push_back({static_cast<long long>(K), c.c_min, c.c_max, c.lower_bracket, c.upper_bracket});
    rows.push_back(Json{{"K", K},
                        {"c_min", c.c_min},
                        {"c_max", c.c_max},
                        {"lower_bracket", c.lower_bracket},
                        {"upper_bracket", c.upper_bracket},
                        {"conditioning_warning", c.conditioning_warning},
                        {"raw_min_eigenvalue", c.raw_min_eigenvalue}});
  }
  run.write_csv("constants.csv", table);
  run.write_json("constants.json", Json{{"constants", rows}});
}

void cmd_probe(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"x0", "radii", "reference"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const memobs::SamplingPlan plan = plan_of(run, basis.length());
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  const double x0 = memobs::io::get_number(p, "x0", "params");
  const std::vector<double> radii = numbers(p, "radii", "params");
  const auto rows = run.timed("probe", [&] { return memobs::probe_upper_bound(plan, evaluator, basis, x0, radii); });
  memobs::io::CsvTable table{{"x0", "radius", "ratio", "observed", "norm_h_minus4"}, {}};
  for (const memobs::ProbeRow& r : rows) table.rows.push_back({x0, r.radius, r.ratio, r.observed, r.norm_h_minus4});
  Json body{{"x0", x0}};
  if (p.contains("reference")) {
    const double xr = memobs::io::get_number(p, "reference", "params");
    const auto ref = memobs::probe_upper_bound(plan, evaluator, basis, xr, radii);
    for (const memobs::ProbeRow& r : ref) table.rows.push_back({xr, r.radius, r.ratio, r.observed, r.norm_h_minus4});
    body["reference"] = xr;
    body["smallest_ratio"] = rows.back().ratio;
    body["reference_ratio"] = ref.back().ratio;
  }
  run.write_csv("probe.csv", table);
  run.write_json("probe.json", body);
}

void cmd_certify(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"tol"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const memobs::SamplingPlan plan = plan_of(run, basis.length());
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  const double tol = positive(number_or(p, "tol", 1e-10, "params"), "params.tol");
  const std::vector<double> times = plan.times();
  const memobs::Certificate cert = run.timed(
      "certify", [&] { return memobs::backward_uniqueness_certificate(times, evaluator, basis, tol); });
  memobs::io::CsvTable table{{"k", "instant", "value", "scale"}, {}};
  for (const memobs::ModeWitness& w : cert.modes) {
    table.rows.push_back({static_cast<long long>(w.k), static_cast<long long>(w.instant), w.value, w.scale});
  }
  Json failing = Json::array();
  for (int k : cert.failing_modes) failing.push_back(k);
  const std::string verdict = cert.certified()
                                  ? fmt::format("certified up to K = {}", basis.size())
                                  : fmt::format("fails at mode {}", cert.failing_modes.front());
  run.write_csv("certificate.csv", table);
  run.write_json("certificate.json", Json{{"verdict", verdict}, {"certified", cert.certified()}, {"K", basis.size()},
                                          {"tolerance", tol}, {"failing_modes", failing}});
}

void cmd_reconstruct(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"y0", "samples_per_unit", "sigma", "seed", "regularization"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const memobs::SamplingPlan plan = plan_of(run, basis.length());
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  const memobs::SpectralField y0 = field_param(run, "y0", basis);
  const int spu = int_or(p, "samples_per_unit", 64, "params");
  const double sigma = number_or(p, "sigma", 0.0, "params");
  const int seed = int_or(p, "seed", 0, "params");
  if (seed < 0) throw memobs::ValidationError("params.seed: must be nonnegative");
  const std::vector<double> regs = p.contains("regularization") ? numbers(p, "regularization", "params")
                                                                 : std::vector<double>{1e-12};
  const memobs::ObservationData data = run.timed("simulate", [&] {
    return memobs::simulate_observations(y0, plan, evaluator, spu, sigma, static_cast<std::uint64_t>(seed));
  });
  memobs::io::write_text(run.out / "observations.json", memobs::io::dump(memobs::io::to_json(data)));
  run.artifacts.push_back("observations.json");

  const double truth = y0.hs_norm(-4);
  memobs::io::CsvTable summary{{"regularization", "error_h_minus4", "relative_error", "condition_number",
                                "residual_norm"}, {}};
  memobs::io::CsvTable coeffs{{"regularization", "k", "true", "reconstructed"}, {}};
  Json ladder = Json::array();
  for (double reg : regs) {
    const memobs::Reconstruction rec = run.timed(fmt::format("reg={}", memobs::io::format_number(reg)), [&] {
      return memobs::reconstruct_initial(data, plan, evaluator, basis, reg);
    });
    const double error = (rec.field - y0).hs_norm(-4);
    const double relative = truth > 0.0 ? error / truth : error;
    summary.rows.push_back({reg, error, relative, rec.condition_number, rec.residual_norm});
    for (int k = 0; k < basis.size(); ++k) {
      coeffs.rows.push_back({reg, static_cast<long long>(k + 1), y0.coeffs()[k], rec.field.coeffs()[k]});
    }
    ladder.push_back(Json{{"regularization", reg}, {"error_h_minus4", error}, {"relative_error", relative},
                          {"condition_number", rec.condition_number}, {"residual_norm", rec.residual_norm},
                          {"field", memobs::io::to_json(rec.field)}});
  }
  run.write_csv("reconstruction.csv", summary);
  run.write_csv("reconstruction_coefficients.csv", coeffs);
  run.write_json("reconstruction.json", Json{{"sigma", sigma}, {"seed", seed}, {"generator", data.generator},
                                             {"samples_per_unit", spu}, {"results", ladder}});
}

void cmd_control(Run& run) {
  const Json& p = run.params();
  memobs::io::require_keys(p, {"y0", "y1", "T", "simulation_steps"}, "params");
  const memobs::SpectralBasis basis = basis_of(run);
  const memobs::SamplingPlan plan = plan_of(run, basis.length());
  const memobs::ModalEvaluator evaluator = evaluator_of(run);
  const memobs::SpectralField y0 = field_param(run, "y0", basis);
  const memobs::SpectralField y1 = field_param(run, "y1", basis);
  const double T = positive(memobs::io::get_number(p, "T", "params"), "params.T");
  const int steps = int_or(p, "simulation_steps", 0, "params");
  if (steps < 0) throw memobs::ValidationError("params.simulation_steps: must be nonnegative");

  const Eigen::MatrixXd gram = memobs::control_gram(plan, evaluator, basis);
  const Eigen::MatrixXd q = memobs::observation_gram(plan, evaluator, basis);
  const double scale = std::max(q.cwiseAbs().maxCoeff(), 1e-300);
  const double discrepancy = (gram - q).cwiseAbs().maxCoeff() / scale;
  const memobs::ImpulseControl ctl =
      run.timed("control", [&] { return memobs::impulse_control(y0, y1, plan, T, evaluator, steps); });

  memobs::io::CsvTable table{{"j", "t", "k", "c"}, {}};
  for (std::size_t j = 0; j < ctl.controls.size(); ++j) {
    for (int k = 0; k < basis.size(); ++k) {
      table.rows.push_back({static_cast<long long>(j), plan[static_cast<int>(j)].time,
                            static_cast<long long>(k + 1), ctl.controls[j][k]});
    }
  }
  run.write_csv("controls.csv", table);
  run.write_csv("final_state.csv", coefficient_table(basis, {{"target", &y1.coeffs()},
                                                             {"predicted", &ctl.predicted.coeffs()},
                                                             {"simulated", &ctl.simulated.coeffs()}}));
  run.write_json("control.json", Json{{"T", T},
                                      {"gram_discrepancy", discrepancy},
                                      {"relative_error", ctl.relative_error},
                                      {"control_norm", ctl.control_norm}});
}

const std::map<std::string, std::function<void(Run&)>>& commands() {
  static const std::map<std::string, std::function<void(Run&)>> table{
      {"modal", cmd_modal},         {"nodal", cmd_nodal},           {"propagate", cmd_propagate},
      {"residual", cmd_residual},   {"check-plan", cmd_check_plan}, {"constants", cmd_constants},
      {"probe", cmd_probe},         {"certify", cmd_certify},       {"reconstruct", cmd_reconstruct},
      {"control", cmd_control}};
  return table;
}

// ---- setup -----------------------------------------------------------------

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw memobs::ValidationError(fmt::format("--set '{}': expected key=value", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (value.is_structured()) throw memobs::ValidationError(fmt::format("--set {}: only scalar values", key));
  Json* node = &config;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw memobs::ValidationError(fmt::format("--set {}: empty path component", key));
    if (!node->is_object()) throw memobs::ValidationError(fmt::format("--set {}: '{}' is not an object", key, part));
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

Json run_metadata(const Run& run, int threads) {
  Json artifacts = Json::array();
  for (const std::string& a : run.artifacts) artifacts.push_back(a);
  Json timings = Json::object();
  for (const auto& [label, seconds] : run.timings) timings[label] = seconds;
  return Json{{"command", run.command},
              {"config_sha256", run.config_hash},
              {"config", run.config},
              {"versions", Json{{"memobs", kVersion},
                                {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                                      EIGEN_MINOR_VERSION)},
                                {"compiler", __VERSION__},
                                {"cxx", static_cast<long long>(__cplusplus)}}},
              {"artifacts", artifacts},
              {"runtime", Json{{"threads", threads}, {"timings", timings}}}};
}

int execute(const std::string& command, const std::string& config_path, std::optional<std::string> out_flag,
            int threads, const std::vector<std::string>& overrides) {
  const auto& table = commands();
  auto it = table.find(command);
  if (it == table.end()) throw memobs::ValidationError(fmt::format("unknown command '{}'", command));

  Json config = Json::parse(memobs::io::read_text(config_path), nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    throw memobs::ValidationError(fmt::format("{}: not a JSON object", config_path));
  }
  for (const std::string& o : overrides) apply_override(config, o);
  memobs::io::require_keys(config, {"basis", "kernel", "plan", "modal", "params", "output"}, "config");

  fs::path out;
  if (out_flag) {
    out = *out_flag;
  } else if (config.contains("output")) {
    if (!config["output"].is_string()) throw memobs::ValidationError("config.output: expected a path string");
    out = config["output"].get<std::string>();
  } else if (const char* env = std::getenv(kOutputEnv); env && *env) {
    out = env;
  } else {
    out = "memobs-out";
  }
  config.erase("output");
  if (config.contains("params") && !config["params"].is_object()) {
    throw memobs::ValidationError("params: expected an object");
  }

  Run run{command, config, memobs::io::sha256_hex(memobs::io::dump(config)), out, {}, {}};
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", out.string(), ec.message()));
  if (threads > 0) memobs::set_thread_count(threads);

  it->second(run);
  memobs::io::write_text(out / "run_metadata.json", memobs::io::dump(run_metadata(run, memobs::thread_count())));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling observability experiments for the heat equation with memory"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::string> out;
  int threads = 0;
  std::vector<std::string> overrides;
  for (const auto& [name, _] : commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment configuration")->required();
    sub->add_option("--out", out, fmt::format("output directory (default: ${} or ./memobs-out)", kOutputEnv));
    sub->add_option("--threads", threads, "OpenMP thread count")->check(CLI::PositiveNumber);
    sub->add_option("--set", overrides, "override a scalar config entry, e.g. params.t=0.5");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return execute(command, config_path, out, threads, overrides);
  } catch (const memobs::ValidationError& e) {
    std::cerr << "memobs " << command << ": invalid input: " << e.what() << "\n";
    return 1;
  } catch (const memobs::NumericalError& e) {
    std::cerr << "memobs " << command << ": numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "memobs " << command << ": " << e.what() << "\n";
    return 2;
  }
}
