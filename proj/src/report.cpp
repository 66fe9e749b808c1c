#include "capit/report.hpp"

#include <cmath>
#include <json.hpp>

#include "capit/csv.hpp"

namespace capit::report {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json support_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) out.push_back(i);
  }
  return out;
}

const char* scenario_name(model::ScenarioId id) {
  switch (id) {
    case model::ScenarioId::ToeplitzCovariance:
      return "toeplitz";
    case model::ScenarioId::BandedPrecision:
      return "banded";
    case model::ScenarioId::Custom:
      return "identity";
  }
  return "unknown";
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

json spec_json(const bench::BenchmarkSpec& spec) {
  json s;
  s["scenario"] = {{"id", scenario_name(spec.scenario.scenario_id)},
                   {"p1", spec.scenario.p1},
                   {"p2", spec.scenario.p2},
                   {"n", spec.scenario.n},
                   {"rho", spec.scenario.rho},
                   {"lambda", spec.scenario.lambda},
                   {"support_x", spec.scenario.support_x},
                   {"support_y", spec.scenario.support_y}};
  json methods = json::array();
  for (bench::MethodId m : spec.methods) methods.push_back(bench::to_string(m));
  s["methods"] = methods;
  s["replicates"] = spec.replicates;
  s["base_seed"] = spec.base_seed;
  s["pmd_permutations"] = spec.pmd_permutations;
  s["pmd_tuning"] = "standardized gap against row-permutation null";
  s["record_timing"] = spec.record_timing;
  const CapitConfig& c = spec.capit_cfg;
  s["capit"] = {{"rule", to_string(c.rule.kind)},
                {"scad_a", c.rule.scad_a},
                {"gamma1", optional_json(c.gamma1)},
                {"gamma2", optional_json(c.gamma2)},
                {"t_const", optional_json(c.t_const)},
                {"max_iters", c.max_iters},
                {"tol", c.tol},
                {"swap_and_average", c.swap_and_average}};
  json settings = json::object();
  for (const auto& [m, ms] : spec.settings) {
    json one;
    one["c"] = optional_json(ms.c);
    one["t_const"] = optional_json(ms.t_const);
    one["precision_grid"] = ms.precision_grid;
    settings[bench::to_string(m)] = one;
  }
  s["settings"] = settings;
  return s;
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i) out += ';';
    out += flags[i];
  }
  return out;
}

}  // namespace

std::string report_json(const bench::ReplicateReport& report) {
  json j;
  j["spec"] = spec_json(report.spec);
  json rows = json::array();
  for (const bench::ReplicateRow& r : report.rows) {
    rows.push_back({{"replicate", r.replicate},
                    {"seed", r.seed},
                    {"method", bench::to_string(r.method)},
                    {"loss", number(r.loss)},
                    {"lambda_hat", number(r.lambda_hat)},
                    {"runtime_ms", r.runtime_ms},
                    {"flags", r.flags},
                    {"failed", r.failed}});
  }
  j["replicates"] = rows;
  json summary = json::object();
  for (const auto& [m, s] : report.summary) {
    summary[bench::to_string(m)] = {{"median_loss", number(s.median_loss)},
                                    {"mad_loss", number(s.mad_loss)},
                                    {"succeeded", s.succeeded},
                                    {"failed", s.failed}};
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

std::string report_csv(const bench::ReplicateReport& report) {
  std::string out = "seed,method,loss,lambda_hat,runtime_ms,flags\n";
  for (const bench::ReplicateRow& r : report.rows) {
    out += std::to_string(r.seed) + "," + bench::to_string(r.method) + "," +
           (r.failed ? std::string("nan") : io::format_double(r.loss)) + "," + io::format_double(r.lambda_hat) + "," +
           io::format_double(r.runtime_ms) + "," + join_flags(r.flags) + "\n";
  }
  return out;
}

void write_report(const bench::ReplicateReport& report, const std::string& prefix) {
  io::write_atomic(prefix + ".json", report_json(report));
  io::write_atomic(prefix + ".csv", report_csv(report));
}

std::string estimate_json(const CcaEstimate& est, const std::string& precision_method) {
  json j;
  j["precision_method"] = precision_method;
  j["alpha_hat"] = vector_json(est.alpha_hat);
  j["beta_hat"] = vector_json(est.beta_hat);
  j["support_alpha"] = support_json(est.alpha_hat);
  j["support_beta"] = support_json(est.beta_hat);
  j["lambda_hat"] = number(est.lambda_hat);
  j["iterations_run"] = est.iterations_run;
  j["halves_averaged"] = est.halves_averaged;
  j["flags"] = est.flags;
  json trace = json::array();
  for (const IterationTrace& t : est.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"alpha_support", t.alpha_support},
                     {"beta_support", t.beta_support},
                     {"alpha_change", t.alpha_change},
                     {"beta_change", t.beta_change}});
  }
  j["trace"] = trace;
  return j.dump(2) + "\n";
}

std::string rate_csv(const std::vector<bench::RateCell>& cells) {
  std::string out = "s,p,n,median_sq_loss,predictor,ratio,failed\n";
  for (const bench::RateCell& c : cells) {
    out += io::format_double(c.s) + "," + std::to_string(c.p) + "," + std::to_string(c.n) + "," +
           io::format_double(c.median_sq_loss) + "," + io::format_double(c.predictor) + "," +
           io::format_double(c.median_sq_loss / c.predictor) + "," + std::to_string(c.failed) + "\n";
  }
  return out;
}

}  // namespace capit::report
