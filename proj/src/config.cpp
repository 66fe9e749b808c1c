#include "capit/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <sstream>

#include "capit/errors.hpp"

namespace capit::config {

namespace {

std::vector<KeySpec> build_schema() {
  using V = ValueType;
  std::vector<KeySpec> s = {
      {"scenario.id", V::Text, "toeplitz", "toeplitz (sigma_ij = rho^|i-j|), banded (banded precision) or identity"},
      {"scenario.p1", V::Integer, "200", "dimension of X"},
      {"scenario.p2", V::Integer, "200", "dimension of Y"},
      {"scenario.n", V::Integer, "750", "per-half sample size; simulations draw 2n rows"},
      {"scenario.rho", V::Real, "0.3", "Toeplitz decay"},
      {"scenario.lambda", V::Real, "0.9", "canonical correlation"},
      {"scenario.support_x", V::IntegerList, "0,5,10,15,20", "zero-based support of theta"},
      {"scenario.support_y", V::IntegerList, "0,5,10,15,20", "zero-based support of eta"},
      {"precision.method", V::Text, "toeplitz", "tapering, toeplitz, thresholding, clime or oracle"},
      {"precision.tuning", V::RealOrAuto, "auto", "fixed bandwidth, cutoff or CLIME lambda; auto cross-validates"},
      {"precision.grid", V::RealList, "", "cross-validation grid; empty uses the method default"},
      {"capit.rule", V::Text, "hard", "hard, soft or scad"},
      {"capit.scad_a", V::Real, "3.7", "SCAD shape parameter (> 2)"},
      {"capit.gamma1", V::RealOrAuto, "2", "c in gamma1 = c sqrt(log p / n); auto uses the data-driven level"},
      {"capit.gamma2", V::RealOrAuto, "2", "c in gamma2 = c sqrt(log p / n); auto uses the data-driven level"},
      {"capit.t_const", V::RealOrAuto, "2", "constant initialization level t_ij; auto uses data-driven t_ij"},
      {"capit.max_iters", V::Integer, "20", "maximum number of iterations K"},
      {"capit.tol", V::Real, "1e-06", "stop when both successive subspace losses are below this"},
      {"capit.swap_and_average", V::Boolean, "true", "fit both half assignments and average"},
      {"capit.seed", V::Integer, "0", "seed for cross-validation splits"},
      {"benchmark.preset", V::Text, "none", "none, table1 or table2; other benchmark keys override the preset"},
      {"benchmark.methods", V::Text, "", "comma list of capit_toep, capit_tap, capit_thresh, capit_clime, pmd, svd"},
      {"benchmark.replicates", V::Integer, "100", "number of replicates"},
      {"benchmark.base_seed", V::Integer, "20240101", "replicate r uses derive_seed(base_seed, r)"},
      {"benchmark.pmd_permutations", V::Integer, "25", "permutations for PMD tuning"},
      {"benchmark.record_timing", V::Boolean, "false", "record wall time per method (breaks bit-identical reruns)"},
      {"benchmark.output", V::Text, "", "output prefix; writes <prefix>.json and <prefix>.csv"},
      {"rate.p_grid", V::IntegerList, "100,200", "dimensions"},
      {"rate.n_grid", V::IntegerList, "500,1000,2000", "per-half sample sizes"},
      {"rate.s_grid", V::RealList, "3,5", "weak l_q radii"},
      {"rate.q", V::Real, "0", "q in [0, 2]"},
      {"rate.replicates", V::Integer, "30", "replicates per cell"},
      {"rate.seed", V::Integer, "7", "base seed"},
      {"rate.lambda", V::Real, "0.9", "canonical correlation"},
      {"rate.c", V::Real, "1.5", "gamma constant"},
      {"rate.t_const", V::Real, "1", "initialization level"},
  };
  for (const char* m : {"capit_toep", "capit_tap", "capit_thresh", "capit_clime"}) {
    const std::string name(m);
    s.push_back({"methods." + name + "_c", V::RealOrAuto, "", "gamma constant for " + name + " (unset: capit.gamma1/2)"});
    s.push_back({"methods." + name + "_t_const", V::RealOrAuto, "", "t constant for " + name + " (unset: capit.t_const)"});
    s.push_back({"methods." + name + "_grid", V::RealList, "", "precision CV grid for " + name});
  }
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_int(const std::string& v, std::int64_t& out) {
  const std::string t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return !t.empty() && res.ec == std::errc() && res.ptr == t.data() + t.size();
}

bool parse_real(const std::string& v, double& out) {
  const std::string t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return !t.empty() && res.ec == std::errc() && res.ptr == t.data() + t.size() && std::isfinite(out);
}

bool parse_bool(const std::string& v, bool& out) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") {
    out = true;
    return true;
  }
  if (t == "false" || t == "0" || t == "no" || t == "off") {
    out = false;
    return true;
  }
  return false;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::InvalidConfig, "config: " + key + " = '" + value + "' is not " + expected);
}

const KeySpec& require_key(const std::string& key) {
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw Error(ErrorKind::InvalidConfig, "config: unknown key '" + key + "'");
  return *spec;
}

}  // namespace

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = build_schema();
  return s;
}

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& k : schema()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

void check_value(const KeySpec& spec, const std::string& value) {
  std::int64_t i = 0;
  double r = 0.0;
  bool b = false;
  switch (spec.type) {
    case ValueType::Integer:
      if (!parse_int(value, i)) bad(spec.key, value, "an integer");
      break;
    case ValueType::Real:
      if (!parse_real(value, r)) bad(spec.key, value, "a finite number");
      break;
    case ValueType::RealOrAuto:
      if (trim(value) != "auto" && !parse_real(value, r)) bad(spec.key, value, "a number or 'auto'");
      break;
    case ValueType::Boolean:
      if (!parse_bool(value, b)) bad(spec.key, value, "a boolean");
      break;
    case ValueType::Text:
      break;
    case ValueType::IntegerList:
      for (const std::string& item : split_list(value)) {
        if (!parse_int(item, i)) bad(spec.key, value, "a comma list of integers");
      }
      break;
    case ValueType::RealList:
      for (const std::string& item : split_list(value)) {
        if (!parse_real(item, r)) bad(spec.key, value, "a comma list of numbers");
      }
      break;
  }
}

void Settings::load_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorKind::InvalidConfig, "config: key '" + section + "' must sit inside a [section]");
    }
    for (const auto& [name, leaf] : body) {
      const std::string key = section + "." + name;
      const std::string value = trim(leaf.data());
      check_value(require_key(key), value);
      file_[key] = value;
    }
  }
}

void Settings::set_flag(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "config: expected key=value, got '" + assignment + "'");
  set_flag(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Settings::set_flag(const std::string& key, const std::string& value) {
  check_value(require_key(key), value);
  flags_[key] = value;
}

std::optional<std::string> Settings::raw(const std::string& key) const {
  const KeySpec& spec = require_key(key);
  if (auto it = flags_.find(key); it != flags_.end()) return it->second;
  if (auto it = file_.find(key); it != file_.end()) return it->second;
  if (!spec.default_value.empty()) return spec.default_value;
  return std::nullopt;
}

std::string Settings::source(const std::string& key) const {
  const KeySpec& spec = require_key(key);
  if (flags_.count(key)) return "flag";
  if (file_.count(key)) return "file";
  return spec.default_value.empty() ? "unset" : "default";
}

std::int64_t Settings::integer(const std::string& key) const {
  std::int64_t v = 0;
  const auto r = raw(key);
  if (!r || !parse_int(*r, v)) bad(key, r.value_or(""), "an integer");
  return v;
}

double Settings::real(const std::string& key) const {
  double v = 0.0;
  const auto r = raw(key);
  if (!r || !parse_real(*r, v)) bad(key, r.value_or(""), "a finite number");
  return v;
}

std::optional<double> Settings::real_or_auto(const std::string& key) const {
  const auto r = raw(key);
  if (!r || trim(*r) == "auto") return std::nullopt;
  double v = 0.0;
  if (!parse_real(*r, v)) bad(key, *r, "a number or 'auto'");
  return v;
}

bool Settings::boolean(const std::string& key) const {
  bool v = false;
  const auto r = raw(key);
  if (!r || !parse_bool(*r, v)) bad(key, r.value_or(""), "a boolean");
  return v;
}

std::string Settings::text(const std::string& key) const { return trim(raw(key).value_or("")); }

std::vector<std::int64_t> Settings::integer_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const std::string& item : split_list(raw(key).value_or(""))) {
    std::int64_t v = 0;
    if (!parse_int(item, v)) bad(key, item, "an integer");
    out.push_back(v);
  }
  return out;
}

std::vector<double> Settings::real_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_list(raw(key).value_or(""))) {
    double v = 0.0;
    if (!parse_real(item, v)) bad(key, item, "a number");
    out.push_back(v);
  }
  return out;
}

namespace {

model::ScenarioId parse_scenario_id(const std::string& name) {
  if (name == "toeplitz") return model::ScenarioId::ToeplitzCovariance;
  if (name == "banded") return model::ScenarioId::BandedPrecision;
  if (name == "identity") return model::ScenarioId::Custom;
  throw Error(ErrorKind::InvalidConfig, "config: unknown scenario.id '" + name + "'");
}

std::vector<Index> to_index(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

bool explicit_key(const Settings& s, const std::string& key) {
  const std::string src = s.source(key);
  return src == "flag" || src == "file";
}

}  // namespace

model::ScenarioConfig scenario_from(const Settings& s) {
  model::ScenarioConfig c;
  c.scenario_id = parse_scenario_id(s.text("scenario.id"));
  c.p1 = s.integer("scenario.p1");
  c.p2 = s.integer("scenario.p2");
  c.n = s.integer("scenario.n");
  c.rho = s.real("scenario.rho");
  c.lambda = s.real("scenario.lambda");
  c.support_x = to_index(s.integer_list("scenario.support_x"));
  c.support_y = to_index(s.integer_list("scenario.support_y"));
  return c;
}

CapitConfig capit_from(const Settings& s) {
  CapitConfig c;
  c.rule.kind = parse_threshold_kind(s.text("capit.rule"));
  c.rule.scad_a = s.real("capit.scad_a");
  c.gamma1 = s.real_or_auto("capit.gamma1");
  c.gamma2 = s.real_or_auto("capit.gamma2");
  c.t_const = s.real_or_auto("capit.t_const");
  c.max_iters = static_cast<int>(s.integer("capit.max_iters"));
  c.tol = s.real("capit.tol");
  c.swap_and_average = s.boolean("capit.swap_and_average");
  c.seed = static_cast<std::uint64_t>(s.integer("capit.seed"));
  c.validate();
  return c;
}

precision::PrecisionOptions precision_from(const Settings& s) {
  precision::PrecisionOptions o;
  o.method = precision::parse_method(s.text("precision.method"));
  o.tuning = s.real_or_auto("precision.tuning");
  o.grid = s.real_list("precision.grid");
  o.cv_seed = static_cast<std::uint64_t>(s.integer("capit.seed"));
  return o;
}

bench::BenchmarkSpec benchmark_from(const Settings& s) {
  const std::string preset = s.text("benchmark.preset");
  bench::BenchmarkSpec spec;
  if (preset == "table1") {
    spec = bench::table1_spec();
  } else if (preset == "table2") {
    spec = bench::table2_spec();
  } else if (preset != "none") {
    throw Error(ErrorKind::InvalidConfig, "config: unknown benchmark.preset '" + preset + "'");
  }
  if (preset == "none" || explicit_key(s, "scenario.id")) spec.scenario.scenario_id = parse_scenario_id(s.text("scenario.id"));
  if (preset == "none" || explicit_key(s, "scenario.p1")) spec.scenario.p1 = s.integer("scenario.p1");
  if (preset == "none" || explicit_key(s, "scenario.p2")) spec.scenario.p2 = s.integer("scenario.p2");
  if (preset == "none" || explicit_key(s, "scenario.n")) spec.scenario.n = s.integer("scenario.n");
  if (preset == "none" || explicit_key(s, "scenario.rho")) spec.scenario.rho = s.real("scenario.rho");
  if (preset == "none" || explicit_key(s, "scenario.lambda")) spec.scenario.lambda = s.real("scenario.lambda");
  if (preset == "none" || explicit_key(s, "scenario.support_x")) spec.scenario.support_x = to_index(s.integer_list("scenario.support_x"));
  if (preset == "none" || explicit_key(s, "scenario.support_y")) spec.scenario.support_y = to_index(s.integer_list("scenario.support_y"));

  if (preset == "none" || explicit_key(s, "benchmark.methods")) {
    spec.methods.clear();
    for (const std::string& m : split_list(s.text("benchmark.methods"))) spec.methods.push_back(bench::parse_method_id(m));
  }
  if (preset == "none" || explicit_key(s, "benchmark.replicates")) spec.replicates = static_cast<int>(s.integer("benchmark.replicates"));
  spec.base_seed = static_cast<std::uint64_t>(s.integer("benchmark.base_seed"));
  spec.pmd_permutations = static_cast<int>(s.integer("benchmark.pmd_permutations"));
  spec.record_timing = s.boolean("benchmark.record_timing");
  spec.output_path = s.text("benchmark.output");
  spec.capit_cfg = capit_from(s);

  for (const char* m : {"capit_toep", "capit_tap", "capit_thresh", "capit_clime"}) {
    const std::string name(m);
    const bench::MethodId id = bench::parse_method_id(name);
    bench::MethodSettings& ms = spec.settings[id];
    if (s.raw("methods." + name + "_c")) ms.c = s.real_or_auto("methods." + name + "_c");
    if (s.raw("methods." + name + "_t_const")) ms.t_const = s.real_or_auto("methods." + name + "_t_const");
    if (s.raw("methods." + name + "_grid")) ms.precision_grid = s.real_list("methods." + name + "_grid");
  }
  spec.validate();
  return spec;
}

bench::RateStudyConfig rate_from(const Settings& s) {
  bench::RateStudyConfig c;
  c.p_grid = to_index(s.integer_list("rate.p_grid"));
  c.n_grid = to_index(s.integer_list("rate.n_grid"));
  c.s_grid = s.real_list("rate.s_grid");
  c.q = s.real("rate.q");
  c.replicates = static_cast<int>(s.integer("rate.replicates"));
  c.seed = static_cast<std::uint64_t>(s.integer("rate.seed"));
  c.lambda = s.real("rate.lambda");
  c.c = s.real("rate.c");
  c.t_const = s.real("rate.t_const");
  return c;
}

}  // namespace capit::config
