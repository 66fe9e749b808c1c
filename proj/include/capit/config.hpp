#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capit/bench.hpp"
#include "capit/capit.hpp"
#include "capit/model.hpp"
#include "capit/precision.hpp"

namespace capit::config {

enum class ValueType { Integer, Real, RealOrAuto, Boolean, Text, IntegerList, RealList };

struct KeySpec {
  std::string key;  // section.name
  ValueType type;
  std::string default_value;  // empty: unset
  std::string description;
};

/// Every accepted key; docs/config_schema.md mirrors this table.
const std::vector<KeySpec>& schema();
const KeySpec* find_key(const std::string& key);

/// Layered key/value settings. Lookup order: flag, file, schema default.
class Settings {
 public:
  /// INI file with [section] headers; every key must be in the schema and
  /// its value must parse as the declared type. Throws InvalidConfig.
  void load_file(const std::string& path);
  /// "section.name=value" from the command line.
  void set_flag(const std::string& assignment);
  void set_flag(const std::string& key, const std::string& value);

  /// Winning raw value, or nullopt when no layer sets the key.
  std::optional<std::string> raw(const std::string& key) const;
  /// "flag", "file", "default" or "unset".
  std::string source(const std::string& key) const;

  std::int64_t integer(const std::string& key) const;
  double real(const std::string& key) const;
  /// Empty for "auto".
  std::optional<double> real_or_auto(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::vector<std::int64_t> integer_list(const std::string& key) const;
  std::vector<double> real_list(const std::string& key) const;

 private:
  std::map<std::string, std::string> file_;
  std::map<std::string, std::string> flags_;
};

/// Validates `value` against the declared type; throws InvalidConfig.
void check_value(const KeySpec& spec, const std::string& value);

model::ScenarioConfig scenario_from(const Settings& s);
CapitConfig capit_from(const Settings& s);
precision::PrecisionOptions precision_from(const Settings& s);
/// benchmark.preset selects table1/table2 defaults; other keys override them.
bench::BenchmarkSpec benchmark_from(const Settings& s);
bench::RateStudyConfig rate_from(const Settings& s);

}  // namespace capit::config
