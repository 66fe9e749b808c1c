#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capit/capit.hpp"
#include "capit/model.hpp"
#include "capit/parallel.hpp"
#include "capit/precision.hpp"

namespace capit::bench {

enum class MethodId { CapitToep, CapitTap, CapitThresh, CapitClime, Pmd, Svd };

const char* to_string(MethodId m);
/// Accepts the names printed by to_string ("capit_toep", ..., "pmd", "svd").
MethodId parse_method_id(const std::string& name);

/// Per-method CAPIT settings. Unset entries fall back to BenchmarkSpec::capit_cfg.
struct MethodSettings {
  std::optional<double> c;        // gamma constant, both sides
  std::optional<double> t_const;
  std::vector<double> precision_grid;  // empty: default grid
};

struct BenchmarkSpec {
  model::ScenarioConfig scenario;
  std::vector<MethodId> methods;
  int replicates = 100;
  std::uint64_t base_seed = 20240101;
  CapitConfig capit_cfg;
  std::map<MethodId, MethodSettings> settings;
  int pmd_permutations = 25;
  bool record_timing = false;
  std::string output_path;  // prefix; empty = no files

  /// Throws InvalidConfig when replicates < 1 or methods is empty.
  void validate() const;
};

/// Table 1 row protocol: Scenario I, three CAPIT variants and SVD.
BenchmarkSpec table1_spec(Index p = 200, Index n = 750, int replicates = 100);
/// Table 2 row protocol: Scenario II, CAPIT+CLIME, PMD and SVD.
BenchmarkSpec table2_spec(Index p = 200, Index n = 750, int replicates = 100);

struct ReplicateRow {
  int replicate = 0;
  std::uint64_t seed = 0;
  MethodId method = MethodId::Svd;
  double loss = 0.0;  // NaN when failed
  double lambda_hat = 0.0;
  double runtime_ms = 0.0;
  std::vector<std::string> flags;
  bool failed = false;
};

struct MethodSummary {
  double median_loss = 0.0;
  double mad_loss = 0.0;
  int succeeded = 0;
  int failed = 0;
};

struct ReplicateReport {
  BenchmarkSpec spec;
  std::vector<ReplicateRow> rows;  // replicate-major, methods in spec order
  std::map<MethodId, MethodSummary> summary;
};

/// Median (midpoint of the middle two for even sizes) and unscaled MAD.
std::pair<double, double> aggregate(std::vector<double> values);

/// max(L(alpha, theta), L(beta, eta)).
double pair_loss(const CcaEstimate& est, const model::CanonicalPairModel& truth);

/// One method on one dataset; exceptions propagate.
CcaEstimate run_method(MethodId method, const model::PairedDataset& data, const BenchmarkSpec& spec,
                       std::uint64_t seed, Execution inner);

/// Data of replicate r is drawn from derive_seed(base_seed, r) with 2n rows.
/// Replicates run in parallel under `exec`; each method call is serial inside.
ReplicateReport run_benchmark(const BenchmarkSpec& spec, Execution exec = Execution::Parallel);

/// Reruns the replicate whose data seed is `seed` (as recorded in a report row).
/// Rows come back in spec method order with replicate = 0.
std::vector<ReplicateRow> replay_replicate(const BenchmarkSpec& spec, std::uint64_t seed);

/// Rebuilds the per-method summaries from the rows.
std::map<MethodId, MethodSummary> summarize(const std::vector<ReplicateRow>& rows);

struct RateCell {
  double s = 0.0;
  Index p = 0;
  Index n = 0;
  double median_sq_loss = 0.0;
  double predictor = 0.0;  // s (log p / n)^(1 - q/2)
  int failed = 0;
};

struct RateStudyConfig {
  std::vector<Index> p_grid{100, 200};
  std::vector<Index> n_grid{500, 1000, 2000};
  std::vector<double> s_grid{3, 5};
  double q = 0.0;
  int replicates = 30;
  std::uint64_t seed = 7;
  double lambda = 0.9;
  double c = 1.5;        // gamma constant
  double t_const = 1.0;  // initialization level
};

/// Identity covariances, weak-l_q directions and oracle precision. n is the
/// per-half size, as in the benchmark.
std::vector<RateCell> rate_study(const RateStudyConfig& cfg, Execution exec = Execution::Parallel);

}  // namespace capit::bench
