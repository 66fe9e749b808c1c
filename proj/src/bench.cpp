#include "capit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "capit/baselines.hpp"
#include "capit/rng.hpp"

namespace capit::bench {

const char* to_string(MethodId m) {
  switch (m) {
    case MethodId::CapitToep:
      return "capit_toep";
    case MethodId::CapitTap:
      return "capit_tap";
    case MethodId::CapitThresh:
      return "capit_thresh";
    case MethodId::CapitClime:
      return "capit_clime";
    case MethodId::Pmd:
      return "pmd";
    case MethodId::Svd:
      return "svd";
  }
  return "unknown";
}

MethodId parse_method_id(const std::string& name) {
  for (MethodId m : {MethodId::CapitToep, MethodId::CapitTap, MethodId::CapitThresh, MethodId::CapitClime,
                     MethodId::Pmd, MethodId::Svd}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown benchmark method '" + name + "'");
}

void BenchmarkSpec::validate() const {
  if (replicates < 1) throw Error(ErrorKind::InvalidConfig, "benchmark: replicates must be at least 1");
  if (methods.empty()) throw Error(ErrorKind::InvalidConfig, "benchmark: no methods");
  if (scenario.n < 2) throw Error(ErrorKind::InvalidConfig, "benchmark: n must be at least 2");
  if (pmd_permutations < 2) throw Error(ErrorKind::InvalidConfig, "benchmark: pmd_permutations must be at least 2");
  capit_cfg.validate();
}

BenchmarkSpec table1_spec(Index p, Index n, int replicates) {
  BenchmarkSpec spec;
  spec.scenario.scenario_id = model::ScenarioId::ToeplitzCovariance;
  spec.scenario.p1 = spec.scenario.p2 = p;
  spec.scenario.n = n;
  spec.methods = {MethodId::CapitToep, MethodId::CapitTap, MethodId::CapitThresh, MethodId::Svd};
  spec.replicates = replicates;
  spec.settings[MethodId::CapitToep] = {2.0, 2.0, {}};
  spec.settings[MethodId::CapitTap] = {2.5, 2.5, {}};
  spec.settings[MethodId::CapitThresh] = {2.5, 2.5, {}};
  return spec;
}

BenchmarkSpec table2_spec(Index p, Index n, int replicates) {
  BenchmarkSpec spec;
  spec.scenario.scenario_id = model::ScenarioId::BandedPrecision;
  spec.scenario.p1 = spec.scenario.p2 = p;
  spec.scenario.n = n;
  spec.methods = {MethodId::CapitClime, MethodId::Pmd, MethodId::Svd};
  spec.replicates = replicates;
  spec.settings[MethodId::CapitClime] = {1.5, 1.5, {}};
  return spec;
}

std::pair<double, double> aggregate(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidInput, "aggregate: empty list");
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  const double med = median(values);
  for (double& v : values) v = std::abs(v - med);
  return {med, median(values)};
}

double pair_loss(const CcaEstimate& est, const model::CanonicalPairModel& truth) {
  return std::max(linalg::subspace_loss(est.alpha_hat, truth.theta), linalg::subspace_loss(est.beta_hat, truth.eta));
}

namespace {

precision::Method precision_for(MethodId m) {
  switch (m) {
    case MethodId::CapitToep:
      return precision::Method::Toeplitz;
    case MethodId::CapitTap:
      return precision::Method::Tapering;
    case MethodId::CapitThresh:
      return precision::Method::Thresholding;
    case MethodId::CapitClime:
      return precision::Method::Clime;
    default:
      break;
  }
  throw Error(ErrorKind::InvalidConfig, "benchmark: method has no precision estimator");
}

}  // namespace

CcaEstimate run_method(MethodId method, const model::PairedDataset& data, const BenchmarkSpec& spec,
                       std::uint64_t seed, Execution inner) {
  switch (method) {
    case MethodId::Svd:
      return baselines::classical_cca(data);
    case MethodId::Pmd:
      return baselines::pmd_fit(data, spec.pmd_permutations, seed, inner);
    default:
      break;
  }
  precision::PrecisionOptions popts;
  popts.method = precision_for(method);
  popts.exec = inner;
  CapitConfig cfg = spec.capit_cfg;
  cfg.seed = seed;
  const auto it = spec.settings.find(method);
  if (it != spec.settings.end()) {
    if (it->second.c) cfg.gamma1 = cfg.gamma2 = it->second.c;
    if (it->second.t_const) cfg.t_const = it->second.t_const;
    popts.grid = it->second.precision_grid;
  }
  return capit_fit(data, popts, cfg);
}

std::map<MethodId, MethodSummary> summarize(const std::vector<ReplicateRow>& rows) {
  std::map<MethodId, std::vector<double>> losses;
  std::map<MethodId, MethodSummary> out;
  for (const ReplicateRow& r : rows) {
    MethodSummary& s = out[r.method];
    if (r.failed) {
      ++s.failed;
    } else {
      ++s.succeeded;
      losses[r.method].push_back(r.loss);
    }
  }
  for (auto& [m, s] : out) {
    if (s.succeeded > 0) {
      std::tie(s.median_loss, s.mad_loss) = aggregate(losses[m]);
    } else {
      s.median_loss = s.mad_loss = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

namespace {

std::vector<ReplicateRow> run_replicate(const BenchmarkSpec& spec, const model::CanonicalPairModel& truth,
                                        const model::GaussianSampler& sampler, std::uint64_t seed) {
  const model::PairedDataset data = sampler.draw(2 * spec.scenario.n, seed);
  std::vector<ReplicateRow> rows(spec.methods.size());
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    ReplicateRow& row = rows[m];
    row.seed = seed;
    row.method = spec.methods[m];
    const auto start = std::chrono::steady_clock::now();
    try {
      const CcaEstimate est = run_method(row.method, data, spec, derive_seed(seed, m + 1), Execution::Serial);
      row.loss = pair_loss(est, truth);
      row.lambda_hat = est.lambda_hat;
      row.flags = est.flags;
    } catch (const Error& e) {
      row.failed = true;
      row.loss = std::numeric_limits<double>::quiet_NaN();
      row.flags.push_back(std::string("failed:") + capit::to_string(e.kind()));
    }
    if (spec.record_timing) {
      row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  }
  return rows;
}

}  // namespace

std::vector<ReplicateRow> replay_replicate(const BenchmarkSpec& spec, std::uint64_t seed) {
  spec.validate();
  const model::CanonicalPairModel truth = model::make_scenario_model(spec.scenario);
  return run_replicate(spec, truth, model::GaussianSampler(truth), seed);
}

ReplicateReport run_benchmark(const BenchmarkSpec& spec, Execution exec) {
  spec.validate();
  const model::CanonicalPairModel truth = model::make_scenario_model(spec.scenario);
  const model::GaussianSampler sampler(truth);
  const std::size_t k = spec.methods.size();
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(spec.replicates) * k);

  for_each_index(spec.replicates, exec, [&](long r) {
    const std::uint64_t seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(r));
    std::vector<ReplicateRow> mine = run_replicate(spec, truth, sampler, seed);
    for (std::size_t m = 0; m < k; ++m) {
      mine[m].replicate = static_cast<int>(r);
      rows[static_cast<std::size_t>(r) * k + m] = std::move(mine[m]);
    }
  });

  ReplicateReport report;
  report.spec = spec;
  report.rows = std::move(rows);
  report.summary = summarize(report.rows);
  return report;
}

std::vector<RateCell> rate_study(const RateStudyConfig& cfg, Execution exec) {
  if (cfg.p_grid.empty() || cfg.n_grid.empty() || cfg.s_grid.empty()) {
    throw Error(ErrorKind::InvalidConfig, "rate_study: empty grid");
  }
  if (!(cfg.q >= 0.0 && cfg.q <= 2.0)) throw Error(ErrorKind::InvalidConfig, "rate_study: q outside [0, 2]");
  if (cfg.replicates < 1) throw Error(ErrorKind::InvalidConfig, "rate_study: replicates must be at least 1");

  struct CellSpec {
    double s;
    Index p;
    Index n;
  };
  std::vector<CellSpec> cells;
  for (double s : cfg.s_grid) {
    for (Index p : cfg.p_grid) {
      for (Index n : cfg.n_grid) cells.push_back({s, p, n});
    }
  }
  std::vector<RateCell> out(cells.size());
  const std::size_t total = cells.size() * static_cast<std::size_t>(cfg.replicates);
  std::vector<double> sq(total, std::numeric_limits<double>::quiet_NaN());

  // one model per cell; directions from a per-cell seed
  std::vector<model::CanonicalPairModel> models(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const CellSpec& cs = cells[c];
    const Matrix eye = Matrix::Identity(cs.p, cs.p);
    const std::uint64_t cell_seed = derive_seed(cfg.seed, c);
    models[c].sigma1 = eye;
    models[c].sigma2 = eye;
    models[c].theta = model::weak_lq_direction(cs.p, cs.s, cfg.q, eye, derive_seed(cell_seed, 0));
    models[c].eta = model::weak_lq_direction(cs.p, cs.s, cfg.q, eye, derive_seed(cell_seed, 1));
    models[c].lambda = cfg.lambda;
    model::validate_model(models[c]);
  }

  CapitConfig ccfg;
  ccfg.gamma1 = ccfg.gamma2 = cfg.c;
  ccfg.t_const = cfg.t_const;
  precision::PrecisionOptions popts;
  popts.method = precision::Method::Oracle;
  popts.exec = Execution::Serial;

  for_each_index(static_cast<long>(total), exec, [&](long idx) {
    const std::size_t c = static_cast<std::size_t>(idx) / static_cast<std::size_t>(cfg.replicates);
    const std::size_t r = static_cast<std::size_t>(idx) % static_cast<std::size_t>(cfg.replicates);
    const model::CanonicalPairModel& m = models[c];
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, c), r + 2);
    const model::PairedDataset data = model::sample(m, 2 * cells[c].n, seed);
    const std::pair<Matrix, Matrix> oracle{m.sigma1, m.sigma2};  // identity is its own inverse
    try {
      const double loss = pair_loss(capit_fit(data, popts, ccfg, &oracle), m);
      sq[static_cast<std::size_t>(idx)] = loss * loss;
    } catch (const Error&) {
    }
  });

  for (std::size_t c = 0; c < cells.size(); ++c) {
    RateCell& cell = out[c];
    cell.s = cells[c].s;
    cell.p = cells[c].p;
    cell.n = cells[c].n;
    cell.predictor = cell.s * std::pow(std::log(static_cast<double>(cell.p)) / static_cast<double>(cell.n), 1.0 - cfg.q / 2.0);
    std::vector<double> ok;
    for (int r = 0; r < cfg.replicates; ++r) {
      const double v = sq[c * static_cast<std::size_t>(cfg.replicates) + static_cast<std::size_t>(r)];
      if (std::isnan(v)) {
        ++cell.failed;
      } else {
        ok.push_back(v);
      }
    }
    cell.median_sq_loss = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : aggregate(ok).first;
  }
  return out;
}

}  // namespace capit::bench
