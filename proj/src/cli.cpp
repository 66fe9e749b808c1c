#include "capit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <ostream>

#include "capit/bench.hpp"
#include "capit/capit.hpp"
#include "capit/config.hpp"
#include "capit/csv.hpp"
#include "capit/model.hpp"
#include "capit/precision.hpp"
#include "capit/report.hpp"

namespace capit::cli {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidModel:
      return 1;
    case ErrorKind::InvalidInput:
    case ErrorKind::DataError:
      return 2;
    case ErrorKind::NumericalFailure:
    case ErrorKind::AllCoordinatesKilled:
    case ErrorKind::DegenerateInput:
      return 3;
  }
  return 3;
}

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> assignments;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "INI configuration file");
  cmd->add_option("--set", c.assignments, "override a configuration key, e.g. --set capit.gamma1=2");
}

config::Settings settings_from(const Common& c, const std::vector<std::pair<std::string, std::string>>& flags) {
  config::Settings s;
  if (!c.config_path.empty()) s.load_file(c.config_path);
  for (const std::string& a : c.assignments) s.set_flag(a);
  for (const auto& [k, v] : flags) {
    if (!v.empty()) s.set_flag(k, v);
  }
  return s;
}

std::string truth_json(const model::CanonicalPairModel& m) {
  nlohmann::json j;
  j["lambda"] = m.lambda;
  j["theta"] = std::vector<double>(m.theta.data(), m.theta.data() + m.theta.size());
  j["eta"] = std::vector<double>(m.eta.data(), m.eta.data() + m.eta.size());
  return j.dump(2) + "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse canonical correlation analysis by iterative thresholding", "capit"};
  app.require_subcommand(1);

  Common fit_c, sim_c, prec_c, bench_c, rate_c;
  std::string x_path, y_path, out_path, method, tuning, preset, replicates, out_x, out_y, out_truth;
  bool header = false;
  std::uint64_t data_seed = 1;

  CLI::App* fit = app.add_subcommand("fit", "fit one canonical pair from X.csv and Y.csv");
  add_common(fit, fit_c);
  fit->add_option("--x", x_path, "CSV of X, rows are samples")->required();
  fit->add_option("--y", y_path, "CSV of Y, rows are samples")->required();
  fit->add_flag("--header", header, "skip the first line of each CSV");
  fit->add_option("--precision", method, "tapering, toeplitz, thresholding or clime");
  fit->add_option("--out", out_path, "output JSON")->required();

  CLI::App* sim = app.add_subcommand("simulate", "draw 2n rows from a scenario model");
  add_common(sim, sim_c);
  sim->add_option("--seed", data_seed, "data seed");
  sim->add_option("--out-x", out_x, "output CSV for X")->required();
  sim->add_option("--out-y", out_y, "output CSV for Y")->required();
  sim->add_option("--out-truth", out_truth, "optional JSON with theta, eta, lambda");

  CLI::App* prec = app.add_subcommand("precision", "estimate a precision matrix from X.csv");
  add_common(prec, prec_c);
  prec->add_option("--x", x_path, "CSV of X")->required();
  prec->add_flag("--header", header, "skip the first line");
  prec->add_option("--precision", method, "tapering, toeplitz, thresholding or clime");
  prec->add_option("--tuning", tuning, "fixed tuning value or 'auto'");
  prec->add_option("--out", out_path, "output CSV")->required();

  CLI::App* bench_cmd = app.add_subcommand("benchmark", "replicated simulation study");
  add_common(bench_cmd, bench_c);
  bench_cmd->add_option("--preset", preset, "table1 or table2");
  bench_cmd->add_option("--replicates", replicates, "number of replicates");
  bench_cmd->add_option("--out", out_path, "output prefix for .json and .csv");

  CLI::App* rate = app.add_subcommand("rate-study", "squared loss against s (log p / n)^(1 - q/2)");
  add_common(rate, rate_c);
  rate->add_option("--replicates", replicates, "replicates per cell");
  rate->add_option("--out", out_path, "output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "capit: " << e.what() << "\n";
    for (CLI::App* sub : app.get_subcommands()) err << sub->help();
    return 1;
  }

  try {
    if (fit->parsed()) {
      const config::Settings s = settings_from(fit_c, {{"precision.method", method}});
      const model::PairedDataset data = io::load_paired_csv(x_path, y_path, header);
      const precision::PrecisionOptions popts = config::precision_from(s);
      const CcaEstimate est = capit_fit(data, popts, config::capit_from(s));
      io::write_atomic(out_path, report::estimate_json(est, precision::to_string(popts.method)));
      out << "lambda_hat " << est.lambda_hat << ", support sizes " << (est.alpha_hat.array() != 0.0).count() << " / "
          << (est.beta_hat.array() != 0.0).count() << "\n";
    } else if (sim->parsed()) {
      const config::Settings s = settings_from(sim_c, {});
      const model::ScenarioConfig sc = config::scenario_from(s);
      const model::CanonicalPairModel m = model::make_scenario_model(sc);
      const model::PairedDataset data = model::sample(m, 2 * sc.n, data_seed);
      io::write_csv_matrix(out_x, data.x);
      io::write_csv_matrix(out_y, data.y);
      if (!out_truth.empty()) io::write_atomic(out_truth, truth_json(m));
      out << "wrote " << data.n() << " rows\n";
    } else if (prec->parsed()) {
      const config::Settings s = settings_from(prec_c, {{"precision.method", method}, {"precision.tuning", tuning}});
      const Matrix x = io::read_csv_matrix(x_path, header);
      const precision::PrecisionEstimate est = precision::estimate_precision(x, config::precision_from(s));
      io::write_csv_matrix(out_path, est.omega);
      out << "method " << precision::to_string(est.method) << ", tuning " << est.tuning << ", pd repair "
          << (est.pd_repair_applied ? "applied" : "not needed") << "\n";
    } else if (bench_cmd->parsed()) {
      const config::Settings s = settings_from(
          bench_c, {{"benchmark.preset", preset}, {"benchmark.replicates", replicates}, {"benchmark.output", out_path}});
      const bench::BenchmarkSpec spec = config::benchmark_from(s);
      const bench::ReplicateReport rep = bench::run_benchmark(spec);
      if (!spec.output_path.empty()) report::write_report(rep, spec.output_path);
      for (const auto& [m, sum] : rep.summary) {
        out << bench::to_string(m) << ": median " << sum.median_loss << " (MAD " << sum.mad_loss << "), failed "
            << sum.failed << "\n";
      }
    } else if (rate->parsed()) {
      const config::Settings s = settings_from(rate_c, {{"rate.replicates", replicates}});
      const std::vector<bench::RateCell> cells = bench::rate_study(config::rate_from(s));
      io::write_atomic(out_path, report::rate_csv(cells));
      out << "wrote " << cells.size() << " cells\n";
    }
  } catch (const Error& e) {
    err << "capit: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "capit: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace capit::cli
