#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "capit/capit.hpp"
#include "capit/cli.hpp"
#include "capit/config.hpp"
#include "capit/csv.hpp"
#include "capit/model.hpp"
#include "capit/report.hpp"
#include "capit/rng.hpp"

using namespace capit;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / (std::string("capit_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }
  int cli(const std::vector<std::string>& args) {
    out.str("");
    err.str("");
    return cli::run(args, out, err);
  }

  fs::path dir;
  std::ostringstream out;
  std::ostringstream err;
};

using Csv = TempDir;
using Config = TempDir;
using Cli = TempDir;

}  // namespace

TEST_F(Csv, PairedShapes) {
  const std::string x = write("x.csv", "1,2\n3,4\n5,6\n");
  const std::string y = write("y.csv", "1,2,3,4\n5,6,7,8\n\n9,10,11,1.5e-3\n");
  const model::PairedDataset d = io::load_paired_csv(x, y, false);
  EXPECT_EQ(d.n(), 3);
  EXPECT_EQ(d.p1(), 2);
  EXPECT_EQ(d.p2(), 4);
  EXPECT_EQ(d.y(2, 3), 1.5e-3);
}

TEST_F(Csv, HeaderSkipped) {
  const Matrix m = io::read_csv_matrix(write("h.csv", "a,b\n1,2\n"), true);
  EXPECT_EQ(m.rows(), 1);
  EXPECT_EQ(m(0, 1), 2.0);
}

TEST_F(Csv, BadCellsNameTheLine) {
  for (const std::string& bad : {std::string("1,2\n3,NaN\n"), std::string("1,2\n3,x\n"), std::string("1,2\n3\n"),
                                 std::string("1,2\n3,inf\n")}) {
    try {
      io::read_csv_matrix(write("bad.csv", bad), false);
      FAIL() << bad;
    } catch (const DataError& e) {
      EXPECT_EQ(e.line(), 2) << bad;
      EXPECT_EQ(e.kind(), ErrorKind::DataError);
    }
  }
}

TEST_F(Csv, RowMismatchNamesBothCounts) {
  const std::string x = write("x.csv", "1\n2\n3\n");
  const std::string y = write("y.csv", "1\n2\n");
  try {
    io::load_paired_csv(x, y, false);
    FAIL();
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find('3'), std::string::npos) << what;
    EXPECT_NE(what.find('2'), std::string::npos) << what;
  }
}

TEST_F(Csv, RoundTripIsExact) {
  CounterRng rng(1);
  Matrix m(7, 3);
  for (Index i = 0; i < m.size(); ++i) m(i) = rng.normal() * std::pow(10.0, static_cast<double>(i % 9) - 4.0);
  io::write_csv_matrix(path("m.csv"), m);
  EXPECT_EQ(io::read_csv_matrix(path("m.csv"), false), m);
  EXPECT_FALSE(fs::exists(path("m.csv.tmp")));
}

TEST_F(Config, PrecedenceFlagFileDefault) {
  const std::string file = write("c.ini", "[capit]\ngamma1 = 3\nmax_iters = 7\n[scenario]\np1 = 40\n");
  config::Settings s;
  s.load_file(file);
  s.set_flag("capit.gamma1=4");
  EXPECT_EQ(s.source("capit.gamma1"), "flag");
  EXPECT_EQ(s.real_or_auto("capit.gamma1"), 4.0);
  EXPECT_EQ(s.source("capit.max_iters"), "file");
  EXPECT_EQ(s.integer("capit.max_iters"), 7);
  EXPECT_EQ(s.source("capit.tol"), "default");
  EXPECT_EQ(s.real("capit.tol"), 1e-6);
  EXPECT_EQ(s.source("benchmark.output"), "unset");

  const CapitConfig c = config::capit_from(s);
  EXPECT_EQ(c.gamma1, 4.0);
  EXPECT_EQ(c.gamma2, 2.0);
  EXPECT_EQ(c.max_iters, 7);
  EXPECT_EQ(config::scenario_from(s).p1, 40);
}

TEST_F(Config, EveryKeyPrecedence) {
  for (const config::KeySpec& k : config::schema()) {
    if (k.default_value.empty()) continue;
    config::Settings s;
    EXPECT_EQ(s.source(k.key), "default") << k.key;
    EXPECT_EQ(*s.raw(k.key), k.default_value) << k.key;
    s.load_file(write("one.ini", "[" + k.key.substr(0, k.key.find('.')) + "]\n" + k.key.substr(k.key.find('.') + 1) +
                                     " = " + k.default_value + "\n"));
    EXPECT_EQ(s.source(k.key), "file") << k.key;
    s.set_flag(k.key, k.default_value);
    EXPECT_EQ(s.source(k.key), "flag") << k.key;
  }
}

TEST_F(Config, RejectsUnknownKeysAndBadValues) {
  config::Settings s;
  try {
    s.load_file(write("u.ini", "[capit]\ngama1 = 2\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
  EXPECT_THROW(s.set_flag("capit.max_iters=two"), Error);
  EXPECT_THROW(s.set_flag("nonsense"), Error);
  EXPECT_NO_THROW(s.set_flag("capit.gamma1=auto"));
  EXPECT_FALSE(config::capit_from(s).gamma1.has_value());
}

TEST_F(Config, BenchmarkPresetOverridden) {
  config::Settings s;
  s.set_flag("benchmark.preset=table2");
  s.set_flag("benchmark.replicates=3");
  const bench::BenchmarkSpec spec = config::benchmark_from(s);
  EXPECT_EQ(spec.replicates, 3);
  EXPECT_EQ(spec.scenario.scenario_id, model::ScenarioId::BandedPrecision);
  EXPECT_EQ(spec.settings.at(bench::MethodId::CapitClime).c, 1.5);
}

TEST(ConfigSchema, DocumentListsEveryKey) {
  std::ifstream in(std::string(CAPIT_SOURCE_DIR) + "/docs/config_schema.md");
  ASSERT_TRUE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string doc = buf.str();
  for (const config::KeySpec& k : config::schema()) {
    EXPECT_NE(doc.find("`" + k.key + "`"), std::string::npos) << k.key;
  }
}

TEST_F(Config, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(std::string(CAPIT_SOURCE_DIR) + "/configs")) {
    config::Settings s;
    EXPECT_NO_THROW({
      s.load_file(entry.path().string());
      if (s.source("benchmark.preset") == "file") config::benchmark_from(s);
      config::capit_from(s);
      config::rate_from(s);
    }) << entry.path();
  }
}

TEST(Report, JsonShapeAndNullLosses) {
  bench::ReplicateReport r;
  r.spec = bench::table1_spec(10, 20, 1);
  bench::ReplicateRow row;
  row.method = bench::MethodId::CapitTap;
  row.loss = std::nan("");
  row.failed = true;
  row.flags = {"a", "b"};
  r.rows.push_back(row);
  r.summary = bench::summarize(r.rows);
  const nlohmann::json j = nlohmann::json::parse(report::report_json(r));
  EXPECT_TRUE(j.contains("spec"));
  EXPECT_TRUE(j["replicates"].is_array());
  EXPECT_TRUE(j["replicates"][0]["loss"].is_null());
  EXPECT_EQ(j["summary"]["capit_tap"]["failed"], 1);
  const std::string csv = report::report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "seed,method,loss,lambda_hat,runtime_ms,flags");
  EXPECT_NE(csv.find("a;b"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({}), 1);
  EXPECT_EQ(cli({"frobnicate"}), 1);
  EXPECT_EQ(cli({"fit", "--x", "a.csv"}), 1);
  EXPECT_EQ(cli({"benchmark", "--set", "capit.gama1=2"}), 1);

  write("x.csv", "1,2\n3,4\n5,6\n");
  write("y.csv", "1\n2\n");
  EXPECT_EQ(cli({"fit", "--x", path("x.csv"), "--y", path("y.csv"), "--out", path("e.json")}), 2);
  EXPECT_NE(err.str().find("3 rows"), std::string::npos) << err.str();
  EXPECT_NE(err.str().find("2"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("e.json")));

  EXPECT_EQ(cli({"precision", "--x", path("missing.csv"), "--out", path("o.csv")}), 2);

  EXPECT_EQ(cli({"simulate", "--set", "scenario.p1=25", "--set", "scenario.p2=25", "--set", "scenario.n=60", "--out-x",
                 path("sx.csv"), "--out-y", path("sy.csv")}),
            0);
  EXPECT_EQ(cli({"fit", "--x", path("sx.csv"), "--y", path("sy.csv"), "--set", "capit.gamma1=1000", "--out",
                 path("k.json")}),
            3);

  EXPECT_EQ(cli::exit_code_for(ErrorKind::InvalidModel), 1);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::DataError), 2);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::DegenerateInput), 3);
}

TEST_F(Cli, SimulateFitRoundTrip) {
  ASSERT_EQ(cli({"simulate", "--set", "scenario.p1=40", "--set", "scenario.p2=30", "--set", "scenario.n=300", "--seed",
                 "5", "--out-x", path("x.csv"), "--out-y", path("y.csv"), "--out-truth", path("t.json")}),
            0);
  ASSERT_EQ(cli({"fit", "--x", path("x.csv"), "--y", path("y.csv"), "--precision", "tapering", "--out",
                 path("e.json")}),
            0);
  std::ifstream in(path("e.json"));
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j["alpha_hat"].size(), 40u);
  EXPECT_EQ(j["beta_hat"].size(), 30u);
  EXPECT_TRUE(j["halves_averaged"].get<bool>());

  // reloaded data gives the same fit as the in-memory draw
  model::ScenarioConfig sc;
  sc.p1 = 40;
  sc.p2 = 30;
  sc.n = 300;
  const model::PairedDataset mem = model::sample(model::make_scenario_model(sc), 600, 5);
  const model::PairedDataset disk = io::load_paired_csv(path("x.csv"), path("y.csv"), false);
  EXPECT_EQ(mem.x, disk.x);
  EXPECT_EQ(mem.y, disk.y);
  precision::PrecisionOptions popts;
  popts.method = precision::Method::Tapering;
  const CcaEstimate a = capit_fit(mem, popts, CapitConfig{});
  const CcaEstimate b = capit_fit(disk, popts, CapitConfig{});
  EXPECT_EQ(a.alpha_hat, b.alpha_hat);
  EXPECT_EQ(a.beta_hat, b.beta_hat);
  for (Index i = 0; i < 40; ++i) EXPECT_EQ(j["alpha_hat"][static_cast<std::size_t>(i)].get<double>(), a.alpha_hat(i));
}

TEST_F(Cli, PrecisionAndBenchmarkOutputs) {
  ASSERT_EQ(cli({"simulate", "--set", "scenario.p1=25", "--set", "scenario.p2=25", "--set", "scenario.n=50", "--out-x",
                 path("x.csv"), "--out-y", path("y.csv")}),
            0);
  ASSERT_EQ(cli({"precision", "--x", path("x.csv"), "--precision", "toeplitz", "--tuning", "3", "--out",
                 path("o.csv")}),
            0);
  EXPECT_EQ(io::read_csv_matrix(path("o.csv"), false).rows(), 25);

  ASSERT_EQ(cli({"benchmark", "--preset", "table1", "--replicates", "2", "--set", "scenario.p1=25", "--set",
                 "scenario.p2=25", "--set", "scenario.n=80", "--out", path("rep")}),
            0)
      << err.str();
  EXPECT_TRUE(fs::exists(path("rep.json")));
  EXPECT_TRUE(fs::exists(path("rep.csv")));
  EXPECT_NE(out.str().find("capit_toep"), std::string::npos);

  ASSERT_EQ(cli({"rate-study", "--replicates", "2", "--set", "rate.p_grid=20", "--set", "rate.n_grid=200,400", "--set",
                 "rate.s_grid=2", "--out", path("rate.csv")}),
            0)
      << err.str();
  EXPECT_EQ(io::read_csv_matrix(path("rate.csv"), true).rows(), 2);
}
