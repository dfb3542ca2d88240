#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  const fs::path dir = fs::path(::testing::TempDir()) / "adjwald_cli_test";
  fs::create_directories(dir);
  return dir;
}

RunResult run(const std::string& args) {
  static int counter = 0;
  const fs::path dir = scratch_dir();
  const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = std::string("cd '") + ADJWALD_SOURCE_DIR + "' && '" + ADJWALD_CLI + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << content;
  return p;
}

nlohmann::json run_json(const std::string& args) {
  const RunResult r = run(args + " --format json");
  EXPECT_EQ(r.code, 0) << r.err;
  return nlohmann::json::parse(r.out);
}

}  // namespace

TEST(Cli, HelpListsEveryConfigurationSection) {
  const RunResult r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"[model]", "[inference]", "[bootstrap]", "[simulate]", "[run]", "[output]", "--psi0"})
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
}

TEST(Cli, MalformedRowIsADataErrorNamingTheRow) {
  const fs::path csv = write_file("bad.csv", "x,y\n1,2\n2,4\n3,abc\n4,8\n");
  const RunResult r = run("fit --data '" + csv.string() + "' --response y --formula x");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("column 'y'"), std::string::npos) << r.err;
}

TEST(Cli, UnknownConfigurationKeyIsAConfigError) {
  const fs::path ini = write_file("unknown.ini", "[model]\ntype = glm\nfamly = gamma-log\n");
  const RunResult r = run("fit --config '" + ini.string() + "'");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("model.famly"), std::string::npos) << r.err;
}

TEST(Cli, UnknownFamilyIsAConfigError) {
  const RunResult r = run("fit --config configs/clotting.ini --family gamma-inverse");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("gamma-inverse"), std::string::npos) << r.err;
}

TEST(Cli, RankDeficientDesignIsAModelError) {
  const RunResult r = run("fit --config configs/clotting.ini --formula 'log(u), log(u)'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("rank"), std::string::npos) << r.err;
}

TEST(Cli, BetaResponseOnTheBoundaryIsADataError) {
  const fs::path csv = write_file("edge.csv", "y,x\n0.2,1\n0.4,2\n1,3\n0.5,4\n0.3,5\n");
  const RunResult r = run("fit --model beta --data '" + csv.string() + "' --response y --mean-formula x "
                          "--precision-formula ''");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
}

TEST(Cli, JsonOutputCarriesTheSchemaVersion) {
  const auto j = run_json("fit --config configs/clotting.ini");
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["command"], "fit");
  const auto& est = j["tables"]["estimates"];
  ASSERT_EQ(est.size(), 10u);
  EXPECT_NEAR(est[0]["estimate"].get<double>(), 5.503, 5e-4);
  EXPECT_NEAR(est[1]["estimate"].get<double>(), -0.602, 5e-4);
  EXPECT_NEAR(est[4]["estimate"].get<double>(), 0.017, 5e-4);
  EXPECT_NEAR(j["tables"]["summary"][0]["dispersion_pearson"].get<double>(), 0.024, 5e-4);
}

TEST(Cli, CsvOutputHasMetadataHeader) {
  const RunResult r = run("wald --config configs/clotting.ini");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# schema_version=1\n# command=wald\n", 0), 0u);
  EXPECT_NE(r.out.find("parameter,psi0,statistic,value,p_value,estimate,se,flag\n"), std::string::npos);
  EXPECT_EQ(r.out.find("seconds"), std::string::npos);
  const RunResult timed = run("wald --config configs/clotting.ini --timing true");
  EXPECT_NE(timed.out.find(",seconds"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfigurationFile) {
  const fs::path ini = write_file("psi.ini",
                                  "[model]\ndata = data/clotting.csv\nfamily = gamma-log\nresponse = time\n"
                                  "formula = log(u)\n[inference]\npsi0 = 1\nstatistics = t\n");
  const auto from_file = run_json("wald --config '" + ini.string() + "'");
  const auto overridden = run_json("wald --config '" + ini.string() + "' --psi0 0");
  EXPECT_EQ(from_file["tables"]["wald"][0]["psi0"], 1.0);
  EXPECT_EQ(overridden["tables"]["wald"][0]["psi0"], 0.0);
}

TEST(Cli, GaussianFitIsLeastSquares) {
  const fs::path csv = write_file("line.csv", "x,y\n0,1.1\n1,2.9\n2,5.2\n3,6.8\n4,9.1\n");
  const auto j = run_json("fit --data '" + csv.string() + "' --response y --formula x --estimators ml");
  // Slope and intercept of the least-squares line through the five points.
  const double sx = 10, sy = 25.1, sxx = 30, sxy = 0 * 1.1 + 1 * 2.9 + 2 * 5.2 + 3 * 6.8 + 4 * 9.1, n = 5;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  EXPECT_NEAR(j["tables"]["estimates"][0]["estimate"].get<double>(), intercept, 1e-8);
  EXPECT_NEAR(j["tables"]["estimates"][1]["estimate"].get<double>(), slope, 1e-8);
}

TEST(Cli, ProportionCompareModeReportsBothMethods) {
  const auto j = run_json("proportion --n 20 --k 3 --method both --coverage-points 11");
  const auto& iv = j["tables"]["intervals"];
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_EQ(iv[0]["method"], "la-wald");
  EXPECT_EQ(iv[1]["method"], "agresti-coull");
  for (const auto& row : iv) EXPECT_LT(row["lower"].get<double>(), 0.15);
  EXPECT_EQ(j["tables"]["coverage"].size(), 22u);
}

TEST(Cli, NullAtTheEstimateGivesZeroStatistics) {
  const auto fit = run_json("fit --config configs/clotting.ini --estimators ml");
  std::string psi0;
  for (int j = 0; j < 4; ++j) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", fit["tables"]["estimates"][j]["estimate"].get<double>());
    psi0 += (j ? "," : "") + std::string(buf);
  }
  const auto w = run_json("wald --config configs/clotting.ini --statistics t --parameters 1,2,3,4 --psi0 " + psi0);
  for (const auto& row : w["tables"]["wald"]) EXPECT_NEAR(row["value"].get<double>(), 0.0, 1e-7);
}

TEST(Cli, ExtremeLevelOnATinyGridIsFlagged) {
  const auto j = run_json("ci --config configs/clotting.ini --statistics t_star --parameters 4 --levels 0.9999 "
                          "--grid-half-width 0.5 --grid-widenings 0");
  const auto& rows = j["tables"]["intervals"];
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NE(rows[0]["flag"].get<std::string>().find("GridTooNarrow"), std::string::npos);
}

TEST(Cli, RepeatedRunsAreByteIdenticalAndThreadInvariant) {
  const std::string args = "simulate --config configs/clotting.ini --replicates 200 --seed 12 --sim-levels 0.9,0.95";
  const RunResult a = run(args + " --threads 1");
  const RunResult b = run(args + " --threads 1");
  const RunResult c = run(args + " --threads 3");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
}

TEST(Cli, BatchModeFlagsSeparatedGroups) {
  const auto j = run_json("wald --config configs/voxels.ini --statistics t,t_tilde_star");
  const auto& rows = j["tables"]["wald"];
  ASSERT_EQ(rows.size(), 60u);
  int diverged = 0;
  for (const auto& row : rows) {
    if (row["flag"].is_string() && row["flag"].get<std::string>() == "DivergedEstimate") {
      ++diverged;
      EXPECT_EQ(row["value"].get<double>(), 0.0);
    }
    if (row["statistic"] == "t_tilde_star") {
      EXPECT_TRUE(row["value"].is_number());
    }
  }
  EXPECT_GT(diverged, 0);
}
