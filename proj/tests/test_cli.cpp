#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nldg/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nldg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = nldg::parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int line_count(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nldg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ConvergeWritesCsv) {
  const fs::path out = dir_ / "t1.csv";
  const Result r = run({"converge", "--alpha", "0.5", "--delta", "0.2", "--k", "1", "--cells", "10,20",
                        "--dt", "1e-3", "--t-final", "0.1", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,delta,k,N,h,dt,T,e_u,order");
  EXPECT_EQ(line_count(csv), 3);
}

TEST_F(CliTest, IdenticalInvocationsAreByteIdentical) {
  const std::vector<std::string> base{"converge", "--alpha", "0.25,1.5", "--delta-mult", "3", "--k",
                                      "0,2", "--cells", "10,20", "--dt", "1e-3", "--t-final", "0.05"};
  const Result a = run(base);
  const Result b = run(base);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(line_count(a.out), 9);
}

TEST_F(CliTest, EnergyExampleParses) {
  const fs::path out = dir_ / "e.csv";
  // the documented example with a shorter horizon
  const Result r = run({"energy", "--alpha", "0.6667", "--delta-mult", "2", "--k", "5", "--cells", "80",
                        "--dt", "0.1", "--t-final", "2", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,time,E,rel_drift");
  EXPECT_EQ(line_count(csv), 21);
}

TEST_F(CliTest, LimitAndSolve) {
  const Result l = run({"limit", "--alpha", "1.5", "--delta", "0.02,0.01", "--k", "1", "--cells", "10",
                        "--dt", "0.05", "--t-final", "1"});
  ASSERT_EQ(l.code, 0) << l.err;
  EXPECT_EQ(l.out.substr(0, l.out.find('\n')), "alpha,k,h,dt,T,delta,linf_err,order");
  EXPECT_EQ(line_count(l.out), 3);

  const fs::path m = dir_ / "s.txt";
  const Result s = run({"solve", "--cells", "6", "--k", "1", "--delta", "0.2", "--dt", "0.1", "--t-final",
                        "0.5", "--dump-matrix", m.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out.substr(0, 4), "x,u\n");
  EXPECT_EQ(line_count(s.out), 1 + 6 * 4);
  const std::string dump = slurp(m);
  EXPECT_EQ(dump.substr(0, dump.find('\n')), "# nldg-matrix dim=12 band=2");
}

TEST_F(CliTest, SelftestPasses) {
  const Result r = run({"selftest"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, AlphaOutOfRangeIsUsageError) {
  const Result r = run({"converge", "--alpha", "3.5", "--cells", "10"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("0 < alpha < 3"), std::string::npos) << r.err;
  EXPECT_EQ(line_count(r.err), 1);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"converge", "--nope", "1"}).code, 2);
  EXPECT_EQ(run({"converge", "--dt", "abc"}).code, 2);
  EXPECT_EQ(run({"converge", "--delta", "0.1", "--delta-mult", "2"}).code, 2);
  EXPECT_EQ(run({"converge", "--variant", "sideways"}).code, 2);
  EXPECT_EQ(run({"converge", "--dt", "0.3", "--t-final", "1"}).code, 2);
  const Result band = run({"converge", "--delta", "0.6", "--cells", "4", "--k", "0"});
  EXPECT_EQ(band.code, 2);
  EXPECT_NE(band.err.find("N >="), std::string::npos) << band.err;
  EXPECT_EQ(run({"energy", "--cells", "10,20"}).code, 2);
}

TEST_F(CliTest, RuntimeFailureIsExitOne) {
  const Result r = run({"converge", "--alpha", "0.5", "--cells", "10", "--k", "0", "--dt", "0.01",
                        "--t-final", "0.02", "--out", (dir_ / "missing" / "x.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(line_count(r.err), 1);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  const fs::path cfg = dir_ / "run.ini";
  {
    std::ofstream f(cfg);
    f << "# recipe\n[converge]\nalpha = 1.5\ndelta_mult = 1\nk = 1\ncells = 10, 20\n"
      << "dt = 1e-3\nt-final = 0.05\n";
  }
  const Result a = run({"converge", "--config", cfg.string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("\n1.5,0.1,1,10,"), std::string::npos) << a.out;
  const Result b = run({"converge", "--config", cfg.string(), "--alpha", "0.5", "--delta", "0.05"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_NE(b.out.find("\n0.5,0.05,1,10,"), std::string::npos) << b.out;

  const fs::path bad = dir_ / "bad.ini";
  {
    std::ofstream f(bad);
    f << "colour = blue\n";
  }
  EXPECT_EQ(run({"converge", "--config", bad.string()}).code, 2);
  EXPECT_EQ(run({"converge", "--config", (dir_ / "none.ini").string()}).code, 2);
}

TEST_F(CliTest, HelpListsFlags) {
  const Result r = run({"converge", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--alpha", "--delta", "--delta-mult", "--k", "--cells", "--dt", "--t-final",
                           "--variant", "--squad-nodes", "--energy-stride", "--out", "--config", "--full"})
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
}

TEST(CliBinary, ExitCodes) {
  const std::string bin = NLDG_CLI_PATH;
  EXPECT_EQ(std::system((bin + " converge --alpha 3.5 > /dev/null 2>&1").c_str()) >> 8 & 0xff, 2);
  EXPECT_EQ(std::system((bin + " selftest > /dev/null 2>&1").c_str()) >> 8 & 0xff, 0);
}
