#include <clocksync/io.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using clocksync::io::Json;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(CLOCKSYNC_BIN) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("clocksync_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateSingleFault) {
  const CliRun r = run("simulate 4 --faults \"(2,0):2\" --T 1");
  ASSERT_EQ(r.code, 0);
  const Json doc = Json::parse(r.out);
  for (const auto& m : doc.at("measurements")) {
    const bool faulty = m.at("i") == 2 && m.at("j") == 0;
    EXPECT_EQ(m.at("offset"), faulty ? "2" : "0");
  }
}

TEST_F(Cli, SimulateFiveNodeSystem) {
  const CliRun r = run("simulate 5 --faults \"(1,0):1,(4,1):-1\"");
  ASSERT_EQ(r.code, 0);
  const auto file = clocksync::io::parse_measurement_file(Json::parse(r.out));
  EXPECT_EQ(file.measurements.at(clocksync::Session(1, 0)), clocksync::Rational(1));
  EXPECT_EQ(file.measurements.at(clocksync::Session(4, 1)), clocksync::Rational(-1));
  EXPECT_EQ(file.measurements.at(clocksync::Session(3, 2)), clocksync::Rational(0));
}

TEST_F(Cli, SimulateIsDeterministic) {
  const CliRun a = run("simulate 6 --random-K 2 --seed 7 --truth " + path("t1.json"));
  const CliRun b = run("simulate 6 --random-K 2 --seed 7 --truth " + path("t2.json"));
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  std::ifstream f1(path("t1.json")), f2(path("t2.json"));
  const std::string s1((std::istreambuf_iterator<char>(f1)), {}), s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_FALSE(s1.empty());
  EXPECT_EQ(s1, s2);
  EXPECT_NE(run("simulate 6 --random-K 2 --seed 8").out, a.out);
}

TEST_F(Cli, RoundTripWithTruth) {
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string s = std::to_string(seed);
    const CliRun sim = run("simulate 6 --random-K 2 --seed " + s + " --T 3/2 --truth " + path("t.json") + " -o " + path("m.json"));
    ASSERT_EQ(sim.code, 0);
    const CliRun rec = run("recover " + path("m.json") + " --truth " + path("t.json"));
    ASSERT_EQ(rec.code, 0);
    const Json doc = Json::parse(rec.out);
    EXPECT_EQ(doc.at("verdict").at("kind"), "CorrectRecovery");
    EXPECT_EQ(doc.at("result").at("k_used"), 2);
  }
}

TEST_F(Cli, WrongRecoveryIsReportedNotFatal) {
  ASSERT_EQ(run("simulate 4 --faults \"(1,0):2,(2,0):2\" --truth " + path("t.json") + " -o " + path("m.json")).code, 0);
  const CliRun rec = run("recover " + path("m.json") + " --truth " + path("t.json"));
  EXPECT_EQ(rec.code, 0);
  EXPECT_EQ(Json::parse(rec.out).at("verdict").at("kind"), "WrongRecovery");
  const CliRun table = run("recover " + path("m.json") + " --format table");
  EXPECT_EQ(table.code, 0);
  EXPECT_NE(table.out.find("fault (3,0)"), std::string::npos);
}

TEST_F(Cli, BoundReport) {
  const CliRun r = run("bound 5");
  ASSERT_EQ(r.code, 0);
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc.at("report").at("lower_bound"), 1);
  EXPECT_EQ(doc.at("report").at("tolerance_percent"), 10);
  EXPECT_FALSE(doc.at("report").contains("runtime_seconds"));
  EXPECT_EQ(run("bound 5 --jobs 3").out, r.out);
  EXPECT_EQ(run("bound 5 --mode exhaustive").code, 0);
}

TEST_F(Cli, BoundTable) {
  const CliRun r = run("bound 7 --from 4 --format table");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lower bound of faults    |   1   1   2   2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("lower bound of tolerance |  17  10  13  10"), std::string::npos) << r.out;
}

TEST_F(Cli, BoundCapAndBudget) {
  const CliRun capped = run("bound 8 --max-K 1");
  ASSERT_EQ(capped.code, 0);
  EXPECT_EQ(Json::parse(capped.out).at("report").at("capped"), true);
  const CliRun partial = run("bound 11 --budget 0.001");
  EXPECT_EQ(partial.code, 4);
  EXPECT_EQ(Json::parse(partial.out).at("complete"), false);
}

TEST_F(Cli, Counterexample) {
  const CliRun r = run("counterexample 4 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(Json::parse(r.out).at("counterexample").at("evidence").at("kind"), "Infinite");
  EXPECT_EQ(run("counterexample 4 2").code, 2);
}

TEST_F(Cli, ValidationErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("bound").code, 2);
  EXPECT_EQ(run("bound 2").code, 2);
  EXPECT_EQ(run("bound 13").code, 2);
  EXPECT_EQ(run("bound 5 --mode fast").code, 2);
  EXPECT_EQ(run("simulate 4 --faults \"(2,2):1\"").code, 2);
  EXPECT_EQ(run("simulate 4 --faults \"(5,0):1\"").code, 2);
  EXPECT_EQ(run("simulate 4 --faults \"(1,0):0\"").code, 2);
  EXPECT_EQ(run("simulate 4 --random-K 2").code, 2);
  EXPECT_EQ(run("recover " + path("missing.json")).code, 2);
  write("bad.json", "{\"n\":3,\"measurements\":[{\"i\":1,\"j\":0,\"offset\":0.5}]}");
  EXPECT_EQ(run("recover " + path("bad.json")).code, 2);
  write("junk.json", "not json");
  EXPECT_EQ(run("recover " + path("junk.json")).code, 2);
}
