#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "qtoc/cli.hpp"

using namespace qtoc;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "qtoc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("qtoc_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Csv, FormatsTwelveSignificantDigits) {
  EXPECT_EQ(io::format_number(M_PI), "3.14159265359");
  EXPECT_EQ(io::format_number(1e-20), "1e-20");
  EXPECT_EQ(io::format_number(2.0), "2");
}

TEST(Csv, RoundTrip) {
  io::Table t{{"a", "b"}, {}};
  t.add({1.25, -3e-7});
  t.add({M_PI, 0.0});
  const auto back = io::parse_csv(io::to_csv(t));
  EXPECT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), 2u);
  EXPECT_EQ(back.rows[0][1], -3e-7);
  EXPECT_NEAR(back.rows[1][0], M_PI, 1e-11);
  EXPECT_THROW(t.add({1.0}), ValidationError);
}

TEST(Csv, RejectsBadFields) {
  EXPECT_THROW(io::parse_csv("a,b\n1,x\n"), ValidationError);
  EXPECT_THROW(io::parse_csv("a,b\n1\n"), ValidationError);
  EXPECT_THROW(io::parse_csv(""), ValidationError);
}

TEST(PulseCsv, RoundTripOfBangSequence) {
  const BangSequence b{0.5, 3.0, {1.0, 2.25}, {Bang::Plus, Bang::Minus, Bang::Plus}};
  const auto pc = io::parse_pulse(io::to_csv(io::pulse_table(Protocol{b})), 0.5);
  EXPECT_EQ(pc.edges, (std::vector<double>{0.0, 1.0, 2.25, 3.0}));
  EXPECT_EQ(pc.values, (std::vector<double>{0.5, -0.5, 0.5}));
  EXPECT_FALSE(io::is_uniform(pc));
}

TEST(PulseCsv, ValidationErrors) {
  EXPECT_THROW(io::parse_pulse("time,u\n0,0\n1,0\n", 1.0), ValidationError);
  EXPECT_THROW(io::parse_pulse("t,u\n0.1,0\n1,0\n", 1.0), ValidationError);
  EXPECT_THROW(io::parse_pulse("t,u\n0,0\n1,0\n1,0\n", 1.0), ValidationError);
  EXPECT_THROW(io::parse_pulse("t,u\n0,0.6\n1,0.6\n", 0.5), ValidationError);
  EXPECT_THROW(io::parse_pulse("t,u\n0,0.1\n", 0.5), ValidationError);
  EXPECT_NO_THROW(io::parse_pulse("t,u\n0,0.6\n1,0.6\n", 0.0));
}

TEST(Cli, UnknownFlagIsValidationExit) {
  EXPECT_EQ(invoke({"xgate", "--bogus"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
}

TEST(Cli, VersionFlag) {
  const auto r = invoke({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(cli::kVersion), std::string::npos);
}

TEST(Cli, XGateWritesManifestListingEveryOutput) {
  const auto dir = scratch("xgate");
  const auto r = invoke({"--out", dir.string(), "xgate", "--umax", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::json::parse(r.out);
  EXPECT_NEAR(j["omega_eff"].get<double>(), 2.0435, 0.005 * 2.0435);
  const auto manifest = io::json::parse(io::read_text((dir / "run.json").string()));
  EXPECT_EQ(manifest["subcommand"], "xgate");
  std::set<std::string> listed;
  for (const auto& f : manifest["outputs"]) listed.insert(f.get<std::string>());
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() != "run.json") {
      EXPECT_TRUE(listed.count(e.path().filename().string())) << e.path();
    }
  for (const auto& f : listed) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

TEST(Cli, SweepIsByteReproducible) {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::vector<std::string> args{"sweep", "--kind", "rabi", "--u-from", "0.05", "--u-to", "0.5", "--points", "6"};
  auto with = [&](const fs::path& d) {
    std::vector<std::string> v{"--out", d.string(), "--jobs", "2"};
    v.insert(v.end(), args.begin(), args.end());
    return invoke(v);
  };
  ASSERT_EQ(with(a).code, 0);
  ASSERT_EQ(with(b).code, 0);
  EXPECT_EQ(io::read_text((a / "sweep.csv").string()), io::read_text((b / "sweep.csv").string()));
}

TEST(Cli, VerifyRejectsPulseAboveBound) {
  const auto dir = scratch("verify_bad");
  fs::create_directories(dir);
  io::write_text((dir / "p.csv").string(), "t,u\n0,0.9\n1,0.9\n");
  const auto r = invoke({"--out", dir.string(), "verify", "--pulse", (dir / "p.csv").string(), "--umax", "0.5"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, VerifyOfRabiPulseFlagsSuboptimality) {
  const auto dir = scratch("verify_rabi");
  fs::create_directories(dir);
  const ModelParams p{2.0, 0.5};
  io::write_csv((dir / "rabi.csv").string(), io::pulse_table(Protocol{rabi_protocol(p)}, 200.0));
  const auto r = invoke({"--out", dir.string(), "verify", "--pulse", (dir / "rabi.csv").string(), "--umax", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = io::json::parse(r.out);
  EXPECT_LT(j["report"]["sign_fraction"].get<double>(), 1.0);
  EXPECT_FALSE(j["report"]["passes"].get<bool>());
}

TEST(Cli, UnreachableStatePrepIsOptimizationExit) {
  const auto dir = scratch("sp_fail");
  const auto r = invoke({"--out", dir.string(), "state-prep", "--umax", "0.5", "--tmax", "0.05"});
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  ::setenv(cli::kOutputDirEnv, dir.string().c_str(), 1);
  const auto r = invoke({"sweep", "--kind", "rabi", "--points", "2"});
  ::unsetenv(cli::kOutputDirEnv);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "run.json"));
}

TEST(Cli, ConfigFileSuppliesOptionsAndFlagsWin) {
  const auto dir = scratch("config");
  fs::create_directories(dir);
  io::write_text((dir / "c.toml").string(), "[sweep]\nkind = \"rabi\"\npoints = 3\nu-from = 0.1\nu-to = 0.3\n");
  const auto r = invoke({"--out", dir.string(), "--config", (dir / "c.toml").string(), "sweep", "--points", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = io::parse_csv(io::read_text((dir / "sweep.csv").string()));
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_NEAR(t.rows.front()[0], 0.1, 1e-12);
  EXPECT_NEAR(t.rows.back()[0], 0.3, 1e-12);
}

TEST(Cli, ParseObjective) {
  EXPECT_EQ(cli::parse_objective("smooth").w_power, 0.0);
  EXPECT_EQ(cli::parse_objective("power").w_smooth, 0.0);
  EXPECT_EQ(cli::parse_objective("mixed:0.3").w_power, 0.3);
  EXPECT_THROW(cli::parse_objective("mixed:x"), ValidationError);
}
