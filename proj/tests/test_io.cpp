#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>

#include "test_util.hpp"

namespace steer {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("steer_test_" + name)).string();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

TEST(Io, InlineFamilies) {
  const auto spec = parse_state_spec("werner:p=0.3");
  const auto& f = std::get<FamilySpec>(spec.value);
  EXPECT_EQ(f.name, "werner");
  EXPECT_EQ(f.params.at("p"), 0.3);
  EXPECT_LE((realize(parse_state_spec("tstate:t1=-0.5,t2=-0.4,t3=-0.3")).theta() -
             tstate(Vec3(-0.5, -0.4, -0.3)).theta()).norm(), 1e-15);
  EXPECT_LE((realize(parse_state_spec("bell:index=3")).rho() - bell_state(3).rho()).norm(), 1e-15);
}

TEST(Io, JsonSpecs) {
  const auto a = realize(parse_state_spec(R"({"family": "werner", "p": 0.6})"));
  const auto b = realize(parse_state_spec(R"({"format": 1, "family": "werner", "params": {"p": 0.6}})"));
  EXPECT_EQ(a.theta(), b.theta());
  const auto t = realize(parse_state_spec(
      R"({"theta": [[1,0,0,0],[0,-0.6,0,0],[0,0,-0.6,0],[0,0,0,-0.6]]})"));
  EXPECT_LE((t.theta() - a.theta()).norm(), 1e-14);
}

TEST(Io, ParseErrors) {
  EXPECT_EQ(kind_of([] { parse_state_spec("werner:p=abc"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_state_spec("werner:p"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { realize(parse_state_spec("werner:q=0.3")); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { realize(parse_state_spec(R"({"family": "ghz", "p": 1})")); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_state_spec(R"({"theta": [[1,0,0,0]]})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_state_spec(R"({"format": 2, "family": "werner", "p": 0.1})"); }),
            ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_state_spec("/nonexistent/state.json"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { realize(parse_state_spec("tstate:t1=0.9,t2=0.8,t3=0.7")); }),
            ErrorKind::NotPositive);
  try {
    parse_state_spec("{\"family\": \"werner\",\n \"p\": }");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("<inline>:2"), std::string::npos) << e.what();
  }
}

TEST(Io, DenseThetaDenseRoundTrip) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto s = test::random_state(rng);
    const StateSpec dense{s.rho()};
    const auto back = realize(state_spec_from_json(json::parse(to_json(dense).dump())));
    const StateSpec theta{back.theta()};
    const auto again = realize(state_spec_from_json(json::parse(to_json(theta).dump())));
    EXPECT_LE((again.rho() - s.rho()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Io, MeasureFileRoundTripIsBitwise) {
  const auto m = jevtic_measure(TStateForm::diagonal(Vec3(0.9, -0.5, 0.3)), 512);
  for (const std::string name : {"m.txt", "m.json"}) {
    const std::string path = temp_path(name);
    save_measure(m, path);
    const auto back = load_measure(path);
    ASSERT_EQ(back.size(), m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(back.atoms[i].weight, m.atoms[i].weight);
      EXPECT_EQ(back.atoms[i].n, m.atoms[i].n);
    }
    EXPECT_TRUE(back.symmetric);
    std::filesystem::remove(path);
  }
}

TEST(Io, MeasureParseErrors) {
  try {
    measure_from_text("0.5 0 0 1\n0.5 0 0\n", "f.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("f.txt:2"), std::string::npos);
  }
  EXPECT_EQ(kind_of([] { measure_from_text("0.5 0 zero 1\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { measure_from_json(json::parse(R"({"atoms": [[1, 0, 0]]})")); }),
            ErrorKind::Parse);
}

TEST(Commands, AnalyzeExitCodes) {
  const auto low = cmd_analyze(parse_state_spec("werner:p=0.3"));
  EXPECT_EQ(low.exit_code, kExitUnsteerable);
  EXPECT_EQ(low.report["result"]["verdict"], "unsteerable");
  EXPECT_NEAR(low.report["result"]["value"].get<double>(), 1.0 / 0.6, 1e-6);
  EXPECT_EQ(low.report["format"], 1);

  const auto high = cmd_analyze(parse_state_spec("werner:p=0.8"));
  EXPECT_EQ(high.exit_code, kExitSteerable);
  EXPECT_NEAR(high.report["result"]["value"].get<double>(), 0.625, 1e-6);

  const auto mid = cmd_analyze(parse_state_spec("werner:p=0.5"));
  EXPECT_EQ(mid.exit_code, kExitInconclusive);
  EXPECT_EQ(mid.report["result"]["verdict"], "marginal");

  const auto mixed = cmd_analyze(StateSpec{CMat4(CMat4::Identity() / 4.0)});
  EXPECT_EQ(mixed.exit_code, kExitUnsteerable);
  EXPECT_EQ(mixed.report["result"]["method"], "degenerate_separable");
  EXPECT_TRUE(mixed.report["result"]["value"].is_null());
}

TEST(Commands, Radius) {
  const auto spec = parse_state_spec("werner:p=0.4");
  const auto jev = cmd_radius(spec);
  EXPECT_NEAR(jev.report["result"]["value"].get<double>(), 1.25, 0.0125);
  EXPECT_TRUE(jev.report["result"]["direction"].is_array());
  RadiusFlags flat;
  flat.ansatz = "grid:2";
  EXPECT_NEAR(cmd_radius(spec, flat).report["result"]["value"].get<double>(), 0.0, 1e-12);
  RadiusFlags bad;
  bad.ansatz = "grid:x";
  EXPECT_EQ(kind_of([&] { cmd_radius(spec, bad); }), ErrorKind::Parse);
}

TEST(Commands, RadiusFromMeasureFile) {
  const auto spec = parse_state_spec("werner:p=0.4");
  const auto map = epr_map(realize(spec));
  const std::string path = temp_path("radius.txt");
  save_measure(jevtic_measure(canonicalize_tstate(map), 1024), path);
  RadiusFlags flags;
  flags.ansatz = "file:" + path;
  const double from_file = cmd_radius(spec, flags).report["result"]["value"].get<double>();
  RadiusFlags direct;
  direct.grid = 1024;
  EXPECT_EQ(from_file, cmd_radius(spec, direct).report["result"]["value"].get<double>());
  std::filesystem::remove(path);
}

TEST(Commands, OptimizeIsByteReproducible) {
  const auto spec = parse_state_spec("tstate:t1=0.5,t2=-0.4,t3=0.3");
  OptimizeFlags flags;
  flags.optimizer.grid = 128;
  flags.optimizer.iters = 15;
  flags.optimizer.seed = 42;
  const std::string a = temp_path("opt_a.txt"), b = temp_path("opt_b.txt");
  flags.measure_out = a;
  const auto ra = cmd_optimize(spec, flags);
  flags.measure_out = b;
  const auto rb = cmd_optimize(spec, flags);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_EQ(ra.report["result"].dump(), rb.report["result"].dump());
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Commands, SimulateZeroShotsAndEscape) {
  SimulateFlags flags;
  flags.shots = 0;
  const auto empty = cmd_simulate(parse_state_spec("werner:p=0.4"), flags);
  EXPECT_EQ(empty.exit_code, kExitOk);
  EXPECT_TRUE(empty.report["report"]["measurements"].empty());
  EXPECT_FALSE(empty.report["report"].contains("max_abs_z"));

  SimulateFlags steer;
  steer.ansatz = "uniform";
  steer.grid = 512;
  steer.shots = 1000;
  const auto out = cmd_simulate(parse_state_spec("werner:p=0.8"), steer);
  EXPECT_EQ(out.exit_code, kExitOutsideBox);
  EXPECT_EQ(out.report["error"]["kind"], "OutcomeOutsideBox");
}

TEST(Commands, SimulateSmall) {
  SimulateFlags flags;
  flags.grid = 512;
  flags.measurements = "random:3";
  flags.shots = 20000;
  const auto out = cmd_simulate(parse_state_spec("werner:p=0.4"), flags);
  EXPECT_EQ(out.exit_code, kExitOk);
  EXPECT_LE(out.report["max_decomposition_residual"].get<double>(), 1e-9);
  EXPECT_EQ(out.report["report"]["measurements"].size(), 3u);
  EXPECT_EQ(kind_of([] { parse_measurements("random:x", 1); }), ErrorKind::Parse);
}

TEST(Commands, ScanCrossesAtHalf) {
  ScanSpec scan;
  scan.base = std::get<FamilySpec>(parse_state_spec("werner").value);
  scan.parameter = "p";
  scan.start = 0.45;
  scan.stop = 0.55;
  scan.step = 0.01;
  const auto out = cmd_scan(scan);
  const auto& rows = out.report["rows"];
  ASSERT_EQ(rows.size(), 11u);
  for (const auto& row : rows) {
    const double p = row["p"].get<double>();
    const std::string verdict = row["result"]["verdict"];
    if (std::abs(p - 0.5) < 1e-9)
      EXPECT_EQ(verdict, "marginal");
    else
      EXPECT_EQ(verdict, p < 0.5 ? "unsteerable" : "steerable") << p;
  }
  EXPECT_EQ(out.text.rfind("# steer scan format 1\np,radius,error_estimate,method,verdict\n", 0), 0u);
}

TEST(Commands, ScanRejectsEmptyRange) {
  ScanSpec scan;
  scan.base = {"werner", {}};
  scan.parameter = "p";
  scan.start = 0.6;
  scan.stop = 0.4;
  scan.step = 0.01;
  EXPECT_EQ(kind_of([&] { cmd_scan(scan); }), ErrorKind::InvalidArgument);
  scan.stop = 0.7;
  scan.step = 0.0;
  EXPECT_EQ(kind_of([&] { cmd_scan(scan); }), ErrorKind::InvalidArgument);
}

}  // namespace
}  // namespace steer
