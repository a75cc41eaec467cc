#include "actuopt/cli/experiment.hpp"
#include "actuopt/cli/output.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace actuopt;
using namespace actuopt::cli;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_config(""), ExperimentConfig{});
}

TEST(Config, RoundTripsDefaults) {
  const ExperimentConfig c{};
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, RoundTripsAwkwardValues) {
  ExperimentConfig c;
  c.model = ModelKind::wave;
  c.wave.nx = 20;
  c.wave.ny = 24;
  c.wave.neumann = {true, false, false, true};
  c.wave.nonlinearity.kind = NonlinearityKind::klein_gordon;
  c.wave.nonlinearity.k_exp = 3;
  c.beam.alpha = 0.1;
  c.beam.cd = 1.0 / 3.0;
  c.r_weight = 1e-300;
  c.tau = 0.7000000000000001;
  c.r = {0.3, 0.6};
  c.r_lower = {0.25, 0.25};
  c.r_upper = {0.75, 0.7};
  c.w0 = "gaussian(1, 0.1, 0.4, 0.5)";
  c.q1 = "gaussian(0.5, 0.5, 0.2)";
  c.u = "sine(2, 3, 0.5)";
  c.optimizer.max_design_step = 0.02;
  c.probe = {0.25, 0.75};
  c.out = "results/run 1";
  const std::string text = serialize_config(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, ParsesCommentsAndWhitespace) {
  const auto c = parse_config("# header\n\n[model]\n  type = wave  \n; other\n[time]\r\nn_steps=10\r\n");
  EXPECT_EQ(c.model, ModelKind::wave);
  EXPECT_EQ(c.n_steps, 10);
}

TEST(Config, UnknownKeyReportsLineAndSection) {
  const std::string err = error_of("[time]\ntau = 1\nsteps = 4\n");
  EXPECT_NE(err.find("t.ini:3"), std::string::npos) << err;
  EXPECT_NE(err.find("[time]"), std::string::npos) << err;
  EXPECT_NE(err.find("steps"), std::string::npos) << err;
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_NE(error_of("[nosuch]\n"), "");
  EXPECT_NE(error_of("[time\n"), "");
  EXPECT_NE(error_of("tau = 1\n"), "");
  EXPECT_NE(error_of("[time]\ntau\n"), "");
  EXPECT_NE(error_of("[time]\ntau = abc\n"), "");
  EXPECT_NE(error_of("[time]\ntau = 1.5x\n"), "");
  EXPECT_NE(error_of("[time]\nn_steps = 2.5\n"), "");
  EXPECT_NE(error_of("[time]\ntau = 1\ntau = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("[model]\ntype = plate\n"), "");
  EXPECT_NE(error_of("[wave]\nneumann = left, middle\n"), "");
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_NE(error_of("[time]\ntau = -1\n"), "");
  EXPECT_NE(error_of("[time]\nn_steps = 0\n"), "");
  EXPECT_NE(error_of("[beam]\nei = 0\n"), "");
  EXPECT_NE(error_of("[cost]\nr_weight = 0\n"), "");
  EXPECT_NE(error_of("[control]\nr = 0.3, 0.4\n"), "");
  EXPECT_NE(error_of("[initial]\nw0 = banana(1)\n"), "");
  EXPECT_NE(error_of("[control]\nu = sine(1)\n"), "");
  EXPECT_NE(error_of("[wave]\nneumann = left, right, bottom, top\n[model]\ntype = wave\n"), "");
  EXPECT_NE(error_of("[optimizer]\nn_grid = 4\n"), "");
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"beam_default.ini", "wave_default.ini", "beam_undamped.ini"}) {
    const std::string path = std::string(ACTUOPT_CONFIG_DIR) + "/" + name;
    EXPECT_NO_THROW(load_config(path)) << path;
  }
  EXPECT_THROW(load_config("/nonexistent/none.ini"), ConfigError);
}

TEST(Expressions, ProfilesOnBeamNodes) {
  ExperimentConfig c;
  c.beam.n_cells = 8;
  const BeamModel beam = make_beam(c);
  const Vector mode = evaluate_profile(beam, "mode(2, 1)");
  EXPECT_NEAR(mode[3], 2.0, 1e-15);  // x = 0.5
  const Vector g = evaluate_profile(beam, "gaussian(1, 0.1, 0.5)");
  EXPECT_NEAR(g[3], 1.0, 1e-15);
  EXPECT_NEAR(g[2], std::exp(-0.125 * 0.125 / 0.02), 1e-15);
  EXPECT_EQ(evaluate_profile(beam, "zero").cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(evaluate_profile(beam, "uniform(3)")[0], 3.0);
}

TEST(Expressions, WaveModeUsesBothAxes) {
  ExperimentConfig c;
  c.model = ModelKind::wave;
  c.wave.nx = c.wave.ny = 8;
  const WaveModel wave = make_wave(c);
  const Vector m = evaluate_profile(wave, "mode(1, 1, 2)");
  const Matrix& pos = wave.node_positions();
  for (Eigen::Index k = 0; k < pos.rows(); ++k)
    EXPECT_NEAR(m[k], std::sin(std::numbers::pi * pos(k, 0)) * std::sin(2 * std::numbers::pi * pos(k, 1)), 1e-15);
}

TEST(Expressions, Signals) {
  const TimeGrid grid{1.0, 4};
  const ControlSignal s = evaluate_signal("sine(2, 3, 0.5)", grid);
  EXPECT_DOUBLE_EQ(s[2], 2.0 * std::sin(3.0 * 0.5 + 0.5));
  EXPECT_EQ(evaluate_signal("constant(1.5)", grid)[4], 1.5);
  EXPECT_THROW(evaluate_signal("ramp(1)", grid), ConfigError);
}

TEST(Experiment, DefaultDesignsAndProbe) {
  ExperimentConfig c;
  const BeamModel beam = make_beam(c);
  EXPECT_NEAR(initial_design(beam, c)[0], 0.5, 1e-15);
  const auto [lo, hi] = beam.design_box();
  EXPECT_NEAR(check_design(beam, c)[0], lo[0] + 0.25 * (hi[0] - lo[0]), 1e-15);
  EXPECT_NEAR(beam.node_positions()(probe_index(beam, c), 0), 0.5, 1e-15);
  c.r = {5.0};
  EXPECT_EQ(initial_design(beam, c)[0], hi[0]);
  c.r_lower = {0.0};
  c.r_upper = {1.0};
  EXPECT_THROW(projection_spec(beam, c), ConfigError);
}

TEST(Output, DoublesRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Output, CsvLayoutAndAtomicWrite) {
  const fs::path dir = fs::temp_directory_path() / "actuopt_test_output";
  fs::remove_all(dir);
  CsvTable t({"a", "b"});
  t.row({1.0, 0.1});
  t.comment("truncated");
  t.save(dir / "x.csv");
  std::ifstream in(dir / "x.csv", std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, "a,b\n1,0.10000000000000001\n# truncated\n");
  EXPECT_FALSE(fs::exists(dir / "x.csv.tmp"));
  EXPECT_THROW(t.row({1.0}), std::logic_error);
  fs::remove_all(dir);
}
