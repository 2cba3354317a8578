#include "qkam/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace qkam;

TEST(Config, RoundTripIsExact) {
  ExperimentConfig c;
  c.code = "toric:2x3";
  c.h = 0.1 + 0.2;  // not representable in short decimal
  c.hz = 1.0 / 3.0;
  c.flow.mu0 = 2.718281828459045;
  c.flow.k_max = 7;
  c.flow.mode = FlowMode::Symmetric;
  c.sweep_n = {4, 6, 8};
  c.sweep_h = {0.01, 1e-300, 0.05};
  c.seed = 123456789012345ull;
  std::string text = config_text(c);
  ExperimentConfig back;
  apply_config_text(back, text);
  EXPECT_EQ(config_text(back), text);
  EXPECT_EQ(back.h, c.h);
  EXPECT_EQ(back.hz, c.hz);
  EXPECT_EQ(back.sweep_h, c.sweep_h);
  EXPECT_EQ(back.flow.mode, FlowMode::Symmetric);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, CommentsAndOverrides) {
  ExperimentConfig c;
  apply_config_text(c, "# run\nmu0 = 4.5  # inline\n\nk_max=3\nmu0=5\n");
  EXPECT_EQ(c.flow.mu0, 5.0);
  EXPECT_EQ(c.flow.k_max, 3);
}

TEST(Config, RejectsBadInput) {
  ExperimentConfig c;
  EXPECT_THROW(apply_config_text(c, "colour=blue\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "mu0=fast\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "k_max=-2\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "mode=sideways\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "just words\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "format=xml\n"), ConfigError);
}

TEST(Config, HashTracksContent) {
  ExperimentConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.flow.mu0 += 1e-12;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(CodeSpec, Builders) {
  EXPECT_EQ(make_code("ising:10").n(), 10u);
  EXPECT_EQ(make_code("ising-open:5").num_checks(), 4u);
  auto t = make_code("toric:2x3");
  EXPECT_EQ(t.n(), 12u);
  EXPECT_EQ(t.k_logical(), 2u);
  EXPECT_EQ(make_code("toric:3").n(), 18u);
  EXPECT_EQ(make_code("hgp-rep:3").n(), 13u);
  EXPECT_TRUE(make_code("ldpc:12,9,3,4").is_classical());
  EXPECT_THROW(make_code("mobius:3"), ConfigError);
  EXPECT_THROW(make_code("ising"), ConfigError);
  EXPECT_THROW(make_code("toric:2y"), ConfigError);
}

TEST(CodeSpec, FileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "qkam_report_test.code";
  save_code(path.string(), make_toric(2, 2));
  auto c = make_code("file:" + path.string());
  EXPECT_EQ(c.n(), 8u);
  std::filesystem::remove(path);
}

TEST(Csv, EmptyIsHeaderOnly) {
  CsvTable t({"n", "delta", "gap"});
  EXPECT_EQ(t.str(), "n,delta,gap\n");
  EXPECT_THROW(t.add({1, 2.0}), std::invalid_argument);
}

TEST(Csv, QuotesStrings) {
  CsvTable t({"label", "x"});
  t.add({"a,b", 0.5});
  t.add({"say \"hi\"", 2});
  EXPECT_EQ(t.str(), "label,x\n\"a,b\",0.5\n\"say \"\"hi\"\"\",2\n");
}

TEST(Report, FlowReportIsDeterministic) {
  ExperimentConfig c;
  c.code = "ising:6";
  c.h = 0.05;
  c.flow.mu0 = 3.0;
  c.flow.mode = FlowMode::Symmetric;
  auto run = [&] {
    auto code = make_code(c.code);
    auto g = build_graphs(code);
    auto f = run_flow(code, g, field_perturbation(code.n(), c.h, c.hz), c.flow);
    Json j = report_header(c);
    j["flow"] = json_flow(f);
    return dump_json(j) + flow_csv(f).str();
  };
  std::string a = run(), b = run();
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\"config_hash\": \"" + config_hash(c) + "\""), std::string::npos);
  EXPECT_NE(a.find("\"version\""), std::string::npos);
}

TEST(Report, BandTableHasOneRowPerLevel) {
  auto code = make_repetition(6, true);
  auto row = band_and_splitting(code, field_perturbation(6, 0.05, 0.0), 0.1, 6);
  auto csv = band_csv(row.band).str();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8);
  Json j = json_band(row.band);
  EXPECT_EQ(j["rows"].size(), 8u);
  EXPECT_EQ(j["rows"][0]["k"], 0);
}

TEST(Report, NonFiniteValuesAreStrings) {
  EXPECT_EQ(json_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(json_number(1.5), 1.5);
}

TEST(Report, WriteErrorsSurface) {
  EXPECT_THROW(write_output("/nonexistent-dir/x.json", "{}"), std::runtime_error);
}
