#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mock_llm_server.hpp"
#include "prosim/cli.hpp"
#include "test_support.hpp"

namespace prosim {
namespace {

namespace fs = std::filesystem;
using test::count_lines;
using test::slurp;
using test::TempDir;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::size_t csv_rows(const fs::path& path) { return count_lines(path) - 1; }

TEST(Cli, PopulateIsSeedDeterministic) {
  TempDir a("cli-a"), b("cli-b"), c("cli-c");
  ASSERT_EQ(run({"populate", "--seed", "7", "--out", a.path().string()}).code, 0);
  ASSERT_EQ(run({"populate", "--seed", "7", "--out", b.path().string()}).code, 0);
  ASSERT_EQ(run({"populate", "--seed", "8", "--out", c.path().string()}).code, 0);
  EXPECT_EQ(count_lines(a / "population.jsonl"), 104u);
  EXPECT_EQ(slurp(a / "population.jsonl"), slurp(b / "population.jsonl"));
  EXPECT_NE(slurp(a / "population.jsonl"), slurp(c / "population.jsonl"));
  const auto manifest = Json::parse(slurp(a / "manifest.populate.json"));
  EXPECT_EQ(manifest.at("master_seed"), 7u);
  EXPECT_EQ(manifest.at("backend"), "synthetic");
}

TEST(Cli, UsageErrorsExitOne) {
  TempDir dir("cli-usage");
  const auto bad_config = dir / "bad.json";
  write_text(bad_config, R"({"network": {"k": 3}})");
  const auto out = dir / "never";
  auto r = run({"populate", "--config", bad_config.string(), "--out", out.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("configuration"), std::string::npos);
  EXPECT_FALSE(fs::exists(out));

  EXPECT_EQ(run({"populate", "--bogus"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"simulate"}).code, 1);
  EXPECT_EQ(run({"populate", "--config", (dir / "missing.json").string()}).code, 1);
  EXPECT_EQ(run({"simulate", "dynamics", "--inequity", "sideways", "--out", out.string()}).code, 1);
  EXPECT_FALSE(fs::exists(out));

  write_text(dir / "mismatch.json", R"({"tpp": {"repeats": 4}})");
  EXPECT_EQ(run({"tpp", "--config", (dir / "mismatch.json").string(), "--out", out.string()}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, BaselinePolicyAndTppShapes) {
  TempDir dir("cli-shapes");
  const auto out = dir.path().string();
  ASSERT_EQ(run({"simulate", "baseline", "--out", out}).code, 0);
  EXPECT_EQ(csv_rows(dir / "baseline.csv"), 624u);
  EXPECT_TRUE(fs::exists(dir / "manifest.simulate-baseline.json"));

  ASSERT_EQ(run({"simulate", "policy", "--out", out, "--population", (dir / "population.jsonl").string()}).code, 0);
  EXPECT_EQ(csv_rows(dir / "policy.csv"), 2496u);

  ASSERT_EQ(run({"tpp", "--out", out, "--jobs", "2"}).code, 0);
  EXPECT_EQ(csv_rows(dir / "tpp_outcomes.csv"), 6240u);
  EXPECT_EQ(csv_rows(dir / "tpp_rates.csv"), 12u);

  ASSERT_EQ(run({"analyze", "--out", out}).code, 0);
  const auto analysis = Json::parse(slurp(dir / "analysis.json"));
  EXPECT_TRUE(analysis.contains("baseline"));
  EXPECT_TRUE(analysis.contains("policy"));
  EXPECT_TRUE(analysis.contains("tpp_cells"));
  EXPECT_EQ(csv_rows(dir / "policy_shifts.csv"), 28u);

  ASSERT_EQ(run({"shap", "--out", out}).code, 0);
  EXPECT_EQ(count_lines(dir / "shap.jsonl"), 104u);
  std::ifstream in(dir / "shap.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    const auto j = Json::parse(line);
    double total = 0.0;
    for (const auto& [name, value] : j.at("phi").items()) total += value.get<double>();
    EXPECT_NEAR(total, j.at("prediction").get<double>() - j.at("baseline_prediction").get<double>(),
                1e-9);
  }
}

TEST(Cli, DynamicsTraceAndAnalysis) {
  TempDir dir("cli-dyn");
  const auto out = dir.path().string();
  ASSERT_EQ(run({"simulate", "dynamics", "--out", out}).code, 0);
  EXPECT_EQ(count_lines(dir / "dynamics_trace.jsonl"), 31u);
  EXPECT_EQ(count_lines(dir / "graph.edgelist"), 312u);
  ASSERT_EQ(run({"analyze", "--out", out}).code, 0);
  EXPECT_EQ(csv_rows(dir / "contagion.csv"), 30u);
  const auto analysis = Json::parse(slurp(dir / "analysis.json"));
  EXPECT_LT(analysis.at("dynamics").at("relative_change_percent").get<double>(), 0.0);
}

TEST(Cli, JobsDoNotChangeTheTrace) {
  TempDir a("cli-j1"), b("cli-j4");
  ASSERT_EQ(run({"simulate", "dynamics", "--seed", "3", "--jobs", "1", "--out", a.path().string()}).code, 0);
  ASSERT_EQ(run({"simulate", "dynamics", "--seed", "3", "--jobs", "4", "--out", b.path().string()}).code, 0);
  EXPECT_EQ(slurp(a / "dynamics_trace.jsonl"), slurp(b / "dynamics_trace.jsonl"));
}

TEST(Cli, InequityFlagOverridesConfig) {
  TempDir dir("cli-ineq");
  ASSERT_EQ(run({"simulate", "dynamics", "--inequity", "none", "--out", dir.path().string()}).code, 0);
  std::ifstream in(dir / "dynamics_trace.jsonl");
  std::string header;
  std::getline(in, header);
  EXPECT_TRUE(Json::parse(header).at("inequity").is_null());
}

TEST(Cli, AnalyzeRejectsMissingOrEmptyInputs) {
  TempDir empty("cli-empty");
  EXPECT_EQ(run({"analyze", "--in", empty.path().string(), "--out", empty.path().string()}).code, 3);

  TempDir dir("cli-header-only");
  ASSERT_EQ(run({"simulate", "dynamics", "--out", dir.path().string()}).code, 0);
  std::ifstream in(dir / "dynamics_trace.jsonl");
  std::string header;
  std::getline(in, header);
  TempDir only("cli-only");
  write_text(only / "dynamics_trace.jsonl", header + "\n");
  EXPECT_EQ(run({"analyze", "--in", only.path().string(), "--out", only.path().string()}).code, 3);
  write_text(only / "dynamics_trace.jsonl", "");
  EXPECT_EQ(run({"analyze", "--in", only.path().string(), "--out", only.path().string()}).code, 3);
}

TEST(Cli, ShapNeedsBaseline) {
  TempDir dir("cli-shap");
  ASSERT_EQ(run({"populate", "--out", dir.path().string()}).code, 0);
  const auto r = run({"shap", "--out", dir.path().string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("baseline.csv"), std::string::npos);
}

TEST(Cli, LlmBackendWithoutCredentialExitsTwo) {
  test::ScopedEnv unset("PROSIM_API_KEY", nullptr);
  TempDir dir("cli-llm");
  const auto r = run({"simulate", "baseline", "--backend", "llm", "--out", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("PROSIM_API_KEY"), std::string::npos);
}

TEST(Cli, ResumeCompletesTruncatedTraceIdentically) {
  TempDir full("cli-full"), part("cli-part");
  ASSERT_EQ(run({"simulate", "dynamics", "--seed", "5", "--out", full.path().string()}).code, 0);
  const std::string text = slurp(full / "dynamics_trace.jsonl");
  // Keep the header, 11 complete iterations and half of the next line.
  std::size_t cut = 0;
  for (int i = 0; i < 12; ++i) cut = text.find('\n', cut) + 1;
  const auto trace = part / "dynamics_trace.jsonl";
  write_text(trace, text.substr(0, cut + (text.find('\n', cut) - cut) / 2));

  const auto r = run({"simulate", "dynamics", "--seed", "5", "--resume", trace.string(),
                      "--out", part.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("from t=12"), std::string::npos);
  EXPECT_EQ(slurp(trace), text);

  EXPECT_EQ(run({"simulate", "dynamics", "--seed", "6", "--resume", trace.string(),
                 "--out", part.path().string()}).code,
            1);
  EXPECT_EQ(slurp(trace), text);
}

TEST(Cli, LlmRunInterruptedThenResumed) {
  constexpr const char* kEnv = "PROSIM_TEST_CLI_KEY";
  test::ScopedEnv key(kEnv, "secret");
  std::atomic<bool> broken{false};
  std::atomic<int> served{0};
  test::MockLlmServer server([&](int, const test::MockRequest&) {
    if (broken) return test::MockReply{503, "", "{\"error\":\"down\"}", {}};
    // 12 agents: 72 baseline calls, then 84 per iteration. Break during t=2.
    if (++served == 72 + 84 + 10) broken = true;
    return test::MockReply{200, "4", {}, {}};
  });
  TempDir dir("cli-llm-resume");
  const auto config = dir / "llm.json";
  write_text(config, Json{{"population", {{"n", 12}}},
                          {"network", {{"k", 4}}},
                          {"dynamics", {{"iterations", 3}}},
                          {"backend",
                           {{"kind", "llm"},
                            {"llm",
                             {{"endpoint", server.endpoint()},
                              {"api_key_env", kEnv},
                              {"max_retries", 0},
                              {"timeout_ms", 2000}}}}}}
                         .dump());
  const auto out = dir.path().string();
  auto r = run({"simulate", "dynamics", "--config", config.string(), "--out", out});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--resume"), std::string::npos);
  const auto trace = dir / "dynamics_trace.jsonl";
  EXPECT_EQ(count_lines(trace), 2u);

  broken = false;
  r = run({"simulate", "dynamics", "--config", config.string(), "--resume", trace.string(),
           "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(trace), 4u);
  std::ifstream in(trace);
  std::string line;
  std::getline(in, line);
  int t = 0;
  while (std::getline(in, line)) {
    const auto rec = Json::parse(line);
    EXPECT_EQ(rec.at("t"), ++t);
    for (const auto& a : rec.at("agents")) EXPECT_EQ(a.at("rating"), 4);
  }
}

TEST(Cli, BinaryExitCodes) {
  TempDir dir("cli-bin");
  const std::string bin = PROSIM_CLI_PATH;
  const auto status = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
  EXPECT_EQ(status(std::system((bin + " populate --out " + dir.path().string() + " > /dev/null").c_str())), 0);
  EXPECT_EQ(count_lines(dir / "population.jsonl"), 104u);
  EXPECT_EQ(status(std::system((bin + " frobnicate 2> /dev/null").c_str())), 1);
  EXPECT_EQ(status(std::system((bin + " analyze --out " + (dir / "nothing").string() + " 2> /dev/null").c_str())), 3);
}

}  // namespace
}  // namespace prosim
