#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "../unit/fake_server.hpp"
#include "fred/schema.hpp"
#include "json.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run fred(const std::string& args, const std::string& env = "") {
  const std::string err_path = ::testing::TempDir() + "fred_cli_stderr.txt";
  const std::string cmd = env + " " FRED_CLI_PATH " " + args + " 2>" + err_path;
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

const std::string kData = FRED_DATA_DIR;
const std::string kShortcut = "--model " + kData + "/models/shortcut_ab.json";
const std::string kLinear = "--model " + kData + "/models/sentiment_linear.json";

TEST(Cli, SampleSize) {
  auto r = fred("sample-size --l-max 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "5\n");
  r = fred("sample-size --alpha 0.5 --l-max 1");
  EXPECT_EQ(r.out, "1\n");
  r = fred("sample-size --alpha 1.5");
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ExplainMatchesGolden) {
  const auto r = fred("explain " + kShortcut + " --no-timing \"a b b\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto got = nlohmann::json::parse(r.out);
  const auto want = nlohmann::json::parse(slurp(FRED_TESTS_DIR "/golden/explain_shortcut_abb.json"));
  EXPECT_EQ(got, want);
  EXPECT_EQ(got["minimal_subset"]["words"], nlohmann::json({"a"}));
  EXPECT_EQ(got["config"]["n"], 3067);
}

TEST(Cli, ExplainOutputValidatesAgainstSchema) {
  const auto schema = fred::schema::load_schema(FRED_SCHEMA_DIR "/explanation.schema.json");
  for (const std::string& args :
       {kShortcut + " \"a b b c\"", kLinear + " --l-max 4 \"Great food, rude staff.\"",
        kLinear + " --sampling pos --lexicon " + kData + "/lexicon.tsv --n 300 \"cold soup\""}) {
    const auto r = fred("explain " + args);
    ASSERT_EQ(r.code, 0) << args << "\n" << r.err;
    EXPECT_EQ(fred::schema::validate(nlohmann::json::parse(r.out), schema),
              std::vector<std::string>{})
        << args;
  }
}

TEST(Cli, ExplainIsDeterministic) {
  const std::string args = "explain " + kLinear + " --no-timing --seed 5 \"the pasta was delicious\"";
  const auto a = fred(args);
  const auto b = fred(args + " --threads 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ExplainFromFileAndToFiles) {
  const std::string in = ::testing::TempDir() + "cli_in.txt";
  const std::string html = ::testing::TempDir() + "cli_out.html";
  const std::string json = ::testing::TempDir() + "cli_out.json";
  std::ofstream(in) << "great service\n";
  const auto r = fred("explain " + kLinear + " --file " + in + " --output html --out " + html +
                      " --json-out " + json);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto page = slurp(html);
  EXPECT_EQ(page.rfind("<!DOCTYPE html>", 0), 0u);
  EXPECT_EQ(page.find("<script"), std::string::npos);
  EXPECT_EQ(page.find("src="), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(json))["tokens"], nlohmann::json({"great", "service"}));
}

TEST(Cli, AnsiOutput) {
  const auto r = fred("explain " + kShortcut + " --output ansi \"a b b\"");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\x1b["), std::string::npos);
  EXPECT_NE(r.out.find("minimal subset"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwoWithJsonMessage) {
  auto r = fred("explain " + kShortcut + " --sampling pos \"a b\"");
  EXPECT_EQ(r.code, 2);
  const auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err["error"], "config");
  EXPECT_NE(err["message"].get<std::string>().find("--lexicon"), std::string::npos);
  EXPECT_EQ(fred("explain --model /nonexistent.json \"a\"").code, 2);
  EXPECT_EQ(fred("explain " + kShortcut + " --epsilon 1.5 \"a\"").code, 2);
  EXPECT_EQ(fred("explain " + kShortcut + " --bogus \"a\"").code, 2);
  EXPECT_EQ(fred("explain " + kShortcut + " --mask-token a \"a b\"").code, 2);
  EXPECT_EQ(fred("explain " + kShortcut + " \"  ...  \"").code, 2);
}

TEST(Cli, TransportErrorExitsThree) {
  int port = 0;
  {
    fred::testing::FakeServer s;
    port = std::stoi(s.url().substr(s.url().rfind(':') + 1));
  }
  const auto r = fred("explain --url http://127.0.0.1:" + std::to_string(port) + " \"good food\"");
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "transport");
}

TEST(Cli, RemoteExplainWithAuthFromEnvironment) {
  fred::testing::FakeServer server;
  const auto r = fred("explain --url " + server.url() + " --l-max 3 \"really good food\"",
                      "FRED_AUTH_HEADER='X-Api-Key: k1'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["minimal_subset"]["words"], nlohmann::json({"good"}));
  for (const auto& v : server.header_values("X-Api-Key")) EXPECT_EQ(v, "k1");
}

TEST(Cli, ServeCheck) {
  fred::testing::FakeServer server;
  const std::string fixture = FRED_TESTS_DIR "/fixtures/serve_check.json";
  auto r = fred("serve-check --url " + server.url() + " --fixture " + fixture);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  server.set_mode(fred::testing::FakeServer::Mode::kAcceptAnything);
  r = fred("serve-check --url " + server.url() + " --fixture " + fixture);
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, Eval) {
  const std::string json = ::testing::TempDir() + "cli_eval.json";
  const auto r = fred("eval " + kLinear + " --corpus " + kData +
                      "/reviews.jsonl --max-docs 4 --robustness-k 2 --l-max 4 --json-out " + json);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("method", 0), 0u);
  for (const char* h : {"suffic.", "compreh.", "robust.", "aucmorf", "time (s)", "proport."}) {
    EXPECT_NE(r.out.find(h), std::string::npos) << h;
  }
  EXPECT_EQ(nlohmann::json::parse(slurp(json))["documents"].size(), 4u);
  EXPECT_EQ(fred("eval " + kLinear + " --corpus /nonexistent.jsonl").code, 2);
  EXPECT_EQ(fred("eval " + kLinear + " --corpus " + kData + "/reviews.jsonl --metrics nope").code, 2);
}

TEST(Cli, VerifySelectedChecks) {
  auto r = fred("verify --check sample-size --check mask-equivalence");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
  EXPECT_EQ(fred("verify --check nope").code, 2);
}

TEST(Cli, FitVectorizer) {
  const std::string out = ::testing::TempDir() + "cli_vec.json";
  const auto r = fred("fit-vectorizer --corpus " + kData + "/reviews.jsonl --out " + out);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(out));
  EXPECT_EQ(j["vocabulary"].size(), j["idf"].size());
}

}  // namespace
