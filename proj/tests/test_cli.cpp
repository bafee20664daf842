// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("iclab_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, std::string* out = nullptr) {
    const fs::path capture = dir_ / "stdout.txt";
    const std::string cmd = "ICLAB_OUTPUT_DIR='" + (dir_ / "out").string() + "' '" ICLAB_CLI_PATH "' " + args +
                            " > '" + capture.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    if (out) {
      std::ifstream in(capture);
      std::stringstream ss;
      ss << in.rdbuf();
      *out = ss.str();
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

TEST_F(Cli, GenCompressDecompress) {
  const auto src = write("src.json", R"({"kind":"binary_sticky","stay":0.9})");
  ASSERT_EQ(run("gen --source " + src.string() + " --length 5000 --seed 3"), 0);
  const fs::path stream = dir_ / "out" / "stream.iclt";
  ASSERT_TRUE(fs::exists(stream));

  std::string out;
  ASSERT_EQ(run("compress --input " + stream.string() + " --out " + (dir_ / "c.iclc").string(), &out), 0) << out;
  EXPECT_NE(out.find("\"roundtrip\": true"), std::string::npos) << out;
  ASSERT_EQ(run("compress --decompress --vocab-size 2 --input " + (dir_ / "c.iclc").string() + " --out " +
                (dir_ / "d.iclt").string()),
            0);
  std::ifstream a(stream, std::ios::binary), b(dir_ / "d.iclt", std::ios::binary);
  EXPECT_TRUE(std::equal(std::istreambuf_iterator<char>(a), {}, std::istreambuf_iterator<char>(b)));
}

TEST_F(Cli, RunWritesReportsDeterministically) {
  const auto cfg = write("run.json", R"({"source":{"kind":"binary_sticky","stay":0.9},"length":20000,"seed":4})");
  ASSERT_EQ(run("run --config " + cfg.string() + " --json " + (dir_ / "a.json").string() + " --csv " +
                (dir_ / "a.csv").string()),
            0);
  ASSERT_EQ(run("run --config " + cfg.string() + " --json " + (dir_ / "b.json").string()), 0);
  std::ifstream a(dir_ / "a.json"), b(dir_ / "b.json");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_TRUE(fs::exists(dir_ / "a.csv"));
  ASSERT_EQ(run("run --config " + cfg.string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "report.json"));
}

TEST_F(Cli, AnalyzeLog) {
  const auto log = write("log.jsonl", "{\"tokens_seen\":100,\"loss\":6.931,\"loss_unit\":\"nats\"}\n"
                                      "{\"tokens_seen\":200,\"loss\":5.0}\n");
  std::string out;
  ASSERT_EQ(run("analyze-log --log " + log.string() + " --entropy-bits 10 --param-bits 1000 --format json", &out), 0);
  const auto j = nlohmann::json::parse(out);
  EXPECT_EQ(j["provenance"], "external-telemetry");
  EXPECT_EQ(j["conservation"]["checked"], false);
}

TEST_F(Cli, SmallCommands) {
  std::string out;
  ASSERT_EQ(run("landauer --bits 1 --temperature 300", &out), 0);
  EXPECT_NEAR(nlohmann::json::parse(out)["energy"]["value"].get<double>(), 2.871e-21, 1e-24);
  ASSERT_EQ(run("quantcheck --eta 0.2 --bit-width 32 --target-bit-width 4", &out), 0);
  EXPECT_FALSE(nlohmann::json::parse(out)["necessary_holds"].get<bool>());
  ASSERT_EQ(run("scaling derive-ratio", &out), 0);
  EXPECT_NEAR(nlohmann::json::parse(out)["ratio_k"]["value"].get<double>(), 26.07, 0.01);
  ASSERT_EQ(run("scaling gap-table --points 10 --out -", &out), 0);
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 11);
  ASSERT_EQ(run("scaling law-table --law data --points 50 --out " + (dir_ / "law.csv").string()), 0);
  ASSERT_EQ(run("scaling fit --points " + (dir_ / "law.csv").string(), &out), 0);
  EXPECT_NEAR(nlohmann::json::parse(out)["exponent"]["value"].get<double>(), -0.095, 1e-9);
}

TEST_F(Cli, Quantlab) {
  const auto cfg = write("q.json", R"({"vocab_size":8,"stream_length":200,"epochs":[1,2],"target_widths":[8]})");
  ASSERT_EQ(run("quantlab --config " + cfg.string()), 0);
  std::ifstream in(dir_ / "out" / "quantlab.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, 2);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("landauer --bits -1"), 1);
  EXPECT_EQ(run("quantcheck --eta 0.1 --eta-after 3"), 1);
  EXPECT_EQ(run("run --config /nonexistent/cfg.json"), 2);
  EXPECT_EQ(run("bogus-command"), 1);
  const auto bad = write("bad.json", R"({"source":{"kind":"iid","probabilities":[0.5,0.6]}})");
  std::string out;
  EXPECT_EQ(run("run --config " + bad.string(), &out), 1);
  EXPECT_NE(out.find("source:"), std::string::npos) << out;
  const auto cfg = write("ok.json", R"({"source":{"kind":"uniform","vocab_size":2},"length":10})");
  EXPECT_EQ(run("run --config " + cfg.string() + " --json /nonexistent/dir/r.json"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, SimdFlag) {
  std::string a, b;
  const auto cfg = write("t.json", R"({"source":{"kind":"uniform","vocab_size":4},"length":500,
    "predictor":{"kind":"tinylm","context_len":2,"hidden_width":8}})");
  ASSERT_EQ(run("--simd scalar run --config " + cfg.string() + " --format json", &a), 0);
  ASSERT_EQ(run("run --config " + cfg.string() + " --format json", &b), 0);
  EXPECT_EQ(a, b);
  EXPECT_EQ(run("--simd mmx run --config " + cfg.string()), 1);
}

}  // namespace
