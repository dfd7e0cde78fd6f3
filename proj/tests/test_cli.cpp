#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "lsmgan_cli_test";

// Runs the CLI from kRoot with stderr captured to kRoot/stderr.txt.
int run(const std::string& args) {
  fs::create_directories(kRoot);
  const std::string cmd = "cd '" + kRoot.string() + "' && '" + std::string(LSMGAN_CLI_PATH) + "' " + args +
                          " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

json last_error() { return json::parse(slurp(kRoot / "stderr.txt")); }

struct Fixture {
  Fixture() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "missing seed is a configuration error") {
  CHECK(run("gen-corpus --out g --n-af 1 --n-nonaf 1") == 2);
  const auto err = last_error();
  CHECK(err["status"] == "error");
  CHECK(err["code"] == "ConfigError");
  CHECK(err["command"] == "gen-corpus");
}

TEST_CASE_FIXTURE(Fixture, "unknown config key is rejected") {
  std::ofstream(kRoot / "bad.json") << R"({"gen-corpus": {"n_af": 1, "bogus": 3}})";
  CHECK(run("gen-corpus --config bad.json --seed 1 --out g") == 2);
  CHECK(last_error()["code"] == "ConfigError");
}

TEST_CASE_FIXTURE(Fixture, "corpus pipeline with config file and flag overrides") {
  std::ofstream(kRoot / "cfg.json") << R"({"seed": 4, "gen-corpus": {"n_af": 3, "n_nonaf": 5}})";
  REQUIRE(run("gen-corpus --config cfg.json --n-nonaf 4 --out g") == 0);
  const auto manifest = json::parse(slurp(kRoot / "g" / "manifest.json"));
  CHECK(manifest["seed"] == 4);
  CHECK(manifest["config"]["n_af"] == 3);
  CHECK(manifest["config"]["n_nonaf"] == 4);
  CHECK(manifest["command"] == "gen-corpus");
  CHECK(manifest.contains("simd_backend"));
  const auto meta = json::parse(slurp(kRoot / "g" / "corpus.json"));
  CHECK(meta["records"].size() == 7);
  CHECK(fs::file_size(kRoot / "g" / "corpus.bin") == 7 * 7200 * 4);

  const auto before = slurp(kRoot / "g" / "corpus.bin");
  REQUIRE(run("preprocess --seed 4 --out p --input g/corpus --artifacts groups") == 0);
  CHECK(slurp(kRoot / "g" / "corpus.bin") == before);
  CHECK(fs::file_size(kRoot / "p" / "records.bin") == 7 * 1200 * 4);

  REQUIRE(run("augment --seed 4 --out a --input p/records --method Permutation --target-af 8 --target-nonaf 8") == 0);
  CHECK(json::parse(slurp(kRoot / "a" / "records.json"))["records"].size() == 16);

  REQUIRE(run("train-clf --seed 4 --out c --input a/records --max-epochs 2") == 0);
  CHECK(line_count(kRoot / "c" / "classifier_log.csv") == 3);

  // Evaluating on the training corpus trips the leakage guard.
  CHECK(run("evaluate --seed 4 --out e --input a/records --classifier c/classifier") == 1);
  CHECK(last_error()["code"] == "LeakageDetected");

  REQUIRE(run("gen-corpus --seed 99 --out g2 --n-af 2 --n-nonaf 2") == 0);
  REQUIRE(run("preprocess --seed 99 --out p2 --input g2/corpus") == 0);
  REQUIRE(run("evaluate --seed 4 --out e --input p2/records --classifier c/classifier") == 0);
  const auto metrics = slurp(kRoot / "e" / "metrics.csv");
  CHECK(metrics.rfind("tp,fp,tn,fn,", 0) == 0);
  CHECK(line_count(kRoot / "e" / "groups.csv") == 5);
}

TEST_CASE_FIXTURE(Fixture, "coarse stub search writes 98 scored rows") {
  REQUIRE(run("gen-corpus --seed 2 --out g --n-af 12 --n-nonaf 0") == 0);
  REQUIRE(run("preprocess --seed 2 --out p --input g/corpus") == 0);
  REQUIRE(run("hyperopt --seed 2 --out h --input p/records --class AF --coarse --mode stub --k 10 --jobs 2") == 0);
  CHECK(line_count(kRoot / "h" / "scores.csv") == 99);
  const auto best = json::parse(slurp(kRoot / "h" / "best.json"));
  CHECK(best["best"].contains("lambda1"));
  CHECK(best["evaluated"] == 98);
}

TEST_CASE_FIXTURE(Fixture, "unknown backend and bad method names fail cleanly") {
  CHECK(run("gen-corpus --seed 1 --out g --backend sse9") == 2);
  REQUIRE(run("gen-corpus --seed 1 --out g --n-af 1 --n-nonaf 1") == 0);
  REQUIRE(run("preprocess --seed 1 --out p --input g/corpus") == 0);
  CHECK(run("augment --seed 1 --out a --input p/records --method Nope") != 0);
  CHECK(last_error()["status"] == "error");
  CHECK(run("preprocess --seed 1 --out p3 --input does/not/exist") == 1);
  CHECK(last_error()["code"] == "IoError");
}
