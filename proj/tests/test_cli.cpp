#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "medreg/cli.hpp"

namespace fs = std::filesystem;
using medreg::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result medreg_run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env = {}) {
  std::ostringstream out, err;
  const int code = run(args, out, err, [&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("medreg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("git blob ids") {
  CHECK(medreg::cli::git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(medreg::cli::git_blob_sha1("hello world\n") == "3b18e512dba79e4c8300dd08aeb37f8e728b8dad");
}

TEST_CASE("generate is deterministic") {
  const fs::path d = scratch("generate");
  for (const char* name : {"a.jsonl", "b.jsonl"})
    REQUIRE(medreg_run({"generate", "--seed", "7", "--transcripts", "100", "--out", s(d / name)}).code == 0);
  CHECK(slurp(d / "a.jsonl") == slurp(d / "b.jsonl"));
  CHECK(!slurp(d / "a.jsonl").empty());
  CHECK(fs::exists(d / "a.jsonl.manifest.json"));
  REQUIRE(medreg_run({"generate", "--seed", "8", "--transcripts", "100", "--out", s(d / "c.jsonl")}).code == 0);
  CHECK(slurp(d / "a.jsonl") != slurp(d / "c.jsonl"));
}

TEST_CASE("manifests record the run") {
  const fs::path d = scratch("manifest");
  REQUIRE(medreg_run({"generate", "--seed", "3", "--transcripts", "5", "--out", s(d / "c.jsonl"), "--manifest",
                      s(d / "run.json")})
              .code == 0);
  const auto m = nlohmann::json::parse(slurp(d / "run.json"));
  CHECK(m["command"] == "generate");
  CHECK(m["seeds"]["seed"] == 3);
  REQUIRE(m["outputs"].size() == 1);
  CHECK(m["outputs"][0]["sha1"] == medreg::cli::git_blob_sha1(slurp(d / "c.jsonl")));
  CHECK(m["config"].contains("hidden"));
  CHECK_FALSE(fs::exists(d / "c.jsonl.manifest.json"));
}

TEST_CASE("config layering") {
  const fs::path d = scratch("layers");
  {
    std::ofstream f(d / "file.conf");
    f << "# test\nhidden = 10\nlearning_rate = 0.2\ndropout = 0.3\n";
  }
  const std::map<std::string, std::string> env = {{"MEDREG_CONFIG", s(d / "file.conf")}, {"MEDREG_LEARNING_RATE", "0.4"},
                                                  {"MEDREG_DROPOUT", "0.25"}};
  REQUIRE(medreg_run({"generate", "--transcripts", "1", "--set", "dropout=0.5", "--out", s(d / "c.jsonl")}, env).code ==
          0);
  const auto m = nlohmann::json::parse(slurp(d / "c.jsonl.manifest.json"));
  CHECK(m["config"]["hidden"] == "10");
  CHECK(m["config"]["learning_rate"] == "0.4");
  CHECK(m["config"]["dropout"] == "0.5");
  CHECK(m["config_sources"]["hidden"] != m["config_sources"]["learning_rate"]);
}

TEST_CASE("errors map to exit codes") {
  const fs::path d = scratch("errors");
  Result r = medreg_run({"generate", "--bogus", "--out", s(d / "x")});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error code=2 kind=", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(medreg_run({"frobnicate"}).code == 2);
  CHECK(medreg_run({"train", "--in", s(d / "missing.jsonl"), "--out", s(d / "m")}).code == 5);
  CHECK(medreg_run({"generate", "--set", "nonsense=1", "--out", s(d / "x")}).code == 2);
  CHECK(medreg_run({"generate", "--set", "transcripts=many", "--out", s(d / "x")}).code == 3);
  {
    std::ofstream f(d / "bad.jsonl");
    f << "{not json\n";
  }
  r = medreg_run({"split", "--in", s(d / "bad.jsonl"), "--out", s(d / "s.json")});
  CHECK(r.code == 3);
  CHECK(r.err.find("kind=") != std::string::npos);
}

TEST_CASE("help lists every flag") {
  std::ifstream readme(MEDREG_SOURCE_DIR "/README.md");
  const std::string doc{std::istreambuf_iterator<char>(readme), {}};
  for (const auto& c : medreg::cli::commands()) {
    const Result r = medreg_run({c, "--help"});
    CHECK(r.code == 0);
    const auto flags = medreg::cli::command_flags(c);
    CHECK(!flags.empty());
    for (const auto& f : flags) {
      CHECK_MESSAGE(r.out.find(f) != std::string::npos, c << " help misses " << f);
      CHECK_MESSAGE(doc.find(f) != std::string::npos, "README misses " << f);
    }
    CHECK_MESSAGE(doc.find("medreg " + c) != std::string::npos, "README misses " << c);
  }
}

TEST_CASE("train and extract on a small corpus") {
  const fs::path d = scratch("train");
  auto ok = [](const Result& r) {
    INFO(r.err);
    REQUIRE(r.code == 0);
  };
  ok(medreg_run({"generate", "--seed", "2", "--transcripts", "30", "--profile", "trivial", "--out", s(d / "c.jsonl")}));
  ok(medreg_run({"split", "--in", s(d / "c.jsonl"), "--out", s(d / "s.json")}));
  ok(medreg_run({"preprocess", "--model", "md", "--in", s(d / "c.jsonl"), "--split", s(d / "s.json"), "--out",
                 s(d / "e.jsonl")}));
  const std::vector<std::string> small = {"--set", "hidden=8", "--set", "max_iterations=20", "--set", "eval_every=10"};
  std::vector<std::string> train = {"train", "--model", "md", "--embedding", "lookup", "--in", s(d / "e.jsonl"), "--out",
                                    s(d / "m.ckpt")};
  train.insert(train.end(), small.begin(), small.end());
  ok(medreg_run(train));
  CHECK(fs::file_size(d / "m.ckpt") > 0);
  CHECK(nlohmann::json::parse(slurp(d / "m.ckpt.report.json")).is_object());
  const std::string first = slurp(d / "m.ckpt");
  ok(medreg_run(train));
  CHECK(slurp(d / "m.ckpt") == first);

  // Preprocessed for md, so a qa run is refused.
  train[2] = "qa";
  CHECK(medreg_run(train).code == 3);

  ok(medreg_run({"evaluate", "--in", s(d / "e.jsonl"), "--model-path", s(d / "m.ckpt"), "--out", s(d / "r.json")}));
  CHECK(nlohmann::json::parse(slurp(d / "r.json")).contains("dosage"));

  std::ofstream(d / "empty.jsonl").close();
  ok(medreg_run({"extract", "--in", s(d / "empty.jsonl"), "--model-path", s(d / "m.ckpt"), "--out", s(d / "x.jsonl")}));
  CHECK(fs::exists(d / "x.jsonl"));
  CHECK(fs::file_size(d / "x.jsonl") == 0);

  ok(medreg_run({"extract", "--in", s(d / "c.jsonl"), "--model-path", s(d / "m.ckpt"), "--out", s(d / "y.jsonl")}));
  CHECK(fs::file_size(d / "y.jsonl") > 0);
}
