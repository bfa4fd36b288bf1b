// End-to-end checks of the fairgen CLI: exit codes, config-file handling, and
// a miniature pipeline driven exactly the way a user would run it. Each case
// spawns the real binary, so these tests cover the argument wiring that unit
// tests of the library cannot see.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code;
  std::string output;  // stdout and stderr combined
};

CommandResult run_cli(const std::string& args) {
  const std::string log = (fs::temp_directory_path() / "fairgen_cli_test.log").string();
  const std::string cmd = std::string(FAIRGEN_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, buffer.str()};
}

// A scratch directory fresh for each test case.
struct ScratchDir {
  fs::path dir;
  ScratchDir() {
    dir = fs::temp_directory_path() / ("fairgen_cli_" + std::to_string(std::rand()));
    fs::create_directories(dir);
  }
  ~ScratchDir() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

const char* kAttribute = R"({
  "name": "name",
  "pairing": "subgroup_level",
  "subgroups": [
    { "value": "A", "tokens": ["alice"] },
    { "value": "B", "tokens": ["bob"] }
  ]
})";

const char* kTemplates = R"([
  { "id": 0, "pattern": "<name> is" },
  { "id": 1, "pattern": "<name> was" }
])";

}  // namespace

TEST_CASE("missing subcommand and bad flags are configuration errors") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("gen-corpus --no-such-flag").exit_code == 2);
  CHECK(run_cli("evaluate").exit_code == 2);  // required flags absent
}

TEST_CASE("unknown config keys are rejected with a hint") {
  ScratchDir tmp;
  write_file(tmp / "attr.json", kAttribute);
  write_file(tmp / "cfg.json", R"({"filler-fraction": 0.0})");
  CommandResult r = run_cli("gen-corpus --config " + (tmp / "cfg.json") + " --attribute " +
                            (tmp / "attr.json") + " --out " + (tmp / "c.txt") +
                            " --sentences 5 --seed 1");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("unknown config key 'filler-fraction'") != std::string::npos);
  CHECK(r.output.find("filler_fraction") != std::string::npos);  // the hint
}

TEST_CASE("missing input files are config-shaped errors") {
  ScratchDir tmp;
  write_file(tmp / "attr.json", kAttribute);
  CommandResult r = run_cli("train --corpus " + (tmp / "absent.txt") + " --attribute " +
                            (tmp / "attr.json") + " --out " + (tmp / "lm.ckpt") + " --steps 1");
  CHECK(r.exit_code == 2);
}

TEST_CASE("training divergence is a runtime error") {
  ScratchDir tmp;
  write_file(tmp / "attr.json", kAttribute);
  REQUIRE(run_cli("gen-corpus --attribute " + (tmp / "attr.json") + " --out " + (tmp / "c.txt") +
                  " --sentences 40 --seed 5 --filler-fraction 0 --positive-prob A=0.9 "
                  "--positive-prob B=0.1")
              .exit_code == 0);
  CommandResult r = run_cli("train --corpus " + (tmp / "c.txt") + " --attribute " +
                            (tmp / "attr.json") + " --out " + (tmp / "lm.ckpt") +
                            " --layers 2 --d-model 8 --heads 2 --context 16 --steps 20 "
                            "--batch-size 4 --lr 1e200 --seed 5");
  CHECK(r.exit_code == 3);
}

TEST_CASE("config values fill in flags and explicit flags override them") {
  ScratchDir tmp;
  write_file(tmp / "attr.json", kAttribute);
  write_file(tmp / "cfg.json",
             R"({"sentences": 7, "seed": 3, "filler_fraction": 0.0,
                 "positive_prob": {"A": 0.8, "B": 0.2}})");

  const std::string base = "gen-corpus --config " + (tmp / "cfg.json") + " --attribute " +
                           (tmp / "attr.json") + " --out " + (tmp / "c.txt");
  REQUIRE(run_cli(base).exit_code == 0);
  std::ifstream in(tmp / "c.txt");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 7);

  REQUIRE(run_cli(base + " --sentences 4").exit_code == 0);  // flag wins over config
  std::ifstream in2(tmp / "c.txt");
  lines = 0;
  for (std::string line; std::getline(in2, line);) ++lines;
  CHECK(lines == 4);
}

TEST_CASE("pipeline runs end to end and evaluate is deterministic") {
  ScratchDir tmp;
  write_file(tmp / "attr.json", kAttribute);
  write_file(tmp / "templates.json", kTemplates);

  REQUIRE(run_cli("gen-corpus --attribute " + (tmp / "attr.json") + " --out " + (tmp / "c.txt") +
                  " --sentences 60 --seed 5 --filler-fraction 0 --positive-prob A=0.9 "
                  "--positive-prob B=0.1")
              .exit_code == 0);
  REQUIRE(run_cli("train --corpus " + (tmp / "c.txt") + " --attribute " + (tmp / "attr.json") +
                  " --out " + (tmp / "lm.ckpt") +
                  " --layers 2 --d-model 8 --heads 2 --context 16 --steps 40 --batch-size 4 "
                  "--lr 3e-3 --seed 5")
              .exit_code == 0);
  REQUIRE(run_cli("train-head --checkpoint " + (tmp / "lm.ckpt") + " --corpus " + (tmp / "c.txt") +
                  " --out " + (tmp / "head.ckpt") + " --min-opinion-words 1 --steps 20 --seed 5")
              .exit_code == 0);
  REQUIRE(run_cli("debias --checkpoint " + (tmp / "lm.ckpt") + " --head " + (tmp / "head.ckpt") +
                  " --corpus " + (tmp / "c.txt") + " --attribute " + (tmp / "attr.json") +
                  " --out " + (tmp / "debiased.ckpt") +
                  " --method sentiment_reg --lambda 10 --steps 10 --lr 1e-3 --seed 5")
              .exit_code == 0);

  const std::string eval_cmd = "evaluate --checkpoint " + (tmp / "debiased.ckpt") +
                               " --attribute " + (tmp / "attr.json") + " --templates " +
                               (tmp / "templates.json") + " --eval-corpus " + (tmp / "c.txt") +
                               " --n 5 --max-tokens 6 --seed 42 --out ";
  REQUIRE(run_cli(eval_cmd + (tmp / "r1.json")).exit_code == 0);
  REQUIRE(run_cli(eval_cmd + (tmp / "r2.json")).exit_code == 0);

  std::ifstream r1(tmp / "r1.json"), r2(tmp / "r2.json");
  std::stringstream s1, s2;
  s1 << r1.rdbuf();
  s2 << r2.rdbuf();
  REQUIRE(!s1.str().empty());
  CHECK(s1.str() == s2.str());

  const nlohmann::json report = nlohmann::json::parse(s1.str());
  CHECK(report.at("schema_version").get<int>() >= 1);
  CHECK(report.at("attribute").get<std::string>() == "name");
  CHECK(report.contains("individual_fairness"));
  CHECK(report.contains("ppl"));

  // report renders both formats
  CHECK(run_cli("report --in " + (tmp / "r1.json") + " --format markdown --out " +
                (tmp / "r.md"))
            .exit_code == 0);
  CHECK(run_cli("report --in " + (tmp / "r1.json") + " --format csv --out " + (tmp / "r.csv"))
            .exit_code == 0);
  CHECK(fs::file_size(tmp / "r.md") > 0);
  CHECK(fs::file_size(tmp / "r.csv") > 0);
}
