#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "jssl/data.hpp"
#include "jssl/simulation.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = JSSL_CLI_PATH;
const std::string kScenario = JSSL_SOURCE_DIR "/scenarios/dependent.json";

// Runs the CLI with `args` (and an optional environment prefix); returns its exit status.
int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct Workdir {
  fs::path path;
  explicit Workdir(const std::string& name) : path(fs::temp_directory_path() / ("jssl_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

// Comma-split lines; a trailing comma yields an empty last field.
std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

const char* kSingletonConfig = R"({
  "folds": 3, "repetitions": 1, "tau": 36, "seed": 4,
  "libraries": {
    "cause1": [{"kind": "nelson_aalen", "name": "NA"}],
    "cause2": [{"kind": "nelson_aalen", "name": "NA"}],
    "censoring": [{"kind": "cox", "name": "Cox"}]
  }
})";

// Covariate header and one row of zeros for the dependent scenario.
std::string query(const std::vector<double>& times) {
  const auto names = jssl::load_scenario(kScenario).covariate_names();
  std::string text = "row_id,t";
  for (const auto& n : names) text += "," + n;
  text += "\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::ostringstream row;
    row << "q" << i << ',' << times[i];
    for (std::size_t j = 0; j < names.size(); ++j) row << ",0";
    text += row.str() + "\n";
  }
  return text;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate is deterministic and honours JSSL_SEED") {
    Workdir w("simulate");
    REQUIRE(run("simulate --scenario " + kScenario + " --n 50 --seed 7 --out " + (w / "a.csv")) == 0);
    REQUIRE(run("simulate --scenario " + kScenario + " --n 50 --seed 7 --out " + (w / "b.csv")) == 0);
    CHECK(slurp(w / "a.csv") == slurp(w / "b.csv"));
    const auto d = jssl::load_dataset(w / "a.csv");
    CHECK(d.size() == 50);

    REQUIRE(run("simulate --scenario " + kScenario + " --n 50 --out " + (w / "env7.csv"), "JSSL_SEED=7") == 0);
    CHECK(slurp(w / "env7.csv") == slurp(w / "a.csv"));
    REQUIRE(run("simulate --scenario " + kScenario + " --n 50 --out " + (w / "env8.csv"), "JSSL_SEED=8") == 0);
    CHECK(slurp(w / "env8.csv") != slurp(w / "a.csv"));
    // the flag wins over the environment
    REQUIRE(run("simulate --scenario " + kScenario + " --n 50 --seed 7 --out " + (w / "flag.csv"), "JSSL_SEED=8") == 0);
    CHECK(slurp(w / "flag.csv") == slurp(w / "a.csv"));
  }

  TEST_CASE("usage errors exit with 2") {
    Workdir w("usage");
    CHECK(run("simulate --scenario " + kScenario + " --n 0 --out " + (w / "x.csv")) == 2);
    CHECK(run("simulate --n 5") == 2);
    CHECK(run("no-such-command") == 2);
    CHECK(run("simulate --scenario " + kScenario + " --n 5 --out " + (w / "x.csv"), "JSSL_SEED=abc") == 2);
    CHECK(run("--help") == 0);
  }

  TEST_CASE("data and schema errors exit with 3") {
    Workdir w("data");
    write_file(w / "bad.csv", "time,x\n1,2\n");
    write_file(w / "config.json", kSingletonConfig);
    CHECK(run("select --data " + (w / "bad.csv") + " --config " + (w / "config.json") + " --table " + (w / "t.csv") +
              " --manifest " + (w / "m.json")) == 3);
    write_file(w / "broken.json", "{ not json");
    CHECK(run("benchmark --config " + (w / "broken.json")) == 3);
  }

  TEST_CASE("select, then predict round trip") {
    Workdir w("roundtrip");
    write_file(w / "config.json", kSingletonConfig);
    REQUIRE(run("simulate --scenario " + kScenario + " --n 150 --seed 3 --out " + (w / "data.csv")) == 0);
    REQUIRE(run("select --data " + (w / "data.csv") + " --config " + (w / "config.json") + " --table " +
                (w / "table.csv") + " --manifest " + (w / "manifest.json")) == 0);
    const auto table = slurp(w / "table.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 2);  // header and one triple
    const auto manifest = nlohmann::json::parse(slurp(w / "manifest.json"));
    CHECK(manifest.contains("tau"));

    write_file(w / "query.csv", query({0.0, 12.0, 36.0}));
    REQUIRE(run("predict --manifest " + (w / "manifest.json") + " --query " + (w / "query.csv") + " --out " +
                (w / "pred.csv")) == 0);
    const auto rows = csv_rows(w / "pred.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[0][0] == "row_id");
    CHECK(std::stod(rows[1][2]) == 0.0);  // no risk at t = 0
    double previous = 0.0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const double risk = std::stod(rows[r][2]);
      CHECK(risk >= previous);
      CHECK(risk >= 0.0);
      CHECK(risk <= 1.0);
      previous = risk;
    }

    write_file(w / "late.csv", query({10.0, 40.0}));
    CHECK(run("predict --manifest " + (w / "manifest.json") + " --query " + (w / "late.csv") + " --out " +
              (w / "late_pred.csv")) == 3);
    const auto late = csv_rows(w / "late_pred.csv");
    REQUIRE(late.size() == 3);
    CHECK(late[1].back().empty());
    CHECK(late[2][2] == "NA");
    CHECK(!late[2].back().empty());
  }
}
