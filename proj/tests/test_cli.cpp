#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + BUZZLOAD_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("buzzload_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2, help with 0") {
    CHECK(run("--help") == 0);
    CHECK(run("simulate --params demo_buzz --events 10 --out /dev/null --bogus") == 2);
    CHECK(run("nonsense") == 2);
    CHECK(run("estimate --out /dev/null") == 2);
  }

  TEST_CASE("data errors exit with 1") {
    TempDir d;
    std::ofstream(d / "bad.csv") << "start,duration\n1,2\n3,abc\n";
    CHECK(run("ingest --sessions " + (d / "bad.csv") + " --out " + (d / "s.csv")) == 1);
    CHECK(run("simulate --params no_such_preset --events 10 --out " + (d / "t.csv")) == 1);
  }

  TEST_CASE("same seed and flags give byte-identical output") {
    TempDir d;
    const std::string base = "simulate --params demo_buzz --events 20000 --seed 5 --init mean --dt 0.5";
    REQUIRE(run(base + " --out " + (d / "a.csv") + " --series-out " + (d / "sa.csv")) == 0);
    REQUIRE(run(base + " --out " + (d / "b.csv") + " --series-out " + (d / "sb.csv")) == 0);
    CHECK(slurp(d / "a.csv") == slurp(d / "b.csv"));
    CHECK(slurp(d / "sa.csv") == slurp(d / "sb.csv"));
    CHECK(!slurp(d / "a.csv").empty());

    REQUIRE(run("estimate --trace " + (d / "a.csv") + " --mu-grid 0.001:0.6:20 --out " + (d / "e1.json")) == 0);
    REQUIRE(run("estimate --trace " + (d / "a.csv") + " --mu-grid 0.001:0.6:20 --out " + (d / "e2.json")) == 0);
    CHECK(slurp(d / "e1.json") == slurp(d / "e2.json"));
    const auto j = nlohmann::json::parse(slurp(d / "e1.json"));
    CHECK(j.contains("params_hat"));
  }

  TEST_CASE("theoretical spectrum feeds provisioning") {
    TempDir d;
    REQUIRE(run("spectrum --params demo_buzzfree --theoretical --out " + (d / "th.csv")) == 0);
    REQUIRE(run("provision --spectrum " + (d / "th.csv") + " --p-loss 1e-3 --buffer 10 --capacity 100 --out " +
                (d / "p.json")) == 0);
    const auto j = nlohmann::json::parse(slurp(d / "p.json"));
    CHECK(j.at("c0").get<double>() > 0.0);
    CHECK(j.at("residual_loss").get<double>() <= 1e-3);
    CHECK(j.at("servers").get<long long>() >= 0);
  }
}
