#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anderson/cli.hpp"
#include "anderson/ensemble.hpp"
#include "anderson/io.hpp"

namespace fs = std::filesystem;
using anderson::cli::run;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "anderson_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::vector<std::string> csv_lines(const fs::path& path) {
  std::istringstream in(anderson::io::read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("poisson run writes reproducible artifacts") {
    const auto a = scratch("p1");
    const auto b = scratch("p2");
    const std::vector<std::string> base{"poisson", "--dist", "uniform:0,1", "--n", "1000", "--l", "20",
                                        "--r",     "2000",   "--seed",      "7"};
    auto args = base;
    args.insert(args.end(), {"--out", a.string(), "--quiet"});
    const auto first = invoke(args);
    CHECK(first.code == 0);
    for (const char* f : {"summary.json", "data.csv", "manifest.json"}) CHECK(fs::exists(a / f));
    const auto status = nlohmann::json::parse(first.out);
    CHECK(status["out"] == a.string());
    CHECK(status["checks_passed"].is_boolean());

    args = base;
    args.insert(args.end(), {"--out", b.string(), "--quiet", "--workers", "2"});
    CHECK(invoke(args).code == 0);
    const auto ma = nlohmann::json::parse(anderson::io::read_file(a / "manifest.json"));
    const auto mb = nlohmann::json::parse(anderson::io::read_file(b / "manifest.json"));
    CHECK(ma["summary_digest"] == mb["summary_digest"]);
    CHECK(ma["config_digest"] == mb["config_digest"]);
    CHECK(anderson::io::read_file(a / "data.csv") == anderson::io::read_file(b / "data.csv"));
    const auto summary = anderson::io::read_file(a / "summary.json");
    CHECK(anderson::canonical_json(summary) == summary);
  }

  TEST_CASE("failed acceptance thresholds exit 3 only with --check") {
    // A sweep of wide windows saturates the Wegner probability, so the delta slope falls below 0.8.
    const auto dir = scratch("w");
    const std::vector<std::string> args{"wegner", "--n",   "100", "--delta", "0.5,0.25,0.125,0.0625,0.03125,0.015625",
                                        "--r",    "200",   "--out", dir.string(), "--quiet"};
    CHECK(invoke(args).code == 0);
    auto checked = args;
    checked.push_back("--check");
    const auto r = invoke(checked);
    CHECK(r.code == 3);
    CHECK(nlohmann::json::parse(r.out)["checks_passed"] == false);
  }

  TEST_CASE("dos run exports the grid") {
    const auto dir = scratch("dos");
    const auto r = invoke({"dos", "--dist", "uniform:0,1", "--n", "1000", "--grid", "-3:3:601", "--r", "200", "--out",
                           dir.string(), "--quiet"});
    REQUIRE(r.code == 0);
    const auto lines = csv_lines(dir / "data.csv");
    REQUIRE(lines.size() == 602);
    CHECK(lines[0] == "E,ids,ids_stderr,dos,dos_stderr");
    double prev = -1.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto first = lines[i].find(',');
      const auto second = lines[i].find(',', first + 1);
      const double ids = std::stod(lines[i].substr(first + 1, second - first - 1));
      CHECK(ids >= prev);
      prev = ids;
    }
  }

  TEST_CASE("artifacts default to the environment output root") {
    const auto root = scratch("root");
    ::setenv("ANDERSON_SPECTRA_OUT", root.string().c_str(), 1);
    const auto r = invoke({"interlace", "--r", "50", "--quiet"});
    ::unsetenv("ANDERSON_SPECTRA_OUT");
    REQUIRE(r.code == 0);
    const fs::path out = nlohmann::json::parse(r.out)["out"].get<std::string>();
    CHECK(out.parent_path() == root);
    CHECK(out.filename().string().rfind("interlace-", 0) == 0);
    CHECK(out.filename().string().size() == std::string("interlace-").size() + 12);
    CHECK(fs::exists(out / "manifest.json"));
  }

  TEST_CASE("configuration errors exit 2") {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    const auto path = dir / "bad.cfg";
    anderson::io::write_file_atomic(path, "dist=uniform:0,1\nmystery=1\nother=2\n");
    const auto r = invoke({"dos", "--config", path.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("mystery: unknown key") != std::string::npos);
    CHECK(r.err.find("other: unknown key") != std::string::npos);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"dos", "--set", "nothing"}).code == 2);
    CHECK(invoke({"dos", "--r", "abc"}).code == 2);
  }

  TEST_CASE("validate prints the normalized configuration") {
    const auto dir = scratch("validate");
    fs::create_directories(dir);
    const auto path = dir / "ok.cfg";
    anderson::io::write_file_atomic(path, "dist=bernoulli:0.5\nn=100,200\n");
    const auto ok = invoke({"validate", path.string()});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("r=1000\n") != std::string::npos);
    CHECK(ok.out.find("# defaults filled:") != std::string::npos);
    CHECK(ok.out.find(" r") != std::string::npos);

    anderson::io::write_file_atomic(path, "dist=bernoulli:1.5\n");
    const auto bad = invoke({"validate", path.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("probability out of range") != std::string::npos);
    CHECK(bad.err.find("line 1") != std::string::npos);

    anderson::io::write_file_atomic(path, "n=1000\nr=1000\nk=4\nk1=1\n");
    const auto blocks = invoke({"validate", path.string(), "--for", "blocks"});
    CHECK(blocks.code == 2);
    CHECK(blocks.err.find("partition constraint") != std::string::npos);
    CHECK(invoke({"validate", path.string()}).code == 0);
  }

  TEST_CASE("runtime failures exit 1") {
    // Too few realizations hit a narrow window for the Poisson diagnostics.
    const auto dir = scratch("fail");
    const auto r = invoke({"poisson", "--dist", "uniform:0,1", "--n", "500", "--l", "5", "--r", "1000", "--e0", "50",
                           "--out", dir.string(), "--quiet"});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
  }
}
