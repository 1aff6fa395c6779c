#include "anderson/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <json.hpp>

#include "anderson/config.hpp"
#include "anderson/ensemble.hpp"
#include "anderson/io.hpp"

#ifndef ANDERSON_VERSION
#define ANDERSON_VERSION "0.0.0"
#endif

namespace anderson::cli {

namespace {

const std::vector<std::string> kCommands{"wegner",   "minami",     "count",     "two-ev",    "poisson", "blocks", "dos",
                                         "lyapunov", "separation", "repulsion", "interlace", "holder",  "validate"};

struct Options {
  std::string command;
  std::string positional;
  std::string config_path;
  std::string for_command;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;
  bool check = false;
  bool quiet = false;
};

std::vector<ConfigEntry> flag_entries(const Options& o) {
  std::vector<ConfigEntry> out;
  for (const auto& [k, v] : o.flags) out.push_back({k, v, 0, 0});
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError({{0, 0, "", "--set expects key=value, got '" + s + "'"}});
    out.push_back({s.substr(0, eq), s.substr(eq + 1), 0, 0});
  }
  return out;
}

LoadedConfig load(const Options& o, const std::string& subcommand) {
  std::vector<ConfigIssue> issues;
  std::vector<ConfigEntry> file_entries;
  if (!o.config_path.empty()) {
    std::string text;
    try {
      text = io::read_file(o.config_path);
    } catch (const std::exception& e) {
      throw ConfigError({{0, 0, "config", e.what()}});
    }
    file_entries = parse_config_text(text, issues);
  }
  try {
    auto loaded = build_config(file_entries, flag_entries(o), subcommand);
    if (!issues.empty()) throw ConfigError(issues);
    return loaded;
  } catch (const ConfigError& e) {
    issues.insert(issues.end(), e.issues().begin(), e.issues().end());
    throw ConfigError(issues);
  }
}

int validate(const Options& o, std::ostream& out, std::ostream& err) {
  Options opts = o;
  if (opts.config_path.empty()) opts.config_path = opts.positional;
  try {
    const auto loaded = load(opts, opts.for_command);
    out << "# normalized configuration" << (opts.for_command.empty() ? "" : " for " + opts.for_command) << "\n";
    for (const auto& [k, v] : normalized_entries(loaded.config)) out << k << "=" << v << "\n";
    if (!loaded.defaulted.empty()) {
      out << "# defaults filled:";
      for (const auto& k : loaded.defaulted) out << " " << k;
      out << "\n";
    }
    return kOk;
  } catch (const ConfigError& e) {
    for (const auto& i : e.issues()) err << "error: " << i.to_string() << "\n";
    return kConfigError;
  }
}

std::filesystem::path output_dir(const ExperimentConfig& cfg, const std::string& command) {
  if (!cfg.output_path.empty()) return cfg.output_path;
  return default_output_root() / (command + "-" + config_digest(cfg).substr(0, 12));
}

int execute(const Options& o, std::ostream& out, std::ostream& err) {
  LoadedConfig loaded;
  try {
    loaded = load(o, o.command);
  } catch (const ConfigError& e) {
    for (const auto& i : e.issues()) err << "error: " << i.to_string() << "\n";
    return kConfigError;
  }
  const auto& cfg = loaded.config;
  ExecutionContext ctx;
  ctx.workers = cfg.workers;
  if (!o.quiet) ctx.progress = [&err](std::size_t done, std::size_t total) { err << done << "/" << total << "\n"; };

  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult result;
  try {
    result = run_experiment(o.command, cfg, ctx);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto dir = output_dir(cfg, o.command);
  const std::string summary_json = summary_to_json(result.summary);
  nlohmann::ordered_json manifest;
  manifest["command"] = o.command;
  manifest["master_seed"] = cfg.master_seed;
  manifest["config_digest"] = config_digest(cfg);
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  for (const auto& [k, v] : normalized_entries(cfg)) echo[k] = v;
  manifest["config"] = echo;
  manifest["defaults_filled"] = loaded.defaulted;
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::object();
  try {
    io::write_file_atomic(dir / "summary.json", summary_json);
    artifacts["summary.json"] = io::git_blob_sha1(summary_json);
    for (const auto& [name, table] : result.tables) {
      const auto csv = io::to_csv(table);
      io::write_file_atomic(dir / name, csv);
      artifacts[name] = io::git_blob_sha1(csv);
    }
    manifest["artifacts"] = artifacts;
    manifest["summary_digest"] = io::git_blob_sha1(summary_json);
    manifest["timings"] = {{"started_unix", std::chrono::duration_cast<std::chrono::seconds>(started.time_since_epoch()).count()},
                           {"wall_seconds", elapsed}};
    manifest["versions"] = {{"anderson_spectra", ANDERSON_VERSION},
                            {"compiler", __VERSION__},
                            {"boost", BOOST_LIB_VERSION},
                            {"cplusplus", __cplusplus}};
    manifest["workers"] = cfg.workers;
    io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: writing artifacts to " << dir.string() << ": " << e.what() << "\n";
    return kFailure;
  }

  const bool passed = result.summary.all_checks_passed();
  if (o.quiet) {
    out << nlohmann::json{{"out", dir.string()}, {"checks_passed", passed}}.dump() << "\n";
  } else {
    out << o.command << ": wrote " << dir.string() << "\n";
    for (const auto& c : result.summary.checks)
      out << "  " << (c.passed ? "ok  " : "FAIL") << " " << c.name << " = " << format_double(c.value) << " in ["
          << format_double(c.lower) << ", " << format_double(c.upper) << "]\n";
  }
  if (o.check && !passed) return kCheckFailed;
  return kOk;
}

}  // namespace

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("ANDERSON_SPECTRA_OUT"); env && *env) return env;
  return "runs";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo experiments for one-dimensional Anderson models", "anderson_spectra"};
  Options o;
  std::string dist, n, delta, e0, l, r, seed, k, k1, grid, outdir, workers;
  app.add_option("command", o.command, "Subcommand")->required()->check(CLI::IsMember(kCommands));
  app.add_option("path", o.positional, "Config file (validate only)");
  app.add_option("--config", o.config_path, "key=value configuration file");
  app.add_option("--for", o.for_command, "Subcommand whose preconditions validate applies");
  app.add_option("--dist", dist, "Site law, e.g. uniform:0,1 or bernoulli:0.5@lambda=2");
  app.add_option("--n", n, "Comma-separated system sizes");
  app.add_option("--delta", delta, "Comma-separated half-widths");
  app.add_option("--e0", e0, "Window center");
  app.add_option("--l", l, "Rescaled window length L");
  app.add_option("--r", r, "Realizations");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--k", k, "Block multiplier K");
  app.add_option("--k1", k1, "Buffer multiplier K1");
  app.add_option("--grid", grid, "Energy grid lower:upper:points");
  app.add_option("--out", outdir, "Output directory");
  app.add_option("--workers", workers, "Worker threads");
  app.add_option("--set", o.sets, "Any config key as key=value (repeatable)");
  app.add_flag("--check", o.check, "Exit 3 when an acceptance threshold fails");
  app.add_flag("--quiet", o.quiet, "No progress; one JSON status line on stdout");
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::pair<const char*, std::string*> mapping[] = {
      {"dist", &dist}, {"n", &n},       {"delta", &delta}, {"e0", &e0},   {"l", &l},           {"r", &r},
      {"seed", &seed}, {"k", &k},       {"k1", &k1},       {"grid", &grid}, {"out", &outdir}, {"workers", &workers}};
  for (const auto& [key, value] : mapping)
    if (app.count(std::string("--") + key)) o.flags.emplace_back(key, *value);

  if (o.command == "validate") return validate(o, out, err);
  if (!o.positional.empty()) {
    err << "error: unexpected argument '" << o.positional << "'\n";
    return kConfigError;
  }
  return execute(o, out, err);
}

}  // namespace anderson::cli
