#include "anderson/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "anderson/io.hpp"

namespace anderson {

namespace {

const std::vector<std::string> kSubcommands{"wegner", "minami", "count",      "two-ev",    "poisson",   "blocks",
                                            "dos",    "lyapunov", "separation", "repulsion", "interlace", "holder"};

bool is_slope_experiment(std::string_view sub) {
  return sub == "wegner" || sub == "minami" || sub == "two-ev" || sub == "holder";
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_real(std::string_view s) {
  std::string t = trim(s);
  std::string_view v = t;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x))
    throw std::invalid_argument("expected a finite number, got '" + t + "'");
  return x;
}

std::uint64_t parse_unsigned(std::string_view s) {
  const std::string t = trim(s);
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw std::invalid_argument("expected a nonnegative integer, got '" + t + "'");
  return x;
}

template <class T, class Parse>
std::vector<T> parse_list(std::string_view s, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(static_cast<T>(parse(item)));
  return out;
}

EnergyGrid parse_grid(std::string_view s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw std::invalid_argument("grid must be lower:upper:points");
  EnergyGrid g{parse_real(parts[0]), parse_real(parts[1]), static_cast<std::size_t>(parse_unsigned(parts[2]))};
  if (!(g.lower < g.upper)) throw std::invalid_argument("grid lower bound must be below the upper bound");
  if (g.points < 2) throw std::invalid_argument("grid needs at least two points");
  return g;
}

bool is_auto(std::string_view s) { return trim(s) == "auto" || trim(s).empty(); }

void apply_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "dist") {
    cfg.dist = parse_distribution(trim(value));
  } else if (key == "n") {
    cfg.n_list = parse_list<std::size_t>(value, parse_unsigned);
  } else if (key == "delta") {
    cfg.delta_list = is_auto(value) ? std::vector<double>{} : parse_list<double>(value, parse_real);
  } else if (key == "e0") {
    cfg.e0 = is_auto(value) ? std::nullopt : std::optional<double>(parse_real(value));
  } else if (key == "l") {
    cfg.window = parse_real(value);
  } else if (key == "r") {
    cfg.realizations = parse_unsigned(value);
  } else if (key == "seed") {
    cfg.master_seed = parse_unsigned(value);
  } else if (key == "k") {
    cfg.k = parse_real(value);
  } else if (key == "k1") {
    cfg.k1 = parse_real(value);
  } else if (key == "out") {
    cfg.output_path = trim(value);
  } else if (key == "workers") {
    cfg.workers = static_cast<unsigned>(parse_unsigned(value));
  } else if (key == "c1") {
    cfg.minami_c1 = parse_real(value);
  } else if (key == "threshold") {
    cfg.delta_threshold = is_auto(value) ? std::nullopt : std::optional<double>(parse_real(value));
  } else if (key == "quantiles") {
    cfg.quantiles = parse_list<double>(value, parse_real);
  } else if (key == "bandwidth") {
    cfg.dos_bandwidth = parse_real(value);
  } else if (key == "dos_r") {
    cfg.dos_realizations = parse_unsigned(value);
  } else if (key == "bootstrap") {
    cfg.bootstrap_resamples = parse_unsigned(value);
  } else if (key == "onset") {
    cfg.onset_factor = parse_real(value);
  } else if (key == "inner") {
    cfg.inner_samples = parse_unsigned(value);
  } else if (key == "grid") {
    cfg.grid = parse_grid(value);
  } else if (key == "steps") {
    cfg.lyapunov_steps = parse_unsigned(value);
  } else {
    throw std::out_of_range("unknown key '" + key + "'");
  }
}

std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::vector<double> EnergyGrid::values() const {
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i)
    v[i] = points == 1 ? lower
                       : lower + (upper - lower) * static_cast<double>(i) / static_cast<double>(points - 1);
  return v;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"dist",    "n",         "delta",     "e0",        "l",     "r",
                                             "seed",    "k",         "k1",        "out",       "workers", "c1",
                                             "threshold", "quantiles", "bandwidth", "dos_r",   "bootstrap",
                                             "onset",   "inner",     "grid",      "steps"};
  return keys;
}

double effective_e0(const ExperimentConfig& cfg) {
  if (cfg.e0) return *cfg.e0;
  const auto [lo, hi] = cfg.dist.support();
  return cfg.dist.coupling() * 0.5 * (lo + hi);
}

std::vector<double> default_deltas(std::string_view subcommand) {
  int first = 3, last = 8;
  if (subcommand == "wegner") first = 7, last = 12;
  if (subcommand == "holder") first = 2, last = 9;
  if (subcommand == "count") first = 6, last = 6;
  std::vector<double> out;
  for (int e = first; e <= last; ++e) out.push_back(std::ldexp(1.0, -e));
  return out;
}

std::string ConfigIssue::to_string() const {
  std::ostringstream s;
  if (line > 0) s << "line " << line << ", column " << column << ": ";
  if (!key.empty()) s << key << ": ";
  s << message;
  return s.str();
}

namespace {
std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid configuration";
  for (const auto& i : issues) out += "\n  " + i.to_string();
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<ConfigEntry> parse_config_text(std::string_view text, std::vector<ConfigIssue>& issues) {
  std::vector<ConfigEntry> out;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    if (!trim(line).empty()) {
      const auto eq = line.find('=');
      const auto first = line.find_first_not_of(" \t");
      if (eq == std::string_view::npos) {
        issues.push_back({line_no, first + 1, "", "expected key=value"});
      } else {
        const std::string key = trim(line.substr(0, eq));
        const auto vstart = line.find_first_not_of(" \t", eq + 1);
        const std::size_t vcol = (vstart == std::string_view::npos ? line.size() : vstart) + 1;
        if (key.empty()) {
          issues.push_back({line_no, first + 1, "", "missing key before '='"});
        } else {
          out.push_back({key, trim(line.substr(eq + 1)), line_no, vcol});
        }
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

LoadedConfig build_config(const std::vector<ConfigEntry>& file_entries, const std::vector<ConfigEntry>& overrides,
                          std::string_view subcommand) {
  std::vector<ConfigIssue> issues;
  LoadedConfig out;
  std::map<std::string, const ConfigEntry*> seen;
  const auto& keys = config_keys();
  auto apply_all = [&](const std::vector<ConfigEntry>& entries, bool from_file) {
    std::map<std::string, std::size_t> lines;
    for (const auto& e : entries) {
      if (std::find(keys.begin(), keys.end(), e.key) == keys.end()) {
        issues.push_back({e.line, e.column, e.key, "unknown key"});
        continue;
      }
      if (from_file) {
        const auto [it, fresh] = lines.emplace(e.key, e.line);
        if (!fresh) {
          issues.push_back({e.line, e.column, e.key, "duplicate key (first set on line " + std::to_string(it->second) + ")"});
          continue;
        }
      }
      try {
        apply_entry(out.config, e.key, e.value);
        seen[e.key] = &e;
      } catch (const DistributionParseError& err) {
        issues.push_back({e.line, e.column + err.position(), e.key, err.what()});
      } catch (const std::exception& err) {
        issues.push_back({e.line, e.column, e.key, err.what()});
      }
    }
  };
  apply_all(file_entries, true);
  apply_all(overrides, false);
  for (const auto& k : keys)
    if (!seen.count(k)) out.defaulted.push_back(k);

  if (!subcommand.empty() && std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
    issues.push_back({0, 0, "", "unknown subcommand '" + std::string(subcommand) + "'"});
  else
    for (auto issue : validate_config(out.config, subcommand)) {
      const auto it = seen.find(issue.key);
      if (it != seen.end()) {
        issue.line = it->second->line;
        issue.column = it->second->column;
      }
      issues.push_back(std::move(issue));
    }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  if (out.config.delta_list.empty()) out.config.delta_list = default_deltas(subcommand);
  return out;
}

std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg, std::string_view sub) {
  std::vector<ConfigIssue> issues;
  auto fail = [&](std::string key, std::string message) { issues.push_back({0, 0, std::move(key), std::move(message)}); };
  const auto deltas = cfg.delta_list.empty() ? default_deltas(sub) : cfg.delta_list;

  if (cfg.n_list.empty()) fail("n", "at least one N is required");
  for (auto n : cfg.n_list)
    if (n == 0) fail("n", "N must be at least 1");
  for (double d : deltas)
    if (!(d > 0.0)) fail("delta", "delta values must be positive");
  if (cfg.realizations == 0) fail("r", "R must be at least 1");
  if (!(cfg.window > 0.0)) fail("l", "window length must be positive");
  if (cfg.workers == 0) fail("workers", "at least one worker is required");
  if (!(cfg.k > 0.0) || !(cfg.k1 > 0.0)) fail(cfg.k > 0.0 ? "k1" : "k", "block multipliers must be positive");
  if (!(cfg.minami_c1 > 0.0)) fail("c1", "C1 must be positive");
  if (cfg.delta_threshold && !(*cfg.delta_threshold > 0.0)) fail("threshold", "threshold must be positive");
  if (cfg.quantiles.empty()) fail("quantiles", "at least one quantile level is required");
  for (double q : cfg.quantiles)
    if (!(q > 0.0 && q < 1.0)) fail("quantiles", "quantile levels must lie in (0, 1)");
  if (!(cfg.dos_bandwidth > 0.0)) fail("bandwidth", "bandwidth must be positive");
  if (cfg.dos_realizations == 0) fail("dos_r", "DOS realizations must be at least 1");
  if (cfg.inner_samples == 0) fail("inner", "inner samples must be at least 1");
  if (!(cfg.onset_factor >= 0.0)) fail("onset", "onset factor must be nonnegative");

  if (is_slope_experiment(sub)) {
    if (cfg.realizations < 100) fail("r", "slope fits require R >= 100");
    if (cfg.bootstrap_resamples < 100) fail("bootstrap", "slope fits require at least 100 bootstrap resamples");
    if (!deltas.empty()) {
      const auto [lo, hi] = std::minmax_element(deltas.begin(), deltas.end());
      if (*lo > 0.0 && *hi / *lo < std::pow(10.0, 1.5) * (1.0 - 1e-12))
        fail("delta", "scaling experiments need a delta sweep spanning at least 1.5 decades");
    }
  }
  if ((sub == "wegner" || sub == "minami" || sub == "two-ev") && !cfg.dist.holder_exponent())
    fail("dist", "this experiment requires a Hölder-regular law (uniform with a < b, or cantor)");
  if (sub == "minami" || sub == "two-ev") {
    for (auto n : cfg.n_list)
      for (double d : deltas)
        if (d > 0.0 && static_cast<double>(n) < cfg.minami_c1 * std::log(2.0 + 1.0 / d)) {
          fail("n", "N=" + std::to_string(n) + " is below C1*log(2+1/delta) = " +
                        format_double(cfg.minami_c1 * std::log(2.0 + 1.0 / d)) + " at delta=" + format_double(d));
        }
  }
  if (sub == "poisson" || sub == "blocks") {
    for (auto n : cfg.n_list)
      if (n < 500) fail("n", "local statistics require N >= 500");
    if (!(cfg.window >= 5.0 && cfg.window <= 50.0)) fail("l", "window length L must lie in [5, 50]");
    if (cfg.realizations < 1000) fail("r", "local statistics require R >= 1000");
  }
  if (sub == "blocks" && cfg.k < 8.0 * cfg.k1)
    fail("k", "partition constraint K >= 8*K1 violated (K=" + format_double(cfg.k) + ", K1=" + format_double(cfg.k1) + ")");
  if ((sub == "separation" || sub == "repulsion") && !cfg.dist.is_bernoulli())
    fail("dist", "this experiment requires a Bernoulli law");
  if (sub == "dos") {
    if (cfg.grid.points < 3) fail("grid", "the DOS needs at least three grid points");
    const double dx = (cfg.grid.upper - cfg.grid.lower) / static_cast<double>(std::max<std::size_t>(cfg.grid.points, 2) - 1);
    if (cfg.dos_bandwidth < 2.0 * dx * (1.0 - 1e-12)) fail("bandwidth", "bandwidth below twice the grid spacing");
  }
  if (sub == "lyapunov" && cfg.lyapunov_steps < 1000) fail("steps", "Lyapunov runs need at least 1000 steps");
  return issues;
}

std::vector<std::pair<std::string, std::string>> normalized_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string ns;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) ns += (i ? "," : "") + std::to_string(cfg.n_list[i]);
  out.emplace_back("dist", cfg.dist.to_string());
  out.emplace_back("n", ns);
  out.emplace_back("delta", cfg.delta_list.empty() ? "auto" : join_doubles(cfg.delta_list));
  out.emplace_back("e0", format_double(effective_e0(cfg)));
  out.emplace_back("l", format_double(cfg.window));
  out.emplace_back("r", std::to_string(cfg.realizations));
  out.emplace_back("seed", std::to_string(cfg.master_seed));
  out.emplace_back("k", format_double(cfg.k));
  out.emplace_back("k1", format_double(cfg.k1));
  out.emplace_back("out", cfg.output_path);
  out.emplace_back("workers", std::to_string(cfg.workers));
  out.emplace_back("c1", format_double(cfg.minami_c1));
  out.emplace_back("threshold", cfg.delta_threshold ? format_double(*cfg.delta_threshold) : "auto");
  out.emplace_back("quantiles", join_doubles(cfg.quantiles));
  out.emplace_back("bandwidth", format_double(cfg.dos_bandwidth));
  out.emplace_back("dos_r", std::to_string(cfg.dos_realizations));
  out.emplace_back("bootstrap", std::to_string(cfg.bootstrap_resamples));
  out.emplace_back("onset", format_double(cfg.onset_factor));
  out.emplace_back("inner", std::to_string(cfg.inner_samples));
  out.emplace_back("grid", format_double(cfg.grid.lower) + ":" + format_double(cfg.grid.upper) + ":" +
                               std::to_string(cfg.grid.points));
  out.emplace_back("steps", std::to_string(cfg.lyapunov_steps));
  return out;
}

std::string result_relevant_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : normalized_entries(cfg)) {
    if (k == "out" || k == "workers") continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string config_digest(const ExperimentConfig& cfg) { return io::git_blob_sha1(result_relevant_text(cfg)); }

}  // namespace anderson
