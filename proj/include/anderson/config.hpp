#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anderson/model.hpp"

namespace anderson {

/// Uniform energy grid `lower:upper:points`.
struct EnergyGrid {
  double lower = -3.0;
  double upper = 3.0;
  std::size_t points = 601;
  std::vector<double> values() const;
  friend bool operator==(const EnergyGrid&, const EnergyGrid&) = default;
};

struct ExperimentConfig {
  SiteDistribution dist = SiteDistribution::uniform(0.0, 1.0);
  std::vector<std::size_t> n_list{1000};
  /// Empty means the experiment's default sweep.
  std::vector<double> delta_list;
  /// Empty means the center of the diagonal's range.
  std::optional<double> e0;
  double window = 20.0;
  std::size_t realizations = 1000;
  std::uint64_t master_seed = 1;
  double k = 16.0;
  double k1 = 1.0;
  std::string output_path;
  unsigned workers = 1;

  double minami_c1 = 10.0;
  /// Close-pair threshold for repulsion runs; empty means N^-3.
  std::optional<double> delta_threshold;
  std::vector<double> quantiles{0.5, 0.9, 0.99};
  double dos_bandwidth = 0.05;
  std::size_t dos_realizations = 400;
  std::size_t bootstrap_resamples = 1000;
  double onset_factor = 3.0;
  std::size_t inner_samples = 16;
  EnergyGrid grid;
  std::size_t lyapunov_steps = 100000;
};

/// Configuration keys in their canonical order.
const std::vector<std::string>& config_keys();

/// Energy the windowed experiments center on.
double effective_e0(const ExperimentConfig& cfg);

/// Default delta sweep for a subcommand when `delta` is not given.
std::vector<double> default_deltas(std::string_view subcommand);

struct ConfigIssue {
  std::size_t line = 0;    // 1-based, 0 for flags and whole-config checks
  std::size_t column = 0;  // 1-based
  std::string key;
  std::string message;
  std::string to_string() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// One `key=value` assignment with the position of its value.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Splits flat `key=value` text. Blank lines and `#` comments are skipped.
/// Syntax problems are appended to `issues`.
std::vector<ConfigEntry> parse_config_text(std::string_view text, std::vector<ConfigIssue>& issues);

struct LoadedConfig {
  ExperimentConfig config;
  /// Keys that were filled from defaults.
  std::vector<std::string> defaulted;
};

/// Applies file entries, then overrides (flags win), then validates against
/// the subcommand. Every problem is collected before throwing ConfigError.
LoadedConfig build_config(const std::vector<ConfigEntry>& file_entries, const std::vector<ConfigEntry>& overrides,
                          std::string_view subcommand);

/// Subcommand-specific preconditions.
std::vector<ConfigIssue> validate_config(const ExperimentConfig& cfg, std::string_view subcommand);

/// Canonical `key=value` pairs with every default filled in.
std::vector<std::pair<std::string, std::string>> normalized_entries(const ExperimentConfig& cfg);

/// Normalized text without the keys that cannot change results (`out`, `workers`).
std::string result_relevant_text(const ExperimentConfig& cfg);

/// Git-style blob SHA-1 of result_relevant_text.
std::string config_digest(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace anderson
