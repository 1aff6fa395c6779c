#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "anderson/ensemble.hpp"
#include "anderson/rng.hpp"
#include "anderson/spectral.hpp"
#include "anderson/transfer.hpp"

namespace anderson {

using ordered_json = nlohmann::ordered_json;

bool EnsembleSummary::all_checks_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const SlopeEstimate* EnsembleSummary::find_slope(std::string_view name, std::size_t n, double delta) const {
  for (const auto& s : slopes)
    if (s.name == name && s.n == n && s.delta == delta) return &s;
  return nullptr;
}

const Check* EnsembleSummary::find_check(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

double EnsembleSummary::constant(std::string_view name) const {
  for (const auto& [k, v] : constants)
    if (k == name) return v;
  throw std::out_of_range("no constant named " + std::string(name));
}

namespace detail {

EnsembleSummary make_summary(std::string experiment, const ExperimentConfig& cfg) {
  EnsembleSummary s;
  s.experiment = std::move(experiment);
  s.master_seed = cfg.master_seed;
  s.config_digest = config_digest(cfg);
  for (auto& kv : normalized_entries(cfg))
    if (kv.first != "out" && kv.first != "workers") s.config.push_back(std::move(kv));
  return s;
}

void add_check(EnsembleSummary& s, std::string name, double value, double lower, double upper) {
  s.checks.push_back({std::move(name), value, lower, upper, value >= lower && value <= upper});
}

SlopeEstimate to_slope(std::string name, std::string variable, std::size_t n, double delta,
                       const stats::SlopeFit& fit) {
  return {std::move(name), std::move(variable), n,       delta, fit.slope, fit.intercept, fit.ci_low,
          fit.ci_high,     fit.points,          fit.resamples_used};
}

}  // namespace detail

namespace {

ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

std::string summary_to_json(const EnsembleSummary& s) {
  ordered_json j;
  j["experiment"] = s.experiment;
  j["master_seed"] = s.master_seed;
  j["config_digest"] = s.config_digest;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : s.config) cfg[k] = v;
  j["config"] = cfg;
  ordered_json est = ordered_json::array();
  for (const auto& e : s.estimates)
    est.push_back({{"quantity", e.quantity},
                   {"n", e.n},
                   {"delta", number(e.delta)},
                   {"value", number(e.value)},
                   {"stderr", number(e.standard_error)},
                   {"realizations", e.realizations}});
  j["estimates"] = est;
  ordered_json slopes = ordered_json::array();
  for (const auto& sl : s.slopes)
    slopes.push_back({{"name", sl.name},
                      {"variable", sl.variable},
                      {"n", sl.n},
                      {"delta", number(sl.delta)},
                      {"slope", number(sl.slope)},
                      {"intercept", number(sl.intercept)},
                      {"ci_low", number(sl.ci_low)},
                      {"ci_high", number(sl.ci_high)},
                      {"points", sl.points},
                      {"resamples_used", sl.resamples_used}});
  j["slopes"] = slopes;
  ordered_json constants = ordered_json::object();
  for (const auto& [k, v] : s.constants) constants[k] = number(v);
  j["constants"] = constants;
  ordered_json checks = ordered_json::array();
  for (const auto& c : s.checks)
    checks.push_back({{"name", c.name},
                      {"value", number(c.value)},
                      {"lower", number(c.lower)},
                      {"upper", number(c.upper)},
                      {"passed", c.passed}});
  j["checks"] = checks;
  j["notes"] = s.notes;
  return j.dump(2) + "\n";
}

std::string canonical_json(std::string_view json_text) { return ordered_json::parse(json_text).dump(2) + "\n"; }

ExperimentResult dos_run(const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  const std::size_t n = cfg.n_list.front();
  const auto grid = cfg.grid.values();
  const auto ids = estimate_ids(cfg.dist, n, grid, cfg.realizations, cfg.master_seed, ctx);
  const auto dos = estimate_dos(ids, cfg.dos_bandwidth);

  ExperimentResult out;
  auto& s = out.summary = detail::make_summary("dos", cfg);
  io::CsvTable data{{"E", "ids", "ids_stderr", "dos", "dos_stderr"}, {}};
  io::CsvTable ids_table{{"E", "value", "stderr"}, {}};
  io::CsvTable dos_table{{"E", "value", "stderr"}, {}};
  bool monotone = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    data.add_numeric_row({grid[i], ids.values[i], ids.standard_errors[i], dos.k_values[i], dos.standard_errors[i]});
    ids_table.add_numeric_row({grid[i], ids.values[i], ids.standard_errors[i]});
    dos_table.add_numeric_row({grid[i], dos.k_values[i], dos.standard_errors[i]});
    if (i > 0 && ids.values[i] < ids.values[i - 1]) monotone = false;
  }
  const double increment = ids.values.back() - ids.values.front();
  const double integral = integrate_dos(dos);
  s.constants.emplace_back("ids_increment", increment);
  s.constants.emplace_back("dos_integral", integral);
  s.constants.emplace_back("clipped_mass", dos.clipped_mass);
  detail::add_check(s, "ids_monotone", monotone ? 1.0 : 0.0, 1.0, 1.0);
  if (increment > 0.0)
    detail::add_check(s, "dos_integral_relative_error", std::abs(integral - increment) / increment, 0.0, 0.02);
  out.tables.emplace_back("data.csv", std::move(data));
  out.tables.emplace_back("ids.csv", std::move(ids_table));
  out.tables.emplace_back("dos.csv", std::move(dos_table));
  return out;
}

ExperimentResult lyapunov_run(const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  const auto grid = cfg.grid.values();
  ExperimentResult out;
  auto& s = out.summary = detail::make_summary("lyapunov", cfg);
  io::CsvTable data{{"E", "gamma", "stderr"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // Every energy uses its own stream so that adding grid points leaves the others unchanged.
    const auto est = lyapunov_exponent(cfg.dist, grid[i], cfg.lyapunov_steps, cfg.realizations,
                                       counter_hash(cfg.master_seed, 0x4C59, std::bit_cast<std::uint64_t>(grid[i])),
                                       ctx);
    data.add_numeric_row({grid[i], est.gamma, est.standard_error});
    s.estimates.push_back({"gamma", 0, 0.0, est.gamma, est.standard_error, cfg.realizations});
  }
  out.tables.emplace_back("data.csv", std::move(data));
  return out;
}

ExperimentResult holder_run(const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  const std::size_t n = cfg.n_list.front();
  const auto fit = holder_exponent_of_ids(cfg.dist, n, cfg.grid.lower, cfg.grid.upper, cfg.delta_list,
                                          cfg.realizations, cfg.master_seed, ctx);
  ExperimentResult out;
  auto& s = out.summary = detail::make_summary("holder", cfg);
  io::CsvTable data{{"delta", "sup_mass", "stderr"}, {}};
  for (std::size_t i = 0; i < fit.deltas.size(); ++i) {
    data.add_numeric_row({fit.deltas[i], fit.sup_mass[i], fit.standard_errors[i]});
    s.estimates.push_back({"sup_window_mass", n, fit.deltas[i], fit.sup_mass[i], fit.standard_errors[i],
                           cfg.realizations});
  }
  s.slopes.push_back({"ids_holder_exponent", "delta", n, 0.0, fit.gamma_hat, 0.0, fit.ci_low, fit.ci_high,
                      fit.deltas.size(), 0});
  s.constants.emplace_back("gamma_hat", fit.gamma_hat);
  detail::add_check(s, "gamma_hat_range", fit.gamma_hat, std::numeric_limits<double>::min(), 1.05);
  out.tables.emplace_back("data.csv", std::move(data));
  return out;
}

ExperimentResult run_experiment(std::string_view sub, const ExperimentConfig& cfg, const ExecutionContext& ctx) {
  if (sub == "wegner") return wegner_probability(cfg, ctx);
  if (sub == "minami") return minami_moment(cfg, ctx);
  if (sub == "count") return expected_count(cfg, ctx);
  if (sub == "two-ev") return two_eigenvalue_probability(cfg, ctx);
  if (sub == "poisson") return poisson_local_statistics(cfg, ctx).result;
  if (sub == "blocks") return independent_block_process(cfg, ctx).result;
  if (sub == "dos") return dos_run(cfg, ctx);
  if (sub == "lyapunov") return lyapunov_run(cfg, ctx);
  if (sub == "separation") return bernoulli_min_spacing(cfg, ctx);
  if (sub == "repulsion") return repulsion_scatter(cfg, ctx).result;
  if (sub == "interlace") return interlacing_property_run(cfg, ctx).result;
  if (sub == "holder") return holder_run(cfg, ctx);
  throw std::invalid_argument("unknown subcommand '" + std::string(sub) + "'");
}

}  // namespace anderson
