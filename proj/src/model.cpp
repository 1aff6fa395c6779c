#include "anderson/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "anderson/rng.hpp"

namespace anderson {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace

SiteDistribution::SiteDistribution(Law law, double coupling) : law_(law), coupling_(coupling) {
  check_finite(coupling, "coupling");
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          check_finite(l.a, "uniform lower bound");
          check_finite(l.b, "uniform upper bound");
          if (l.a > l.b) throw std::invalid_argument("uniform bounds out of order (need a <= b)");
        } else if constexpr (std::is_same_v<T, Cantor>) {
          if (l.depth < 1 || l.depth > 1024)
            throw std::invalid_argument("cantor depth out of range (need 1 <= depth <= 1024)");
        } else {
          if (!(l.p >= 0.0 && l.p <= 1.0)) throw std::invalid_argument("probability out of range");
        }
      },
      law_);
}

SiteDistribution SiteDistribution::uniform(double a, double b, double coupling) {
  return SiteDistribution(Uniform{a, b}, coupling);
}
SiteDistribution SiteDistribution::cantor(int depth, double coupling) {
  return SiteDistribution(Cantor{depth}, coupling);
}
SiteDistribution SiteDistribution::bernoulli(double p, double coupling) {
  return SiteDistribution(Bernoulli{p}, coupling);
}

SiteDistribution SiteDistribution::with_coupling(double coupling) const {
  return SiteDistribution(law_, coupling);
}

std::optional<double> SiteDistribution::holder_exponent() const {
  if (const auto* u = std::get_if<Uniform>(&law_)) {
    if (u->a < u->b) return 1.0;
    return std::nullopt;
  }
  if (is_cantor()) return std::numbers::ln2 / std::log(3.0);
  return std::nullopt;
}

std::pair<double, double> SiteDistribution::support() const {
  if (const auto* u = std::get_if<Uniform>(&law_)) return {u->a, u->b};
  return {0.0, 1.0};
}

std::string SiteDistribution::to_string() const {
  std::string out = std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Uniform>)
          return "uniform:" + format_double(l.a) + "," + format_double(l.b);
        else if constexpr (std::is_same_v<T, Cantor>)
          return "cantor:" + std::to_string(l.depth);
        else
          return "bernoulli:" + format_double(l.p);
      },
      law_);
  if (coupling_ != 1.0) out += "@lambda=" + format_double(coupling_);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

DistributionParseError::DistributionParseError(std::size_t position, const std::string& message)
    : std::invalid_argument("at position " + std::to_string(position) + ": " + message),
      position_(position) {}

namespace {

double parse_number(std::size_t offset, std::string_view token) {
  if (token.empty()) throw DistributionParseError(offset, "expected a number");
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  // from_chars rejects a leading '+', which config files commonly carry.
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc::result_out_of_range)
    throw DistributionParseError(offset, "number out of range: '" + std::string(token) + "'");
  if (ec != std::errc() || ptr != last) {
    auto bad = offset + static_cast<std::size_t>(ptr - token.data());
    throw DistributionParseError(bad, "malformed number '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) throw DistributionParseError(offset, "number must be finite");
  return value;
}

}  // namespace

SiteDistribution parse_distribution(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw DistributionParseError(text.size(), "expected ':' after distribution kind");
  const std::string_view kind = text.substr(0, colon);

  std::string_view params = text.substr(colon + 1);
  const std::size_t params_at = colon + 1;
  double coupling = 1.0;
  const auto at = params.find('@');
  if (at != std::string_view::npos) {
    std::string_view suffix = params.substr(at + 1);
    const std::size_t suffix_at = params_at + at + 1;
    constexpr std::string_view key = "lambda=";
    if (suffix.substr(0, key.size()) != key)
      throw DistributionParseError(suffix_at, "expected 'lambda=' after '@'");
    coupling = parse_number(suffix_at + key.size(), suffix.substr(key.size()));
    params = params.substr(0, at);
  }

  try {
    if (kind == "uniform") {
      const auto comma = params.find(',');
      if (comma == std::string_view::npos)
        throw DistributionParseError(params_at + params.size(), "uniform expects 'a,b'");
      const double a = parse_number(params_at, params.substr(0, comma));
      const double b = parse_number(params_at + comma + 1, params.substr(comma + 1));
      if (a > b) throw DistributionParseError(params_at, "uniform bounds out of order (need a <= b)");
      return SiteDistribution::uniform(a, b, coupling);
    }
    if (kind == "cantor") {
      int depth = 0;
      auto [ptr, ec] = std::from_chars(params.data(), params.data() + params.size(), depth);
      if (params.empty() || ec != std::errc() || ptr != params.data() + params.size())
        throw DistributionParseError(params_at, "cantor depth must be a positive integer");
      if (depth < 1 || depth > 1024)
        throw DistributionParseError(params_at, "cantor depth out of range (need 1 <= depth <= 1024)");
      return SiteDistribution::cantor(depth, coupling);
    }
    if (kind == "bernoulli") {
      const double p = parse_number(params_at, params);
      if (!(p >= 0.0 && p <= 1.0)) throw DistributionParseError(params_at, "probability out of range");
      return SiteDistribution::bernoulli(p, coupling);
    }
  } catch (const DistributionParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw DistributionParseError(params_at, e.what());
  }
  throw DistributionParseError(0, "unknown distribution kind '" + std::string(kind) +
                                      "' (expected uniform, cantor or bernoulli)");
}

// ---------------------------------------------------------------------------
// Sampling

double draw_site(const SiteDistribution& dist, std::uint64_t master_seed,
                 std::uint64_t realization_index, std::uint64_t site) {
  const std::uint64_t word0 = counter_hash(master_seed, realization_index, site);
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return l.a + (l.b - l.a) * to_unit_interval(word0);
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          return to_unit_interval(word0) < l.p ? 1.0 : 0.0;
        } else {
          // sum_k 2 b_k 3^{-k}, accumulated from the finest digit up.
          double value = 0.0;
          double scale = std::pow(3.0, -l.depth);
          for (int k = l.depth; k >= 1; --k) {
            const int word = (k - 1) / 64;
            const std::uint64_t bits = word == 0 ? word0 : mix64(word0 ^ (0x9E3779B97F4A7C15ULL * word));
            if ((bits >> ((k - 1) % 64)) & 1U) value += 2.0 * scale;
            scale *= 3.0;
          }
          return value;
        }
      },
      dist.law());
}

PotentialSample sample_potential(const SiteDistribution& dist, std::size_t n,
                                 std::uint64_t master_seed, std::uint64_t realization_index) {
  if (n == 0) throw std::invalid_argument("potential length must be at least 1");
  PotentialSample out;
  out.master_seed = master_seed;
  out.realization_index = realization_index;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = draw_site(dist, master_seed, realization_index, i);
  return out;
}

double cdf(const SiteDistribution& dist, double x) {
  return std::visit(
      [x](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          if (x < l.a) return 0.0;
          if (x >= l.b) return 1.0;
          return (x - l.a) / (l.b - l.a);
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          if (x < 0.0) return 0.0;
          if (x < 1.0) return 1.0 - l.p;
          return 1.0;
        } else {
          if (x < 0.0) return 0.0;
          if (x >= 1.0) return 1.0;
          double mass_below = 0.0;
          double cell_mass = 0.5;
          double t = x;
          for (int k = 1; k <= l.depth; ++k) {
            t *= 3.0;
            const int digit = std::min(2, static_cast<int>(t));
            t -= digit;
            if (digit == 1) return mass_below + cell_mass;
            if (digit == 2) mass_below += cell_mass;
            cell_mass *= 0.5;
          }
          // x sits in a level-depth cell whose left endpoint is an atom.
          return mass_below + 2.0 * cell_mass;
        }
      },
      dist.law());
}

HolderCertificate holder_certificate(const SiteDistribution& dist, std::size_t interval_count) {
  if (!dist.holder_exponent()) throw std::domain_error("not Hölder regular");
  const int base = dist.is_cantor() ? 3 : 2;
  const auto [lo, hi] = dist.support();
  const double width = hi - lo;

  HolderCertificate cert;
  cert.beta_hat = std::numeric_limits<double>::infinity();
  struct Cell {
    double mass, length;
  };
  std::vector<Cell> cells;
  std::size_t per_level = static_cast<std::size_t>(base);
  for (int level = 1; per_level <= interval_count; ++level, per_level *= static_cast<std::size_t>(base)) {
    const double rel = 1.0 / static_cast<double>(per_level);
    for (std::size_t j = 0; j < per_level; ++j) {
      const double left = lo + width * (static_cast<double>(j) * rel);
      const double right = lo + width * (static_cast<double>(j + 1) * rel);
      const double mass = cdf(dist, right) - cdf(dist, left);
      if (mass <= 0.0) continue;
      cells.push_back({mass, rel});
      cert.beta_hat = std::min(cert.beta_hat, std::log(mass) / std::log(rel));
    }
    cert.levels = level;
  }
  if (cells.empty()) throw std::invalid_argument("interval_count too small to scan any level");
  for (const auto& c : cells)
    cert.worst_constant = std::max(cert.worst_constant, c.mass / std::pow(c.length, cert.beta_hat));
  return cert;
}

// ---------------------------------------------------------------------------
// Operator

TridiagonalOperator::TridiagonalOperator(std::vector<double> diagonal) : diagonal_(std::move(diagonal)) {
  if (diagonal_.empty()) throw std::invalid_argument("operator size must be at least 1");
  auto [mn, mx] = std::minmax_element(diagonal_.begin(), diagonal_.end());
  min_ = *mn;
  max_ = *mx;
}

double TridiagonalOperator::norm_bound() const noexcept {
  return std::max(std::abs(min_), std::abs(max_)) + 2.0;
}

TridiagonalOperator TridiagonalOperator::with_diagonal_entry(std::size_t site, double value) const {
  if (site >= size()) throw std::out_of_range("site index outside operator");
  auto d = diagonal_;
  d[site] = value;
  return TridiagonalOperator(std::move(d));
}

TridiagonalOperator TridiagonalOperator::restrict_to(std::size_t first, std::size_t last) const {
  if (first > last || last >= size()) throw std::out_of_range("restriction box outside operator");
  return TridiagonalOperator(std::vector<double>(diagonal_.begin() + static_cast<std::ptrdiff_t>(first),
                                                 diagonal_.begin() + static_cast<std::ptrdiff_t>(last) + 1));
}

void TridiagonalOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = diagonal_[i] * x[i];
    if (i > 0) v += x[i - 1];
    if (i + 1 < n) v += x[i + 1];
    y[i] = v;
  }
}

TridiagonalOperator assemble_operator(std::span<const double> potential, double coupling) {
  std::vector<double> d(potential.begin(), potential.end());
  for (auto& x : d) x *= coupling;
  return TridiagonalOperator(std::move(d));
}

TridiagonalOperator assemble_operator(const PotentialSample& potential, double coupling) {
  return assemble_operator(std::span<const double>(potential.values), coupling);
}

}  // namespace anderson
