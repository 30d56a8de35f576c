#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "primescale/binary_io.hpp"
#include "primescale/error.hpp"
#include "primescale/numeric.hpp"
#include "primescale/primes.hpp"
#include "primescale/specfun.hpp"

namespace primescale {

// An off-line zeta-zero quartet at distance d from the critical line and
// height T above the real axis.
struct Injection {
  double d = 0.0;
  double T = 0.0;
  friend bool operator==(const Injection&, const Injection&) = default;
};

struct Provenance {
  std::size_t prime_count = 0;
  std::uint64_t cache_identity = 0;  // 0 when unknown (e.g. read back from disk)
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// b(i) = Li(p_i) - i for i = 1..count, possibly with a quartet injected.
class BSeries {
 public:
  BSeries() = default;
  BSeries(std::vector<double> values, Provenance provenance,
          std::optional<Injection> injection = std::nullopt)
      : values_(std::move(values)), provenance_(provenance), injection_(injection) {
    if (provenance_.prime_count != values_.size())
      throw UsageError("b-series length " + std::to_string(values_.size()) +
                       " differs from its prime count " + std::to_string(provenance_.prime_count));
  }

  std::size_t count() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  // 1-based, matching b(i).
  double operator()(std::size_t i) const noexcept { return values_[i - 1]; }
  const Provenance& provenance() const noexcept { return provenance_; }
  const std::optional<Injection>& injection() const noexcept { return injection_; }
  bool injected() const noexcept { return injection_.has_value(); }

  friend bool operator==(const BSeries&, const BSeries&) = default;

 private:
  std::vector<double> values_;
  Provenance provenance_;
  std::optional<Injection> injection_;
};

// Largest tolerated gap between the accumulated b(i) and a direct li(p_i) - i.
inline constexpr double kBSeriesSpotTolerance = 1e-4;

inline BSeries build_b_series(const PrimeCache& cache) {
  if (cache.empty()) throw UsageError("build_b_series needs a non-empty prime cache");
  const auto primes = cache.primes();
  std::vector<double> values(primes.size());
  CompensatedSum b;
  b.add(li(2.0));
  b.add(-1.0);
  values[0] = b.value();
  for (std::size_t i = 1; i < primes.size(); ++i) {
    b.add(li_increment(static_cast<double>(primes[i - 1]), static_cast<double>(primes[i])));
    b.add(-1.0);
    values[i] = b.value();
  }
  for (std::size_t i : {std::size_t{1}, std::max<std::size_t>(1, primes.size() / 2), primes.size()}) {
    const double direct = li(static_cast<double>(primes[i - 1])) - static_cast<double>(i);
    if (std::abs(direct - values[i - 1]) > kBSeriesSpotTolerance)
      throw NumericError("b-series accumulation drifted at i=" + std::to_string(i) + ": " +
                         std::to_string(values[i - 1]) + " vs direct " + std::to_string(direct));
  }
  return BSeries(std::move(values), {cache.count(), cache.identity()});
}

// Delta(m, n): the 2^m - 1 successive differences of b sampled at stride 2^n.
struct DiffSequence {
  int m = 0;
  int n = 0;
  std::vector<double> entries;
};

inline std::size_t required_count(int m, int n) {
  if (m < 0 || n < 0 || m + n > 62) throw UsageError("scale exponents out of range");
  return std::size_t{1} << (m + n);
}

inline DiffSequence delta_sequence(const BSeries& b, int m, int n) {
  if (m < 3) throw UsageError("delta_sequence needs m >= 3");
  if (n < 0) throw UsageError("delta_sequence needs n >= 0");
  const std::size_t need = required_count(m, n);
  if (need > b.count())
    throw RangeError("Delta(" + std::to_string(m) + "," + std::to_string(n) + ") needs " +
                         std::to_string(need) + " primes, series has " + std::to_string(b.count()),
                     need);
  const std::size_t stride = std::size_t{1} << n;
  const std::size_t len = (std::size_t{1} << m) - 1;
  DiffSequence out{m, n, std::vector<double>(len)};
  for (std::size_t j = 0; j < len; ++j) out.entries[j] = b((j + 2) * stride) - b((j + 1) * stride);
  return out;
}

// Added to b(i): 2 (p^d / T) sin(T ln p) scaled back by sqrt(p) / ln p.
inline double quartet_term(double p, const Injection& q) {
  const double lp = std::log(p);
  return 2.0 * std::pow(p, q.d) / q.T * std::sin(q.T * lp) * std::sqrt(p) / lp;
}

inline BSeries inject_quartet(const BSeries& b, const PrimeCache& cache, double d, double T) {
  if (b.injected()) throw UsageError("series already carries an injected quartet");
  if (!(d > 0.0 && d < 0.5)) throw DomainError("injection distance d must lie in (0, 1/2)");
  if (!(T > 0.0)) throw DomainError("injection height T must be positive");
  if (cache.count() != b.count())
    throw UsageError("prime cache holds " + std::to_string(cache.count()) +
                     " primes but the series has " + std::to_string(b.count()));
  const auto id = b.provenance().cache_identity;
  if (id != 0 && id != cache.identity())
    throw UsageError("prime cache does not match the series provenance");
  const Injection q{d, T};
  std::vector<double> values(b.values().begin(), b.values().end());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] += quartet_term(static_cast<double>(cache[i]), q);
  return BSeries(std::move(values), b.provenance(), q);
}

// Ordinates gamma of zeta zeros 1/2 + i gamma, ascending.
struct ZetaZeros {
  std::vector<double> gammas;
  std::size_t size() const noexcept { return gammas.size(); }
};

inline ZetaZeros parse_zeta_zeros(std::istream& is) {
  ZetaZeros out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view s = line;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) continue;
    double g = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), g);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(g))
      throw ParseError(ParseError::Code::NotNumeric, "zeta zero is not a number: '" + std::string(s) + "'",
                       lineno);
    if (!(g > 0.0))
      throw ParseError(ParseError::Code::NotPositive, "zeta zero ordinate must be positive", lineno);
    if (!out.gammas.empty() && g <= out.gammas.back())
      throw ParseError(ParseError::Code::Order, "zeta zeros must be strictly ascending", lineno);
    out.gammas.push_back(g);
  }
  return out;
}

inline ZetaZeros load_zeta_zeros(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open zeros file " + path.string());
  return parse_zeta_zeros(is);
}

// 1 + 2 sum over the first num_zeros ordinates of sin(gamma ln p) / gamma.
inline double explicit_formula_rhs(double p, const ZetaZeros& zeros, std::size_t num_zeros) {
  if (!(p >= 2.0)) throw DomainError("explicit_formula_rhs needs p >= 2");
  if (num_zeros > zeros.size())
    throw RangeError("requested " + std::to_string(num_zeros) + " zeros, table holds " +
                         std::to_string(zeros.size()),
                     num_zeros);
  const double lp = std::log(p);
  CompensatedSum sum;
  for (std::size_t z = 0; z < num_zeros; ++z) sum.add(std::sin(zeros.gammas[z] * lp) / zeros.gammas[z]);
  return 1.0 + 2.0 * sum.value();
}

// b(i) ln(p_i) / sqrt(p_i), the left-hand side of the explicit formula.
inline double normalized_b(double b, double p) { return b * std::log(p) / std::sqrt(p); }

inline constexpr char kBSeriesMagic[4] = {'B', 'S', 'E', 'R'};
inline constexpr std::uint32_t kBSeriesVersion = 1;
inline constexpr std::size_t kBSeriesHeaderBytes = 4 + 4 + 8 + 8 + 8 + 8;

// Layout: magic, u32 version, u64 count, u64 injection flag, f64 d, f64 T,
// then count f64 values; all little-endian.
inline void write_bseries(const BSeries& b, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(kBSeriesMagic, 4);
  detail::write_le<std::uint32_t>(os, kBSeriesVersion);
  detail::write_le<std::uint64_t>(os, b.count());
  detail::write_le<std::uint64_t>(os, b.injected() ? 1 : 0);
  detail::write_le<double>(os, b.injected() ? b.injection()->d : 0.0);
  detail::write_le<double>(os, b.injected() ? b.injection()->T : 0.0);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(b.values().data()),
             static_cast<std::streamsize>(b.count() * sizeof(double)));
  } else {
    for (double v : b.values()) detail::write_le(os, v);
  }
  if (!os) throw InputError("write failed for " + path.string());
}

inline BSeries read_bseries(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kBSeriesMagic))
    throw ParseError(ParseError::Code::BadMagic, path.string() + ": not a b-series file (bad magic)");
  std::uint32_t version = 0;
  std::uint64_t count = 0, flag = 0;
  double d = 0.0, T = 0.0;
  if (!detail::read_le(is, version) || !detail::read_le(is, count) || !detail::read_le(is, flag) ||
      !detail::read_le(is, d) || !detail::read_le(is, T))
    throw ParseError(ParseError::Code::Truncated, path.string() + ": truncated header");
  if (version != kBSeriesVersion)
    throw ParseError(ParseError::Code::BadVersion,
                     path.string() + ": unsupported b-series version " + std::to_string(version));
  if (flag > 1) throw ParseError(ParseError::Code::BadContent, path.string() + ": bad injection flag");
  const auto payload = std::filesystem::file_size(path) - kBSeriesHeaderBytes;
  if (payload != count * sizeof(double))
    throw ParseError(ParseError::Code::Truncated,
                     path.string() + ": header count " + std::to_string(count) +
                         " does not match payload of " + std::to_string(payload) + " bytes");
  std::vector<double> values(count);
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ParseError(ParseError::Code::Truncated, path.string() + ": short payload");
  if constexpr (std::endian::native == std::endian::big)
    for (auto& v : values) v = detail::from_le_bytes<double>(reinterpret_cast<char*>(&v));
  std::optional<Injection> injection;
  if (flag == 1) injection = Injection{d, T};
  return BSeries(std::move(values), {count, 0}, injection);
}

}  // namespace primescale
