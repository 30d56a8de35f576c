#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "primescale/binary_io.hpp"
#include "primescale/error.hpp"
#include "primescale/numeric.hpp"

namespace primescale {

struct SieveConfig {
  // Maximum number of odd-number flags sieved in one segment.
  std::size_t segment_budget = std::size_t{1} << 20;
  // Worker count for multi-segment sieving; 0 means hardware concurrency.
  unsigned threads = 1;
};

inline constexpr std::uint64_t kSieveLimit = std::uint64_t{1} << 63;

inline std::uint64_t isqrt(std::uint64_t x) noexcept {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(x)));
  while (r > 0 && r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

// Odd primes up to and including `limit` by a plain odd-only sieve.
inline std::vector<std::uint32_t> odd_primes_upto(std::uint32_t limit) {
  std::vector<std::uint32_t> out;
  if (limit < 3) return out;
  const std::size_t flags = (static_cast<std::size_t>(limit) - 1) / 2;  // 3, 5, ..., limit
  std::vector<std::uint8_t> composite(flags, 0);
  for (std::size_t i = 0; i < flags; ++i) {
    if (composite[i]) continue;
    const std::uint64_t p = 2 * i + 3;
    out.push_back(static_cast<std::uint32_t>(p));
    for (std::uint64_t j = (p * p - 3) / 2; j < flags; j += p) composite[j] = 1;
  }
  return out;
}

// Segmented odd-only sieve of Eratosthenes. The base primes up to sqrt(limit)
// are computed once; each segment() call is independent and thread-safe.
class SegmentedSieve {
 public:
  explicit SegmentedSieve(std::uint64_t limit, SieveConfig config = {})
      : limit_(limit), config_(config) {
    if (limit > kSieveLimit) throw ConfigError("sieve limit exceeds 2^63");
    if (config.segment_budget == 0) throw ConfigError("segment budget must be positive");
    base_ = odd_primes_upto(static_cast<std::uint32_t>(isqrt(limit)));
  }

  std::uint64_t limit() const noexcept { return limit_; }
  const SieveConfig& config() const noexcept { return config_; }

  // Primes in [lo, hi), ascending. The range must fit one segment budget.
  std::vector<std::uint64_t> segment(std::uint64_t lo, std::uint64_t hi) const {
    if (hi > limit_) throw ConfigError("segment end exceeds sieve limit " + std::to_string(limit_));
    std::vector<std::uint64_t> out;
    if (lo >= hi) return out;
    const std::uint64_t odd_count = (hi - lo + 1) / 2;
    if (odd_count > config_.segment_budget)
      throw ConfigError("segment [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        ") needs " + std::to_string(odd_count) + " flags, budget is " +
                        std::to_string(config_.segment_budget));
    if (lo <= 2 && 2 < hi) out.push_back(2);
    const std::uint64_t first = lo | 1;
    if (first >= hi) return out;
    const std::size_t flags = static_cast<std::size_t>((hi - first + 1) / 2);
    std::vector<std::uint8_t> composite(flags, 0);
    if (first == 1) composite[0] = 1;
    for (std::uint32_t p32 : base_) {
      const std::uint64_t p = p32;
      const std::uint64_t sq = p * p;
      if (sq >= hi) break;
      std::uint64_t start = sq;
      if (start < first) {
        start = (first + p - 1) / p * p;
        if ((start & 1) == 0) start += p;
      }
      for (std::uint64_t j = (start - first) / 2; j < flags; j += p) composite[j] = 1;
    }
    out.reserve(out.size() + flags / 8);
    for (std::size_t j = 0; j < flags; ++j)
      if (!composite[j]) out.push_back(first + 2 * j);
    return out;
  }

  // Primes in [lo, hi) over as many segments as needed. Segments run
  // concurrently and are merged in ascending order.
  std::vector<std::uint64_t> range(std::uint64_t lo, std::uint64_t hi) const {
    std::vector<std::uint64_t> out;
    if (lo >= hi) return out;
    const std::uint64_t span = 2 * config_.segment_budget;
    const std::size_t pieces = static_cast<std::size_t>((hi - lo + span - 1) / span);
    std::vector<std::vector<std::uint64_t>> parts(pieces);
    parallel_for(pieces, config_.threads, [&](std::size_t i) {
      const std::uint64_t a = lo + i * span;
      parts[i] = segment(a, std::min(hi, a + span));
    });
    for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
    return out;
  }

 private:
  std::uint64_t limit_;
  SieveConfig config_;
  std::vector<std::uint32_t> base_;
};

inline std::vector<std::uint64_t> sieve_segment(std::uint64_t lo, std::uint64_t hi,
                                                const SieveConfig& config = {}) {
  if (hi > kSieveLimit) throw ConfigError("sieve limit exceeds 2^63");
  return SegmentedSieve(hi, config).segment(lo, hi);
}

inline std::vector<std::uint64_t> sieve_range(std::uint64_t lo, std::uint64_t hi,
                                              const SieveConfig& config = {}) {
  return SegmentedSieve(hi, config).range(lo, hi);
}

// The first `count` primes, ascending. Immutable; copies share storage.
class PrimeCache {
 public:
  PrimeCache() : data_(std::make_shared<const std::vector<std::uint64_t>>()) {}

  // Takes ownership of an ascending prime list. Only the cheap structural
  // invariants (leading 2, strict increase) are checked here.
  explicit PrimeCache(std::vector<std::uint64_t> primes) {
    if (!primes.empty() && primes.front() != 2)
      throw ParseError(ParseError::Code::BadContent, "prime sequence must start at 2");
    for (std::size_t i = 1; i < primes.size(); ++i)
      if (primes[i] <= primes[i - 1])
        throw ParseError(ParseError::Code::NonMonotone,
                         "prime sequence not strictly increasing at index " + std::to_string(i));
    identity_ = word_hash(primes);
    data_ = std::make_shared<const std::vector<std::uint64_t>>(std::move(primes));
  }

  std::size_t count() const noexcept { return data_->size(); }
  bool empty() const noexcept { return data_->empty(); }
  std::span<const std::uint64_t> primes() const noexcept { return *data_; }
  // 0-based access: cache[0] == 2.
  std::uint64_t operator[](std::size_t index) const noexcept { return (*data_)[index]; }
  // 1-based access matching p_i.
  std::uint64_t prime(std::size_t i) const noexcept { return (*data_)[i - 1]; }
  std::uint64_t back() const noexcept { return data_->back(); }
  std::uint64_t identity() const noexcept { return identity_; }

  // Number of cached primes <= x; equals pi(x) whenever x <= back().
  std::size_t pi(std::uint64_t x) const noexcept {
    return static_cast<std::size_t>(std::upper_bound(data_->begin(), data_->end(), x) -
                                    data_->begin());
  }

  PrimeCache prefix(std::size_t n) const {
    if (n > count())
      throw RangeError("prefix of " + std::to_string(n) + " primes requested from a cache of " +
                           std::to_string(count()),
                       n);
    return PrimeCache(std::vector<std::uint64_t>(data_->begin(), data_->begin() + n));
  }

  friend bool operator==(const PrimeCache& a, const PrimeCache& b) {
    return a.data_ == b.data_ || *a.data_ == *b.data_;
  }

 private:
  std::shared_ptr<const std::vector<std::uint64_t>> data_;
  std::uint64_t identity_ = word_hash({});
};

// Rosser's bound p_n < n(ln n + ln ln n), valid for n >= 6.
inline std::uint64_t nth_prime_upper_bound(std::uint64_t n) noexcept {
  if (n < 6) return 15;
  const double x = static_cast<double>(n);
  return static_cast<std::uint64_t>(std::ceil(x * (std::log(x) + std::log(std::log(x))))) + 3;
}

inline PrimeCache first_n_primes(std::size_t n, const SieveConfig& config = {}) {
  if (n == 0) throw UsageError("first_n_primes needs n >= 1");
  std::vector<std::uint64_t> primes;
  primes.reserve(n);
  std::uint64_t lo = 2;
  std::uint64_t limit = nth_prime_upper_bound(n);
  const std::uint64_t span = 2 * config.segment_budget;
  const unsigned batch = resolve_threads(config.threads);
  while (primes.size() < n) {
    const SegmentedSieve sieve(limit, config);
    while (primes.size() < n && lo < limit) {
      // One batch of segments at a time keeps the overshoot bounded.
      const std::uint64_t hi = std::min(limit, lo + span * batch);
      const auto chunk = sieve.range(lo, hi);
      const std::size_t take = std::min(chunk.size(), n - primes.size());
      primes.insert(primes.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(take));
      lo = hi;
    }
    limit += limit / 8 + 16;
  }
  return PrimeCache(std::move(primes));
}

inline constexpr char kCacheMagic[4] = {'P', 'R', 'I', 'M'};
inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr std::size_t kCacheHeaderBytes = 16;

inline void write_cache(const PrimeCache& cache, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(kCacheMagic, 4);
  detail::write_le<std::uint32_t>(os, kCacheVersion);
  detail::write_le<std::uint64_t>(os, cache.count());
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(cache.primes().data()),
             static_cast<std::streamsize>(cache.count() * sizeof(std::uint64_t)));
  } else {
    for (std::uint64_t p : cache.primes()) detail::write_le(os, p);
  }
  if (!os) throw InputError("write failed for " + path.string());
}

inline PrimeCache read_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kCacheMagic))
    throw ParseError(ParseError::Code::BadMagic, path.string() + ": not a prime cache (bad magic)");
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  if (!detail::read_le(is, version) || !detail::read_le(is, count))
    throw ParseError(ParseError::Code::Truncated, path.string() + ": truncated header");
  if (version != kCacheVersion)
    throw ParseError(ParseError::Code::BadVersion,
                     path.string() + ": unsupported cache version " + std::to_string(version));
  const auto payload = std::filesystem::file_size(path) - kCacheHeaderBytes;
  if (payload != count * sizeof(std::uint64_t))
    throw ParseError(ParseError::Code::Truncated,
                     path.string() + ": header count " + std::to_string(count) +
                         " does not match payload of " + std::to_string(payload) + " bytes");
  std::vector<std::uint64_t> primes(count);
  is.read(reinterpret_cast<char*>(primes.data()),
          static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
  if (!is) throw ParseError(ParseError::Code::Truncated, path.string() + ": short payload");
  if constexpr (std::endian::native == std::endian::big)
    for (auto& p : primes) p = detail::from_le_bytes<std::uint64_t>(reinterpret_cast<char*>(&p));
  return PrimeCache(std::move(primes));
}

}  // namespace primescale
