#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

namespace primescale::detail {

template <class T>
  requires std::is_trivially_copyable_v<T>
std::array<char, sizeof(T)> to_le_bytes(T value) noexcept {
  std::array<char, sizeof(T)> out{};
  std::memcpy(out.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(out[i], out[sizeof(T) - 1 - i]);
  return out;
}

template <class T>
  requires std::is_trivially_copyable_v<T>
T from_le_bytes(const char* bytes) noexcept {
  std::array<char, sizeof(T)> buf{};
  std::memcpy(buf.data(), bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

template <class T>
void write_le(std::ostream& os, T value) {
  const auto bytes = to_le_bytes(value);
  os.write(bytes.data(), bytes.size());
}

// Returns false on short read.
template <class T>
bool read_le(std::istream& is, T& value) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), bytes.size())) return false;
  value = from_le_bytes<T>(bytes.data());
  return true;
}

}  // namespace primescale::detail
