#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hjreach {

struct SerializationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// All on-disk integers and reals are little-endian.
inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw SerializationError("write failed");
}

inline void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw SerializationError("unexpected end of stream (truncated file?)");
}

template <typename T>
inline T byteswap_if_big(T v) {
  static_assert(std::is_integral_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    T out = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      out |= ((v >> (8 * i)) & T{0xff}) << (8 * (sizeof(T) - 1 - i));
    return out;
  }
  return v;
}

}  // namespace detail

inline void write_u32(std::ostream& os, std::uint32_t v) {
  v = detail::byteswap_if_big(v);
  detail::write_bytes(os, &v, sizeof v);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  v = detail::byteswap_if_big(v);
  detail::write_bytes(os, &v, sizeof v);
}

inline void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  write_u64(os, bits);
}

inline std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  detail::read_bytes(is, &v, sizeof v);
  return detail::byteswap_if_big(v);
}

inline std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  detail::read_bytes(is, &v, sizeof v);
  return detail::byteswap_if_big(v);
}

inline double read_f64(std::istream& is) {
  const std::uint64_t bits = read_u64(is);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  detail::write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is, std::size_t max_len = 1u << 20) {
  const std::uint32_t n = read_u32(is);
  if (n > max_len) throw SerializationError("string length out of range");
  std::string s(n, '\0');
  if (n) detail::read_bytes(is, s.data(), n);
  return s;
}

}  // namespace hjreach
