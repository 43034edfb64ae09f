#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

// Little-endian POD I/O for the native file formats.

namespace galgraph::io {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
void write(std::ostream& out, const T& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void write_string(std::ostream& out, const std::string& s) {
  write(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

inline void read_bytes(std::istream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError(std::string("truncated file while reading ") + what);
}

template <class T>
T read(std::istream& in, const char* what) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v;
  read_bytes(in, &v, sizeof(T), what);
  return v;
}

inline std::string read_string(std::istream& in, const char* what, std::size_t limit = 1u << 26) {
  const auto n = read<std::uint32_t>(in, what);
  if (n > limit) throw FormatError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  read_bytes(in, s.data(), n, what);
  return s;
}

}  // namespace galgraph::io
