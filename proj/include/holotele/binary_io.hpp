#pragma once

// Little-endian encoding helpers shared by the HFLD, HKRN and HTPF containers.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "holotele/error.hpp"

namespace holotele::binio {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void put_magic(std::string& out, std::string_view magic) { out.append(magic.data(), 4); }

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

/// Sequential reader over an in-memory byte buffer with bounds checking.
class Cursor {
public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  const unsigned char* take(std::size_t n, const char* what) {
    if (remaining() < n)
      throw IoError(std::string("truncated container while reading ") + what + " at offset " +
                    std::to_string(pos_));
    auto p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += n;
    return p;
  }

  std::uint32_t u32(const char* what) { return get_u32(take(4, what)); }
  std::uint64_t u64(const char* what) { return get_u64(take(8, what)); }
  double f64(const char* what) { return get_f64(take(8, what)); }

  void expect_magic(std::string_view magic) {
    auto p = take(4, "magic");
    if (std::memcmp(p, magic.data(), 4) != 0)
      throw IoError("bad magic at offset " + std::to_string(pos_ - 4) + ": expected \"" +
                    std::string(magic) + "\"");
  }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on " + path);
  return bytes;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write error on " + path);
}

} // namespace holotele::binio
