#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

namespace spdh::bin {

constexpr std::uint32_t bswap32(std::uint32_t v) {
  return ((v & 0x000000ffu) << 24) | ((v & 0x0000ff00u) << 8) | ((v & 0x00ff0000u) >> 8) |
         ((v & 0xff000000u) >> 24);
}

inline void write_le_u32(std::ostream& out, std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) v = bswap32(v);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_le_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if constexpr (std::endian::native == std::endian::big) v = bswap32(v);
  return v;
}

inline void write_le_f32(std::ostream& out, const std::vector<float>& v) {
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * 4));
  } else {
    for (float f : v) {
      const std::uint32_t bits = bswap32(std::bit_cast<std::uint32_t>(f));
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  }
}

inline void read_le_f32(std::istream& in, std::vector<float>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  } else {
    for (auto& f : v) {
      std::uint32_t bits = 0;
      in.read(reinterpret_cast<char*>(&bits), 4);
      f = std::bit_cast<float>(bswap32(bits));
    }
  }
}

}  // namespace spdh::bin
