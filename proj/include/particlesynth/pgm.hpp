#pragma once

#include <cctype>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "particlesynth/error.hpp"
#include "particlesynth/io.hpp"
#include "particlesynth/raster.hpp"

namespace particlesynth {

/// Consolidated instance-id raster. 0 is background; id k marks the pixels
/// where instance k is topmost.
struct GraymapMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> ids;

  GraymapMask() = default;
  GraymapMask(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw Error(Errc::kInvalidArgument, "graymap dimensions must be positive");
    ids.assign(static_cast<std::size_t>(w) * h, 0);
  }

  std::uint16_t at(int x, int y) const { return ids[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GraymapMask&, const GraymapMask&) = default;
};

/// Binary PGM: "P5\n<w> <h>\n65535\n" then big-endian 16-bit samples.
inline std::string encode_pgm(const GraymapMask& g) {
  if (g.width <= 0 || g.height <= 0 || g.ids.size() != static_cast<std::size_t>(g.width) * g.height) {
    throw Error(Errc::kInvalidArgument, "graymap has inconsistent dimensions");
  }
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n65535\n";
  const std::size_t header = out.size();
  out.resize(header + g.ids.size() * 2);
  for (std::size_t i = 0; i < g.ids.size(); ++i) {
    out[header + 2 * i] = static_cast<char>(g.ids[i] >> 8);
    out[header + 2 * i + 1] = static_cast<char>(g.ids[i] & 0xff);
  }
  return out;
}

namespace detail {

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t payload_offset = 0;
};

inline PgmHeader parse_pgm_header(std::string_view bytes, const std::string& name) {
  auto malformed = [&](const std::string& why) {
    return Error(Errc::kMalformedHeader, "malformed header in " + name + ": " + why);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw malformed("missing P5 magic");
  std::size_t pos = 2;
  auto skip_space = [&] {
    bool any = false;
    while (pos < bytes.size()) {
      const auto c = static_cast<unsigned char>(bytes[pos]);
      if (std::isspace(c)) {
        any = true;
        ++pos;
      } else if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n' && bytes[pos] != '\r') ++pos;
      } else {
        break;
      }
    }
    return any;
  };
  auto read_int = [&](const char* what) {
    if (!skip_space()) throw malformed(std::string("expected whitespace before ") + what);
    long long v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000) throw malformed(std::string(what) + " too large");
      ++pos;
      ++digits;
    }
    if (digits == 0) throw malformed(std::string("expected ") + what);
    return static_cast<int>(v);
  };
  PgmHeader h;
  h.width = read_int("width");
  h.height = read_int("height");
  h.maxval = read_int("maxval");
  if (h.width <= 0 || h.height <= 0) throw malformed("dimensions must be positive");
  if (h.maxval <= 0 || h.maxval > 65535) throw malformed("maxval out of range");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw malformed("expected single whitespace after maxval");
  }
  h.payload_offset = pos + 1;
  return h;
}

}  // namespace detail

/// Strict reader for graymaps: maxval must be 65535.
inline GraymapMask decode_pgm(std::string_view bytes, const std::string& name = "<memory>") {
  const detail::PgmHeader h = detail::parse_pgm_header(bytes, name);
  if (h.maxval != 65535) {
    throw Error(Errc::kUnsupportedMaxval,
                "unsupported maxval " + std::to_string(h.maxval) + " in " + name + " (expected 65535)");
  }
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.payload_offset < n * 2) {
    throw Error(Errc::kTruncatedPayload, "truncated payload in " + name + ": expected " + std::to_string(n * 2) +
                                             " bytes, got " + std::to_string(bytes.size() - h.payload_offset));
  }
  GraymapMask g(h.width, h.height);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (std::size_t i = 0; i < n; ++i) {
    g.ids[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return g;
}

inline void write_pgm(const GraymapMask& g, const fs::path& path) { write_file(path, encode_pgm(g)); }

inline GraymapMask read_pgm(const fs::path& path) { return decode_pgm(read_file(path), path.string()); }

/// Lenient binary-mask reader for imported cutouts: any P5 maxval, 8- or
/// 16-bit, nonzero samples are foreground.
inline BinaryMask read_mask_pgm(const fs::path& path) {
  const std::string bytes = read_file(path);
  const detail::PgmHeader h = detail::parse_pgm_header(bytes, path.string());
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t sample = h.maxval > 255 ? 2 : 1;
  if (bytes.size() - h.payload_offset < n * sample) {
    throw Error(Errc::kTruncatedPayload, "truncated payload in " + path.string());
  }
  BinaryMask mask(h.width, h.height);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = sample == 2 ? ((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
    mask.data()[i] = v != 0 ? 1 : 0;
  }
  return mask;
}

/// Binary masks are stored with the graymap convention, values 0 and 1.
inline void write_mask_pgm(const BinaryMask& mask, const fs::path& path) {
  GraymapMask g(mask.width(), mask.height());
  for (std::size_t i = 0; i < g.ids.size(); ++i) g.ids[i] = mask.data()[i];
  write_pgm(g, path);
}

}  // namespace particlesynth
