#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lumiedit/error.hpp"
#include "lumiedit/raster.hpp"

namespace lumiedit {

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t x) {
  return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
}

inline std::string next_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) {
      tok.push_back(c);
      break;
    }
  }
  while (in.get(c)) {
    if (std::isspace(static_cast<unsigned char>(c))) break;
    tok.push_back(c);
  }
  return tok;
}

}  // namespace detail

// Portable Float Map. Rows are stored bottom-to-top; a negative scale marks
// little-endian payloads. Payload bytes round-trip exactly.
inline std::string encode_pfm(const Raster& r) {
  std::ostringstream out(std::ios::binary);
  out << (r.channels() == 3 ? "PF" : "Pf") << "\n" << r.width() << " " << r.height() << "\n-1.0\n";
  const std::size_t row_len = static_cast<std::size_t>(r.width()) * r.channels();
  std::string payload(row_len * r.height() * 4, '\0');
  char* dst = payload.data();
  for (int row = r.height() - 1; row >= 0; --row) {
    const float* src = r.data().data() + static_cast<std::size_t>(row) * row_len;
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t bitsv;
      std::memcpy(&bitsv, &src[i], 4);
      if constexpr (std::endian::native == std::endian::big) bitsv = detail::byteswap32(bitsv);
      std::memcpy(dst, &bitsv, 4);
      dst += 4;
    }
  }
  out << payload;
  return out.str();
}

inline Raster decode_pfm(const std::string& bytes, const std::string& field = "pfm") {
  std::istringstream in(bytes, std::ios::binary);
  const std::string magic = detail::next_token(in);
  int channels = 0;
  if (magic == "PF") {
    channels = 3;
  } else if (magic == "Pf") {
    channels = 1;
  } else {
    throw Error(ErrorKind::kMalformed, field, "bad PFM magic '" + magic + "'");
  }
  int width = 0, height = 0;
  double scale = 0.0;
  try {
    width = std::stoi(detail::next_token(in));
    height = std::stoi(detail::next_token(in));
    scale = std::stod(detail::next_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorKind::kMalformed, field, "bad PFM header");
  }
  if (width < 1 || height < 1 || scale == 0.0) {
    throw Error(ErrorKind::kMalformed, field, "bad PFM dimensions or scale");
  }
  // The header ends with exactly one whitespace byte, consumed by next_token.
  const auto offset = static_cast<std::size_t>(in.tellg());
  const std::size_t row_len = static_cast<std::size_t>(width) * channels;
  const std::size_t need = row_len * height * 4;
  if (bytes.size() < offset + need) {
    throw Error(ErrorKind::kMalformed, field, "truncated PFM payload");
  }
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  Raster r(width, height, channels);
  const char* src = bytes.data() + offset;
  for (int row = height - 1; row >= 0; --row) {
    float* dst = r.data().data() + static_cast<std::size_t>(row) * row_len;
    for (std::size_t i = 0; i < row_len; ++i) {
      std::uint32_t bitsv;
      std::memcpy(&bitsv, src, 4);
      if (swap) bitsv = detail::byteswap32(bitsv);
      std::memcpy(&dst[i], &bitsv, 4);
      src += 4;
    }
  }
  return r;
}

inline std::string read_file_bytes(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, field, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kMissingFile, path.string(), "cannot write file");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Raster read_pfm(const std::filesystem::path& path, const std::string& field = "pfm") {
  return decode_pfm(read_file_bytes(path, field), field);
}

inline void write_pfm(const std::filesystem::path& path, const Raster& r) {
  write_file_bytes(path, encode_pfm(r));
}

}  // namespace lumiedit
