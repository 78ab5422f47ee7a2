#include "facemorph/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "facemorph/tps_io.hpp"
#include "facemorph/types.hpp"

namespace facemorph {

std::string encode_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

namespace {

struct PgmHeader {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

PgmHeader parse_pgm_header(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw DataError("not a binary PGM (P5)");
  std::size_t pos = 2;
  long values[3] = {0, 0, 0};
  for (long& value : values) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const auto start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos == start) throw DataError("malformed PGM header");
    value = std::stol(std::string(bytes.substr(start, pos - start)));
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DataError("malformed PGM header");
  }
  ++pos;
  if (values[0] <= 0 || values[1] <= 0 || values[2] != 255) {
    throw DataError("unsupported PGM dimensions or maxval");
  }
  return {static_cast<int>(values[0]), static_cast<int>(values[1]), pos};
}

}  // namespace

GrayImage decode_pgm(std::string_view bytes) {
  const auto header = parse_pgm_header(bytes);
  const auto count = static_cast<std::size_t>(header.width) * static_cast<std::size_t>(header.height);
  if (bytes.size() < header.data_offset + count) throw DataError("truncated PGM data");
  GrayImage image(header.width, header.height);
  std::copy_n(bytes.data() + header.data_offset, count, reinterpret_cast<char*>(image.pixels.data()));
  return image;
}

GrayImage read_pgm(const std::string& path) { return decode_pgm(read_file(path)); }

void write_pgm(const std::string& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  const auto bytes = encode_pgm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::pair<int, int> pgm_size(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string head(256, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const auto header = parse_pgm_header(head);
  return {header.width, header.height};
}

Patch extract_patch(const GrayImage& image, double x, double y, int size) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("patch size must be odd and positive");
  if (image.width <= 0 || image.height <= 0) throw DataError("empty image");
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  const int half = size / 2;
  Patch patch(size, size);
  for (int r = 0; r < size; ++r) {
    const int py = std::clamp(cy - half + r, 0, image.height - 1);
    for (int c = 0; c < size; ++c) {
      const int px = std::clamp(cx - half + c, 0, image.width - 1);
      patch(r, c) = image.at(px, py) / 255.0;
    }
  }
  return patch;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

}  // namespace facemorph
