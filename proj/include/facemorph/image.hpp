#pragma once

#include <cstdint>
#include <utility>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace facemorph {

/// 8-bit grayscale raster, row-major, y down.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5, maxval 255).
std::string encode_pgm(const GrayImage& image);
GrayImage decode_pgm(std::string_view bytes);
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& image);

/// Reads only the header of a PGM file.
std::pair<int, int> pgm_size(const std::string& path);

using Patch = Eigen::MatrixXd;  // rows = y, cols = x, values in [0, 1]

/// size x size window centred on the pixel nearest `(x, y)`; pixels outside
/// the image replicate the nearest edge pixel.
Patch extract_patch(const GrayImage& image, double x, double y, int size);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace facemorph
