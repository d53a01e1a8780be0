// Raster types shared by the pipeline and binary netpbm I/O (P5/P6, maxval 255).
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tsemd {

/// Single-channel image with real intensities, nominally in [0, 255].
/// Pixel (x, y) is stored at y * width + x.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  /// Replicate-border access.
  double clamped(int x, int y) const;

  bool operator==(const GrayImage&) const = default;
};

/// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int w, int h);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Luminance 0.299 R + 0.587 G + 0.114 B.
GrayImage to_luminance(const RgbImage& img);

/// Binary region on the pixel grid.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(int w, int h);

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ &&
           bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool inside = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = inside ? 1 : 0;
  }
  bool at_index(std::size_t i) const { return bits_[i] != 0; }

  std::size_t area() const;
  /// Mean pixel coordinate; throws on an empty mask.
  std::pair<double, double> centroid() const;
  /// Inside pixels with at least one 4-neighbour outside (or on the image edge).
  std::vector<std::pair<int, int>> boundary_pixels() const;
  /// {x0, y0, x1, y1} inclusive; throws on an empty mask.
  std::array<int, 4> bounding_box() const;

  bool operator==(const RegionMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Frame {
  GrayImage gray;
  std::optional<RgbImage> color;
};

/// Decodes P5 or P6 (maxval 255). P6 input also yields its luminance.
Frame read_pnm(std::istream& is);
Frame load_frame(const std::filesystem::path& path);

/// Values are rounded and clamped to [0, 255].
void write_pgm(std::ostream& os, const GrayImage& img);
void write_ppm(std::ostream& os, const RgbImage& img);
void save_pgm(const std::filesystem::path& path, const GrayImage& img);
void save_ppm(const std::filesystem::path& path, const RgbImage& img);

/// Masks are stored as PGM: 255 inside, 0 outside; any value > 127 reads as inside.
RegionMask mask_from_image(const GrayImage& img);
GrayImage mask_to_image(const RegionMask& mask);
RegionMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const RegionMask& mask);

}  // namespace tsemd
