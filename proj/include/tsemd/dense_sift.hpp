// Dense SIFT descriptors (8x8 window, 4x4 subwindows, 8 phase bins) and the
// Tensor-SIFT feature image obtained by projecting them onto a CP basis.
#pragma once

#include "tsemd/image.hpp"
#include "tsemd/tensor.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace tsemd {

inline constexpr int kSubwindows = 4;
inline constexpr int kPhaseBins = 8;
inline constexpr int kWindow = 8;
inline constexpr int kDescriptorSize = kSubwindows * kSubwindows * kPhaseBins;

/// Descriptor bins indexed [(sx * 4 + sy) * 8 + phase_bin]; this is the mode-1
/// slice order of a (N, 4, 4, 8) tensor.
using SiftDescriptor = std::array<double, kDescriptorSize>;

inline std::size_t sift_index(int sx, int sy, int bin) {
  return static_cast<std::size_t>((sx * kSubwindows + sy) * kPhaseBins + bin);
}

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> phase;  // radians in [0, 2*pi), counterclockwise from +x
};

/// Central differences inside, one-sided differences on the border.
GradientField gradient_field(const GrayImage& img);

struct SiftOptions {
  /// Lowe's unit-normalize / clamp at 0.2 / renormalize. Off by default.
  bool normalize = false;
  double gaussian_sigma = 4.0;
};

/// Gaussian weight of the window sample at pixel offset (ox, oy), ox, oy in -4..3.
double sift_window_weight(int ox, int oy, double sigma = 4.0);

/// Computes descriptors for every pixel of an image. The image is
/// replicate-padded by 4 pixels so that every pixel has a full window made of
/// the pixels p + (-4..3, -4..3).
class SiftExtractor {
 public:
  explicit SiftExtractor(const GrayImage& img, SiftOptions options = {});

  SiftDescriptor at(int x, int y) const;
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  struct SpatialTap {
    int bin;
    double weight;
  };
  int width_, height_;
  SiftOptions options_;
  GradientField padded_;
  // Per window sample: Gaussian weight times the (up to 4) spatial taps.
  std::array<std::array<SpatialTap, 4>, kWindow * kWindow> taps_{};
};

SiftDescriptor sift_at(const GrayImage& img, int x, int y, const SiftOptions& options = {});

/// (W*H, 4, 4, 8) tensor, pixels in row-major order.
Tensor4 dense_sift(const GrayImage& img, const SiftOptions& options = {});

/// Per-pixel K-channel feature map. Feature of pixel (x, y) is stored at
/// values[(y * width + x) * channels + k].
struct FeatureImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> values;

  const double* feature(int x, int y) const {
    return values.data() + (static_cast<std::size_t>(y) * width + x) * channels;
  }
  const double* feature(std::size_t pixel) const { return values.data() + pixel * channels; }
  GrayImage channel(int k) const;
};

/// Projection of every descriptor of a dense tensor, unscaled.
FeatureImage project_dense(const Tensor4& descriptors, int width, int height,
                           const CpBasis& basis);

/// Affine per-channel map of [min, max] onto [0, 255]; constant channels become 0.
void rescale_channels(FeatureImage& fi);

/// dense_sift -> project -> rescale.
FeatureImage tensor_sift_image(const GrayImage& img, const CpBasis& basis,
                               const SiftOptions& options = {});

/// Writes one PGM per channel: <dir>/<stem>_c<k>.pgm.
void export_feature_channels(const FeatureImage& fi, const std::filesystem::path& dir,
                             const std::string& stem);

}  // namespace tsemd
