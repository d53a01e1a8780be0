#include "tsemd/dense_sift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tsemd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kPad = kWindow / 2;

GrayImage replicate_pad(const GrayImage& img, int pad) {
  GrayImage out(img.width + 2 * pad, img.height + 2 * pad);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = img.clamped(x - pad, y - pad);
  return out;
}

void normalize_descriptor(SiftDescriptor& d) {
  auto unit = [&d] {
    double n = 0.0;
    for (double v : d) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0)
      for (double& v : d) v /= n;
  };
  unit();
  for (double& v : d) v = std::min(v, 0.2);
  unit();
}

}  // namespace

GradientField gradient_field(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw std::invalid_argument("gradient_field: image must be at least 3x3");
  GradientField g;
  g.width = img.width;
  g.height = img.height;
  g.magnitude.resize(img.values.size());
  g.phase.resize(img.values.size());
  const int w = img.width, h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx, dy;
      if (x == 0)
        dx = img.at(1, y) - img.at(0, y);
      else if (x == w - 1)
        dx = img.at(w - 1, y) - img.at(w - 2, y);
      else
        dx = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));
      if (y == 0)
        dy = img.at(x, 1) - img.at(x, 0);
      else if (y == h - 1)
        dy = img.at(x, h - 1) - img.at(x, h - 2);
      else
        dy = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.magnitude[i] = std::hypot(dx, dy);
      double ph = std::atan2(dy, dx);
      if (ph < 0.0) ph += kTwoPi;
      if (ph >= kTwoPi) ph = 0.0;
      g.phase[i] = ph;
    }
  }
  return g;
}

double sift_window_weight(int ox, int oy, double sigma) {
  // Samples sit at half-integer positions around the window centre.
  const double ux = ox + 0.5, uy = oy + 0.5;
  return std::exp(-(ux * ux + uy * uy) / (2.0 * sigma * sigma));
}

SiftExtractor::SiftExtractor(const GrayImage& img, SiftOptions options)
    : width_(img.width), height_(img.height), options_(options) {
  padded_ = gradient_field(replicate_pad(img, kPad));

  // Subwindow centres are at sample positions -3, -1, +1, +3, so the
  // continuous subwindow coordinate of sample u is (u + 3) / 2. Samples in
  // the outer half-cell are clamped onto the edge subwindow, which keeps the
  // distribution mass-preserving.
  auto axis_taps = [](int o) {
    const double b = std::clamp((o + 0.5 + 3.0) / 2.0, 0.0, 3.0);
    const int b0 = std::min(static_cast<int>(std::floor(b)), kSubwindows - 2);
    const double frac = b - b0;
    return std::array<std::pair<int, double>, 2>{{{b0, 1.0 - frac}, {b0 + 1, frac}}};
  };
  for (int oy = -kPad; oy < kPad; ++oy) {
    for (int ox = -kPad; ox < kPad; ++ox) {
      const double gw = sift_window_weight(ox, oy, options_.gaussian_sigma);
      const auto tx = axis_taps(ox), ty = axis_taps(oy);
      auto& taps = taps_[static_cast<std::size_t>((oy + kPad) * kWindow + (ox + kPad))];
      int n = 0;
      for (const auto& [bx, wx] : tx)
        for (const auto& [by, wy] : ty)
          taps[n++] = {static_cast<int>(sift_index(bx, by, 0)), gw * wx * wy};
    }
  }
}

SiftDescriptor SiftExtractor::at(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_)
    throw std::out_of_range("sift_at: pixel outside the image");
  SiftDescriptor d{};
  const double bin_width = kTwoPi / kPhaseBins;
  // Pixel (x, y) sits at (x + 4, y + 4) in the padded field.
  for (int oy = -kPad; oy < kPad; ++oy) {
    const int py = y + kPad + oy;
    for (int ox = -kPad; ox < kPad; ++ox) {
      const std::size_t pi = static_cast<std::size_t>(py) * padded_.width + (x + kPad + ox);
      const double mag = padded_.magnitude[pi];
      if (mag == 0.0) continue;
      const double t = padded_.phase[pi] / bin_width;
      int k0 = static_cast<int>(std::floor(t));
      const double frac = t - k0;
      k0 %= kPhaseBins;
      const int k1 = (k0 + 1) % kPhaseBins;
      for (const auto& tap : taps_[static_cast<std::size_t>((oy + kPad) * kWindow + (ox + kPad))]) {
        const double m = mag * tap.weight;
        d[static_cast<std::size_t>(tap.bin + k0)] += m * (1.0 - frac);
        d[static_cast<std::size_t>(tap.bin + k1)] += m * frac;
      }
    }
  }
  if (options_.normalize) normalize_descriptor(d);
  return d;
}

SiftDescriptor sift_at(const GrayImage& img, int x, int y, const SiftOptions& options) {
  return SiftExtractor(img, options).at(x, y);
}

Tensor4 dense_sift(const GrayImage& img, const SiftOptions& options) {
  const SiftExtractor ex(img, options);
  Tensor4 t({static_cast<std::size_t>(img.width) * img.height, kSubwindows, kSubwindows,
             kPhaseBins});
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto d = ex.at(x, y);
      auto row = t.slice(static_cast<std::size_t>(y) * img.width + x);
      std::copy(d.begin(), d.end(), row.begin());
    }
  return t;
}

GrayImage FeatureImage::channel(int k) const {
  GrayImage g(width, height);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    g.values[i] = values[i * channels + static_cast<std::size_t>(k)];
  return g;
}

FeatureImage project_dense(const Tensor4& desc, int width, int height, const CpBasis& basis) {
  if (desc.dims()[0] != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("project_dense: descriptor count does not match image size");
  if (desc.dims()[1] != basis.I2 || desc.dims()[2] != basis.I3 || desc.dims()[3] != basis.I4)
    throw std::invalid_argument("project_dense: descriptor shape does not match basis");
  FeatureImage fi;
  fi.width = width;
  fi.height = height;
  fi.channels = basis.rank;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(desc.data().data(), static_cast<Eigen::Index>(desc.dims()[0]),
                                     static_cast<Eigen::Index>(basis.descriptor_size()));
  fi.values.resize(desc.dims()[0] * static_cast<std::size_t>(basis.rank));
  Eigen::Map<RowMajor> out(fi.values.data(), x.rows(), basis.rank);
  out = x * basis.projector.transpose();
  return fi;
}

void rescale_channels(FeatureImage& fi) {
  const std::size_t n = static_cast<std::size_t>(fi.width) * fi.height;
  for (int k = 0; k < fi.channels; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = fi.values[i * fi.channels + k];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
      double& v = fi.values[i * fi.channels + k];
      v = span > 0.0 ? (v - lo) * (255.0 / span) : 0.0;
    }
  }
}

FeatureImage tensor_sift_image(const GrayImage& img, const CpBasis& basis,
                               const SiftOptions& options) {
  if (basis.I2 != kSubwindows || basis.I3 != kSubwindows || basis.I4 != kPhaseBins)
    throw std::invalid_argument("tensor_sift_image: basis must be 4x4x8");
  FeatureImage fi = project_dense(dense_sift(img, options), img.width, img.height, basis);
  rescale_channels(fi);
  return fi;
}

void export_feature_channels(const FeatureImage& fi, const std::filesystem::path& dir,
                             const std::string& stem) {
  for (int k = 0; k < fi.channels; ++k)
    save_pgm(dir / (stem + "_c" + std::to_string(k) + ".pgm"), fi.channel(k));
}

}  // namespace tsemd
