#include "tsemd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace tsemd {

namespace {

double texture_value(const TextureSpec& t, double u, double v) {
  const auto cell = [&](double s) { return static_cast<long>(std::floor(s / t.period)); };
  switch (t.kind) {
    case Texture::flat: return t.low;
    case Texture::checker: return ((cell(u) + cell(v)) & 1) ? t.high : t.low;
    case Texture::stripes: return (cell(u + v) & 1) ? t.high : t.low;
  }
  return t.low;
}

}  // namespace

SyntheticSequence generate_synthetic(const SyntheticSceneSpec& s, std::uint64_t seed) {
  if (s.width < 8 || s.height < 8) throw std::invalid_argument("synthetic: canvas too small");
  if (s.frames < 1) throw std::invalid_argument("synthetic: need at least one frame");
  if (!(s.object_width > 0) || !(s.object_height > 0) || !(s.scale > 0))
    throw std::invalid_argument("synthetic: object size and scale must be positive");
  if (s.object.period < 1 || s.background.period < 1)
    throw std::invalid_argument("synthetic: texture period must be >= 1");
  if (s.noise_sigma < 0 || s.gain_drift < 0 || s.gain_drift >= 1)
    throw std::invalid_argument("synthetic: bad noise or gain drift");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  SyntheticSequence out;
  for (int t = 0; t < s.frames; ++t) {
    const double f = std::pow(s.scale, t);
    const double w = s.object_width * f, h = s.object_height * f;
    const double cx = s.start_x + s.object_width / 2 + s.dx * t;
    const double cy = s.start_y + s.object_height / 2 + s.dy * t;
    const double x0 = cx - w / 2, y0 = cy - h / 2;
    if (x0 < 0 || y0 < 0 || x0 + w > s.width || y0 + h > s.height)
      throw std::invalid_argument("synthetic: object leaves the canvas in frame " +
                                  std::to_string(t));
    const double gain = 1.0 + s.gain_drift * std::sin(2 * std::numbers::pi * t / s.frames);

    GrayImage img(s.width, s.height);
    RegionMask mask(s.width, s.height);
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        bool inside;
        if (s.shape == Shape::rectangle) {
          inside = x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
        } else {
          const double u = (x + 0.5 - cx) / (w / 2), v = (y + 0.5 - cy) / (h / 2);
          inside = u * u + v * v <= 1.0;
        }
        double val = inside ? texture_value(s.object, (x - x0) / f, (y - y0) / f)
                            : texture_value(s.background, x, y);
        val = val * gain + (s.noise_sigma > 0 ? s.noise_sigma * noise(rng) : 0.0);
        img.at(x, y) = std::clamp(std::round(val), 0.0, 255.0);
        if (inside) mask.set(x, y);
      }
    out.frames.push_back(std::move(img));
    out.truth.push_back(std::move(mask));
  }
  return out;
}

}  // namespace tsemd
