// Synthetic textured-object sequences with exact ground truth.
#pragma once

#include "tsemd/image.hpp"

#include <cstdint>
#include <vector>

namespace tsemd {

enum class Texture { flat, checker, stripes };

struct TextureSpec {
  Texture kind = Texture::checker;
  int period = 6;  // pixels per cell or stripe
  double low = 50.0;
  double high = 200.0;
};

enum class Shape { rectangle, ellipse };

struct SyntheticSceneSpec {
  int width = 128;
  int height = 128;
  int frames = 20;
  Shape shape = Shape::rectangle;
  double object_width = 30.0;
  double object_height = 30.0;
  double start_x = 20.0;  // top-left corner of the object's bounding box in frame 0
  double start_y = 49.0;
  double dx = 2.0;  // per-frame translation
  double dy = 0.0;
  double scale = 1.0;  // per-frame size factor about the box centre
  TextureSpec object{Texture::checker, 6, 40.0, 210.0};
  TextureSpec background{Texture::stripes, 8, 95.0, 150.0};
  double noise_sigma = 4.0;
  double gain_drift = 0.10;  // gain is 1 + drift * sin(2 pi t / frames)
};

struct SyntheticSequence {
  std::vector<GrayImage> frames;
  std::vector<RegionMask> truth;
};

/// Deterministic for a given seed. Throws std::invalid_argument if the object
/// leaves the canvas in any frame.
SyntheticSequence generate_synthetic(const SyntheticSceneSpec& spec, std::uint64_t seed);

}  // namespace tsemd
