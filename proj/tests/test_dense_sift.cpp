#include <doctest.h>

#include "tsemd/dense_sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace tsemd;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  GrayImage img(w, h);
  for (double& v : img.values) v = u(rng);
  return img;
}

GrayImage ramp(int w, int h, double angle) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = 100.0 + 3.0 * (std::cos(angle) * x + std::sin(angle) * y);
  return img;
}

double total(const SiftDescriptor& d) {
  double s = 0.0;
  for (double v : d) s += v;
  return s;
}

}  // namespace

TEST_CASE("descriptor mass equals the Gaussian-weighted magnitude, borders included") {
  const GrayImage img = random_image(12, 10, 3);
  // Oracle: replicate-pad by hand and take gradients of the padded image.
  const int pad = 4, pw = img.width + 2 * pad, ph = img.height + 2 * pad;
  GrayImage padded(pw, ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      padded.at(x, y) = img.at(std::clamp(x - pad, 0, img.width - 1), std::clamp(y - pad, 0, img.height - 1));
  auto grad = [&](int x, int y) {
    const auto d = [&](int a0, int a1, int b0, int b1, double s) {
      return s * (padded.at(a1, b1) - padded.at(a0, b0));
    };
    const double gx = x == 0 ? d(0, 1, y, y, 1.0)
                      : x == pw - 1 ? d(pw - 2, pw - 1, y, y, 1.0)
                                    : d(x - 1, x + 1, y, y, 0.5);
    const double gy = y == 0 ? padded.at(x, 1) - padded.at(x, 0)
                      : y == ph - 1 ? padded.at(x, ph - 1) - padded.at(x, ph - 2)
                                    : 0.5 * (padded.at(x, y + 1) - padded.at(x, y - 1));
    return std::hypot(gx, gy);
  };
  const SiftExtractor ex(img);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double expected = 0.0;
      for (int oy = -4; oy < 4; ++oy)
        for (int ox = -4; ox < 4; ++ox) {
          const double ux = ox + 0.5, uy = oy + 0.5;
          expected += std::exp(-(ux * ux + uy * uy) / 32.0) * grad(x + pad + ox, y + pad + oy);
        }
      const SiftDescriptor d = ex.at(x, y);
      CHECK(total(d) == doctest::Approx(expected).epsilon(1e-9));
      CHECK(*std::min_element(d.begin(), d.end()) >= 0.0);
    }
}

TEST_CASE("a flat image has empty descriptors") {
  const SiftDescriptor d = sift_at(GrayImage(10, 10, 42.0), 5, 5);
  CHECK(total(d) == 0.0);
}

TEST_CASE("gradient phase follows atan2(dy, dx)") {
  const GradientField g = gradient_field(ramp(9, 9, 0.7));
  CHECK(g.phase[4 * 9 + 4] == doctest::Approx(0.7));
  CHECK(g.magnitude[4 * 9 + 4] == doctest::Approx(3.0));
}

TEST_CASE("ramp aligned with a bin center puts all mass in that bin") {
  for (int k = 0; k < 8; ++k) {
    const SiftDescriptor d = sift_at(ramp(40, 40, k * std::numbers::pi / 4), 20, 20);
    double in_bin = 0.0;
    for (int s = 0; s < 16; ++s) in_bin += d[static_cast<std::size_t>(s * 8 + k)];
    CHECK(in_bin == doctest::Approx(total(d)).epsilon(1e-9));
  }
}

TEST_CASE("rotating a ramp by 90 degrees shifts phase bins by 2 and rotates subwindows") {
  for (double angle : {0.1, 0.5, 1.3, 2.9, 4.0}) {
    const SiftDescriptor a = sift_at(ramp(40, 40, angle), 20, 20);
    const SiftDescriptor b = sift_at(ramp(40, 40, angle + std::numbers::pi / 2), 20, 20);
    for (int sx = 0; sx < 4; ++sx)
      for (int sy = 0; sy < 4; ++sy)
        for (int bin = 0; bin < 8; ++bin)
          CHECK(b[sift_index(3 - sy, sx, (bin + 2) % 8)] ==
                doctest::Approx(a[sift_index(sx, sy, bin)]).epsilon(1e-9));
  }
}

TEST_CASE("subwindow layout: a blob at the window's top-left lands in subwindow (0, 0)") {
  GrayImage img(30, 30, 0.0);
  img.at(12, 12) = 100.0;  // offset (-3, -3) from the window at (15, 15)
  const SiftDescriptor d = sift_at(img, 15, 15);
  double sub[4][4] = {};
  for (int sx = 0; sx < 4; ++sx)
    for (int sy = 0; sy < 4; ++sy)
      for (int b = 0; b < 8; ++b) sub[sx][sy] += d[sift_index(sx, sy, b)];
  CHECK(sub[0][0] + sub[1][0] + sub[0][1] + sub[1][1] == doctest::Approx(total(d)));
  CHECK(sub[0][0] > sub[1][0]);
  CHECK(sub[0][0] > sub[0][1]);
  CHECK(sub[1][0] > sub[1][1]);
}

TEST_CASE("dense_sift is deterministic and matches sift_at") {
  const GrayImage img = random_image(9, 7, 5);
  const Tensor4 a = dense_sift(img), b = dense_sift(img);
  CHECK(a.data() == b.data());
  CHECK(a.dims() == Tensor4::Dims{63, 4, 4, 8});
  const SiftDescriptor d = sift_at(img, 3, 2);
  const auto slice = a.slice(2 * 9 + 3);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(slice[i] == d[i]);
}

TEST_CASE("normalization option: unit normalize, clamp at 0.2, renormalize") {
  const GrayImage img = random_image(20, 20, 9);
  SiftDescriptor expected = sift_at(img, 10, 10);
  auto unit = [](SiftDescriptor& d) {
    double n2 = 0.0;
    for (double v : d) n2 += v * v;
    for (double& v : d) v /= std::sqrt(n2);
  };
  unit(expected);
  for (double& v : expected) v = std::min(v, 0.2);
  unit(expected);
  SiftOptions opt;
  opt.normalize = true;
  const SiftDescriptor d = sift_at(img, 10, 10, opt);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("rescale_channels maps each channel onto [0, 255]") {
  FeatureImage fi{2, 2, 2, {1.0, 5.0, 3.0, 5.0, -1.0, 5.0, 2.0, 5.0}};
  rescale_channels(fi);
  double lo = 1e9, hi = -1e9;
  for (int p = 0; p < 4; ++p) {
    lo = std::min(lo, fi.feature(static_cast<std::size_t>(p))[0]);
    hi = std::max(hi, fi.feature(static_cast<std::size_t>(p))[0]);
    CHECK(fi.feature(static_cast<std::size_t>(p))[1] == 0.0);  // constant channel
  }
  CHECK(lo == 0.0);
  CHECK(hi == 255.0);
}

TEST_CASE("tensor_sift_image has one channel per basis rank") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  const CpBasis basis = CpBasis::from_factors(Matrix::NullaryExpr(4, 3, [&] { return u(rng); }),
                                              Matrix::NullaryExpr(4, 3, [&] { return u(rng); }),
                                              Matrix::NullaryExpr(8, 3, [&] { return u(rng); }));
  const GrayImage img = random_image(11, 8, 2);
  const FeatureImage fi = tensor_sift_image(img, basis);
  CHECK(fi.channels == 3);
  CHECK(fi.width == 11);
  const FeatureImage raw = project_dense(dense_sift(img), 11, 8, basis);
  const Vector direct = project_descriptor(dense_sift(img).slice(5), basis);
  CHECK(raw.feature(5)[1] == doctest::Approx(direct(1)));
}

TEST_CASE("color input converts to luminance") {
  RgbImage c(1, 1);
  c.set(0, 0, 200, 100, 50);
  CHECK(to_luminance(c).at(0, 0) == doctest::Approx(0.299 * 200 + 0.587 * 100 + 0.114 * 50));
}

TEST_CASE("listed gradient and constant-image examples") {
  GrayImage gx(9, 9), gy(9, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      gx.at(x, y) = x;
      gy.at(x, y) = y;
    }
  const GradientField a = gradient_field(gx), b = gradient_field(gy);
  for (int y = 1; y < 8; ++y)
    for (int x = 1; x < 8; ++x) {
      const auto i = static_cast<std::size_t>(y * 9 + x);
      CHECK(a.magnitude[i] == doctest::Approx(1.0));
      CHECK(a.phase[i] == doctest::Approx(0.0).scale(1.0));
      CHECK(b.phase[i] == doctest::Approx(std::numbers::pi / 2));
    }
  const GradientField c = gradient_field(GrayImage(9, 9, 7.0));
  for (double m : c.magnitude) CHECK(m == 0.0);

  const Tensor4 t = dense_sift(GrayImage(8, 8, 31.0));
  CHECK(t.dims() == Tensor4::Dims{64, 4, 4, 8});
  for (double v : t.data()) CHECK(v == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const CpBasis basis = CpBasis::from_factors(Matrix::NullaryExpr(4, 2, [&] { return u(rng); }),
                                              Matrix::NullaryExpr(4, 2, [&] { return u(rng); }),
                                              Matrix::NullaryExpr(8, 2, [&] { return u(rng); }));
  const FeatureImage flat = tensor_sift_image(GrayImage(10, 10, 90.0), basis);
  for (double v : flat.values) CHECK(v == 0.0);
}

TEST_CASE("rescaling a channel already spanning [0, 255] is the identity") {
  FeatureImage fi{3, 1, 1, {0.0, 100.0, 255.0}};
  const FeatureImage before = fi;
  rescale_channels(fi);
  CHECK(fi.values == before.values);
}
