#include <doctest.h>

#include "tsemd/shape_force.hpp"

#include <cmath>
#include <random>

using namespace tsemd;

namespace {

BinMap random_bins(int w, int h, int bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, bins - 1);
  BinMap m{w, h, bins, std::vector<int>(static_cast<std::size_t>(w * h))};
  for (int& v : m.index) v = u(rng);
  return m;
}

RegionMask ellipse_mask(int w, int h, double cx, double cy, double a, double b) {
  RegionMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if ((x - cx) * (x - cx) / (a * a) + (y - cy) * (y - cy) / (b * b) <= 1.0) m.set(x, y);
  return m;
}

Eigen::VectorXd random_duals(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

Circle circle_from(std::pair<double, double> a, std::pair<double, double> b) {
  return {(a.first + b.first) / 2, (a.second + b.second) / 2,
          std::hypot(a.first - b.first, a.second - b.second) / 2};
}

bool circumcircle(std::pair<double, double> a, std::pair<double, double> b,
                  std::pair<double, double> c, Circle& out) {
  const double bx = b.first - a.first, by = b.second - a.second;
  const double cx = c.first - a.first, cy = c.second - a.second;
  const double d = 2 * (bx * cy - by * cx);
  if (std::abs(d) < 1e-12) return false;
  const double ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d;
  const double uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d;
  out = {a.first + ux, a.second + uy, std::hypot(ux, uy)};
  return true;
}

// Smallest circle through two or three of the points that contains them all.
double mec_radius_brute_force(const std::vector<std::pair<double, double>>& pts) {
  double best = 1e300;
  auto try_circle = [&](const Circle& c) {
    for (const auto& [x, y] : pts)
      if (std::hypot(x - c.cx, y - c.cy) > c.r * (1 + 1e-9) + 1e-9) return;
    best = std::min(best, c.r);
  };
  const std::size_t n = pts.size();
  if (n == 1) return 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      try_circle(circle_from(pts[i], pts[j]));
      for (std::size_t k = j + 1; k < n; ++k) {
        Circle c;
        if (circumcircle(pts[i], pts[j], pts[k], c)) try_circle(c);
      }
    }
  return best;
}

}  // namespace

TEST_CASE("compute_stats agrees with direct double loops") {
  const BinMap bins = random_bins(40, 36, 5, 1);
  const RegionMask mask = ellipse_mask(40, 36, 19.0, 17.0, 12.0, 8.0);
  const Eigen::VectorXd l = random_duals(5, 2);
  for (KernelKind kind : {KernelKind::normal, KernelKind::epanechnikov, KernelKind::uniform}) {
    const double sigma = 4.0;
    const RegionStats s = compute_stats(mask, bins, l, kind, sigma);
    const double h = kernel_bandwidth(sigma, kind);

    double G0 = 0, sx = 0, sy = 0;
    for (int y = 0; y < 36; ++y)
      for (int x = 0; x < 40; ++x)
        if (mask.contains(x, y)) {
          G0 += 1;
          sx += x;
          sy += y;
        }
    const double cx = sx / G0, cy = sy / G0;
    double K2 = 0;
    std::vector<double> q(5, 0.0);
    for (int y = 0; y < 36; ++y)
      for (int x = 0; x < 40; ++x)
        if (mask.contains(x, y)) {
          const double w = kernel_weight(x - cx, y - cy, h, kind);
          K2 += w;
          q[static_cast<std::size_t>(bins.at(x, y))] += w;
        }
    double lq = 0;
    for (int v = 0; v < 5; ++v) lq += l(v) * (q[static_cast<std::size_t>(v)] /= K2);
    double mx = 0, my = 0;
    for (int y = 0; y < 36; ++y)
      for (int x = 0; x < 40; ++x)
        if (mask.contains(x, y)) {
          const double dx = x - cx, dy = y - cy;
          double k = 0.0;
          if (kind == KernelKind::normal) k = kernel_weight(dx, dy, h, kind);
          else if (kind == KernelKind::epanechnikov) k = std::hypot(dx, dy) < h ? 1.0 : 0.0;
          const double g = l(bins.at(x, y)) - lq;
          mx += k * dx * g;
          my += k * dy * g;
        }

    CHECK(s.G0 == G0);
    CHECK(s.cx == doctest::Approx(cx));
    CHECK(s.cy == doctest::Approx(cy));
    CHECK(std::abs(s.K2 - K2) < 1e-9);
    for (int v = 0; v < 5; ++v) CHECK(std::abs(s.q[static_cast<std::size_t>(v)] - q[static_cast<std::size_t>(v)]) < 1e-9);
    CHECK(std::abs(s.lq - lq) < 1e-9);
    CHECK(std::abs(s.moment.x() - mx) < 1e-9);
    CHECK(std::abs(s.moment.y() - my) < 1e-9);
  }
}

TEST_CASE("force_at follows the documented kernel formulas") {
  const BinMap bins = random_bins(30, 30, 4, 3);
  const RegionMask mask = ellipse_mask(30, 30, 14.0, 15.0, 8.0, 10.0);
  const Eigen::VectorXd l = random_duals(4, 4);
  for (KernelKind kind : {KernelKind::normal, KernelKind::epanechnikov, KernelKind::uniform}) {
    const RegionStats s = compute_stats(mask, bins, l, kind, 3.0);
    for (const auto& [x, y] : std::vector<std::pair<int, int>>{{5, 15}, {14, 4}, {22, 26}}) {
      const double dx = x - s.cx, dy = y - s.cy, g = l(bins.at(x, y)) - s.lq;
      const double w = kernel_weight(dx, dy, s.bandwidth, kind);
      const double proj = s.moment.x() * dx + s.moment.y() * dy;
      double expected = 0.0;
      if (kind == KernelKind::normal)
        expected = -proj / (9.0 * s.G0 * s.K2) - w * g / s.K2;
      else if (kind == KernelKind::epanechnikov)
        expected = -2.0 * proj / (36.0 * s.G0 * s.K2) - w * g / s.K2;
      else
        expected = -g / s.G0;
      CHECK(force_at(x, y, s, l, bins) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("force is linear in the duals") {
  const BinMap bins = random_bins(30, 30, 6, 5);
  const RegionMask mask = ellipse_mask(30, 30, 15.0, 15.0, 9.0, 7.0);
  const Eigen::VectorXd l = random_duals(6, 6);
  for (KernelKind kind : {KernelKind::normal, KernelKind::epanechnikov, KernelKind::uniform}) {
    const RegionStats a = compute_stats(mask, bins, l, kind, 3.5);
    const RegionStats b = compute_stats(mask, bins, 2.0 * l, kind, 3.5);
    for (int y = 0; y < 30; y += 3)
      for (int x = 0; x < 30; x += 3)
        CHECK(force_at(x, y, b, 2.0 * l, bins) == doctest::Approx(2.0 * force_at(x, y, a, l, bins)).epsilon(1e-12));
  }
}

TEST_CASE("a homogeneous region has zero force for every kernel") {
  BinMap bins{25, 25, 3, std::vector<int>(625, 1)};
  const RegionMask mask = ellipse_mask(25, 25, 12.0, 12.0, 7.0, 5.0);
  const Eigen::VectorXd l = random_duals(3, 7);
  for (KernelKind kind : {KernelKind::normal, KernelKind::epanechnikov, KernelKind::uniform}) {
    const RegionStats s = compute_stats(mask, bins, l, kind, sigma_from_region(mask));
    for (int y = 0; y < 25; ++y)
      for (int x = 0; x < 25; ++x) CHECK(std::abs(force_at(x, y, s, l, bins)) < 1e-15);
  }
}

TEST_CASE("finite-difference check improves as the phantom is refined") {
  // Same geometry at scales 1 and 2: the one-pixel ring is a smaller
  // perturbation at the finer scale, so the first-order prediction improves.
  auto relative_error = [](int scale) {
    const int W = 64 * scale, H = 64 * scale;
    BinMap bins{W, H, 2, std::vector<int>(static_cast<std::size_t>(W * H))};
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) bins.index[static_cast<std::size_t>(y * W + x)] = x >= 36 * scale ? 1 : 0;
    RegionMask omega(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (std::hypot(x - 30.0 * scale, y - 32.0 * scale) <= 14.0 * scale) omega.set(x, y);
    Eigen::VectorXd l(2);
    l << 0.3, -0.4;
    const double sigma = sigma_from_region(omega);
    const RegionStats s = compute_stats(omega, bins, l, KernelKind::normal, sigma);
    RegionMask grown = omega;
    double predicted = 0.0;
    for (int y = 1; y < H - 1; ++y)
      for (int x = 1; x < W - 1; ++x)
        if (!omega.contains(x, y) && (omega.contains(x + 1, y) || omega.contains(x - 1, y) ||
                                      omega.contains(x, y + 1) || omega.contains(x, y - 1))) {
          grown.set(x, y);
          predicted -= force_at(x, y, s, l, bins);
        }
    const double actual = compute_stats(grown, bins, l, KernelKind::normal, sigma).lq - s.lq;
    return std::abs(predicted - actual) / std::abs(actual);
  };
  const double e1 = relative_error(1), e2 = relative_error(2);
  CHECK(e1 < 0.15);
  CHECK(e2 < e1);
}

TEST_CASE("minimal enclosing circle matches the pair/triple brute force") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 25;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
    const Circle c = minimal_enclosing_circle(pts);
    for (const auto& [x, y] : pts) CHECK(c.contains(x, y));
    CHECK(c.r == doctest::Approx(mec_radius_brute_force(pts)).epsilon(1e-9));
  }
}

TEST_CASE("minimal enclosing circle of collinear and duplicate points") {
  const Circle c = minimal_enclosing_circle({{0, 0}, {1, 0}, {2, 0}, {4, 0}, {2, 0}});
  CHECK(c.r == doctest::Approx(2.0));
  CHECK(c.cx == doctest::Approx(2.0));
  CHECK_THROWS(minimal_enclosing_circle({}));
}

TEST_CASE("sigma is half the enclosing radius of the boundary, floored at one pixel") {
  RegionMask square(40, 40);
  for (int y = 10; y < 30; ++y)
    for (int x = 10; x < 30; ++x) square.set(x, y);
  CHECK(sigma_from_region(square) == doctest::Approx(std::hypot(19.0, 19.0) / 4.0));
  RegionMask dot(5, 5);
  dot.set(2, 2);
  CHECK(sigma_from_region(dot) == kSigmaFloor);
}

TEST_CASE("listed moment examples") {
  const Eigen::VectorXd l = random_duals(3, 12);
  BinMap single{31, 31, 3, std::vector<int>(961, 2)};
  const RegionMask disk = ellipse_mask(31, 31, 15.0, 15.0, 9.0, 9.0);
  for (KernelKind kind : {KernelKind::normal, KernelKind::epanechnikov}) {
    const RegionStats s = compute_stats(disk, single, l, kind, 4.0);
    CHECK(s.moment.norm() < 1e-12);
  }

  // Rings of alternating bins: the labelling is symmetric about the centre.
  BinMap rings{31, 31, 3, std::vector<int>(961)};
  for (int y = 0; y < 31; ++y)
    for (int x = 0; x < 31; ++x)
      rings.index[static_cast<std::size_t>(y * 31 + x)] = static_cast<int>(std::hypot(x - 15.0, y - 15.0) / 2.0) % 3;
  for (KernelKind kind : {KernelKind::normal, KernelKind::epanechnikov}) {
    const RegionStats s = compute_stats(disk, rings, l, kind, 4.0);
    CHECK(s.moment.norm() < 1e-9);
  }
}

TEST_CASE("uniform kernel force is negative where the dual exceeds its average") {
  const BinMap bins = random_bins(30, 30, 4, 13);
  const RegionMask mask = ellipse_mask(30, 30, 15.0, 15.0, 10.0, 8.0);
  const Eigen::VectorXd l = random_duals(4, 14);
  const RegionStats s = compute_stats(mask, bins, l, KernelKind::uniform, 3.0);
  for (int y = 0; y < 30; y += 2)
    for (int x = 0; x < 30; x += 2) {
      const double g = l(bins.at(x, y)) - s.lq;
      const double f = force_at(x, y, s, l, bins);
      if (g > 1e-12) CHECK(f < 0.0);
      if (g < -1e-12) CHECK(f > 0.0);
    }
}

TEST_CASE("listed sigma and enclosing circle examples") {
  RegionMask square(20, 20);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) square.set(x, y);
  CHECK(sigma_from_region(square) == doctest::Approx(9.0 * std::sqrt(2.0) / 4.0));

  const Circle c = minimal_enclosing_circle({{0, 0}, {1, 0}, {2, 0}});
  CHECK(c.r == doctest::Approx(1.0));
  CHECK(c.cx == doctest::Approx(1.0));
  CHECK(c.cy == doctest::Approx(0.0));
}
