#include <doctest.h>

#include "tsemd/level_set.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <tuple>
#include <random>
#include <sstream>

using namespace tsemd;

namespace {

double max_zero_set_shift(const LevelSetGrid& before, const LevelSetGrid& after) {
  double shift = 0.0;
  for (const auto& [x, y] : extract_region(before).contour)
    shift = std::max(shift, std::abs(after.at(x, y) - before.at(x, y)));
  return shift;
}

}  // namespace

TEST_CASE("grid construction validates its size") {
  CHECK_THROWS(LevelSetGrid(2, 10));
  CHECK_THROWS(LevelSetGrid(10, 10, 1));
  const LevelSetGrid g(5, 4);
  CHECK(g.phi.size() == 20);
  CHECK(g.clamped(-3, 10) == g.at(0, 3));
}

TEST_CASE("circle_distance is a first-order accurate signed distance") {
  LevelSetGrid g = circle_distance(30.3, 28.6, 12.4, 64, 60);
  for (std::size_t i : g.band) {
    const int x = static_cast<int>(i % 64), y = static_cast<int>(i / 64);
    const double exact = std::hypot(x - 30.3, y - 28.6) - 12.4;
    CHECK(std::abs(g.phi[i] - exact) <= 0.05 + 0.04 * std::abs(exact));
  }
  CHECK(g.at(30, 28) < 0.0);
}

TEST_CASE("ellipse initialization is negative inside") {
  const Ellipse e{20.0, 18.0, 9.0, 5.0, 0.4};
  const LevelSetGrid q = ellipse_quadratic(e, 40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) CHECK((q.at(x, y) < 0.0) == (e.quadratic(x, y) < 0.0));
  const LevelSetGrid d = init_from_ellipse(e, 40, 40);
  const RegionMask m = extract_region(d).mask;
  int disagree = 0;
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) disagree += m.contains(x, y) != e.contains(x, y);
  CHECK(disagree == 0);
}

TEST_CASE("reinitialization produces unit gradients near the front") {
  // The ellipse's distance function has a kink on its medial axis, at least
  // b^2 / a = 7.6 cells inside; stay within 2 cells of the front.
  for (const Ellipse& e : {Ellipse{32, 32, 15, 15, 0.0}, Ellipse{32, 30, 16, 11, 0.6}}) {
    LevelSetGrid g = init_from_ellipse(e, 64, 64);
    for (std::size_t i : g.band) {
      const int x = static_cast<int>(i % 64), y = static_cast<int>(i / 64);
      if (x == 0 || y == 0 || x == 63 || y == 63 || std::abs(g.phi[i]) > 2.0) continue;
      const double n = central_norm(g, x, y);
      CHECK(n >= 0.9);
      CHECK(n <= 1.1);
    }
  }
}

TEST_CASE("reinitialization is idempotent to well under a tenth of a cell") {
  LevelSetGrid g = init_from_ellipse(Ellipse{30, 34, 14, 9, -0.3}, 64, 64);
  const LevelSetGrid once = g;
  reinitialize(g);
  CHECK(max_zero_set_shift(once, g) < 0.1);
  LevelSetGrid c = circle_distance(32.0, 32.0, 15.0, 64, 64);
  const LevelSetGrid exact = c;
  reinitialize(c);
  CHECK(max_zero_set_shift(exact, c) < 0.1);
}

TEST_CASE("reinitialization band and clamping") {
  LevelSetGrid g = circle_distance(32.0, 32.0, 10.0, 64, 64, 4);
  reinitialize(g);
  for (std::size_t i = 0; i < g.phi.size(); ++i) {
    CHECK(std::abs(g.phi[i]) <= 6.0 + 1e-12);
    CHECK(g.anchor[i] == doctest::Approx(std::abs(g.phi[i])));
  }
  for (std::size_t i : g.band) CHECK(std::abs(g.phi[i]) <= 4.0);
  CHECK(!near_band_edge(g));
}

TEST_CASE("reinitialization without a zero level set throws") {
  LevelSetGrid g(10, 10);
  std::fill(g.phi.begin(), g.phi.end(), 1.0);
  CHECK_THROWS_AS(reinitialize(g), LostContourError);
  CHECK_THROWS_AS(extract_region(g), LostContourError);
}

TEST_CASE("curvature of a circle is the inverse radius") {
  for (double r : {8.0, 12.0, 20.0}) {
    const LevelSetGrid g = circle_distance(40.0, 40.0, r, 80, 80);
    const int x = 40 + static_cast<int>(r);
    CHECK(curvature_at(g, x, 40) == doctest::Approx(1.0 / r).epsilon(0.05));
    CHECK(curvature_at(g, 40, 40 - static_cast<int>(r)) == doctest::Approx(1.0 / r).epsilon(0.05));
  }
}

TEST_CASE("upwind norms of a signed distance are one") {
  const LevelSetGrid g = circle_distance(30.0, 30.0, 10.0, 60, 60);
  const auto [gp, gm] = upwind_norms(g, 43, 31);
  CHECK(gp == doctest::Approx(1.0).epsilon(0.05));
  CHECK(gm == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("cfl step keeps the per-step change within one cell") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 10; ++trial) {
    LevelSetGrid g = init_from_ellipse(Ellipse{32, 32, 12, 8, 0.2 * trial}, 64, 64);
    std::vector<double> force(g.band.size());
    for (double& f : force) f = u(rng);
    EvolveParams p;
    p.alpha = 0.05 * trial;
    const LevelSetGrid before = g;
    const double dt = cfl_dt(g, force, p.alpha);
    CHECK(dt > 0.0);
    evolve_step(g, force, p, dt);
    double change = 0.0;
    for (std::size_t i : g.band) change = std::max(change, std::abs(g.phi[i] - before.phi[i]));
    CHECK(change <= 1.0);
  }
}

TEST_CASE("zero speed and zero curvature weight give the maximum step") {
  const LevelSetGrid g = circle_distance(20, 20, 6, 40, 40);
  CHECK(cfl_dt(g, std::vector<double>(g.band.size(), 0.0), 0.0) == kMaxTimeStep);
}

TEST_CASE("evolution touches band cells only") {
  LevelSetGrid g = circle_distance(32, 32, 12, 64, 64);
  const LevelSetGrid before = g;
  const std::vector<double> force(g.band.size(), 1.0);
  evolve_step(g, force, {}, cfl_dt(g, force, 0.0002));
  std::vector<char> in_band(g.phi.size(), 0);
  for (std::size_t i : g.band) in_band[i] = 1;
  for (std::size_t i = 0; i < g.phi.size(); ++i)
    if (!in_band[i]) CHECK(g.phi[i] == before.phi[i]);
}

TEST_CASE("constant outward speed moves a circle front at that speed") {
  for (double c : {0.5, 1.0, -0.7}) {
    LevelSetGrid g = circle_distance(40, 40, 15, 80, 80);
    auto area = [&] {
      double a = 0.0;
      for (double v : g.phi) a += std::clamp(0.5 - v, 0.0, 1.0);
      return a;
    };
    const double r0 = std::sqrt(area() / std::numbers::pi);
    EvolveParams p;
    p.alpha = 0.0;
    double t = 0.0;
    for (int step = 0; step < 20; ++step) {
      const std::vector<double> f(g.band.size(), c);
      const double dt = cfl_dt(g, f, 0.0);
      evolve_step(g, f, p, dt);
      t += dt;
      if (near_band_edge(g)) reinitialize(g);
    }
    const double speed = (std::sqrt(area() / std::numbers::pi) - r0) / t;
    CHECK(speed == doctest::Approx(c).epsilon(0.10));
  }
}

TEST_CASE("curvature flow shrinks a circle") {
  LevelSetGrid g = circle_distance(32, 32, 10, 64, 64);
  const std::size_t a0 = extract_region(g).mask.area();
  EvolveParams p;
  p.alpha = 1.0;
  for (int step = 0; step < 20; ++step) {
    const std::vector<double> f(g.band.size(), 0.0);
    evolve_step(g, f, p, cfl_dt(g, f, p.alpha));
  }
  CHECK(extract_region(g).mask.area() < a0);
}

TEST_CASE("the zero set drifting toward the band edge is detected") {
  LevelSetGrid g = circle_distance(32, 32, 12, 64, 64);
  CHECK(!near_band_edge(g));
  for (double& v : g.phi) v -= 4.5;  // front moves 4.5 cells outward
  CHECK(near_band_edge(g));
}

TEST_CASE("mask round-trip through the level set") {
  RegionMask m(30, 20);
  for (int y = 4; y < 15; ++y)
    for (int x = 6; x < 22; ++x) m.set(x, y);
  m.set(5, 9);
  const LevelSetGrid g = grid_from_mask(m);
  const ExtractedRegion r = extract_region(g);
  CHECK(r.mask == m);
  for (const auto& [x, y] : r.contour) {
    const bool inside = g.at(x, y) < 0.0;
    bool opposite = false;
    for (const auto& [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int nx = x + dx, ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < 30 && ny < 20) opposite |= (g.at(nx, ny) < 0.0) != inside;
    }
    CHECK(opposite);
  }
}

TEST_CASE("PFM export writes bottom row first") {
  LevelSetGrid g(4, 3);
  for (int i = 0; i < 12; ++i) g.phi[static_cast<std::size_t>(i)] = i;
  std::ostringstream os;
  write_pfm(os, g);
  const std::string s = os.str();
  const std::string header = "Pf\n4 3\n-1.0\n";
  REQUIRE(s.substr(0, header.size()) == header);
  REQUIRE(s.size() == header.size() + 12 * 4);
  float first;
  std::memcpy(&first, s.data() + header.size(), 4);
  CHECK(first == 8.0f);  // pixel (0, 2)
}

TEST_CASE("contour overlay draws red on gray") {
  GrayImage img(4, 4, 100.0);
  const RgbImage o = contour_overlay(img, {{1, 2}});
  CHECK(o.rgb[(2 * 4 + 1) * 3] == 255);
  CHECK(o.rgb[(2 * 4 + 1) * 3 + 1] == 0);
  CHECK(o.rgb[0] == 100);
}

TEST_CASE("initial quadratic values and the reinitialized circle depth") {
  const Ellipse c{20.0, 18.0, 5.0, 5.0, 0.0};
  const LevelSetGrid q = ellipse_quadratic(c, 40, 40);
  CHECK(q.at(25, 18) == doctest::Approx(0.0).scale(1.0));
  CHECK(q.at(20, 18) == -1.0);
  const LevelSetGrid d = init_from_ellipse(c, 40, 40);
  CHECK(std::abs(d.at(20, 18) + 5.0) < 1.0);
  CHECK_THROWS(init_from_ellipse(Ellipse{20, 18, 0.0, 5.0, 0.0}, 40, 40));
}

TEST_CASE("straight interface has zero curvature") {
  LevelSetGrid g(30, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 30; ++x) g.at(x, y) = 0.6 * (x - 14.3) + 0.8 * (y - 15.1);
  for (int y = 2; y < 28; y += 5)
    for (int x = 2; x < 28; x += 5) CHECK(std::abs(curvature_at(g, x, y)) < 1e-6);
}

TEST_CASE("upwind norms follow the one-sided formula") {
  LevelSetGrid ramp(10, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) ramp.at(x, y) = x;
  auto [p, m] = upwind_norms(ramp, 5, 5);
  CHECK(p == 1.0);
  CHECK(m == 1.0);
  const LevelSetGrid flat(10, 10);
  std::tie(p, m) = upwind_norms(flat, 5, 5);
  CHECK(p == 0.0);
  CHECK(m == 0.0);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  LevelSetGrid g(12, 12);
  for (double& v : g.phi) v = u(rng);
  auto pos = [](double v) { return std::max(v, 0.0); };
  auto neg = [](double v) { return std::min(v, 0.0); };
  for (int y = 1; y < 11; ++y)
    for (int x = 1; x < 11; ++x) {
      const double dmx = g.at(x, y) - g.at(x - 1, y), dpx = g.at(x + 1, y) - g.at(x, y);
      const double dmy = g.at(x, y) - g.at(x, y - 1), dpy = g.at(x, y + 1) - g.at(x, y);
      const double plus = std::sqrt(pos(dmx) * pos(dmx) + neg(dpx) * neg(dpx) + pos(dmy) * pos(dmy) +
                                    neg(dpy) * neg(dpy));
      const double minus = std::sqrt(pos(dpx) * pos(dpx) + neg(dmx) * neg(dmx) +
                                     pos(dpy) * pos(dpy) + neg(dmy) * neg(dmy));
      const auto [gp, gm] = upwind_norms(g, x, y);
      CHECK(gp == doctest::Approx(plus).epsilon(1e-14));
      CHECK(gm == doctest::Approx(minus).epsilon(1e-14));
    }
}

TEST_CASE("cfl step scales with the force and satisfies the stability inequality") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const LevelSetGrid g = init_from_ellipse(Ellipse{30, 30, 12, 7, 0.5}, 60, 60);
  std::vector<double> f(g.band.size());
  for (double& v : f) v = u(rng);
  std::vector<double> f2 = f;
  for (double& v : f2) v *= 2.0;
  CHECK(cfl_dt(g, f2, 0.0) == doctest::Approx(cfl_dt(g, f, 0.0) / 2.0));

  const double alpha = 0.3;
  const double dt = cfl_dt(g, f, alpha);
  for (std::size_t k = 0; k < g.band.size(); ++k) {
    const int x = static_cast<int>(g.band[k] % 60), y = static_cast<int>(g.band[k] / 60);
    const double dpx = g.clamped(x + 1, y) - g.at(x, y), dpy = g.clamped(x, y + 1) - g.at(x, y);
    const double n = std::max(central_norm(g, x, y), 1e-6);
    CHECK(dt * (std::abs(f[k]) * (std::abs(dpx) + std::abs(dpy)) / n + 4 * alpha) < 1.0);
  }
  CHECK_THROWS(cfl_dt(g, std::vector<double>(3, 1.0), 0.0));
}

TEST_CASE("zero speed without curvature leaves phi unchanged") {
  LevelSetGrid g = init_from_ellipse(Ellipse{30, 30, 12, 7, 0.5}, 60, 60);
  const LevelSetGrid before = g;
  EvolveParams p;
  p.alpha = 0.0;
  evolve_step(g, std::vector<double>(g.band.size(), 0.0), p, 1.0);
  CHECK(g.phi == before.phi);
}

TEST_CASE("curvature flow follows dr/dt = -alpha / r") {
  const double r0 = 12.0, alpha = 1.0;
  LevelSetGrid g = circle_distance(40, 40, r0, 80, 80);
  auto radius = [&] {
    double a = 0.0;
    for (double v : g.phi) a += std::clamp(0.5 - v, 0.0, 1.0);
    return std::sqrt(a / std::numbers::pi);
  };
  const double m0 = radius();
  EvolveParams p;
  p.alpha = alpha;
  double t = 0.0;
  for (int step = 0; step < 20; ++step) {
    const std::vector<double> f(g.band.size(), 0.0);
    const double dt = cfl_dt(g, f, alpha);
    evolve_step(g, f, p, dt);
    t += dt;
  }
  const double expected = std::sqrt(m0 * m0 - 2 * alpha * t) - m0;
  CHECK((radius() - m0) == doctest::Approx(expected).epsilon(0.15));
}

TEST_CASE("extracted region of a circle") {
  const LevelSetGrid g = circle_distance(32, 32, 10, 64, 64);
  const ExtractedRegion r = extract_region(g);
  CHECK(static_cast<double>(r.mask.area()) == doctest::Approx(std::numbers::pi * 100).epsilon(0.05));
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) CHECK(r.mask.contains(x, y) == (g.at(x, y) < 0.0));
  for (const auto& [x, y] : r.contour) CHECK(std::abs(g.at(x, y)) <= std::sqrt(2.0));
}
