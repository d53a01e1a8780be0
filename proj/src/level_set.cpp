#include "tsemd/level_set.hpp"

#include "tsemd/text_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <queue>

namespace tsemd {

LevelSetGrid::LevelSetGrid(int w, int h, int hw) : width(w), height(h), band_halfwidth(hw) {
  if (w < 3 || h < 3) throw std::invalid_argument("LevelSetGrid: grid must be at least 3x3");
  if (hw < 2) throw std::invalid_argument("LevelSetGrid: band half-width must be >= 2");
  phi.assign(static_cast<std::size_t>(w) * h, 0.0);
  anchor.assign(phi.size(), 0.0);
}

double LevelSetGrid::clamped(int x, int y) const {
  return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
}

LevelSetGrid ellipse_quadratic(const Ellipse& e, int width, int height, int hw) {
  if (!(e.a > 0.0) || !(e.b > 0.0))
    throw std::invalid_argument("ellipse_quadratic: radii must be positive");
  LevelSetGrid g(width, height, hw);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) g.at(x, y) = e.quadratic(x, y);
  return g;
}

LevelSetGrid init_from_ellipse(const Ellipse& e, int width, int height, int hw) {
  LevelSetGrid g = ellipse_quadratic(e, width, height, hw);
  reinitialize(g);
  return g;
}

LevelSetGrid grid_from_mask(const RegionMask& mask, int hw) {
  LevelSetGrid g(mask.width(), mask.height(), hw);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) g.at(x, y) = mask.contains(x, y) ? -0.5 : 0.5;
  reinitialize(g);
  return g;
}

LevelSetGrid circle_distance(double cx, double cy, double r, int width, int height, int hw) {
  LevelSetGrid g(width, height, hw);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) g.at(x, y) = std::hypot(x - cx, y - cy) - r;
  reinitialize(g);
  return g;
}

double curvature_at(const LevelSetGrid& g, int x, int y) {
  const double c = g.clamped(x, y);
  const double xp = g.clamped(x + 1, y), xm = g.clamped(x - 1, y);
  const double yp = g.clamped(x, y + 1), ym = g.clamped(x, y - 1);
  const double px = (xp - xm) / 2, py = (yp - ym) / 2;
  const double pxx = xp - 2 * c + xm, pyy = yp - 2 * c + ym;
  const double pxy = (g.clamped(x + 1, y + 1) - g.clamped(x + 1, y - 1) -
                      g.clamped(x - 1, y + 1) + g.clamped(x - 1, y - 1)) /
                     4;
  const double n2 = px * px + py * py;
  const double den = std::max(n2 * std::sqrt(n2), 1e-12);
  return (pxx * py * py - 2 * px * py * pxy + pyy * px * px) / den;
}

std::pair<double, double> upwind_norms(const LevelSetGrid& g, int x, int y) {
  const double c = g.clamped(x, y);
  const double dmx = c - g.clamped(x - 1, y), dpx = g.clamped(x + 1, y) - c;
  const double dmy = c - g.clamped(x, y - 1), dpy = g.clamped(x, y + 1) - c;
  auto sq = [](double v) { return v * v; };
  const double plus = std::sqrt(sq(std::max(dmx, 0.0)) + sq(std::min(dpx, 0.0)) +
                                sq(std::max(dmy, 0.0)) + sq(std::min(dpy, 0.0)));
  const double minus = std::sqrt(sq(std::max(dpx, 0.0)) + sq(std::min(dmx, 0.0)) +
                                 sq(std::max(dpy, 0.0)) + sq(std::min(dmy, 0.0)));
  return {plus, minus};
}

double central_norm(const LevelSetGrid& g, int x, int y) {
  const double px = (g.clamped(x + 1, y) - g.clamped(x - 1, y)) / 2;
  const double py = (g.clamped(x, y + 1) - g.clamped(x, y - 1)) / 2;
  return std::hypot(px, py);
}

double cfl_dt(const LevelSetGrid& g, const std::vector<double>& force, double alpha) {
  if (force.size() != g.band.size())
    throw std::invalid_argument("cfl_dt: force field is not aligned with the band");
  if (g.band.empty()) throw std::invalid_argument("cfl_dt: empty band");
  double worst = 0.0;
  for (std::size_t k = 0; k < g.band.size(); ++k) {
    const int x = static_cast<int>(g.band[k] % static_cast<std::size_t>(g.width));
    const int y = static_cast<int>(g.band[k] / static_cast<std::size_t>(g.width));
    const double c = g.at(x, y);
    const double dpx = g.clamped(x + 1, y) - c, dpy = g.clamped(x, y + 1) - c;
    const double n = std::max(central_norm(g, x, y), 1e-6);
    worst = std::max(worst, std::abs(force[k]) * (std::abs(dpx) + std::abs(dpy)) / n + 4 * alpha);
  }
  return worst > 0.0 ? kCflSafety / worst : kMaxTimeStep;
}

void evolve_step(LevelSetGrid& g, const std::vector<double>& force, const EvolveParams& params,
                 double dt) {
  if (force.size() != g.band.size())
    throw std::invalid_argument("evolve_step: force field is not aligned with the band");
  std::vector<double> next(g.band.size());
  for (std::size_t k = 0; k < g.band.size(); ++k) {
    const int x = static_cast<int>(g.band[k] % static_cast<std::size_t>(g.width));
    const int y = static_cast<int>(g.band[k] / static_cast<std::size_t>(g.width));
    const auto [plus, minus] = upwind_norms(g, x, y);
    const double f = force[k];
    double rate = -(std::max(f, 0.0) * plus + std::min(f, 0.0) * minus);
    if (params.alpha != 0.0) rate += params.alpha * curvature_at(g, x, y) * central_norm(g, x, y);
    next[k] = g.phi[g.band[k]] + dt * rate;
  }
  for (std::size_t k = 0; k < g.band.size(); ++k) g.phi[g.band[k]] = next[k];
}

namespace {

struct HeapItem {
  double t;
  std::size_t idx;
  bool operator>(const HeapItem& o) const { return t > o.t || (t == o.t && idx > o.idx); }
};

}  // namespace

void reinitialize(LevelSetGrid& g) {
  const int w = g.width, h = g.height;
  const std::size_t n = g.phi.size();
  const double inf = std::numeric_limits<double>::infinity();
  const double reach = g.band_halfwidth + 2.0;
  auto inside = [&](std::size_t i) { return g.phi[i] < 0.0; };

  // Seed: sub-cell distance to the interface for cells adjacent to a sign change.
  std::vector<double> dist(n, inf);
  std::vector<char> accepted(n, 0);
  bool any = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double p = g.phi[i];
      double inv_sum = 0.0;
      bool touching = false, zero = false;
      auto axis = [&](std::initializer_list<std::pair<int, int>> nbrs) {
        double best = inf;
        for (const auto& [nx, ny] : nbrs) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (inside(i) == inside(j)) continue;
          const double q = g.phi[j];
          const double frac = p == q ? 0.5 : p / (p - q);
          best = std::min(best, std::clamp(frac, 0.0, 1.0));
        }
        if (best == inf) return;
        touching = true;
        if (best < 1e-12)
          zero = true;
        else
          inv_sum += 1.0 / (best * best);
      };
      axis({{x - 1, y}, {x + 1, y}});
      axis({{x, y - 1}, {x, y + 1}});
      if (!touching) continue;
      any = true;
      dist[i] = zero ? 0.0 : 1.0 / std::sqrt(inv_sum);
      // Axis crossings overestimate where the interface runs diagonally; a
      // smooth phi gives a tighter first-order estimate |phi| / |grad phi|.
      const double gn = std::hypot(0.5 * (g.clamped(x + 1, y) - g.clamped(x - 1, y)),
                                   0.5 * (g.clamped(x, y + 1) - g.clamped(x, y - 1)));
      if (gn > 1e-12) dist[i] = std::min(dist[i], std::abs(p) / gn);
      accepted[i] = 1;
    }
  }
  if (!any) throw LostContourError("reinitialize: the zero level set is empty");

  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  auto solve = [&](int x, int y) {
    auto axis_min = [&](int ax, int ay, int bx, int by) {
      double m = inf;
      for (const auto& [nx, ny] : {std::pair{ax, ay}, std::pair{bx, by}}) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (accepted[j]) m = std::min(m, dist[j]);
      }
      return m;
    };
    const double a = axis_min(x - 1, y, x + 1, y);
    const double b = axis_min(x, y - 1, x, y + 1);
    if (a == inf && b == inf) return inf;
    if (a == inf || b == inf || std::abs(a - b) >= 1.0) return std::min(a, b) + 1.0;
    return (a + b + std::sqrt(2.0 - (a - b) * (a - b))) / 2.0;
  };
  auto push_neighbours = [&](std::size_t i) {
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    for (const auto& [nx, ny] : {std::pair{x - 1, y}, std::pair{x + 1, y}, std::pair{x, y - 1},
                                 std::pair{x, y + 1}}) {
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
      if (accepted[j]) continue;
      const double t = solve(nx, ny);
      if (t < dist[j]) {
        dist[j] = t;
        heap.push({t, j});
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i)
    if (accepted[i]) push_neighbours(i);
  while (!heap.empty()) {
    const HeapItem top = heap.top();
    heap.pop();
    if (accepted[top.idx] || top.t > dist[top.idx]) continue;
    if (top.t > reach) break;
    accepted[top.idx] = 1;
    push_neighbours(top.idx);
  }

  g.band.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = accepted[i] ? std::min(dist[i], reach) : reach;
    g.phi[i] = inside(i) ? -d : d;
    g.anchor[i] = d;
    if (d <= g.band_halfwidth) g.band.push_back(i);
  }
}

bool near_band_edge(const LevelSetGrid& g) {
  const double limit = g.band_halfwidth - 2.0;
  const int w = g.width, h = g.height;
  for (std::size_t i : g.band) {
    if (g.anchor[i] < limit) continue;
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    const bool in = g.phi[i] < 0.0;
    for (const auto& [nx, ny] :
         {std::pair{x - 1, y}, std::pair{x + 1, y}, std::pair{x, y - 1}, std::pair{x, y + 1}}) {
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      if ((g.at(nx, ny) < 0.0) != in) return true;
    }
  }
  return false;
}

ExtractedRegion extract_region(const LevelSetGrid& g) {
  ExtractedRegion r{RegionMask(g.width, g.height), {}};
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (g.at(x, y) < 0.0) r.mask.set(x, y);
  if (r.mask.area() == 0) throw LostContourError("extract_region: region is empty");
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const bool in = r.mask.contains(x, y);
      const bool edge = (x > 0 && r.mask.contains(x - 1, y) != in) ||
                        (x + 1 < g.width && r.mask.contains(x + 1, y) != in) ||
                        (y > 0 && r.mask.contains(x, y - 1) != in) ||
                        (y + 1 < g.height && r.mask.contains(x, y + 1) != in);
      if (edge) r.contour.emplace_back(x, y);
    }
  return r;
}

void write_pfm(std::ostream& os, const LevelSetGrid& g) {
  os << "Pf\n" << g.width << ' ' << g.height << "\n-1.0\n";
  std::vector<char> row(static_cast<std::size_t>(g.width) * 4);
  for (int y = g.height - 1; y >= 0; --y) {
    for (int x = 0; x < g.width; ++x) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(g.at(x, y)));
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(row.data() + static_cast<std::size_t>(x) * 4, &bits, 4);
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void save_pfm(const std::filesystem::path& path, const LevelSetGrid& g) {
  atomic_write(path, [&](std::ostream& os) { write_pfm(os, g); }, true);
}

RgbImage contour_overlay(const GrayImage& img, const std::vector<std::pair<int, int>>& contour) {
  RgbImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto v = static_cast<std::uint8_t>(std::clamp(std::lround(img.at(x, y)), 0L, 255L));
      out.set(x, y, v, v, v);
    }
  for (const auto& [x, y] : contour)
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) out.set(x, y, 255, 0, 0);
  return out;
}

}  // namespace tsemd
