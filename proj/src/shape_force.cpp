#include "tsemd/shape_force.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tsemd {

RegionStats compute_stats(const RegionMask& mask, const BinMap& bins, const Eigen::VectorXd& l,
                          KernelKind kind, double sigma) {
  if (mask.width() != bins.width || mask.height() != bins.height)
    throw std::invalid_argument("compute_stats: mask and bin map sizes differ");
  if (l.size() != bins.bins)
    throw std::invalid_argument("compute_stats: dual vector length does not match bin count");
  if (mask.area() == 0) throw std::invalid_argument("compute_stats: empty region");
  if (!(sigma > 0.0)) throw std::invalid_argument("compute_stats: sigma must be positive");

  RegionStats s;
  s.kind = kind;
  s.sigma = sigma;
  s.bandwidth = kernel_bandwidth(sigma, kind);
  s.G0 = static_cast<double>(mask.area());
  std::tie(s.cx, s.cy) = mask.centroid();
  s.q.assign(static_cast<std::size_t>(bins.bins), 0.0);

  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.contains(x, y)) continue;
      const double w = kernel_weight(x - s.cx, y - s.cy, s.bandwidth, kind);
      s.K2 += w;
      s.q[static_cast<std::size_t>(bins.at(x, y))] += w;
    }
  if (!(s.K2 > 0.0)) throw std::domain_error("compute_stats: kernel mass is zero");
  for (std::size_t v = 0; v < s.q.size(); ++v) {
    s.q[v] /= s.K2;
    s.lq += l(static_cast<Eigen::Index>(v)) * s.q[v];
  }

  if (kind == KernelKind::uniform) return s;
  const double h2 = s.bandwidth * s.bandwidth;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.contains(x, y)) continue;
      const double dx = x - s.cx, dy = y - s.cy;
      double k;
      if (kind == KernelKind::normal)
        k = kernel_weight(dx, dy, s.bandwidth, kind);
      else
        k = dx * dx + dy * dy < h2 ? 1.0 : 0.0;
      const double g = l(bins.at(x, y)) - s.lq;
      s.moment += k * g * Eigen::Vector2d(dx, dy);
    }
  return s;
}

double force_at(int x, int y, const RegionStats& s, const Eigen::VectorXd& l, const BinMap& bins) {
  const double g = l(bins.at(x, y)) - s.lq;
  if (s.kind == KernelKind::uniform) return -g / s.G0;
  const double dx = x - s.cx, dy = y - s.cy;
  const double w = kernel_weight(dx, dy, s.bandwidth, s.kind);
  const double proj = s.moment.x() * dx + s.moment.y() * dy;
  const double pre = s.kind == KernelKind::normal ? 1.0 / (s.sigma * s.sigma)
                                                  : 2.0 / (s.bandwidth * s.bandwidth);
  return -pre * proj / (s.G0 * s.K2) - w * g / s.K2;
}

bool Circle::contains(double x, double y, double eps) const {
  return std::hypot(x - cx, y - cy) <= r + eps * std::max(1.0, r);
}

namespace {

Circle from_two(std::pair<double, double> a, std::pair<double, double> b) {
  return {(a.first + b.first) / 2, (a.second + b.second) / 2,
          std::hypot(a.first - b.first, a.second - b.second) / 2};
}

Circle from_three(std::pair<double, double> a, std::pair<double, double> b,
                  std::pair<double, double> c) {
  const double bx = b.first - a.first, by = b.second - a.second;
  const double cx = c.first - a.first, cy = c.second - a.second;
  const double d = 2 * (bx * cy - by * cx);
  const double scale = std::max({std::abs(bx), std::abs(by), std::abs(cx), std::abs(cy), 1.0});
  if (std::abs(d) < 1e-12 * scale * scale) {
    // Collinear: the farthest pair spans the other point.
    Circle best = from_two(a, b);
    for (const Circle& cand : {from_two(a, c), from_two(b, c)})
      if (cand.r > best.r) best = cand;
    return best;
  }
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d, uy = (bx * c2 - cx * b2) / d;
  return {a.first + ux, a.second + uy, std::hypot(ux, uy)};
}

}  // namespace

Circle minimal_enclosing_circle(std::vector<std::pair<double, double>> pts) {
  if (pts.empty()) throw std::invalid_argument("minimal_enclosing_circle: no points");
  std::mt19937_64 rng(0x5eed);
  std::shuffle(pts.begin(), pts.end(), rng);
  Circle c{pts[0].first, pts[0].second, 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (c.contains(pts[i].first, pts[i].second)) continue;
    c = {pts[i].first, pts[i].second, 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (c.contains(pts[j].first, pts[j].second)) continue;
      c = from_two(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k)
        if (!c.contains(pts[k].first, pts[k].second)) c = from_three(pts[i], pts[j], pts[k]);
    }
  }
  return c;
}

double sigma_from_region(const RegionMask& mask) {
  const auto boundary = mask.boundary_pixels();
  if (boundary.empty()) throw std::invalid_argument("sigma_from_region: empty region");
  std::vector<std::pair<double, double>> pts;
  pts.reserve(boundary.size());
  for (const auto& [x, y] : boundary) pts.emplace_back(x, y);
  return std::max(kSigmaFloor, minimal_enclosing_circle(std::move(pts)).r / 2.0);
}

}  // namespace tsemd
