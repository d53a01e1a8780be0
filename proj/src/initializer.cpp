#include "tsemd/initializer.hpp"

#include "tsemd/log.hpp"
#include "tsemd/text_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace tsemd {

Ellipse normalized(Ellipse e) {
  if (e.b > e.a) {
    std::swap(e.a, e.b);
    e.theta += std::numbers::pi / 2;
  }
  e.theta = std::remainder(e.theta, std::numbers::pi);  // [-pi/2, pi/2]
  if (e.theta >= std::numbers::pi / 2) e.theta -= std::numbers::pi;
  return e;
}

bool conic_to_ellipse(const double k[6], Ellipse& out) {
  const double A = k[0], B = k[1], C = k[2], D = k[3], E = k[4], F = k[5];
  const double det = 4 * A * C - B * B;
  if (!(det > 0.0)) return false;
  const double x0 = (B * E - 2 * C * D) / det;
  const double y0 = (B * D - 2 * A * E) / det;
  const double f0 = F + (D * x0 + E * y0) / 2;
  Eigen::Matrix2d Q;
  Q << A, B / 2, B / 2, C;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Q);
  const Eigen::Vector2d lam = es.eigenvalues();  // ascending
  if (!(lam(0) * f0 < 0.0) || !(lam(1) * f0 < 0.0)) return false;
  // Smallest |lambda| gives the major axis.
  const int major = std::abs(lam(0)) <= std::abs(lam(1)) ? 0 : 1;
  const int minor = 1 - major;
  Ellipse e;
  e.x0 = x0;
  e.y0 = y0;
  e.a = std::sqrt(-f0 / lam(major));
  e.b = std::sqrt(-f0 / lam(minor));
  const Eigen::Vector2d dir = es.eigenvectors().col(major);
  e.theta = std::atan2(dir.y(), dir.x());
  out = normalized(e);
  return std::isfinite(out.x0) && std::isfinite(out.y0) && std::isfinite(out.a) &&
         std::isfinite(out.b) && out.b > 0.0;
}

namespace {

Ellipse bbox_ellipse(const std::vector<std::pair<double, double>>& pts) {
  double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  Ellipse e;
  e.x0 = (x0 + x1) / 2;
  e.y0 = (y0 + y1) / 2;
  e.a = std::max((x1 - x0) / 2, 0.5);
  e.b = std::max((y1 - y0) / 2, 0.5);
  return normalized(e);
}

}  // namespace

Ellipse fit_ellipse(const std::vector<std::pair<double, double>>& points, bool* fallback) {
  if (points.empty()) throw std::invalid_argument("fit_ellipse: no points");
  auto give_up = [&](const char* why) {
    log_warning(std::string("fit_ellipse: ") + why + "; using the bounding-box ellipse");
    if (fallback) *fallback = true;
    return bbox_ellipse(points);
  };
  if (fallback) *fallback = false;
  if (points.size() < 6) return give_up("fewer than 6 points");

  const auto n = static_cast<Eigen::Index>(points.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double ss = 0;
  for (const auto& [x, y] : points) ss += (x - mx) * (x - mx) + (y - my) * (y - my);
  const double scale = std::sqrt(ss / (2.0 * static_cast<double>(n)));
  if (!(scale > 0.0)) return give_up("all points coincide");

  Eigen::MatrixXd D1(n, 3), D2(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = (points[static_cast<std::size_t>(i)].first - mx) / scale;
    const double y = (points[static_cast<std::size_t>(i)].second - my) / scale;
    D1.row(i) << x * x, x * y, y * y;
    D2.row(i) << x, y, 1.0;
  }
  const Eigen::Matrix3d S1 = D1.transpose() * D1;
  const Eigen::Matrix3d S2 = D1.transpose() * D2;
  const Eigen::Matrix3d S3 = D2.transpose() * D2;
  Eigen::FullPivLU<Eigen::Matrix3d> lu3(S3);
  lu3.setThreshold(1e-10);
  if (lu3.rank() < 3) return give_up("collinear points");
  const Eigen::Matrix3d T = -lu3.solve(S2.transpose());
  const Eigen::Matrix3d M = S1 + S2 * T;
  // Premultiply by the inverse of the constraint block [0 0 2; 0 -1 0; 2 0 0].
  Eigen::Matrix3d Mc;
  Mc.row(0) = M.row(2) / 2;
  Mc.row(1) = -M.row(1);
  Mc.row(2) = M.row(0) / 2;
  Eigen::EigenSolver<Eigen::Matrix3d> es(Mc);
  int pick = -1;
  double best = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d v = es.eigenvectors().col(k).real();
    const double cond = 4 * v(0) * v(2) - v(1) * v(1);
    if (cond > best) {
      best = cond;
      pick = k;
    }
  }
  if (pick < 0) return give_up("no elliptic solution");
  const Eigen::Vector3d a1 = es.eigenvectors().col(pick).real();
  const Eigen::Vector3d a2 = T * a1;
  const double conic[6] = {a1(0), a1(1), a1(2), a2(0), a2(1), a2(2)};
  Ellipse e;
  if (!conic_to_ellipse(conic, e)) return give_up("conic is not a real ellipse");
  e.x0 = e.x0 * scale + mx;
  e.y0 = e.y0 * scale + my;
  e.a *= scale;
  e.b *= scale;
  return e;
}

Ellipse enlarge(const Ellipse& e, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("enlarge: factor must be positive");
  Ellipse out = e;
  out.a = e.a * factor;
  out.b = e.b * factor;
  return out;
}

std::uint64_t quantize_feature(const double* f, int channels, int bins) {
  std::uint64_t code = 0;
  for (int k = 0; k < channels; ++k) {
    const int b = std::clamp(static_cast<int>(std::floor(f[k] * bins / 256.0)), 0, bins - 1);
    code = code * static_cast<std::uint64_t>(bins) + static_cast<std::uint64_t>(b);
  }
  return code;
}

namespace {

// Visits pixels inside the ellipse with their normalized radius r = q + 1 in [0, 1].
template <class Fn>
void for_each_in_ellipse(int width, int height, const Ellipse& e, Fn&& fn) {
  const double ext = std::max(e.a, e.b);
  const int x0 = std::max(0, static_cast<int>(std::floor(e.x0 - ext)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(e.x0 + ext)));
  const int y0 = std::max(0, static_cast<int>(std::floor(e.y0 - ext)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(e.y0 + ext)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double r = e.quadratic(x, y) + 1.0;
      if (r < 1.0) fn(x, y, r);
    }
}

}  // namespace

std::map<std::uint64_t, double> kernel_histogram(const FeatureImage& fi, const Ellipse& window,
                                                 int bins) {
  std::map<std::uint64_t, double> h;
  double total = 0.0;
  for_each_in_ellipse(fi.width, fi.height, window, [&](int x, int y, double r) {
    const double w = 1.0 - r;
    h[quantize_feature(fi.feature(x, y), fi.channels, bins)] += w;
    total += w;
  });
  if (total > 0.0)
    for (auto& [code, v] : h) v /= total;
  return h;
}

MeanShiftModel build_mean_shift_model(const FeatureImage& fi, const Ellipse& window, int bins,
                                      int max_iters) {
  if (bins < 2) throw std::invalid_argument("mean shift: need at least 2 bins per channel");
  double levels = 1.0;
  for (int k = 0; k < fi.channels; ++k) levels *= bins;
  if (levels > 1.8e19) throw std::invalid_argument("mean shift: histogram too large");
  MeanShiftModel m;
  m.channels = fi.channels;
  m.bins_per_channel = bins;
  m.max_iters = max_iters;
  m.window = window;
  m.histogram = kernel_histogram(fi, window, bins);
  if (m.histogram.empty()) throw std::invalid_argument("mean shift: model window is empty");
  return m;
}

MeanShiftResult mean_shift_relocate(const FeatureImage& fi, const MeanShiftModel& model,
                                    const Ellipse& start) {
  if (fi.channels != model.channels)
    throw std::invalid_argument("mean shift: feature dimension does not match the model");
  MeanShiftResult res;
  res.ellipse = start;
  for (int it = 0; it < model.max_iters; ++it) {
    const auto cand = kernel_histogram(fi, res.ellipse, model.bins_per_channel);
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for_each_in_ellipse(fi.width, fi.height, res.ellipse, [&](int x, int y, double) {
      const auto code = quantize_feature(fi.feature(x, y), fi.channels, model.bins_per_channel);
      const auto qt = model.histogram.find(code);
      if (qt == model.histogram.end()) return;
      const double p = cand.at(code);
      if (!(p > 0.0)) return;
      const double w = std::sqrt(qt->second / p);
      sw += w;
      sx += w * x;
      sy += w * y;
    });
    if (!(sw > 0.0)) {
      res.ok = false;
      return res;
    }
    const double nx = sx / sw, ny = sy / sw;
    const double shift = std::hypot(nx - res.ellipse.x0, ny - res.ellipse.y0);
    res.ellipse.x0 = nx;
    res.ellipse.y0 = ny;
    res.shifts.push_back(shift);
    res.iterations = it + 1;
    if (shift < model.min_shift) break;
  }
  return res;
}

FeatureImage color_feature_image(const RgbImage& img) {
  FeatureImage fi;
  fi.width = img.width;
  fi.height = img.height;
  fi.channels = 3;
  fi.values.assign(img.rgb.begin(), img.rgb.end());
  return fi;
}

void write_mean_shift_model(std::ostream& os, const MeanShiftModel& m) {
  os << "meanshift " << m.channels << ' ' << m.bins_per_channel << ' ' << m.max_iters << ' '
     << format_double(m.min_shift) << '\n';
  os << "window " << format_double(m.window.x0) << ' ' << format_double(m.window.y0) << ' '
     << format_double(m.window.a) << ' ' << format_double(m.window.b) << ' '
     << format_double(m.window.theta) << '\n';
  os << "histogram " << m.histogram.size() << '\n';
  for (const auto& [code, v] : m.histogram) os << code << ' ' << format_double(v) << '\n';
}

MeanShiftModel read_mean_shift_model(std::istream& is) {
  MeanShiftModel m;
  expect_word(is, "meanshift");
  m.channels = read_value<int>(is);
  m.bins_per_channel = read_value<int>(is);
  m.max_iters = read_value<int>(is);
  m.min_shift = read_value<double>(is);
  expect_word(is, "window");
  m.window.x0 = read_value<double>(is);
  m.window.y0 = read_value<double>(is);
  m.window.a = read_value<double>(is);
  m.window.b = read_value<double>(is);
  m.window.theta = read_value<double>(is);
  expect_word(is, "histogram");
  const auto n = read_value<std::size_t>(is);
  for (std::size_t i = 0; i < n; ++i) {
    const auto code = read_value<std::uint64_t>(is);
    m.histogram[code] = read_value<double>(is);
  }
  if (m.channels < 1 || m.bins_per_channel < 2 || m.max_iters < 1)
    throw FormatError("mean-shift model: invalid header values");
  return m;
}

}  // namespace tsemd
