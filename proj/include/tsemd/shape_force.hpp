// Boundary speed derived from the shape derivative of sum_v l_v q_v(Omega)
// with the duals l frozen. F > 0 means that growing the region at z lowers
// the EMD, so F is used as an outward normal speed.
#pragma once

#include "tsemd/image.hpp"
#include "tsemd/signature.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace tsemd {

struct RegionStats {
  double G0 = 0.0;  // area in pixels
  double cx = 0.0, cy = 0.0;
  double K2 = 0.0;  // sum of kernel weights over the region
  std::vector<double> q;
  double lq = 0.0;  // sum_v l_v q_v
  KernelKind kind = KernelKind::normal;
  double sigma = 1.0;
  double bandwidth = 1.0;  // value handed to kernel_weight
  /// M = sum_{z in Omega} k(z - zc) (z - zc) g(z), with g(z) = l_{bin(z)} - lq
  /// and k = w (normal), 1[|z - zc| < h] (Epanechnikov), 0 (uniform).
  Eigen::Vector2d moment = Eigen::Vector2d::Zero();
};

RegionStats compute_stats(const RegionMask& mask, const BinMap& bins,
                          const Eigen::VectorXd& l, KernelKind kind, double sigma);

/// normal:        F = -<M, z - zc> / (s^2 G0 K2) - w(z - zc) g(z) / K2
/// Epanechnikov:  F = -2 <M, z - zc> / (h^2 G0 K2) - w(z - zc) g(z) / K2
/// uniform:       F = -g(z) / G0
double force_at(int x, int y, const RegionStats& stats, const Eigen::VectorXd& l,
                const BinMap& bins);

struct Circle {
  double cx = 0.0, cy = 0.0, r = 0.0;
  bool contains(double x, double y, double eps = 1e-7) const;
};

/// Smallest circle containing every point (randomized incremental
/// construction, shuffled with a fixed seed so the result is deterministic).
Circle minimal_enclosing_circle(std::vector<std::pair<double, double>> points);

/// Half the radius of the minimal enclosing circle of the region boundary,
/// floored at 1 pixel.
double sigma_from_region(const RegionMask& mask);

inline constexpr double kSigmaFloor = 1.0;

}  // namespace tsemd
