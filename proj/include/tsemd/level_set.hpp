// Narrow-band level set on the pixel grid: phi < 0 inside. Evolution follows
// phi_t + F |grad phi| = alpha kappa |grad phi| with F an outward normal speed,
// discretized with first-order upwinding for F and central differences for
// the curvature. Reinitialization is a first-order fast-marching pass.
#pragma once

#include "tsemd/ellipse.hpp"
#include "tsemd/image.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tsemd {

class LostContourError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LevelSetGrid {
  int width = 0;
  int height = 0;
  std::vector<double> phi;
  int band_halfwidth = 6;
  /// Pixel indices (y * width + x) with |phi| <= band_halfwidth after the
  /// last reinitialization.
  std::vector<std::size_t> band;
  /// |phi| recorded at the last reinitialization, used to detect the zero set
  /// drifting toward the band edge.
  std::vector<double> anchor;

  LevelSetGrid() = default;
  LevelSetGrid(int w, int h, int band_halfwidth = 6);

  double& at(int x, int y) { return phi[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return phi[static_cast<std::size_t>(y) * width + x]; }
  /// Replicate-border access.
  double clamped(int x, int y) const;
};

struct EvolveParams {
  double alpha = 0.0002;
  int reinit_every = 50;
  int band_halfwidth = 6;
};

/// The raw ellipse quadratic on the grid, without reinitialization.
LevelSetGrid ellipse_quadratic(const Ellipse& e, int width, int height, int band_halfwidth = 6);

/// Ellipse quadratic followed by reinitialize().
LevelSetGrid init_from_ellipse(const Ellipse& e, int width, int height, int band_halfwidth = 6);

/// Signed distance to the boundary of a pixel mask (-0.5 inside / +0.5 outside,
/// then reinitialized).
LevelSetGrid grid_from_mask(const RegionMask& mask, int band_halfwidth = 6);

/// Signed distance to a circle, for tests and as a generic initializer.
LevelSetGrid circle_distance(double cx, double cy, double r, int width, int height,
                             int band_halfwidth = 6);

/// kappa = (pxx py^2 - 2 px py pxy + pyy px^2) / |grad|^3, central differences;
/// the denominator is floored at 1e-12. Positive for a convex region.
double curvature_at(const LevelSetGrid& g, int x, int y);

/// (grad+, grad-) from one-sided differences:
///   grad+ = sqrt(max(D-x,0)^2 + min(D+x,0)^2 + max(D-y,0)^2 + min(D+y,0)^2)
///   grad- = sqrt(max(D+x,0)^2 + min(D-x,0)^2 + max(D+y,0)^2 + min(D-y,0)^2)
std::pair<double, double> upwind_norms(const LevelSetGrid& g, int x, int y);

/// Central-difference gradient norm.
double central_norm(const LevelSetGrid& g, int x, int y);

inline constexpr double kCflSafety = 0.9;
inline constexpr double kMaxTimeStep = 1.0;

/// 0.9 / max over the band of |F| (|D+x| + |D+y|) / max(|grad|, 1e-6) + 4 alpha.
/// `force` is aligned with g.band. Returns kMaxTimeStep when the maximum is 0.
double cfl_dt(const LevelSetGrid& g, const std::vector<double>& force, double alpha);

/// phi -= dt (max(F,0) grad+ + min(F,0) grad-) and phi += dt alpha kappa |grad|
/// on band points only, all from the previous phi.
void evolve_step(LevelSetGrid& g, const std::vector<double>& force, const EvolveParams& params,
                 double dt);

/// Rebuilds phi as signed distance near the zero set (first-order fast
/// marching seeded by linear interpolation of sign changes), out to
/// band_halfwidth + 2; farther values are clamped with their sign kept.
/// Recomputes the band. Throws LostContourError when phi has no sign change.
void reinitialize(LevelSetGrid& g);

/// True when some contour cell sat within 2 cells of the band edge at the last
/// reinitialization, so the next step could leave the band.
bool near_band_edge(const LevelSetGrid& g);

struct ExtractedRegion {
  RegionMask mask;  // phi < 0
  std::vector<std::pair<int, int>> contour;  // cells with a 4-neighbour of opposite sign
};

/// Throws LostContourError when the region is empty.
ExtractedRegion extract_region(const LevelSetGrid& g);

/// Little-endian PFM of phi (bottom row first, per the format).
void write_pfm(std::ostream& os, const LevelSetGrid& g);
void save_pfm(const std::filesystem::path& path, const LevelSetGrid& g);

/// Gray image with the contour cells drawn in red.
RgbImage contour_overlay(const GrayImage& img, const std::vector<std::pair<int, int>>& contour);

}  // namespace tsemd
