// Inter-frame initialization: fit an ellipse to the previous contour, move it
// with mean shift on the current frame, then enlarge it.
#pragma once

#include "tsemd/dense_sift.hpp"
#include "tsemd/ellipse.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

namespace tsemd {

/// Direct least-squares ellipse fit (Fitzgibbon's constraint 4AC - B^2 = 1,
/// solved through the reduced 3x3 eigenproblem of Halir and Flusser) on
/// centroid/scale-normalized points. Fewer than 6 points, collinear input or
/// a non-elliptic solution falls back to the ellipse inscribed in the
/// bounding box, logs a warning and sets *fallback.
Ellipse fit_ellipse(const std::vector<std::pair<double, double>>& points,
                    bool* fallback = nullptr);

/// Conic A x^2 + B xy + C y^2 + D x + E y + F = 0 to normalized geometric
/// parameters. Returns false for anything that is not a real ellipse.
bool conic_to_ellipse(const double conic[6], Ellipse& out);

/// Normalizes a >= b and theta into [-pi/2, pi/2).
Ellipse normalized(Ellipse e);

Ellipse enlarge(const Ellipse& e, double factor);

struct MeanShiftModel {
  int channels = 0;
  int bins_per_channel = 16;
  int max_iters = 10;
  double min_shift = 0.5;
  Ellipse window;  // shape of the kernel; its centre is ignored when relocating
  std::map<std::uint64_t, double> histogram;  // sums to 1
};

/// Quantizes each channel of a [0, 255] feature into bins_per_channel levels.
std::uint64_t quantize_feature(const double* feature, int channels, int bins_per_channel);

/// Epanechnikov-weighted histogram of the pixels inside `window`.
std::map<std::uint64_t, double> kernel_histogram(const FeatureImage& fi, const Ellipse& window,
                                                 int bins_per_channel);

MeanShiftModel build_mean_shift_model(const FeatureImage& fi, const Ellipse& window,
                                      int bins_per_channel = 16, int max_iters = 10);

struct MeanShiftResult {
  Ellipse ellipse;
  int iterations = 0;
  bool ok = true;  // false when the candidate window held no usable pixels
  std::vector<double> shifts;
};

/// Moves only the centre of `start` (its a, b, theta are kept).
MeanShiftResult mean_shift_relocate(const FeatureImage& fi, const MeanShiftModel& model,
                                    const Ellipse& start);

/// Three-channel feature image straight from RGB, for mean shift on colour.
FeatureImage color_feature_image(const RgbImage& img);

void write_mean_shift_model(std::ostream& os, const MeanShiftModel& m);
MeanShiftModel read_mean_shift_model(std::istream& is);

}  // namespace tsemd
