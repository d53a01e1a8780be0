// Contour tracking by minimizing the EMD between a reference signature and
// the candidate region's signature with a level-set evolution per frame.
#pragma once

#include "tsemd/dense_sift.hpp"
#include "tsemd/initializer.hpp"
#include "tsemd/level_set.hpp"
#include "tsemd/signature.hpp"
#include "tsemd/tensor.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsemd {

struct TrackerConfig {
  int K = 3;
  int bins = 8;
  KernelKind kernel = KernelKind::normal;
  double alpha = 0.0002;
  int max_pde_iters = 2000;
  int emd_window = 20;
  double area_change_limit = 0.10;
  int reinit_every = 50;
  int band_halfwidth = 6;
  double enlarge_factor = 1.2;
  double failure_threshold = 0.8;
  int failure_run = 5;  // failure when more than this many consecutive frames exceed the threshold
  int emd_every = 1;  // recompute EMD and duals every n PDE iterations
  bool refine_first_frame = false;
  int mean_shift_bins = 16;
  int mean_shift_iters = 10;
  bool color_mean_shift = false;
  bool sift_normalize = false;
  int als_max_sweeps = 100;
  double als_tol = 1e-6;
  CpInit als_init = CpInit::uniform;
  bool als_line_search = true;
  std::uint64_t seed = 0x5eed;

  bool operator==(const TrackerConfig&) const = default;
};

/// Throws std::invalid_argument naming the first bad field.
void validate(const TrackerConfig& cfg);

struct ReferenceModel {
  CpBasis basis;
  ClusterSet clusters;
  Signature signature;
  RegionMask mask;
  MeanShiftModel mean_shift;
  KernelKind kernel = KernelKind::normal;
};

inline constexpr std::size_t kMinReferenceArea = 36;

/// Dense SIFT -> CP-ALS -> Tensor-SIFT image -> clusters of the in-mask
/// features -> reference signature -> mean-shift target.
ReferenceModel build_reference(const Frame& ref, const RegionMask& mask, const TrackerConfig& cfg);

/// Tensor-SIFT image of a frame under the model's basis.
FeatureImage frame_features(const Frame& frame, const ReferenceModel& model,
                            const TrackerConfig& cfg);

/// Ground distances between the model's cluster centres (V = U, shared centres).
Eigen::MatrixXd model_ground_distance(const ReferenceModel& model);

enum class StopReason { none, slope, area, max_iters, lost };
std::string_view stop_reason_name(StopReason r);

/// Least-squares slope of values against their index.
double trend_slope(const std::vector<double>& values);

/// Slope rule over the latest `emd_window` values (needs a full window), then
/// the area rule |now - prev| / prev > limit.
StopReason stopping_criterion(const std::vector<double>& emd_history, double area_prev,
                              double area_now, const TrackerConfig& cfg);

struct FrameResult {
  RegionMask mask;
  std::vector<std::pair<int, int>> contour;
  std::vector<double> emd_trace;
  int iterations = 0;
  StopReason stop_reason = StopReason::none;
  Ellipse initial_ellipse;
};

/// State carried between frames.
struct TrackerState {
  RegionMask previous;
  MeanShiftModel mean_shift;
};

struct TrackerHooks {
  /// Called after each evolution step with (iteration, grid).
  std::function<void(int, const LevelSetGrid&)> on_iteration;
  /// Called by run_sequence before each frame with the frame's position.
  std::function<void(int)> on_frame_start;
};

/// Evolves a level set from `initial` on the frame until a stopping rule fires.
/// `area_prev` feeds the area rule; the rule is armed only once the region
/// first comes within the limit, since the initial contour is deliberately
/// enlarged.
FrameResult evolve_region(const ReferenceModel& model, const BinMap& bins,
                          const LevelSetGrid& initial, double area_prev, const TrackerConfig& cfg,
                          const TrackerHooks& hooks = {});

FrameResult track_frame(TrackerState& state, const ReferenceModel& model, const Frame& frame,
                        const TrackerConfig& cfg, const TrackerHooks& hooks = {});

/// 1 - 2 |A n B| / (|A| + |B|); 1 when both are empty.
double overlap_error(const RegionMask& result, const RegionMask& truth);

/// True when more than cfg.failure_run consecutive errors exceed the threshold.
bool sequence_failed(const std::vector<double>& errors, const TrackerConfig& cfg);

struct SequenceResult {
  std::vector<FrameResult> frames;
  std::vector<double> overlap_errors;  // empty without ground truth
  bool failed = false;
};

/// frames[0] carries `initial_mask`, which is accepted as its result (or
/// refined when cfg.refine_first_frame is set); later frames are tracked.
SequenceResult run_sequence(const ReferenceModel& model, const std::vector<Frame>& frames,
                            const RegionMask& initial_mask, const TrackerConfig& cfg,
                            const std::vector<RegionMask>& truth = {},
                            const std::function<void(int, const FrameResult&)>& on_frame = {},
                            const TrackerHooks& hooks = {});

/// Reference model file, tag "tsemd-reference 1".
void write_reference_model(std::ostream& os, const ReferenceModel& m);
ReferenceModel read_reference_model(std::istream& is);
void save_reference_model(const std::filesystem::path& path, const ReferenceModel& m);
ReferenceModel load_reference_model(const std::filesystem::path& path);

}  // namespace tsemd
