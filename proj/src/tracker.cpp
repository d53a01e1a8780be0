#include "tsemd/tracker.hpp"

#include "tsemd/emd.hpp"
#include "tsemd/log.hpp"
#include "tsemd/shape_force.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsemd {

void validate(const TrackerConfig& c) {
  auto need = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw std::invalid_argument(std::string(field) + " must be " + rule);
  };
  need(c.K >= 1, "K", ">= 1");
  need(c.bins >= 1, "bins", ">= 1");
  need(c.alpha >= 0.0 && std::isfinite(c.alpha), "alpha", "finite and >= 0");
  need(c.max_pde_iters >= 1, "max_pde_iters", ">= 1");
  need(c.emd_window >= 2, "emd_window", ">= 2");
  need(c.area_change_limit > 0.0 && c.area_change_limit < 1.0, "area_change_limit", "in (0, 1)");
  need(c.reinit_every >= 1, "reinit_every", ">= 1");
  need(c.band_halfwidth >= 3, "band_halfwidth", ">= 3");
  need(c.enlarge_factor > 0.0 && std::isfinite(c.enlarge_factor), "enlarge_factor", "> 0");
  need(c.failure_threshold > 0.0 && c.failure_threshold < 1.0, "failure_threshold", "in (0, 1)");
  need(c.failure_run >= 1, "failure_run", ">= 1");
  need(c.emd_every >= 1, "emd_every", ">= 1");
  need(c.mean_shift_bins >= 2 && c.mean_shift_bins <= 256, "mean_shift_bins", "in [2, 256]");
  need(c.mean_shift_iters >= 1, "mean_shift_iters", ">= 1");
  need(c.als_max_sweeps >= 1, "als_max_sweeps", ">= 1");
  need(c.als_tol > 0.0 && c.als_tol < 1.0, "als_tol", "in (0, 1)");
}

namespace {

std::vector<std::pair<double, double>> boundary_points(const RegionMask& m) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : m.boundary_pixels()) pts.emplace_back(x, y);
  return pts;
}

const FeatureImage& mean_shift_space(const Frame& frame, const FeatureImage& tensor,
                                     const TrackerConfig& cfg, FeatureImage& storage) {
  if (cfg.color_mean_shift && frame.color) {
    storage = color_feature_image(*frame.color);
    return storage;
  }
  return tensor;
}

}  // namespace

FeatureImage frame_features(const Frame& frame, const ReferenceModel& model,
                            const TrackerConfig& cfg) {
  SiftOptions so;
  so.normalize = cfg.sift_normalize;
  return tensor_sift_image(frame.gray, model.basis, so);
}

ReferenceModel build_reference(const Frame& ref, const RegionMask& mask, const TrackerConfig& cfg) {
  validate(cfg);
  if (mask.width() != ref.gray.width || mask.height() != ref.gray.height)
    throw std::invalid_argument("build_reference: mask and image sizes differ");
  if (mask.area() < kMinReferenceArea)
    throw std::invalid_argument("build_reference: reference mask has " +
                                std::to_string(mask.area()) + " pixels, need at least " +
                                std::to_string(kMinReferenceArea));

  ReferenceModel m;
  m.kernel = cfg.kernel;
  m.mask = mask;
  SiftOptions so;
  so.normalize = cfg.sift_normalize;
  CpAlsOptions ao;
  ao.max_sweeps = cfg.als_max_sweeps;
  ao.tol = cfg.als_tol;
  ao.seed = cfg.seed;
  ao.init = cfg.als_init;
  ao.line_search = cfg.als_line_search;
  m.basis = CpBasis::from_model(cp_als(dense_sift(ref.gray, so), cfg.K, ao));

  const FeatureImage fi = frame_features(ref, m, cfg);
  Eigen::MatrixXd inside(static_cast<Eigen::Index>(mask.area()), fi.channels);
  Eigen::Index row = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.contains(x, y)) {
        for (int k = 0; k < fi.channels; ++k) inside(row, k) = fi.feature(x, y)[k];
        ++row;
      }
  m.clusters = cluster_features(inside, cfg.bins);
  const BinMap bins = bin_image(fi, m.clusters);
  const double sigma = sigma_from_region(mask);
  m.signature = build_signature(mask, bins, cfg.kernel, kernel_bandwidth(sigma, cfg.kernel));

  FeatureImage color;
  const FeatureImage& ms = mean_shift_space(ref, fi, cfg, color);
  m.mean_shift = build_mean_shift_model(ms, fit_ellipse(boundary_points(mask)),
                                        cfg.mean_shift_bins, cfg.mean_shift_iters);
  return m;
}

Eigen::MatrixXd model_ground_distance(const ReferenceModel& model) {
  return ground_distance(model.clusters, model.clusters);
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::slope: return "slope";
    case StopReason::area: return "area";
    case StopReason::max_iters: return "max_iters";
    case StopReason::lost: return "lost";
  }
  return "none";
}

double trend_slope(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  const double mx = (n - 1) / 2;
  double my = 0.0;
  for (double y : v) my += y;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double dx = static_cast<double>(i) - mx;
    sxy += dx * (v[i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

StopReason stopping_criterion(const std::vector<double>& hist, double area_prev, double area_now,
                              const TrackerConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.emd_window);
  if (hist.size() >= w) {
    const std::vector<double> tail(hist.end() - static_cast<std::ptrdiff_t>(w), hist.end());
    if (trend_slope(tail) >= 0.0) return StopReason::slope;
  }
  if (area_prev > 0.0 && std::abs(area_now - area_prev) / area_prev > cfg.area_change_limit)
    return StopReason::area;
  return StopReason::none;
}

FrameResult evolve_region(const ReferenceModel& model, const BinMap& bins,
                          const LevelSetGrid& initial, double area_prev, const TrackerConfig& cfg,
                          const TrackerHooks& hooks) {
  const Eigen::MatrixXd D = model_ground_distance(model);
  EvolveParams ep;
  ep.alpha = cfg.alpha;
  ep.reinit_every = cfg.reinit_every;
  ep.band_halfwidth = cfg.band_halfwidth;

  LevelSetGrid g = initial;
  FrameResult res;
  std::optional<ExtractedRegion> previous;
  EmdSolution sol;
  bool armed = false;
  std::vector<double> force;

  for (int iter = 0;; ++iter) {
    ExtractedRegion cur;
    try {
      cur = extract_region(g);
    } catch (const LostContourError&) {
      res.stop_reason = StopReason::lost;
      break;
    }
    const double area_now = static_cast<double>(cur.mask.area());
    const double sigma = sigma_from_region(cur.mask);
    if (iter % cfg.emd_every == 0) {
      const Signature q =
          build_signature(cur.mask, bins, model.kernel, kernel_bandwidth(sigma, model.kernel));
      sol = emd(model.signature.masses, q.masses, D);
    }
    res.emd_trace.push_back(sol.objective);

    if (!armed && std::abs(area_now - area_prev) / area_prev <= cfg.area_change_limit)
      armed = true;
    const StopReason stop =
        stopping_criterion(res.emd_trace, armed ? area_prev : 0.0, area_now, cfg);
    if (stop == StopReason::area) {
      res.stop_reason = stop;
      cur = previous ? *previous : cur;
      res.mask = std::move(cur.mask);
      res.contour = std::move(cur.contour);
      break;
    }
    if (stop != StopReason::none ||
        static_cast<int>(res.emd_trace.size()) >= cfg.max_pde_iters) {
      res.stop_reason = stop != StopReason::none ? stop : StopReason::max_iters;
      res.mask = std::move(cur.mask);
      res.contour = std::move(cur.contour);
      break;
    }

    const RegionStats stats = compute_stats(cur.mask, bins, sol.l, model.kernel, sigma);
    force.resize(g.band.size());
    for (std::size_t k = 0; k < g.band.size(); ++k) {
      const int x = static_cast<int>(g.band[k] % static_cast<std::size_t>(g.width));
      const int y = static_cast<int>(g.band[k] / static_cast<std::size_t>(g.width));
      force[k] = force_at(x, y, stats, sol.l, bins);
    }
    evolve_step(g, force, ep, cfl_dt(g, force, cfg.alpha));
    if (hooks.on_iteration) hooks.on_iteration(iter + 1, g);
    previous = std::move(cur);
    if ((iter + 1) % cfg.reinit_every == 0 || near_band_edge(g)) {
      try {
        reinitialize(g);
      } catch (const LostContourError&) {
        res.stop_reason = StopReason::lost;
        break;
      }
    }
  }
  res.iterations = static_cast<int>(res.emd_trace.size());
  return res;
}

FrameResult track_frame(TrackerState& state, const ReferenceModel& model, const Frame& frame,
                        const TrackerConfig& cfg, const TrackerHooks& hooks) {
  const RegionMask& prev = state.previous;
  if (prev.width() != frame.gray.width || prev.height() != frame.gray.height)
    throw std::invalid_argument("track_frame: frame size differs from the previous mask");
  const FeatureImage fi = frame_features(frame, model, cfg);
  const BinMap bins = bin_image(fi, model.clusters);
  FeatureImage color;
  const FeatureImage& ms_space = mean_shift_space(frame, fi, cfg, color);

  const Ellipse fitted = fit_ellipse(boundary_points(prev));
  const MeanShiftResult ms = mean_shift_relocate(ms_space, state.mean_shift, fitted);
  if (!ms.ok) log_warning("track_frame: mean shift found no overlap; keeping the fitted ellipse");
  const Ellipse start = enlarge(ms.ellipse, cfg.enlarge_factor);

  FrameResult res;
  try {
    const LevelSetGrid g =
        init_from_ellipse(start, frame.gray.width, frame.gray.height, cfg.band_halfwidth);
    res = evolve_region(model, bins, g, static_cast<double>(prev.area()), cfg, hooks);
  } catch (const LostContourError&) {
    res.stop_reason = StopReason::lost;
  }
  res.initial_ellipse = start;
  if (res.stop_reason == StopReason::lost) {
    log_warning("track_frame: contour lost; carrying the previous mask forward");
    res.mask = prev;
    res.contour.clear();
    for (const auto& p : prev.boundary_pixels()) res.contour.push_back(p);
    return res;
  }

  state.previous = res.mask;
  const auto pts = boundary_points(res.mask);
  try {
    state.mean_shift = build_mean_shift_model(ms_space, fit_ellipse(pts), cfg.mean_shift_bins,
                                              cfg.mean_shift_iters);
  } catch (const std::invalid_argument& e) {
    log_warning(std::string("track_frame: keeping the previous mean-shift model: ") + e.what());
  }
  return res;
}

double overlap_error(const RegionMask& a, const RegionMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument("overlap_error: mask sizes differ");
  std::size_t inter = 0, na = 0, nb = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const bool ia = a.contains(x, y), ib = b.contains(x, y);
      na += ia;
      nb += ib;
      inter += ia && ib;
    }
  if (na + nb == 0) return 1.0;
  // Same as 1 - 2|A n B| / (|A| + |B|) with an exact integer numerator.
  return static_cast<double>(na + nb - 2 * inter) / static_cast<double>(na + nb);
}

bool sequence_failed(const std::vector<double>& errors, const TrackerConfig& cfg) {
  int run = 0;
  for (double e : errors) {
    run = e > cfg.failure_threshold ? run + 1 : 0;
    if (run > cfg.failure_run) return true;
  }
  return false;
}

SequenceResult run_sequence(const ReferenceModel& model, const std::vector<Frame>& frames,
                            const RegionMask& initial_mask, const TrackerConfig& cfg,
                            const std::vector<RegionMask>& truth,
                            const std::function<void(int, const FrameResult&)>& on_frame,
                            const TrackerHooks& hooks) {
  validate(cfg);
  if (frames.empty()) throw std::invalid_argument("run_sequence: no frames");
  if (!truth.empty() && truth.size() != frames.size())
    throw std::invalid_argument("run_sequence: ground-truth count differs from frame count");

  SequenceResult out;
  TrackerState state{initial_mask, model.mean_shift};
  for (std::size_t t = 0; t < frames.size(); ++t) {
    FrameResult r;
    if (hooks.on_frame_start) hooks.on_frame_start(static_cast<int>(t));
    if (t == 0) {
      if (cfg.refine_first_frame) {
        const FeatureImage fi = frame_features(frames[0], model, cfg);
        r = evolve_region(model, bin_image(fi, model.clusters),
                          grid_from_mask(initial_mask, cfg.band_halfwidth),
                          static_cast<double>(initial_mask.area()), cfg, hooks);
        if (r.stop_reason == StopReason::lost) r.mask = initial_mask;
        state.previous = r.mask;
      } else {
        r.mask = initial_mask;
        r.contour = initial_mask.boundary_pixels();
      }
    } else {
      r = track_frame(state, model, frames[t], cfg, hooks);
    }
    if (!truth.empty()) out.overlap_errors.push_back(overlap_error(r.mask, truth[t]));
    if (on_frame) on_frame(static_cast<int>(t), r);
    out.frames.push_back(std::move(r));
  }
  out.failed = sequence_failed(out.overlap_errors, cfg);
  return out;
}

}  // namespace tsemd
