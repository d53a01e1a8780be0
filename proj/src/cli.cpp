#include "tsemd/cli.hpp"

#include "tsemd/config.hpp"
#include "tsemd/emd.hpp"
#include "tsemd/synthetic.hpp"
#include "tsemd/text_io.hpp"
#include "tsemd/tracker.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace tsemd {

namespace fs = std::filesystem;

fs::path confined_path(const fs::path& base, const std::string& name) {
  const fs::path rel(name);
  if (name.empty() || rel.is_absolute() || rel.has_root_name())
    throw std::invalid_argument("output name must be a relative path inside the output directory: " +
                                name);
  const fs::path norm = rel.lexically_normal();
  if (norm.empty() || *norm.begin() == ".." || norm == ".")
    throw std::invalid_argument("output name escapes the output directory: " + name);
  return base / norm;
}

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

RunConfig effective_config(const Globals& g) {
  RunConfig rc = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) rc.tracker.seed = *g.seed;
  if (!g.output_dir.empty()) rc.sequence.output_dir = g.output_dir;
  return rc;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

fs::path ensure_output_dir(const RunConfig& rc) {
  const fs::path dir = rc.sequence.output_dir;
  fs::create_directories(dir);
  return dir;
}

Frame reference_frame(const RunConfig& rc, const std::vector<fs::path>& frames) {
  return load_frame(rc.sequence.reference_image.empty() ? frames.front()
                                                        : fs::path(rc.sequence.reference_image));
}

RegionMask reference_mask(const RunConfig& rc) {
  if (rc.sequence.reference_mask.empty())
    throw ConfigError("no reference mask configured (key 'reference_mask')");
  return load_mask(rc.sequence.reference_mask);
}

int run_synth(const Globals& g, const std::string& out_dir, const SyntheticSceneSpec& spec,
              std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(0x5eed);
  const SyntheticSequence seq = generate_synthetic(spec, seed);
  const fs::path base = out_dir;
  fs::create_directories(base / "frames");
  fs::create_directories(base / "truth");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const int i = static_cast<int>(t);
    save_pgm(confined_path(base, expand_pattern("frames/frame_%03d.pgm", i)), seq.frames[t]);
    save_mask(confined_path(base, expand_pattern("truth/truth_%03d.pgm", i)), seq.truth[t]);
  }
  RunConfig rc;
  rc.tracker.seed = seed;
  rc.sequence.frames = (base / "frames/frame_%03d.pgm").string();
  rc.sequence.reference_mask = (base / "truth/truth_000.pgm").string();
  rc.sequence.truth = (base / "truth/truth_%03d.pgm").string();
  rc.sequence.output_dir = (base / "results").string();
  const std::string text = serialize_config(rc);
  atomic_write(base / "sequence.cfg", [&](std::ostream& os) { os << text; });
  out << "wrote " << seq.frames.size() << " frames to " << base.string() << '\n';
  return 0;
}

int run_build_ref(const Globals& g, const std::string& name, const std::string& sig_name,
                  std::ostream& out) {
  const RunConfig rc = effective_config(g);
  const auto frames = list_frames(rc.sequence);
  const ReferenceModel model = build_reference(reference_frame(rc, frames), reference_mask(rc),
                                               rc.tracker);
  const fs::path dir = ensure_output_dir(rc);
  const fs::path path = confined_path(dir, name);
  save_reference_model(path, model);
  out << "reference model: " << path.string() << '\n';
  if (!sig_name.empty()) {
    const fs::path sp = confined_path(dir, sig_name);
    atomic_write(sp, [&](std::ostream& os) {
      write_signature_record(os, {model.clusters, model.signature});
    });
    out << "signature: " << sp.string() << '\n';
  }
  return 0;
}

int run_track(const Globals& g, const std::string& model_path, bool trace, int debug_every,
              std::ostream& out) {
  const RunConfig rc = effective_config(g);
  const TrackerConfig& cfg = rc.tracker;
  const auto paths = list_frames(rc.sequence);
  std::vector<Frame> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) frames.push_back(load_frame(p));
  for (const auto& f : frames)
    if (f.gray.width != frames[0].gray.width || f.gray.height != frames[0].gray.height)
      throw std::runtime_error("frames do not share one size");

  std::vector<RegionMask> truth;
  if (!rc.sequence.truth.empty())
    for (std::size_t t = 0; t < frames.size(); ++t)
      truth.push_back(load_mask(
          expand_pattern(rc.sequence.truth, rc.sequence.first_frame + static_cast<int>(t))));

  const RegionMask init = reference_mask(rc);
  const ReferenceModel model = model_path.empty()
                                   ? build_reference(reference_frame(rc, paths), init, cfg)
                                   : load_reference_model(model_path);
  const fs::path dir = ensure_output_dir(rc);

  std::ostringstream metrics;
  metrics << "frame\titerations\tfinal_emd\tstop_reason\toverlap_error\n";
  auto on_frame = [&](int t, const FrameResult& r) {
    const int index = rc.sequence.first_frame + t;
    save_mask(confined_path(dir, expand_pattern("mask_%03d.pgm", index)), r.mask);
    save_ppm(confined_path(dir, expand_pattern("overlay_%03d.ppm", index)),
             contour_overlay(frames[static_cast<std::size_t>(t)].gray, r.contour));
    if (trace) {
      atomic_write(confined_path(dir, expand_pattern("trace_%03d.tsv", index)),
                   [&](std::ostream& os) {
                     os << "iteration\temd\n";
                     for (std::size_t i = 0; i < r.emd_trace.size(); ++i)
                       os << i << '\t' << format_double(r.emd_trace[i]) << '\n';
                   });
    }
    metrics << index << '\t' << r.iterations << '\t'
            << (r.emd_trace.empty() ? std::string("-") : format_metric(r.emd_trace.back()))
            << '\t' << stop_reason_name(r.stop_reason) << '\t'
            << (truth.empty() ? std::string("-")
                              : format_metric(overlap_error(r.mask, truth[static_cast<std::size_t>(t)])))
            << '\n';
    out << "frame " << index << ": " << r.iterations << " iterations, stop "
        << stop_reason_name(r.stop_reason) << '\n';
  };

  TrackerHooks hooks;
  int current = 0;
  if (debug_every > 0) {
    hooks.on_frame_start = [&current](int t) { current = t; };
    hooks.on_iteration = [&](int it, const LevelSetGrid& grid) {
      if (it % debug_every != 0) return;
      const int index = rc.sequence.first_frame + current;
      const std::string stem = "phi_" + std::to_string(index) + "_" + std::to_string(it);
      save_pfm(confined_path(dir, stem + ".pfm"), grid);
      save_ppm(confined_path(dir, stem + ".ppm"),
               contour_overlay(frames[static_cast<std::size_t>(current)].gray,
                               extract_region(grid).contour));
    };
  }
  const SequenceResult res = run_sequence(model, frames, init, cfg, truth, on_frame, hooks);

  const std::string table = metrics.str();
  const fs::path mpath = confined_path(dir, "metrics.tsv");
  atomic_write(mpath, [&](std::ostream& os) { os << table; });
  out << "metrics: " << mpath.string() << '\n';
  if (!res.overlap_errors.empty()) {
    double mean = 0.0;
    for (double e : res.overlap_errors) mean += e;
    mean /= static_cast<double>(res.overlap_errors.size());
    out << "mean overlap error " << format_metric(mean) << (res.failed ? " (FAILED)" : "") << '\n';
  }
  return 0;
}

int run_eval(const Globals& g, std::string results, std::string truth_pattern,
             std::ostream& out) {
  const RunConfig rc = effective_config(g);
  if (results.empty()) results = (fs::path(rc.sequence.output_dir) / "mask_%03d.pgm").string();
  if (truth_pattern.empty()) truth_pattern = rc.sequence.truth;
  if (truth_pattern.empty()) throw ConfigError("no ground truth given (--truth or key 'truth')");

  std::vector<double> errors;
  out << "frame\toverlap_error\n";
  for (int i = rc.sequence.first_frame;; ++i) {
    if (rc.sequence.last_frame >= 0 && i > rc.sequence.last_frame) break;
    const fs::path rp = expand_pattern(results, i);
    const fs::path tp = expand_pattern(truth_pattern, i);
    if (!fs::exists(rp) || !fs::exists(tp)) {
      if (rc.sequence.last_frame >= 0)
        throw std::runtime_error("missing mask: " + (fs::exists(rp) ? tp : rp).string());
      break;
    }
    const double e = overlap_error(load_mask(rp), load_mask(tp));
    errors.push_back(e);
    out << i << '\t' << format_metric(e) << '\n';
  }
  if (errors.empty()) throw std::runtime_error("no result masks found for: " + results);
  double mean = 0.0;
  for (double e : errors) mean += e;
  out << "mean\t" << format_metric(mean / static_cast<double>(errors.size())) << '\n';
  out << "failed\t" << (sequence_failed(errors, rc.tracker) ? "yes" : "no") << '\n';
  return 0;
}

SignatureRecord load_signature(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open signature file: " + path);
  try {
    return read_signature_record(is);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

int run_emd(const std::string& a_path, const std::string& b_path, std::ostream& out) {
  const SignatureRecord a = load_signature(a_path), b = load_signature(b_path);
  const Eigen::MatrixXd D = ground_distance(a.clusters, b.clusters);
  const EmdSolution sol = emd(a.signature.masses, b.signature.masses, D);
  out << format_metric(std::abs(sol.objective) < 1e-12 ? 0.0 : sol.objective) << '\n';
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contour tracking with Tensor-SIFT signatures and EMD level sets", "tsemd"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "key=value configuration file");
  auto* seed_opt = app.add_option("--seed", seed_value, "random seed (ALS initialization, synthetic noise)");
  app.add_option("--output-dir", g.output_dir, "override the configured output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence with ground truth");
  synth->fallthrough();
  std::string synth_out;
  SyntheticSceneSpec spec;
  synth->add_option("--out", synth_out, "directory for frames, truth masks and sequence.cfg")->required();
  synth->add_option("--frames", spec.frames, "number of frames")->check(CLI::PositiveNumber);
  synth->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  synth->add_option("--gain-drift", spec.gain_drift, "illumination gain amplitude")->check(CLI::Range(0.0, 0.99));
  synth->add_option("--dx", spec.dx, "horizontal motion per frame");
  synth->add_option("--dy", spec.dy, "vertical motion per frame");

  auto* build = app.add_subcommand("build-ref", "build and save the reference model");
  build->fallthrough();
  std::string model_name = "reference.model", sig_name;
  build->add_option("--out", model_name, "model file name inside the output directory");
  build->add_option("--signature", sig_name, "also write the reference signature file");

  auto* track = app.add_subcommand("track", "track the configured sequence");
  track->fallthrough();
  std::string model_path;
  bool trace = false;
  int debug_every = 0;
  track->add_option("--model", model_path, "reference model file (built from the config if absent)");
  track->add_flag("--trace", trace, "write per-frame EMD traces");
  track->add_option("--debug-every", debug_every, "write level-set snapshots every N iterations")
      ->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "overlap errors of result masks against ground truth");
  eval->fallthrough();
  std::string results, truth;
  eval->add_option("--results", results, "result mask pattern (default <output_dir>/mask_%03d.pgm)");
  eval->add_option("--truth", truth, "ground-truth mask pattern (default: config key 'truth')");

  auto* emd_cmd = app.add_subcommand("emd", "EMD between two signature files");
  std::string sig_a, sig_b;
  emd_cmd->add_option("first", sig_a, "signature file")->required();
  emd_cmd->add_option("second", sig_b, "signature file")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (synth->parsed()) return run_synth(g, synth_out, spec, out);
    if (build->parsed()) return run_build_ref(g, model_name, sig_name, out);
    if (track->parsed()) return run_track(g, model_path, trace, debug_every, out);
    if (eval->parsed()) return run_eval(g, results, truth, out);
    if (emd_cmd->parsed()) return run_emd(sig_a, sig_b, out);
  } catch (const std::exception& e) {
    err << "tsemd: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace tsemd
