#include "tsemd/config.hpp"

#include "tsemd/text_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tsemd {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_integer(std::string_view v) {
  T out{};
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || v.empty())
    throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

double parse_real(std::string_view v) {
  try {
    return parse_double(v);
  } catch (const FormatError&) {
    throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
  }
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class M>
Key int_key(std::string name, M TrackerConfig::*field) {
  return {name,
          [field](RunConfig& c, std::string_view v) { c.tracker.*field = parse_integer<M>(v); },
          [field](const RunConfig& c) { return std::to_string(c.tracker.*field); }};
}

Key real_key(std::string name, double TrackerConfig::*field) {
  return {name, [field](RunConfig& c, std::string_view v) { c.tracker.*field = parse_real(v); },
          [field](const RunConfig& c) { return format_double(c.tracker.*field); }};
}

Key bool_key(std::string name, bool TrackerConfig::*field) {
  return {name, [field](RunConfig& c, std::string_view v) { c.tracker.*field = parse_bool(v); },
          [field](const RunConfig& c) { return std::string(c.tracker.*field ? "true" : "false"); }};
}

Key text_key(std::string name, std::string SequenceSpec::*field) {
  return {name, [field](RunConfig& c, std::string_view v) { c.sequence.*field = std::string(v); },
          [field](const RunConfig& c) { return c.sequence.*field; }};
}

Key seq_int_key(std::string name, int SequenceSpec::*field) {
  return {name,
          [field](RunConfig& c, std::string_view v) { c.sequence.*field = parse_integer<int>(v); },
          [field](const RunConfig& c) { return std::to_string(c.sequence.*field); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      int_key("K", &TrackerConfig::K),
      int_key("bins", &TrackerConfig::bins),
      {"kernel",
       [](RunConfig& c, std::string_view v) { c.tracker.kernel = parse_kernel(v); },
       [](const RunConfig& c) { return std::string(kernel_name(c.tracker.kernel)); }},
      real_key("alpha", &TrackerConfig::alpha),
      int_key("max_pde_iters", &TrackerConfig::max_pde_iters),
      int_key("emd_window", &TrackerConfig::emd_window),
      real_key("area_change_limit", &TrackerConfig::area_change_limit),
      int_key("reinit_every", &TrackerConfig::reinit_every),
      int_key("band_halfwidth", &TrackerConfig::band_halfwidth),
      real_key("enlarge_factor", &TrackerConfig::enlarge_factor),
      real_key("failure_threshold", &TrackerConfig::failure_threshold),
      int_key("failure_run", &TrackerConfig::failure_run),
      int_key("emd_every", &TrackerConfig::emd_every),
      bool_key("refine_first_frame", &TrackerConfig::refine_first_frame),
      int_key("mean_shift_bins", &TrackerConfig::mean_shift_bins),
      int_key("mean_shift_iters", &TrackerConfig::mean_shift_iters),
      bool_key("color_mean_shift", &TrackerConfig::color_mean_shift),
      bool_key("sift_normalize", &TrackerConfig::sift_normalize),
      int_key("als_max_sweeps", &TrackerConfig::als_max_sweeps),
      real_key("als_tol", &TrackerConfig::als_tol),
      {"als_init",
       [](RunConfig& c, std::string_view v) {
         if (v == "nvecs") c.tracker.als_init = CpInit::nvecs;
         else if (v == "uniform") c.tracker.als_init = CpInit::uniform;
         else throw std::invalid_argument("expected nvecs or uniform, got '" + std::string(v) + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.tracker.als_init == CpInit::nvecs ? "nvecs" : "uniform");
       }},
      bool_key("als_line_search", &TrackerConfig::als_line_search),
      int_key("seed", &TrackerConfig::seed),
      text_key("frames", &SequenceSpec::frames),
      seq_int_key("first_frame", &SequenceSpec::first_frame),
      seq_int_key("last_frame", &SequenceSpec::last_frame),
      text_key("reference_image", &SequenceSpec::reference_image),
      text_key("reference_mask", &SequenceSpec::reference_mask),
      text_key("truth", &SequenceSpec::truth),
      text_key("output_dir", &SequenceSpec::output_dir),
  };
  return table;
}

void validate_sequence(const SequenceSpec& s) {
  if (s.first_frame < 0) throw std::invalid_argument("first_frame must be >= 0");
  if (s.last_frame < -1) throw std::invalid_argument("last_frame must be >= -1");
  if (s.last_frame >= 0 && s.last_frame < s.first_frame)
    throw std::invalid_argument("last_frame must be >= first_frame");
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(where + ": expected key = value, got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(where + ": duplicate key '" + std::string(key) + "'");
    try {
      it->set(cfg, value);
      validate(cfg.tracker);
      validate_sequence(cfg.sequence);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": key '" + std::string(key) + "': " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& c) {
  std::string out;
  for (const Key& k : keys()) {
    const std::string v = k.get(c);
    if (v.empty()) continue;  // empty strings are the default for text keys
    out += k.name + " = " + v + '\n';
  }
  return out;
}

std::string expand_pattern(std::string_view pattern, int index) {
  const auto pct = pattern.find('%');
  if (pct == std::string_view::npos)
    throw std::invalid_argument("pattern has no %d field: " + std::string(pattern));
  std::size_t i = pct + 1;
  bool zero = false;
  if (i < pattern.size() && pattern[i] == '0') {
    zero = true;
    ++i;
  }
  int width = 0;
  while (i < pattern.size() && pattern[i] >= '0' && pattern[i] <= '9')
    width = width * 10 + (pattern[i++] - '0');
  if (i >= pattern.size() || pattern[i] != 'd' || width > 16)
    throw std::invalid_argument("pattern field must be %d or %0Nd: " + std::string(pattern));
  if (pattern.find('%', i + 1) != std::string_view::npos)
    throw std::invalid_argument("pattern has more than one field: " + std::string(pattern));
  std::string num = std::to_string(index);
  if (static_cast<int>(num.size()) < width)
    num.insert(0, static_cast<std::size_t>(width) - num.size(), zero ? '0' : ' ');
  return std::string(pattern.substr(0, pct)) + num + std::string(pattern.substr(i + 1));
}

std::vector<std::filesystem::path> list_frames(const SequenceSpec& spec) {
  namespace fs = std::filesystem;
  if (spec.frames.empty()) throw ConfigError("no frames configured (key 'frames')");
  std::vector<fs::path> out;
  if (fs::is_directory(spec.frames)) {
    std::vector<fs::path> all;
    for (const auto& e : fs::directory_iterator(spec.frames)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) all.push_back(e.path());
    }
    std::sort(all.begin(), all.end());
    const int last = spec.last_frame < 0 ? static_cast<int>(all.size()) - 1 : spec.last_frame;
    for (int i = spec.first_frame; i <= last && i < static_cast<int>(all.size()); ++i)
      out.push_back(all[static_cast<std::size_t>(i)]);
  } else {
    for (int i = spec.first_frame;; ++i) {
      if (spec.last_frame >= 0 && i > spec.last_frame) break;
      fs::path p = expand_pattern(spec.frames, i);
      if (!fs::exists(p)) {
        if (spec.last_frame >= 0) throw std::runtime_error("missing frame: " + p.string());
        break;
      }
      out.push_back(std::move(p));
    }
  }
  if (out.empty()) throw std::runtime_error("no frames found for: " + spec.frames);
  return out;
}

}  // namespace tsemd
