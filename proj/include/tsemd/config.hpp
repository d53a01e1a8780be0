// Flat key=value configuration for the tracker and the input sequence.
#pragma once

#include "tsemd/tracker.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsemd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SequenceSpec {
  /// printf-style pattern with one integer field (e.g. frames/f_%03d.pgm), or
  /// a directory whose .pgm/.ppm files are taken in name order.
  std::string frames;
  int first_frame = 0;
  int last_frame = -1;  // -1: until the first missing file (pattern) or the end (directory)
  std::string reference_image;  // defaults to the first frame
  std::string reference_mask;
  std::string truth;  // optional pattern indexed like `frames`
  std::string output_dir = "out";

  bool operator==(const SequenceSpec&) const = default;
};

struct RunConfig {
  TrackerConfig tracker;
  SequenceSpec sequence;

  bool operator==(const RunConfig&) const = default;
};

/// Lines are `key = value`; blank lines and text after '#' are ignored.
/// Unknown keys, duplicates, malformed values and out-of-range values raise
/// ConfigError naming the line and the key.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

/// Expands the single %d / %0Nd field of a pattern.
std::string expand_pattern(std::string_view pattern, int index);

/// Frame paths selected by the spec; throws if none are found.
std::vector<std::filesystem::path> list_frames(const SequenceSpec& spec);

}  // namespace tsemd
