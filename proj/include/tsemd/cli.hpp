#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tsemd {

/// Subcommands: synth, build-ref, track, eval, emd. Returns 0 on success,
/// 2 on bad command-line usage and 1 on any other error.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `base / name` when `name` is relative and stays inside `base`; throws
/// std::invalid_argument otherwise.
std::filesystem::path confined_path(const std::filesystem::path& base, const std::string& name);

}  // namespace tsemd
