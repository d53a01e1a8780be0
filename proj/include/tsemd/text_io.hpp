// Helpers for the line-oriented text containers (CP basis, reference model,
// signature files) and for atomic file output.
#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace tsemd {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

void write_matrix(std::ostream& os, std::string_view name, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& is, std::string_view name);

void expect_header(std::istream& is, std::string_view tag, int version);
void expect_word(std::istream& is, std::string_view word);

template <class T>
T read_value(std::istream& is) {
  if constexpr (std::is_floating_point_v<T>) {
    std::string tok;
    if (!(is >> tok)) throw FormatError("unexpected end of input");
    return static_cast<T>(parse_double(tok));
  } else {
    T v{};
    if (!(is >> v)) throw FormatError("expected a value");
    return v;
  }
}

/// Writes through a temporary sibling file, then renames it into place.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer, bool binary = false);

}  // namespace tsemd
