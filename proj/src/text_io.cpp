#include "tsemd/text_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <system_error>

namespace tsemd {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + std::string(s) + "'");
  return v;
}

void write_matrix(std::ostream& os, std::string_view name, const Eigen::MatrixXd& m) {
  os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << format_double(m(r, c));
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& is, std::string_view name) {
  expect_word(is, "matrix");
  expect_word(is, name);
  const auto rows = read_value<Eigen::Index>(is);
  const auto cols = read_value<Eigen::Index>(is);
  if (rows < 0 || cols < 0) throw FormatError("negative matrix shape");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_value<double>(is);
  return m;
}

void expect_word(std::istream& is, std::string_view word) {
  std::string tok;
  if (!(is >> tok) || tok != word)
    throw FormatError("expected '" + std::string(word) + "' but found '" + tok + "'");
}

void expect_header(std::istream& is, std::string_view tag, int version) {
  expect_word(is, tag);
  const int v = read_value<int>(is);
  if (v != version)
    throw FormatError(std::string(tag) + ": unsupported version " + std::to_string(v));
}

void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer, bool binary) {
  auto tmp = path;
  tmp += ".tmp";
  try {
    std::ofstream os(tmp, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
    writer(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into place: " + path.string() + ": " + ec.message());
  }
}

}  // namespace tsemd
