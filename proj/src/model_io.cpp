#include "tsemd/text_io.hpp"
#include "tsemd/tracker.hpp"

#include <fstream>
#include <ostream>
#include <string>

namespace tsemd {

void write_reference_model(std::ostream& os, const ReferenceModel& m) {
  os << "tsemd-reference 1\n";
  os << "kernel " << kernel_name(m.kernel) << '\n';
  write_cp_basis(os, m.basis);
  write_cluster_set(os, m.clusters);
  os << "masses " << m.signature.masses.size() << '\n';
  for (std::size_t i = 0; i < m.signature.masses.size(); ++i)
    os << (i ? " " : "") << format_double(m.signature.masses[i]);
  os << '\n';
  os << "mask " << m.mask.width() << ' ' << m.mask.height() << '\n';
  for (int y = 0; y < m.mask.height(); ++y) {
    std::string row(static_cast<std::size_t>(m.mask.width()), '0');
    for (int x = 0; x < m.mask.width(); ++x)
      if (m.mask.contains(x, y)) row[static_cast<std::size_t>(x)] = '1';
    os << row << '\n';
  }
  write_mean_shift_model(os, m.mean_shift);
  os << "end\n";
}

ReferenceModel read_reference_model(std::istream& is) {
  expect_header(is, "tsemd-reference", 1);
  ReferenceModel m;
  expect_word(is, "kernel");
  std::string kind;
  if (!(is >> kind)) throw FormatError("reference model: missing kernel name");
  try {
    m.kernel = parse_kernel(kind);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("reference model: ") + e.what());
  }
  m.basis = read_cp_basis(is);
  m.clusters = read_cluster_set(is);
  if (m.clusters.dim() != m.basis.rank)
    throw FormatError("reference model: cluster dimension does not match the basis rank");
  expect_word(is, "masses");
  const auto n = read_value<std::size_t>(is);
  if (n != static_cast<std::size_t>(m.clusters.size()))
    throw FormatError("reference model: mass count does not match cluster count");
  m.signature.masses.resize(n);
  for (auto& v : m.signature.masses) v = read_value<double>(is);

  expect_word(is, "mask");
  const int w = read_value<int>(is), h = read_value<int>(is);
  if (w <= 0 || h <= 0 || w > 100000 || h > 100000)
    throw FormatError("reference model: bad mask size");
  m.mask = RegionMask(w, h);
  for (int y = 0; y < h; ++y) {
    std::string row;
    if (!(is >> row) || row.size() != static_cast<std::size_t>(w) ||
        row.find_first_not_of("01") != std::string::npos)
      throw FormatError("reference model: bad mask row " + std::to_string(y));
    for (int x = 0; x < w; ++x) m.mask.set(x, y, row[static_cast<std::size_t>(x)] == '1');
  }
  m.mean_shift = read_mean_shift_model(is);
  expect_word(is, "end");
  return m;
}

void save_reference_model(const std::filesystem::path& path, const ReferenceModel& m) {
  atomic_write(path, [&](std::ostream& os) { write_reference_model(os, m); });
}

ReferenceModel load_reference_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open reference model: " + path.string());
  try {
    return read_reference_model(is);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace tsemd
