#include "tsemd/image.hpp"

#include "tsemd/text_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tsemd {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("GrayImage: dimensions must be positive");
  values.assign(static_cast<std::size_t>(w) * h, fill);
}

double GrayImage::clamped(int x, int y) const {
  return at(std::clamp(x, 0, width - 1), std::clamp(y, 0, height - 1));
}

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("RgbImage: dimensions must be positive");
  rgb.assign(static_cast<std::size_t>(w) * h * 3, 0);
}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

GrayImage to_luminance(const RgbImage& img) {
  GrayImage g(img.width, img.height);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    g.values[i] = 0.299 * img.rgb[3 * i] + 0.587 * img.rgb[3 * i + 1] + 0.114 * img.rgb[3 * i + 2];
  return g;
}

RegionMask::RegionMask(int w, int h) : width_(w), height_(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("RegionMask: dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(w) * h, 0);
}

std::size_t RegionMask::area() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::pair<double, double> RegionMask::centroid() const {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (contains(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) throw std::domain_error("centroid of an empty region");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

std::vector<std::pair<int, int>> RegionMask::boundary_pixels() const {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (contains(x, y) && (!contains(x - 1, y) || !contains(x + 1, y) ||
                             !contains(x, y - 1) || !contains(x, y + 1)))
        out.emplace_back(x, y);
  return out;
}

std::array<int, 4> RegionMask::bounding_box() const {
  std::array<int, 4> bb{width_, height_, -1, -1};
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (contains(x, y)) {
        bb[0] = std::min(bb[0], x);
        bb[1] = std::min(bb[1], y);
        bb[2] = std::max(bb[2], x);
        bb[3] = std::max(bb[3], y);
      }
  if (bb[2] < 0) throw std::domain_error("bounding box of an empty region");
  return bb;
}

namespace {

// Reads one header integer, skipping whitespace and '#' comments.
long read_header_int(std::istream& is) {
  int c = is.peek();
  while (true) {
    if (c == '#') {
      is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else if (c != EOF && std::isspace(c)) {
      is.get();
    } else {
      break;
    }
    c = is.peek();
  }
  if (c == EOF || !std::isdigit(c)) throw FormatError("malformed netpbm header");
  long v = 0;
  while ((c = is.peek()) != EOF && std::isdigit(c)) {
    v = v * 10 + (is.get() - '0');
    if (v > 1'000'000) throw FormatError("malformed netpbm header: value too large");
  }
  return v;
}

}  // namespace

Frame read_pnm(std::istream& is) {
  char magic[2] = {0, 0};
  if (!is.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw FormatError("malformed netpbm header: expected P5 or P6");
  const long w = read_header_int(is);
  const long h = read_header_int(is);
  const long maxval = read_header_int(is);
  if (w <= 0 || h <= 0) throw FormatError("malformed netpbm header: bad dimensions");
  if (maxval != 255) throw FormatError("unsupported maxval " + std::to_string(maxval));
  const int sep = is.get();
  if (sep == EOF || !std::isspace(sep)) throw FormatError("malformed netpbm header");

  const int channels = magic[1] == '5' ? 1 : 3;
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * channels);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size())
    throw FormatError("truncated netpbm payload");

  Frame f;
  if (channels == 1) {
    f.gray = GrayImage(static_cast<int>(w), static_cast<int>(h));
    std::copy(buf.begin(), buf.end(), f.gray.values.begin());
  } else {
    RgbImage c(static_cast<int>(w), static_cast<int>(h));
    std::copy(buf.begin(), buf.end(), c.rgb.begin());
    f.gray = to_luminance(c);
    f.color = std::move(c);
  }
  return f;
}

Frame load_frame(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open image: " + path.string());
  try {
    return read_pnm(is);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pgm(std::ostream& os, const GrayImage& img) {
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.values.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<unsigned char>(std::clamp(std::lround(img.values[i]), 0L, 255L));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void write_ppm(std::ostream& os, const RgbImage& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()),
           static_cast<std::streamsize>(img.rgb.size()));
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
  atomic_write(path, [&](std::ostream& os) { write_pgm(os, img); }, true);
}

void save_ppm(const std::filesystem::path& path, const RgbImage& img) {
  atomic_write(path, [&](std::ostream& os) { write_ppm(os, img); }, true);
}

RegionMask mask_from_image(const GrayImage& img) {
  RegionMask m(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) m.set(x, y, img.at(x, y) > 127.0);
  return m;
}

GrayImage mask_to_image(const RegionMask& mask) {
  GrayImage g(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) g.at(x, y) = mask.contains(x, y) ? 255.0 : 0.0;
  return g;
}

RegionMask load_mask(const std::filesystem::path& path) {
  return mask_from_image(load_frame(path).gray);
}

void save_mask(const std::filesystem::path& path, const RegionMask& mask) {
  save_pgm(path, mask_to_image(mask));
}

}  // namespace tsemd
