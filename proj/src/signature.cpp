#include "tsemd/signature.hpp"

#include "tsemd/log.hpp"
#include "tsemd/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tsemd {

namespace {

using Leaf = std::vector<Eigen::Index>;

struct SplitPlan {
  bool valid = false;
  int axis = 0;
  double score = 0.0;
};

SplitPlan plan_split(const Eigen::MatrixXd& f, const Leaf& leaf) {
  SplitPlan best;
  const auto n = static_cast<double>(leaf.size());
  if (leaf.size() < 2) return best;
  for (Eigen::Index k = 0; k < f.cols(); ++k) {
    double mean = 0.0;
    for (auto i : leaf) mean += f(i, k);
    mean /= n;
    double ss = 0.0;
    for (auto i : leaf) ss += (f(i, k) - mean) * (f(i, k) - mean);
    if (ss > best.score) {
      best = {true, static_cast<int>(k), ss};
    }
  }
  return best;
}

// Splits a leaf along `axis` at the value boundary nearest to its median, so
// equal values never straddle the cut.
std::pair<Leaf, Leaf> split_leaf(const Eigen::MatrixXd& f, Leaf leaf, int axis) {
  std::sort(leaf.begin(), leaf.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (f(a, axis) != f(b, axis)) return f(a, axis) < f(b, axis);
    for (Eigen::Index k = 0; k < f.cols(); ++k)
      if (f(a, k) != f(b, k)) return f(a, k) < f(b, k);
    return a < b;
  });
  const std::size_t half = leaf.size() / 2;
  std::size_t cut = 0;
  std::size_t best_gap = leaf.size();
  for (std::size_t c = 1; c < leaf.size(); ++c) {
    if (f(leaf[c - 1], axis) == f(leaf[c], axis)) continue;
    const std::size_t gap = c > half ? c - half : half - c;
    if (gap < best_gap) {
      best_gap = gap;
      cut = c;
    }
  }
  return {Leaf(leaf.begin(), leaf.begin() + static_cast<std::ptrdiff_t>(cut)),
          Leaf(leaf.begin() + static_cast<std::ptrdiff_t>(cut), leaf.end())};
}

std::size_t count_distinct(const Eigen::MatrixXd& f) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(f.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < f.cols(); ++k)
      if (f(a, k) != f(b, k)) return f(a, k) < f(b, k);
    return false;
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (less(idx[i - 1], idx[i])) ++distinct;
  return distinct;
}

}  // namespace

ClusterSet cluster_features(const Eigen::MatrixXd& features, int bins) {
  if (bins < 1) throw std::invalid_argument("cluster_features: bin count must be >= 1");
  if (features.rows() == 0 || features.cols() == 0)
    throw std::invalid_argument("cluster_features: no features");
  if (!features.allFinite()) throw std::invalid_argument("cluster_features: non-finite feature");

  const std::size_t distinct = count_distinct(features);
  if (distinct < static_cast<std::size_t>(bins)) {
    log_warning("cluster_features: only " + std::to_string(distinct) +
                " distinct feature vectors; reducing bin count from " + std::to_string(bins));
    bins = static_cast<int>(distinct);
  }

  std::vector<Leaf> leaves(1);
  leaves[0].resize(static_cast<std::size_t>(features.rows()));
  std::iota(leaves[0].begin(), leaves[0].end(), 0);
  while (static_cast<int>(leaves.size()) < bins) {
    std::size_t pick = leaves.size();
    SplitPlan plan;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      const SplitPlan p = plan_split(features, leaves[l]);
      if (p.valid && p.score > plan.score) {
        plan = p;
        pick = l;
      }
    }
    if (pick == leaves.size()) break;
    auto [left, right] = split_leaf(features, leaves[pick], plan.axis);
    leaves[pick] = std::move(left);
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(pick) + 1, std::move(right));
  }

  ClusterSet cs;
  cs.centers = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(leaves.size()), features.cols());
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (auto i : leaves[l]) cs.centers.row(static_cast<Eigen::Index>(l)) += features.row(i);
    cs.centers.row(static_cast<Eigen::Index>(l)) /= static_cast<double>(leaves[l].size());
  }

  const auto n = features.rows();
  const Eigen::RowVectorXd mean = features.colwise().mean();
  cs.zeta = Eigen::VectorXd::Zero(features.cols());
  if (n > 1) {
    for (Eigen::Index k = 0; k < features.cols(); ++k)
      cs.zeta(k) = std::sqrt((features.col(k).array() - mean(k)).square().sum() /
                             static_cast<double>(n - 1));
  }
  return cs;
}

int assign_bin(const double* feature, const ClusterSet& clusters) {
  if (clusters.size() == 0) throw std::invalid_argument("assign_bin: no clusters");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int u = 0; u < clusters.size(); ++u) {
    double d = 0.0;
    for (int k = 0; k < clusters.dim(); ++k) {
      const double diff = feature[k] - clusters.centers(u, k);
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = u;
    }
  }
  return best;
}

int assign_bin(const Eigen::VectorXd& feature, const ClusterSet& clusters) {
  if (feature.size() != clusters.dim())
    throw std::invalid_argument("assign_bin: feature dimension mismatch");
  return assign_bin(feature.data(), clusters);
}

BinMap bin_image(const FeatureImage& fi, const ClusterSet& clusters) {
  if (fi.channels != clusters.dim())
    throw std::invalid_argument("bin_image: feature dimension mismatch");
  BinMap bm;
  bm.width = fi.width;
  bm.height = fi.height;
  bm.bins = clusters.size();
  const std::size_t n = static_cast<std::size_t>(fi.width) * fi.height;
  bm.index.resize(n);
  for (std::size_t i = 0; i < n; ++i) bm.index[i] = assign_bin(fi.feature(i), clusters);
  return bm;
}

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::normal: return "normal";
    case KernelKind::epanechnikov: return "epanechnikov";
    case KernelKind::uniform: return "uniform";
  }
  return "normal";
}

KernelKind parse_kernel(std::string_view name) {
  if (name == "normal") return KernelKind::normal;
  if (name == "epanechnikov") return KernelKind::epanechnikov;
  if (name == "uniform") return KernelKind::uniform;
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

double kernel_weight(double dx, double dy, double bandwidth, KernelKind kind) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kernel_weight: bandwidth must be positive");
  const double d2 = dx * dx + dy * dy;
  switch (kind) {
    case KernelKind::normal: return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
    case KernelKind::epanechnikov: return std::max(0.0, 1.0 - d2 / (bandwidth * bandwidth));
    case KernelKind::uniform: return 1.0;
  }
  return 1.0;
}

double kernel_bandwidth(double sigma, KernelKind kind) {
  return kind == KernelKind::epanechnikov ? 2.0 * sigma : sigma;
}

Signature build_signature(const RegionMask& mask, const BinMap& bins, KernelKind kind,
                          double bandwidth, std::optional<std::pair<double, double>> center) {
  if (mask.width() != bins.width || mask.height() != bins.height)
    throw std::invalid_argument("build_signature: mask and bin map sizes differ");
  if (mask.area() == 0) throw std::invalid_argument("build_signature: empty mask");
  const auto [cx, cy] = center ? *center : mask.centroid();
  Signature sig;
  sig.masses.assign(static_cast<std::size_t>(bins.bins), 0.0);
  double total = 0.0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.contains(x, y)) continue;
      const double w = kernel_weight(x - cx, y - cy, bandwidth, kind);
      sig.masses[static_cast<std::size_t>(bins.at(x, y))] += w;
      total += w;
    }
  if (!(total > 0.0)) throw std::domain_error("build_signature: kernel mass is zero");
  for (double& m : sig.masses) m /= total;
  return sig;
}

Signature build_signature(const RegionMask& mask, const FeatureImage& fi,
                          const ClusterSet& clusters, KernelKind kind, double bandwidth) {
  return build_signature(mask, bin_image(fi, clusters), kind, bandwidth);
}

double ground_distance_beta(const ClusterSet& reference) { return reference.zeta.norm(); }

Eigen::MatrixXd ground_distance(const ClusterSet& ref, const ClusterSet& cand,
                                std::optional<double> beta_override) {
  if (ref.dim() != cand.dim())
    throw std::invalid_argument("ground_distance: feature dimensions differ");
  const double beta = beta_override ? *beta_override : ground_distance_beta(ref);
  if (beta < 0.0) throw std::invalid_argument("ground_distance: beta must be nonnegative");
  Eigen::MatrixXd dist(ref.size(), cand.size());
  for (int u = 0; u < ref.size(); ++u)
    for (int v = 0; v < cand.size(); ++v)
      dist(u, v) = (ref.centers.row(u) - cand.centers.row(v)).norm();
  if (beta > 0.0) return (1.0 - (-beta * dist.array()).exp()).matrix();

  log_warning("ground_distance: beta is zero; using scaled Euclidean distance");
  const double scale = 1.0 + dist.maxCoeff();
  return dist / scale;
}

void write_cluster_set(std::ostream& os, const ClusterSet& c) {
  write_matrix(os, "centers", c.centers);
  write_matrix(os, "zeta", c.zeta.transpose());
}

ClusterSet read_cluster_set(std::istream& is) {
  ClusterSet c;
  c.centers = read_matrix(is, "centers");
  Eigen::MatrixXd z = read_matrix(is, "zeta");
  if (z.rows() != 1 || z.cols() != c.centers.cols())
    throw FormatError("cluster set: zeta length does not match centre dimension");
  c.zeta = z.row(0).transpose();
  return c;
}

void write_signature_record(std::ostream& os, const SignatureRecord& rec) {
  os << "tsemd-signature 1\n";
  write_cluster_set(os, rec.clusters);
  os << "masses " << rec.signature.masses.size() << '\n';
  for (std::size_t i = 0; i < rec.signature.masses.size(); ++i)
    os << (i ? " " : "") << format_double(rec.signature.masses[i]);
  os << '\n';
}

SignatureRecord read_signature_record(std::istream& is) {
  expect_header(is, "tsemd-signature", 1);
  SignatureRecord rec;
  rec.clusters = read_cluster_set(is);
  expect_word(is, "masses");
  const auto n = read_value<std::size_t>(is);
  if (n != static_cast<std::size_t>(rec.clusters.size()))
    throw FormatError("signature: mass count does not match cluster count");
  rec.signature.masses.resize(n);
  for (auto& m : rec.signature.masses) m = read_value<double>(is);
  return rec;
}

}  // namespace tsemd
