// Feature-space partition, kernel-weighted signatures and the saturating
// ground distance between cluster centres.
#pragma once

#include "tsemd/dense_sift.hpp"
#include "tsemd/image.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsemd {

/// Cluster centres (one per row) and per-component standard deviations of the
/// features they were learned from.
struct ClusterSet {
  Eigen::MatrixXd centers;  // U x K
  Eigen::VectorXd zeta;     // K

  int size() const { return static_cast<int>(centers.rows()); }
  int dim() const { return static_cast<int>(centers.cols()); }
};

/// K-D tree partition: the leaf with the largest spread along its
/// widest-variance axis is split at the value boundary closest to its median
/// until U leaves exist. Centres are leaf means. Features are rows of
/// `features`. If fewer than U distinct vectors exist, U is reduced to the
/// distinct count (a warning is logged; check the returned size).
ClusterSet cluster_features(const Eigen::MatrixXd& features, int bins);

/// Nearest centre in Euclidean distance; ties go to the lowest index.
int assign_bin(const double* feature, const ClusterSet& clusters);
int assign_bin(const Eigen::VectorXd& feature, const ClusterSet& clusters);

/// Per-pixel bin index of a feature image.
struct BinMap {
  int width = 0;
  int height = 0;
  int bins = 0;
  std::vector<int> index;

  int at(int x, int y) const { return index[static_cast<std::size_t>(y) * width + x]; }
};

BinMap bin_image(const FeatureImage& fi, const ClusterSet& clusters);

enum class KernelKind { normal, epanechnikov, uniform };

std::string_view kernel_name(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

/// normal: exp(-d^2 / (2 s^2)); epanechnikov: max(0, 1 - d^2 / h^2); uniform: 1.
/// The bandwidth must be positive for every kind.
double kernel_weight(double dx, double dy, double bandwidth, KernelKind kind);

/// Bandwidth handed to kernel_weight for a region whose normal-kernel sigma is
/// `sigma`. The Epanechnikov support radius is 2 * sigma, the radius of the
/// region's minimal enclosing circle.
double kernel_bandwidth(double sigma, KernelKind kind);

struct Signature {
  std::vector<double> masses;
};

/// masses[v] = sum_{z in mask} w(z - zc) [bin(z) == v] / sum_{z in mask} w(z - zc).
/// zc defaults to the mask centroid.
Signature build_signature(const RegionMask& mask, const BinMap& bins, KernelKind kind,
                          double bandwidth, std::optional<std::pair<double, double>> center = {});

Signature build_signature(const RegionMask& mask, const FeatureImage& fi,
                          const ClusterSet& clusters, KernelKind kind, double bandwidth);

/// beta = ||zeta of the reference set|| unless overridden.
double ground_distance_beta(const ClusterSet& reference);

/// d_uv = 1 - exp(-beta * ||h_u - h_v||). When beta is zero the fallback
/// d_uv = ||h_u - h_v|| / (1 + max ||h_u - h_v||) is used and a warning logged.
Eigen::MatrixXd ground_distance(const ClusterSet& reference, const ClusterSet& candidate,
                                std::optional<double> beta_override = {});

/// Signature file: centres, zeta and masses in one text container.
struct SignatureRecord {
  ClusterSet clusters;
  Signature signature;
};

void write_cluster_set(std::ostream& os, const ClusterSet& clusters);
ClusterSet read_cluster_set(std::istream& is);
void write_signature_record(std::ostream& os, const SignatureRecord& rec);
SignatureRecord read_signature_record(std::istream& is);

}  // namespace tsemd
