// Fourth-order tensors, CP decomposition by alternating least squares, and
// projection of descriptors onto a learned CP basis.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace tsemd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense I1 x I2 x I3 x I4 array. Storage is row-major with mode 1 slowest:
/// offset(i1,i2,i3,i4) = ((i1*I2 + i2)*I3 + i3)*I4 + i4 (all indices 0-based).
/// Consequently each mode-1 slice is a contiguous block of I2*I3*I4 values.
class Tensor4 {
 public:
  using Dims = std::array<std::size_t, 4>;

  Tensor4() = default;
  explicit Tensor4(Dims dims);
  Tensor4(Dims dims, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  std::size_t dim(int mode) const { return dims_.at(static_cast<std::size_t>(mode - 1)); }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t i4) const {
    return ((i1 * dims_[1] + i2) * dims_[2] + i3) * dims_[3] + i4;
  }
  double& operator()(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t i4) {
    return data_[offset(i1, i2, i3, i4)];
  }
  double operator()(std::size_t i1, std::size_t i2, std::size_t i3, std::size_t i4) const {
    return data_[offset(i1, i2, i3, i4)];
  }

  /// Contiguous slice for a fixed first index (I2*I3*I4 values).
  std::span<const double> slice(std::size_t i1) const;
  std::span<double> slice(std::size_t i1);

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double norm() const;

 private:
  Dims dims_{0, 0, 0, 0};
  std::vector<double> data_;
};

/// Mode-n unfolding (n in 1..4). Element (i1,..,i4) lands at row i_n and column
///   j = sum_{k != n} i_k * prod_{m < k, m != n} I_m       (0-based),
/// i.e. the remaining indices are enumerated with the lowest mode fastest.
Matrix mode_n_unfold(const Tensor4& t, int mode);

/// Inverse of mode_n_unfold.
Tensor4 mode_n_fold(const Matrix& m, int mode, const Tensor4::Dims& dims);

/// Column-wise Kronecker product; column k is kron(A.col(k), B.col(k)).
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// Moore-Penrose pseudo-inverse by SVD. Singular values below
/// max(rows, cols) * eps * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& m);

/// Rank-K CP model: t ~ sum_k f_k o r_k o s_k o t_k.
struct CpModel {
  int rank = 0;
  Matrix F;  // I1 x K
  Matrix R;  // I2 x K
  Matrix S;  // I3 x K
  Matrix T;  // I4 x K
  double residual = 0.0;  // ||t - reconstruction||
  std::vector<double> residual_trace;  // residual after each sweep
  int sweeps = 0;
};

enum class CpInit { nvecs, uniform };

struct CpAlsOptions {
  int max_sweeps = 100;
  double tol = 1e-6;  // stop when |res_prev - res| / ||t|| < tol
  std::uint64_t seed = 0x5eed;
  CpInit init = CpInit::nvecs;
  bool line_search = true;
};

/// CP decomposition by ALS. R, S, T start from the leading left singular
/// vectors of their unfoldings (CpInit::nvecs) or from seeded uniform(0,1)
/// entries; each sweep updates F, R, S, T in turn, then R, S, T columns are
/// normalized with the scale moved into F. With line_search, the factors are
/// extrapolated along the sweep's update by (sweep+1)^(1/3) when that lowers
/// the residual, so the residual trace stays nonincreasing. A closing F solve
/// makes F exactly the least-squares projection of the data onto the final
/// basis.
CpModel cp_als(const Tensor4& t, int rank, const CpAlsOptions& options = {});

/// Reconstruction of a CP model as a dense tensor.
Tensor4 cp_reconstruct(const CpModel& model);

/// Frobenius norm of t minus the model reconstruction.
double cp_residual(const Tensor4& t, const CpModel& model);

/// Matricized-tensor times Khatri-Rao product for mode n, computed directly
/// from the tensor without forming the unfolding. Equivalent to
/// mode_n_unfold(t, n) * khatri_rao(...other factors, highest mode first).
Matrix mttkrp(const Tensor4& t, const std::array<const Matrix*, 4>& factors, int mode);

/// Basis used to project new descriptors. Descriptors are taken in mode-1
/// slice order (I4 fastest), which is the row order of R (.) S (.) T, so
/// projector = pinv((R (.) S (.) T)^T)^T.
struct CpBasis {
  std::size_t I2 = 0, I3 = 0, I4 = 0;
  int rank = 0;
  Matrix R, S, T;
  Matrix projector;  // K x (I2*I3*I4)

  static CpBasis from_model(const CpModel& model);
  static CpBasis from_factors(Matrix r, Matrix s, Matrix t);

  std::size_t descriptor_size() const { return I2 * I3 * I4; }
};

/// Projects one descriptor (laid out as a mode-1 slice, I4 fastest) onto the
/// basis. Linear in d.
Vector project_descriptor(std::span<const double> descriptor, const CpBasis& basis);

/// Text container, see docs in README ("CP basis file").
void write_cp_basis(std::ostream& os, const CpBasis& basis);
CpBasis read_cp_basis(std::istream& is);

}  // namespace tsemd
