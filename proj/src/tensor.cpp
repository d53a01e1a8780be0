#include "tsemd/tensor.hpp"

#include "tsemd/text_io.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace tsemd {

Tensor4::Tensor4(Dims dims) : dims_(dims) {
  for (auto d : dims_)
    if (d == 0) throw std::invalid_argument("Tensor4: dimensions must be positive");
  data_.assign(dims_[0] * dims_[1] * dims_[2] * dims_[3], 0.0);
}

Tensor4::Tensor4(Dims dims, std::vector<double> data) : Tensor4(dims) {
  if (data.size() != data_.size())
    throw std::invalid_argument("Tensor4: data length does not match dimensions");
  data_ = std::move(data);
}

std::span<const double> Tensor4::slice(std::size_t i1) const {
  const std::size_t n = dims_[1] * dims_[2] * dims_[3];
  return {data_.data() + i1 * n, n};
}

std::span<double> Tensor4::slice(std::size_t i1) {
  const std::size_t n = dims_[1] * dims_[2] * dims_[3];
  return {data_.data() + i1 * n, n};
}

double Tensor4::norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

namespace {

void check_mode(int mode) {
  if (mode < 1 || mode > 4) throw std::invalid_argument("mode index must be in 1..4");
}

// Column index of the j-formula for a given full index (0-based).
std::size_t unfold_column(const std::array<std::size_t, 4>& idx, const Tensor4::Dims& dims,
                          int mode) {
  std::size_t j = 0, stride = 1;
  for (int k = 0; k < 4; ++k) {
    if (k == mode - 1) continue;
    j += idx[k] * stride;
    stride *= dims[k];
  }
  return j;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajor> slices_view(const Tensor4& t) {
  const auto& d = t.dims();
  return {t.data().data(), static_cast<Eigen::Index>(d[0]),
          static_cast<Eigen::Index>(d[1] * d[2] * d[3])};
}

Matrix hadamard_gram(const Matrix& a, const Matrix& b, const Matrix& c) {
  Matrix g = (a.transpose() * a).cwiseProduct(b.transpose() * b);
  return g.cwiseProduct(c.transpose() * c);
}

Matrix random_factor(std::size_t rows, int rank, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix m(rows, rank);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uni(rng);
  return m;
}

}  // namespace

Matrix mode_n_unfold(const Tensor4& t, int mode) {
  check_mode(mode);
  const auto& d = t.dims();
  const std::size_t rows = d[mode - 1];
  const std::size_t cols = t.size() / rows;
  Matrix m(rows, cols);
  std::array<std::size_t, 4> idx{};
  for (idx[0] = 0; idx[0] < d[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < d[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < d[2]; ++idx[2])
        for (idx[3] = 0; idx[3] < d[3]; ++idx[3])
          m(idx[mode - 1], unfold_column(idx, d, mode)) = t(idx[0], idx[1], idx[2], idx[3]);
  return m;
}

Tensor4 mode_n_fold(const Matrix& m, int mode, const Tensor4::Dims& d) {
  check_mode(mode);
  Tensor4 t(d);
  if (static_cast<std::size_t>(m.rows()) != d[mode - 1] ||
      static_cast<std::size_t>(m.cols()) != t.size() / d[mode - 1])
    throw std::invalid_argument("mode_n_fold: matrix shape does not match dimensions");
  std::array<std::size_t, 4> idx{};
  for (idx[0] = 0; idx[0] < d[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < d[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < d[2]; ++idx[2])
        for (idx[3] = 0; idx[3] < d[3]; ++idx[3])
          t(idx[0], idx[1], idx[2], idx[3]) = m(idx[mode - 1], unfold_column(idx, d, mode));
  return t;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("khatri_rao: column counts differ");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index k = 0; k < a.cols(); ++k)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
  return out;
}

Matrix pseudo_inverse(const Matrix& m) {
  if (m.size() == 0) throw std::invalid_argument("pseudo_inverse: empty matrix");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * (sv.size() ? sv(0) : 0.0);
  Vector inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix mttkrp(const Tensor4& t, const std::array<const Matrix*, 4>& f, int mode) {
  check_mode(mode);
  const auto& d = t.dims();
  const Eigen::Index rank = f[0]->cols();
  for (int k = 0; k < 4; ++k) {
    if (f[k]->cols() != rank) throw std::invalid_argument("mttkrp: factor ranks differ");
    if (static_cast<std::size_t>(f[k]->rows()) != d[k])
      throw std::invalid_argument("mttkrp: factor row count does not match tensor");
  }
  const auto x = slices_view(t);
  if (mode == 1) return x * khatri_rao(khatri_rao(*f[1], *f[2]), *f[3]);

  // Contract mode 1 first: y(:, k) = X^T f1(:, k) in slice order.
  const Matrix y = x.transpose() * (*f[0]);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(d[mode - 1]), rank);
  for (Eigen::Index k = 0; k < rank; ++k)
    for (std::size_t i2 = 0; i2 < d[1]; ++i2)
      for (std::size_t i3 = 0; i3 < d[2]; ++i3)
        for (std::size_t i4 = 0; i4 < d[3]; ++i4) {
          const double v = y((i2 * d[2] + i3) * d[3] + i4, k);
          switch (mode) {
            case 2: out(i2, k) += v * (*f[2])(i3, k) * (*f[3])(i4, k); break;
            case 3: out(i3, k) += v * (*f[1])(i2, k) * (*f[3])(i4, k); break;
            default: out(i4, k) += v * (*f[1])(i2, k) * (*f[2])(i3, k); break;
          }
        }
  return out;
}

Tensor4 cp_reconstruct(const CpModel& m) {
  Tensor4 t({static_cast<std::size_t>(m.F.rows()), static_cast<std::size_t>(m.R.rows()),
             static_cast<std::size_t>(m.S.rows()), static_cast<std::size_t>(m.T.rows())});
  const Matrix kr = khatri_rao(khatri_rao(m.R, m.S), m.T);
  Eigen::Map<RowMajor> out(t.data().data(), m.F.rows(), kr.rows());
  out = m.F * kr.transpose();
  return t;
}

double cp_residual(const Tensor4& t, const CpModel& m) {
  const Matrix kr = khatri_rao(khatri_rao(m.R, m.S), m.T);
  const Matrix diff = slices_view(t) - m.F * kr.transpose();
  return diff.norm();
}

CpModel cp_als(const Tensor4& t, int rank, const CpAlsOptions& opt) {
  if (rank < 1) throw std::invalid_argument("cp_als: rank must be >= 1");
  if (opt.max_sweeps < 1) throw std::invalid_argument("cp_als: max_sweeps must be >= 1");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("cp_als: tol must be positive");

  const auto& d = t.dims();
  CpModel m;
  m.rank = rank;
  const double xnorm = t.norm();
  if (xnorm == 0.0) {
    m.F = Matrix::Zero(d[0], rank);
    m.R = Matrix::Zero(d[1], rank);
    m.S = Matrix::Zero(d[2], rank);
    m.T = Matrix::Zero(d[3], rank);
    m.residual = 0.0;
    return m;
  }

  std::mt19937_64 rng(opt.seed);
  // Leading left singular vectors of each unfolding, from the small Gram
  // matrix; columns beyond the mode size stay uniform(0,1).
  auto nvecs = [&](int mode, std::size_t rows) {
    Matrix f = random_factor(rows, rank, rng);
    if (opt.init != CpInit::nvecs) return f;
    const Matrix u = mode_n_unfold(t, mode);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(u * u.transpose());
    const Eigen::Index k = std::min<Eigen::Index>(rank, u.rows());
    for (Eigen::Index c = 0; c < k; ++c) f.col(c) = eig.eigenvectors().col(u.rows() - 1 - c);
    return f;
  };
  m.R = nvecs(2, d[1]);
  m.S = nvecs(3, d[2]);
  m.T = nvecs(4, d[3]);
  m.F = Matrix::Zero(d[0], rank);
  const std::array<const Matrix*, 4> fac{&m.F, &m.R, &m.S, &m.T};

  double prev = std::numeric_limits<double>::infinity();
  Matrix prev_f, prev_r, prev_s, prev_t;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    m.F = mttkrp(t, fac, 1) * pseudo_inverse(hadamard_gram(m.R, m.S, m.T));
    m.R = mttkrp(t, fac, 2) * pseudo_inverse(hadamard_gram(m.F, m.S, m.T));
    m.S = mttkrp(t, fac, 3) * pseudo_inverse(hadamard_gram(m.F, m.R, m.T));
    m.T = mttkrp(t, fac, 4) * pseudo_inverse(hadamard_gram(m.F, m.R, m.S));

    for (Matrix* basis : {&m.R, &m.S, &m.T}) {
      for (Eigen::Index k = 0; k < rank; ++k) {
        const double n = basis->col(k).norm();
        if (n > 0.0) {
          basis->col(k) /= n;
          m.F.col(k) *= n;
        }
      }
    }

    double res = cp_residual(t, m);
    // Extrapolate along the sweep's update; kept only when it lowers the residual.
    if (opt.line_search && sweep > 0) {
      const double step = std::cbrt(static_cast<double>(sweep + 1));
      CpModel trial = m;
      trial.F = prev_f + step * (m.F - prev_f);
      trial.R = prev_r + step * (m.R - prev_r);
      trial.S = prev_s + step * (m.S - prev_s);
      trial.T = prev_t + step * (m.T - prev_t);
      const double trial_res = cp_residual(t, trial);
      if (trial_res < res) {
        m.F = std::move(trial.F);
        m.R = std::move(trial.R);
        m.S = std::move(trial.S);
        m.T = std::move(trial.T);
        res = trial_res;
      }
    }
    prev_f = m.F;
    prev_r = m.R;
    prev_s = m.S;
    prev_t = m.T;
    m.residual_trace.push_back(res);
    m.sweeps = sweep + 1;
    const bool converged = std::abs(prev - res) / xnorm < opt.tol;
    prev = res;
    if (converged) break;
  }

  // One more least-squares F solve; cannot increase the residual.
  m.F = mttkrp(t, fac, 1) * pseudo_inverse(hadamard_gram(m.R, m.S, m.T));
  m.residual = cp_residual(t, m);
  return m;
}

CpBasis CpBasis::from_factors(Matrix r, Matrix s, Matrix t) {
  if (r.cols() != s.cols() || r.cols() != t.cols())
    throw std::invalid_argument("CpBasis: factor ranks differ");
  CpBasis b;
  b.I2 = r.rows();
  b.I3 = s.rows();
  b.I4 = t.rows();
  b.rank = static_cast<int>(r.cols());
  const Matrix kr = khatri_rao(khatri_rao(r, s), t);
  // pinv(KR^T) = KR * pinv(KR^T KR); the Gram matrix is the Hadamard product.
  b.projector = (kr * pseudo_inverse(hadamard_gram(r, s, t))).transpose();
  b.R = std::move(r);
  b.S = std::move(s);
  b.T = std::move(t);
  return b;
}

CpBasis CpBasis::from_model(const CpModel& model) {
  return from_factors(model.R, model.S, model.T);
}

Vector project_descriptor(std::span<const double> descriptor, const CpBasis& basis) {
  if (descriptor.size() != basis.descriptor_size())
    throw std::invalid_argument("project_descriptor: descriptor size " +
                                std::to_string(descriptor.size()) + " does not match basis " +
                                std::to_string(basis.descriptor_size()));
  Eigen::Map<const Vector> d(descriptor.data(), static_cast<Eigen::Index>(descriptor.size()));
  return basis.projector * d;
}

namespace {
constexpr const char* kBasisTag = "tsemd-cpbasis";
constexpr int kBasisVersion = 1;
}  // namespace

void write_cp_basis(std::ostream& os, const CpBasis& b) {
  os << kBasisTag << ' ' << kBasisVersion << '\n';
  os << "dims " << b.I2 << ' ' << b.I3 << ' ' << b.I4 << '\n';
  os << "rank " << b.rank << '\n';
  write_matrix(os, "R", b.R);
  write_matrix(os, "S", b.S);
  write_matrix(os, "T", b.T);
  write_matrix(os, "projector", b.projector);
}

CpBasis read_cp_basis(std::istream& is) {
  expect_header(is, kBasisTag, kBasisVersion);
  expect_word(is, "dims");
  std::size_t i2 = read_value<std::size_t>(is), i3 = read_value<std::size_t>(is),
              i4 = read_value<std::size_t>(is);
  expect_word(is, "rank");
  const int rank = read_value<int>(is);
  Matrix r = read_matrix(is, "R"), s = read_matrix(is, "S"), t = read_matrix(is, "T");
  Matrix p = read_matrix(is, "projector");
  if (r.rows() != static_cast<Eigen::Index>(i2) || s.rows() != static_cast<Eigen::Index>(i3) ||
      t.rows() != static_cast<Eigen::Index>(i4) || r.cols() != rank || s.cols() != rank ||
      t.cols() != rank || p.rows() != rank ||
      p.cols() != static_cast<Eigen::Index>(i2 * i3 * i4))
    throw std::runtime_error("cp basis: matrix shapes disagree with header");
  CpBasis b;
  b.I2 = i2;
  b.I3 = i3;
  b.I4 = i4;
  b.rank = rank;
  b.R = std::move(r);
  b.S = std::move(s);
  b.T = std::move(t);
  b.projector = std::move(p);
  return b;
}

}  // namespace tsemd
