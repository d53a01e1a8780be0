#include "tsemd/emd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace tsemd {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kMassTol = 1e-9;

class Tableau {
 public:
  Tableau(const TransportProblem& prob, const SimplexOptions& options)
      : prob_(prob), options_(options), m_(prob.rows()), n_(prob.cols()) {}

  void start_artificial() {
    basis_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    x_ = prob_.b;
    rebuild_membership();
  }

  void start_from(const BasicSolution& s) {
    if (static_cast<int>(s.basis.size()) != m_)
      throw std::invalid_argument("simplex_solve: starting basis has the wrong size");
    basis_ = s.basis;
    rebuild_membership();
    refactor();
  }

  // `cost` covers structural then artificial columns; only structural
  // columns may enter. Returns the number of pivots used.
  int run(const Eigen::VectorXd& cost, int phase) {
    const int cap = 10 * prob_.U * prob_.V;
    const int degenerate_limit = 2 * (prob_.U + prob_.V);
    int pivots = 0, degenerate_run = 0;
    bool bland = false;
    while (true) {
      const Eigen::VectorXd lambda = duals(cost);
      int enter = -1;
      double best = -options_.optimality_tol;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        const double r = cost(j) - column_dot(lambda, j);
        if (r < best) {
          enter = j;
          if (bland) break;
          best = r;
        }
      }
      if (enter < 0) return pivots;

      const Eigen::VectorXd y = binv_col(enter);
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (y(i) <= kPivotTol) continue;
        const double t = std::max(x_(i), 0.0) / y(i);
        if (leave < 0 || t < ratio - 1e-14) {
          leave = i;
          ratio = t;
        } else if (t <= ratio + 1e-14 && prefer(i, leave, y, bland)) {
          leave = i;
          ratio = std::min(ratio, t);
        }
      }
      if (leave < 0) throw SolverError("simplex: unbounded direction (internal error)", basis_);

      if (++pivots > cap)
        throw SolverError("simplex: pivot cap of " + std::to_string(cap) + " exceeded in phase " +
                              std::to_string(phase),
                          basis_);
      if (ratio <= 1e-14) {
        if (++degenerate_run > degenerate_limit) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      if (options_.trace)
        *options_.trace << "phase " << phase << " pivot " << pivots << ": enter " << enter
                        << " leave " << basis_[static_cast<std::size_t>(leave)] << " step "
                        << ratio << (bland ? " (bland)" : "") << '\n';
      pivot(enter, leave, y);
    }
  }

  // After phase I: swap zero-level artificials for structural columns when
  // some structural column has a nonzero entry in that row of B^-1 A.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      int best_j = -1;
      double best_y = 1e-9;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        const double yi = std::abs(binv_row_dot(i, j));
        if (yi > best_y) {
          best_y = yi;
          best_j = j;
        }
      }
      if (best_j < 0) continue;
      x_(i) = 0.0;
      if (options_.trace)
        *options_.trace << "phase 1 drive-out: enter " << best_j << " leave "
                        << basis_[static_cast<std::size_t>(i)] << '\n';
      pivot(best_j, i, binv_col(best_j));
    }
  }

  double artificial_sum() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[static_cast<std::size_t>(i)] >= n_) s += std::max(x_(i), 0.0);
    return s;
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = column(basis_[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) throw SolverError("simplex: singular basis", basis_);
    binv_ = lu.inverse();
    x_ = binv_ * prob_.b;
    for (int i = 0; i < m_; ++i)
      if (std::abs(x_(i)) < 1e-15) x_(i) = 0.0;
    since_refactor_ = 0;
  }

  Eigen::VectorXd duals(const Eigen::VectorXd& cost) const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      cb(i) = cost(j);
    }
    return binv_.transpose() * cb;
  }

  const std::vector<int>& basis() const { return basis_; }
  const Eigen::VectorXd& values() const { return x_; }
  const Eigen::MatrixXd& b_inv() const { return binv_; }

 private:
  Eigen::VectorXd column(int j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    if (j >= n_) {
      a(j - n_) = 1.0;
    } else {
      const int u = j / prob_.V, v = j % prob_.V;
      a(v) = 1.0;
      a(prob_.V + u) = 1.0;
      a(prob_.U + prob_.V) = 1.0;
    }
    return a;
  }

  double column_dot(const Eigen::VectorXd& lambda, int j) const {
    const int u = j / prob_.V, v = j % prob_.V;
    return lambda(v) + lambda(prob_.V + u) + lambda(prob_.U + prob_.V);
  }

  Eigen::VectorXd binv_col(int j) const {
    if (j >= n_) return binv_.col(j - n_);
    const int u = j / prob_.V, v = j % prob_.V;
    return binv_.col(v) + binv_.col(prob_.V + u) + binv_.col(prob_.U + prob_.V);
  }

  double binv_row_dot(int i, int j) const {
    const int u = j / prob_.V, v = j % prob_.V;
    return binv_(i, v) + binv_(i, prob_.V + u) + binv_(i, prob_.U + prob_.V);
  }

  // Tie-break in the ratio test: smallest variable index under Bland's rule,
  // otherwise artificials leave first, then the larger pivot element.
  bool prefer(int i, int current, const Eigen::VectorXd& y, bool bland) const {
    const int bi = basis_[static_cast<std::size_t>(i)];
    const int bc = basis_[static_cast<std::size_t>(current)];
    if (bland) return bi < bc;
    const bool ai = bi >= n_, ac = bc >= n_;
    if (ai != ac) return ai;
    return y(i) > y(current);
  }

  void pivot(int enter, int row, const Eigen::VectorXd& y) {
    const double piv = y(row);
    binv_.row(row) /= piv;
    x_(row) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == row || y(i) == 0.0) continue;
      binv_.row(i) -= y(i) * binv_.row(row);
      x_(i) -= y(i) * x_(row);
    }
    in_basis_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(row)])] = 0;
    basis_[static_cast<std::size_t>(row)] = enter;
    in_basis_[static_cast<std::size_t>(enter)] = 1;
    for (int i = 0; i < m_; ++i)
      if (x_(i) < 0.0 && x_(i) > -1e-13) x_(i) = 0.0;
    if (++since_refactor_ >= options_.refactor_every) refactor();
  }

  void rebuild_membership() {
    in_basis_.assign(static_cast<std::size_t>(n_ + m_), 0);
    for (int j : basis_) {
      if (j < 0 || j >= n_ + m_) throw std::invalid_argument("simplex: basis index out of range");
      in_basis_[static_cast<std::size_t>(j)] = 1;
    }
  }

  const TransportProblem& prob_;
  SimplexOptions options_;
  int m_, n_;
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd x_;
  int since_refactor_ = 0;
};

}  // namespace

TransportProblem build_problem(const std::vector<double>& p, const std::vector<double>& q,
                               const Eigen::MatrixXd& D) {
  const int U = static_cast<int>(p.size()), V = static_cast<int>(q.size());
  if (U == 0 || V == 0) throw std::invalid_argument("build_problem: empty signature");
  if (D.rows() != U || D.cols() != V)
    throw std::invalid_argument("build_problem: distance matrix must be " + std::to_string(U) +
                                "x" + std::to_string(V));
  double sp = 0.0, sq = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("build_problem: bad mass in p");
    sp += v;
  }
  for (double v : q) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("build_problem: bad mass in q");
    sq += v;
  }
  if (std::abs(sp - 1.0) > kMassTol || std::abs(sq - 1.0) > kMassTol)
    throw std::invalid_argument("build_problem: unbalanced masses (sum p = " + std::to_string(sp) +
                                ", sum q = " + std::to_string(sq) + ")");
  if (!D.allFinite() || D.minCoeff() < 0.0)
    throw std::invalid_argument("build_problem: distances must be finite and nonnegative");

  TransportProblem prob;
  prob.U = U;
  prob.V = V;
  prob.c.resize(U * V);
  prob.A = Eigen::MatrixXd::Zero(U + V + 1, U * V);
  for (int u = 0; u < U; ++u)
    for (int v = 0; v < V; ++v) {
      const int j = u * V + v;
      prob.c(j) = D(u, v);
      prob.A(v, j) = 1.0;
      prob.A(V + u, j) = 1.0;
      prob.A(U + V, j) = 1.0;
    }
  prob.b.resize(U + V + 1);
  for (int v = 0; v < V; ++v) prob.b(v) = q[static_cast<std::size_t>(v)];
  for (int u = 0; u < U; ++u) prob.b(V + u) = p[static_cast<std::size_t>(u)];
  prob.b(U + V) = 1.0;
  return prob;
}

BasicSolution initial_bfs(const TransportProblem& prob, const SimplexOptions& options) {
  Tableau tab(prob, options);
  tab.start_artificial();
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(prob.cols() + prob.rows());
  cost.tail(prob.rows()).setOnes();
  tab.run(cost, 1);
  if (tab.artificial_sum() > kMassTol)
    throw SolverError("simplex: phase I left artificials at " +
                          std::to_string(tab.artificial_sum()) + " (internal error)",
                      tab.basis());
  tab.drive_out_artificials();
  tab.refactor();
  return {tab.basis(), tab.values(), tab.b_inv()};
}

EmdSolution simplex_solve(const TransportProblem& prob, const SimplexOptions& options) {
  return simplex_solve(prob, initial_bfs(prob, options), options);
}

EmdSolution simplex_solve(const TransportProblem& prob, const BasicSolution& start,
                          const SimplexOptions& options) {
  Tableau tab(prob, options);
  tab.start_from(start);
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(prob.cols() + prob.rows());
  cost.head(prob.cols()) = prob.c;
  EmdSolution sol;
  sol.pivots = tab.run(cost, 2);
  tab.refactor();

  const int U = prob.U, V = prob.V, n = prob.cols();
  sol.flow = Eigen::MatrixXd::Zero(U, V);
  for (int i = 0; i < prob.rows(); ++i) {
    const int j = tab.basis()[static_cast<std::size_t>(i)];
    if (j < n) sol.flow(j / V, j % V) = std::max(tab.values()(i), 0.0);
  }
  sol.objective = 0.0;
  for (int u = 0; u < U; ++u)
    for (int v = 0; v < V; ++v) sol.objective += prob.c(u * V + v) * sol.flow(u, v);
  const Eigen::VectorXd lambda = tab.duals(cost);
  sol.l = lambda.head(V);
  sol.h = lambda.segment(V, U);
  sol.const_c = lambda(U + V);
  sol.basis = tab.basis();
  sol.b_inv = tab.b_inv();
  return sol;
}

Eigen::VectorXd reduced_costs(const TransportProblem& prob, const EmdSolution& sol) {
  Eigen::VectorXd r(prob.cols());
  for (int u = 0; u < prob.U; ++u)
    for (int v = 0; v < prob.V; ++v)
      r(u * prob.V + v) = prob.c(u * prob.V + v) - sol.l(v) - sol.h(u) - sol.const_c;
  return r;
}

EmdSolution emd(const std::vector<double>& p, const std::vector<double>& q,
                const Eigen::MatrixXd& D, const SimplexOptions& options) {
  return simplex_solve(build_problem(p, q, D), options);
}

}  // namespace tsemd
