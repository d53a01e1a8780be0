// Earth Mover's Distance as a transportation LP, solved by a two-phase
// revised simplex with an explicit basis inverse. The duals of the optimal
// basis give the per-bin coefficients used by the shape derivative.
#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsemd {

/// Reference masses p (length U) are shipped to candidate masses q (length V).
/// Variable r_uv sits at column u*V + v. Rows 0..V-1 are the q constraints,
/// rows V..V+U-1 the p constraints and row U+V the redundant total-mass row.
struct TransportProblem {
  int U = 0;
  int V = 0;
  Eigen::VectorXd c;  // U*V, d_uv row-major
  Eigen::VectorXd b;  // (q, p, 1)
  Eigen::MatrixXd A;  // (U+V+1) x (U*V)

  int rows() const { return U + V + 1; }
  int cols() const { return U * V; }
};

/// Throws std::invalid_argument on negative or non-finite input, shape
/// mismatch, or masses that do not both sum to 1 within 1e-9.
TransportProblem build_problem(const std::vector<double>& p, const std::vector<double>& q,
                               const Eigen::MatrixXd& D);

/// Column indices >= U*V denote the artificial variable of row (index - U*V).
struct BasicSolution {
  std::vector<int> basis;
  Eigen::VectorXd values;  // value of each basic variable
  Eigen::MatrixXd b_inv;
};

struct SimplexOptions {
  double optimality_tol = 1e-10;
  int refactor_every = 50;
  std::ostream* trace = nullptr;  // pivot-by-pivot log when set
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<int> basis)
      : std::runtime_error(what), basis_(std::move(basis)) {}
  const std::vector<int>& basis() const { return basis_; }

 private:
  std::vector<int> basis_;
};

/// Phase I: minimizes the sum of artificials from the all-artificial basis,
/// then pivots zero-level artificials out where a structural column allows.
/// Artificials on redundant rows remain basic at zero.
BasicSolution initial_bfs(const TransportProblem& prob, const SimplexOptions& options = {});

struct EmdSolution {
  Eigen::MatrixXd flow;  // U x V
  double objective = 0.0;
  Eigen::VectorXd l;  // V
  Eigen::VectorXd h;  // U
  double const_c = 0.0;
  std::vector<int> basis;
  Eigen::MatrixXd b_inv;
  int pivots = 0;
};

/// Phase II from `start` (or from initial_bfs). Duals are c_B^T B^-1, so
/// objective = sum l_v q_v + sum h_u p_u + const_c holds at the optimum.
EmdSolution simplex_solve(const TransportProblem& prob, const SimplexOptions& options = {});
EmdSolution simplex_solve(const TransportProblem& prob, const BasicSolution& start,
                          const SimplexOptions& options = {});

/// c_j - lambda^T A_j for every structural column.
Eigen::VectorXd reduced_costs(const TransportProblem& prob, const EmdSolution& sol);

EmdSolution emd(const std::vector<double>& p, const std::vector<double>& q,
                const Eigen::MatrixXd& D, const SimplexOptions& options = {});

}  // namespace tsemd
