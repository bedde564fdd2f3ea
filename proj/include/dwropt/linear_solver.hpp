#pragma once

#include <dwropt/assembly.hpp>

#include <Eigen/Sparse>

#include <stdexcept>
#include <vector>

namespace dwropt
{
class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Condensed matrix and right-hand side.
struct SparseSystem
{
  SparseMatrix    matrix;
  Eigen::VectorXd rhs;
};

/// Sparse LU factorization (UMFPACK). One factorization serves both A x = b
/// and A^T x = b.
class DirectSolver
{
public:
  explicit DirectSolver(const SparseMatrix &A);
  ~DirectSolver();
  DirectSolver(const DirectSolver &)            = delete;
  DirectSolver &operator=(const DirectSolver &) = delete;

  Eigen::VectorXd solve(const Eigen::VectorXd &b) const;
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd &b) const;
  int             size() const { return n_; }

private:
  Eigen::VectorXd run(int mode, const Eigen::VectorXd &b) const;

  int                 n_ = 0;
  std::vector<int>    colptr_;
  std::vector<int>    rowind_;
  std::vector<double> values_;
  void               *numeric_ = nullptr;
};

Eigen::VectorXd solve_linear(const SparseSystem &system);

} // namespace dwropt
