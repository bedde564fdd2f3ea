#include <dwropt/linear_solver.hpp>

#include <umfpack.h>

#include <string>

namespace dwropt
{
DirectSolver::DirectSolver(const SparseMatrix &A)
  : n_(static_cast<int>(A.rows()))
{
  if (A.rows() != A.cols())
    throw SolverError("direct solve needs a square matrix");
  if (n_ == 0)
    return;
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> C(A);
  C.makeCompressed();
  colptr_.assign(C.outerIndexPtr(), C.outerIndexPtr() + n_ + 1);
  rowind_.assign(C.innerIndexPtr(), C.innerIndexPtr() + C.nonZeros());
  values_.assign(C.valuePtr(), C.valuePtr() + C.nonZeros());

  double control[UMFPACK_CONTROL];
  umfpack_di_defaults(control);
  void *symbolic = nullptr;
  int   status   = umfpack_di_symbolic(n_, n_, colptr_.data(), rowind_.data(),
                                   values_.data(), &symbolic, control, nullptr);
  if (status != UMFPACK_OK)
    throw SolverError("symbolic factorization failed (status " +
                      std::to_string(status) + ")");
  status = umfpack_di_numeric(colptr_.data(), rowind_.data(), values_.data(),
                              symbolic, &numeric_, control, nullptr);
  umfpack_di_free_symbolic(&symbolic);
  if (status != UMFPACK_OK)
    {
      if (numeric_)
        umfpack_di_free_numeric(&numeric_);
      throw SolverError(status == UMFPACK_WARNING_singular_matrix ?
                          "matrix is singular" :
                          "numeric factorization failed (status " +
                            std::to_string(status) + ")");
    }
}

DirectSolver::~DirectSolver()
{
  if (numeric_)
    umfpack_di_free_numeric(&numeric_);
}

Eigen::VectorXd DirectSolver::run(int mode, const Eigen::VectorXd &b) const
{
  if (b.size() != n_)
    throw SolverError("right-hand side has the wrong size");
  Eigen::VectorXd x(n_);
  if (n_ == 0)
    return x;
  double control[UMFPACK_CONTROL];
  umfpack_di_defaults(control);
  // Iterative refinement costs two extra sweeps per solve and changes the
  // results only at rounding level for these matrices.
  control[UMFPACK_IRSTEP] = 0;
  const int status =
    umfpack_di_solve(mode, colptr_.data(), rowind_.data(), values_.data(), x.data(),
                     b.data(), numeric_, control, nullptr);
  if (status != UMFPACK_OK)
    throw SolverError("triangular solve failed (status " + std::to_string(status) + ")");
  return x;
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd &b) const
{
  return run(UMFPACK_A, b);
}

Eigen::VectorXd DirectSolver::solve_transposed(const Eigen::VectorXd &b) const
{
  return run(UMFPACK_At, b);
}

Eigen::VectorXd solve_linear(const SparseSystem &system)
{
  return DirectSolver(system.matrix).solve(system.rhs);
}

} // namespace dwropt
