#pragma once

#include <dwropt/reduced.hpp>

#include <optional>
#include <vector>

namespace dwropt
{
/// Tangent state v, reduced adjoint p and second adjoint y of a goal.
struct AdjointTriple
{
  DiscreteFunction v;
  DiscreteFunction p;
  DiscreteFunction y;
};

/// Derivative of the reduced goal i(q) = I(S(q), q) as a control functional.
Eigen::VectorXd goal_gradient(const ReducedModel &model, const GoalFunctional &goal,
                              const KKTTriple &t);

/// p with j''(q)(., p) = -i'(q)(.).
DiscreteFunction solve_reduced_adjoint(const ReducedModel &model, const GoalFunctional &goal,
                                       const KKTTriple &t, int *cg_iterations = nullptr);

/// v with a_u(u)(v, .) = -a_q(p, .).
DiscreteFunction recover_v(const ReducedModel &model, const KKTTriple &t, const DiscreteFunction &p);

/// y from a_u(u)(., y) = I_u(.) + J_uu(v, .) - a_uu(u)(v, .)(z).
DiscreteFunction recover_y(const ReducedModel &model, const GoalFunctional &goal, const KKTTriple &t,
                           const DiscreteFunction &v, const DiscreteFunction &p);

AdjointTriple adjoint_chain(const ReducedModel &model, const GoalFunctional &goal, const KKTTriple &t);

/// -j'(q)(p).
double compute_eta_k(const ReducedModel &model, const KKTTriple &t, const DiscreteFunction &p);

struct Effectivities
{
  bool   defined = false;
  double i_eff   = 0.;
  double i_eff_p = 0.;
  double i_eff_a = 0.;
  double i_eff_c = 0.;
};

/// Weighted residuals of the six optimality rows, evaluated at the low-order
/// solutions with enriched-minus-low weights.
struct ErrorBreakdown
{
  double rho_u = 0., rho_q = 0., rho_z = 0.;
  double rho_v = 0., rho_p = 0., rho_y = 0.;
  double eta_h2 = 0.;
  double eta_k  = 0.;
  /// Signed vertex contributions of the partition of unity (free DOFs of
  /// the Q1 space without boundary constraints).
  Eigen::VectorXd vertex;
  /// Nonnegative indicators per active cell.
  std::vector<double> cells;
  Effectivities       eff;

  double primal_sum() const { return rho_u + rho_z + rho_q; }
  double adjoint_sum() const { return rho_v + rho_y + rho_p; }
};

/// Inputs of the estimator: solutions on the low-order and on the enriched
/// spaces over one mesh.
struct EstimatorInput
{
  const ProblemDefinition *problem = nullptr;
  const GoalFunctional    *goal    = nullptr;
  const KKTTriple         *low     = nullptr;
  const AdjointTriple     *low_adj = nullptr;
  const KKTTriple         *enr     = nullptr;
  const AdjointTriple     *enr_adj = nullptr;
  int                      quad_extra = 1;
};

/// The six parts and their half sum.
ErrorBreakdown compute_eta_h2(const EstimatorInput &in);

/// Fills vertex and cell indicators of a breakdown.
void localize_pu(const EstimatorInput &in, ErrorBreakdown &b);

Effectivities effectivities(const ErrorBreakdown &b, double true_error);

} // namespace dwropt
