#pragma once

#include <dwropt/estimator.hpp>
#include <dwropt/reduced.hpp>

#include <functional>
#include <string>
#include <vector>

namespace dwropt
{
struct NewtonLog
{
  int                 iterations = 0;
  /// Per iterate: |j'(q)(p)| for the adaptive rule, |j'(q)| otherwise.
  std::vector<double> residuals;
  std::vector<double> gradient_norms;
  std::vector<double> step_sizes;
  std::vector<int>    cg_iterations;
  /// adaptive | absolute | relative | stagnation
  std::string         stop_reason;
};

struct NewtonResult
{
  KKTTriple triple;
  NewtonLog log;
  /// Reduced adjoint of the goal at the final iterate (adaptive rule only).
  DiscreteFunction p;
};

/// Goal used by the adaptive rule, rebuilt at every iterate.
using GoalAtIterate = std::function<GoalFunctional(const KKTTriple &)>;

/// Newton on the reduced cost with the stopping rule |j'| <= max(tol_abs,
/// tol_rel |j'_0|) in the Euclidean norm of the assembled gradient.
NewtonResult newton_standard(const ReducedModel &model, const DiscreteFunction &q0,
                             double tol_abs = 1e-7, double tol_rel = 8e-5, int max_it = 50);

/// Newton on the reduced cost that stops once |j'(q)(p)| <= gamma * eta_prev,
/// with p the reduced adjoint of the goal at the current iterate.
NewtonResult newton_reduced_adaptive(const ReducedModel &model, const GoalAtIterate &goal,
                                     const DiscreteFunction &q0, double gamma, double eta_prev,
                                     int max_it = 50);

} // namespace dwropt
