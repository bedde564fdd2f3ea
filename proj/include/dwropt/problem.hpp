#pragma once

#include <dwropt/fem.hpp>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwropt
{
class ProblemError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Flux law kappa(|g|) g with kappa = (eps^2 + |g|^2)^((p-2)/2). The linear
/// variant is the plain Laplacian.
struct StateOperator
{
  bool   linear  = true;
  double p       = 2.;
  double epsilon = 1.;

  Vec2 flux(const Vec2 &g) const;
  /// Derivative of the flux in g.
  Mat2 jacobian(const Vec2 &g) const;
  /// Directional derivative of jacobian(g) along d; symmetric in all slots
  /// when contracted with two more vectors.
  Mat2 jacobian_derivative(const Vec2 &g, const Vec2 &d) const;
};

/// Pointwise data a goal integrand sees. u_sup is the sup norm of the state
/// coefficients, used to scale the smoothing of nonsmooth integrands.
struct GoalPoint
{
  Vec2   x;
  double u     = 0.;
  double q     = 0.;
  double u_sup = 0.;
};

struct GoalDensity
{
  double value = 0.;
  double d_du  = 0.;
  double d_dq  = 0.;
};

struct GoalTerm
{
  double                                      coef = 1.;
  Region                                      region;
  std::function<GoalDensity(const GoalPoint &)> density;
};

/// I(u,q) = constant + sum_k coef_k int_{region_k} density_k(x, u, q).
struct GoalFunctional
{
  std::string           name;
  double                constant = 0.;
  std::vector<GoalTerm> terms;
  std::optional<double> reference;

  /// Sum of the term densities at a point, without the constant.
  GoalDensity density_at(const GoalPoint &pt) const;
  GoalFunctional scaled(double c) const;
};

/// Distributed control of  -div flux(grad u) = f + q  with homogeneous
/// Dirichlet data and the tracking cost
///   J = 1/2 |u - u_d|^2 + alpha/2 |q - q_d|^2.
struct ProblemDefinition
{
  std::string   name;
  Domain        domain;
  double        initial_cell_size = 0.5;
  double        alpha             = 1.;
  StateOperator op;
  std::function<double(const Vec2 &)> f;
  std::function<double(const Vec2 &)> u_desired;
  std::function<double(const Vec2 &)> q_desired;
  /// Exact optimum when known.
  std::function<double(const Vec2 &)> u_exact;
  std::function<double(const Vec2 &)> q_exact;

  /// The cost J as a goal functional.
  GoalFunctional cost() const;
  bool           linear() const { return op.linear; }
};

ProblemDefinition make_poisson_control(double alpha);
ProblemDefinition make_plaplace_control(double alpha, double p, double epsilon);

/// Known preset names.
const std::vector<std::string> &preset_names();

/// Goals of a preset. Reference values printed for the experiments are
/// attached where they apply to the given problem parameters.
std::vector<GoalFunctional> make_goals(const std::string       &preset,
                                       const ProblemDefinition &problem,
                                       double                   smoothing = 1e-8);

/// Reference values of the p-Laplace single-goal experiment by alpha.
std::optional<double> uq_reference(double alpha);

} // namespace dwropt
