#pragma once

#include <dwropt/forms.hpp>
#include <dwropt/linear_solver.hpp>
#include <dwropt/problem.hpp>

#include <memory>
#include <mutex>
#include <stdexcept>

namespace dwropt
{
/// Raised when the reduced Hessian shows nonpositive curvature.
class NegativeCurvatureError : public SolverError
{
public:
  using SolverError::SolverError;
};

/// Raised when a triple is used before its state and adjoint are solved.
class ContractError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

struct SolverSettings
{
  double state_tol_abs  = 1e-14;
  double state_tol_rel  = 1e-12;
  int    state_max_it   = 50;
  int    max_backtracks = 20;
  double krylov_tol     = 1e-10;
  int    krylov_max_it  = 2000;
  int    quad_extra     = 1;
};

/// Factorized state Jacobian at a state.
struct Linearization
{
  DiscreteFunction                    u;
  std::shared_ptr<const DirectSolver> K;
};

/// State, control and adjoint of the optimality system at one control.
struct KKTTriple
{
  DiscreteFunction                     u;
  DiscreteFunction                     q;
  DiscreteFunction                     z;
  std::shared_ptr<const Linearization> lin;
  bool                                 consistent = false;
  int                                  state_iterations = 0;
};

/// Block-diagonal mass matrix of a discontinuous control space.
class ControlMass
{
public:
  explicit ControlMass(const Space &control);
  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd &x) const;

private:
  int                  npc_ = 0;
  std::vector<double>  h2_;
  Eigen::MatrixXd      ref_;
  Eigen::MatrixXd      ref_inv_;
};

struct CGResult
{
  Eigen::VectorXd x;
  int             iterations = 0;
  double          relative_residual = 0.;
};

struct StateSolveResult
{
  DiscreteFunction u;
  int              iterations = 0;
  double           residual   = 0.;
};

/// The control-to-state machinery on one pair of state and control spaces.
class ReducedModel
{
public:
  ReducedModel(const ProblemDefinition &problem,
               SpacePtr                 state,
               SpacePtr                 control,
               SolverSettings           settings = {});

  const ProblemDefinition &problem() const { return problem_; }
  const SpacePtr          &state_space() const { return state_; }
  const SpacePtr          &control_space() const { return control_; }
  const SolverSettings    &settings() const { return settings_; }
  int                      quad_extra() const { return settings_.quad_extra; }
  const ControlMass       &control_mass() const { return mass_; }

  /// Damped Newton on the state equation for a fixed control.
  StateSolveResult solve_state(const DiscreteFunction &q,
                               const DiscreteFunction *warm_start = nullptr) const;
  std::shared_ptr<const Linearization> linearize(const DiscreteFunction &u) const;

  /// Solves K^T w = rhs (rhs a free state functional) and returns w.
  DiscreteFunction solve_adjoint_like(const Linearization &lin, const Eigen::VectorXd &rhs) const;
  /// Solves K w = rhs.
  DiscreteFunction solve_tangent_like(const Linearization &lin, const Eigen::VectorXd &rhs) const;

  /// State solve, linearization and cost adjoint at a control.
  KKTTriple make_triple(const DiscreteFunction &q, const DiscreteFunction *warm_u = nullptr) const;

  double cost(const KKTTriple &t) const;
  /// Reduced gradient as a control functional: J_q(.) - a_q(., z).
  Eigen::VectorXd gradient(const KKTTriple &t) const;
  /// Reduced Hessian applied to control coefficients.
  Eigen::VectorXd hessvec(const KKTTriple &t, const Eigen::VectorXd &dq) const;
  /// CG on the reduced Hessian, preconditioned by (alpha M)^-1.
  CGResult solve_reduced_system(const KKTTriple &t, const Eigen::VectorXd &rhs) const;

  /// Zero control.
  DiscreteFunction zero_control() const { return DiscreteFunction(control_); }

private:
  void require(const KKTTriple &t) const;

  ProblemDefinition                    problem_;
  SpacePtr                             state_;
  SpacePtr                             control_;
  SolverSettings                       settings_;
  ControlMass                          mass_;
  mutable std::mutex                   cache_mutex_;
  mutable std::shared_ptr<const DirectSolver> linear_cache_;
};

} // namespace dwropt
