#include <dwropt/reduced.hpp>

#include <Eigen/LU>

#include <cmath>

namespace dwropt
{
ControlMass::ControlMass(const Space &control)
{
  if (control.family() != Family::discontinuous)
    throw FemError("control mass needs a discontinuous space");
  npc_ = control.dofs_per_cell();
  const ShapeTable &t = shape_table(control.degree(), control.degree() + 2);
  ref_                = Eigen::MatrixXd::Zero(npc_, npc_);
  for (int q = 0; q < t.n_points; ++q)
    for (int i = 0; i < npc_; ++i)
      for (int j = 0; j < npc_; ++j)
        ref_(i, j) += t.weights[q] * t.value[q * npc_ + i] * t.value[q * npc_ + j];
  ref_inv_ = ref_.inverse();
  for (int id : control.mesh().active_cells())
    h2_.push_back(control.mesh().cell(id).size * control.mesh().cell(id).size);
}

Eigen::VectorXd ControlMass::apply(const Eigen::VectorXd &x) const
{
  Eigen::VectorXd y(x.size());
  for (std::size_t c = 0; c < h2_.size(); ++c)
    y.segment(c * npc_, npc_) = h2_[c] * (ref_ * x.segment(c * npc_, npc_));
  return y;
}

Eigen::VectorXd ControlMass::apply_inverse(const Eigen::VectorXd &x) const
{
  Eigen::VectorXd y(x.size());
  for (std::size_t c = 0; c < h2_.size(); ++c)
    y.segment(c * npc_, npc_) = (ref_inv_ * x.segment(c * npc_, npc_)) / h2_[c];
  return y;
}

ReducedModel::ReducedModel(const ProblemDefinition &problem,
                           SpacePtr                 state,
                           SpacePtr                 control,
                           SolverSettings           settings)
  : problem_(problem)
  , state_(std::move(state))
  , control_(std::move(control))
  , settings_(settings)
  , mass_(*control_)
{
  if (state_->family() != Family::continuous || !state_->dirichlet())
    throw FemError("state space must be continuous with Dirichlet constraints");
  if (state_->mesh().generation_id() != control_->mesh().generation_id())
    throw FemError("state and control spaces live on different meshes");
}

std::shared_ptr<const Linearization> ReducedModel::linearize(const DiscreteFunction &u) const
{
  auto lin = std::make_shared<Linearization>();
  lin->u   = u;
  if (problem_.linear())
    {
      std::lock_guard<std::mutex> lock(cache_mutex_);
      if (!linear_cache_)
        linear_cache_ = std::make_shared<const DirectSolver>(
          forms::state_jacobian(problem_, u, quad_extra()));
      lin->K = linear_cache_;
    }
  else
    lin->K = std::make_shared<const DirectSolver>(
      forms::state_jacobian(problem_, u, quad_extra()));
  return lin;
}

StateSolveResult ReducedModel::solve_state(const DiscreteFunction &q,
                                           const DiscreteFunction *warm) const
{
  StateSolveResult out;
  out.u = warm ? *warm : DiscreteFunction(state_);
  if (out.u.space.get() != state_.get())
    out.u = transfer(out.u, state_);
  Eigen::VectorXd x  = out.u.free_values();
  out.u              = DiscreteFunction::from_free(state_, x);
  Eigen::VectorXd r  = forms::state_residual(problem_, out.u, q, quad_extra());
  double          rn = r.norm();
  const double    r0 = rn;
  const double    target =
    std::max(settings_.state_tol_abs, settings_.state_tol_rel * r0);

  while (rn > target)
    {
      if (out.iterations >= settings_.state_max_it)
        throw SolverError("state Newton did not converge in " +
                          std::to_string(settings_.state_max_it) + " iterations");
      const auto            lin = linearize(out.u);
      const Eigen::VectorXd dx  = -lin->K->solve(r);
      ++out.iterations;
      if (problem_.linear())
        {
          x += dx;
          out.u = DiscreteFunction::from_free(state_, x);
          r     = forms::state_residual(problem_, out.u, q, quad_extra());
          rn    = r.norm();
          break;
        }
      double t        = 1.;
      bool   accepted = false;
      for (int b = 0; b <= settings_.max_backtracks; ++b, t *= 0.5)
        {
          const Eigen::VectorXd xt = x + t * dx;
          DiscreteFunction      ut = DiscreteFunction::from_free(state_, xt);
          Eigen::VectorXd       rt = forms::state_residual(problem_, ut, q, quad_extra());
          const double          rtn = rt.norm();
          if (rtn < (1. - 1e-4 * t) * rn)
            {
              x        = xt;
              out.u    = std::move(ut);
              r        = std::move(rt);
              rn       = rtn;
              accepted = true;
              break;
            }
        }
      if (!accepted)
        {
          // Residual stuck at the rounding floor.
          if (rn <= 1e-9 * std::max(r0, 1.))
            break;
          throw SolverError("line search failed in the state Newton iteration");
        }
    }
  out.residual = rn;
  return out;
}

DiscreteFunction ReducedModel::solve_adjoint_like(const Linearization  &lin,
                                                  const Eigen::VectorXd &rhs) const
{
  return DiscreteFunction::from_free(state_, lin.K->solve_transposed(rhs));
}

DiscreteFunction ReducedModel::solve_tangent_like(const Linearization  &lin,
                                                  const Eigen::VectorXd &rhs) const
{
  return DiscreteFunction::from_free(state_, lin.K->solve(rhs));
}

KKTTriple ReducedModel::make_triple(const DiscreteFunction &q, const DiscreteFunction *warm_u) const
{
  if (q.space.get() != control_.get())
    throw FemError("control does not belong to the model's control space");
  KKTTriple t;
  auto      s        = solve_state(q, warm_u);
  t.u                = std::move(s.u);
  t.state_iterations = s.iterations;
  t.q                = q;
  t.lin              = linearize(t.u);
  const Eigen::VectorXd rhs =
    forms::goal_du_vector(problem_.cost(), *state_, t.u, t.q, quad_extra());
  t.z          = solve_adjoint_like(*t.lin, rhs);
  t.consistent = true;
  return t;
}

void ReducedModel::require(const KKTTriple &t) const
{
  if (!t.consistent || !t.lin)
    throw ContractError("KKT triple is not consistent");
  if (t.u.space.get() != state_.get() || t.q.space.get() != control_.get())
    throw ContractError("KKT triple belongs to other spaces");
}

double ReducedModel::cost(const KKTTriple &t) const
{
  return forms::goal_value(problem_.cost(), t.u, t.q, quad_extra());
}

Eigen::VectorXd ReducedModel::gradient(const KKTTriple &t) const
{
  require(t);
  return forms::goal_dq_vector(problem_.cost(), *control_, t.u, t.q, quad_extra()) +
         forms::mass_vector(*control_, t.z, quad_extra());
}

Eigen::VectorXd ReducedModel::hessvec(const KKTTriple &t, const Eigen::VectorXd &dq) const
{
  require(t);
  const int              qe = quad_extra();
  const DiscreteFunction dqf(control_, dq);
  const DiscreteFunction du =
    solve_tangent_like(*t.lin, forms::mass_vector(*state_, dqf, qe));
  Eigen::VectorXd rhs = forms::mass_vector(*state_, du, qe);
  if (!problem_.linear())
    rhs -= forms::a_uu_vector(problem_, *state_, t.u, du, t.z, qe);
  const DiscreteFunction dz = solve_adjoint_like(*t.lin, rhs);
  return problem_.alpha * mass_.apply(dq) + forms::mass_vector(*control_, dz, qe);
}

CGResult ReducedModel::solve_reduced_system(const KKTTriple &t, const Eigen::VectorXd &rhs) const
{
  require(t);
  CGResult out;
  out.x = Eigen::VectorXd::Zero(rhs.size());
  if (rhs.size() != static_cast<Eigen::Index>(control_->n_free()))
    throw FemError("reduced right-hand side has the wrong size");
  if (rhs.squaredNorm() == 0.)
    return out;
  const double    scale = 1. / problem_.alpha;
  Eigen::VectorXd r     = rhs;
  Eigen::VectorXd z     = scale * mass_.apply_inverse(r);
  Eigen::VectorXd p     = z;
  double          rz    = r.dot(z);
  const double    rz0   = rz;
  for (int k = 0; k < settings_.krylov_max_it; ++k)
    {
      const Eigen::VectorXd Hp  = hessvec(t, p);
      const double          pHp = p.dot(Hp);
      if (!(pHp > 0.))
        throw NegativeCurvatureError("nonpositive curvature " + std::to_string(pHp) +
                                     " along a CG direction at iteration " +
                                     std::to_string(k));
      const double a = rz / pHp;
      out.x += a * p;
      r -= a * Hp;
      z                   = scale * mass_.apply_inverse(r);
      const double rz_new = r.dot(z);
      out.iterations      = k + 1;
      out.relative_residual = std::sqrt(std::max(rz_new, 0.) / rz0);
      if (out.relative_residual <= settings_.krylov_tol)
        return out;
      p  = z + (rz_new / rz) * p;
      rz = rz_new;
    }
  throw SolverError("CG did not reach the Krylov tolerance");
}

} // namespace dwropt
