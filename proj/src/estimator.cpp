#include <dwropt/estimator.hpp>

#include <cmath>
#include <algorithm>

namespace dwropt
{
Eigen::VectorXd goal_gradient(const ReducedModel &model, const GoalFunctional &goal,
                              const KKTTriple &t)
{
  if (!t.consistent || !t.lin)
    throw ContractError("KKT triple is not consistent");
  const int        qe = model.quad_extra();
  const DiscreteFunction w = model.solve_adjoint_like(
    *t.lin, forms::goal_du_vector(goal, *model.state_space(), t.u, t.q, qe));
  return forms::goal_dq_vector(goal, *model.control_space(), t.u, t.q, qe) +
         forms::mass_vector(*model.control_space(), w, qe);
}

DiscreteFunction solve_reduced_adjoint(const ReducedModel &model, const GoalFunctional &goal,
                                       const KKTTriple &t, int *cg_iterations)
{
  const CGResult r = model.solve_reduced_system(t, -goal_gradient(model, goal, t));
  if (cg_iterations)
    *cg_iterations = r.iterations;
  return DiscreteFunction(model.control_space(), r.x);
}

DiscreteFunction recover_v(const ReducedModel &model, const KKTTriple &t, const DiscreteFunction &p)
{
  if (!t.consistent || !t.lin)
    throw ContractError("KKT triple is not consistent");
  return model.solve_tangent_like(
    *t.lin, forms::mass_vector(*model.state_space(), p, model.quad_extra()));
}

DiscreteFunction recover_y(const ReducedModel &model, const GoalFunctional &goal, const KKTTriple &t,
                           const DiscreteFunction &v, const DiscreteFunction &)
{
  if (!t.consistent || !t.lin)
    throw ContractError("KKT triple is not consistent");
  const int   qe = model.quad_extra();
  const auto &V  = *model.state_space();
  Eigen::VectorXd rhs =
    forms::goal_du_vector(goal, V, t.u, t.q, qe) + forms::mass_vector(V, v, qe);
  if (!model.problem().linear())
    rhs -= forms::a_uu_vector(model.problem(), V, t.u, v, t.z, qe);
  return model.solve_adjoint_like(*t.lin, rhs);
}

AdjointTriple adjoint_chain(const ReducedModel &model, const GoalFunctional &goal, const KKTTriple &t)
{
  AdjointTriple a;
  a.p = solve_reduced_adjoint(model, goal, t);
  a.v = recover_v(model, t, a.p);
  a.y = recover_y(model, goal, t, a.v, a.p);
  return a;
}

double compute_eta_k(const ReducedModel &model, const KKTTriple &t, const DiscreteFunction &p)
{
  return -model.gradient(t).dot(p.values);
}

namespace
{
enum Part
{
  part_u,
  part_q,
  part_z,
  part_v,
  part_p,
  part_y,
  n_parts
};

/// Field slots passed to the kernels.
enum Slot
{
  s_u,
  s_q,
  s_z,
  s_v,
  s_p,
  s_y,
  s_w
};

struct ResidualKernel
{
  const ProblemDefinition &P;
  const GoalFunctional    &goal;
  GoalFunctional           cost;
  double                   u_sup;

  /// (c0, c1) with residual(w) = int c0 w + c1 . grad w.
  LinearDensity operator()(int part, const PointData &pd) const
  {
    const FieldValue &u = pd[s_u], &q = pd[s_q], &z = pd[s_z];
    const FieldValue &v = pd[s_v], &p = pd[s_p], &y = pd[s_y];
    const GoalPoint   gp{pd.x, u.value, q.value, u_sup};
    switch (part)
      {
        case part_u:
          return {P.f(pd.x) + q.value, -P.op.flux(u.grad)};
        case part_q:
          return {cost.density_at(gp).d_dq + z.value, Vec2::Zero()};
        case part_z:
          return {cost.density_at(gp).d_du, -(P.op.jacobian(u.grad) * z.grad)};
        case part_v:
          return {p.value, -(P.op.jacobian(u.grad) * v.grad)};
        case part_y:
          return {goal.density_at(gp).d_du + v.value,
                  -(P.op.jacobian_derivative(u.grad, v.grad) * z.grad) -
                    P.op.jacobian(u.grad) * y.grad};
        default:
          return {goal.density_at(gp).d_dq + P.alpha * p.value + y.value, Vec2::Zero()};
      }
  }
};

struct PreparedInput
{
  std::vector<DiscreteFunction> weights;
  std::vector<const DiscreteFunction *> base;
};

PreparedInput prepare(const EstimatorInput &in)
{
  const KKTTriple     &L  = *in.low;
  const AdjointTriple &La = *in.low_adj;
  const KKTTriple     &E  = *in.enr;
  const AdjointTriple &Ea = *in.enr_adj;
  if (L.u.space->mesh().generation_id() != E.u.space->mesh().generation_id())
    throw FemError("low-order and enriched solutions live on different meshes");
  auto diff = [](const DiscreteFunction &hi, const DiscreteFunction &lo) {
    DiscreteFunction d = transfer(lo, hi.space);
    d.values           = hi.values - d.values;
    return d;
  };
  PreparedInput p;
  p.weights.resize(n_parts);
  p.weights[part_u] = diff(Ea.y, La.y);
  p.weights[part_q] = diff(Ea.p, La.p);
  p.weights[part_z] = diff(Ea.v, La.v);
  p.weights[part_v] = diff(E.z, L.z);
  p.weights[part_p] = diff(E.q, L.q);
  p.weights[part_y] = diff(E.u, L.u);
  p.base = {&L.u, &L.q, &L.z, &La.v, &La.p, &La.y};
  return p;
}
} // namespace

ErrorBreakdown compute_eta_h2(const EstimatorInput &in)
{
  const PreparedInput  prep = prepare(in);
  const ResidualKernel kernel{*in.problem, *in.goal, in.problem->cost(), in.low->u.sup_norm()};
  const Mesh          &mesh = in.low->u.space->mesh();
  double               rho[n_parts];
  for (int k = 0; k < n_parts; ++k)
    {
      auto fields = prep.base;
      fields.push_back(&prep.weights[k]);
      rho[k] = integrate_density(mesh, fields, in.quad_extra, [&](const PointData &pd) {
        const LinearDensity d = kernel(k, pd);
        return d.c0 * pd[s_w].value + d.c1.dot(pd[s_w].grad);
      });
    }
  ErrorBreakdown b;
  b.rho_u  = rho[part_u];
  b.rho_q  = rho[part_q];
  b.rho_z  = rho[part_z];
  b.rho_v  = rho[part_v];
  b.rho_p  = rho[part_p];
  b.rho_y  = rho[part_y];
  b.eta_h2 = 0.5 * (b.primal_sum() + b.adjoint_sum());
  return b;
}

void localize_pu(const EstimatorInput &in, ErrorBreakdown &b)
{
  const PreparedInput  prep = prepare(in);
  const ResidualKernel kernel{*in.problem, *in.goal, in.problem->cost(), in.low->u.sup_norm()};
  const auto           mesh = in.low->u.space->mesh_ptr();
  const auto           pu   = make_space(mesh, Family::continuous, 1, false);

  b.vertex = Eigen::VectorXd::Zero(pu->n_free());
  for (int k = 0; k < n_parts; ++k)
    {
      auto fields = prep.base;
      fields.push_back(&prep.weights[k]);
      b.vertex += assemble_vector(*pu, fields, in.quad_extra, [&](const PointData &pd) {
        const LinearDensity d = kernel(k, pd);
        const FieldValue   &w = pd[s_w];
        return LinearDensity{d.c0 * w.value + d.c1.dot(w.grad), d.c1 * w.value};
      });
    }
  b.vertex *= 0.5;

  // Split each vertex value evenly over the cells whose shape functions
  // reach it.
  const std::size_t             nc = mesh->n_active();
  std::vector<std::vector<int>> touched(nc);
  std::vector<int>              count(pu->n_free(), 0);
  for (std::size_t a = 0; a < nc; ++a)
    {
      auto &t = touched[a];
      for (int d : pu->cell_dofs(a))
        for (const auto &e : pu->expansion(d))
          t.push_back(e.free);
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
      for (int j : t)
        ++count[j];
    }
  b.cells.assign(nc, 0.);
  for (std::size_t a = 0; a < nc; ++a)
    for (int j : touched[a])
      b.cells[a] += std::abs(b.vertex[j]) / count[j];
}

Effectivities effectivities(const ErrorBreakdown &b, double err)
{
  Effectivities e;
  if (!(err != 0.) || !std::isfinite(err))
    return e;
  e.defined = true;
  e.i_eff   = b.eta_h2 / err;
  e.i_eff_p = b.primal_sum() / err;
  e.i_eff_a = b.adjoint_sum() / err;
  e.i_eff_c = (b.eta_h2 + b.eta_k) / err;
  return e;
}

} // namespace dwropt
