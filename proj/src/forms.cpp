#include <dwropt/forms.hpp>

namespace dwropt::forms
{
namespace
{
const Mesh &common_mesh(const DiscreteFunction &f)
{
  return f.space->mesh();
}
} // namespace

double a(const ProblemDefinition &P, const DiscreteFunction &u, const DiscreteFunction &q,
         const DiscreteFunction &v, int qe)
{
  return integrate_density(common_mesh(u), {&u, &q, &v}, qe, [&](const PointData &pd) {
    return P.op.flux(pd[0].grad).dot(pd[2].grad) - (P.f(pd.x) + pd[1].value) * pd[2].value;
  });
}

double a_u(const ProblemDefinition &P, const DiscreteFunction &u, const DiscreteFunction &du,
           const DiscreteFunction &v, int qe)
{
  return integrate_density(common_mesh(u), {&u, &du, &v}, qe, [&](const PointData &pd) {
    return pd[2].grad.dot(P.op.jacobian(pd[0].grad) * pd[1].grad);
  });
}

double a_q(const DiscreteFunction &dq, const DiscreteFunction &v, int qe)
{
  return integrate_density(common_mesh(dq), {&dq, &v}, qe, [](const PointData &pd) {
    return -pd[0].value * pd[1].value;
  });
}

double a_uu(const ProblemDefinition &P, const DiscreteFunction &u, const DiscreteFunction &d1,
            const DiscreteFunction &d2, const DiscreteFunction &v, int qe)
{
  return integrate_density(common_mesh(u), {&u, &d1, &d2, &v}, qe, [&](const PointData &pd) {
    return pd[3].grad.dot(P.op.jacobian_derivative(pd[0].grad, pd[1].grad) * pd[2].grad);
  });
}

void check_goal_regions(const GoalFunctional &I, const Mesh &mesh)
{
  for (const GoalTerm &t : I.terms)
    check_region_alignment(mesh, t.region);
}

double goal_value(const GoalFunctional &I, const DiscreteFunction &u,
                  const DiscreteFunction &q, int qe)
{
  check_goal_regions(I, common_mesh(u));
  const double sup = u.sup_norm();
  return I.constant +
         integrate_density(common_mesh(u), {&u, &q}, qe, [&](const PointData &pd) {
           return I.density_at({pd.x, pd[0].value, pd[1].value, sup}).value;
         });
}

double goal_du(const GoalFunctional &I, const DiscreteFunction &u, const DiscreteFunction &q,
               const DiscreteFunction &du, int qe)
{
  check_goal_regions(I, common_mesh(u));
  const double sup = u.sup_norm();
  return integrate_density(common_mesh(u), {&u, &q, &du}, qe, [&](const PointData &pd) {
    return I.density_at({pd.x, pd[0].value, pd[1].value, sup}).d_du * pd[2].value;
  });
}

double goal_dq(const GoalFunctional &I, const DiscreteFunction &u, const DiscreteFunction &q,
               const DiscreteFunction &dq, int qe)
{
  check_goal_regions(I, common_mesh(u));
  const double sup = u.sup_norm();
  return integrate_density(common_mesh(u), {&u, &q, &dq}, qe, [&](const PointData &pd) {
    return I.density_at({pd.x, pd[0].value, pd[1].value, sup}).d_dq * pd[2].value;
  });
}

Eigen::VectorXd state_residual(const ProblemDefinition &P, const DiscreteFunction &u,
                               const DiscreteFunction &q, int qe)
{
  return assemble_vector(*u.space, {&u, &q}, qe, [&](const PointData &pd) {
    return LinearDensity{-(P.f(pd.x) + pd[1].value), P.op.flux(pd[0].grad)};
  });
}

SparseMatrix state_jacobian(const ProblemDefinition &P, const DiscreteFunction &u, int qe)
{
  return assemble_matrix(*u.space, *u.space, {&u}, qe, [&](const PointData &pd) {
    return BilinearDensity{0., P.op.jacobian(pd[0].grad)};
  });
}

Eigen::VectorXd a_uu_vector(const ProblemDefinition &P, const Space &test,
                            const DiscreteFunction &u, const DiscreteFunction &du,
                            const DiscreteFunction &z, int qe)
{
  return assemble_vector(test, {&u, &du, &z}, qe, [&](const PointData &pd) {
    return LinearDensity{0., P.op.jacobian_derivative(pd[0].grad, pd[1].grad) * pd[2].grad};
  });
}

Eigen::VectorXd mass_vector(const Space &test, const DiscreteFunction &g, int qe)
{
  return assemble_vector(test, {&g}, qe, [](const PointData &pd) {
    return LinearDensity{pd[0].value, Vec2::Zero()};
  });
}

Eigen::VectorXd goal_du_vector(const GoalFunctional &I, const Space &test,
                               const DiscreteFunction &u, const DiscreteFunction &q, int qe)
{
  check_goal_regions(I, test.mesh());
  const double sup = u.sup_norm();
  return assemble_vector(test, {&u, &q}, qe, [&](const PointData &pd) {
    return LinearDensity{I.density_at({pd.x, pd[0].value, pd[1].value, sup}).d_du,
                         Vec2::Zero()};
  });
}

Eigen::VectorXd goal_dq_vector(const GoalFunctional &I, const Space &test,
                               const DiscreteFunction &u, const DiscreteFunction &q, int qe)
{
  check_goal_regions(I, test.mesh());
  const double sup = u.sup_norm();
  return assemble_vector(test, {&u, &q}, qe, [&](const PointData &pd) {
    return LinearDensity{I.density_at({pd.x, pd[0].value, pd[1].value, sup}).d_dq,
                         Vec2::Zero()};
  });
}

SparseMatrix mass_matrix(const Space &space, int qe)
{
  return assemble_matrix(space, space, {}, qe, [](const PointData &) {
    return BilinearDensity{1., Mat2::Zero()};
  });
}

SparseMatrix stiffness_matrix(const Space &space, int qe)
{
  return assemble_matrix(space, space, {}, qe, [](const PointData &) {
    return BilinearDensity{0., Mat2::Identity()};
  });
}

} // namespace dwropt::forms
