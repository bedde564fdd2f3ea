#pragma once

#include <dwropt/assembly.hpp>
#include <dwropt/problem.hpp>

namespace dwropt
{
/// Weak forms of the state operator a(u,q)(v) = int flux(grad u).grad v - (f+q) v
/// and of goal functionals, as scalars for given arguments and as assembled
/// free-DOF vectors and matrices.
namespace forms
{
/// a(u,q)(v)
double a(const ProblemDefinition &P, const DiscreteFunction &u, const DiscreteFunction &q,
         const DiscreteFunction &v, int quad_extra = 1);
/// a_u(u)(du, v)
double a_u(const ProblemDefinition &P, const DiscreteFunction &u, const DiscreteFunction &du,
           const DiscreteFunction &v, int quad_extra = 1);
/// a_q(dq, v) = -int dq v; independent of u and q.
double a_q(const DiscreteFunction &dq, const DiscreteFunction &v, int quad_extra = 1);
/// a_uu(u)(d1, d2, v)
double a_uu(const ProblemDefinition &P, const DiscreteFunction &u, const DiscreteFunction &d1,
            const DiscreteFunction &d2, const DiscreteFunction &v, int quad_extra = 1);

/// I(u,q)
double goal_value(const GoalFunctional &I, const DiscreteFunction &u,
                  const DiscreteFunction &q, int quad_extra = 1);
/// I_u(u,q)(du)
double goal_du(const GoalFunctional &I, const DiscreteFunction &u, const DiscreteFunction &q,
               const DiscreteFunction &du, int quad_extra = 1);
/// I_q(u,q)(dq)
double goal_dq(const GoalFunctional &I, const DiscreteFunction &u, const DiscreteFunction &q,
               const DiscreteFunction &dq, int quad_extra = 1);

/// Free vector r_i = a(u,q)(phi_i) on the space of u.
Eigen::VectorXd state_residual(const ProblemDefinition &P, const DiscreteFunction &u,
                               const DiscreteFunction &q, int quad_extra = 1);
/// K_ij = a_u(u)(phi_j, phi_i) on the space of u.
SparseMatrix state_jacobian(const ProblemDefinition &P, const DiscreteFunction &u,
                            int quad_extra = 1);
/// r_i = a_uu(u)(du, phi_i)(z) on a test space.
Eigen::VectorXd a_uu_vector(const ProblemDefinition &P, const Space &test,
                            const DiscreteFunction &u, const DiscreteFunction &du,
                            const DiscreteFunction &z, int quad_extra = 1);
/// r_i = int g phi_i.
Eigen::VectorXd mass_vector(const Space &test, const DiscreteFunction &g, int quad_extra = 1);
/// r_i = I_u(u,q)(phi_i) on a state-like test space.
Eigen::VectorXd goal_du_vector(const GoalFunctional &I, const Space &test,
                               const DiscreteFunction &u, const DiscreteFunction &q,
                               int quad_extra = 1);
/// r_i = I_q(u,q)(psi_i) on a control-like test space.
Eigen::VectorXd goal_dq_vector(const GoalFunctional &I, const Space &test,
                               const DiscreteFunction &u, const DiscreteFunction &q,
                               int quad_extra = 1);
/// Plain mass matrix of a space.
SparseMatrix mass_matrix(const Space &space, int quad_extra = 1);
/// Plain stiffness matrix of a space.
SparseMatrix stiffness_matrix(const Space &space, int quad_extra = 1);

/// Checks that every goal region aligns with the cells of a mesh.
void check_goal_regions(const GoalFunctional &I, const Mesh &mesh);

} // namespace forms
} // namespace dwropt
