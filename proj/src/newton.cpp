#include <dwropt/newton.hpp>

#include <cmath>
#include <limits>

namespace dwropt
{
namespace
{
struct Step
{
  KKTTriple next;
  double    size = 0.;
  int       cg   = 0;
};

/// Newton direction from CG, then Armijo backtracking on the reduced cost.
Step newton_step(const ReducedModel &model, const KKTTriple &t, const Eigen::VectorXd &g)
{
  const CGResult        cg    = model.solve_reduced_system(t, -g);
  const Eigen::VectorXd &dq   = cg.x;
  const double          slope = g.dot(dq);
  if (!(slope < 0.))
    throw SolverError("Newton direction is not a descent direction");
  const double j     = model.cost(t);
  const double slack = 8. * std::numeric_limits<double>::epsilon() * std::abs(j);
  // Below the rounding level of j the cost cannot judge the step; the full
  // Newton step is taken.
  if (-slope <= 64. * std::numeric_limits<double>::epsilon() * std::abs(j))
    return {model.make_triple(DiscreteFunction(t.q.space, t.q.values + dq), &t.u), 1.,
            cg.iterations};
  double size = 1.;
  for (int b = 0; b <= 30; ++b, size *= 0.5)
    {
      DiscreteFunction qn(t.q.space, t.q.values + size * dq);
      KKTTriple        tn = model.make_triple(qn, &t.u);
      if (model.cost(tn) <= j + 1e-4 * size * slope + slack)
        return {std::move(tn), size, cg.iterations};
    }
  throw SolverError("Armijo line search failed");
}
} // namespace

NewtonResult newton_standard(const ReducedModel &model, const DiscreteFunction &q0,
                             double tol_abs, double tol_rel, int max_it)
{
  NewtonResult res;
  res.triple = model.make_triple(q0);
  double g0  = -1.;
  for (;;)
    {
      const Eigen::VectorXd g  = model.gradient(res.triple);
      const double          gn = g.norm();
      if (g0 < 0.)
        g0 = gn;
      res.log.residuals.push_back(gn);
      res.log.gradient_norms.push_back(gn);
      if (gn <= tol_abs)
        {
          res.log.stop_reason = "absolute";
          break;
        }
      if (gn <= tol_rel * g0)
        {
          res.log.stop_reason = "relative";
          break;
        }
      if (res.log.iterations >= max_it)
        throw SolverError("reduced Newton did not converge in " + std::to_string(max_it) +
                          " iterations");
      Step s     = newton_step(model, res.triple, g);
      res.triple = std::move(s.next);
      res.log.step_sizes.push_back(s.size);
      res.log.cg_iterations.push_back(s.cg);
      ++res.log.iterations;
    }
  return res;
}

NewtonResult newton_reduced_adaptive(const ReducedModel &model, const GoalAtIterate &goal,
                                     const DiscreteFunction &q0, double gamma, double eta_prev,
                                     int max_it)
{
  if (!(gamma > 0.) || !(eta_prev > 0.))
    throw std::invalid_argument("adaptive stopping needs gamma > 0 and eta_prev > 0");
  NewtonResult res;
  res.triple      = model.make_triple(q0);
  const double bound = gamma * eta_prev;
  double       g0    = -1.;
  for (;;)
    {
      const GoalFunctional  I  = goal(res.triple);
      DiscreteFunction      p  = solve_reduced_adjoint(model, I, res.triple);
      const Eigen::VectorXd g  = model.gradient(res.triple);
      const double          gn = g.norm();
      const double          r  = std::abs(g.dot(p.values));
      if (g0 < 0.)
        g0 = gn;
      res.log.residuals.push_back(r);
      res.log.gradient_norms.push_back(gn);
      res.p = std::move(p);
      if (r <= bound)
        {
          res.log.stop_reason = "adaptive";
          break;
        }
      // The guard cannot be met once the gradient sits at rounding level.
      if (gn == 0. || (res.log.iterations > 0 && gn <= 1e-13 * g0))
        {
          res.log.stop_reason = "stagnation";
          break;
        }
      if (res.log.iterations >= max_it)
        throw SolverError("adaptive reduced Newton did not converge in " +
                          std::to_string(max_it) + " iterations");
      Step s     = newton_step(model, res.triple, g);
      res.triple = std::move(s.next);
      res.log.step_sizes.push_back(s.size);
      res.log.cg_iterations.push_back(s.cg);
      ++res.log.iterations;
    }
  return res;
}

} // namespace dwropt
