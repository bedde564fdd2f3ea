#include <dwropt/driver.hpp>

#include <cmath>

namespace dwropt
{
namespace
{
struct LevelSpaces
{
  SpacePtr V, Q, V2, Q2;
};

LevelSpaces make_spaces(const Config &c, const std::shared_ptr<const Mesh> &mesh)
{
  const int bump = c.enriched_degree - c.degree;
  return {make_space(mesh, Family::continuous, c.degree, true),
          make_space(mesh, Family::discontinuous, c.control_degree),
          make_space(mesh, Family::continuous, c.enriched_degree, true),
          make_space(mesh, Family::discontinuous, c.control_degree + bump)};
}

SolverSettings settings_of(const Config &c)
{
  SolverSettings s;
  s.krylov_tol = c.krylov_tol;
  s.quad_extra = c.quad_extra;
  return s;
}

std::vector<double> evaluate(const std::vector<GoalFunctional> &goals, const KKTTriple &t, int qe)
{
  std::vector<double> v;
  for (const auto &g : goals)
    v.push_back(forms::goal_value(g, t.u, t.q, qe));
  return v;
}

/// Standard Newton with tight tolerances for the enriched solutions.
NewtonResult solve_enriched(const Config &c, const ReducedModel &model, const DiscreteFunction &q0)
{
  return newton_standard(model, q0, 1e-2 * c.enriched_newton_tol, c.enriched_newton_tol);
}

bool multigoal(const std::vector<GoalFunctional> &goals)
{
  return goals.size() > 1;
}
} // namespace

RunResult run(const Config &c, const LevelCallback &on_level)
{
  c.validate();
  const ProblemDefinition           P     = make_problem(c);
  const std::vector<GoalFunctional> goals = make_config_goals(c, P);
  const int                         qe    = c.quad_extra;
  const bool                        multi = multigoal(goals);

  RunResult res;
  res.config = c;
  auto mesh  = std::make_shared<const Mesh>(Mesh::build_initial(P.domain, P.initial_cell_size));

  DiscreteFunction q_low_prev, q_enr_prev;
  double           eta_prev = c.eta_initial;
  for (int level = 0;; ++level)
    {
      LevelReport rep;
      rep.level = level;
      try
        {
          for (const auto &g : goals)
            forms::check_goal_regions(g, *mesh);
          const LevelSpaces S = make_spaces(c, mesh);
          const ReducedModel low(P, S.V, S.Q, settings_of(c));
          const ReducedModel enr(P, S.V2, S.Q2, settings_of(c));

          // Enriched optimum, warm-started from the previous level.
          const DiscreteFunction q2_0 =
            q_enr_prev.space ? transfer(q_enr_prev, S.Q2) : enr.zero_control();
          NewtonResult E            = solve_enriched(c, enr, q2_0);
          rep.newton_its_enriched   = E.log.iterations;
          const std::vector<double> r = evaluate(goals, E.triple, qe);

          // Low-order optimum. With several goals, the goal of the stopping
          // rule is rebuilt from the values at each iterate.
          GoalAtIterate builder = [&](const KKTTriple &t) -> GoalFunctional {
            if (!multi)
              return goals[0];
            const std::vector<double> m = evaluate(goals, t, qe);
            return build_combined(goals, r, m, m, true).goal;
          };
          // On the first level the enriched control seeds the iteration;
          // from zero, goals that vanish to second order at u = q = 0 would
          // meet the adaptive guard before any step.
          const DiscreteFunction q0 =
            transfer(q_low_prev.space ? q_low_prev : E.triple.q, S.Q);
          NewtonResult L = c.stopping == StoppingMode::adaptive ?
                             newton_reduced_adaptive(low, builder, q0, c.gamma, eta_prev) :
                             newton_standard(low, q0, c.newton_tol_abs, c.newton_tol_rel);
          rep.newton_its_low = L.log.iterations;
          rep.stop_reason    = L.log.stop_reason;

          // Goal frozen at the final low-order iterate.
          const std::vector<double> m = evaluate(goals, L.triple, qe);
          GoalFunctional            I;
          for (const auto &g : goals)
            rep.goal_names.push_back(g.name);
          rep.goal_values     = m;
          rep.enriched_values = r;
          bool have_refs      = true;
          for (const auto &g : goals)
            have_refs = have_refs && g.reference.has_value();
          if (multi)
            {
              const CombinedGoal C = build_combined(goals, r, m, m, true);
              I                    = C.goal;
              rep.goal_combined    = C.freeze_value();
              rep.reldev           = C.relative_deviations();
              rep.weight_fallback  = C.fallback_used;
              if (have_refs)
                {
                  double e = 0.;
                  for (std::size_t l = 0; l < goals.size(); ++l)
                    e += C.signs[l] * (m[l] - *goals[l].reference) / std::abs(C.weights[l]);
                  rep.ref_error = e;
                }
            }
          else
            {
              I                 = goals[0];
              rep.goal_combined = m[0];
              if (have_refs)
                rep.ref_error = *goals[0].reference - m[0];
              if (m[0] != 0.)
                rep.reldev = {std::abs(r[0] - m[0]) / std::abs(m[0])};
              else
                {
                  rep.reldev          = {std::abs(r[0] - m[0])};
                  rep.weight_fallback = true;
                }
            }

          // Goal adjoints on both discretizations and the estimate.
          const AdjointTriple Ea = adjoint_chain(enr, I, E.triple);
          const AdjointTriple La = adjoint_chain(low, I, L.triple);
          EstimatorInput      in{&P, &I, &L.triple, &La, &E.triple, &Ea, qe};
          ErrorBreakdown      b = compute_eta_h2(in);
          b.eta_k               = compute_eta_k(low, L.triple, La.p);
          localize_pu(in, b);
          b.eff = effectivities(b, rep.ref_error);

          rep.cells         = mesh->n_active();
          rep.dofs_state    = S.V->n_dofs();
          rep.dofs_control  = S.Q->n_dofs();
          rep.dofs_total    = rep.dofs_state + rep.dofs_control;
          rep.dofs_enriched = S.V2->n_dofs() + S.Q2->n_dofs();
          rep.eta_h2        = b.eta_h2;
          rep.eta_k         = b.eta_k;
          rep.rho_u         = b.rho_u;
          rep.rho_q         = b.rho_q;
          rep.rho_z         = b.rho_z;
          rep.rho_v         = b.rho_v;
          rep.rho_p         = b.rho_p;
          rep.rho_y         = b.rho_y;
          rep.eff           = b.eff;

          q_low_prev = L.triple.q;
          q_enr_prev = E.triple.q;
          eta_prev   = std::abs(b.eta_h2);

          if (std::abs(b.eta_h2) < c.tol_dis)
            res.termination = "tol_dis";
          else if (level + 1 >= c.max_levels)
            res.termination = "max_levels";
          else if (c.max_state_dofs && rep.dofs_state >= c.max_state_dofs)
            res.termination = "max_state_dofs";
          else if (c.max_total_dofs && rep.dofs_total >= c.max_total_dofs)
            res.termination = "max_total_dofs";

          if (res.termination.empty())
            {
              std::vector<std::size_t> pos;
              if (c.refinement == RefinementMode::adaptive)
                pos = dorfler_mark(b.cells, c.theta);
              else
                for (std::size_t a = 0; a < mesh->n_active(); ++a)
                  pos.push_back(a);
              const CellSet set = mesh->cell_set_from_active(pos);
              rep.marked        = set.cells;
              Mesh next         = mesh->refine(set);
              res.levels.push_back(std::move(rep));
              res.final_mesh = mesh;
              mesh           = std::make_shared<const Mesh>(std::move(next));
            }
          else
            {
              res.levels.push_back(std::move(rep));
              res.final_mesh = mesh;
            }
        }
      catch (const ConfigError &)
        {
          throw;
        }
      catch (const std::exception &e)
        {
          res.final_mesh = mesh;
          res.termination = "failure";
          throw DriverError(level, e.what(), std::move(res));
        }
      if (on_level)
        on_level(res);
      if (!res.termination.empty())
        return res;
    }
}

RunResult run_adaptive(Config c, const LevelCallback &on_level)
{
  c.refinement = RefinementMode::adaptive;
  return run(c, on_level);
}

RunResult run_uniform(Config c, const LevelCallback &on_level)
{
  c.refinement = RefinementMode::uniform;
  return run(c, on_level);
}

std::vector<double> self_reference(const Config &c, const Mesh &mesh)
{
  const ProblemDefinition           P     = make_problem(c);
  const std::vector<GoalFunctional> goals = make_config_goals(c, P);
  auto fine = std::make_shared<const Mesh>(mesh.refine_all().refine_all());
  const LevelSpaces  S = make_spaces(c, fine);
  const ReducedModel enr(P, S.V2, S.Q2, settings_of(c));
  const NewtonResult E = solve_enriched(c, enr, enr.zero_control());
  return evaluate(goals, E.triple, c.quad_extra);
}

StoppingComparison compare_stopping(const Config &c)
{
  Config a = c, s = c;
  a.stopping   = StoppingMode::adaptive;
  s.stopping   = StoppingMode::standard;
  a.output_dir = c.output_dir + "/adaptive";
  s.output_dir = c.output_dir + "/standard";
  return {run(a), run(s)};
}

} // namespace dwropt
