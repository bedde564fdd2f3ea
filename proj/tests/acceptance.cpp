// Acceptance suite: runs the reference experiments and the property checks and
// prints one PASS or FAIL line per criterion.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

using namespace dwropt;
using namespace dwropt::testing;
namespace fs = std::filesystem;

namespace
{
struct Verdict
{
  bool        pass = true;
  std::string detail;

  void require(bool ok, const std::string &what)
  {
    if (!ok)
      {
        pass = false;
        detail += (detail.empty() ? "" : "; ") + what;
      }
  }
  void note(const std::string &what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char *f, double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

fs::path g_out = "acceptance_out";

struct Timed
{
  RunResult r;
  double    seconds = 0.;
};

Timed timed_run(Config c, const std::string &dir)
{
  c.output_dir = (g_out / dir).string();
  const auto t0 = std::chrono::steady_clock::now();
  Timed      t{run(c), 0.};
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit_outputs(t.r);
  std::fprintf(stderr, "  %s: %zu levels, %zu dofs, %.1f s\n", dir.c_str(), t.r.levels.size(),
               t.r.levels.back().dofs_total, t.seconds);
  return t;
}

/// Least-squares slope of log|err| against log dofs.
double loglog_slope(const std::vector<double> &dofs, const std::vector<double> &err)
{
  const std::size_t n = dofs.size();
  double            sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i)
    {
      const double x = std::log(dofs[i]), y = std::log(std::abs(err[i]));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Verdict example1(const std::string &preset)
{
  Verdict     v;
  const Timed t = timed_run(preset_config(preset), preset);
  const auto &L = t.r.levels;
  v.require(L.back().dofs_state >= 30000,
            "final state dofs " + std::to_string(L.back().dofs_state) + " < 3e4");
  v.require(L.size() >= 5, "fewer than five levels");
  std::string ieff = "i_eff(last 3)";
  for (std::size_t l = L.size() >= 3 ? L.size() - 3 : 0; l < L.size(); ++l)
    {
      ieff += " " + fmt("%.4f", L[l].eff.i_eff);
      v.require(L[l].eff.defined && std::abs(L[l].eff.i_eff - 1.) <= 0.25,
                "level " + std::to_string(l) + " i_eff out of band");
    }
  v.note(ieff);
  if (L.size() >= 5)
    {
      std::vector<double> d, e;
      for (std::size_t l = L.size() - 5; l < L.size(); ++l)
        {
          d.push_back(double(L[l].dofs_total));
          e.push_back(L[l].ref_error);
        }
      const double s = loglog_slope(d, e);
      v.note("slope " + fmt("%.3f", s));
      v.require(s >= -1.3 && s <= -0.7, "slope outside [-1.3,-0.7]");
    }
  v.note("runtime " + fmt("%.1f s", t.seconds));
  v.require(t.seconds < 120., "runtime over 120 s");
  return v;
}

Verdict example2()
{
  Verdict v;
  struct Case
  {
    double alpha, lo, hi;
    bool   reference;
  };
  for (const Case &k : {Case{1., 0.80, 1.10, true}, Case{10., 0.85, 1.10, true},
                        Case{0.1, 0.30, 1.00, false}})
    {
      Config c          = preset_config("example2_uq");
      c.alpha           = k.alpha;
      const Timed t     = timed_run(c, "example2_alpha_" + fmt("%g", k.alpha));
      const auto &L     = t.r.levels;
      const std::string tag = "alpha=" + fmt("%g", k.alpha) + ": ";
      if (k.reference)
        {
          const auto ref = uq_reference(k.alpha);
          v.require(ref.has_value(), tag + "no reference");
          if (ref)
            {
              const double relerr = std::abs(L.back().goal_values[0] - *ref) / std::abs(*ref);
              v.note(tag + "goal rel err " + fmt("%.2e", relerr) + " at " +
                     std::to_string(L.back().dofs_total) + " dofs");
              v.require(L.back().dofs_total >= 30000, tag + "final dofs < 3e4");
              v.require(relerr <= 0.01, tag + "goal off by more than 1%");
            }
        }
      double mn = 1e300, mx = -1e300;
      for (std::size_t l = 6; l < L.size(); ++l)
        {
          v.require(L[l].eff.defined, tag + "i_eff undefined on level " + std::to_string(l));
          mn = std::min(mn, L[l].eff.i_eff);
          mx = std::max(mx, L[l].eff.i_eff);
          if (L[l].eff.i_eff < k.lo || L[l].eff.i_eff > k.hi)
            v.require(false, tag + "level " + std::to_string(l) + " i_eff " +
                               fmt("%.5f", L[l].eff.i_eff) + " outside [" + fmt("%g", k.lo) +
                               "," + fmt("%g", k.hi) + "]");
        }
      v.require(L.size() > 6, tag + "fewer than seven levels");
      v.note(tag + "i_eff(l>=6) in [" + fmt("%.4f", mn) + "," + fmt("%.4f", mx) + "], " +
             fmt("%.0f s", t.seconds));
      v.require(t.seconds < 600., tag + "runtime over 10 min");
    }
  return v;
}

/// Sum over goals of |value - reference| / |value|.
double multigoal_error(const LevelReport &L, const std::vector<double> &ref)
{
  double e = 0.;
  for (std::size_t i = 0; i < ref.size(); ++i)
    e += std::abs(L.goal_values[i] - ref[i]) / std::abs(L.goal_values[i]);
  return e;
}

std::vector<double> example3_references()
{
  const Config c = preset_config("example3");
  std::vector<double> r;
  for (const auto &g : make_config_goals(c, make_problem(c)))
    r.push_back(*g.reference);
  return r;
}

Verdict example3(const RunResult &A)
{
  Verdict                   v;
  const std::vector<double> ref = example3_references();
  const LevelReport        &F   = A.levels.back();
  v.require(F.dofs_total >= 100000, "final dofs " + std::to_string(F.dofs_total) + " < 1e5");
  std::string devs = "final deviations";
  for (std::size_t i = 0; i < ref.size(); ++i)
    {
      const double d = (F.goal_values[i] - ref[i]) / ref[i];
      devs += " " + F.goal_names[i] + " " + fmt("%+.3f%%", 100. * d);
      v.require(std::abs(d) <= 0.02, F.goal_names[i] + " off by more than 2%");
    }
  v.note(devs);

  for (const auto &L : A.levels)
    for (double x : L.reldev)
      v.require(L.goal_combined >= x, "dominance fails on level " + std::to_string(L.level));

  Config u      = preset_config("example3");
  u.refinement  = RefinementMode::uniform;
  u.max_levels  = 4;
  u.max_total_dofs = 0;
  const Timed U = timed_run(u, "example3_uniform");
  std::vector<double> ud, ue;
  for (const auto &L : U.r.levels)
    {
      ud.push_back(std::log(double(L.dofs_total)));
      ue.push_back(std::log(multigoal_error(L, ref)));
    }
  int compared = 0;
  std::string skipped;
  for (const auto &L : A.levels)
    {
      if (L.level < 4)
        continue;
      const double x = std::log(double(L.dofs_total));
      if (x < ud.front() || x > ud.back())
        {
          skipped += " " + std::to_string(L.level);
          continue;
        }
      std::size_t j = 1;
      while (j + 1 < ud.size() && ud[j] < x)
        ++j;
      const double w   = (x - ud[j - 1]) / (ud[j] - ud[j - 1]);
      const double uni = std::exp(ue[j - 1] + w * (ue[j] - ue[j - 1]));
      const double ad  = multigoal_error(L, ref);
      ++compared;
      v.require(ad <= uni, "level " + std::to_string(L.level) + " adaptive error " +
                             fmt("%.3e", ad) + " above uniform " + fmt("%.3e", uni));
    }
  v.require(compared > 0, "no level inside the uniform DOF range");
  v.note(std::to_string(compared) + " levels compared to uniform");
  if (!skipped.empty())
    v.note("levels outside the uniform DOF range:" + skipped);
  return v;
}

Verdict cost_goal_collapse()
{
  Verdict v;
  double  worst_p = 0., worst_v = 0., worst_y = 0.;
  for (double alpha : {1e-2, 0.1, 1., 10.})
    for (unsigned seed : {11u, 12u, 13u})
      {
        LevelSolve S(make_poisson_control(alpha), random_refined(unit_mesh(0.5), 2, seed),
                     seed % 2);
        const auto   a  = adjoint_chain(*S.low, S.P.cost(), S.L);
        const double zn = l2_norm(S.L.z);
        const double sp = l2_norm(a.p) / std::max(1., l2_norm(S.L.q));
        const double sv = l2_norm(a.v) / zn;
        const double sy = l2_distance(a.y, S.L.z) / zn;
        worst_p = std::max(worst_p, sp);
        worst_v = std::max(worst_v, sv);
        worst_y = std::max(worst_y, sy);
      }
  v.require(worst_p <= 1e-9, "|p| too large");
  v.require(worst_v <= 1e-9, "|v| too large");
  v.require(worst_y <= 1e-9, "|y-z| too large");
  v.note("max |p| " + fmt("%.1e", worst_p) + ", |v|/|z| " + fmt("%.1e", worst_v) +
         ", |y-z|/|z| " + fmt("%.1e", worst_y) + " over 12 cases");
  return v;
}

DiscreteFunction along(const DiscreteFunction &x, double t, const DiscreteFunction &d)
{
  return {x.space, x.values + t * d.values};
}

Verdict derivative_oracles()
{
  Verdict      v;
  std::mt19937 rng(2024);
  double       worst_g = 0., worst_h = 0., worst_f = 0.;
  struct Instance
  {
    ProblemDefinition           P;
    std::shared_ptr<const Mesh> mesh;
    std::string                 preset;
  };
  const auto holed = [](int n, unsigned s) {
    return random_refined(share(Mesh::build_initial(Domain::holed_channel(), 0.5)), n, s);
  };
  std::vector<Instance> cases{
    {make_poisson_control(0.01), unit_mesh(0.5), "example1_l1"},
    {make_poisson_control(0.01), random_refined(unit_mesh(0.5), 2, 5), "example1_cost"},
    {make_plaplace_control(1., 4., 1.), holed(0, 0), "example2_uq"},
    {make_plaplace_control(0.01, 4., 1.), holed(1, 6), "example2_uq"}};
  for (const Instance &I : cases)
    {
      const auto V = make_space(I.mesh, Family::continuous, 1, true);
      const auto Q = make_space(I.mesh, Family::discontinuous, 1);
      ReducedModel M(I.P, V, Q);
      const auto cost = [&](const DiscreteFunction &q) { return M.cost(M.make_triple(q)); };
      for (int s = 0; s < 5; ++s)
        {
          const auto q  = random_function(Q, rng, I.P.linear() ? 50. : 5.);
          const auto dq = random_function(Q, rng);
          const auto t  = M.make_triple(q);
          const double an = M.gradient(t).dot(dq.values);
          const double h1 = 1e-3, h2 = 5e-4;
          const double f1 = (cost(along(q, h1, dq)) - cost(along(q, -h1, dq))) / (2 * h1);
          const double f2 = (cost(along(q, h2, dq)) - cost(along(q, -h2, dq))) / (2 * h2);
          const double fd = (4. * f2 - f1) / 3.;
          worst_g = std::max(worst_g, std::abs(an - fd) / std::max(1., std::abs(an)));

          const double h = 1e-4;
          const Eigen::VectorXd fdH =
            (M.gradient(M.make_triple(along(q, h, dq))) - M.gradient(M.make_triple(along(q, -h, dq)))) /
            (2 * h);
          const Eigen::VectorXd Hd = M.hessvec(t, dq.values);
          worst_h = std::max(worst_h, (fdH - Hd).norm() / std::max(1e-12, Hd.norm()));

          // Forms: first and second derivatives against central differences.
          const auto u  = random_function(V, rng);
          const auto du = random_function(V, rng), d2 = random_function(V, rng);
          const auto w  = random_function(V, rng);
          const double e = 1e-5;
          auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1., std::abs(b)); };
          const double au = (forms::a(I.P, along(u, e, du), q, w) - forms::a(I.P, along(u, -e, du), q, w)) / (2 * e);
          const double aq = (forms::a(I.P, u, along(q, e, dq), w) - forms::a(I.P, u, along(q, -e, dq), w)) / (2 * e);
          const double auu = (forms::a_u(I.P, along(u, e, d2), du, w) - forms::a_u(I.P, along(u, -e, d2), du, w)) / (2 * e);
          worst_f = std::max({worst_f, rel(au, forms::a_u(I.P, u, du, w)), rel(aq, forms::a_q(dq, w)),
                              rel(auu, forms::a_uu(I.P, u, d2, du, w))});
          std::vector<GoalFunctional> goals = make_goals(I.preset, I.P);
          goals.push_back(I.P.cost());
          for (const auto &g : goals)
            {
              const double gu = (forms::goal_value(g, along(u, e, du), q) - forms::goal_value(g, along(u, -e, du), q)) / (2 * e);
              const double gq = (forms::goal_value(g, u, along(q, e, dq)) - forms::goal_value(g, u, along(q, -e, dq))) / (2 * e);
              worst_f = std::max({worst_f, rel(gu, forms::goal_du(g, u, q, du)), rel(gq, forms::goal_dq(g, u, q, dq))});
            }
        }
    }
  v.require(worst_g <= 1e-6, "gradient mismatch");
  v.require(worst_h <= 1e-4, "hessvec mismatch");
  v.require(worst_f <= 1e-5, "form derivative mismatch");
  v.note("gradient " + fmt("%.1e", worst_g) + ", hessvec " + fmt("%.1e", worst_h) + ", forms " +
         fmt("%.1e", worst_f) + " (4 setups x 5 controls)");
  return v;
}

Verdict estimator_identities(const std::vector<const RunResult *> &runs)
{
  Verdict v;
  double  half = 0., pu = 0., scale = 0., ieff = 0., etak = 0.;
  int     levels = 0;
  for (const RunResult *r : runs)
    for (const LevelReport &L : r->levels)
      {
        ++levels;
        const double six = L.rho_u + L.rho_q + L.rho_z + L.rho_v + L.rho_p + L.rho_y;
        half = std::max(half, std::abs(L.eta_h2 - 0.5 * six) / std::abs(L.eta_h2));
        if (L.eff.defined)
          ieff = std::max(ieff, std::abs(L.eff.i_eff - 0.5 * (L.eff.i_eff_p + L.eff.i_eff_a)) /
                                  std::abs(L.eff.i_eff));
      }
  const auto holed = share(Mesh::build_initial(Domain::holed_channel(), 0.5));
  struct Case
  {
    ProblemDefinition           P;
    std::shared_ptr<const Mesh> mesh;
    std::string                 preset;
    int                         qdeg;
  };
  std::vector<Case> cases{
    {make_poisson_control(0.01), random_refined(unit_mesh(0.5), 2, 71), "example1_l1", 0},
    {make_poisson_control(0.01), random_refined(unit_mesh(0.5), 3, 72), "example1_cost", 1},
    {make_plaplace_control(1., 4., 1.), random_refined(holed, 1, 73), "example2_uq", 0},
    {make_plaplace_control(0.01, 4., 1.), share(Mesh::build_initial(Domain::holed_channel(), 0.25)), "example3", 0}};
  for (const Case &c : cases)
    {
      LevelSolve S(c.P, c.mesh, c.qdeg);
      const auto I = make_goals(c.preset, c.P).back();
      const auto e = S.estimate(I);
      const auto &b = e.b;
      const double six = b.rho_u + b.rho_q + b.rho_z + b.rho_v + b.rho_p + b.rho_y;
      half = std::max(half, std::abs(b.eta_h2 - 0.5 * six) / std::abs(b.eta_h2));
      pu   = std::max(pu, std::abs(b.vertex.sum() - b.eta_h2) / std::abs(b.eta_h2));
      for (double k : {2., 0.37})
        {
          const auto s = S.estimate(I.scaled(k)).b;
          for (auto [x, y] : {std::pair{s.rho_u, b.rho_u}, {s.rho_q, b.rho_q}, {s.rho_z, b.rho_z},
                              {s.rho_v, b.rho_v}, {s.rho_p, b.rho_p}, {s.rho_y, b.rho_y},
                              {s.eta_h2, b.eta_h2}})
            scale = std::max(scale, std::abs(x - k * y) / (std::abs(k * y) + std::abs(k * b.eta_h2)));
        }
      const auto eff = effectivities(b, 0.7 * b.eta_h2 + 1e-3);
      ieff = std::max(ieff, std::abs(eff.i_eff - 0.5 * (eff.i_eff_p + eff.i_eff_a)) / std::abs(eff.i_eff));
      etak = std::max(etak, std::abs(b.eta_k) / std::abs(b.eta_h2));
    }
  v.require(half <= 1e-13, "half-sum identity");
  v.require(pu <= 1e-10, "partition of unity sum");
  v.require(scale <= 1e-12, "goal scaling linearity");
  v.require(ieff <= 4e-16, "i_eff average identity");
  v.require(etak <= 1e-8, "eta_k at converged iterates");
  v.note("half-sum " + fmt("%.1e", half) + ", PU " + fmt("%.1e", pu) + ", scaling " +
         fmt("%.1e", scale) + ", i_eff " + fmt("%.1e", ieff) + ", |eta_k/eta_h2| " +
         fmt("%.1e", etak) + " (" + std::to_string(levels) + " run levels, 4 direct cases)");
  return v;
}

Verdict stopping_rules(const RunResult &A)
{
  Verdict v;
  Config  c   = preset_config("example3");
  c.stopping  = StoppingMode::standard;
  const Timed S = timed_run(c, "example3_standard");
  const std::size_t n = std::min(A.levels.size(), S.r.levels.size());
  double      worst = 0.;
  std::string its_a = "its adaptive", its_s = "its standard";
  for (std::size_t l = 0; l < n; ++l)
    {
      const LevelReport &a = A.levels[l], &s = S.r.levels[l];
      its_a += " " + std::to_string(a.newton_its_low);
      its_s += " " + std::to_string(s.newton_its_low);
      if (a.newton_its_low > s.newton_its_low)
        v.require(false, "level " + std::to_string(l) + ": adaptive " +
                           std::to_string(a.newton_its_low) + " > standard " +
                           std::to_string(s.newton_its_low));
      if (l >= 1 && a.newton_its_low > 3)
        v.require(false, "level " + std::to_string(l) + ": adaptive count above 3");
      if (a.eff.defined && s.eff.defined)
        worst = std::max(worst, std::abs(a.eff.i_eff_c - s.eff.i_eff_c));
    }
  v.require(worst <= 0.05, "corrected effectivities differ by " + fmt("%.3f", worst));
  v.note(its_a + "; " + its_s + "; max |i_eff_c diff| " + fmt("%.4f", worst));
  return v;
}

void report(int id, const std::string &name, const Verdict &v, int &failures)
{
  std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str());
  std::fflush(stdout);
  failures += !v.pass;
}

template <class F>
Verdict guarded(F &&f)
{
  try
    {
      return f();
    }
  catch (const std::exception &e)
    {
      return Verdict{false, std::string("exception: ") + e.what()};
    }
}
} // namespace

int main(int argc, char **argv)
{
  for (int i = 1; i < argc; ++i)
    {
      const std::string a = argv[i];
      if (a == "--out" && i + 1 < argc)
        g_out = argv[++i];
      else
        {
          std::fprintf(stderr, "usage: acceptance [--out dir]\n");
          return 2;
        }
    }
  fs::create_directories(g_out);

  int failures = 0;
  report(1, "example 1, cost goal", guarded([] { return example1("example1_cost"); }), failures);
  report(2, "example 1, L1 goal", guarded([] { return example1("example1_l1"); }), failures);

  report(3, "example 2, alpha sweep", guarded([] { return example2(); }), failures);

  std::optional<Timed> ex3;
  try
    {
      ex3 = timed_run(preset_config("example3"), "example3");
    }
  catch (const std::exception &e)
    {
      std::fprintf(stderr, "example3 run failed: %s\n", e.what());
    }
  report(4, "example 3, five goals",
         guarded([&] { return ex3 ? example3(ex3->r) : Verdict{false, "example 3 run failed"}; }),
         failures);
  report(5, "cost goal adjoint collapse", guarded([] { return cost_goal_collapse(); }), failures);
  report(6, "derivative oracles", guarded([] { return derivative_oracles(); }), failures);
  report(7, "estimator identities", guarded([&] {
           std::vector<const RunResult *> runs;
           if (ex3)
             runs.push_back(&ex3->r);
           return estimator_identities(runs);
         }),
         failures);
  report(8, "stopping rule comparison",
         guarded([&] {
           return ex3 ? stopping_rules(ex3->r) : Verdict{false, "example 3 run failed"};
         }),
         failures);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
