#include "support.hpp"

#include <gtest/gtest.h>

using namespace dwropt;
using namespace dwropt::testing;

namespace
{
DiscreteFunction axpy(const DiscreteFunction &x, double h, const DiscreteFunction &d)
{
  return {x.space, x.values + h * d.values};
}

/// Central difference with the larger of two step sizes that agree, as a
/// cheap Richardson guard.
template <class F>
double central(F &&f, double h)
{
  return (f(h) - f(-h)) / (2. * h);
}

struct Fixture
{
  ProblemDefinition           P;
  std::shared_ptr<const Mesh> mesh;
  SpacePtr                    V, Q;
};

Fixture poisson_fixture()
{
  Fixture F{make_poisson_control(0.01), random_refined(unit_mesh(0.5), 2, 21), {}, {}};
  F.V = make_space(F.mesh, Family::continuous, 1, true);
  F.Q = make_space(F.mesh, Family::discontinuous, 1);
  return F;
}

Fixture plaplace_fixture(double p = 4.)
{
  Fixture F{make_plaplace_control(1., p, 1.), nullptr, {}, {}};
  F.mesh = random_refined(share(Mesh::build_initial(F.P.domain, 0.5)), 1, 22);
  F.V    = make_space(F.mesh, Family::continuous, 1, true);
  F.Q    = make_space(F.mesh, Family::discontinuous, 1);
  return F;
}

double rel(double a, double b)
{
  return std::abs(a - b) / std::max(1., std::abs(b));
}
} // namespace

TEST(Poisson, ExactCostValue)
{
  const auto P = make_poisson_control(0.01);
  const auto g = make_goals("example1_cost", P);
  ASSERT_EQ(g.size(), 1u);
  ASSERT_TRUE(g[0].reference);
  EXPECT_NEAR(*g[0].reference, 316.903409, 1e-6);
  EXPECT_NEAR(*g[0].reference, (25. * std::pow(pi, 4) + 100.) / 8., 1e-12);
}

TEST(Poisson, CostOfInterpolatedOptimumConvergesToExactValue)
{
  const auto   P   = make_poisson_control(0.01);
  const double ref = *make_goals("example1_cost", P)[0].reference;
  double       prev = INFINITY;
  auto         m    = unit_mesh(0.125);
  for (int k = 0; k < 3; ++k, m = share(m->refine_all()))
    {
      auto       V = make_space(m, Family::continuous, 2, true);
      auto       Q = make_space(m, Family::discontinuous, 2);
      const auto u = interpolate(V, P.u_exact);
      const auto q = interpolate(Q, P.q_exact);
      const double err = std::abs(forms::goal_value(P.cost(), u, q, 2) - ref);
      EXPECT_LT(err, prev / 8.);
      prev = err;
    }
  EXPECT_LT(prev / ref, 1e-5);
}

TEST(Poisson, ExactOptimumSolvesTheStateEquation)
{
  // The residual functional tested with a fixed smooth function vanishes at
  // the rate of the interpolation error.
  const auto P = make_poisson_control(0.01);
  double     prev = INFINITY, first = 0.;
  auto       m = unit_mesh(0.125);
  for (int k = 0; k < 3; ++k, m = share(m->refine_all()))
    {
      auto         V = make_space(m, Family::continuous, 1, true);
      auto         Q = make_space(m, Family::discontinuous, 1);
      const auto   u = interpolate(V, P.u_exact);
      const auto   q = interpolate(Q, P.q_exact);
      const auto   v = interpolate(V, [](const Vec2 &x) {
        return x.x() * (1. - x.x()) * x.y() * (1. - x.y()) * std::exp(x.x() + 2. * x.y());
      });
      const double r = std::abs(forms::a(P, u, q, v, 2));
      EXPECT_LT(r, prev / 3.) << k;
      prev  = r;
      first = k == 0 ? r : first;
    }
  EXPECT_LT(prev, first / 12.);
}

TEST(Poisson, SecondDerivativeVanishes)
{
  auto         F = poisson_fixture();
  std::mt19937 rng(1);
  for (int k = 0; k < 5; ++k)
    EXPECT_EQ(forms::a_uu(F.P, random_function(F.V, rng), random_function(F.V, rng),
                          random_function(F.V, rng), random_function(F.V, rng)),
              0.);
}

TEST(Problem, InvalidParametersAreRejected)
{
  EXPECT_THROW(make_poisson_control(0.), ProblemError);
  EXPECT_THROW(make_poisson_control(-1.), ProblemError);
  EXPECT_THROW(make_plaplace_control(1., 1., 1.), ProblemError);
  EXPECT_THROW(make_plaplace_control(1., 4., 0.), ProblemError);
  EXPECT_THROW(make_plaplace_control(0., 4., 1.), ProblemError);
  EXPECT_THROW(make_goals("nope", make_poisson_control(1.)), ProblemError);
}

TEST(PLaplace, TrivialResidualAtZero)
{
  auto         F = plaplace_fixture();
  std::mt19937 rng(2);
  const DiscreteFunction u(F.V), q(F.Q);
  for (int k = 0; k < 3; ++k)
    EXPECT_EQ(forms::a(F.P, u, q, random_function(F.V, rng)), 0.);
}

class FormConsistency : public ::testing::TestWithParam<int>
{};

TEST_P(FormConsistency, DerivativesMatchCentralDifferences)
{
  std::mt19937 rng(100 + GetParam());
  for (const Fixture &F : {poisson_fixture(), plaplace_fixture(4.), plaplace_fixture(3.)})
    for (double h : {1e-4, 1e-5})
      {
        const auto u  = random_function(F.V, rng);
        const auto q  = random_function(F.Q, rng);
        const auto du = random_function(F.V, rng);
        const auto d2 = random_function(F.V, rng);
        const auto dq = random_function(F.Q, rng);
        const auto v  = random_function(F.V, rng);
        const double tol = std::max(1e-5, 30. * h * h * 10.);

        const double fd_u = central([&](double t) { return forms::a(F.P, axpy(u, t, du), q, v); }, h);
        const double an_u = forms::a_u(F.P, u, du, v);
        EXPECT_LE(rel(fd_u, an_u), tol) << F.P.name;

        const double fd_q = central([&](double t) { return forms::a(F.P, u, axpy(q, t, dq), v); }, h);
        EXPECT_LE(rel(fd_q, forms::a_q(dq, v)), tol) << F.P.name;

        const double fd_uu =
          central([&](double t) { return forms::a_u(F.P, axpy(u, t, d2), du, v); }, h);
        EXPECT_LE(rel(fd_uu, forms::a_uu(F.P, u, du, d2, v)), tol) << F.P.name;

        // Symmetries.
        EXPECT_LE(rel(forms::a_u(F.P, u, du, v), forms::a_u(F.P, u, v, du)), 1e-12);
        EXPECT_LE(rel(forms::a_uu(F.P, u, du, d2, v), forms::a_uu(F.P, u, d2, du, v)), 1e-12);

        // The control enters linearly: a_q does not depend on u or q.
        const double lin = forms::a(F.P, u, axpy(q, 1., dq), v) - forms::a(F.P, u, q, v);
        EXPECT_LE(rel(lin, forms::a_q(dq, v)), 1e-11);
      }
}

TEST_P(FormConsistency, GoalDerivativesMatchCentralDifferences)
{
  std::mt19937 rng(200 + GetParam());
  struct Case
  {
    Fixture     F;
    std::string preset;
  };
  Fixture e3 = plaplace_fixture();
  e3.P.alpha = 0.01;
  e3.mesh    = random_refined(share(Mesh::build_initial(e3.P.domain, 0.25)), 1, 23);
  e3.V       = make_space(e3.mesh, Family::continuous, 1, true);
  e3.Q       = make_space(e3.mesh, Family::discontinuous, 1);
  for (const Case &c : {Case{poisson_fixture(), "example1_cost"}, Case{plaplace_fixture(), "example2_uq"},
                        Case{e3, "example3"}})
    {
      std::vector<GoalFunctional> goals = make_goals(c.preset, c.F.P);
      goals.push_back(c.F.P.cost());
      for (const auto &g : goals)
        for (double h : {1e-4, 1e-5})
          {
            const auto u  = random_function(c.F.V, rng);
            const auto q  = random_function(c.F.Q, rng);
            const auto du = random_function(c.F.V, rng);
            const auto dq = random_function(c.F.Q, rng);
            const double tol = std::max(1e-5, 300. * h * h);
            const double fdu =
              central([&](double t) { return forms::goal_value(g, axpy(u, t, du), q); }, h);
            const double fdq =
              central([&](double t) { return forms::goal_value(g, u, axpy(q, t, dq)); }, h);
            EXPECT_LE(rel(fdu, forms::goal_du(g, u, q, du)), tol) << g.name;
            EXPECT_LE(rel(fdq, forms::goal_dq(g, u, q, dq)), tol) << g.name;
            // Assembled vectors agree with the scalar forms.
            EXPECT_NEAR(forms::goal_du_vector(g, *c.F.V, u, q).dot(du.free_values()),
                        forms::goal_du(g, u, q, du), 1e-12 * std::max(1., std::abs(fdu)));
            EXPECT_NEAR(forms::goal_dq_vector(g, *c.F.Q, u, q).dot(dq.free_values()),
                        forms::goal_dq(g, u, q, dq), 1e-12 * std::max(1., std::abs(fdq)));
          }
    }
}

INSTANTIATE_TEST_SUITE_P(Samples, FormConsistency, ::testing::Range(0, 10));

TEST(Forms, AssembledJacobianMatchesScalarForm)
{
  std::mt19937 rng(5);
  auto         F = plaplace_fixture();
  const auto   u = random_function(F.V, rng);
  const auto   a = random_function(F.V, rng);
  const auto   b = random_function(F.V, rng);
  const SparseMatrix K = forms::state_jacobian(F.P, u);
  EXPECT_NEAR(b.free_values().dot(K * a.free_values()), forms::a_u(F.P, u, a, b),
              1e-11 * std::max(1., std::abs(forms::a_u(F.P, u, a, b))));
  EXPECT_LE((Eigen::MatrixXd(K) - Eigen::MatrixXd(K).transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Goals, PresetsAndReferences)
{
  const auto P1 = make_poisson_control(0.01);
  const auto l1 = make_goals("example1_l1", P1);
  ASSERT_TRUE(l1[0].reference);
  EXPECT_NEAR(*l1[0].reference, 0.4052847, 1e-7);
  const auto P3 = make_plaplace_control(0.01, 4., 1.);
  const auto g3 = make_goals("example3", P3);
  ASSERT_EQ(g3.size(), 5u);
  const double refs[] = {1.15760, 21.3305, -0.236288, 0.328042, 0.231615};
  for (int i = 0; i < 5; ++i)
    EXPECT_EQ(*g3[i].reference, refs[i]);
  const auto g2 = make_goals("example2_uq", make_plaplace_control(1., 4., 1.));
  ASSERT_TRUE(g2[0].reference);
  EXPECT_EQ(*g2[0].reference, 0.1502366);
  EXPECT_EQ(*make_goals("example2_uq", make_plaplace_control(10., 4., 1.))[0].reference, 0.1635741);
  EXPECT_FALSE(make_goals("example2_uq", make_plaplace_control(2., 4., 1.))[0].reference);
}

TEST(Goals, ProductGoalDerivatives)
{
  // Derivatives of the product goal, checked against the closed forms
  // int u q^2 du and int u^2 q dq (times the goal's factor 2 * 1/2).
  auto         F = plaplace_fixture();
  std::mt19937 rng(8);
  const auto   g  = make_goals("example2_uq", F.P)[0];
  const auto   u  = random_function(F.V, rng);
  const auto   q  = random_function(F.Q, rng);
  const auto   du = random_function(F.V, rng);
  const auto   dq = random_function(F.Q, rng);
  const auto   f  = [](const Vec2 &, std::span<const double> v) { return v[0] * v[1] * v[1] * v[2]; };
  const double Iu = integrate({&u, &q, &du}, f, Region::everywhere(), F.V->mesh(), 2).value;
  const double Iq = integrate({&q, &u, &dq}, f, Region::everywhere(), F.V->mesh(), 2).value;
  EXPECT_NEAR(forms::goal_du(g, u, q, du, 2), Iu, 1e-12 * std::max(1., std::abs(Iu)));
  EXPECT_NEAR(forms::goal_dq(g, u, q, dq, 2), Iq, 1e-12 * std::max(1., std::abs(Iq)));
}

TEST(Goals, L1DerivativeOnSignDefiniteState)
{
  const auto P = make_poisson_control(0.01);
  auto       m = unit_mesh(0.25);
  auto       V = make_space(m, Family::continuous, 1);
  auto       Q = make_space(m, Family::discontinuous, 1);
  const auto u = interpolate(V, [](const Vec2 &x) { return 1. + x.x() * x.y(); });
  const DiscreteFunction q(Q);
  std::mt19937 rng(3);
  const auto   du = random_function(V, rng);
  for (double delta : {1e-2, 1e-4, 1e-8})
    {
      const auto   g    = make_goals("example1_l1", P, delta)[0];
      const double sgn  = forms::goal_du(g, u, q, du);
      const double flat = integrate({&du}, [](const Vec2 &, std::span<const double> v) { return v[0]; },
                                    Region::everywhere(), *m)
                            .value;
      EXPECT_NEAR(sgn, flat, 2. * delta * delta * du.sup_norm());
    }
}

TEST(Goals, MisalignedRegionIsReported)
{
  const auto P = make_plaplace_control(0.01, 4., 1.);
  const auto g = make_goals("example3", P);
  const Mesh coarse = Mesh::build_initial(P.domain, 0.5);
  // The control box ends at x = 6.25, which cuts the 0.5 cells.
  EXPECT_THROW(forms::check_goal_regions(g[3], coarse), FemError);
  EXPECT_NO_THROW(forms::check_goal_regions(g[3], Mesh::build_initial(P.domain, 0.25)));
}

TEST(StateOperator, JacobianMatchesFluxDifferences)
{
  const StateOperator op{false, 4., 1.};
  std::mt19937        rng(4);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k)
    {
      const Vec2 g(n(rng), n(rng)), d(n(rng), n(rng)), e(n(rng), n(rng));
      const double h = 1e-6;
      const Vec2   fd = (op.flux(g + h * d) - op.flux(g - h * d)) / (2 * h);
      EXPECT_LE((fd - op.jacobian(g) * d).norm(), 1e-6 * std::max(1., fd.norm()));
      const Mat2 fdj = (op.jacobian(g + h * e) - op.jacobian(g - h * e)) / (2 * h);
      EXPECT_LE((fdj - op.jacobian_derivative(g, e)).norm(),
                1e-6 * std::max(1., fdj.norm()));
    }
}
