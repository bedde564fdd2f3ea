#pragma once

#include <dwropt/driver.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace dwropt::testing
{
inline constexpr double pi = std::numbers::pi;

inline std::shared_ptr<const Mesh> share(Mesh m)
{
  return std::make_shared<const Mesh>(std::move(m));
}

inline std::shared_ptr<const Mesh> unit_mesh(double h)
{
  return share(Mesh::build_initial(Domain::unit_square(), h));
}

/// Refines a random quarter of the cells, n times.
inline std::shared_ptr<const Mesh> random_refined(std::shared_ptr<const Mesh> m, int n,
                                                  unsigned seed)
{
  std::mt19937 rng(seed);
  for (int k = 0; k < n; ++k)
    {
      std::vector<std::size_t> pos;
      std::uniform_int_distribution<std::size_t> pick(0, m->n_active() - 1);
      for (std::size_t i = 0; i < std::max<std::size_t>(1, m->n_active() / 4); ++i)
        pos.push_back(pick(rng));
      std::sort(pos.begin(), pos.end());
      pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
      m = share(m->refine(m->cell_set_from_active(pos)));
    }
  return m;
}

/// Random coefficients on the free DOFs, constraints distributed.
inline DiscreteFunction random_function(SpacePtr s, std::mt19937 &rng, double scale = 1.)
{
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::VectorXd free(static_cast<Eigen::Index>(s->n_free()));
  for (auto &x : free)
    x = d(rng);
  return DiscreteFunction::from_free(std::move(s), free);
}

/// Sums of square differences of two functions on one mesh, integrated.
inline double l2_distance(const DiscreteFunction &a, const DiscreteFunction &b, int qe = 2)
{
  const auto r = integrate(
    {&a, &b}, [](const Vec2 &, std::span<const double> v) { return (v[0] - v[1]) * (v[0] - v[1]); },
    Region::everywhere(), a.space->mesh(), qe);
  return std::sqrt(r.value);
}

inline double l2_error(const DiscreteFunction &a, const std::function<double(const Vec2 &)> &exact,
                       int qe = 3)
{
  const auto r = integrate(
    {&a},
    [&](const Vec2 &x, std::span<const double> v) {
      const double d = v[0] - exact(x);
      return d * d;
    },
    Region::everywhere(), a.space->mesh(), qe);
  return std::sqrt(r.value);
}

inline double l2_norm(const DiscreteFunction &a, int qe = 2)
{
  const auto r = integrate({&a}, [](const Vec2 &, std::span<const double> v) { return v[0] * v[0]; },
                           Region::everywhere(), a.space->mesh(), qe);
  return std::sqrt(r.value);
}

inline double sin_sin(const Vec2 &x)
{
  return std::sin(pi * x.x()) * std::sin(pi * x.y());
}


/// Low-order and enriched optima with goal adjoints on one mesh.
struct LevelSolve
{
  ProblemDefinition             P;
  SpacePtr                      V, Q, V2, Q2;
  std::unique_ptr<ReducedModel> low, enr;
  KKTTriple                     L, E;

  LevelSolve(ProblemDefinition problem, std::shared_ptr<const Mesh> m, int qdeg = 1,
             double tol = 1e-11)
    : P(std::move(problem))
    , V(make_space(m, Family::continuous, 1, true))
    , Q(make_space(m, Family::discontinuous, qdeg))
    , V2(make_space(m, Family::continuous, 2, true))
    , Q2(make_space(m, Family::discontinuous, qdeg + 1))
    , low(std::make_unique<ReducedModel>(P, V, Q))
    , enr(std::make_unique<ReducedModel>(P, V2, Q2))
  {
    E = newton_standard(*enr, enr->zero_control(), 1e-2 * tol, tol).triple;
    L = newton_standard(*low, transfer(E.q, Q), 1e-2 * tol, tol).triple;
  }

  struct Estimate
  {
    AdjointTriple  La, Ea;
    ErrorBreakdown b;
  };

  Estimate estimate(const GoalFunctional &I, int qe = 1) const
  {
    Estimate       r{adjoint_chain(*low, I, L), adjoint_chain(*enr, I, E), {}};
    EstimatorInput in{&P, &I, &L, &r.La, &E, &r.Ea, qe};
    r.b       = compute_eta_h2(in);
    r.b.eta_k = compute_eta_k(*low, L, r.La.p);
    localize_pu(in, r.b);
    return r;
  }
};

} // namespace dwropt::testing
