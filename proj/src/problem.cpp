#include <dwropt/problem.hpp>

#include <cmath>
#include <numbers>

namespace dwropt
{
namespace
{
constexpr double pi = std::numbers::pi;

bool same_alpha(double a, double b)
{
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}
} // namespace

Vec2 StateOperator::flux(const Vec2 &g) const
{
  if (linear)
    return g;
  const double s = epsilon * epsilon + g.squaredNorm();
  return std::pow(s, 0.5 * (p - 2.)) * g;
}

Mat2 StateOperator::jacobian(const Vec2 &g) const
{
  if (linear)
    return Mat2::Identity();
  const double s      = epsilon * epsilon + g.squaredNorm();
  const double kappa  = std::pow(s, 0.5 * (p - 2.));
  const double kappa4 = kappa / s;
  return kappa * Mat2::Identity() + (p - 2.) * kappa4 * g * g.transpose();
}

Mat2 StateOperator::jacobian_derivative(const Vec2 &g, const Vec2 &d) const
{
  if (linear)
    return Mat2::Zero();
  const double s      = epsilon * epsilon + g.squaredNorm();
  const double kappa4 = std::pow(s, 0.5 * (p - 4.));
  const double kappa6 = kappa4 / s;
  const double gd     = g.dot(d);
  return (p - 2.) * kappa4 * (gd * Mat2::Identity() + d * g.transpose() + g * d.transpose()) +
         (p - 2.) * (p - 4.) * kappa6 * gd * g * g.transpose();
}

GoalDensity GoalFunctional::density_at(const GoalPoint &pt) const
{
  GoalDensity out;
  for (const GoalTerm &t : terms)
    if (t.region.contains(pt.x))
      {
        const GoalDensity d = t.density(pt);
        out.value += t.coef * d.value;
        out.d_du += t.coef * d.d_du;
        out.d_dq += t.coef * d.d_dq;
      }
  return out;
}

GoalFunctional GoalFunctional::scaled(double c) const
{
  GoalFunctional g = *this;
  g.constant *= c;
  for (GoalTerm &t : g.terms)
    t.coef *= c;
  if (g.reference)
    *g.reference *= c;
  return g;
}

GoalFunctional ProblemDefinition::cost() const
{
  GoalFunctional g;
  g.name       = "cost";
  const auto ud = u_desired;
  const auto qd = q_desired;
  const double a = alpha;
  g.terms.push_back({1., Region::everywhere(), [ud, qd, a](const GoalPoint &pt) {
                       const double du = pt.u - ud(pt.x);
                       const double dq = pt.q - qd(pt.x);
                       return GoalDensity{0.5 * du * du + 0.5 * a * dq * dq, du, a * dq};
                     }});
  return g;
}

ProblemDefinition make_poisson_control(double alpha)
{
  if (!(alpha > 0.) || !std::isfinite(alpha))
    throw ProblemError("alpha must be positive");
  ProblemDefinition p;
  p.name              = "poisson";
  p.domain            = Domain::unit_square();
  p.initial_cell_size = 0.5;
  p.alpha             = alpha;
  p.op                = StateOperator{true, 2., 1.};
  p.f = [alpha](const Vec2 &x) {
    return (20. * pi * pi * std::sin(4. * pi * x.x()) - std::sin(pi * x.x()) / alpha) *
           std::sin(2. * pi * x.y());
  };
  p.u_desired = [](const Vec2 &x) {
    return (5. * pi * pi * std::sin(pi * x.x()) + std::sin(4. * pi * x.x())) *
           std::sin(2. * pi * x.y());
  };
  p.q_desired = [](const Vec2 &) { return 0.; };
  p.u_exact   = [](const Vec2 &x) {
    return std::sin(4. * pi * x.x()) * std::sin(2. * pi * x.y());
  };
  p.q_exact = [alpha](const Vec2 &x) {
    return std::sin(pi * x.x()) * std::sin(2. * pi * x.y()) / alpha;
  };
  return p;
}

ProblemDefinition make_plaplace_control(double alpha, double pexp, double epsilon)
{
  if (!(alpha > 0.) || !std::isfinite(alpha))
    throw ProblemError("alpha must be positive");
  if (!(pexp > 1.) || !std::isfinite(pexp))
    throw ProblemError("exponent p must exceed 2d/(2+d) = 1");
  if (!(epsilon > 0.) || !std::isfinite(epsilon))
    throw ProblemError("epsilon must be positive");
  ProblemDefinition p;
  p.name              = "plaplace";
  p.domain            = Domain::holed_channel();
  p.initial_cell_size = 0.5;
  p.alpha             = alpha;
  p.op                = StateOperator{false, pexp, epsilon};
  p.f                 = [](const Vec2 &) { return 0.; };
  p.u_desired         = [](const Vec2 &x) {
    return (x.x() > 2.5 && x.x() < 4.5 && x.y() > 2.5 && x.y() < 4.5) ? -1. : 0.;
  };
  p.q_desired = [](const Vec2 &) { return 1.; };
  return p;
}

const std::vector<std::string> &preset_names()
{
  static const std::vector<std::string> names{"example1_cost", "example1_l1",
                                              "example2_uq", "example3"};
  return names;
}

std::optional<double> uq_reference(double alpha)
{
  static const std::pair<double, double> table[] = {
    {0.01, 0.2316036}, {0.1, 0.07069658}, {1., 0.1502366}, {10., 0.1635741}};
  for (auto [a, v] : table)
    if (same_alpha(a, alpha))
      return v;
  return std::nullopt;
}

namespace
{
GoalFunctional l1_goal(double smoothing)
{
  GoalFunctional g;
  g.name = "l1";
  g.terms.push_back({1., Region::everywhere(), [smoothing](const GoalPoint &pt) {
                       const double delta = smoothing * pt.u_sup;
                       const double denom = std::sqrt(pt.u * pt.u + delta * delta);
                       const double deriv = denom > 0. ? pt.u / denom : 0.;
                       return GoalDensity{std::abs(pt.u), deriv, 0.};
                     }});
  return g;
}

GoalFunctional uq_goal(const std::string &name, double coef)
{
  GoalFunctional g;
  g.name = name;
  g.terms.push_back({coef, Region::everywhere(), [](const GoalPoint &pt) {
                       const double u = pt.u, q = pt.q;
                       return GoalDensity{u * u * q * q, 2. * u * q * q, 2. * u * u * q};
                     }});
  return g;
}
} // namespace

std::vector<GoalFunctional> make_goals(const std::string       &preset,
                                       const ProblemDefinition &problem,
                                       double                   smoothing)
{
  const double alpha = problem.alpha;
  if (preset == "example1_cost")
    {
      GoalFunctional g = problem.cost();
      g.reference      = (25. * std::pow(pi, 4) + 1. / alpha) / 8.;
      return {g};
    }
  if (preset == "example1_l1")
    {
      GoalFunctional g = l1_goal(smoothing);
      g.reference      = 4. / (pi * pi);
      return {g};
    }
  if (preset == "example2_uq")
    {
      GoalFunctional g = uq_goal("uq_half", 0.5);
      g.reference      = uq_reference(alpha);
      return {g};
    }
  if (preset == "example3")
    {
      const auto ud = problem.u_desired;
      const auto qd = problem.q_desired;
      GoalFunctional tracking;
      tracking.name = "tracking";
      tracking.terms.push_back({0.5, Region::everywhere(), [ud](const GoalPoint &pt) {
                                  const double d = pt.u - ud(pt.x);
                                  return GoalDensity{d * d, 2. * d, 0.};
                                }});
      GoalFunctional control;
      control.name = "control";
      control.terms.push_back({0.5, Region::everywhere(), [qd](const GoalPoint &pt) {
                                 const double d = pt.q - qd(pt.x);
                                 return GoalDensity{d * d, 0., 2. * d};
                               }});
      GoalFunctional strip;
      strip.name = "strip";
      strip.terms.push_back(
        {1., Region::inside({4., -INFINITY, 5., INFINITY}), [](const GoalPoint &pt) {
           return GoalDensity{pt.u, 1., 0.};
         }});
      GoalFunctional box;
      box.name = "box";
      box.terms.push_back({1., Region::inside({1., 2., 6.25, 2.5}), [](const GoalPoint &pt) {
                             return GoalDensity{pt.q, 0., 1.};
                           }});
      GoalFunctional uq = uq_goal("uq_half", 0.5);

      std::vector<GoalFunctional> goals{tracking, control, strip, box, uq};
      if (same_alpha(alpha, 0.01))
        {
          const double refs[] = {1.15760, 21.3305, -0.236288, 0.328042, 0.231615};
          for (std::size_t i = 0; i < goals.size(); ++i)
            goals[i].reference = refs[i];
        }
      return goals;
    }
  throw ProblemError("unknown preset '" + preset + "'");
}

} // namespace dwropt
