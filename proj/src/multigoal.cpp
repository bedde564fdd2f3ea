#include <dwropt/multigoal.hpp>

#include <cmath>
#include <string>

namespace dwropt
{
double weighting_default(std::span<const double> x, std::span<const double> m)
{
  if (x.size() != m.size())
    throw std::invalid_argument("deviation and weight vectors differ in length");
  double s = 0.;
  for (std::size_t l = 0; l < x.size(); ++l)
    {
      if (m[l] == 0. || !std::isfinite(m[l]))
        throw WeightDegeneracyError("weight " + std::to_string(l) +
                                    " vanishes; use absolute weighting |m| := 1");
      s += x[l] / std::abs(m[l]);
    }
  return s;
}

double CombinedGoal::freeze_value() const
{
  double s = 0.;
  for (std::size_t l = 0; l < weights.size(); ++l)
    s += signs[l] * (references[l] - freeze_values[l]) / std::abs(weights[l]);
  return s;
}

std::vector<double> CombinedGoal::relative_deviations() const
{
  std::vector<double> d(weights.size());
  for (std::size_t l = 0; l < weights.size(); ++l)
    d[l] = std::abs(references[l] - freeze_values[l]) / std::abs(weights[l]);
  return d;
}

CombinedGoal build_combined(const std::vector<GoalFunctional> &goals,
                            std::span<const double>            references,
                            std::span<const double>            weights,
                            std::span<const double>            freeze_values,
                            bool                               allow_fallback)
{
  const std::size_t n = goals.size();
  if (references.size() != n || weights.size() != n || freeze_values.size() != n)
    throw std::invalid_argument("goal evaluations do not match the goal list");
  CombinedGoal c;
  c.goal.name = "combined";
  for (std::size_t l = 0; l < n; ++l)
    {
      if (!std::isfinite(references[l]) || !std::isfinite(freeze_values[l]) ||
          !std::isfinite(weights[l]))
        throw std::invalid_argument("non-finite goal evaluation for " + goals[l].name);
      double m = weights[l];
      if (m == 0.)
        {
          if (!allow_fallback)
            throw WeightDegeneracyError("weight of goal " + goals[l].name +
                                        " vanishes; use absolute weighting |m| := 1");
          m               = 1.;
          c.fallback_used = true;
        }
      const double s = references[l] - freeze_values[l] >= 0. ? 1. : -1.;
      c.weights.push_back(m);
      c.references.push_back(references[l]);
      c.signs.push_back(s);
      c.freeze_values.push_back(freeze_values[l]);

      const double k = -s / std::abs(m);
      c.goal.constant += s * references[l] / std::abs(m) - k * goals[l].constant;
      for (const GoalTerm &t : goals[l].terms)
        {
          GoalTerm scaled = t;
          scaled.coef *= k;
          c.goal.terms.push_back(std::move(scaled));
        }
    }
  return c;
}

} // namespace dwropt
