#pragma once

#include <dwropt/problem.hpp>

#include <span>
#include <stdexcept>
#include <vector>

namespace dwropt
{
/// A goal weight vanished and the absolute fallback was not allowed.
class WeightDegeneracyError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// sum_l x_l / |m_l|.
double weighting_default(std::span<const double> x, std::span<const double> m);

/// Sum of relative deviations with frozen signs, as one goal functional:
///   I(u,q) = sum_l s_l (r_l - I_l(u,q)) / |m_l|.
struct CombinedGoal
{
  GoalFunctional      goal;
  std::vector<double> weights;
  std::vector<double> references;
  std::vector<double> signs;
  std::vector<double> freeze_values;
  bool                fallback_used = false;

  /// Value at the freeze point.
  double freeze_value() const;
  /// |r_l - I_l(freeze)| / |m_l| per member.
  std::vector<double> relative_deviations() const;
};

/// Builds the combination from enriched references, low-order weights and
/// the member values at the freeze point. A zero weight is an error unless
/// allow_fallback, which replaces it by 1 and flags the result.
CombinedGoal build_combined(const std::vector<GoalFunctional> &goals,
                            std::span<const double>            references,
                            std::span<const double>            weights,
                            std::span<const double>            freeze_values,
                            bool                               allow_fallback = false);

} // namespace dwropt
