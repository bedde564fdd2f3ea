#pragma once

#include <dwropt/estimator.hpp>
#include <dwropt/multigoal.hpp>
#include <dwropt/newton.hpp>

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwropt
{
/// Bad or unknown configuration keys and values.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class StoppingMode
{
  adaptive,
  standard
};

enum class RefinementMode
{
  adaptive,
  uniform
};

enum class ReferenceSource
{
  analytic,
  file,
  none
};

struct Config
{
  std::string preset = "example1_cost";
  double      alpha   = 0.01;
  double      p       = 4.;
  double      epsilon = 1.;
  int         degree          = 1;
  int         control_degree  = 1;
  /// State degree of the enriched spaces. The control degree is raised by
  /// the same amount.
  int         enriched_degree = 2;
  double      gamma           = 1e-2;
  double      theta           = 0.5;
  double      tol_dis         = 1e-10;
  int         max_levels      = 12;
  /// Stop once a level reaches this many DOFs. Zero disables the cap.
  std::size_t max_state_dofs = 0;
  std::size_t max_total_dofs = 0;
  double      newton_tol_abs = 1e-7;
  double      newton_tol_rel = 8e-5;
  /// Relative gradient tolerance of the enriched solves.
  double      enriched_newton_tol = 1e-11;
  double      krylov_tol          = 1e-10;
  int         quad_extra          = 1;
  double      smoothing_delta     = 1e-8;
  std::string output_dir          = "out";
  StoppingMode    stopping   = StoppingMode::adaptive;
  RefinementMode  refinement = RefinementMode::adaptive;
  ReferenceSource reference_source = ReferenceSource::analytic;
  std::vector<double> reference_values;
  /// Root cell size. Zero takes the problem's own.
  double      initial_cell_size = 0.;
  /// Guard used for the first level, before any estimate exists.
  double      eta_initial = 1e-5;
  bool        dump_fields = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Defaults of a named preset. Throws ConfigError for unknown names.
Config preset_config(const std::string &name);

/// Flat "key = value" text; '#' starts a comment. A preset key, wherever it
/// appears, selects the defaults the other keys override.
Config parse_config(const std::string &text);
Config load_config(const std::filesystem::path &file);
/// Applies one "key=value" override.
void   set_config_value(Config &c, const std::string &key, const std::string &value);
/// Text that parse_config reads back to the same config.
std::string format_config(const Config &c);

/// Problem and goals a config describes, with references attached per the
/// reference source.
ProblemDefinition            make_problem(const Config &c);
std::vector<GoalFunctional>  make_config_goals(const Config &c, const ProblemDefinition &P);

struct LevelReport
{
  int         level = 0;
  std::size_t cells = 0;
  std::size_t dofs_state    = 0;
  std::size_t dofs_control  = 0;
  std::size_t dofs_total    = 0;
  std::size_t dofs_enriched = 0;
  std::vector<std::string> goal_names;
  /// Member goals at the low-order solution.
  std::vector<double> goal_values;
  /// Member goals at the enriched solution.
  std::vector<double> enriched_values;
  /// Single goal value, or the combined value at the freeze point.
  double goal_combined = 0.;
  /// Error of the goal against the references; NaN without references.
  double ref_error = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> reldev;
  bool   weight_fallback = false;
  double eta_h2 = 0., eta_k = 0.;
  double rho_u = 0., rho_q = 0., rho_z = 0., rho_v = 0., rho_p = 0., rho_y = 0.;
  Effectivities eff;
  int         newton_its_low = 0;
  int         newton_its_enriched = 0;
  std::string stop_reason;
  /// Cell ids refined after this level (empty on the last one).
  std::vector<int> marked;
};

struct RunResult
{
  Config                      config;
  std::vector<LevelReport>    levels;
  std::shared_ptr<const Mesh> final_mesh;
  /// tol_dis | max_levels | max_state_dofs | max_total_dofs
  std::string                 termination;
};

/// A solver failure on some level, with the levels finished before it.
class DriverError : public std::runtime_error
{
public:
  DriverError(int level, const std::string &what, RunResult partial)
    : std::runtime_error("level " + std::to_string(level) + ": " + what)
    , level(level)
    , partial(std::move(partial))
  {}
  int       level;
  RunResult partial;
};

/// Called after every finished level.
using LevelCallback = std::function<void(const RunResult &)>;

/// The adaptive loop; refinement follows config.refinement.
RunResult run(const Config &c, const LevelCallback &on_level = {});
RunResult run_adaptive(Config c, const LevelCallback &on_level = {});
RunResult run_uniform(Config c, const LevelCallback &on_level = {});

/// Member goals at the enriched solution on a mesh refined twice more
/// uniformly than the given one.
std::vector<double> self_reference(const Config &c, const Mesh &mesh);

/// levels.csv, summary.txt and plots.gp in config.output_dir.
void emit_outputs(const RunResult &r);
std::vector<std::string> csv_header(const RunResult &r);
/// Writes one CSV row per level; numbers in %.17e.
void write_levels_csv(const RunResult &r, std::ostream &out);

struct StoppingComparison
{
  RunResult adaptive;
  RunResult standard;
};
StoppingComparison compare_stopping(const Config &c);
/// Per common level: cells, iterations, effectivities and eta_k of both modes.
void write_comparison(const StoppingComparison &s, std::ostream &out);

} // namespace dwropt
