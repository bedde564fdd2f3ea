// Command line front end of the adaptive optimal control solver.

#include <dwropt/driver.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace dwropt;

namespace
{
/// Exit codes.
constexpr int ok             = 0;
constexpr int solver_failure = 1;
constexpr int config_failure = 2;

void apply_overrides(Config &c, const std::vector<std::string> &sets)
{
  for (const auto &s : sets)
    {
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + s + "'");
      set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
    }
  c.validate();
}

/// Prints one progress line per level and keeps the CSV on disk current.
LevelCallback progress()
{
  return [](const RunResult &r) {
    const LevelReport &l = r.levels.back();
    std::fprintf(stderr, "level %2d  cells %7zu  dofs %8zu  eta %+.3e  i_eff %s  its %d/%d\n",
                 l.level, l.cells, l.dofs_total, l.eta_h2,
                 l.eff.defined ? std::to_string(l.eff.i_eff).c_str() : "-", l.newton_its_low,
                 l.newton_its_enriched);
    emit_outputs(r);
  };
}

int run_and_report(const Config &c, bool self_ref)
{
  try
    {
      RunResult r = run(c, progress());
      if (self_ref && r.final_mesh)
        {
          const std::vector<double> v = self_reference(c, *r.final_mesh);
          std::ofstream             out(std::filesystem::path(c.output_dir) / "self_reference.txt");
          for (std::size_t i = 0; i < v.size(); ++i)
            {
              char buf[64];
              std::snprintf(buf, sizeof buf, "%.17e", v[i]);
              out << r.levels.back().goal_names[i] << ' ' << buf << '\n';
            }
        }
      emit_outputs(r);
      std::cout << "wrote " << c.output_dir << "/levels.csv (" << r.levels.size()
                << " levels, " << r.termination << ")\n";
      return ok;
    }
  catch (const DriverError &e)
    {
      if (!e.partial.levels.empty())
        emit_outputs(e.partial);
      std::cerr << "solver failure at " << e.what() << '\n';
      return solver_failure;
    }
}

std::string preset_list()
{
  std::string s = "Presets:";
  for (const auto &n : preset_names())
    s += "\n  " + n;
  return s;
}
} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Adaptive finite elements for optimal control with goal-oriented error "
               "estimation"};
  app.footer(preset_list());
  app.require_subcommand(1);

  std::vector<std::string> sets;
  bool                     self_ref = false;

  std::string cfg_path;
  auto       *run_cmd = app.add_subcommand("run", "Run the adaptive loop for a config file");
  run_cmd->add_option("config", cfg_path, "Config file")->required();
  run_cmd->add_option("--set", sets, "Override a config key (key=value)");
  run_cmd->add_flag("--self-reference", self_ref,
                    "Also evaluate the goals on a twice uniformly refined, degree-raised mesh");

  std::string preset, out_dir, stopping;
  double      alpha = 0.;
  auto *preset_cmd  = app.add_subcommand("preset", "Run a built-in preset");
  preset_cmd->add_option("name", preset, "Preset name")->required();
  preset_cmd->add_option("--alpha", alpha, "Control cost weight");
  preset_cmd->add_option("--out", out_dir, "Output directory");
  preset_cmd->add_option("--stopping", stopping, "adaptive or standard");
  preset_cmd->add_option("--set", sets, "Override a config key (key=value)");
  preset_cmd->add_flag("--self-reference", self_ref, "Also compute self references");

  auto *cmp_cmd = app.add_subcommand(
    "compare-stopping", "Run both Newton stopping rules and compare them level by level");
  cmp_cmd->add_option("config", cfg_path, "Config file")->required();
  cmp_cmd->add_option("--set", sets, "Override a config key (key=value)");

  std::vector<double> alphas{0.01, 0.1, 1., 10.};
  auto *sweep_cmd = app.add_subcommand("sweep-alpha", "Repeat a run for several alpha values");
  sweep_cmd->add_option("config", cfg_path, "Config file")->required();
  sweep_cmd->add_option("--alphas", alphas, "Comma separated list")->delimiter(',');
  sweep_cmd->add_option("--set", sets, "Override a config key (key=value)");

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::CallForHelp &e)
    {
      return app.exit(e);
    }
  catch (const CLI::ParseError &e)
    {
      app.exit(e);
      return config_failure;
    }

  Config c;
  try
    {
      if (*preset_cmd)
        {
          c = preset_config(preset);
          if (preset_cmd->count("--alpha"))
            c.alpha = alpha;
          if (!out_dir.empty())
            c.output_dir = out_dir;
          if (!stopping.empty())
            set_config_value(c, "stopping", stopping);
        }
      else
        c = load_config(cfg_path);
      apply_overrides(c, sets);
      if (*sweep_cmd)
        for (double a : alphas)
          if (!(a > 0.))
            throw ConfigError("alpha values must be positive");
    }
  catch (const std::exception &e)
    {
      std::cerr << "config error: " << e.what() << '\n';
      return config_failure;
    }

  if (*run_cmd || *preset_cmd)
    return run_and_report(c, self_ref);

  if (*cmp_cmd)
    {
      try
        {
          const StoppingComparison s = compare_stopping(c);
          emit_outputs(s.adaptive);
          emit_outputs(s.standard);
          std::filesystem::create_directories(c.output_dir);
          std::ofstream out(std::filesystem::path(c.output_dir) / "comparison.csv");
          write_comparison(s, out);
          write_comparison(s, std::cout);
          return ok;
        }
      catch (const DriverError &e)
        {
          std::cerr << "solver failure at " << e.what() << '\n';
          return solver_failure;
        }
    }

  // sweep-alpha: one run per alpha, plus a table of the final levels.
  int         status = ok;
  std::string table  = "alpha,level,dofs_total,goal_combined,ref_error,eta_h2,i_eff\n";
  for (double a : alphas)
    {
      Config ca = c;
      ca.alpha  = a;
      std::ostringstream dir;
      dir << c.output_dir << "/alpha_" << a;
      ca.output_dir = dir.str();
      try
        {
          const RunResult r = run(ca, progress());
          emit_outputs(r);
          for (const LevelReport &l : r.levels)
            {
              char buf[256];
              std::snprintf(buf, sizeof buf, "%.17g,%d,%zu,%.17e,%.17e,%.17e,%.17e\n", a,
                            l.level, l.dofs_total, l.goal_combined, l.ref_error, l.eta_h2,
                            l.eff.defined ? l.eff.i_eff : std::nan(""));
              table += buf;
            }
        }
      catch (const DriverError &e)
        {
          if (!e.partial.levels.empty())
            emit_outputs(e.partial);
          std::cerr << "alpha " << a << ": solver failure at " << e.what() << '\n';
          status = solver_failure;
        }
    }
  std::filesystem::create_directories(c.output_dir);
  std::ofstream(std::filesystem::path(c.output_dir) / "sweep.csv") << table;
  std::cout << table;
  return status;
}
