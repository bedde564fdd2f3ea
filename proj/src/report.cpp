#include <dwropt/driver.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>

namespace dwropt
{
namespace
{
std::string sci(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17e", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path &p)
{
  std::ofstream out(p);
  if (!out)
    throw std::runtime_error("cannot write " + p.string());
  out.exceptions(std::ios::badbit | std::ios::failbit);
  return out;
}

const std::vector<std::string> &goal_names(const RunResult &r)
{
  static const std::vector<std::string> none;
  return r.levels.empty() ? none : r.levels.front().goal_names;
}
} // namespace

std::vector<std::string> csv_header(const RunResult &r)
{
  std::vector<std::string> h{"level", "cells", "dofs_state", "dofs_control", "dofs_total",
                             "dofs_enriched"};
  for (const auto &n : goal_names(r))
    h.push_back("goal_" + n);
  for (const char *k : {"goal_combined", "ref_error", "eta_h2", "eta_k", "rho_u", "rho_q",
                        "rho_z", "rho_v", "rho_p", "rho_y", "i_eff", "i_eff_p", "i_eff_a",
                        "i_eff_c", "newton_its_low", "newton_its_enriched", "stop_reason"})
    h.push_back(k);
  for (const auto &n : goal_names(r))
    h.push_back("reldev_" + n);
  h.push_back("weight_fallback");
  return h;
}

void write_levels_csv(const RunResult &r, std::ostream &out)
{
  const auto h = csv_header(r);
  for (std::size_t i = 0; i < h.size(); ++i)
    out << (i ? "," : "") << h[i];
  out << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const LevelReport &l : r.levels)
    {
      std::vector<std::string> row{std::to_string(l.level),
                                   std::to_string(l.cells),
                                   std::to_string(l.dofs_state),
                                   std::to_string(l.dofs_control),
                                   std::to_string(l.dofs_total),
                                   std::to_string(l.dofs_enriched)};
      for (double v : l.goal_values)
        row.push_back(sci(v));
      const Effectivities &e = l.eff;
      for (double v : {l.goal_combined, l.ref_error, l.eta_h2, l.eta_k, l.rho_u, l.rho_q,
                       l.rho_z, l.rho_v, l.rho_p, l.rho_y, e.defined ? e.i_eff : nan,
                       e.defined ? e.i_eff_p : nan, e.defined ? e.i_eff_a : nan,
                       e.defined ? e.i_eff_c : nan})
        row.push_back(sci(v));
      row.push_back(std::to_string(l.newton_its_low));
      row.push_back(std::to_string(l.newton_its_enriched));
      row.push_back(l.stop_reason);
      for (double v : l.reldev)
        row.push_back(sci(v));
      row.push_back(l.weight_fallback ? "1" : "0");
      for (std::size_t i = 0; i < row.size(); ++i)
        out << (i ? "," : "") << row[i];
      out << '\n';
    }
}

void emit_outputs(const RunResult &r)
{
  if (r.levels.empty())
    throw std::invalid_argument("no levels to report");
  const std::filesystem::path dir = r.config.output_dir;
  std::error_code             ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    auto out = open_out(dir / "levels.csv");
    write_levels_csv(r, out);
  }
  {
    auto               out  = open_out(dir / "summary.txt");
    const LevelReport &last = r.levels.back();
    out << "preset " << r.config.preset << '\n'
        << "levels " << r.levels.size() << '\n'
        << "termination " << (r.termination.empty() ? "running" : r.termination) << '\n'
        << "final cells " << last.cells << '\n'
        << "final dofs_total " << last.dofs_total << '\n';
    for (std::size_t i = 0; i < last.goal_names.size(); ++i)
      out << "goal " << last.goal_names[i] << ' ' << sci(last.goal_values[i]) << '\n';
    out << "goal_combined " << sci(last.goal_combined) << '\n'
        << "ref_error " << sci(last.ref_error) << '\n'
        << "eta_h2 " << sci(last.eta_h2) << '\n'
        << "eta_k " << sci(last.eta_k) << '\n';
    if (last.eff.defined)
      out << "i_eff " << sci(last.eff.i_eff) << '\n';
    out << "\n# configuration\n" << format_config(r.config);
  }
  {
    auto out = open_out(dir / "plots.gp");
    out << "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set logscale xy\n"
           "set format y '%.0e'\n"
           "set xlabel 'DOFs'\n"
           "set terminal pngcairo size 900,600\n"
           "set output 'error.png'\n"
           "set ylabel 'error'\n"
           "plot 'levels.csv' using (column('dofs_total')):(abs(column('ref_error'))) "
           "with linespoints title '|error|', \\\n"
           "     '' using (column('dofs_total')):(abs(column('eta_h2'))) "
           "with linespoints title '|eta_h2|', \\\n"
           "     '' using (column('dofs_total')):(abs(column('eta_k'))) "
           "with linespoints title '|eta_k|'\n"
           "set output 'ieff.png'\n"
           "unset logscale y\n"
           "set format y '%g'\n"
           "set ylabel 'effectivity'\n"
           "plot 'levels.csv' using (column('dofs_total')):(column('i_eff')) "
           "with linespoints title 'i_eff', \\\n"
           "     '' using (column('dofs_total')):(column('i_eff_p')) "
           "with linespoints title 'i_eff_p', \\\n"
           "     '' using (column('dofs_total')):(column('i_eff_a')) "
           "with linespoints title 'i_eff_a', \\\n"
           "     '' using (column('dofs_total')):(column('i_eff_c')) "
           "with linespoints title 'i_eff_c'\n";
  }
  if (r.config.dump_fields && r.final_mesh)
    {
      auto out = open_out(dir / "mesh.txt");
      write_mesh_dump(mesh_dump(*r.final_mesh), out);
    }
}

void write_comparison(const StoppingComparison &s, std::ostream &out)
{
  out << "level,cells_standard,cells_adaptive,its_standard,its_adaptive,i_eff_standard,"
         "i_eff_adaptive,i_eff_c_standard,i_eff_c_adaptive,eta_k_standard,eta_k_adaptive,"
         "ref_error_standard,ref_error_adaptive\n";
  const double      nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n   = std::min(s.adaptive.levels.size(), s.standard.levels.size());
  for (std::size_t i = 0; i < n; ++i)
    {
      const LevelReport &F = s.standard.levels[i], &A = s.adaptive.levels[i];
      out << i << ',' << F.cells << ',' << A.cells << ',' << F.newton_its_low << ','
          << A.newton_its_low << ',' << sci(F.eff.defined ? F.eff.i_eff : nan) << ','
          << sci(A.eff.defined ? A.eff.i_eff : nan) << ','
          << sci(F.eff.defined ? F.eff.i_eff_c : nan) << ','
          << sci(A.eff.defined ? A.eff.i_eff_c : nan) << ',' << sci(F.eta_k) << ','
          << sci(A.eta_k) << ',' << sci(F.ref_error) << ',' << sci(A.ref_error) << '\n';
    }
}

} // namespace dwropt
