#include <dwropt/driver.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dwropt
{
namespace
{
std::string trim(const std::string &s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string &key, const std::string &v)
{
  std::size_t pos = 0;
  double      x   = 0.;
  try
    {
      x = std::stod(v, &pos);
    }
  catch (const std::exception &)
    {
      pos = 0;
    }
  if (pos == 0 || trim(v.substr(pos)) != "")
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return x;
}

long to_integer(const std::string &key, const std::string &v)
{
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e15)
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return static_cast<long>(x);
}

std::size_t to_count(const std::string &key, const std::string &v)
{
  const long n = to_integer(key, v);
  if (n < 0)
    throw ConfigError("key '" + key + "' must be nonnegative");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string &key, const std::string &v)
{
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string &key, const std::string &v)
{
  std::vector<double> out;
  std::string         item;
  std::stringstream   ss(v);
  while (std::getline(ss, item, ','))
    if (!trim(item).empty())
      out.push_back(to_double(key, trim(item)));
  return out;
}

std::string number(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char *name_of(StoppingMode m)
{
  return m == StoppingMode::adaptive ? "adaptive" : "standard";
}
const char *name_of(RefinementMode m)
{
  return m == RefinementMode::adaptive ? "adaptive" : "uniform";
}
const char *name_of(ReferenceSource s)
{
  switch (s)
    {
      case ReferenceSource::analytic:
        return "analytic";
      case ReferenceSource::file:
        return "file";
      default:
        return "none";
    }
}
} // namespace

void Config::validate() const
{
  auto positive = [](const char *k, double v) {
    if (!(v > 0.))
      throw ConfigError(std::string(k) + " must be positive");
  };
  if (std::find(preset_names().begin(), preset_names().end(), preset) == preset_names().end())
    throw ConfigError("unknown preset '" + preset + "'");
  positive("alpha", alpha);
  positive("epsilon", epsilon);
  positive("gamma", gamma);
  positive("tol_dis", tol_dis);
  positive("newton_tol_abs", newton_tol_abs);
  positive("newton_tol_rel", newton_tol_rel);
  positive("enriched_newton_tol", enriched_newton_tol);
  positive("krylov_tol", krylov_tol);
  positive("eta_initial", eta_initial);
  if (!(p > 1.))
    throw ConfigError("p must exceed 1");
  if (!(theta > 0. && theta <= 1.))
    throw ConfigError("theta must lie in (0, 1]");
  if (degree < 1 || degree > 2)
    throw ConfigError("degree must be 1 or 2");
  if (enriched_degree <= degree || enriched_degree > 3)
    throw ConfigError("enriched_degree must exceed degree and be at most 3");
  if (control_degree < 0 || control_degree + enriched_degree - degree > 3)
    throw ConfigError("control_degree out of range");
  if (max_levels < 1)
    throw ConfigError("max_levels must be at least 1");
  if (quad_extra < 0)
    throw ConfigError("quad_extra must be nonnegative");
  if (!(smoothing_delta >= 0.))
    throw ConfigError("smoothing_delta must be nonnegative");
  if (initial_cell_size < 0.)
    throw ConfigError("initial_cell_size must be nonnegative");
  if (output_dir.empty())
    throw ConfigError("output_dir is empty");
  if (reference_source == ReferenceSource::file && reference_values.empty())
    throw ConfigError("reference_source = file needs reference_values");
}

Config preset_config(const std::string &name)
{
  Config c;
  c.preset         = name;
  c.control_degree = 0;
  if (name == "example1_cost" || name == "example1_l1")
    {
      c.alpha          = 0.01;
      c.max_state_dofs = 30000;
      c.max_levels     = 30;
    }
  else if (name == "example2_uq")
    {
      c.alpha            = 1.;
      c.p                = 4.;
      c.epsilon          = 1.;
      c.reference_source = ReferenceSource::analytic;
      c.max_state_dofs   = 30000;
      c.max_levels       = 30;
    }
  else if (name == "example3")
    {
      c.alpha             = 0.01;
      c.p                 = 4.;
      c.epsilon           = 1.;
      c.initial_cell_size = 0.25;
      c.max_total_dofs    = 100000;
      c.max_levels        = 30;
    }
  else
    throw ConfigError("unknown preset '" + name + "'");
  c.output_dir = "out/" + name;
  return c;
}

void set_config_value(Config &c, const std::string &key, const std::string &v)
{
  if (key == "preset")
    c.preset = v;
  else if (key == "alpha")
    c.alpha = to_double(key, v);
  else if (key == "p")
    c.p = to_double(key, v);
  else if (key == "epsilon")
    c.epsilon = to_double(key, v);
  else if (key == "degree")
    c.degree = static_cast<int>(to_integer(key, v));
  else if (key == "control_degree")
    c.control_degree = static_cast<int>(to_integer(key, v));
  else if (key == "enriched_degree")
    c.enriched_degree = static_cast<int>(to_integer(key, v));
  else if (key == "gamma")
    c.gamma = to_double(key, v);
  else if (key == "theta")
    c.theta = to_double(key, v);
  else if (key == "tol_dis")
    c.tol_dis = to_double(key, v);
  else if (key == "max_levels")
    c.max_levels = static_cast<int>(to_integer(key, v));
  else if (key == "max_state_dofs")
    c.max_state_dofs = to_count(key, v);
  else if (key == "max_total_dofs")
    c.max_total_dofs = to_count(key, v);
  else if (key == "newton_tol_abs")
    c.newton_tol_abs = to_double(key, v);
  else if (key == "newton_tol_rel")
    c.newton_tol_rel = to_double(key, v);
  else if (key == "enriched_newton_tol")
    c.enriched_newton_tol = to_double(key, v);
  else if (key == "krylov_tol")
    c.krylov_tol = to_double(key, v);
  else if (key == "quad_extra")
    c.quad_extra = static_cast<int>(to_integer(key, v));
  else if (key == "smoothing_delta")
    c.smoothing_delta = to_double(key, v);
  else if (key == "output_dir")
    c.output_dir = v;
  else if (key == "stopping")
    {
      if (v == "adaptive")
        c.stopping = StoppingMode::adaptive;
      else if (v == "standard")
        c.stopping = StoppingMode::standard;
      else
        throw ConfigError("stopping must be adaptive or standard");
    }
  else if (key == "refinement")
    {
      if (v == "adaptive")
        c.refinement = RefinementMode::adaptive;
      else if (v == "uniform")
        c.refinement = RefinementMode::uniform;
      else
        throw ConfigError("refinement must be adaptive or uniform");
    }
  else if (key == "reference_source")
    {
      if (v == "analytic")
        c.reference_source = ReferenceSource::analytic;
      else if (v == "file")
        c.reference_source = ReferenceSource::file;
      else if (v == "none")
        c.reference_source = ReferenceSource::none;
      else
        throw ConfigError("reference_source must be analytic, file or none");
    }
  else if (key == "reference_values")
    c.reference_values = to_list(key, v);
  else if (key == "initial_cell_size")
    c.initial_cell_size = to_double(key, v);
  else if (key == "eta_initial")
    c.eta_initial = to_double(key, v);
  else if (key == "dump_fields")
    c.dump_fields = to_bool(key, v);
  else
    throw ConfigError("unknown key '" + key + "'");
}

Config parse_config(const std::string &text)
{
  std::vector<std::pair<std::string, std::string>> entries;
  std::map<std::string, int>                       seen;
  std::istringstream                               in(text);
  std::string                                      line;
  int                                              lineno = 0;
  std::string                                      preset = "example1_cost";
  while (std::getline(in, line))
    {
      ++lineno;
      line = trim(line.substr(0, line.find('#')));
      if (line.empty())
        continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (seen[key]++)
        throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      if (key == "preset")
        preset = val;
      else
        entries.emplace_back(key, val);
    }
  Config c = preset_config(preset);
  for (const auto &[k, v] : entries)
    set_config_value(c, k, v);
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path &file)
{
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const Config &c)
{
  std::ostringstream o;
  o << "preset = " << c.preset << '\n'
    << "alpha = " << number(c.alpha) << '\n'
    << "p = " << number(c.p) << '\n'
    << "epsilon = " << number(c.epsilon) << '\n'
    << "degree = " << c.degree << '\n'
    << "control_degree = " << c.control_degree << '\n'
    << "enriched_degree = " << c.enriched_degree << '\n'
    << "gamma = " << number(c.gamma) << '\n'
    << "theta = " << number(c.theta) << '\n'
    << "tol_dis = " << number(c.tol_dis) << '\n'
    << "max_levels = " << c.max_levels << '\n'
    << "max_state_dofs = " << c.max_state_dofs << '\n'
    << "max_total_dofs = " << c.max_total_dofs << '\n'
    << "newton_tol_abs = " << number(c.newton_tol_abs) << '\n'
    << "newton_tol_rel = " << number(c.newton_tol_rel) << '\n'
    << "enriched_newton_tol = " << number(c.enriched_newton_tol) << '\n'
    << "krylov_tol = " << number(c.krylov_tol) << '\n'
    << "quad_extra = " << c.quad_extra << '\n'
    << "smoothing_delta = " << number(c.smoothing_delta) << '\n'
    << "output_dir = " << c.output_dir << '\n'
    << "stopping = " << name_of(c.stopping) << '\n'
    << "refinement = " << name_of(c.refinement) << '\n'
    << "reference_source = " << name_of(c.reference_source) << '\n';
  if (!c.reference_values.empty())
    {
      o << "reference_values = ";
      for (std::size_t i = 0; i < c.reference_values.size(); ++i)
        o << (i ? ", " : "") << number(c.reference_values[i]);
      o << '\n';
    }
  o << "initial_cell_size = " << number(c.initial_cell_size) << '\n'
    << "eta_initial = " << number(c.eta_initial) << '\n'
    << "dump_fields = " << (c.dump_fields ? "true" : "false") << '\n';
  return o.str();
}

ProblemDefinition make_problem(const Config &c)
{
  ProblemDefinition P = c.preset.rfind("example1", 0) == 0 ?
                          make_poisson_control(c.alpha) :
                          make_plaplace_control(c.alpha, c.p, c.epsilon);
  if (c.initial_cell_size > 0.)
    P.initial_cell_size = c.initial_cell_size;
  return P;
}

std::vector<GoalFunctional> make_config_goals(const Config &c, const ProblemDefinition &P)
{
  std::vector<GoalFunctional> goals = make_goals(c.preset, P, c.smoothing_delta);
  switch (c.reference_source)
    {
      case ReferenceSource::analytic:
        break;
      case ReferenceSource::none:
        for (auto &g : goals)
          g.reference.reset();
        break;
      case ReferenceSource::file:
        if (c.reference_values.size() != goals.size())
          throw ConfigError("reference_values has " + std::to_string(c.reference_values.size()) +
                            " entries, the preset has " + std::to_string(goals.size()) +
                            " goals");
        for (std::size_t i = 0; i < goals.size(); ++i)
          goals[i].reference = c.reference_values[i];
        break;
    }
  return goals;
}

} // namespace dwropt
