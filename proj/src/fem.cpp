#include <dwropt/fem.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace dwropt
{
namespace
{
/// Local node indices lying on a face.
std::vector<int> face_nodes(int degree, int face)
{
  const int        n = degree + 1;
  std::vector<int> out;
  for (int k = 0; k < n; ++k)
    switch (face)
      {
        case 0:
          out.push_back(k * n);
          break;
        case 1:
          out.push_back(k * n + degree);
          break;
        case 2:
          out.push_back(k);
          break;
        default:
          out.push_back(degree * n + k);
          break;
      }
  return out;
}
} // namespace

Space::Space(std::shared_ptr<const Mesh> mesh, Family family, int degree, bool dirichlet)
  : mesh_(std::move(mesh))
  , family_(family)
  , degree_(degree)
  , dirichlet_(dirichlet)
{
  if (degree < (family == Family::discontinuous ? 0 : 1) || degree > 3)
    throw FemError("unsupported polynomial degree " + std::to_string(degree));
  if (family == Family::discontinuous && dirichlet)
    throw FemError("discontinuous spaces carry no Dirichlet constraints");
  if (family == Family::continuous)
    build_continuous();
  else
    build_discontinuous();
}

void Space::build_discontinuous()
{
  const int   npc = dofs_per_cell();
  const auto &m   = *mesh_;
  n_dofs_         = m.n_active() * npc;
  n_free_         = n_dofs_;
  cell_dofs_.resize(n_dofs_);
  nodes_.resize(n_dofs_);
  for (std::size_t a = 0; a < m.n_active(); ++a)
    {
      const Cell &c = m.cell(m.active_cells()[a]);
      for (int i = 0; i < npc; ++i)
        {
          const int d       = static_cast<int>(a * npc + i);
          cell_dofs_[d]     = d;
          nodes_[d]         = c.origin + c.size * reference_node(degree_, i);
        }
    }
  offsets_.resize(n_dofs_ + 1);
  entries_.resize(n_dofs_);
  free_index_.resize(n_dofs_);
  for (std::size_t d = 0; d < n_dofs_; ++d)
    {
      offsets_[d]    = static_cast<int>(d);
      entries_[d]    = {static_cast<int>(d), 1.};
      free_index_[d] = static_cast<int>(d);
    }
  offsets_[n_dofs_] = static_cast<int>(n_dofs_);
}

void Space::build_continuous()
{
  const int   npc = dofs_per_cell();
  const auto &m   = *mesh_;
  cell_dofs_.resize(m.n_active() * npc);

  std::unordered_map<std::uint64_t, int> lookup;
  for (std::size_t a = 0; a < m.n_active(); ++a)
    {
      const Cell &c = m.cell(m.active_cells()[a]);
      for (int i = 0; i < npc; ++i)
        {
          const Vec2 x   = c.origin + c.size * reference_node(degree_, i);
          auto [it, ins] = lookup.try_emplace(m.coordinate_key(x),
                                              static_cast<int>(nodes_.size()));
          if (ins)
            nodes_.push_back(x);
          cell_dofs_[a * npc + i] = it->second;
        }
    }
  n_dofs_ = nodes_.size();

  enum Kind : char
  {
    free_dof,
    dirichlet_dof,
    hanging_dof
  };
  std::vector<char>                                       kind(n_dofs_, free_dof);
  std::vector<std::vector<std::pair<int, double>>>        masters(n_dofs_);

  std::vector<std::vector<int>> on_face(4);
  for (int f = 0; f < 4; ++f)
    on_face[f] = face_nodes(degree_, f);

  for (std::size_t a = 0; a < m.n_active(); ++a)
    {
      const int   id = m.active_cells()[a];
      const Cell &c  = m.cell(id);
      for (int f = 0; f < 4; ++f)
        {
          const auto nb = m.face_neighbors(id, f);
          if (nb.empty())
            {
              if (dirichlet_)
                for (int i : on_face[f])
                  kind[cell_dofs_[a * npc + i]] = dirichlet_dof;
              continue;
            }
          if (nb.size() != 1 || m.cell(nb[0]).level != c.level - 1)
            continue;
          const Cell &coarse  = m.cell(nb[0]);
          const auto  cdofs   = cell_dofs(static_cast<std::size_t>(m.active_index(nb[0])));
          const auto &cnodes  = on_face[f ^ 1];
          const bool  along_y = f < 2;
          for (int i : on_face[f])
            {
              const int d = cell_dofs_[a * npc + i];
              if (kind[d] != free_dof)
                continue;
              bool coincides = false;
              for (int k : cnodes)
                coincides = coincides || cdofs[k] == d;
              if (coincides)
                continue;
              const double t =
                along_y ? (nodes_[d].y() - coarse.origin.y()) / coarse.size :
                          (nodes_[d].x() - coarse.origin.x()) / coarse.size;
              kind[d] = hanging_dof;
              for (int k = 0; k <= degree_; ++k)
                {
                  const double w = lagrange_1d(degree_, k, t);
                  if (std::abs(w) > 1e-14)
                    masters[d].emplace_back(cdofs[cnodes[k]], w);
                }
            }
        }
    }

  free_index_.assign(n_dofs_, -1);
  for (std::size_t d = 0; d < n_dofs_; ++d)
    {
      if (kind[d] == free_dof)
        free_index_[d] = static_cast<int>(n_free_++);
      else if (kind[d] == dirichlet_dof)
        ++n_dirichlet_;
      else
        ++n_hanging_;
    }

  // Resolve chains of hanging constraints.
  std::vector<std::vector<Entry>> expanded(n_dofs_);
  std::vector<char>               state(n_dofs_, 0);
  std::function<const std::vector<Entry> &(int)> resolve =
    [&](int d) -> const std::vector<Entry> & {
    if (state[d] == 2)
      return expanded[d];
    if (state[d] == 1)
      throw FemError("cyclic hanging-node constraints");
    state[d] = 1;
    std::vector<Entry> e;
    if (kind[d] == free_dof)
      e.push_back({free_index_[d], 1.});
    else if (kind[d] == hanging_dof)
      {
        std::map<int, double> acc;
        for (auto [md, w] : masters[d])
          for (const Entry &me : resolve(md))
            acc[me.free] += w * me.weight;
        for (auto [j, w] : acc)
          if (std::abs(w) > 1e-14)
            e.push_back({j, w});
      }
    expanded[d] = std::move(e);
    state[d]    = 2;
    return expanded[d];
  };

  offsets_.resize(n_dofs_ + 1);
  offsets_[0] = 0;
  for (std::size_t d = 0; d < n_dofs_; ++d)
    {
      const auto &e = resolve(static_cast<int>(d));
      entries_.insert(entries_.end(), e.begin(), e.end());
      offsets_[d + 1] = static_cast<int>(entries_.size());
    }
}

Eigen::VectorXd Space::distribute(const Eigen::VectorXd &free) const
{
  if (free.size() != static_cast<Eigen::Index>(n_free_))
    throw FemError("free vector does not match the space");
  Eigen::VectorXd full(n_dofs_);
  for (std::size_t d = 0; d < n_dofs_; ++d)
    {
      double s = 0.;
      for (const Entry &e : expansion(static_cast<int>(d)))
        s += e.weight * free[e.free];
      full[d] = s;
    }
  return full;
}

Eigen::VectorXd Space::restrict_free(const Eigen::VectorXd &full) const
{
  if (full.size() != static_cast<Eigen::Index>(n_dofs_))
    throw FemError("full vector does not match the space");
  Eigen::VectorXd free(n_free_);
  for (std::size_t d = 0; d < n_dofs_; ++d)
    if (free_index_[d] >= 0)
      free[free_index_[d]] = full[d];
  return free;
}

Eigen::VectorXd Space::condense(const Eigen::VectorXd &full) const
{
  if (full.size() != static_cast<Eigen::Index>(n_dofs_))
    throw FemError("full vector does not match the space");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_free_);
  for (std::size_t d = 0; d < n_dofs_; ++d)
    for (const Entry &e : expansion(static_cast<int>(d)))
      out[e.free] += e.weight * full[d];
  return out;
}

void Space::apply_constraints(Eigen::VectorXd &full) const
{
  full = distribute(restrict_free(full));
}

std::string Space::signature() const
{
  std::ostringstream s;
  s << (family_ == Family::continuous ? "continuous" : "discontinuous")
    << " degree " << degree_ << " dofs " << n_dofs_ << " free " << n_free_
    << " cells " << mesh_->n_active() << " mesh " << mesh_->lineage() << ':'
    << mesh_->generation();
  return s.str();
}

SpacePtr make_space(std::shared_ptr<const Mesh> mesh, Family family, int degree, bool dirichlet)
{
  return std::make_shared<const Space>(std::move(mesh), family, degree, dirichlet);
}

std::pair<double, Vec2> DiscreteFunction::evaluate(std::size_t active_position,
                                                    const Vec2 &ref) const
{
  const Space &s    = *space;
  const int    r    = s.degree();
  const auto   dofs = s.cell_dofs(active_position);
  const double h    = s.mesh().cell(s.mesh().active_cells()[active_position]).size;
  double       v    = 0.;
  Vec2         g    = Vec2::Zero();
  for (int i = 0; i < s.dofs_per_cell(); ++i)
    {
      const int    ix = i % (r + 1), iy = i / (r + 1);
      const double lx = lagrange_1d(r, ix, ref.x());
      const double ly = lagrange_1d(r, iy, ref.y());
      const double c  = values[dofs[i]];
      v += c * lx * ly;
      g += c * Vec2(lagrange_1d_derivative(r, ix, ref.x()) * ly,
                    lx * lagrange_1d_derivative(r, iy, ref.y()));
    }
  return {v, g / h};
}

namespace
{
/// Checks that target's mesh is the source mesh or one of its refinements.
void check_nested(const Mesh &src, const Mesh &dst)
{
  if (src.generation_id() == dst.generation_id())
    return;
  if (src.lineage() != dst.lineage() || src.generation() > dst.generation() ||
      src.cells().size() > dst.cells().size())
    throw FemError("transfer between unrelated meshes");
  for (std::size_t i = 0; i < src.cells().size(); ++i)
    {
      const Cell &a = src.cells()[i];
      const Cell &b = dst.cells()[i];
      if (a.size != b.size || a.origin != b.origin)
        throw FemError("transfer between unrelated meshes");
    }
}
} // namespace

DiscreteFunction transfer(const DiscreteFunction &f, SpacePtr target)
{
  const Mesh &src = f.space->mesh();
  const Mesh &dst = target->mesh();
  check_nested(src, dst);
  DiscreteFunction out(target);
  const int        npc = target->dofs_per_cell();
  const int        nsrc = static_cast<int>(src.cells().size());
  for (std::size_t a = 0; a < dst.n_active(); ++a)
    {
      int c = dst.active_cells()[a];
      while (c >= 0 && !(c < nsrc && src.is_active(c)))
        c = dst.cell(c).parent;
      if (c < 0)
        throw FemError("transfer between unrelated meshes");
      const Cell &sc   = src.cell(c);
      const auto  sa   = static_cast<std::size_t>(src.active_index(c));
      const auto  dofs = target->cell_dofs(a);
      for (int i = 0; i < npc; ++i)
        {
          const Vec2 ref = (target->node(dofs[i]) - sc.origin) / sc.size;
          out.values[dofs[i]] = f.evaluate(sa, ref).first;
        }
    }
  if (target->family() == Family::continuous)
    target->apply_constraints(out.values);
  return out;
}

DiscreteFunction interpolate(SpacePtr space, const std::function<double(const Vec2 &)> &fn)
{
  DiscreteFunction out(space);
  for (std::size_t d = 0; d < space->n_dofs(); ++d)
    out.values[d] = fn(space->node(static_cast<int>(d)));
  if (space->family() == Family::continuous)
    space->apply_constraints(out.values);
  return out;
}

void check_region_alignment(const Mesh &mesh, const Region &region)
{
  if (region.whole)
    return;
  const Box &b = region.box;
  for (int id : mesh.active_cells())
    {
      const Cell  &c  = mesh.cell(id);
      const double ox = std::max(0., std::min(c.origin.x() + c.size, b.x1) -
                                       std::max(c.origin.x(), b.x0));
      const double oy = std::max(0., std::min(c.origin.y() + c.size, b.y1) -
                                       std::max(c.origin.y(), b.y0));
      const double frac = ox * oy / (c.size * c.size);
      if (frac > 1e-12 && frac < 1. - 1e-12)
        throw FemError("integration region cuts cell " + std::to_string(id));
    }
}

Integral integrate(const std::vector<const DiscreteFunction *> &functions,
                   const PointIntegrand                        &integrand,
                   const Region                                &region,
                   const Mesh                                  &mesh,
                   int                                          quad_extra)
{
  check_region_alignment(mesh, region);
  int max_degree = 1;
  for (const auto *f : functions)
    {
      if (f->space->mesh().generation_id() != mesh.generation_id())
        throw FemError("integrand function lives on another mesh");
      max_degree = std::max(max_degree, f->space->degree());
    }
  const int                        nq1 = max_degree + 1 + quad_extra;
  std::vector<const ShapeTable *>  tables;
  for (const auto *f : functions)
    tables.push_back(&shape_table(f->space->degree(), nq1));
  const ShapeTable &geo = shape_table(1, nq1);

  Integral            out;
  bool                any = false;
  std::vector<double> vals(functions.size());
  for (std::size_t a = 0; a < mesh.n_active(); ++a)
    {
      const Cell &c = mesh.cell(mesh.active_cells()[a]);
      if (!region.contains(c.center()))
        continue;
      any = true;
      const double h2 = c.size * c.size;
      for (int q = 0; q < geo.n_points; ++q)
        {
          for (std::size_t k = 0; k < functions.size(); ++k)
            {
              const ShapeTable &t    = *tables[k];
              const auto        dofs = functions[k]->space->cell_dofs(a);
              double            v    = 0.;
              for (int i = 0; i < t.n_basis; ++i)
                v += functions[k]->values[dofs[i]] * t.value[q * t.n_basis + i];
              vals[k] = v;
            }
          const Vec2 x = c.origin + c.size * geo.points[q];
          out.value += geo.weights[q] * h2 * integrand(x, vals);
        }
    }
  out.region_empty = !any;
  return out;
}

void write_function_dump(const DiscreteFunction &f, std::ostream &out)
{
  out << "dwrfun v1\n" << f.space->signature() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < f.values.size(); ++i)
    {
      std::snprintf(buf, sizeof buf, "%.17g\n", f.values[i]);
      out << buf;
    }
}

std::pair<std::string, Eigen::VectorXd> read_function_dump(std::istream &in)
{
  std::string line, sig;
  if (!std::getline(in, line) || line != "dwrfun v1" || !std::getline(in, sig))
    throw FemError("missing dwrfun v1 header");
  std::vector<double> v;
  while (std::getline(in, line))
    if (!line.empty())
      v.push_back(std::strtod(line.c_str(), nullptr));
  return {sig, Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))};
}

} // namespace dwropt
