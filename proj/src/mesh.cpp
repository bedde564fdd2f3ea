#include <dwropt/mesh.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace dwropt
{
namespace
{
std::atomic<std::uint64_t> next_lineage{1};
std::atomic<std::uint64_t> next_generation_id{1};

/// Integer quotient a/b when it is one, -1 otherwise.
long exact_ratio(double a, double b)
{
  const double r = a / b;
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-9 * std::max(1., std::abs(r)))
    return -1;
  return static_cast<long>(n);
}

bool overlaps(const Cell &c, const Box &b)
{
  return c.origin.x() < b.x1 && c.origin.x() + c.size > b.x0 &&
         c.origin.y() < b.y1 && c.origin.y() + c.size > b.y0;
}
} // namespace

Domain Domain::unit_square()
{
  Domain d;
  d.kind   = DomainKind::unit_square;
  d.bounds = {0., 0., 1., 1.};
  return d;
}

Domain Domain::holed_channel()
{
  Domain d;
  d.kind   = DomainKind::holed_channel;
  d.bounds = {0., 0., 7., 5.};
  for (double x : {1., 3., 5.})
    for (double y : {1., 3.})
      d.holes.push_back({x, y, x + 1., y + 1.});
  return d;
}

double Domain::area() const
{
  double a = (bounds.x1 - bounds.x0) * (bounds.y1 - bounds.y0);
  for (const Box &h : holes)
    a -= (h.x1 - h.x0) * (h.y1 - h.y0);
  return a;
}

bool Domain::inside(const Vec2 &p) const
{
  if (!bounds.contains(p))
    return false;
  for (const Box &h : holes)
    if (p.x() > h.x0 && p.x() < h.x1 && p.y() > h.y0 && p.y() < h.y1)
      return false;
  return true;
}

std::string Domain::name() const
{
  return kind == DomainKind::unit_square ? "unit_square" : "holed_channel";
}

Mesh Mesh::build_initial(const Domain &domain, double cell_size)
{
  if (!(cell_size > 0.) || !std::isfinite(cell_size))
    throw MeshError("cell size must be positive");
  const long nx = exact_ratio(domain.bounds.x1 - domain.bounds.x0, cell_size);
  const long ny = exact_ratio(domain.bounds.y1 - domain.bounds.y0, cell_size);
  if (nx < 1 || ny < 1)
    throw MeshError("cell size " + std::to_string(cell_size) +
                    " does not divide the domain extents");
  for (const Box &h : domain.holes)
    for (double offset : {h.x0 - domain.bounds.x0,
                          h.x1 - domain.bounds.x0,
                          h.y0 - domain.bounds.y0,
                          h.y1 - domain.bounds.y0})
      if (exact_ratio(offset, cell_size) < 0)
        throw MeshError("cell size " + std::to_string(cell_size) +
                        " does not resolve the holes");

  Mesh m;
  m.domain_    = domain;
  m.root_size_ = cell_size;
  m.nx_        = static_cast<int>(nx);
  m.ny_        = static_cast<int>(ny);

  // Coordinate keys must fit 32 bits per axis; nodes of degree up to 3 sit
  // at sixths of the finest cell.
  const double span = 6. * static_cast<double>(std::max(nx, ny));
  int          bits = static_cast<int>(std::floor(std::log2(4294967296.0 / span))) - 1;
  if (bits < 4)
    throw MeshError("root grid too large");
  m.max_level_ = bits;
  m.key_scale_ = 6. * std::ldexp(1., bits);

  m.lineage_       = next_lineage++;
  m.generation_    = 0;
  m.generation_id_ = next_generation_id++;

  m.root_grid_.assign(static_cast<std::size_t>(nx * ny), -1);
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i)
      {
        Cell c;
        c.origin = Vec2(domain.bounds.x0 + i * cell_size,
                        domain.bounds.y0 + j * cell_size);
        c.size   = cell_size;
        if (!domain.inside(c.center()))
          continue;
        for (int v = 0; v < 4; ++v)
          c.vertices[v] = m.vertex_at(
            c.origin + Vec2((v & 1) * cell_size, (v >> 1) * cell_size));
        m.root_grid_[j * nx + i] = static_cast<int>(m.cells_.size());
        m.cells_.push_back(c);
      }
  if (m.cells_.empty())
    throw MeshError("domain contains no cells");
  m.finalize();
  return m;
}

std::uint64_t Mesh::coordinate_key(const Vec2 &p) const
{
  const double ix =
    std::round((p.x() - domain_.bounds.x0) / root_size_ * key_scale_);
  const double iy =
    std::round((p.y() - domain_.bounds.y0) / root_size_ * key_scale_);
  return (static_cast<std::uint64_t>(ix) << 32) |
         static_cast<std::uint64_t>(iy);
}

int Mesh::vertex_at(const Vec2 &p)
{
  const auto key = coordinate_key(p);
  auto [it, inserted] =
    vertex_lookup_.try_emplace(key, static_cast<int>(vertices_.size()));
  if (inserted)
    vertices_.push_back(p);
  return it->second;
}

void Mesh::split(int cell_id)
{
  const Cell parent = cells_[cell_id];
  if (parent.level + 1 > max_level_)
    throw MeshError("refinement exceeds the maximum level " +
                    std::to_string(max_level_));
  const double h = 0.5 * parent.size;
  for (int k = 0; k < 4; ++k)
    {
      Cell c;
      c.origin = parent.origin + Vec2((k & 1) * h, (k >> 1) * h);
      c.size   = h;
      c.level  = parent.level + 1;
      c.parent = cell_id;
      for (int v = 0; v < 4; ++v)
        c.vertices[v] =
          vertex_at(c.origin + Vec2((v & 1) * h, (v >> 1) * h));
      cells_[cell_id].children[k] = static_cast<int>(cells_.size());
      cells_.push_back(c);
    }
}

void Mesh::finalize()
{
  active_.clear();
  active_index_.assign(cells_.size(), -1);
  for (int i = 0; i < static_cast<int>(cells_.size()); ++i)
    if (cells_[i].active())
      {
        active_index_[i] = static_cast<int>(active_.size());
        active_.push_back(i);
      }
}

void Mesh::query_box(int cell_id, const Box &box, std::vector<int> &out) const
{
  const Cell &c = cells_[cell_id];
  if (!overlaps(c, box))
    return;
  if (c.active())
    {
      out.push_back(cell_id);
      return;
    }
  for (int ch : c.children)
    query_box(ch, box, out);
}

std::vector<int> Mesh::face_neighbors(int cell_id, int face) const
{
  const Cell  &c = cells_[cell_id];
  const double t = std::ldexp(root_size_, -34);
  const double x0 = c.origin.x(), y0 = c.origin.y(), h = c.size;
  Box          b;
  switch (face)
    {
      case 0:
        b = {x0 - t, y0 + t, x0, y0 + h - t};
        break;
      case 1:
        b = {x0 + h, y0 + t, x0 + h + t, y0 + h - t};
        break;
      case 2:
        b = {x0 + t, y0 - t, x0 + h - t, y0};
        break;
      case 3:
        b = {x0 + t, y0 + h, x0 + h - t, y0 + h + t};
        break;
      default:
        throw MeshError("face index out of range");
    }
  const double X0 = domain_.bounds.x0, Y0 = domain_.bounds.y0;
  const int    i0 = std::max(0, static_cast<int>(std::floor((b.x0 - X0) / root_size_)));
  const int    i1 = std::min(nx_ - 1, static_cast<int>(std::floor((b.x1 - X0) / root_size_)));
  const int    j0 = std::max(0, static_cast<int>(std::floor((b.y0 - Y0) / root_size_)));
  const int    j1 = std::min(ny_ - 1, static_cast<int>(std::floor((b.y1 - Y0) / root_size_)));
  std::vector<int> out;
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i)
      {
        const int root = root_grid_[j * nx_ + i];
        if (root >= 0)
          query_box(root, b, out);
      }
  return out;
}

int Mesh::boundary_tag(int cell_id, int face) const
{
  if (!face_neighbors(cell_id, face).empty())
    return interior_face;
  const Cell  &c   = cells_[cell_id];
  const double eps = 1e-12 * root_size_;
  const Box   &B   = domain_.bounds;
  bool         outer = false;
  switch (face)
    {
      case 0:
        outer = std::abs(c.origin.x() - B.x0) < eps;
        break;
      case 1:
        outer = std::abs(c.origin.x() + c.size - B.x1) < eps;
        break;
      case 2:
        outer = std::abs(c.origin.y() - B.y0) < eps;
        break;
      case 3:
        outer = std::abs(c.origin.y() + c.size - B.y1) < eps;
        break;
    }
  return outer ? outer_face : hole_face;
}

CellSet Mesh::make_cell_set(std::vector<int> cell_ids) const
{
  std::sort(cell_ids.begin(), cell_ids.end());
  cell_ids.erase(std::unique(cell_ids.begin(), cell_ids.end()), cell_ids.end());
  for (int id : cell_ids)
    if (!is_active(id))
      throw MeshError("cell " + std::to_string(id) + " is not active");
  return {generation_id_, std::move(cell_ids)};
}

CellSet Mesh::cell_set_from_active(std::span<const std::size_t> positions) const
{
  std::vector<int> ids;
  ids.reserve(positions.size());
  for (std::size_t p : positions)
    {
      if (p >= active_.size())
        throw MeshError("active position out of range");
      ids.push_back(active_[p]);
    }
  return make_cell_set(std::move(ids));
}

Mesh Mesh::refine(const CellSet &marked) const
{
  if (marked.generation_id != generation_id_)
    throw MeshError("cell set belongs to a different mesh generation");
  for (int id : marked.cells)
    if (!is_active(id))
      throw MeshError("marked cell " + std::to_string(id) + " is not active");

  Mesh m           = *this;
  m.generation_    = generation_ + 1;
  m.generation_id_ = next_generation_id++;

  // Coarser neighbours are split first, so the mesh stays 1-irregular after
  // every single split.
  std::vector<int> stack(marked.cells.rbegin(), marked.cells.rend());
  while (!stack.empty())
    {
      const int c = stack.back();
      if (!m.cells_[c].active())
        {
          stack.pop_back();
          continue;
        }
      bool deferred = false;
      for (int f = 0; f < 4; ++f)
        for (int n : m.face_neighbors(c, f))
          if (m.cells_[n].level < m.cells_[c].level)
            {
              stack.push_back(n);
              deferred = true;
            }
      if (deferred)
        continue;
      stack.pop_back();
      m.split(c);
    }
  m.finalize();
  return m;
}

Mesh Mesh::refine_all() const
{
  return refine(make_cell_set(active_));
}

double Mesh::active_area() const
{
  double a = 0.;
  for (int id : active_)
    a += cells_[id].size * cells_[id].size;
  return a;
}

int Mesh::max_level_gap() const
{
  int gap = 0;
  for (int id : active_)
    for (int f = 0; f < 4; ++f)
      for (int n : face_neighbors(id, f))
        gap = std::max(gap, std::abs(cells_[n].level - cells_[id].level));
  return gap;
}

std::vector<std::size_t> dorfler_mark(std::span<const double> indicators,
                                      double                  theta)
{
  if (!(theta > 0. && theta <= 1.))
    throw std::invalid_argument("marking fraction must lie in (0,1]");
  for (double v : indicators)
    if (!std::isfinite(v) || v < 0.)
      throw std::invalid_argument("indicators must be finite and nonnegative");

  std::vector<std::size_t> order(indicators.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return indicators[a] > indicators[b];
  });

  // Summing in the same order as the prefix makes theta = 1 reach the total
  // exactly.
  double total = 0.;
  for (std::size_t i : order)
    total += indicators[i];
  if (total <= 0.)
    return {};

  const double             target = theta * total;
  std::vector<std::size_t> marked;
  double                   sum = 0.;
  for (std::size_t i : order)
    {
      marked.push_back(i);
      sum += indicators[i];
      if (sum >= target)
        break;
    }
  return marked;
}

bool MeshDump::operator==(const MeshDump &o) const
{
  if (vertices.size() != o.vertices.size() || cells.size() != o.cells.size() ||
      boundary.size() != o.boundary.size())
    return false;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].x() != o.vertices[i].x() ||
        vertices[i].y() != o.vertices[i].y())
      return false;
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (cells[i].level != o.cells[i].level ||
        cells[i].vertices != o.cells[i].vertices)
      return false;
  for (std::size_t i = 0; i < boundary.size(); ++i)
    if (boundary[i].cell != o.boundary[i].cell ||
        boundary[i].face != o.boundary[i].face ||
        boundary[i].tag != o.boundary[i].tag)
      return false;
  return true;
}

MeshDump mesh_dump(const Mesh &mesh)
{
  MeshDump d;
  d.vertices = mesh.vertices();
  for (std::size_t a = 0; a < mesh.n_active(); ++a)
    {
      const Cell &c = mesh.cell(mesh.active_cells()[a]);
      d.cells.push_back({c.level, c.vertices});
      for (int f = 0; f < 4; ++f)
        {
          const int tag = mesh.boundary_tag(mesh.active_cells()[a], f);
          if (tag != interior_face)
            d.boundary.push_back({static_cast<int>(a), f, tag});
        }
    }
  return d;
}

void write_mesh_dump(const MeshDump &dump, std::ostream &out)
{
  char buf[128];
  out << "dwrmesh v1\n";
  for (const Vec2 &v : dump.vertices)
    {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v.x(), v.y());
      out << buf;
    }
  for (const auto &c : dump.cells)
    out << "c " << c.level << ' ' << c.vertices[0] << ' ' << c.vertices[1]
        << ' ' << c.vertices[2] << ' ' << c.vertices[3] << '\n';
  for (const auto &b : dump.boundary)
    out << "b " << b.cell << ' ' << b.face << ' ' << b.tag << '\n';
}

MeshDump read_mesh_dump(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line) || line != "dwrmesh v1")
    throw MeshError("missing dwrmesh v1 header");
  MeshDump d;
  int      lineno = 1;
  while (std::getline(in, line))
    {
      ++lineno;
      if (line.empty())
        continue;
      std::istringstream is(line);
      std::string        kind;
      is >> kind;
      bool ok = true;
      if (kind == "v")
        {
          std::string xs, ys;
          ok = static_cast<bool>(is >> xs >> ys);
          if (ok)
            d.vertices.emplace_back(std::strtod(xs.c_str(), nullptr),
                                    std::strtod(ys.c_str(), nullptr));
        }
      else if (kind == "c")
        {
          MeshDump::CellLine c{};
          ok = static_cast<bool>(is >> c.level >> c.vertices[0] >> c.vertices[1] >>
                                 c.vertices[2] >> c.vertices[3]);
          if (ok)
            d.cells.push_back(c);
        }
      else if (kind == "b")
        {
          MeshDump::BoundaryLine b{};
          ok = static_cast<bool>(is >> b.cell >> b.face >> b.tag);
          if (ok)
            d.boundary.push_back(b);
        }
      else
        ok = false;
      if (!ok)
        throw MeshError("malformed mesh dump line " + std::to_string(lineno));
    }
  const int nv = static_cast<int>(d.vertices.size());
  for (const auto &c : d.cells)
    for (int v : c.vertices)
      if (v < 0 || v >= nv)
        throw MeshError("mesh dump cell refers to vertex " + std::to_string(v));
  for (const auto &b : d.boundary)
    if (b.face < 0 || b.face > 3)
      throw MeshError("mesh dump face index out of range");
  return d;
}

} // namespace dwropt
