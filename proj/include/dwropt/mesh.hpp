#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dwropt
{
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Thrown for cell sizes that do not fit the domain, bad refinement requests
/// and malformed dumps.
class MeshError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Closed axis-aligned box. Infinite extents are allowed.
struct Box
{
  double x0 = -std::numeric_limits<double>::infinity();
  double y0 = -std::numeric_limits<double>::infinity();
  double x1 = std::numeric_limits<double>::infinity();
  double y1 = std::numeric_limits<double>::infinity();

  bool contains(const Vec2 &p) const
  {
    return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
  }
};

enum class DomainKind
{
  unit_square,
  holed_channel
};

/// Rectangle with square holes cut out.
struct Domain
{
  DomainKind        kind = DomainKind::unit_square;
  Box               bounds{0., 0., 1., 1.};
  std::vector<Box>  holes;

  static Domain unit_square();
  /// The 7x5 channel with six unit holes.
  static Domain holed_channel();

  double area() const;
  bool   inside(const Vec2 &p) const;
  std::string name() const;
};

/// Boundary tags for cell faces.
enum BoundaryTag : int
{
  interior_face = 0,
  outer_face    = 1,
  hole_face     = 2
};

/// Quadtree node. Children and vertices use lexicographic order
/// (0,0), (1,0), (0,1), (1,1). Faces are 0 left, 1 right, 2 bottom, 3 top.
struct Cell
{
  Vec2               origin = Vec2::Zero();
  double             size   = 0.;
  int                level  = 0;
  int                parent = -1;
  std::array<int, 4> children{-1, -1, -1, -1};
  std::array<int, 4> vertices{-1, -1, -1, -1};

  bool active() const { return children[0] < 0; }
  Vec2 center() const { return origin + Vec2(0.5 * size, 0.5 * size); }
};

/// Set of active cells of one particular mesh generation.
struct CellSet
{
  std::uint64_t    generation_id = 0;
  std::vector<int> cells;
};

/// Quadtree mesh over a structured root grid. A mesh object never changes
/// after construction; refine() returns a new generation in which all cell
/// indices of the old one are kept.
class Mesh
{
public:
  static Mesh build_initial(const Domain &domain, double cell_size);

  /// Splits marked cells and closes the result to a 1-irregular mesh.
  Mesh refine(const CellSet &marked) const;
  Mesh refine_all() const;

  const Domain             &domain() const { return domain_; }
  const std::vector<Cell>  &cells() const { return cells_; }
  const std::vector<Vec2>  &vertices() const { return vertices_; }
  const Cell               &cell(int id) const { return cells_[id]; }

  /// Active cell ids, ascending.
  const std::vector<int> &active_cells() const { return active_; }
  std::size_t             n_active() const { return active_.size(); }
  /// Position of a cell id in active_cells(), or -1.
  int active_index(int cell_id) const
  {
    return cell_id < static_cast<int>(active_index_.size()) ?
             active_index_[cell_id] :
             -1;
  }
  bool is_active(int cell_id) const { return active_index(cell_id) >= 0; }

  /// Active cells across one face of an active cell.
  std::vector<int> face_neighbors(int cell_id, int face) const;
  int              boundary_tag(int cell_id, int face) const;

  CellSet make_cell_set(std::vector<int> cell_ids) const;
  /// Cell set from positions in active_cells().
  CellSet cell_set_from_active(std::span<const std::size_t> positions) const;

  double root_size() const { return root_size_; }
  int    max_level() const { return max_level_; }
  /// Length unit for exact coordinate keys.
  double key_unit() const { return root_size_ / key_scale_; }
  double key_scale() const { return key_scale_; }
  std::uint64_t coordinate_key(const Vec2 &p) const;

  std::uint64_t lineage() const { return lineage_; }
  int           generation() const { return generation_; }
  std::uint64_t generation_id() const { return generation_id_; }

  double active_area() const;
  /// Largest level difference over edge-adjacent active pairs.
  int max_level_gap() const;

private:
  Mesh() = default;

  void split(int cell_id);
  int  vertex_at(const Vec2 &p);
  void finalize();
  void query_box(int cell_id, const Box &box, std::vector<int> &out) const;

  Domain                                   domain_;
  std::vector<Cell>                        cells_;
  std::vector<Vec2>                        vertices_;
  std::unordered_map<std::uint64_t, int>   vertex_lookup_;
  std::vector<int>                         active_;
  std::vector<int>                         active_index_;
  std::vector<int>                         root_grid_;
  int                                      nx_ = 0, ny_ = 0;
  double                                   root_size_ = 1.;
  double                                   key_scale_ = 1.;
  int                                      max_level_ = 0;
  std::uint64_t                            lineage_       = 0;
  int                                      generation_    = 0;
  std::uint64_t                            generation_id_ = 0;
};

/// Minimal set of positions whose indicator sum reaches theta times the total.
/// Ties go to the larger indicator, then to the smaller position.
std::vector<std::size_t> dorfler_mark(std::span<const double> indicators,
                                      double                  theta);

/// Parsed form of the text mesh dump.
struct MeshDump
{
  struct CellLine
  {
    int                level;
    std::array<int, 4> vertices;
  };
  struct BoundaryLine
  {
    int cell;
    int face;
    int tag;
  };
  std::vector<Vec2>         vertices;
  std::vector<CellLine>     cells;
  std::vector<BoundaryLine> boundary;

  bool operator==(const MeshDump &other) const;
};

MeshDump mesh_dump(const Mesh &mesh);
void     write_mesh_dump(const MeshDump &dump, std::ostream &out);
MeshDump read_mesh_dump(std::istream &in);

} // namespace dwropt
