#pragma once

#include <dwropt/mesh.hpp>
#include <dwropt/quadrature.hpp>

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwropt
{
class FemError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class Family
{
  continuous,
  discontinuous
};

/// Lagrange space of one degree on one mesh generation.
///
/// Every DOF d expands into free DOFs as x_d = sum_k w_k x_free[j_k].
/// Unconstrained DOFs map to themselves, Dirichlet DOFs have an empty
/// expansion (homogeneous data only) and hanging DOFs carry the interpolation
/// weights of the coarse edge, resolved recursively.
class Space
{
public:
  Space(std::shared_ptr<const Mesh> mesh,
        Family                      family,
        int                         degree,
        bool                        dirichlet);

  const Mesh                       &mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh> &mesh_ptr() const { return mesh_; }
  Family family() const { return family_; }
  int    degree() const { return degree_; }
  bool   dirichlet() const { return dirichlet_; }

  std::size_t n_dofs() const { return n_dofs_; }
  std::size_t n_free() const { return n_free_; }
  int         dofs_per_cell() const { return (degree_ + 1) * (degree_ + 1); }

  /// Global DOFs of the active cell at a position in mesh().active_cells().
  std::span<const int> cell_dofs(std::size_t active_position) const
  {
    return {cell_dofs_.data() + active_position * dofs_per_cell(),
            static_cast<std::size_t>(dofs_per_cell())};
  }

  struct Entry
  {
    int    free;
    double weight;
  };
  std::span<const Entry> expansion(int dof) const
  {
    return {entries_.data() + offsets_[dof],
            static_cast<std::size_t>(offsets_[dof + 1] - offsets_[dof])};
  }
  /// Free index of an unconstrained DOF, -1 for constrained ones.
  int  free_index(int dof) const { return free_index_[dof]; }
  bool constrained(int dof) const { return free_index_[dof] < 0; }
  std::size_t n_hanging() const { return n_hanging_; }
  std::size_t n_dirichlet() const { return n_dirichlet_; }

  const Vec2 &node(int dof) const { return nodes_[dof]; }

  /// Full DOF vector from free values.
  Eigen::VectorXd distribute(const Eigen::VectorXd &free) const;
  /// Free values of a full vector (constrained entries are dropped).
  Eigen::VectorXd restrict_free(const Eigen::VectorXd &full) const;
  /// Transpose of distribute: folds a vector of DOF functionals into free
  /// functionals.
  Eigen::VectorXd condense(const Eigen::VectorXd &full) const;
  /// Overwrites constrained entries from the unconstrained ones.
  void apply_constraints(Eigen::VectorXd &full) const;

  std::string signature() const;

private:
  void build_continuous();
  void build_discontinuous();

  std::shared_ptr<const Mesh> mesh_;
  Family                      family_;
  int                         degree_;
  bool                        dirichlet_;
  std::size_t                 n_dofs_      = 0;
  std::size_t                 n_free_      = 0;
  std::size_t                 n_hanging_   = 0;
  std::size_t                 n_dirichlet_ = 0;
  std::vector<int>            cell_dofs_;
  std::vector<Vec2>           nodes_;
  std::vector<int>            offsets_;
  std::vector<Entry>          entries_;
  std::vector<int>            free_index_;
};

using SpacePtr = std::shared_ptr<const Space>;

SpacePtr make_space(std::shared_ptr<const Mesh> mesh,
                    Family                      family,
                    int                         degree,
                    bool                        dirichlet = false);

/// Coefficient vector over all DOFs of a space.
struct DiscreteFunction
{
  SpacePtr        space;
  Eigen::VectorXd values;

  DiscreteFunction() = default;
  explicit DiscreteFunction(SpacePtr s)
    : space(std::move(s))
    , values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->n_dofs())))
  {}
  DiscreteFunction(SpacePtr s, Eigen::VectorXd v)
    : space(std::move(s))
    , values(std::move(v))
  {
    if (values.size() != static_cast<Eigen::Index>(space->n_dofs()))
      throw FemError("coefficient vector does not match the space");
  }

  static DiscreteFunction from_free(SpacePtr s, const Eigen::VectorXd &free)
  {
    auto full = s->distribute(free);
    return {std::move(s), std::move(full)};
  }
  Eigen::VectorXd free_values() const { return space->restrict_free(values); }

  /// Value and gradient at a point of an active cell, by active position.
  std::pair<double, Vec2> evaluate(std::size_t active_position,
                                   const Vec2 &reference_point) const;
  double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.; }
};

/// Nodal interpolation into a space on the same mesh or on a refinement of it.
DiscreteFunction transfer(const DiscreteFunction &f, SpacePtr target);

/// Nodal interpolation of an analytic function.
DiscreteFunction interpolate(SpacePtr space, const std::function<double(const Vec2 &)> &fn);

/// Integration domain: the whole mesh or the part inside a box.
struct Region
{
  bool whole = true;
  Box  box;

  static Region everywhere() { return {}; }
  static Region inside(const Box &b) { return {false, b}; }
  bool contains(const Vec2 &p) const { return whole || box.contains(p); }
};

/// Fails with FemError if a box edge cuts an active cell.
void check_region_alignment(const Mesh &mesh, const Region &region);

struct Integral
{
  double value        = 0.;
  bool   region_empty = false;
};

/// Pointwise integrand of function values at a point.
using PointIntegrand =
  std::function<double(const Vec2 &x, std::span<const double> values)>;

/// Quadrature of an expression of functions living on one mesh generation.
/// The rule uses (max degree + 1 + quad_extra) points per direction.
Integral integrate(const std::vector<const DiscreteFunction *> &functions,
                   const PointIntegrand                        &integrand,
                   const Region                                &region,
                   const Mesh                                  &mesh,
                   int                                          quad_extra = 1);

void             write_function_dump(const DiscreteFunction &f, std::ostream &out);
/// Returns the signature line and the coefficients.
std::pair<std::string, Eigen::VectorXd> read_function_dump(std::istream &in);

} // namespace dwropt
