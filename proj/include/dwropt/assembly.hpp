#pragma once

#include <dwropt/fem.hpp>

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dwropt
{
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Value and gradient of a coefficient function at a quadrature point.
struct FieldValue
{
  double value = 0.;
  Vec2   grad  = Vec2::Zero();
};

/// Everything a kernel sees at one quadrature point.
struct PointData
{
  Vec2              x;
  double            JxW = 0.;
  int               cell = -1;
  const FieldValue *fields = nullptr;

  const FieldValue &operator[](std::size_t k) const { return fields[k]; }
};

/// Integrand c0 * phi + c1 . grad phi for a test function phi.
struct LinearDensity
{
  double c0 = 0.;
  Vec2   c1 = Vec2::Zero();
};

/// Integrand mass * phi_j * psi_i + grad psi_i^T stiffness grad phi_j.
struct BilinearDensity
{
  double mass      = 0.;
  Mat2   stiffness = Mat2::Zero();
};

/// Worker count from DWROPT_THREADS (0 or unset means hardware concurrency).
int assembly_threads();

/// Splits [0, n) into contiguous chunks, one per worker, and runs fn(begin,
/// end, chunk) on each. Chunk results are meant to be merged in chunk order.
template <class Fn>
void parallel_chunks(std::size_t n, int workers, Fn &&fn)
{
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n / 64) + 1));
  if (workers == 1)
    {
      fn(std::size_t{0}, n, 0);
      return;
    }
  std::vector<std::thread>        pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t               per = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w)
    {
      const std::size_t b = std::min(n, w * per), e = std::min(n, b + per);
      pool.emplace_back([&fn, &errors, b, e, w] {
        try
          {
            fn(b, e, w);
          }
        catch (...)
          {
            errors[w] = std::current_exception();
          }
      });
    }
  for (auto &t : pool)
    t.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

/// Quadrature and shape data shared by the assembly loops.
class CellIntegrator
{
public:
  CellIntegrator(const Mesh                                  &mesh,
                 std::vector<const Space *>                   spaces,
                 const std::vector<const DiscreteFunction *> &fields,
                 int                                          quad_extra);

  int n_points() const { return geo_->n_points; }
  std::size_t n_fields() const { return fields_.size(); }
  const ShapeTable &table(std::size_t space) const { return *space_tables_[space]; }

  /// Fills quadrature points, weights and field values for one cell.
  void reinit(std::size_t active_position,
              std::vector<Vec2>       &x,
              std::vector<double>     &JxW,
              std::vector<FieldValue> &values) const;

  const Mesh &mesh() const { return mesh_; }

private:
  const Mesh                                 &mesh_;
  std::vector<const DiscreteFunction *>       fields_;
  const ShapeTable                           *geo_ = nullptr;
  std::vector<const ShapeTable *>             field_tables_;
  std::vector<const ShapeTable *>             space_tables_;
};

[[noreturn]] void throw_non_finite(int cell);

/// Assembles the free-DOF vector of  sum_cells int density(x) . (phi, grad phi)
/// over the test space.
template <class Kernel>
Eigen::VectorXd assemble_vector(const Space                                 &test,
                                const std::vector<const DiscreteFunction *> &fields,
                                int                                          quad_extra,
                                Kernel                                     &&kernel)
{
  const Mesh          &mesh = test.mesh();
  const CellIntegrator ci(mesh, {&test}, fields, quad_extra);
  const ShapeTable    &t   = ci.table(0);
  const int            npc = test.dofs_per_cell();
  const int            nq  = ci.n_points();
  const std::size_t    nf  = ci.n_fields();

  const int                    workers = assembly_threads();
  std::vector<Eigen::VectorXd> partial(std::max(1, workers));
  parallel_chunks(mesh.n_active(), workers, [&](std::size_t b, std::size_t e, int w) {
    Eigen::VectorXd        &acc = partial[w];
    acc                          = Eigen::VectorXd::Zero(test.n_dofs());
    std::vector<Vec2>       x;
    std::vector<double>     JxW;
    std::vector<FieldValue> vals;
    std::vector<double>     local(npc);
    for (std::size_t a = b; a < e; ++a)
      {
        ci.reinit(a, x, JxW, vals);
        const int    cell = mesh.active_cells()[a];
        const double hinv = 1. / mesh.cell(cell).size;
        std::fill(local.begin(), local.end(), 0.);
        for (int q = 0; q < nq; ++q)
          {
            const PointData     pd{x[q], JxW[q], cell, vals.data() + q * nf};
            const LinearDensity d = kernel(pd);
            if (!std::isfinite(d.c0) || !std::isfinite(d.c1.x()) ||
                !std::isfinite(d.c1.y()))
              throw_non_finite(cell);
            const double c0 = d.c0 * JxW[q];
            const Vec2   c1 = d.c1 * (JxW[q] * hinv);
            for (int i = 0; i < npc; ++i)
              local[i] += c0 * t.value[q * npc + i] + c1.dot(t.grad[q * npc + i]);
          }
        const auto dofs = test.cell_dofs(a);
        for (int i = 0; i < npc; ++i)
          acc[dofs[i]] += local[i];
      }
  });
  Eigen::VectorXd full = Eigen::VectorXd::Zero(test.n_dofs());
  for (auto &p : partial)
    if (p.size())
      full += p;
  return test.condense(full);
}

/// Assembles the free-DOF matrix A[i][j] = int density(psi_i, phi_j) with
/// rows from the test space and columns from the trial space.
template <class Kernel>
SparseMatrix assemble_matrix(const Space                                 &test,
                             const Space                                 &trial,
                             const std::vector<const DiscreteFunction *> &fields,
                             int                                          quad_extra,
                             Kernel                                     &&kernel)
{
  const Mesh &mesh = test.mesh();
  if (trial.mesh().generation_id() != mesh.generation_id())
    throw FemError("test and trial spaces live on different meshes");
  const CellIntegrator ci(mesh, {&test, &trial}, fields, quad_extra);
  const ShapeTable    &tt  = ci.table(0);
  const ShapeTable    &tr  = ci.table(1);
  const int            nte = test.dofs_per_cell();
  const int            ntr = trial.dofs_per_cell();
  const int            nq  = ci.n_points();
  const std::size_t    nf  = ci.n_fields();

  using Triplet               = Eigen::Triplet<double, int>;
  const int workers           = assembly_threads();
  std::vector<std::vector<Triplet>> partial(std::max(1, workers));
  parallel_chunks(mesh.n_active(), workers, [&](std::size_t b, std::size_t e, int w) {
    auto                   &trips = partial[w];
    std::vector<Vec2>       x;
    std::vector<double>     JxW;
    std::vector<FieldValue> vals;
    Eigen::MatrixXd         local(nte, ntr);
    std::vector<Vec2>       gtr(ntr);
    for (std::size_t a = b; a < e; ++a)
      {
        ci.reinit(a, x, JxW, vals);
        const int    cell = mesh.active_cells()[a];
        const double hinv = 1. / mesh.cell(cell).size;
        local.setZero();
        for (int q = 0; q < nq; ++q)
          {
            const PointData       pd{x[q], JxW[q], cell, vals.data() + q * nf};
            const BilinearDensity d = kernel(pd);
            if (!std::isfinite(d.mass) || !d.stiffness.allFinite())
              throw_non_finite(cell);
            const double m = d.mass * JxW[q];
            const Mat2   S = d.stiffness * (JxW[q] * hinv * hinv);
            for (int j = 0; j < ntr; ++j)
              gtr[j] = S * tr.grad[q * ntr + j];
            for (int i = 0; i < nte; ++i)
              {
                const double vi = m * tt.value[q * nte + i];
                const Vec2  &gi = tt.grad[q * nte + i];
                for (int j = 0; j < ntr; ++j)
                  local(i, j) += vi * tr.value[q * ntr + j] + gi.dot(gtr[j]);
              }
          }
        const auto rd = test.cell_dofs(a);
        const auto cd = trial.cell_dofs(a);
        for (int i = 0; i < nte; ++i)
          for (const auto &ei : test.expansion(rd[i]))
            for (int j = 0; j < ntr; ++j)
              for (const auto &ej : trial.expansion(cd[j]))
                trips.emplace_back(ei.free, ej.free, ei.weight * ej.weight * local(i, j));
      }
  });
  std::size_t total = 0;
  for (auto &p : partial)
    total += p.size();
  std::vector<Triplet> all;
  all.reserve(total);
  for (auto &p : partial)
    all.insert(all.end(), p.begin(), p.end());
  SparseMatrix A(static_cast<int>(test.n_free()), static_cast<int>(trial.n_free()));
  A.setFromTriplets(all.begin(), all.end());
  return A;
}

/// Sum over cells of int kernel(x) dx.
template <class Kernel>
double integrate_density(const Mesh                                  &mesh,
                         const std::vector<const DiscreteFunction *> &fields,
                         int                                          quad_extra,
                         Kernel                                     &&kernel)
{
  const CellIntegrator ci(mesh, {}, fields, quad_extra);
  const int            nq = ci.n_points();
  const std::size_t    nf = ci.n_fields();
  const int            workers = assembly_threads();
  std::vector<double>  partial(std::max(1, workers), 0.);
  parallel_chunks(mesh.n_active(), workers, [&](std::size_t b, std::size_t e, int w) {
    std::vector<Vec2>       x;
    std::vector<double>     JxW;
    std::vector<FieldValue> vals;
    double                  s = 0.;
    for (std::size_t a = b; a < e; ++a)
      {
        ci.reinit(a, x, JxW, vals);
        const int cell = mesh.active_cells()[a];
        for (int q = 0; q < nq; ++q)
          {
            const double v = kernel(PointData{x[q], JxW[q], cell, vals.data() + q * nf});
            if (!std::isfinite(v))
              throw_non_finite(cell);
            s += v * JxW[q];
          }
      }
    partial[w] = s;
  });
  double s = 0.;
  for (double p : partial)
    s += p;
  return s;
}

} // namespace dwropt
