#include <dwropt/assembly.hpp>

#include <cstdlib>
#include <thread>

namespace dwropt
{
int assembly_threads()
{
  int n = 0;
  if (const char *env = std::getenv("DWROPT_THREADS"))
    n = std::atoi(env);
  if (n <= 0)
    n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

void throw_non_finite(int cell)
{
  throw FemError("non-finite integrand on cell " + std::to_string(cell));
}

CellIntegrator::CellIntegrator(const Mesh                                  &mesh,
                               std::vector<const Space *>                   spaces,
                               const std::vector<const DiscreteFunction *> &fields,
                               int                                          quad_extra)
  : mesh_(mesh)
  , fields_(fields)
{
  int max_degree = 1;
  for (const Space *s : spaces)
    {
      if (s->mesh().generation_id() != mesh.generation_id())
        throw FemError("space lives on another mesh generation");
      max_degree = std::max(max_degree, s->degree());
    }
  for (const DiscreteFunction *f : fields_)
    {
      if (f->space->mesh().generation_id() != mesh.generation_id())
        throw FemError("coefficient function lives on another mesh generation");
      max_degree = std::max(max_degree, f->space->degree());
    }
  const int n1 = max_degree + 1 + std::max(0, quad_extra);
  geo_         = &shape_table(1, n1);
  for (const Space *s : spaces)
    space_tables_.push_back(&shape_table(s->degree(), n1));
  for (const DiscreteFunction *f : fields_)
    field_tables_.push_back(&shape_table(f->space->degree(), n1));
}

void CellIntegrator::reinit(std::size_t              a,
                            std::vector<Vec2>       &x,
                            std::vector<double>     &JxW,
                            std::vector<FieldValue> &values) const
{
  const Cell &c  = mesh_.cell(mesh_.active_cells()[a]);
  const int   nq = geo_->n_points;
  const auto  nf = fields_.size();
  x.resize(nq);
  JxW.resize(nq);
  values.resize(nq * nf);
  const double h2 = c.size * c.size, hinv = 1. / c.size;
  for (int q = 0; q < nq; ++q)
    {
      x[q]   = c.origin + c.size * geo_->points[q];
      JxW[q] = geo_->weights[q] * h2;
    }
  for (std::size_t k = 0; k < nf; ++k)
    {
      const ShapeTable &t    = *field_tables_[k];
      const auto        dofs = fields_[k]->space->cell_dofs(a);
      const auto       &v    = fields_[k]->values;
      for (int q = 0; q < nq; ++q)
        {
          double val = 0.;
          Vec2   g   = Vec2::Zero();
          for (int i = 0; i < t.n_basis; ++i)
            {
              const double ci = v[dofs[i]];
              val += ci * t.value[q * t.n_basis + i];
              g += ci * t.grad[q * t.n_basis + i];
            }
          values[q * nf + k] = {val, g * hinv};
        }
    }
}

} // namespace dwropt
