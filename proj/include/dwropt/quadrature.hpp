#pragma once

#include <dwropt/mesh.hpp>

#include <vector>

namespace dwropt
{
/// Gauss-Legendre rule on [0,1].
struct GaussRule1D
{
  std::vector<double> points;
  std::vector<double> weights;
};

GaussRule1D gauss_legendre(int n_points);

/// Values and derivatives of the equispaced 1D Lagrange basis of a degree.
/// Degree 0 is the constant with its node at the midpoint.
double lagrange_1d(int degree, int i, double t);
double lagrange_1d_derivative(int degree, int i, double t);

/// Tensor Gauss rule on the reference square with Lagrange shape data for one
/// degree. Points are lexicographic, x fastest; so are the basis functions.
struct ShapeTable
{
  int               degree   = 1;
  int               n_1d     = 0;
  int               n_points = 0;
  int               n_basis  = 0;
  std::vector<Vec2> points;
  std::vector<double> weights;
  /// value[q * n_basis + i]
  std::vector<double> value;
  /// Reference gradients, same layout.
  std::vector<Vec2> grad;
};

/// Cached table; safe to call from several threads.
const ShapeTable &shape_table(int degree, int n_points_1d);

/// Reference coordinates of local node i of a degree.
Vec2 reference_node(int degree, int i);

} // namespace dwropt
