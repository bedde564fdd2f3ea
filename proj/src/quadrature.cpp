#include <dwropt/quadrature.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace dwropt
{
namespace
{
/// Legendre polynomial of degree n and its derivative at x.
std::pair<double, double> legendre(int n, double x)
{
  double p0 = 1., p1 = x;
  for (int k = 2; k <= n; ++k)
    {
      const double p2 = ((2. * k - 1.) * x * p1 - (k - 1.) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
  return {p1, n * (x * p1 - p0) / (x * x - 1.)};
}
} // namespace

GaussRule1D gauss_legendre(int n)
{
  if (n < 1 || n > 32)
    throw std::invalid_argument("unsupported Gauss rule size");
  GaussRule1D r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i)
    {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it)
        {
          const auto [p, dp] = legendre(n, x);
          const double dx    = p / dp;
          x -= dx;
          if (std::abs(dx) < 1e-16)
            break;
        }
      const double dp = legendre(n, x).second;
      // Map [-1,1] to [0,1] with ascending points.
      r.points[n - 1 - i]  = 0.5 * (x + 1.);
      r.weights[n - 1 - i] = 1. / ((1. - x * x) * dp * dp);
    }
  return r;
}

double lagrange_1d(int degree, int i, double t)
{
  if (degree == 0)
    return 1.;
  double v = 1.;
  const double ti = static_cast<double>(i) / degree;
  for (int k = 0; k <= degree; ++k)
    if (k != i)
      {
        const double tk = static_cast<double>(k) / degree;
        v *= (t - tk) / (ti - tk);
      }
  return v;
}

double lagrange_1d_derivative(int degree, int i, double t)
{
  if (degree == 0)
    return 0.;
  const double ti  = static_cast<double>(i) / degree;
  double       sum = 0.;
  for (int m = 0; m <= degree; ++m)
    {
      if (m == i)
        continue;
      const double tm = static_cast<double>(m) / degree;
      double       p  = 1. / (ti - tm);
      for (int k = 0; k <= degree; ++k)
        if (k != i && k != m)
          {
            const double tk = static_cast<double>(k) / degree;
            p *= (t - tk) / (ti - tk);
          }
      sum += p;
    }
  return sum;
}

Vec2 reference_node(int degree, int i)
{
  if (degree == 0)
    return Vec2(0.5, 0.5);
  const int n = degree + 1;
  return Vec2(static_cast<double>(i % n) / degree,
              static_cast<double>(i / n) / degree);
}

namespace
{
ShapeTable build_table(int degree, int n1)
{
  ShapeTable t;
  t.degree   = degree;
  t.n_1d     = n1;
  t.n_points = n1 * n1;
  t.n_basis  = (degree + 1) * (degree + 1);
  const GaussRule1D g = gauss_legendre(n1);
  for (int qy = 0; qy < n1; ++qy)
    for (int qx = 0; qx < n1; ++qx)
      {
        t.points.emplace_back(g.points[qx], g.points[qy]);
        t.weights.push_back(g.weights[qx] * g.weights[qy]);
      }
  t.value.resize(t.n_points * t.n_basis);
  t.grad.resize(t.n_points * t.n_basis);
  const int nb1 = degree + 1;
  for (int q = 0; q < t.n_points; ++q)
    for (int i = 0; i < t.n_basis; ++i)
      {
        const int    ix = i % nb1, iy = i / nb1;
        const double x = t.points[q].x(), y = t.points[q].y();
        const double lx = lagrange_1d(degree, ix, x);
        const double ly = lagrange_1d(degree, iy, y);
        t.value[q * t.n_basis + i] = lx * ly;
        t.grad[q * t.n_basis + i] =
          Vec2(lagrange_1d_derivative(degree, ix, x) * ly,
               lx * lagrange_1d_derivative(degree, iy, y));
      }
  return t;
}
} // namespace

const ShapeTable &shape_table(int degree, int n_points_1d)
{
  static std::mutex                                                 mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<ShapeTable>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto &slot = cache[{degree, n_points_1d}];
  if (!slot)
    slot = std::make_unique<ShapeTable>(build_table(degree, n_points_1d));
  return *slot;
}

} // namespace dwropt
