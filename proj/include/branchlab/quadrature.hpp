#ifndef BRANCHLAB_QUADRATURE_HPP
#define BRANCHLAB_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <functional>

namespace branchlab {

namespace detail {

// 15-point Gauss-Legendre nodes/weights on [-1,1] (positive half; symmetric).
inline constexpr double kGl15Nodes[8] = {
    0.0000000000000000, 0.2011940939974345, 0.3941513470775634, 0.5709721726085388,
    0.7244177313601701, 0.8482065834104272, 0.9372733924007060, 0.9879925180204854};
inline constexpr double kGl15Weights[8] = {
    0.2025782419255613, 0.1984314853271116, 0.1861610000155622, 0.1662692058169939,
    0.1395706779261543, 0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

// 7-point Gauss-Legendre, used as the error reference.
inline constexpr double kGl7Nodes[4] = {
    0.0000000000000000, 0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
inline constexpr double kGl7Weights[4] = {
    0.4179591836734694, 0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

template <class F>
double gl_panel(const F& f, double a, double b, const double* nodes, const double* weights,
                int half_count, bool has_center) {
  const double mid = 0.5 * (a + b);
  const double rad = 0.5 * (b - a);
  double sum = has_center ? weights[0] * f(mid) : 0.0;
  for (int i = has_center ? 1 : 0; i < half_count; ++i) {
    const double dx = rad * nodes[i];
    sum += weights[i] * (f(mid + dx) + f(mid - dx));
  }
  return sum * rad;
}

template <class F>
void adaptive_rec(const F& f, double a, double b, double rel_tol, double abs_tol, int depth,
                  double& acc) {
  const double coarse = gl_panel(f, a, b, kGl7Nodes, kGl7Weights, 4, true);
  const double fine = gl_panel(f, a, b, kGl15Nodes, kGl15Weights, 8, true);
  const double err = std::fabs(fine - coarse);
  if (depth >= 60 || err <= abs_tol || err <= rel_tol * std::fabs(fine)) {
    acc += fine;
    return;
  }
  const double mid = 0.5 * (a + b);
  adaptive_rec(f, a, mid, rel_tol, abs_tol * 0.5, depth + 1, acc);
  adaptive_rec(f, mid, b, rel_tol, abs_tol * 0.5, depth + 1, acc);
}

}  // namespace detail

// Adaptive Gauss-Legendre on [a,b]. The integrand must be smooth on the open
// interval; endpoint singularities are expected to be removed by substitution
// at the call site.
template <class F>
double integrate(const F& f, double a, double b, double rel_tol = 5e-14,
                 double abs_tol = 1e-18) {
  if (!(b > a)) return 0.0;
  double acc = 0.0;
  detail::adaptive_rec(f, a, b, rel_tol, abs_tol, 0, acc);
  return acc;
}

}  // namespace branchlab

#endif
