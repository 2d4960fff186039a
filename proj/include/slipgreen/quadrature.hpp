// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "slipgreen/linalg.hpp"

namespace slipgreen::quad {

inline double error_norm(double v) { return std::abs(v); }
template <typename Derived>
double error_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseAbs().maxCoeff();
}

template <typename T>
struct Result {
  T value;
  double error = 0.0;
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 tables).
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {0.129484966168869693270611432679082,
                                 0.279705391489276667901467771423780,
                                 0.381830050505118944950369775488975,
                                 0.417959183673469387755102040816327};

template <typename T>
struct Panel {
  double a, b;
  T value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename T, typename F>
Panel<T> kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const T fc = f(c);
  T kron = fc * wgk[7];
  T gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = r * xgk[j];
    const T fsum = f(c - dx) + f(c + dx);
    kron = kron + fsum * wgk[j];
    if (j % 2 == 1) gauss = gauss + fsum * wg[j / 2];
  }
  Panel<T> p{a, b, T(kron * r), 0.0};
  p.error = error_norm(T((kron - gauss) * r));
  return p;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
///
/// Panels are bisected in order of decreasing error estimate until the summed
/// estimate drops below abs_tol or the panel budget is exhausted; in the
/// latter case `converged` is false and the best available value is returned.
template <typename F>
auto integrate(F&& f, double a, double b, double abs_tol, std::size_t max_panels = 200) {
  using T = std::decay_t<decltype(f(a))>;
  // a lone Gauss/Kronrod difference can vanish by accident, so start from a few panels
  constexpr int initial = 4;
  std::priority_queue<detail::Panel<T>> heap;
  double total_err = 0.0;
  for (int k = 0; k < initial; ++k) {
    auto p = detail::kronrod15<T>(f, a + (b - a) * k / initial, k + 1 == initial ? b : a + (b - a) * (k + 1) / initial);
    total_err += p.error;
    heap.push(p);
  }
  Result<T> out{heap.top().value, 0.0, 0, 0, true};
  std::size_t evals = 15 * initial;
  while (total_err > abs_tol) {
    if (heap.size() >= max_panels) {
      out.converged = false;
      break;
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::kronrod15<T>(f, worst.a, mid);
    auto right = detail::kronrod15<T>(f, mid, worst.b);
    evals += 30;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the panel list; the running error total is only an estimate.
  bool first_term = true;
  double err = 0.0;
  out.intervals = heap.size();
  while (!heap.empty()) {
    const auto& p = heap.top();
    out.value = first_term ? p.value : T(out.value + p.value);
    first_term = false;
    err += p.error;
    heap.pop();
  }
  out.error = err;
  out.evaluations = evals;
  return out;
}

}  // namespace slipgreen::quad
