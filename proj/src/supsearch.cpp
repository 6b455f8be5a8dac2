#include "polarscale/detail/supsearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polarscale::detail {

SupResult sup_search(const std::function<double(double)>& f, double lo, double hi,
                     std::size_t grid_points, double refine_tol) {
  SupResult res;
  if (grid_points < 2) grid_points = 2;
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid_points; ++j) {
    double x = (j + 1 == grid_points) ? hi : lo + step * static_cast<double>(j);
    double v = f(x);
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  res.grid_sup = best_val;
  res.grid_argmax = (best + 1 == grid_points) ? hi : lo + step * static_cast<double>(best);

  double a = (best == 0) ? lo : lo + step * static_cast<double>(best - 1);
  double b = (best + 1 >= grid_points) ? hi : lo + step * static_cast<double>(best + 1);

  // golden-section maximization on [a, b]
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > refine_tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  res.refined_argmax = (f1 > f2) ? x1 : x2;
  res.refined_sup = std::max(f1, f2);

  if (res.refined_sup >= res.grid_sup) {
    res.sup = res.refined_sup;
    res.argmax = res.refined_argmax;
  } else {
    res.sup = res.grid_sup;
    res.argmax = res.grid_argmax;
  }
  return res;
}

}  // namespace polarscale::detail
