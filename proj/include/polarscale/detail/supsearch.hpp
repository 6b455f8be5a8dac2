#pragma once

#include <cstddef>
#include <functional>

namespace polarscale::detail {

struct SupResult {
  double sup = 0.0;        // max(grid_sup, refined_sup)
  double argmax = 0.0;
  double grid_sup = 0.0;   // best value seen on the uniform grid
  double grid_argmax = 0.0;
  double refined_sup = 0.0;  // golden-section value in the best bracket
  double refined_argmax = 0.0;
};

/// Supremum of f over [lo, hi]: uniform grid scan (grid_points evaluations,
/// endpoints included) followed by golden-section maximization inside the
/// cell pair bracketing the best grid point, down to an interval of width
/// refine_tol.
SupResult sup_search(const std::function<double(double)>& f, double lo, double hi,
                     std::size_t grid_points, double refine_tol);

}  // namespace polarscale::detail
