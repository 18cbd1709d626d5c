#pragma once

#include <functional>
#include <vector>

namespace glyco {

struct NelderMeadOptions {
  double initial_step = 1.0;
  double size_tolerance = 1e-8;  ///< stop once every vertex is this close to the best (inf-norm)
  int max_iterations = 2000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Unconstrained downhill simplex minimization (standard reflection/expansion/
/// contraction/shrink coefficients 1, 2, 1/2, 1/2). Non-finite objective values
/// are treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options = {});

}  // namespace glyco
