#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mmba/mat.hpp"

namespace mmba {

// Central-difference check of an analytic gradient. The loss function must
// be deterministic in its inputs: anything stochastic (dropout) has to fix
// its randomness across the repeated evaluations.
struct GradCheckResult {
  bool ok = true;
  double max_rel_err = 0.0;
  std::string worst;  // "param[k](i,j)" of the worst element
};

// loss(params) evaluates the scalar objective; grads(params) returns the
// analytic gradient for each parameter matrix, same shapes and order.
inline GradCheckResult gradcheck(
    std::function<double(const std::vector<Mat>&)> loss,
    const std::vector<Mat>& params, const std::vector<Mat>& analytic,
    double h = 1e-5, double tol = 1e-4) {
  GradCheckResult res;
  std::vector<Mat> p = params;
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (int i = 0; i < p[k].rows(); ++i) {
      for (int j = 0; j < p[k].cols(); ++j) {
        const double orig = p[k](i, j);
        p[k](i, j) = orig + h;
        const double up = loss(p);
        p[k](i, j) = orig - h;
        const double down = loss(p);
        p[k](i, j) = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double exact = analytic[k](i, j);
        const double scale =
            std::max({std::abs(exact), std::abs(numeric), 1e-3});
        const double rel = std::abs(exact - numeric) / scale;
        if (rel > res.max_rel_err) {
          res.max_rel_err = rel;
          res.worst = "param[" + std::to_string(k) + "](" + std::to_string(i) +
                      "," + std::to_string(j) + ")";
        }
      }
    }
  }
  res.ok = res.max_rel_err < tol;
  return res;
}

}  // namespace mmba
