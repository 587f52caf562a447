#pragma once

#include <vector>

#include "invlp/lp.hpp"
#include "invlp/rng.hpp"

namespace invlp {

// Polytopes A = A0 + sum_k theta_k E_k, b = b0 + sum_k theta_k e_k with each theta_k drawn
// uniformly from [lo_k, hi_k]. A parameter may touch several entries, which is how one
// conversion factor or demand feeds several inventory rows.
struct ParameterSpace {
  struct Target {
    int row = 0;
    int col = -1;  // -1 addresses b
    double scale = 1.0;
  };
  struct Param {
    double lo = 0.0, hi = 0.0, nominal = 0.0;
    std::vector<Target> targets;
  };

  Mat A0;
  Vec b0;
  std::vector<Param> params;
  int max_retries = 100;

  int dim() const { return static_cast<int>(A0.cols()); }
  bool empty() const { return A0.size() == 0; }
  Polytope build(const Vec& theta) const;  // throws InvalidPolytope
  Vec nominal() const;
  // Redraws until the polytope is valid; throws InvalidPolytope after max_retries failures.
  Polytope sample(Rng& rng, Vec* theta = nullptr) const;
  void validate() const;
};

}  // namespace invlp
