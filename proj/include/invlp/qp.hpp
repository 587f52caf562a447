#pragma once

#include <optional>
#include <vector>

#include "invlp/lp.hpp"

namespace invlp {

// min ||x - c||^2 subject to C x <= d, by the dual active-set method of Goldfarb and Idnani.
struct ProjectionResult {
  bool feasible = false;
  Vec x;
  Vec mu;  // one multiplier per row of C; c - x = C' mu at optimality
  std::vector<int> active;
  int iterations = 0;
};

ProjectionResult project_polyhedron(const Vec& c, const Mat& C, const Vec& d);

struct P2Options {
  // Order in which the cones are separated; empty means 0, 1, 2, ...
  std::vector<int> cone_order;
  // Points whose separating cuts seed the outer approximation before the first projection.
  std::vector<Vec> seeds;
  double sep_tol = 1e-10;  // relative to 1 + ||c||_1
  int max_rounds = 2000;
};

struct P2Result {
  bool feasible = false;  // false: the bounds leave nothing in the intersection
  bool converged = false;
  Vec c;
  double objective = 0.0;  // ||cbar - c||_2^2
  // Optimality certificate: cbar - c = sum_k mult[k] * cuts[k] + bound terms, where
  // each cuts[k] lies in the polar of cones[cut_cone[k]] and is orthogonal to c.
  std::vector<Vec> cuts;
  std::vector<int> cut_cone;
  std::vector<double> cut_mult;
  Vec lo_mult, hi_mult;
  int rounds = 0;
};

// Projection of cbar onto the intersection of the cones and the box [lo, hi].
// Bounds may be infinite; pass empty vectors for no bounds.
P2Result solve_p2(const Vec& cbar, const std::vector<ConeGenerators>& cones, const Vec& lo = {},
                  const Vec& hi = {}, const P2Options& options = {});

}  // namespace invlp
