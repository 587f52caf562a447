#pragma once

// Brute-force references shared by the unit tests and the acceptance runner.

#include <limits>
#include <optional>
#include <vector>

#include "invlp/iop.hpp"
#include "invlp/sampling.hpp"

namespace oracle {

using invlp::Vec;

// A nonzero cost within the sign bounds exists in the intersection. Decided from the extreme rays
// (double description), independent of the FP models. Only bounds of the form c_p <= u_p <= 0 or
// c_p >= l_p >= 0 are supported; a bound of size |u_p| is met by the normalised ray sum.
inline bool common_cost(const invlp::AdmissibleCone& cone, Vec* witness = nullptr) {
  invlp::ConeRays R = invlp::intersection_rays(cone);
  if (R.zero()) return false;
  const int n = R.dim();
  Vec s = Vec::Zero(n);
  for (int k = 0; k < R.rays.cols(); ++k) s += R.rays.col(k);
  if (R.lineality.cols() > 0 && s.lpNorm<1>() < 1e-9) s = R.lineality.col(0);
  if (s.lpNorm<1>() < 1e-12) return false;
  s /= s.lpNorm<1>();
  for (int p = 0; p < n; ++p) {
    if (cone.upper.size() && cone.upper[p] <= 0.0 && s[p] > cone.upper[p] + 1e-12) return false;
    if (cone.lower.size() && cone.lower[p] >= 0.0 && s[p] < cone.lower[p] - 1e-12) return false;
  }
  if (witness) *witness = s;
  return true;
}

struct BruteForce {
  double loss = std::numeric_limits<double>::infinity();
  long tuples = 0;
  std::vector<std::vector<Vec>> optima;  // vertex tuples within 1e-9 of the best
};

inline long tuple_count(const invlp::IopInstance& inst) {
  long t = 1;
  for (const auto& e : inst.experiments) t *= static_cast<long>(invlp::enumerate_vertices(e.poly).size());
  return t;
}

// Every per-experiment vertex tuple whose cones share an admissible cost; least total loss.
inline BruteForce brute_force_p1(const invlp::IopInstance& inst) {
  const int I = static_cast<int>(inst.experiments.size());
  std::vector<std::vector<Vec>> verts(I);
  std::vector<std::vector<invlp::ConeGenerators>> cones(I);
  std::vector<std::vector<double>> loss(I);
  for (int i = 0; i < I; ++i) {
    const auto& e = inst.experiments[i];
    verts[i] = invlp::enumerate_vertices(e.poly);
    for (const auto& v : verts[i]) {
      cones[i].push_back(invlp::cone_of_vertex(e.poly, invlp::active_set(e.poly, v)));
      loss[i].push_back(invlp::experiment_loss(v, e, inst.norm));
    }
  }
  BruteForce out;
  std::vector<int> pick(I, 0);
  while (true) {
    ++out.tuples;
    double l = 0.0;
    invlp::AdmissibleCone k;
    k.lower = inst.sign_lower;
    k.upper = inst.sign_upper;
    for (int i = 0; i < I; ++i) {
      l += loss[i][pick[i]];
      k.cones.push_back(cones[i][pick[i]]);
    }
    if (l <= out.loss + 1e-9 && common_cost(k)) {
      std::vector<Vec> x;
      for (int i = 0; i < I; ++i) x.push_back(verts[i][pick[i]]);
      if (l < out.loss - 1e-9) out.optima.clear();
      out.loss = std::min(out.loss, l);
      out.optima.push_back(std::move(x));
    }
    int i = 0;
    while (i < I && ++pick[i] == static_cast<int>(verts[i].size())) pick[i++] = 0;
    if (i == I) break;
  }
  return out;
}

}  // namespace oracle
