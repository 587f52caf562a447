#include "invlp/space.hpp"

#include <string>

namespace invlp {

void ParameterSpace::validate() const {
  if (A0.rows() != b0.size()) throw std::invalid_argument("parameter space: A0 and b0 disagree");
  for (const auto& p : params) {
    if (!(p.lo <= p.hi)) throw std::invalid_argument("parameter space: lo > hi");
    for (const auto& t : p.targets)
      if (t.row < 0 || t.row >= A0.rows() || t.col < -1 || t.col >= A0.cols())
        throw std::invalid_argument("parameter space: target out of range");
  }
}

Polytope ParameterSpace::build(const Vec& theta) const {
  if (theta.size() != static_cast<int>(params.size()))
    throw std::invalid_argument("parameter space: wrong parameter count");
  Mat A = A0;
  Vec b = b0;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (const auto& t : params[k].targets) {
      if (t.col < 0)
        b[t.row] += t.scale * theta[k];
      else
        A(t.row, t.col) += t.scale * theta[k];
    }
  return Polytope(std::move(A), std::move(b));
}

Vec ParameterSpace::nominal() const {
  Vec th(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) th[k] = params[k].nominal;
  return th;
}

Polytope ParameterSpace::sample(Rng& rng, Vec* theta) const {
  Vec th(params.size());
  std::string last;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    for (std::size_t k = 0; k < params.size(); ++k) th[k] = rng.uniform(params[k].lo, params[k].hi);
    try {
      Polytope p = build(th);
      if (theta) *theta = th;
      return p;
    } catch (const InvalidPolytope& e) {
      last = e.what();
    }
  }
  throw InvalidPolytope("no valid polytope after " + std::to_string(max_retries) + " draws: " + last);
}

}  // namespace invlp
