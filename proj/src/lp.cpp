#include "invlp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

namespace invlp {

namespace {

LpProblem polytope_problem(const Mat& A, const Vec& b) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  LpProblem p;
  p.num_cols = n;
  p.num_rows = m;
  p.col_start.assign(n + 1, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      if (A(i, j) != 0.0) {
        p.row_index.push_back(i);
        p.value.push_back(A(i, j));
      }
    }
    p.col_start[j + 1] = static_cast<int>(p.row_index.size());
  }
  p.cost.assign(n, 0.0);
  p.col_lo.assign(n, -kInf);
  p.col_hi.assign(n, kInf);
  p.row_lo.assign(m, -kInf);
  p.row_hi.assign(b.data(), b.data() + m);
  return p;
}

}  // namespace

struct Polytope::Cache {
  std::once_flag once;
  Vec slack;
};

Polytope::Polytope(Mat A, Vec b) : A_(std::move(A)), b_(std::move(b)), cache_(std::make_shared<Cache>()) {
  const int m = rows(), n = dim();
  if (n < 1) throw InvalidPolytope("polytope needs at least one variable");
  if (b_.size() != m) throw InvalidPolytope("A and b have inconsistent row counts");
  if (!A_.allFinite() || !b_.allFinite()) throw InvalidPolytope("polytope data must be finite");
  if (m < n) throw InvalidPolytope("A has fewer rows than columns, no vertex exists");
  Eigen::ColPivHouseholderQR<Mat> qr(A_);
  qr.setThreshold(1e-10);
  if (qr.rank() != n) throw InvalidPolytope("rank(A) must equal the number of variables");

  Simplex lp(polytope_problem(A_, b_));
  lo_.resize(n);
  hi_.resize(n);
  std::vector<double> c(n, 0.0);
  for (int p = 0; p < n; ++p) {
    for (double sgn : {1.0, -1.0}) {
      std::fill(c.begin(), c.end(), 0.0);
      c[p] = sgn;
      lp.set_cost(c);
      LpStatus st = lp.solve();
      if (st == LpStatus::Infeasible) throw InvalidPolytope("polytope is empty");
      if (st == LpStatus::Unbounded) throw InvalidPolytope("polytope is unbounded");
      if (st != LpStatus::Optimal)
        throw std::runtime_error(std::string("boundedness check failed: ") + to_string(st));
      if (sgn > 0)
        lo_[p] = lp.primal()[p];
      else
        hi_[p] = lp.primal()[p];
    }
  }
}

const Vec& Polytope::max_slack() const {
  std::call_once(cache_->once, [this] {
    Simplex lp(polytope_problem(A_, b_));
    Vec s(rows());
    std::vector<double> c(dim());
    for (int k = 0; k < rows(); ++k) {
      for (int p = 0; p < dim(); ++p) c[p] = A_(k, p);
      lp.set_cost(c);
      if (lp.solve() != LpStatus::Optimal) throw std::runtime_error("slack range LP failed");
      s[k] = std::max(0.0, b_[k] - lp.objective());
    }
    cache_->slack = std::move(s);
  });
  return cache_->slack;
}

ConeGenerators::ConeGenerators(Mat g) : G(std::move(g)) {
  for (int t = 0; t < G.cols(); ++t)
    if (G.col(t).lpNorm<Eigen::Infinity>() == 0.0)
      throw std::invalid_argument("cone generators must be nonzero");
}

ConeGenerators::ConeGenerators(int dim, const std::vector<Vec>& gens) : G(dim, static_cast<int>(gens.size())) {
  for (std::size_t t = 0; t < gens.size(); ++t) {
    if (gens[t].size() != dim) throw std::invalid_argument("generator dimension mismatch");
    if (gens[t].lpNorm<Eigen::Infinity>() == 0.0)
      throw std::invalid_argument("cone generators must be nonzero");
    G.col(static_cast<int>(t)) = gens[t];
  }
}

LpSolution solve_lp(const Vec& cost, const Polytope& poly) {
  return ForwardLp(poly).solve(cost);
}

ForwardLp::ForwardLp(const Polytope& poly)
    : poly_(&poly), lp_(std::make_unique<Simplex>(polytope_problem(poly.A(), poly.b()))) {}
ForwardLp::~ForwardLp() = default;
ForwardLp::ForwardLp(ForwardLp&&) noexcept = default;

LpSolution ForwardLp::solve(const Vec& cost) {
  const Polytope& poly = *poly_;
  Simplex& lp = *lp_;
  if (cost.size() != poly.dim()) throw std::invalid_argument("cost dimension mismatch");
  if (!cost.allFinite()) throw std::invalid_argument("cost must be finite");
  lp.set_cost(std::vector<double>(cost.data(), cost.data() + cost.size()));
  LpStatus st = lp.solve();
  if (st != LpStatus::Optimal)
    throw std::runtime_error(std::string("forward LP did not solve: ") + to_string(st));
  lp.make_free_basic();
  LpSolution sol;
  auto x = lp.primal();
  sol.x = Eigen::Map<Vec>(x.data(), static_cast<int>(x.size()));
  sol.objective = cost.dot(sol.x);
  auto y = lp.row_duals();
  sol.lambda.resize(poly.rows());
  for (int k = 0; k < poly.rows(); ++k) sol.lambda[k] = std::max(0.0, -y[k]);
  sol.active_set = active_set(poly, sol.x);
  return sol;
}

std::vector<int> active_set(const Polytope& poly, const Vec& x, double tol) {
  if (x.size() != poly.dim()) throw std::invalid_argument("point dimension mismatch");
  std::vector<int> act;
  Vec r = poly.A() * x - poly.b();
  for (int k = 0; k < poly.rows(); ++k) {
    double scale = tol * (1.0 + std::abs(poly.b()[k]));
    if (r[k] > scale) throw std::invalid_argument("point violates row " + std::to_string(k));
    if (std::abs(r[k]) <= scale) act.push_back(k);
  }
  return act;
}

std::vector<Vec> enumerate_vertices(const Polytope& poly, int cap) {
  const int n = poly.dim(), m = poly.rows();
  if (n > cap)
    throw std::invalid_argument("vertex enumeration capped at dimension " + std::to_string(cap) +
                                "; use the MILP path for larger problems");
  std::vector<Vec> out;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Mat As(n, n);
  Vec bs(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      As.row(i) = poly.A().row(idx[i]);
      bs[i] = poly.b()[idx[i]];
    }
    Eigen::FullPivLU<Mat> lu(As);
    lu.setThreshold(1e-10);
    if (lu.rank() == n) {
      Vec v = lu.solve(bs);
      Vec r = poly.A() * v - poly.b();
      bool feas = true;
      for (int k = 0; k < m && feas; ++k)
        feas = r[k] <= Tolerances::feasibility * (1.0 + std::abs(poly.b()[k]));
      if (feas) {
        bool dup = false;
        for (const Vec& w : out) {
          if ((w - v).lpNorm<Eigen::Infinity>() <= Tolerances::vertex_dedup * (1.0 + v.lpNorm<Eigen::Infinity>())) {
            dup = true;
            break;
          }
        }
        if (!dup) out.push_back(v);
      }
    }
    int i = n - 1;
    while (i >= 0 && idx[i] == m - n + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int k = i + 1; k < n; ++k) idx[k] = idx[k - 1] + 1;
  }
  return out;
}

ConeDistance cone_distance(const Vec& y, const ConeGenerators& cone) {
  const int n = static_cast<int>(y.size());
  if (cone.size() > 0 && cone.dim() != n) throw std::invalid_argument("cone dimension mismatch");
  const int T = cone.size();
  // columns: gamma (T), e+ (n), e- (n); rows: G gamma + e+ - e- = y
  LpProblem p;
  p.num_cols = T + 2 * n;
  p.num_rows = n;
  p.col_start.assign(p.num_cols + 1, 0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      if (cone.G(i, t) != 0.0) {
        p.row_index.push_back(i);
        p.value.push_back(cone.G(i, t));
      }
    }
    p.col_start[t + 1] = static_cast<int>(p.row_index.size());
  }
  for (int k = 0; k < 2 * n; ++k) {
    p.row_index.push_back(k % n);
    p.value.push_back(k < n ? 1.0 : -1.0);
    p.col_start[T + k + 1] = static_cast<int>(p.row_index.size());
  }
  p.cost.assign(p.num_cols, 1.0);
  for (int t = 0; t < T; ++t) p.cost[t] = 0.0;
  p.col_lo.assign(p.num_cols, 0.0);
  p.col_hi.assign(p.num_cols, kInf);
  p.row_lo.assign(y.data(), y.data() + n);
  p.row_hi = p.row_lo;
  Simplex lp(std::move(p));
  if (lp.solve() != LpStatus::Optimal) throw std::runtime_error("cone distance LP failed");
  ConeDistance out;
  auto x = lp.primal();
  out.gamma.resize(T);
  for (int t = 0; t < T; ++t) out.gamma[t] = std::max(0.0, x[t]);
  out.distance = std::max(0.0, lp.objective());
  auto u = lp.row_duals();
  out.certificate = Eigen::Map<Vec>(u.data(), n);
  return out;
}

double min_distance_to_cone(const Vec& y, const ConeGenerators& cone) {
  return cone_distance(y, cone).distance;
}

bool cone_membership(const Vec& v, const ConeGenerators& cone, double tol) {
  if (v.lpNorm<1>() == 0.0) return true;
  if (cone.size() == 0) return v.lpNorm<Eigen::Infinity>() <= tol;
  return cone_distance(v, cone).distance <= tol * (1.0 + v.lpNorm<1>());
}

}  // namespace invlp
