#include <cmath>
#include <random>

#include "doctest.h"
#include "invlp/qp.hpp"

using namespace invlp;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Projection oracle: every subset of rows taken as equalities, keep the closest feasible candidate.
double subset_projection(const Vec& c, const Mat& C, const Vec& d, Vec* arg = nullptr) {
  const int m = static_cast<int>(C.rows()), n = static_cast<int>(c.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> S;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1u) S.push_back(i);
    if (static_cast<int>(S.size()) > n) continue;
    Vec x = c;
    if (!S.empty()) {
      Mat CS(S.size(), n);
      Vec dS(S.size());
      for (std::size_t k = 0; k < S.size(); ++k) {
        CS.row(k) = C.row(S[k]);
        dS[k] = d[S[k]];
      }
      Mat K = CS * CS.transpose();
      Eigen::FullPivLU<Mat> lu(K);
      if (lu.rank() < static_cast<int>(S.size())) continue;
      x = c - CS.transpose() * lu.solve(CS * c - dS);
    }
    if (((C * x - d).array() > 1e-9).any()) continue;
    double f = (x - c).squaredNorm();
    if (f < best) {
      best = f;
      if (arg) *arg = x;
    }
  }
  return best;
}

// Projection onto a single finitely generated cone by enumerating generator subsets.
Vec subset_cone_projection(const Vec& c, const Mat& G) {
  const int T = static_cast<int>(G.cols());
  Vec best = Vec::Zero(c.size());
  double bf = c.squaredNorm();
  for (unsigned mask = 1; mask < (1u << T); ++mask) {
    std::vector<int> S;
    for (int t = 0; t < T; ++t)
      if (mask >> t & 1u) S.push_back(t);
    Mat GS(c.size(), S.size());
    for (std::size_t k = 0; k < S.size(); ++k) GS.col(k) = G.col(S[k]);
    Eigen::ColPivHouseholderQR<Mat> qr(GS);
    if (qr.rank() < static_cast<int>(S.size())) continue;
    Vec g = qr.solve(c);
    if (g.minCoeff() < -1e-12) continue;
    Vec y = GS * g;
    if ((y - c).squaredNorm() < bf) {
      bf = (y - c).squaredNorm();
      best = y;
    }
  }
  return best;
}

// Checks the returned certificate proves optimality independently of the solver.
void check_certificate(const Vec& cbar, const std::vector<ConeGenerators>& cones, const P2Result& r,
                       const Vec& lo = {}, const Vec& hi = {}) {
  Vec resid = cbar - r.c;
  for (std::size_t k = 0; k < r.cuts.size(); ++k) {
    const auto& G = cones[r.cut_cone[k]].G;
    CHECK((G.transpose() * r.cuts[k]).maxCoeff() <= 1e-9);
    CHECK(std::abs(r.cuts[k].dot(r.c)) <= 1e-8);
    CHECK(r.cut_mult[k] >= 0.0);
    resid -= r.cut_mult[k] * r.cuts[k];
  }
  for (int p = 0; p < r.c.size(); ++p) {
    if (lo.size()) {
      resid += r.lo_mult[p] * Vec::Unit(r.c.size(), p);
      if (r.lo_mult[p] > 0) CHECK(std::abs(r.c[p] - lo[p]) <= 1e-9);
    }
    if (hi.size()) {
      resid -= r.hi_mult[p] * Vec::Unit(r.c.size(), p);
      if (r.hi_mult[p] > 0) CHECK(std::abs(r.c[p] - hi[p]) <= 1e-9);
    }
  }
  CHECK(resid.lpNorm<Eigen::Infinity>() <= 1e-7 * (1 + cbar.lpNorm<Eigen::Infinity>()));
}

Mat random_cone(std::mt19937_64& rng, int n, int T, const Vec& inside) {
  std::normal_distribution<double> N;
  Mat G(n, T);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) G(i, t) = N(rng);
    if (t == 0) G.col(t) = inside;  // a shared ray keeps the intersection nontrivial
  }
  return G;
}

}  // namespace

TEST_CASE("reference already admissible is returned unchanged") {
  std::vector<ConeGenerators> cones{ConeGenerators(2, {v2(-1, 0), v2(2, 3)})};
  auto r = solve_p2(v2(1, 2), cones);
  REQUIRE(r.feasible);
  CHECK((r.c - v2(1, 2)).norm() <= 1e-12);
  CHECK(r.objective <= 1e-20);
}

TEST_CASE("negative orthant reference projects to the apex of a ray") {
  std::vector<ConeGenerators> cones{ConeGenerators(2, {v2(1, 0)})};
  auto r = solve_p2(v2(-1, -1), cones);
  REQUIRE(r.feasible);
  CHECK(r.c.norm() <= 1e-12);
  // 1-D grid over the ray parameter
  double grid = 1e300;
  for (int k = 0; k <= 10000; ++k) {
    double g = 1e-3 * k;
    grid = std::min(grid, (-1 - g) * (-1 - g) + 1.0);
  }
  CHECK(r.objective == doctest::Approx(grid).epsilon(1e-9));
}

TEST_CASE("projection QP matches subset enumeration") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + trial % 4, m = 1 + trial % 7;
    Mat C(m, n);
    Vec d(m), c(n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) C(i, j) = N(rng);
      d[i] = trial % 3 == 0 ? 0.0 : std::abs(N(rng));  // origin feasible
    }
    for (int j = 0; j < n; ++j) c[j] = 2 * N(rng);
    auto res = project_polyhedron(c, C, d);
    REQUIRE(res.feasible);
    Vec arg;
    double ref = subset_projection(c, C, d, &arg);
    CHECK((res.x - c).squaredNorm() == doctest::Approx(ref).epsilon(1e-9));
    CHECK((res.x - arg).norm() <= 1e-7);
    CHECK(((C * res.x - d).array() <= 1e-9).all());
    CHECK((c - res.x - C.transpose() * res.mu).norm() <= 1e-9);
    CHECK(res.mu.minCoeff() >= 0.0);
    CHECK(std::abs(res.mu.dot(C * res.x - d)) <= 1e-9);
  }
}

TEST_CASE("projection QP detects infeasible systems") {
  Mat C(2, 2);
  C << 1, 0, -1, 0;
  Vec d(2);
  d << -1, -1;  // x1 <= -1 and x1 >= 1
  CHECK_FALSE(project_polyhedron(v2(0, 0), C, d).feasible);
}

TEST_CASE("single cone projection matches generator subset enumeration") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + trial % 4, T = 1 + trial % 6;
    Mat G(n, T);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < T; ++t) G(i, t) = N(rng);
    Vec cbar(n);
    for (int i = 0; i < n; ++i) cbar[i] = N(rng);
    std::vector<ConeGenerators> cones{ConeGenerators(G)};
    auto r = solve_p2(cbar, cones);
    REQUIRE(r.converged);
    CHECK((r.c - subset_cone_projection(cbar, G)).norm() <= 1e-7);
    check_certificate(cbar, cones, r);
  }
}

TEST_CASE("intersections: uniqueness, admissibility and optimality") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + trial % 4, K = 2 + trial % 3;
    Vec common(n);
    for (int i = 0; i < n; ++i) common[i] = N(rng);
    std::vector<ConeGenerators> cones;
    for (int k = 0; k < K; ++k) cones.emplace_back(random_cone(rng, n, n + 1, common));
    Vec cbar(n);
    for (int i = 0; i < n; ++i) cbar[i] = 2 * N(rng);

    auto base = solve_p2(cbar, cones);
    REQUIRE(base.converged);
    for (const auto& k : cones) CHECK(cone_membership(base.c, k));
    check_certificate(cbar, cones, base);

    // three other starts: reversed order, seeded outer approximations
    P2Options rev;
    for (int k = K - 1; k >= 0; --k) rev.cone_order.push_back(k);
    P2Options seeded;
    seeded.seeds = {-cbar, Vec::Ones(n)};
    P2Options both = rev;
    both.seeds = {common, Vec::Unit(n, 0)};
    for (const auto& o : {rev, seeded, both}) {
      auto r = solve_p2(cbar, cones, {}, {}, o);
      CHECK((r.c - base.c).norm() <= 1e-6);
    }

    // random admissible points: the shared ray, the estimate, and filtered combinations from one cone
    for (int s = 0; s < 1000; ++s) {
      Vec v = U(rng) * 3 * common + U(rng) * 3 * base.c;
      if (s % 2) {
        v = Vec::Zero(n);
        for (int t = 0; t < cones[0].size(); ++t) v += U(rng) * cones[0].G.col(t);
        bool ok = true;
        for (const auto& k : cones) ok = ok && cone_membership(v, k);
        if (!ok) continue;
      }
      CHECK(base.objective <= (cbar - v).squaredNorm() + 1e-9);
    }

    // positive rescaling of generators leaves the answer unchanged
    std::vector<ConeGenerators> scaled;
    for (const auto& k : cones) {
      Mat G = k.G;
      for (int t = 0; t < G.cols(); ++t) G.col(t) *= 0.1 + 5 * U(rng);
      scaled.emplace_back(G);
    }
    CHECK((solve_p2(cbar, scaled).c - base.c).norm() <= 1e-6);
  }
}

TEST_CASE("sign bounds") {
  std::vector<ConeGenerators> cones{ConeGenerators(2, {v2(-1, 0), v2(2, 3)})};
  Vec lo(2), hi(2);
  lo << -kInf, -kInf;
  hi << -1e-6, kInf;  // first coordinate strictly negative
  auto r = solve_p2(v2(1, 2), cones, lo, hi);
  REQUIRE(r.feasible);
  CHECK(r.c[0] <= -1e-6 + 1e-12);
  check_certificate(v2(1, 2), cones, r, lo, hi);

  // cone {(1,0)} has no point with a positive second coordinate
  std::vector<ConeGenerators> ray{ConeGenerators(2, {v2(1, 0)})};
  Vec l2(2);
  l2 << -kInf, 1e-6;
  auto none = solve_p2(v2(1, 1), ray, l2, Vec::Constant(2, kInf));
  CHECK_FALSE(none.feasible);
  CHECK(none.c.norm() == 0.0);
}

TEST_CASE("an empty cone admits only the origin") {
  std::vector<ConeGenerators> cones{ConeGenerators(2, {v2(1, 0)}), ConeGenerators(Mat(2, 0))};
  auto r = solve_p2(v2(3, 1), cones);
  REQUIRE(r.feasible);
  CHECK(r.c.norm() == 0.0);
}
