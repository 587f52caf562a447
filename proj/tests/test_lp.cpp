#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "invlp/lp.hpp"

using namespace invlp;

namespace {

Polytope clipped_square() {
  Mat A(5, 2);
  A << 14, 10, 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(5);
  b << 17, 1, 1, 0, 0;
  return Polytope(A, b);
}

// 2x1 + 3x2 <= 3, x1 <= 1, x2 <= 1, -x1 <= 0, -x2 <= 0
Polytope example1_poly(double b1 = 3.0) {
  Mat A(5, 2);
  A << 2, 3, 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(5);
  b << b1, 1, 1, 0, 0;
  return Polytope(A, b);
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Independent vertex oracle: Gaussian elimination with partial pivoting on every n-row subset.
std::vector<Vec> oracle_vertices(const Mat& A, const Vec& b) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  std::vector<Vec> out;
  std::vector<bool> pick(m, false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    std::vector<std::vector<double>> M(n, std::vector<double>(n + 1));
    int r = 0;
    for (int i = 0; i < m; ++i) {
      if (!pick[i]) continue;
      for (int j = 0; j < n; ++j) M[r][j] = A(i, j);
      M[r][n] = b[i];
      ++r;
    }
    bool singular = false;
    for (int c = 0; c < n && !singular; ++c) {
      int piv = c;
      for (int i = c + 1; i < n; ++i)
        if (std::abs(M[i][c]) > std::abs(M[piv][c])) piv = i;
      if (std::abs(M[piv][c]) < 1e-10) {
        singular = true;
        break;
      }
      std::swap(M[c], M[piv]);
      for (int i = 0; i < n; ++i) {
        if (i == c) continue;
        double f = M[i][c] / M[c][c];
        for (int j = c; j <= n; ++j) M[i][j] -= f * M[c][j];
      }
    }
    if (singular) continue;
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = M[i][n] / M[i][i];
    if (((A * x - b).array() <= 1e-9).all()) out.push_back(x);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

// Random bounded polytope: box [-1,1]^n plus extra cuts keeping the origin feasible.
Polytope random_polytope(std::mt19937_64& rng, int n, int extra) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Mat A(2 * n + extra, n);
  Vec b(2 * n + extra);
  A.setZero();
  for (int p = 0; p < n; ++p) {
    A(2 * p, p) = 1.0;
    A(2 * p + 1, p) = -1.0;
    b[2 * p] = 1.0;
    b[2 * p + 1] = 1.0;
  }
  for (int k = 0; k < extra; ++k) {
    for (int p = 0; p < n; ++p) A(2 * n + k, p) = U(rng);
    b[2 * n + k] = 0.3 + 0.5 * std::abs(U(rng));
  }
  return Polytope(A, b);
}

bool contains(const std::vector<Vec>& vs, const Vec& v, double tol = 1e-9) {
  return std::any_of(vs.begin(), vs.end(),
                     [&](const Vec& w) { return (w - v).lpNorm<Eigen::Infinity>() <= tol; });
}

}  // namespace

TEST_CASE("solve_lp recovers the sign-constrained vertex of the clipped square") {
  auto sol = solve_lp(-v2(2, 1), clipped_square());
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.x[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("solve_lp with zero cost returns a vertex") {
  auto poly = clipped_square();
  auto sol = solve_lp(Vec::Zero(2), poly);
  CHECK(sol.objective == 0.0);
  CHECK(contains(oracle_vertices(poly.A(), poly.b()), sol.x, 1e-9));
}

TEST_CASE("solve_lp on the budget polytope matches vertex enumeration") {
  auto poly = example1_poly();
  auto sol = solve_lp(-v2(1, 2), poly);
  CHECK((sol.x - v2(0, 1)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(sol.objective == doctest::Approx(-2.0));
  double best = 1e300;
  for (const Vec& v : oracle_vertices(poly.A(), poly.b())) best = std::min(best, -v2(1, 2).dot(v));
  CHECK(sol.objective == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("active_set examples") {
  auto poly = example1_poly();
  CHECK(active_set(poly, v2(0, 1)) == std::vector<int>{0, 2, 3});
  CHECK(active_set(clipped_square(), v2(1, 0.3)) == std::vector<int>{0, 1});
  Mat A(4, 2);
  A << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << 1, 1, 0, 0;
  Polytope box(A, b);
  CHECK(active_set(box, v2(0.5, 0.5)).empty());
  CHECK_THROWS_AS(active_set(box, v2(1.5, 0.5)), std::invalid_argument);
}

TEST_CASE("enumerate_vertices examples") {
  Mat A(4, 2);
  A << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << 1, 1, 0, 0;
  auto sq = enumerate_vertices(Polytope(A, b));
  CHECK(sq.size() == 4);
  for (auto v : {v2(0, 0), v2(0, 1), v2(1, 0), v2(1, 1)}) CHECK(contains(sq, v));

  auto ex = enumerate_vertices(example1_poly());
  CHECK(ex.size() == 4);
  for (auto v : {v2(0, 0), v2(1, 0), v2(1, 1.0 / 3.0), v2(0, 1)}) CHECK(contains(ex, v, 1e-12));

  auto r2 = enumerate_vertices(clipped_square());
  CHECK(contains(r2, v2(1, 0.3), 1e-12));
  CHECK(contains(r2, v2(0.5, 1), 1e-12));
}

TEST_CASE("enumerate_vertices enforces the dimension cap") {
  Mat A(4, 2);
  A << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(4);
  b << 1, 1, 0, 0;
  CHECK_THROWS_AS(enumerate_vertices(Polytope(A, b), 1), std::invalid_argument);
}

TEST_CASE("polytope construction rejects bad inputs") {
  Mat A(3, 2);
  A << 1, 0, 0, 1, -1, -1;
  Vec b(3);
  b << 1, 1, -5;  // x1 + x2 >= 5 with x <= 1
  CHECK_THROWS_AS(Polytope(A, b), InvalidPolytope);
  Mat U(2, 2);
  U << 1, 0, 0, 1;
  CHECK_THROWS_AS(Polytope(U, Vec::Ones(2)), InvalidPolytope);
  Mat R(4, 2);
  R << 1, 1, -1, -1, 2, 2, -2, -2;  // rank 1
  CHECK_THROWS_AS(Polytope(R, Vec::Ones(4)), InvalidPolytope);
}

TEST_CASE("cone membership examples") {
  ConeGenerators c(2, {v2(-1, 0), v2(2, 3)});
  CHECK(cone_membership(v2(1, 2), c));
  auto d = cone_distance(v2(1, 2), c);
  CHECK(d.gamma[0] == doctest::Approx(1.0 / 3.0));
  CHECK(d.gamma[1] == doctest::Approx(2.0 / 3.0));
  CHECK(cone_membership(Vec::Zero(2), c));
  CHECK_FALSE(cone_membership(v2(0, -1), c));
  CHECK(cone_membership(Vec::Zero(2), ConeGenerators(Mat(2, 0))));
  CHECK_FALSE(cone_membership(v2(1, 0), ConeGenerators(Mat(2, 0))));
}

TEST_CASE("min distance to cone examples") {
  ConeGenerators c(2, {v2(-1, 0), v2(2, 3)});
  CHECK(min_distance_to_cone(v2(1, 2), c) == doctest::Approx(0.0));
  CHECK(min_distance_to_cone(v2(0, 1), ConeGenerators(2, {v2(1, 0)})) == doctest::Approx(1.0));
  // 1-D grid oracle
  ConeGenerators ray(2, {v2(2, 3)});
  double grid = 1e300;
  for (int k = 0; k <= 20000; ++k) {
    double g = 1e-4 * k;
    grid = std::min(grid, std::abs(1 - 2 * g) + std::abs(1 - 3 * g));
  }
  CHECK(std::abs(min_distance_to_cone(v2(1, 1), ray) - grid) <= 1e-3);
}

TEST_CASE("KKT closure and oracle agreement on random polytopes") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N01;
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + trial % 5;
    auto poly = random_polytope(rng, n, 1 + trial % 4);
    Vec c(n);
    for (int p = 0; p < n; ++p) c[p] = N01(rng);
    auto sol = solve_lp(c, poly);
    double cinf = c.lpNorm<Eigen::Infinity>();
    Vec stat = c + poly.A().transpose() * sol.lambda;
    Vec slack = poly.b() - poly.A() * sol.x;
    CHECK(stat.lpNorm<Eigen::Infinity>() <= 1e-7 * (1 + cinf));
    CHECK(sol.lambda.minCoeff() >= -1e-9);
    CHECK(slack.minCoeff() >= -1e-9);
    CHECK(std::abs(sol.lambda.dot(slack)) <= 1e-7);
    for (int k = 0; k < poly.rows(); ++k)
      if (sol.lambda[k] > 1e-9) CHECK(std::find(sol.active_set.begin(), sol.active_set.end(), k) != sol.active_set.end());
    CHECK(static_cast<int>(sol.active_set.size()) >= n);
    if (n <= 6) {
      double best = 1e300;
      for (const Vec& v : oracle_vertices(poly.A(), poly.b())) best = std::min(best, c.dot(v));
      CHECK(sol.objective == doctest::Approx(best).epsilon(1e-7));
      auto lib = enumerate_vertices(poly);
      auto orc = oracle_vertices(poly.A(), poly.b());
      for (const Vec& v : lib) CHECK(contains(orc, v, 1e-7));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("cone invariants") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 2 + trial % 4, T = 1 + trial % 5;
    Mat G(n, T);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < T; ++t) G(i, t) = N01(rng);
    ConeGenerators cone(G);
    for (int t = 0; t < T; ++t) CHECK(cone_membership(G.col(t), cone));
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = N01(rng);
    bool in = cone_membership(v, cone);
    CHECK(cone_membership(U(rng) * v, cone) == in);
    auto d = cone_distance(v, cone);
    CHECK((d.distance <= 1e-7 * (1 + v.lpNorm<1>())) == in);
    // certificate: G'u <= 0, |u| <= 1, u'v = distance
    CHECK((G.transpose() * d.certificate).maxCoeff() <= 1e-9);
    CHECK(d.certificate.lpNorm<Eigen::Infinity>() <= 1 + 1e-9);
    CHECK(d.certificate.dot(v) == doctest::Approx(d.distance).epsilon(1e-9));
  }
}
