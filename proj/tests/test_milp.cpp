#include <cmath>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "invlp/lp.hpp"
#include "invlp/milp.hpp"

using namespace invlp;

namespace {

struct Random01 {
  MilpModel model;
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<double> c;
};

// Pure binary problem: min c'z s.t. A z <= b.
Random01 random_binary(std::mt19937_64& rng, int n, int m) {
  std::uniform_int_distribution<int> coef(-3, 6), cost(-9, 4);
  Random01 r;
  r.A.assign(m, std::vector<double>(n));
  r.b.resize(m);
  r.c.resize(n);
  for (int j = 0; j < n; ++j) {
    r.c[j] = cost(rng);
    r.model.add_binary(r.c[j]);
  }
  for (int i = 0; i < m; ++i) {
    std::vector<int> idx;
    std::vector<double> val;
    double pos = 0.0;
    for (int j = 0; j < n; ++j) {
      r.A[i][j] = coef(rng);
      idx.push_back(j);
      val.push_back(r.A[i][j]);
      pos += std::max(0.0, r.A[i][j]);
    }
    r.b[i] = std::floor(0.4 * pos);
    r.model.add_le(idx, val, r.b[i]);
  }
  return r;
}

// Exhaustive oracle over all 2^n points; +inf when infeasible.
double enumerate_binary(const Random01& r) {
  const int n = static_cast<int>(r.c.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < r.A.size() && ok; ++i) {
      double a = 0.0;
      for (int j = 0; j < n; ++j)
        if (mask >> j & 1u) a += r.A[i][j];
      ok = a <= r.b[i];
    }
    if (!ok) continue;
    double f = 0.0;
    for (int j = 0; j < n; ++j)
      if (mask >> j & 1u) f += r.c[j];
    best = std::min(best, f);
  }
  return best;
}

// Facility-style mixed model: open binaries y_k with fixed cost, flows x_k <= cap_k y_k, sum x = demand.
MilpModel facility(const std::vector<double>& fixed, const std::vector<double>& unit,
                   const std::vector<double>& cap, double demand) {
  MilpModel m;
  const int K = static_cast<int>(fixed.size());
  std::vector<int> ys, xs;
  for (int k = 0; k < K; ++k) ys.push_back(m.add_binary(fixed[k]));
  for (int k = 0; k < K; ++k) xs.push_back(m.add_var(0.0, kInf, unit[k]));
  for (int k = 0; k < K; ++k) m.add_le({xs[k], ys[k]}, {1.0, -cap[k]}, 0.0);
  m.add_eq(xs, std::vector<double>(K, 1.0), demand);
  return m;
}

// Facility oracle: for each open set the flow problem is filled greedily by unit cost.
double facility_oracle(const std::vector<double>& fixed, const std::vector<double>& unit,
                       const std::vector<double>& cap, double demand) {
  const int K = static_cast<int>(fixed.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << K); ++mask) {
    std::vector<int> open;
    double f = 0.0, total = 0.0;
    for (int k = 0; k < K; ++k)
      if (mask >> k & 1u) {
        open.push_back(k);
        f += fixed[k];
        total += cap[k];
      }
    if (total < demand) continue;
    std::sort(open.begin(), open.end(), [&](int a, int b) { return unit[a] < unit[b]; });
    double left = demand;
    for (int k : open) {
      double q = std::min(left, cap[k]);
      f += q * unit[k];
      left -= q;
    }
    best = std::min(best, f);
  }
  return best;
}

}  // namespace

TEST_CASE("two-binary knapsack") {
  MilpModel m;
  int z1 = m.add_binary(-3.0), z2 = m.add_binary(-2.0);
  m.add_le({z1, z2}, {1.0, 1.0}, 1.0);
  auto sol = solve_milp(m);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.x[z1] == 1.0);
  CHECK(sol.x[z2] == 0.0);
  CHECK(-sol.objective == doctest::Approx(3.0));
}

TEST_CASE("pure LP model matches solve_lp") {
  Mat A(5, 2);
  A << 2, 3, 1, 0, 0, 1, -1, 0, 0, -1;
  Vec b(5);
  b << 3, 1, 1, 0, 0;
  Polytope poly(A, b);
  Vec c(2);
  c << -1, -2;
  MilpModel m;
  m.add_var(-kInf, kInf, c[0]);
  m.add_var(-kInf, kInf, c[1]);
  for (int k = 0; k < 5; ++k) m.add_le({0, 1}, {A(k, 0), A(k, 1)}, b[k]);
  auto sol = solve_milp(m);
  auto ref = solve_lp(c, poly);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-12));
  CHECK(sol.x[0] == doctest::Approx(ref.x[0]));
  CHECK(sol.x[1] == doctest::Approx(ref.x[1]));
  CHECK(sol.nodes == 1);
}

TEST_CASE("infeasible and budget statuses are distinct") {
  MilpModel m;
  int a = m.add_binary(1.0), b = m.add_binary(1.0);
  m.add_ge({a, b}, {1.0, 1.0}, 1.5);
  m.add_le({a, b}, {1.0, 1.0}, 1.8);
  auto inf = solve_milp(m);
  CHECK(inf.status == MilpStatus::Infeasible);
  CHECK_FALSE(inf.has_solution());

  std::mt19937_64 rng(3);
  auto r = random_binary(rng, 14, 4);
  MilpOptions o;
  o.budget.node_limit = 1;
  auto part = solve_milp(r.model, o);
  CHECK(part.status != MilpStatus::Optimal);
  CHECK(part.nodes <= 1);
  if (part.has_solution()) CHECK(part.best_bound <= part.objective + 1e-9);
}

TEST_CASE("budget read from the environment") {
  setenv("INVLP_NODE_LIMIT", "7", 1);
  setenv("INVLP_TIME_LIMIT", "2.5", 1);
  auto b = MilpBudget::from_env();
  CHECK(b.node_limit == 7);
  CHECK(b.time_limit == 2.5);
  unsetenv("INVLP_NODE_LIMIT");
  unsetenv("INVLP_TIME_LIMIT");
}

TEST_CASE("rows must reference declared variables") {
  MilpModel m;
  m.add_binary();
  CHECK_THROWS_AS(m.add_le({0, 3}, {1.0, 1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("random binary programs agree with enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 80; ++trial) {
    auto r = random_binary(rng, 3 + trial % 9, 1 + trial % 4);
    double ref = enumerate_binary(r);
    auto sol = solve_milp(r.model);
    if (std::isinf(ref)) {
      CHECK(sol.status == MilpStatus::Infeasible);
      continue;
    }
    REQUIRE(sol.status == MilpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(ref).epsilon(1e-9));
    CHECK(r.model.max_violation(sol.x) <= 1e-7);
    for (int j = 0; j < r.model.num_vars(); ++j)
      CHECK(std::abs(sol.x[j] - std::round(sol.x[j])) <= 1e-6);
    // bound sandwich
    CHECK(std::abs(sol.best_bound - sol.objective) <= 1e-6 * (1 + std::abs(sol.objective)));
  }
}

TEST_CASE("mixed facility models agree with the greedy oracle") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> F(5, 40), Uc(1, 10), C(2, 12);
  for (int trial = 0; trial < 40; ++trial) {
    int K = 2 + trial % 6;
    std::vector<double> fixed(K), unit(K), cap(K);
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
      fixed[k] = F(rng);
      unit[k] = Uc(rng);
      cap[k] = C(rng);
      total += cap[k];
    }
    double demand = 0.6 * total;
    auto m = facility(fixed, unit, cap, demand);
    auto sol = solve_milp(m);
    REQUIRE(sol.status == MilpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(facility_oracle(fixed, unit, cap, demand)).epsilon(1e-9));
    CHECK(m.max_violation(sol.x) <= 1e-7);
  }
}

TEST_CASE("warm-start incumbents never change the optimum") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    auto r = random_binary(rng, 4 + trial % 7, 2);
    auto cold = solve_milp(r.model);
    if (cold.status != MilpStatus::Optimal) continue;
    // any feasible point, here the all-zero vector when it fits, otherwise the optimum itself
    std::vector<double> start(r.model.num_vars(), 0.0);
    if (r.model.max_violation(start) > 1e-9) start = cold.x;
    MilpModel warm = r.model;
    warm.incumbent = start;
    auto ws = solve_milp(warm);
    REQUIRE(ws.status == MilpStatus::Optimal);
    CHECK(ws.objective == doctest::Approx(cold.objective).epsilon(1e-12));
    CHECK(ws.nodes <= cold.nodes + 1);

    // an optimal incumbent prunes from the first node
    MilpModel best = r.model;
    best.incumbent = cold.x;
    auto bs = solve_milp(best);
    CHECK(bs.objective == doctest::Approx(cold.objective).epsilon(1e-12));
  }
}

TEST_CASE("adding a constraint never lowers the optimum") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> coef(-2, 5);
  for (int trial = 0; trial < 40; ++trial) {
    auto r = random_binary(rng, 5 + trial % 6, 2);
    auto base = solve_milp(r.model);
    MilpModel tighter = r.model;
    std::vector<int> idx;
    std::vector<double> val;
    for (int j = 0; j < tighter.num_vars(); ++j) {
      idx.push_back(j);
      val.push_back(coef(rng));
    }
    tighter.add_le(idx, val, 2.0);
    auto t = solve_milp(tighter);
    if (base.status == MilpStatus::Infeasible) {
      CHECK(t.status == MilpStatus::Infeasible);
      continue;
    }
    if (t.status == MilpStatus::Infeasible) continue;
    CHECK(t.objective >= base.objective - 1e-9);
  }
}

TEST_CASE("cutoff discards worse solutions") {
  MilpModel m;
  int z1 = m.add_binary(-3.0), z2 = m.add_binary(-2.0);
  m.add_le({z1, z2}, {1.0, 1.0}, 1.0);
  MilpOptions o;
  o.cutoff = -3.5;
  CHECK(solve_milp(m, o).status == MilpStatus::Infeasible);
  o.cutoff = -2.5;
  CHECK(solve_milp(m, o).objective == doctest::Approx(-3.0));
}

TEST_CASE("heuristic candidates are polished and adopted") {
  std::vector<double> fixed{30, 10, 25}, unit{1, 8, 2}, cap{10, 10, 10};
  auto m = facility(fixed, unit, cap, 12.0);
  int calls = 0;
  MilpOptions o;
  o.heuristic = [&](const std::vector<double>&) -> std::optional<std::vector<double>> {
    ++calls;
    // open everything; the polish step chooses flows
    std::vector<double> x(m.num_vars(), 0.0);
    for (int k = 0; k < 3; ++k) x[k] = 1.0;
    return x;
  };
  auto sol = solve_milp(m, o);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(facility_oracle(fixed, unit, cap, 12.0)));
  CHECK(calls >= 1);
}

TEST_CASE("deterministic node counts") {
  std::mt19937_64 rng(4);
  auto r = random_binary(rng, 12, 3);
  auto a = solve_milp(r.model), b = solve_milp(r.model);
  CHECK(a.nodes == b.nodes);
  CHECK(a.x == b.x);
}
