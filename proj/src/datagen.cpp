#include "invlp/datagen.hpp"

#include <cmath>
#include <stdexcept>

namespace invlp {

namespace {

constexpr int kProcesses = 38, kMaterials = 28, kPurchasable = 9;
constexpr double kStockMax = 200.0, kFlowMax = 300.0, kPurchaseMax = 300.0;

Vec unit_l1(Vec v) { return v / v.lpNorm<1>(); }

}  // namespace

void CustomerConfig::validate() const {
  if (n < 2) throw std::invalid_argument("customer: n must be at least 2");
  if (!(sigma >= 0.0)) throw std::invalid_argument("customer: sigma must be nonnegative");
  if (J < 1) throw std::invalid_argument("customer: J must be at least 1");
  if (num_experiments < 1) throw std::invalid_argument("customer: need at least one experiment");
  if (test_size < 0) throw std::invalid_argument("customer: negative test size");
}

void ProductionConfig::validate() const {
  if (H < 1) throw std::invalid_argument("production: H must be at least 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("production: sigma must be nonnegative");
  if (J < 1) throw std::invalid_argument("production: J must be at least 1");
  if (num_experiments < 1) throw std::invalid_argument("production: need at least one experiment");
  if (test_size < 0) throw std::invalid_argument("production: negative test size");
}

std::vector<Vec> synthesize_observations(const Vec& x, int J, double sigma, Rng& rng) {
  std::vector<Vec> obs;
  obs.reserve(J);
  for (int j = 0; j < J; ++j) {
    Vec o = x;
    if (sigma > 0.0)
      for (int p = 0; p < o.size(); ++p) o[p] += sigma * rng.normal();
    obs.push_back(std::move(o));
  }
  return obs;
}

ExperimentData observe(const Polytope& poly, const Vec& hidden, int J, double sigma, Rng& rng, int id) {
  LpSolution sol = solve_lp(hidden, poly);
  if (sol.status != SolveStatus::Optimal) throw std::runtime_error("forward problem failed");
  return ExperimentData{id, poly, synthesize_observations(sol.x, J, sigma, rng)};
}

ExperimentData draw_experiment(const ParameterSpace& space, const Vec& hidden, int J, double sigma,
                               std::uint64_t seed, int index) {
  Rng prng = Rng::stream(seed, streams::experiment + index);
  Polytope poly = space.sample(prng);
  Rng nrng = Rng::stream(seed, streams::noise + index);
  return observe(poly, hidden, J, sigma, nrng, index);
}

TestSet make_test_set(const ParameterSpace& space, const Vec& hidden, int size, std::uint64_t seed) {
  TestSet ts;
  ts.points.reserve(size);
  for (int k = 0; k < size; ++k) {
    Rng r = Rng::stream(seed, streams::test + k);
    Vec theta;
    Polytope poly = space.sample(r, &theta);
    Vec x = solve_lp(hidden, poly).x;
    ts.points.push_back({std::move(poly), std::move(x), std::move(theta)});
  }
  return ts;
}

Generated gen_customer(const CustomerConfig& cfg) {
  cfg.validate();
  const int n = cfg.n;
  Generated g;
  Rng hr = Rng::stream(cfg.seed, streams::hidden);
  Vec u(n);
  for (int p = 0; p < n; ++p) u[p] = hr.uniform(1.0, 1000.0);
  g.hidden = -unit_l1(u);
  Rng rr = Rng::stream(cfg.seed, streams::reference);
  for (int p = 0; p < n; ++p) u[p] = rr.uniform(1.0, 1000.0);
  g.random_reference = -unit_l1(u);

  ParameterSpace& sp = g.space;
  sp.A0 = Mat::Zero(2 * n + 1, n);
  sp.b0 = Vec::Zero(2 * n + 1);
  for (int p = 0; p < n; ++p) {
    sp.A0(1 + p, p) = 1.0;
    sp.b0[1 + p] = 1.0;
    sp.A0(1 + n + p, p) = -1.0;
    sp.params.push_back({50.0, 150.0, 100.0, {{0, p, 1.0}}});
  }
  // the budget is fixed by the first experiment's prices, drawn from the same stream
  Rng first = Rng::stream(cfg.seed, streams::experiment);
  double total = 0.0;
  for (int p = 0; p < n; ++p) total += first.uniform(50.0, 150.0);
  sp.b0[0] = 0.6 * total;

  for (int i = 0; i < cfg.num_experiments; ++i)
    g.instance.experiments.push_back(draw_experiment(sp, g.hidden, cfg.J, cfg.sigma, cfg.seed, i));
  // utilities stay positive: u_p >= 1e-6, i.e. c_p <= -1e-6
  g.instance.sign_lower = Vec::Constant(n, -kInf);
  g.instance.sign_upper = Vec::Constant(n, -1e-6);
  g.test = make_test_set(sp, g.hidden, cfg.test_size, cfg.seed);
  return g;
}

int production_dim(int H) { return (kProcesses + kMaterials) * H; }

ParameterSpace production_space(int H, bool perturb) {
  const int per = kProcesses + kMaterials;
  const auto& table = conversion_table();
  auto y = [&](int p, int h) { return h * per + (p - 1); };
  auto w = [&](int m, int h) { return h * per + kProcesses + (m - 1); };

  // row layout per period: inventory upper/lower (2 per material), purchase bounds (2 per
  // material), process nonnegativity, one flow bound per nonzero conversion factor
  const int per_rows = 4 * kMaterials + kProcesses + static_cast<int>(table.size());
  auto inv_hi = [&](int m, int h) { return h * per_rows + 2 * (m - 1); };
  auto inv_lo = [&](int m, int h) { return inv_hi(m, h) + 1; };
  auto pur_hi = [&](int m, int h) { return h * per_rows + 2 * kMaterials + 2 * (m - 1); };
  auto pur_lo = [&](int m, int h) { return pur_hi(m, h) + 1; };
  auto proc_lo = [&](int p, int h) { return h * per_rows + 4 * kMaterials + (p - 1); };
  auto flow = [&](int e, int h) { return h * per_rows + 4 * kMaterials + kProcesses + e; };

  ParameterSpace sp;
  sp.A0 = Mat::Zero(per_rows * H, per * H);
  sp.b0 = Vec::Zero(per_rows * H);
  for (int h = 0; h < H; ++h) {
    for (int m = 1; m <= kMaterials; ++m) {
      for (int hh = 0; hh <= h; ++hh) {
        sp.A0(inv_hi(m, h), w(m, hh)) = 1.0;
        sp.A0(inv_lo(m, h), w(m, hh)) = -1.0;
      }
      sp.b0[inv_hi(m, h)] = kStockMax - initial_stock(m);
      sp.b0[inv_lo(m, h)] = initial_stock(m);  // q_min = 0
      sp.A0(pur_hi(m, h), w(m, h)) = 1.0;
      sp.b0[pur_hi(m, h)] = m <= kPurchasable ? kPurchaseMax : 0.0;
      sp.A0(pur_lo(m, h), w(m, h)) = -1.0;
    }
    for (int p = 1; p <= kProcesses; ++p) sp.A0(proc_lo(p, h), y(p, h)) = -1.0;
    for (std::size_t e = 0; e < table.size(); ++e) sp.b0[flow(static_cast<int>(e), h)] = kFlowMax;
  }

  // one parameter per conversion factor, shared by every period and every row it enters
  for (std::size_t e = 0; e < table.size(); ++e) {
    const auto& ce = table[e];
    ParameterSpace::Param par;
    par.nominal = ce.mu;
    par.lo = perturb ? std::min(0.75 * ce.mu, ce.mu) : ce.mu;
    par.hi = perturb ? std::max(0.75 * ce.mu, ce.mu) : ce.mu;
    for (int h = 0; h < H; ++h) {
      for (int hh = 0; hh <= h; ++hh) {
        par.targets.push_back({inv_hi(ce.material, h), y(ce.process, hh), 1.0});
        par.targets.push_back({inv_lo(ce.material, h), y(ce.process, hh), -1.0});
      }
      par.targets.push_back({flow(static_cast<int>(e), h), y(ce.process, h), ce.mu > 0 ? 1.0 : -1.0});
    }
    sp.params.push_back(std::move(par));
  }
  // one parameter per (material, period) demand, entering the cumulative rows of later periods;
  // a demand nothing can supply (material 23: no producing process, no purchases) is left out
  std::vector<char> supplied(kMaterials + 1, 0);
  for (int m = 1; m <= kPurchasable; ++m) supplied[m] = 1;
  for (const auto& ce : table)
    if (ce.mu > 0.0) supplied[ce.material] = 1;
  for (int m = 1; m <= kMaterials; ++m) {
    const double D = nominal_demand(m);
    if (D == 0.0 || !supplied[m]) continue;
    for (int h = 0; h < H; ++h) {
      ParameterSpace::Param par;
      par.nominal = D;
      par.lo = perturb ? 0.9 * D : D;
      par.hi = perturb ? 1.1 * D : D;
      for (int hh = h; hh < H; ++hh) {
        par.targets.push_back({inv_hi(m, hh), -1, 1.0});
        par.targets.push_back({inv_lo(m, hh), -1, -1.0});
      }
      sp.params.push_back(std::move(par));
    }
  }
  return sp;
}

Generated gen_production(const ProductionConfig& cfg) {
  cfg.validate();
  Generated g;
  g.space = production_space(cfg.H, cfg.perturb);
  Rng hr = Rng::stream(cfg.seed, streams::hidden);
  Vec c(production_dim(cfg.H));
  for (int k = 0; k < c.size(); ++k) c[k] = hr.uniform(1.0, 100.0);
  g.hidden = unit_l1(c);
  Rng rr = Rng::stream(cfg.seed, streams::reference);
  for (int k = 0; k < c.size(); ++k) c[k] = rr.uniform(1.0, 100.0);
  g.random_reference = unit_l1(c);
  for (int i = 0; i < cfg.num_experiments; ++i)
    g.instance.experiments.push_back(draw_experiment(g.space, g.hidden, cfg.J, cfg.sigma, cfg.seed, i));
  g.test = make_test_set(g.space, g.hidden, cfg.test_size, cfg.seed);
  return g;
}

double prediction_error(const Vec& c, const TestSet& test, double tol) {
  if (test.points.empty()) return 0.0;
  int wrong = 0;
  for (const auto& tp : test.points) {
    Vec x = solve_lp(c, tp.poly).x;
    if ((x - tp.x).lpNorm<Eigen::Infinity>() > tol) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test.points.size());
}

double dv_metric(const Vec& c, const TestSet& test) {
  double s = 0.0;
  for (const auto& tp : test.points) s += (solve_lp(c, tp.poly).x - tp.x).lpNorm<Eigen::Infinity>();
  return s;
}

}  // namespace invlp
