#pragma once

#include <cstdint>
#include <vector>

#include "invlp/iop.hpp"
#include "invlp/rng.hpp"
#include "invlp/space.hpp"

namespace invlp {

struct TestPoint {
  Polytope poly;
  Vec x;      // optimum under the hidden cost
  Vec theta;  // parameters the polytope was built from, empty when unknown
};

struct TestSet {
  std::vector<TestPoint> points;
};

struct Generated {
  IopInstance instance;  // no reference cost
  Vec hidden;            // min convention, unit 1-norm
  Vec random_reference;  // drawn like the hidden cost from its own stream
  TestSet test;
  ParameterSpace space;
};

struct CustomerConfig {
  int n = 10;
  double sigma = 0.01;
  int J = 5;
  int num_experiments = 30;
  std::uint64_t seed = 0;
  int test_size = 100;
  void validate() const;
};

struct ProductionConfig {
  int H = 1;
  double sigma = 0.0;
  int J = 5;
  int num_experiments = 10;
  std::uint64_t seed = 0;
  int test_size = 100;
  bool perturb = true;  // false: every scenario uses the nominal data
  void validate() const;
};

// max u'x s.t. w'x <= b, 0 <= x <= 1, stored as min (-u)'x. Utilities u ~ U(1,1000), prices
// ~ U(50,150), b = 0.6 * sum of the first experiment's prices.
Generated gen_customer(const CustomerConfig& config);

// Multi-period production planning over (y, w) per period: 38 process levels and 28 purchases.
Generated gen_production(const ProductionConfig& config);
ParameterSpace production_space(int H, bool perturb = true);
int production_dim(int H);

// Conversion factor table (process, material, value), 1-based, and per-material demand/initial stock.
struct ConversionEntry {
  int process, material;
  double mu;
};
const std::vector<ConversionEntry>& conversion_table();
double nominal_demand(int material);
double initial_stock(int material);

// x_j = x + N(0, sigma^2 I), j = 1..J.
std::vector<Vec> synthesize_observations(const Vec& x, int J, double sigma, Rng& rng);

// One experiment drawn from `space`, observed under `hidden`; stream ids follow streams::experiment/noise.
ExperimentData draw_experiment(const ParameterSpace& space, const Vec& hidden, int J, double sigma,
                               std::uint64_t seed, int index);
ExperimentData observe(const Polytope& poly, const Vec& hidden, int J, double sigma, Rng& rng,
                       int id = 0);

TestSet make_test_set(const ParameterSpace& space, const Vec& hidden, int size, std::uint64_t seed);

// Fraction of test points whose optimum under `c` differs from the stored one by more than tol.
double prediction_error(const Vec& c, const TestSet& test, double tol = 1e-6);
// Sum over test points of |x* - x(c)|_inf.
double dv_metric(const Vec& c, const TestSet& test);

}  // namespace invlp
