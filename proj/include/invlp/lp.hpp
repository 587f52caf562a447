#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <vector>

#include "invlp/simplex.hpp"

namespace invlp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Tolerances {
  static constexpr double feasibility = 1e-7;  // relative, also the active-set tolerance
  static constexpr double vertex_dedup = 1e-8;
};

class InvalidPolytope : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// {x : A x <= b}, checked nonempty, bounded and of full column rank on construction.
class Polytope {
 public:
  Polytope(Mat A, Vec b);

  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }
  int rows() const { return static_cast<int>(A_.rows()); }
  int dim() const { return static_cast<int>(A_.cols()); }

  // Coordinate ranges found by the boundedness check.
  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }

  // b_k - min_x a_k'x : the largest slack row k can have. Computed on first use.
  const Vec& max_slack() const;

 private:
  Mat A_;
  Vec b_;
  Vec lo_, hi_;
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  Vec x;
  double objective = 0.0;
  Vec lambda;  // >= 0, c + A'lambda = 0
  std::vector<int> active_set;
  SolveStatus status = SolveStatus::Optimal;
};

// Columns are the generators; zero columns are not allowed. No columns means {0}.
struct ConeGenerators {
  Mat G;

  ConeGenerators() = default;
  explicit ConeGenerators(Mat g);
  ConeGenerators(int dim, const std::vector<Vec>& gens);
  int dim() const { return static_cast<int>(G.rows()); }
  int size() const { return static_cast<int>(G.cols()); }
};

// min c'x over the polytope; returns a vertex with its multipliers.
LpSolution solve_lp(const Vec& cost, const Polytope& poly);

// Repeated forward solves over one polytope, warm-started from the previous basis.
// The polytope must outlive the solver.
class ForwardLp {
 public:
  explicit ForwardLp(const Polytope& poly);
  ~ForwardLp();
  ForwardLp(ForwardLp&&) noexcept;
  LpSolution solve(const Vec& cost);

 private:
  const Polytope* poly_;
  std::unique_ptr<Simplex> lp_;
};

std::vector<int> active_set(const Polytope& poly, const Vec& x,
                            double tol = Tolerances::feasibility);

std::vector<Vec> enumerate_vertices(const Polytope& poly, int cap = 10);

struct ConeDistance {
  double distance = 0.0;
  Vec gamma;        // weights of the nearest cone point
  Vec certificate;  // u with G'u <= 0, |u|_inf <= 1 and u'y = distance
};

// min over gamma >= 0 of |y - G gamma|_1
ConeDistance cone_distance(const Vec& y, const ConeGenerators& cone);
double min_distance_to_cone(const Vec& y, const ConeGenerators& cone);

bool cone_membership(const Vec& v, const ConeGenerators& cone,
                     double tol = Tolerances::feasibility);

}  // namespace invlp
