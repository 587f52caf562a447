#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

namespace invlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// min cost'x  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.
// A is stored column-major (CSC).
struct LpProblem {
  int num_cols = 0;
  int num_rows = 0;
  std::vector<int> col_start{0};
  std::vector<int> row_index;
  std::vector<double> value;
  std::vector<double> cost;
  std::vector<double> col_lo, col_hi;
  std::vector<double> row_lo, row_hi;

  // Builds the CSC arrays from row-wise triplets.
  static LpProblem from_rows(int num_cols, const std::vector<std::vector<int>>& row_idx,
                             const std::vector<std::vector<double>>& row_val);
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, Numerical };

const char* to_string(LpStatus s);

enum class VarState : std::uint8_t { Basic, Lower, Upper, Zero };

struct SimplexBasis {
  std::vector<VarState> state;  // num_cols structurals followed by num_rows logicals
  bool empty() const { return state.empty(); }
};

struct SimplexOptions {
  long max_iterations = 5'000'000;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  // dual ratio test: row entries below this are treated as roundoff
  double dual_pivot_tol = 1e-7;
  int refactor_every = 100;
  // consecutive degenerate pivots before falling back to Bland's rule
  int bland_after = 40;
  // dense LU below this many rows, sparse LU above
  int dense_limit = 250;
};

class BasisFactor;

class Simplex {
 public:
  explicit Simplex(LpProblem problem, SimplexOptions options = {});
  ~Simplex();
  Simplex(const Simplex&) = delete;
  Simplex& operator=(const Simplex&) = delete;

  int num_cols() const { return n_; }
  int num_rows() const { return m_; }

  void set_col_bounds(int j, double lo, double hi);
  double col_lo(int j) const { return lo_[j]; }
  double col_hi(int j) const { return hi_[j]; }
  void set_row_bounds(int i, double lo, double hi) { set_col_bounds(n_ + i, lo, hi); }
  void set_cost(const std::vector<double>& c);

  SimplexBasis basis() const;
  void set_basis(const SimplexBasis& b);
  void reset_basis();

  LpStatus solve();

  // Pivots nonbasic free structurals into the basis without changing the
  // objective (up to dual tolerance). Call after an optimal solve.
  void make_free_basic();

  std::vector<double> primal() const;
  std::vector<double> row_activity() const;
  // y with  cost = A'y + d ; for a row tight at its upper bound y <= 0.
  std::vector<double> row_duals() const;
  std::vector<double> reduced_costs() const;
  double objective() const;
  long iterations() const { return iterations_; }

 private:
  template <class F>
  void for_col(int j, F&& f) const;
  double col_dot(int j, const std::vector<double>& y) const;
  bool refactor();
  bool repair_basis();
  void compute_primal();
  void compute_duals(const std::vector<double>& c);
  void pivot(int r, int q, std::vector<double>& alpha);
  void place_nonbasic(int j);
  LpStatus primal_simplex(bool phase1_allowed);
  LpStatus dual_simplex();
  bool primal_feasible() const;
  bool dual_feasible() const;
  void crash_basis();

  int n_ = 0;
  int m_ = 0;
  LpProblem p_;
  SimplexOptions opt_;
  std::vector<double> lo_, hi_, cost_;  // size n_+m_
  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<int> where_;
  std::vector<VarState> state_;
  std::vector<double> y_, d_;
  std::unique_ptr<BasisFactor> factor_;
  long iterations_ = 0;
  bool basis_valid_ = false;
  bool repaired_ = false;  // set when refactor() had to swap columns out
};

}  // namespace invlp
