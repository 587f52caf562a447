#include "invlp/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <queue>
#include <stdexcept>

namespace invlp {

int MilpModel::add_var(double lo, double hi, double cost, std::string name) {
  obj.push_back(cost);
  lb.push_back(lo);
  ub.push_back(hi);
  binary.push_back(0);
  names.push_back(std::move(name));
  return num_vars() - 1;
}

int MilpModel::add_binary(double cost, std::string name) {
  int j = add_var(0.0, 1.0, cost, std::move(name));
  binary[j] = 1;
  return j;
}

int MilpModel::add_row(std::vector<int> idx, std::vector<double> val, double lo, double hi) {
  if (idx.size() != val.size()) throw std::invalid_argument("row index/value size mismatch");
  for (int j : idx)
    if (j < 0 || j >= num_vars()) throw std::invalid_argument("row references an undeclared variable");
  rows.push_back(Row{std::move(idx), std::move(val), lo, hi});
  return num_rows() - 1;
}

int MilpModel::num_binaries() const {
  return static_cast<int>(std::count(binary.begin(), binary.end(), 1));
}

double MilpModel::objective(const std::vector<double>& x) const {
  double s = obj_offset;
  for (int j = 0; j < num_vars(); ++j) s += obj[j] * x[j];
  return s;
}

double MilpModel::max_violation(const std::vector<double>& x) const {
  double v = 0.0;
  for (int j = 0; j < num_vars(); ++j) {
    v = std::max(v, (lb[j] - x[j]) / (1.0 + std::abs(lb[j])));
    v = std::max(v, (x[j] - ub[j]) / (1.0 + std::abs(ub[j])));
    if (binary[j]) v = std::max(v, std::abs(x[j] - std::round(x[j])));
  }
  for (const Row& r : rows) {
    double a = 0.0;
    for (std::size_t k = 0; k < r.idx.size(); ++k) a += r.val[k] * x[r.idx[k]];
    if (std::isfinite(r.lo)) v = std::max(v, (r.lo - a) / (1.0 + std::abs(r.lo)));
    if (std::isfinite(r.hi)) v = std::max(v, (a - r.hi) / (1.0 + std::abs(r.hi)));
  }
  return v;
}

const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "optimal";
    case MilpStatus::Infeasible: return "infeasible";
    case MilpStatus::IncumbentOnly: return "incumbent-only";
    case MilpStatus::NoSolution: return "no-solution";
  }
  return "?";
}

MilpBudget MilpBudget::from_env() {
  MilpBudget b;
  if (const char* s = std::getenv("INVLP_NODE_LIMIT")) b.node_limit = std::atol(s);
  if (const char* s = std::getenv("INVLP_TIME_LIMIT")) b.time_limit = std::atof(s);
  return b;
}

namespace {

struct Node {
  std::vector<std::pair<int, char>> fixes;
  std::shared_ptr<SimplexBasis> basis;
  double bound = -kInf;
  long seq = 0;
  int depth = 0;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<Node>& a, const std::shared_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->seq < b->seq;  // newest first among ties
  }
};

// Rows with exactly one continuous variable turn into bounds once their binaries are fixed.
struct SingletonRow {
  int row;
  int var;
  double coef;
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& m, const MilpOptions& o) : m_(m), o_(o), lp_(make_problem(m)) {
    for (int i = 0; i < m_.num_rows(); ++i) {
      const auto& r = m_.rows[i];
      int cont = -1, count = 0;
      for (std::size_t k = 0; k < r.idx.size(); ++k) {
        if (!m_.binary[r.idx[k]] && r.val[k] != 0.0) {
          cont = static_cast<int>(k);
          ++count;
        }
      }
      if (count == 1 && r.idx.size() > 1) singles_.push_back({i, r.idx[cont], r.val[cont]});
    }
  }

  MilpSolution run() {
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if (m_.incumbent) consider(*m_.incumbent);

    std::priority_queue<std::shared_ptr<Node>, std::vector<std::shared_ptr<Node>>, NodeOrder> open;
    auto root = std::make_shared<Node>();
    root->seq = seq_++;
    open.push(root);
    bool exhausted = true;
    double unresolved_bound = kInf;
    long nodes = 0;
    while (!open.empty()) {
      if (nodes >= o_.budget.node_limit || elapsed() >= o_.budget.time_limit) {
        exhausted = false;
        break;
      }
      auto node = open.top();
      open.pop();
      if (prunable(node->bound)) continue;
      ++nodes;
      if (!apply(node->fixes)) continue;
      if (node->basis) lp_.set_basis(*node->basis);
      LpStatus st = lp_.solve();
      if (st == LpStatus::Numerical || st == LpStatus::IterationLimit) {
        lp_.reset_basis();
        st = lp_.solve();
      }
      if (st == LpStatus::Numerical || st == LpStatus::IterationLimit) {
        // the subtree is unexplored, so no proof can be claimed for it
        exhausted = false;
        unresolved_bound = std::min(unresolved_bound, node->bound);
        continue;
      }
      if (st != LpStatus::Optimal) continue;
      double bound = lp_.objective() + m_.obj_offset;
      if (prunable(bound)) continue;
      std::vector<double> x = lp_.primal();
      auto basis = std::make_shared<SimplexBasis>(lp_.basis());

      int branch = most_fractional(x, o_.int_tol);
      if (branch < 0) {
        if (!polish(x, node->fixes)) {
          // integral within tolerance but not after rounding: branch on what is left
          if (!apply(node->fixes)) continue;
          branch = most_fractional(x, 1e-13);
          if (branch < 0) {
            exhausted = false;
            unresolved_bound = std::min(unresolved_bound, bound);
            continue;
          }
        } else {
          continue;
        }
      } else if (o_.heuristic && node->depth <= o_.heuristic_depth) {
        if (auto cand = o_.heuristic(x)) consider(*cand);
        if (prunable(bound)) continue;
      }
      char first = x[branch] >= 0.5 ? 1 : 0;
      for (char v : {static_cast<char>(1 - first), first}) {
        auto child = std::make_shared<Node>();
        child->fixes = node->fixes;
        child->fixes.emplace_back(branch, v);
        child->basis = basis;
        child->bound = bound;
        child->depth = node->depth + 1;
        child->seq = seq_++;
        open.push(child);
      }
    }

    MilpSolution sol;
    sol.nodes = nodes;
    sol.lp_iterations = lp_.iterations();
    sol.seconds = elapsed();
    double open_bound = unresolved_bound;
    if (!exhausted)
      while (!open.empty()) {
        open_bound = std::min(open_bound, open.top()->bound);
        open.pop();
      }
    if (has_inc_) {
      sol.x = inc_;
      sol.objective = inc_obj_;
      sol.status = exhausted ? MilpStatus::Optimal : MilpStatus::IncumbentOnly;
      sol.best_bound = exhausted ? inc_obj_ : std::min(inc_obj_, open_bound);
    } else {
      sol.status = exhausted ? MilpStatus::Infeasible : MilpStatus::NoSolution;
      sol.best_bound = exhausted ? kInf : open_bound;
    }
    return sol;
  }

 private:
  static LpProblem make_problem(const MilpModel& m) {
    std::vector<std::vector<int>> ri;
    std::vector<std::vector<double>> rv;
    ri.reserve(m.rows.size());
    rv.reserve(m.rows.size());
    for (const auto& r : m.rows) {
      ri.push_back(r.idx);
      rv.push_back(r.val);
    }
    LpProblem p = LpProblem::from_rows(m.num_vars(), ri, rv);
    p.cost = m.obj;
    p.col_lo = m.lb;
    p.col_hi = m.ub;
    for (int i = 0; i < m.num_rows(); ++i) {
      p.row_lo[i] = m.rows[i].lo;
      p.row_hi[i] = m.rows[i].hi;
    }
    return p;
  }

  bool prunable(double bound) const {
    if (bound > o_.cutoff + o_.abs_gap + o_.rel_gap * std::abs(o_.cutoff)) return true;
    if (!has_inc_) return false;
    return bound >= inc_obj_ - std::max(o_.abs_gap, o_.rel_gap * std::abs(inc_obj_));
  }

  int most_fractional(const std::vector<double>& x, double tol) const {
    int best = -1;
    double bf = tol;
    for (int j = 0; j < m_.num_vars(); ++j) {
      if (!m_.binary[j] || lo_[j] == hi_[j]) continue;
      double f = x[j] - std::floor(x[j]);
      f = std::min(f, 1.0 - f);
      if (f > bf) {
        bf = f;
        best = j;
      }
    }
    return best;
  }

  // Resets bounds to the model, applies node fixes and singleton-row implications.
  bool apply(const std::vector<std::pair<int, char>>& fixes) {
    lo_ = m_.lb;
    hi_ = m_.ub;
    for (auto [j, v] : fixes) lo_[j] = hi_[j] = v;
    for (const auto& s : singles_) {
      const auto& r = m_.rows[s.row];
      double rest = 0.0;
      bool fixed = true;
      for (std::size_t k = 0; k < r.idx.size() && fixed; ++k) {
        int j = r.idx[k];
        if (j == s.var) continue;
        if (lo_[j] != hi_[j]) fixed = false;
        rest += r.val[k] * lo_[j];
      }
      if (!fixed) continue;
      double a = (r.lo - rest) / s.coef, b = (r.hi - rest) / s.coef;
      if (s.coef < 0) std::swap(a, b);
      lo_[s.var] = std::max(lo_[s.var], a);
      hi_[s.var] = std::min(hi_[s.var], b);
      if (lo_[s.var] > hi_[s.var] + o_.feas_tol * (1.0 + std::abs(hi_[s.var]))) return false;
      if (lo_[s.var] > hi_[s.var]) lo_[s.var] = hi_[s.var];
    }
    for (int j = 0; j < m_.num_vars(); ++j) lp_.set_col_bounds(j, lo_[j], hi_[j]);
    return true;
  }

  // Fixes binaries to their rounded values and re-solves for the continuous part.
  bool polish(const std::vector<double>& x, const std::vector<std::pair<int, char>>& fixes) {
    std::vector<std::pair<int, char>> all = fixes;
    for (int j = 0; j < m_.num_vars(); ++j)
      if (m_.binary[j]) all.emplace_back(j, static_cast<char>(std::lround(x[j])));
    if (!apply(all)) return false;
    if (lp_.solve() != LpStatus::Optimal) return false;
    std::vector<double> y = lp_.primal();
    for (int j = 0; j < m_.num_vars(); ++j)
      if (m_.binary[j]) y[j] = std::round(y[j]);
    if (m_.max_violation(y) > o_.feas_tol) return false;
    offer(y);
    return true;
  }

  // Heuristic or warm-start candidate: its binaries are kept, continuous part re-optimised.
  void consider(const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != m_.num_vars()) return;
    bool ok = m_.max_violation(x) <= o_.feas_tol;
    if (!polish(x, {}) && ok) offer(x);
  }

  void offer(const std::vector<double>& x) {
    double f = m_.objective(x);
    if (f > o_.cutoff + o_.abs_gap + o_.rel_gap * std::abs(o_.cutoff)) return;
    if (!has_inc_ || f < inc_obj_ - 1e-12 * (1.0 + std::abs(inc_obj_))) {
      has_inc_ = true;
      inc_ = x;
      inc_obj_ = f;
    }
  }

  const MilpModel& m_;
  const MilpOptions& o_;
  Simplex lp_;
  std::vector<SingletonRow> singles_;
  std::vector<double> lo_, hi_;
  bool has_inc_ = false;
  std::vector<double> inc_;
  double inc_obj_ = kInf;
  long seq_ = 0;
};

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const MilpOptions& options) {
  for (const auto& r : model.rows)
    for (int j : r.idx)
      if (j < 0 || j >= model.num_vars()) throw std::invalid_argument("row references an undeclared variable");
  BranchAndBound bb(model, options);
  return bb.run();
}

}  // namespace invlp
