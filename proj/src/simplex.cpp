#include "invlp/simplex.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace invlp {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
    case LpStatus::Numerical: return "numerical";
  }
  return "?";
}

LpProblem LpProblem::from_rows(int num_cols, const std::vector<std::vector<int>>& row_idx,
                               const std::vector<std::vector<double>>& row_val) {
  LpProblem p;
  p.num_cols = num_cols;
  p.num_rows = static_cast<int>(row_idx.size());
  std::vector<int> count(num_cols + 1, 0);
  for (const auto& r : row_idx)
    for (int j : r) ++count[j + 1];
  p.col_start.assign(num_cols + 1, 0);
  for (int j = 0; j < num_cols; ++j) p.col_start[j + 1] = p.col_start[j] + count[j + 1];
  p.row_index.resize(p.col_start[num_cols]);
  p.value.resize(p.col_start[num_cols]);
  std::vector<int> fill(p.col_start.begin(), p.col_start.end() - 1);
  for (int i = 0; i < p.num_rows; ++i) {
    for (std::size_t k = 0; k < row_idx[i].size(); ++k) {
      int j = row_idx[i][k];
      p.row_index[fill[j]] = i;
      p.value[fill[j]] = row_val[i][k];
      ++fill[j];
    }
  }
  p.cost.assign(num_cols, 0.0);
  p.col_lo.assign(num_cols, -kInf);
  p.col_hi.assign(num_cols, kInf);
  p.row_lo.assign(p.num_rows, -kInf);
  p.row_hi.assign(p.num_rows, kInf);
  return p;
}

// LU of the basis plus a product-form eta file.
class BasisFactor {
 public:
  BasisFactor(int m, int dense_limit) : m_(m), dense_(m <= dense_limit) {}

  template <class ColFn>
  bool factor(const std::vector<int>& head, ColFn&& col) {
    etas_.clear();
    if (m_ == 0) return true;
    if (dense_) {
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
      for (int r = 0; r < m_; ++r) col(head[r], [&](int i, double v) { B(i, r) = v; });
      // pivots are judged against their own column so big-M columns do not mask the rest
      Eigen::VectorXd scale = B.cwiseAbs().colwise().maxCoeff().transpose();
      dlu_.compute(B);
      const auto& lu = dlu_.matrixLU();
      for (int i = 0; i < m_; ++i)
        if (!(std::abs(lu(i, i)) > 1e-11 * scale[i])) return false;
      return true;
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m_) * 3);
    for (int r = 0; r < m_; ++r)
      col(head[r], [&](int i, double v) { trip.emplace_back(i, r, v); });
    Eigen::SparseMatrix<double> B(m_, m_);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    slu_.analyzePattern(B);
    slu_.factorize(B);
    return slu_.info() == Eigen::Success;
  }

  void ftran(std::vector<double>& v) const {
    if (m_ == 0) return;
    Eigen::Map<Eigen::VectorXd> vm(v.data(), m_);
    if (dense_) {
      Eigen::VectorXd t = dlu_.solve(vm);
      vm = t;
    } else {
      Eigen::VectorXd t = slu_.solve(vm);
      vm = t;
    }
    for (const Eta& e : etas_) {
      double vr = v[e.r] / e.pivot;
      if (vr != 0.0)
        for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * vr;
      v[e.r] = vr;
    }
  }

  void btran(std::vector<double>& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const Eta& e = *it;
      double s = v[e.r];
      for (std::size_t k = 0; k < e.idx.size(); ++k) s -= e.val[k] * v[e.idx[k]];
      v[e.r] = s / e.pivot;
    }
    Eigen::Map<Eigen::VectorXd> vm(v.data(), m_);
    if (dense_) {
      Eigen::VectorXd t = dlu_.transpose().solve(vm);
      vm = t;
    } else {
      Eigen::VectorXd t = slu_.transpose().solve(vm);
      vm = t;
    }
  }

  void update(int r, const std::vector<double>& alpha) {
    Eta e;
    e.r = r;
    e.pivot = alpha[r];
    for (int i = 0; i < m_; ++i) {
      if (i != r && alpha[i] != 0.0 && std::abs(alpha[i]) > 1e-14) {
        e.idx.push_back(i);
        e.val.push_back(alpha[i]);
      }
    }
    etas_.push_back(std::move(e));
  }

  int updates() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int r = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
  };
  int m_;
  bool dense_;
  Eigen::PartialPivLU<Eigen::MatrixXd> dlu_;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> slu_;
  std::vector<Eta> etas_;
};

Simplex::Simplex(LpProblem problem, SimplexOptions options)
    : n_(problem.num_cols), m_(problem.num_rows), p_(std::move(problem)), opt_(options) {
  const int N = n_ + m_;
  lo_.resize(N);
  hi_.resize(N);
  cost_.assign(N, 0.0);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = p_.col_lo[j];
    hi_[j] = p_.col_hi[j];
    cost_[j] = p_.cost[j];
  }
  for (int i = 0; i < m_; ++i) {
    lo_[n_ + i] = p_.row_lo[i];
    hi_[n_ + i] = p_.row_hi[i];
  }
  x_.assign(N, 0.0);
  head_.assign(m_, -1);
  where_.assign(N, -1);
  state_.assign(N, VarState::Lower);
  y_.assign(m_, 0.0);
  d_.assign(N, 0.0);
  factor_ = std::make_unique<BasisFactor>(m_, opt_.dense_limit);
  reset_basis();
}

Simplex::~Simplex() = default;

template <class F>
void Simplex::for_col(int j, F&& f) const {
  if (j < n_) {
    for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) f(p_.row_index[k], p_.value[k]);
  } else {
    f(j - n_, -1.0);
  }
}

double Simplex::col_dot(int j, const std::vector<double>& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) s += p_.value[k] * y[p_.row_index[k]];
  return s;
}

void Simplex::set_col_bounds(int j, double lo, double hi) {
  lo_[j] = lo;
  hi_[j] = hi;
  if (state_[j] != VarState::Basic) place_nonbasic(j);
}

void Simplex::set_cost(const std::vector<double>& c) {
  for (int j = 0; j < n_; ++j) cost_[j] = c[j];
}

void Simplex::place_nonbasic(int j) {
  bool lf = std::isfinite(lo_[j]), hf = std::isfinite(hi_[j]);
  VarState s = state_[j];
  if (s == VarState::Basic) return;
  if (s == VarState::Lower && !lf) s = hf ? VarState::Upper : VarState::Zero;
  if (s == VarState::Upper && !hf) s = lf ? VarState::Lower : VarState::Zero;
  if (s == VarState::Zero && lf) s = VarState::Lower;
  if (s == VarState::Zero && hf) s = VarState::Upper;
  state_[j] = s;
  x_[j] = s == VarState::Lower ? lo_[j] : s == VarState::Upper ? hi_[j] : 0.0;
}

void Simplex::crash_basis() {
  for (int j = 0; j < n_; ++j) {
    where_[j] = -1;
    bool lf = std::isfinite(lo_[j]), hf = std::isfinite(hi_[j]);
    if (lf && hf)
      state_[j] = cost_[j] >= 0.0 ? VarState::Lower : VarState::Upper;
    else if (lf)
      state_[j] = VarState::Lower;
    else if (hf)
      state_[j] = VarState::Upper;
    else
      state_[j] = VarState::Zero;
    place_nonbasic(j);
  }
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    where_[n_ + i] = i;
    state_[n_ + i] = VarState::Basic;
  }
  basis_valid_ = false;
}

void Simplex::reset_basis() { crash_basis(); }

SimplexBasis Simplex::basis() const { return SimplexBasis{state_}; }

void Simplex::set_basis(const SimplexBasis& b) {
  if (static_cast<int>(b.state.size()) != n_ + m_) {
    reset_basis();
    return;
  }
  int nb = 0;
  for (VarState s : b.state) nb += s == VarState::Basic;
  if (nb != m_) {
    reset_basis();
    return;
  }
  state_ = b.state;
  int r = 0;
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic) {
      head_[r] = j;
      where_[j] = r++;
    } else {
      where_[j] = -1;
      place_nonbasic(j);
    }
  }
  basis_valid_ = false;
}

bool Simplex::refactor() {
  auto col = [this](int j, auto&& emit) { for_col(j, emit); };
  if (factor_->factor(head_, col)) {
    basis_valid_ = true;
    return true;
  }
  if (repair_basis() && factor_->factor(head_, col)) {
    repaired_ = true;
    basis_valid_ = true;
    return true;
  }
  basis_valid_ = false;
  return false;
}

// Swaps basic columns that a rank-revealing LU finds dependent for slacks of unpivoted rows.
bool Simplex::repair_basis() {
  if (m_ == 0) return false;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
  for (int r = 0; r < m_; ++r) for_col(head_[r], [&](int i, double v) { B(i, r) = v; });
  for (int r = 0; r < m_; ++r) {
    double s = B.col(r).cwiseAbs().maxCoeff();
    if (s > 0.0) B.col(r) /= s;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
  lu.setThreshold(1e-10);
  const int rank = static_cast<int>(lu.rank());
  if (rank == m_) return false;
  const auto& P = lu.permutationP().indices();
  const auto& Q = lu.permutationQ().indices();
  std::vector<int> free_rows;
  for (int i = 0; i < m_; ++i)
    if (P[i] >= rank) free_rows.push_back(i);
  for (int k = rank; k < m_; ++k) {
    int r = Q[k], j = head_[r];
    int slack = n_ + free_rows[k - rank];
    if (state_[slack] == VarState::Basic) return false;
    state_[j] = std::abs(x_[j] - hi_[j]) < std::abs(x_[j] - lo_[j]) ? VarState::Upper : VarState::Lower;
    where_[j] = -1;
    place_nonbasic(j);
    head_[r] = slack;
    where_[slack] = r;
    state_[slack] = VarState::Basic;
  }
  return true;
}

void Simplex::compute_primal() {
  std::vector<double> rhs(m_, 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
    double xj = x_[j];
    for_col(j, [&](int i, double v) { rhs[i] -= v * xj; });
  }
  factor_->ftran(rhs);
  for (int r = 0; r < m_; ++r) x_[head_[r]] = rhs[r];
}

void Simplex::compute_duals(const std::vector<double>& c) {
  for (int r = 0; r < m_; ++r) y_[r] = c[head_[r]];
  factor_->btran(y_);
  for (int j = 0; j < n_ + m_; ++j)
    d_[j] = state_[j] == VarState::Basic ? 0.0 : c[j] - col_dot(j, y_);
}

bool Simplex::primal_feasible() const {
  for (int r = 0; r < m_; ++r) {
    int j = head_[r];
    double tol = opt_.primal_tol * (1.0 + std::abs(x_[j]));
    if (x_[j] < lo_[j] - tol || x_[j] > hi_[j] + tol) return false;
  }
  return true;
}

bool Simplex::dual_feasible() const {
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == VarState::Basic || lo_[j] == hi_[j]) continue;
    double dj = d_[j];
    switch (state_[j]) {
      case VarState::Lower:
        if (dj < -opt_.dual_tol) return false;
        break;
      case VarState::Upper:
        if (dj > opt_.dual_tol) return false;
        break;
      case VarState::Zero:
        if (std::abs(dj) > opt_.dual_tol) return false;
        break;
      default: break;
    }
  }
  return true;
}

void Simplex::pivot(int r, int q, std::vector<double>& alpha) {
  int leave = head_[r];
  where_[leave] = -1;
  head_[r] = q;
  where_[q] = r;
  state_[q] = VarState::Basic;
  factor_->update(r, alpha);
}

LpStatus Simplex::primal_simplex(bool allow_phase1) {
  const int N = n_ + m_;
  std::vector<double> c1(N, 0.0), alpha(m_);
  int degenerate = 0;
  while (true) {
    if (iterations_ >= opt_.max_iterations) return LpStatus::IterationLimit;
    if (factor_->updates() >= opt_.refactor_every) {
      if (!refactor()) return LpStatus::Numerical;
      compute_primal();
    }
    bool phase1 = false;
    if (allow_phase1) {
      std::fill(c1.begin(), c1.end(), 0.0);
      for (int r = 0; r < m_; ++r) {
        int j = head_[r];
        double tol = opt_.primal_tol * (1.0 + std::abs(x_[j]));
        if (x_[j] < lo_[j] - tol) {
          c1[j] = -1.0;
          phase1 = true;
        } else if (x_[j] > hi_[j] + tol) {
          c1[j] = 1.0;
          phase1 = true;
        }
      }
    }
    compute_duals(phase1 ? c1 : cost_);

    const bool bland = degenerate > opt_.bland_after;
    int q = -1;
    double best = 0.0;
    for (int j = 0; j < N; ++j) {
      if (state_[j] == VarState::Basic || lo_[j] == hi_[j]) continue;
      double dj = d_[j];
      bool ok = (state_[j] == VarState::Lower && dj < -opt_.dual_tol) ||
                (state_[j] == VarState::Upper && dj > opt_.dual_tol) ||
                (state_[j] == VarState::Zero && std::abs(dj) > opt_.dual_tol);
      if (!ok) continue;
      if (bland) {
        q = j;
        break;
      }
      if (std::abs(dj) > best) {
        best = std::abs(dj);
        q = j;
      }
    }
    if (q < 0) {
      if (phase1) return LpStatus::Infeasible;
      return LpStatus::Optimal;
    }
    const double s = d_[q] < 0.0 ? 1.0 : -1.0;
    std::fill(alpha.begin(), alpha.end(), 0.0);
    for_col(q, [&](int i, double v) { alpha[i] = v; });
    factor_->ftran(alpha);

    // Harris two-pass ratio test.
    auto limit_of = [&](int r, bool with_tol, double& lim, double& target) -> bool {
      int j = head_[r];
      double a = alpha[r];
      if (std::abs(a) < opt_.pivot_tol) return false;
      double delta = -s * a;
      double xj = x_[j];
      double tol = with_tol ? opt_.primal_tol * (1.0 + std::abs(xj)) : 0.0;
      double ftol = opt_.primal_tol * (1.0 + std::abs(xj));
      if (phase1 && xj < lo_[j] - ftol) {
        if (delta <= 0) return false;
        lim = (lo_[j] - xj + tol) / delta;
        target = lo_[j];
        return true;
      }
      if (phase1 && xj > hi_[j] + ftol) {
        if (delta >= 0) return false;
        lim = (xj - hi_[j] + tol) / -delta;
        target = hi_[j];
        return true;
      }
      if (delta < 0 && std::isfinite(lo_[j])) {
        lim = (xj - lo_[j] + tol) / -delta;
        target = lo_[j];
        return true;
      }
      if (delta > 0 && std::isfinite(hi_[j])) {
        lim = (hi_[j] - xj + tol) / delta;
        target = hi_[j];
        return true;
      }
      return false;
    };

    double theta_max = kInf;
    for (int r = 0; r < m_; ++r) {
      double lim, tgt;
      if (limit_of(r, true, lim, tgt)) theta_max = std::min(theta_max, lim);
    }
    int leave_r = -1;
    double step = kInf, leave_target = 0.0, best_piv = 0.0;
    for (int r = 0; r < m_; ++r) {
      double lim, tgt;
      if (!limit_of(r, false, lim, tgt)) continue;
      if (bland) {
        if (lim < step - 1e-12 ||
            (lim <= step + 1e-12 && leave_r >= 0 && head_[r] < head_[leave_r])) {
          step = lim;
          leave_r = r;
          leave_target = tgt;
        }
        continue;
      }
      if (lim <= theta_max && std::abs(alpha[r]) > best_piv) {
        best_piv = std::abs(alpha[r]);
        leave_r = r;
        step = lim;
        leave_target = tgt;
      }
    }
    double range = hi_[q] - lo_[q];
    bool flip = std::isfinite(range) && range <= std::min(theta_max, step);
    if (!flip && leave_r < 0) {
      if (phase1) return LpStatus::Numerical;
      return LpStatus::Unbounded;
    }
    if (flip) step = range;
    step = std::max(step, 0.0);
    degenerate = step < 1e-12 ? degenerate + 1 : 0;
    ++iterations_;

    for (int r = 0; r < m_; ++r)
      if (alpha[r] != 0.0) x_[head_[r]] -= s * step * alpha[r];
    if (flip) {
      state_[q] = state_[q] == VarState::Lower ? VarState::Upper : VarState::Lower;
      x_[q] = state_[q] == VarState::Lower ? lo_[q] : hi_[q];
      continue;
    }
    x_[q] += s * step;
    int leave = head_[leave_r];
    x_[leave] = leave_target;
    state_[leave] = leave_target == lo_[leave] ? VarState::Lower : VarState::Upper;
    pivot(leave_r, q, alpha);
  }
}

LpStatus Simplex::dual_simplex() {
  const int N = n_ + m_;
  std::vector<double> rho(m_), alpha(m_), arow(N, 0.0);
  std::vector<char> rejected(N, 0);
  int degenerate = 0;
  while (true) {
    if (iterations_ >= opt_.max_iterations) return LpStatus::IterationLimit;
    if (factor_->updates() >= opt_.refactor_every) {
      if (!refactor()) return LpStatus::Numerical;
      compute_primal();
    }
    compute_duals(cost_);
    const bool bland = degenerate > opt_.bland_after;

    int r = -1;
    double worst = 0.0;
    for (int k = 0; k < m_; ++k) {
      int j = head_[k];
      double tol = opt_.primal_tol * (1.0 + std::abs(x_[j]));
      double inf = 0.0;
      if (x_[j] < lo_[j] - tol)
        inf = lo_[j] - x_[j];
      else if (x_[j] > hi_[j] + tol)
        inf = x_[j] - hi_[j];
      if (inf <= 0.0) continue;
      if (bland) {
        if (r < 0 || j < head_[r]) r = k;
      } else if (inf > worst) {
        worst = inf;
        r = k;
      }
    }
    if (r < 0) return LpStatus::Optimal;
    const int leave = head_[r];
    const bool to_lower = x_[leave] < lo_[leave];

    std::fill(rho.begin(), rho.end(), 0.0);
    rho[r] = 1.0;
    factor_->btran(rho);

    // x_r moves by -a_rj * dx_j; pick entering that pushes it toward the violated bound.
    auto eligible = [&](int j, double a) {
      if (std::abs(a) < opt_.dual_pivot_tol || rejected[j]) return false;
      switch (state_[j]) {
        case VarState::Lower: return to_lower ? a < 0 : a > 0;
        case VarState::Upper: return to_lower ? a > 0 : a < 0;
        case VarState::Zero: return true;
        default: return false;
      }
    };
    double theta_max = kInf;
    for (int j = 0; j < N; ++j) {
      arow[j] = 0.0;
      if (state_[j] == VarState::Basic || lo_[j] == hi_[j]) continue;
      double a = col_dot(j, rho);
      arow[j] = a;
      if (!eligible(j, a)) continue;
      double dj = std::abs(d_[j]);
      if (state_[j] == VarState::Lower && d_[j] < 0) dj = 0.0;
      if (state_[j] == VarState::Upper && d_[j] > 0) dj = 0.0;
      theta_max = std::min(theta_max, (dj + opt_.dual_tol) / std::abs(a));
    }
    int q = -1;
    double best = 0.0, best_ratio = kInf;
    for (int j = 0; j < N; ++j) {
      if (state_[j] == VarState::Basic || lo_[j] == hi_[j]) continue;
      double a = arow[j];
      if (!eligible(j, a)) continue;
      double dj = std::abs(d_[j]);
      if (state_[j] == VarState::Lower && d_[j] < 0) dj = 0.0;
      if (state_[j] == VarState::Upper && d_[j] > 0) dj = 0.0;
      double ratio = dj / std::abs(a);
      if (bland) {
        if (ratio < best_ratio - 1e-12) {
          best_ratio = ratio;
          q = j;
        }
        continue;
      }
      if (ratio <= theta_max && std::abs(a) > best) {
        best = std::abs(a);
        q = j;
        best_ratio = ratio;
      }
    }
    if (q < 0) {
      bool any_rejected = std::find(rejected.begin(), rejected.end(), 1) != rejected.end();
      return any_rejected ? LpStatus::Numerical : LpStatus::Infeasible;
    }

    std::fill(alpha.begin(), alpha.end(), 0.0);
    for_col(q, [&](int i, double v) { alpha[i] = v; });
    factor_->ftran(alpha);
    double arq = alpha[r];
    if (std::abs(arq) < opt_.dual_pivot_tol ||
        std::abs(arq - arow[q]) > 1e-6 * (1.0 + std::abs(arq))) {
      // a fresh factorisation that still disagrees means q is unusable for this row
      if (factor_->updates() == 0) rejected[q] = 1;
      if (!refactor()) return LpStatus::Numerical;
      compute_primal();
      ++iterations_;
      continue;
    }
    std::fill(rejected.begin(), rejected.end(), 0);
    double target = to_lower ? lo_[leave] : hi_[leave];
    double delta = (x_[leave] - target) / arq;
    degenerate = best_ratio < 1e-12 ? degenerate + 1 : 0;
    ++iterations_;
    for (int k = 0; k < m_; ++k)
      if (alpha[k] != 0.0) x_[head_[k]] -= alpha[k] * delta;
    x_[q] += delta;
    x_[leave] = target;
    state_[leave] = to_lower ? VarState::Lower : VarState::Upper;
    pivot(r, q, alpha);
  }
}

LpStatus Simplex::solve() {
  repaired_ = false;
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (!refactor()) {
      crash_basis();
      if (!refactor()) return LpStatus::Numerical;
    }
    for (int j = 0; j < n_ + m_; ++j)
      if (state_[j] != VarState::Basic) place_nonbasic(j);
    compute_primal();
    compute_duals(cost_);
    LpStatus st;
    if (primal_feasible()) {
      st = primal_simplex(false);
    } else if (dual_feasible()) {
      st = dual_simplex();
      if (st == LpStatus::Optimal) {
        compute_duals(cost_);
        if (!dual_feasible()) st = primal_simplex(true);
      }
    } else {
      st = primal_simplex(true);
    }
    if (st == LpStatus::Numerical) {
      if (!std::exchange(repaired_, false)) crash_basis();
      continue;
    }
    if (st != LpStatus::Optimal) return st;
    // clean solve on a fresh factorization
    if (!refactor()) {
      crash_basis();
      continue;
    }
    compute_primal();
    compute_duals(cost_);
    if (primal_feasible() && dual_feasible()) return LpStatus::Optimal;
  }
  return LpStatus::Numerical;
}

void Simplex::make_free_basic() {
  std::vector<double> alpha(m_);
  for (int q = 0; q < n_; ++q) {
    if (state_[q] != VarState::Zero) continue;
    std::fill(alpha.begin(), alpha.end(), 0.0);
    for_col(q, [&](int i, double v) { alpha[i] = v; });
    factor_->ftran(alpha);
    for (double s : {1.0, -1.0}) {
      int leave_r = -1;
      double step = kInf, tgt = 0.0, best_piv = 0.0;
      for (int r = 0; r < m_; ++r) {
        int j = head_[r];
        double a = alpha[r];
        if (std::abs(a) < 1e-9) continue;
        double delta = -s * a, lim, t;
        if (delta < 0 && std::isfinite(lo_[j])) {
          lim = std::max(0.0, (x_[j] - lo_[j]) / -delta);
          t = lo_[j];
        } else if (delta > 0 && std::isfinite(hi_[j])) {
          lim = std::max(0.0, (hi_[j] - x_[j]) / delta);
          t = hi_[j];
        } else {
          continue;
        }
        if (lim < step - 1e-12 || (lim <= step + 1e-12 && std::abs(a) > best_piv)) {
          step = lim;
          leave_r = r;
          tgt = t;
          best_piv = std::abs(a);
        }
      }
      if (leave_r < 0) continue;
      for (int r = 0; r < m_; ++r)
        if (alpha[r] != 0.0) x_[head_[r]] -= s * step * alpha[r];
      x_[q] += s * step;
      int leave = head_[leave_r];
      x_[leave] = tgt;
      state_[leave] = tgt == lo_[leave] ? VarState::Lower : VarState::Upper;
      pivot(leave_r, q, alpha);
      ++iterations_;
      break;
    }
    if (factor_->updates() >= opt_.refactor_every) {
      refactor();
      compute_primal();
    }
  }
  refactor();
  compute_primal();
  compute_duals(cost_);
}

std::vector<double> Simplex::primal() const { return {x_.begin(), x_.begin() + n_}; }

std::vector<double> Simplex::row_activity() const { return {x_.begin() + n_, x_.end()}; }

std::vector<double> Simplex::row_duals() const { return y_; }

std::vector<double> Simplex::reduced_costs() const { return {d_.begin(), d_.begin() + n_}; }

double Simplex::objective() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += cost_[j] * x_[j];
  return s;
}

}  // namespace invlp
