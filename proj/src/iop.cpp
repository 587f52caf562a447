#include "invlp/iop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace invlp {

LossNorm parse_loss_norm(const std::string& s) {
  if (s == "1" || s == "l1" || s == "L1") return LossNorm::L1;
  if (s == "inf" || s == "linf" || s == "Inf" || s == "Linf") return LossNorm::Inf;
  if (s == "2" || s == "l2" || s == "L2")
    throw std::invalid_argument("2-norm loss needs a mixed-integer QP solver; use 1 or inf");
  throw std::invalid_argument("unknown loss norm '" + s + "'");
}

const char* to_string(LossNorm n) { return n == LossNorm::L1 ? "1" : "inf"; }

int IopInstance::dim() const {
  if (!experiments.empty()) return experiments.front().poly.dim();
  return static_cast<int>(reference.size());
}

void IopInstance::validate() const {
  const int n = dim();
  for (const auto& e : experiments) {
    if (e.poly.dim() != n) throw std::invalid_argument("experiments differ in dimension");
    if (e.observations.empty()) throw std::invalid_argument("experiment without observations");
    for (const auto& x : e.observations) {
      if (x.size() != n) throw std::invalid_argument("observation dimension mismatch");
      if (!x.allFinite()) throw std::invalid_argument("observations must be finite");
    }
  }
  if (reference.size() != 0 && reference.size() != n) throw std::invalid_argument("reference dimension mismatch");
  if (reference.size() != 0 && !reference.allFinite()) throw std::invalid_argument("reference must be finite");
  if (sign_lower.size() != 0 && sign_lower.size() != n) throw std::invalid_argument("sign bound dimension mismatch");
  if (sign_upper.size() != 0 && sign_upper.size() != n) throw std::invalid_argument("sign bound dimension mismatch");
  if (big_m && !(*big_m > 0.0)) throw std::invalid_argument("big-M must be positive");
}

double default_big_m(const IopInstance&, const std::vector<int>&) { return 1e4; }

namespace {

Vec row_norms(const Polytope& poly) {
  Vec r = poly.A().rowwise().norm();
  for (int k = 0; k < r.size(); ++k)
    if (r[k] == 0.0) r[k] = 1.0;
  return r;
}

}  // namespace

double experiment_loss(const Vec& x, const ExperimentData& e, LossNorm norm) {
  double s = 0.0;
  for (const Vec& o : e.observations)
    s += norm == LossNorm::L1 ? (o - x).lpNorm<1>() : (o - x).lpNorm<Eigen::Infinity>();
  return s;
}

double loss_eval(const std::vector<Vec>& x, const IopInstance& inst, const std::vector<int>& subset) {
  if (x.size() != subset.size()) throw std::invalid_argument("one vertex per experiment expected");
  double s = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) s += experiment_loss(x[i], inst.experiments[subset[i]], inst.norm);
  return s;
}

int AdmissibleCone::dim() const {
  if (!cones.empty()) return cones.front().dim();
  return static_cast<int>(lower.size());
}

bool AdmissibleCone::contains(const Vec& v, double tol) const {
  for (int p = 0; p < v.size(); ++p) {
    if (lower.size() && v[p] < lower[p] - tol * (1.0 + std::abs(lower[p]))) return false;
    if (upper.size() && v[p] > upper[p] + tol * (1.0 + std::abs(upper[p]))) return false;
  }
  for (const auto& k : cones)
    if (!cone_membership(v, k, tol)) return false;
  return true;
}

ConeGenerators cone_of_vertex(const Polytope& poly, const std::vector<int>& active) {
  Mat G(poly.dim(), static_cast<int>(active.size()));
  for (std::size_t t = 0; t < active.size(); ++t) G.col(static_cast<int>(t)) = -poly.A().row(active[t]).transpose();
  return ConeGenerators(G);
}

AdmissibleCone admissible_cone(const IopInstance& inst, const VertexProjection& proj) {
  AdmissibleCone k;
  for (std::size_t i = 0; i < proj.subset.size(); ++i)
    k.cones.push_back(cone_of_vertex(inst.experiments[proj.subset[i]].poly, proj.active[i]));
  k.lower = inst.sign_lower;
  k.upper = inst.sign_upper;
  return k;
}

namespace {

double bound_or(const Vec& v, int p, double dflt) { return v.size() ? v[p] : dflt; }

// Unit 1-norm cost variables shared by P1 and FP; returns c indices.
void add_cost_block(MilpModel& m, const Vec& lo, const Vec& hi, int n, std::vector<int>& c,
                    std::vector<int>& cp, std::vector<int>& cm, std::vector<int>& w) {
  for (int p = 0; p < n; ++p) {
    double l = std::max(-1.0, bound_or(lo, p, -kInf)), h = std::min(1.0, bound_or(hi, p, kInf));
    c.push_back(m.add_var(l, h, 0.0, "c" + std::to_string(p)));
  }
  for (int p = 0; p < n; ++p) cp.push_back(m.add_var(0.0, 1.0));
  for (int p = 0; p < n; ++p) cm.push_back(m.add_var(0.0, 1.0));
  for (int p = 0; p < n; ++p) {
    w.push_back(m.add_binary(0.0, "w" + std::to_string(p)));
    // a fixed sign fixes the split
    if (bound_or(hi, p, kInf) <= 0.0) {
      m.ub[w[p]] = 0.0;
      m.ub[cp[p]] = 0.0;
    } else if (bound_or(lo, p, -kInf) >= 0.0) {
      m.lb[w[p]] = 1.0;
      m.ub[cm[p]] = 0.0;
    }
  }
  std::vector<int> all;
  for (int p = 0; p < n; ++p) {
    m.add_eq({c[p], cp[p], cm[p]}, {1.0, -1.0, 1.0}, 0.0);
    m.add_le({cp[p], w[p]}, {1.0, -1.0}, 0.0);
    m.add_le({cm[p], w[p]}, {1.0, 1.0}, 1.0);
    all.push_back(cp[p]);
    all.push_back(cm[p]);
  }
  m.add_eq(all, std::vector<double>(all.size(), 1.0), 1.0);
}

// Moves x onto the affine hull of the rows it (nearly) satisfies with equality.
Vec snap_to_face(const Polytope& poly, const Vec& x, const std::vector<int>& extra) {
  std::vector<int> T = extra;
  Vec r = poly.b() - poly.A() * x;
  for (int k = 0; k < poly.rows(); ++k)
    if (std::abs(r[k]) <= 1e-7 * (1.0 + std::abs(poly.b()[k]))) T.push_back(k);
  std::sort(T.begin(), T.end());
  T.erase(std::unique(T.begin(), T.end()), T.end());
  if (T.empty()) return x;
  Mat AT(T.size(), poly.dim());
  Vec rT(T.size());
  for (std::size_t t = 0; t < T.size(); ++t) {
    AT.row(static_cast<int>(t)) = poly.A().row(T[t]);
    rT[static_cast<int>(t)] = poly.b()[T[t]] - poly.A().row(T[t]).dot(x);
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(AT);
  Vec y = x + cod.solve(rT);
  Vec ry = poly.b() - poly.A() * y;
  for (int k = 0; k < poly.rows(); ++k)
    if (ry[k] < -1e-9 * (1.0 + std::abs(poly.b()[k]))) return x;
  return y;
}

// Smallest multipliers on the chosen rows reproducing c; used by the big-M audit.
double min_multiplier_peak(const Polytope& poly, const std::vector<int>& rows, const Vec& c) {
  const int n = poly.dim(), T = static_cast<int>(rows.size());
  if (T == 0) return 0.0;
  const Vec rn = row_norms(poly);
  std::vector<std::vector<int>> ri(n);
  std::vector<std::vector<double>> rv(n);
  for (int p = 0; p < n; ++p)
    for (int t = 0; t < T; ++t)
      if (poly.A()(rows[t], p) != 0.0) {
        ri[p].push_back(t);
        rv[p].push_back(poly.A()(rows[t], p) / rn[rows[t]]);
      }
  LpProblem lp = LpProblem::from_rows(T, ri, rv);
  lp.cost.assign(T, 1.0);
  lp.col_lo.assign(T, 0.0);
  lp.col_hi.assign(T, kInf);
  for (int p = 0; p < n; ++p) lp.row_lo[p] = lp.row_hi[p] = -c[p];
  Simplex s(std::move(lp));
  if (s.solve() != LpStatus::Optimal) return -1.0;
  auto y = s.primal();
  return *std::max_element(y.begin(), y.end());
}

}  // namespace

P1Model build_p1(const IopInstance& inst, const std::vector<int>& subset, double big_m) {
  if (subset.empty()) throw std::invalid_argument("P1 needs at least one experiment");
  inst.validate();
  P1Model pm;
  pm.subset = subset;
  pm.n = inst.dim();
  pm.big_m = big_m;
  const int n = pm.n;
  MilpModel& m = pm.milp;
  add_cost_block(m, inst.sign_lower, inst.sign_upper, n, pm.c, pm.cplus, pm.cminus, pm.w);

  for (int e : subset) {
    const ExperimentData& ex = inst.experiments.at(e);
    const Polytope& poly = ex.poly;
    const int rows = poly.rows();
    // unit rows: multipliers then measure conditioning only, independent of row scale
    const Vec rn = row_norms(poly);
    const Vec S = poly.max_slack().cwiseQuotient(rn);
    std::vector<int> x, s, lam, z;
    for (int p = 0; p < n; ++p) x.push_back(m.add_var(poly.lower()[p], poly.upper()[p]));
    for (int k = 0; k < rows; ++k) s.push_back(m.add_var(0.0, S[k]));
    for (int k = 0; k < rows; ++k) lam.push_back(m.add_var(0.0, big_m));
    for (int k = 0; k < rows; ++k) z.push_back(m.add_binary());
    for (int k = 0; k < rows; ++k) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int p = 0; p < n; ++p)
        if (poly.A()(k, p) != 0.0) {
          idx.push_back(x[p]);
          val.push_back(poly.A()(k, p) / rn[k]);
        }
      idx.push_back(s[k]);
      val.push_back(1.0);
      m.add_eq(idx, val, poly.b()[k] / rn[k]);
      // the slack range is known exactly, so only the multipliers need big-M
      if (S[k] > 0.0) m.add_le({s[k], z[k]}, {1.0, S[k]}, S[k]);
      m.add_le({lam[k], z[k]}, {1.0, -big_m}, 0.0);
    }
    for (int p = 0; p < n; ++p) {
      std::vector<int> idx{pm.c[p]};
      std::vector<double> val{1.0};
      for (int k = 0; k < rows; ++k)
        if (poly.A()(k, p) != 0.0) {
          idx.push_back(lam[k]);
          val.push_back(poly.A()(k, p) / rn[k]);
        }
      m.add_eq(idx, val, 0.0);
    }
    m.add_ge(z, std::vector<double>(rows, 1.0), n);

    std::vector<int> li;
    std::vector<double> lv;
    double lconst = 0.0;
    const auto& obs = ex.observations;
    const int J = static_cast<int>(obs.size());
    if (inst.norm == LossNorm::L1) {
      // sum_j |o_jp - x_p| is convex piecewise linear in x_p: one segment variable per piece
      for (int p = 0; p < n; ++p) {
        double lo = poly.lower()[p], hi = poly.upper()[p];
        std::vector<double> v(J);
        for (int j = 0; j < J; ++j) v[j] = obs[j][p];
        for (double o : v) lconst += std::abs(o - lo);
        std::vector<double> br;
        for (double o : v)
          if (o > lo && o < hi) br.push_back(o);
        br.push_back(hi);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        std::vector<int> idx{x[p]};
        std::vector<double> val{1.0};
        double left = lo;
        for (double right : br) {
          if (right <= left) continue;
          int below = 0, above = 0;
          for (double o : v) {
            if (o <= left) ++below;
            if (o >= right) ++above;
          }
          double slope = below - above;
          int d = m.add_var(0.0, right - left, slope);
          idx.push_back(d);
          val.push_back(-1.0);
          li.push_back(d);
          lv.push_back(slope);
          left = right;
        }
        m.add_eq(idx, val, lo);
      }
    } else {
      for (int j = 0; j < J; ++j) {
        int t = m.add_var(0.0, kInf, 1.0);
        for (int p = 0; p < n; ++p) {
          m.add_ge({t, x[p]}, {1.0, 1.0}, obs[j][p]);
          m.add_ge({t, x[p]}, {1.0, -1.0}, -obs[j][p]);
        }
        li.push_back(t);
        lv.push_back(1.0);
      }
    }
    m.obj_offset += lconst;
    pm.x.push_back(x);
    pm.s.push_back(s);
    pm.lam.push_back(lam);
    pm.z.push_back(z);
    pm.loss_idx.push_back(li);
    pm.loss_val.push_back(lv);
    pm.loss_const.push_back(lconst);
  }
  return pm;
}

void add_integer_cut(P1Model& pm, const VertexProjection& proj) {
  if (proj.subset != pm.subset) throw std::invalid_argument("cut from a different experiment subset");
  std::vector<int> idx;
  for (std::size_t i = 0; i < pm.subset.size(); ++i) {
    std::vector<char> in(pm.z[i].size(), 0);
    for (int t : proj.active[i]) in[t] = 1;
    for (std::size_t t = 0; t < pm.z[i].size(); ++t)
      if (!in[t]) idx.push_back(pm.z[i][t]);
  }
  pm.milp.add_ge(idx, std::vector<double>(idx.size(), 1.0), 1.0);
}

void add_loss_floor(P1Model& pm, int i, double floor) {
  double rhs = floor - pm.loss_const[i];
  pm.milp.add_ge(pm.loss_idx[i], pm.loss_val[i], rhs - 1e-9 * (1.0 + std::abs(floor)));
}

namespace {

void add_second_best(P1Model& pm, const SecondBest& sb, double floor) {
  const int i = sb.position;
  std::vector<char> in(pm.z[i].size(), 0);
  for (int t : sb.active) in[t] = 1;
  for (std::size_t t = 0; t < pm.z[i].size(); ++t) {
    if (in[t]) continue;
    int zt = pm.z[i][t];
    if (!std::isfinite(sb.value)) {
      pm.milp.ub[zt] = 0.0;
      continue;
    }
    double gap = sb.value - floor;
    if (gap <= 1e-9 * (1.0 + std::abs(floor))) continue;
    auto idx = pm.loss_idx[i];
    auto val = pm.loss_val[i];
    idx.push_back(zt);
    val.push_back(-gap);
    double rhs = floor - pm.loss_const[i];
    pm.milp.add_ge(idx, val, rhs - 1e-9 * (1.0 + std::abs(sb.value)));
  }
}

// Full binary assignment induced by a cost: forward vertices give z, signs give w.
class CostRounding {
 public:
  CostRounding(const IopInstance& inst, const P1Model& pm) : inst_(inst), pm_(pm) {
    for (int e : pm.subset) fwd_.emplace_back(inst.experiments[e].poly);
  }

  std::optional<std::vector<double>> operator()(const Vec& c) {
    double l1 = c.lpNorm<1>();
    if (!(l1 > 1e-9) || !c.allFinite()) return std::nullopt;
    Vec cn = c / l1;
    std::vector<double> x(pm_.milp.num_vars(), 0.0);
    for (int p = 0; p < pm_.n; ++p) {
      int w = pm_.w[p];
      double v = cn[p] > 0.0 ? 1.0 : 0.0;
      x[w] = std::clamp(v, pm_.milp.lb[w], pm_.milp.ub[w]);
      x[pm_.c[p]] = cn[p];
    }
    std::vector<char> key;
    for (std::size_t i = 0; i < pm_.subset.size(); ++i) {
      const Polytope& poly = inst_.experiments[pm_.subset[i]].poly;
      try {
        auto sol = fwd_[i].solve(cn);
        std::vector<int> act = active_set(poly, sol.x);
        for (int t : act) x[pm_.z[i][t]] = 1.0;
        for (int p = 0; p < pm_.n; ++p) x[pm_.x[i][p]] = sol.x[p];
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    for (int j = 0; j < pm_.milp.num_vars(); ++j)
      if (pm_.milp.binary[j]) key.push_back(static_cast<char>(x[j] > 0.5));
    if (!seen_.insert(key).second) return std::nullopt;
    return x;
  }

 private:
  const IopInstance& inst_;
  const P1Model& pm_;
  std::vector<ForwardLp> fwd_;
  std::set<std::vector<char>> seen_;
};

std::vector<double> warm_assignment(const IopInstance& inst, const P1Model& pm, const VertexProjection& ws) {
  std::vector<double> x(pm.milp.num_vars(), 0.0);
  for (int p = 0; p < pm.n; ++p) {
    int w = pm.w[p];
    double v = ws.c.size() && ws.c[p] > 0.0 ? 1.0 : 0.0;
    x[w] = std::clamp(v, pm.milp.lb[w], pm.milp.ub[w]);
  }
  for (std::size_t i = 0; i < pm.subset.size(); ++i) {
    const Polytope& poly = inst.experiments[pm.subset[i]].poly;
    for (int t : active_set(poly, ws.x[i])) x[pm.z[i][t]] = 1.0;
  }
  return x;
}

}  // namespace

VertexProjection solve_phase1(const IopInstance& inst, const std::vector<int>& subset, const Phase1Options& opt) {
  double M = inst.big_m ? *inst.big_m : default_big_m(inst, subset);
  VertexProjection out;
  out.subset = subset;
  for (int escal = 0;; ++escal) {
    P1Model pm = build_p1(inst, subset, M);
    for (const auto& cut : opt.cuts) add_integer_cut(pm, cut);
    if (!opt.floors.empty()) {
      if (opt.floors.size() != subset.size()) throw std::invalid_argument("one floor per experiment expected");
      for (std::size_t i = 0; i < subset.size(); ++i) add_loss_floor(pm, static_cast<int>(i), opt.floors[i]);
      for (const auto& sb : opt.second_best) add_second_best(pm, sb, opt.floors[sb.position]);
    }

    CostRounding rounding(inst, pm);
    MilpOptions mo;
    mo.budget = opt.iop.budget;
    mo.cutoff = opt.cutoff;
    if (opt.warm_start) pm.milp.incumbent = warm_assignment(inst, pm, *opt.warm_start);
    std::vector<Vec> seeds = opt.seed_costs;
    if (opt.warm_start && opt.warm_start->c.size()) seeds.push_back(opt.warm_start->c);
    if (opt.iop.strengthen) {
      std::size_t next_seed = 0;
      std::vector<char> last_tight;
      // z from the rows tight at the relaxed points; the polish step then looks for a common cost
      auto tight = [&](const std::vector<double>& relax) -> std::optional<std::vector<double>> {
        std::vector<double> cand = relax;
        std::vector<char> pattern;
        for (std::size_t i = 0; i < subset.size(); ++i) {
          const Polytope& poly = inst.experiments[subset[i]].poly;
          Vec xi(pm.n);
          for (int p = 0; p < pm.n; ++p) xi[p] = relax[pm.x[i][p]];
          auto T = active_set(poly, xi);
          if (static_cast<int>(T.size()) < pm.n) return std::nullopt;
          for (int k = 0; k < poly.rows(); ++k) cand[pm.z[i][k]] = 0.0;
          for (int t : T) cand[pm.z[i][t]] = 1.0;
          for (int k = 0; k < poly.rows(); ++k) pattern.push_back(static_cast<char>(cand[pm.z[i][k]]));
        }
        if (pattern == last_tight) return std::nullopt;
        last_tight = std::move(pattern);
        return cand;
      };
      mo.heuristic = [&](const std::vector<double>& relax) -> std::optional<std::vector<double>> {
        // seeds first, one per call, then the relaxation's tight rows and its cost direction
        while (next_seed < seeds.size()) {
          auto cand = rounding(seeds[next_seed++]);
          if (cand) return cand;
        }
        if (auto cand = tight(relax)) return cand;
        Vec c(pm.n);
        for (int p = 0; p < pm.n; ++p) c[p] = relax[pm.c[p]];
        return rounding(c);
      };
    }
    MilpSolution sol = solve_milp(pm.milp, mo);
    out.status = sol.status;
    out.nodes += sol.nodes;
    out.big_m = M;
    out.big_m_escalations = escal;
    if (!sol.has_solution()) return out;

    out.x.clear();
    out.active.clear();
    out.loss.clear();
    out.c.resize(pm.n);
    for (int p = 0; p < pm.n; ++p) out.c[p] = sol.x[pm.c[p]];
    double usage = 0.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const Polytope& poly = inst.experiments[subset[i]].poly;
      Vec xi(pm.n);
      for (int p = 0; p < pm.n; ++p) xi[p] = sol.x[pm.x[i][p]];
      std::vector<int> zrows;
      for (int k = 0; k < poly.rows(); ++k)
        if (sol.x[pm.z[i][k]] > 0.5) zrows.push_back(k);
      xi = snap_to_face(poly, xi, zrows);
      out.x.push_back(xi);
      out.active.push_back(active_set(poly, xi));
      out.loss.push_back(experiment_loss(xi, inst.experiments[subset[i]], inst.norm));
      double peak = min_multiplier_peak(poly, zrows, out.c);
      if (peak < 0.0) {
        for (int k = 0; k < poly.rows(); ++k) peak = std::max(peak, sol.x[pm.lam[i][k]]);
      }
      usage = std::max(usage, peak / M);
    }
    out.total_loss = std::accumulate(out.loss.begin(), out.loss.end(), 0.0);
    out.big_m_usage = usage;
    if (usage < 0.99 || escal >= 4) return out;
    M *= 10.0;
  }
}

double second_best_loss(const IopInstance& inst, int experiment, const std::vector<int>& active, double floor,
                        const IopOptions& options) {
  Phase1Options o;
  o.iop = options;
  VertexProjection cut;
  cut.subset = {experiment};
  cut.active = {active};
  o.cuts = {cut};
  o.floors = {floor};
  auto r = solve_phase1(inst, {experiment}, o);
  if (r.status == MilpStatus::Infeasible) return kInf;
  if (!r.optimal()) return floor;  // no proof: fall back to the trivial bound
  return r.total_loss;
}

MilpModel build_fp(const AdmissibleCone& cone) {
  const int n = cone.dim();
  MilpModel m;
  std::vector<int> c, cp, cm, w;
  add_cost_block(m, cone.lower, cone.upper, n, c, cp, cm, w);
  for (const auto& k : cone.cones) {
    std::vector<int> g;
    for (int t = 0; t < k.size(); ++t) g.push_back(m.add_var(0.0, kInf));
    for (int p = 0; p < n; ++p) {
      std::vector<int> idx{c[p]};
      std::vector<double> val{1.0};
      for (int t = 0; t < k.size(); ++t)
        if (k.G(p, t) != 0.0) {
          idx.push_back(g[t]);
          val.push_back(-k.G(p, t));
        }
      m.add_eq(idx, val, 0.0);
    }
  }
  return m;
}

namespace {

// max of +-c_p over the intersection, the bounds and the unit box: any nonzero answer,
// normalised, is a witness; all zero proves the intersection has no unit point.
std::optional<Vec> fp_by_lp(const AdmissibleCone& cone, bool* decided) {
  const int n = cone.dim();
  std::vector<std::vector<int>> ri;
  std::vector<std::vector<double>> rv;
  int col = n;
  std::vector<int> first;
  for (const auto& k : cone.cones) {
    first.push_back(col);
    col += k.size();
  }
  for (std::size_t i = 0; i < cone.cones.size(); ++i) {
    const auto& k = cone.cones[i];
    for (int p = 0; p < n; ++p) {
      std::vector<int> idx{p};
      std::vector<double> val{1.0};
      for (int t = 0; t < k.size(); ++t)
        if (k.G(p, t) != 0.0) {
          idx.push_back(first[i] + t);
          val.push_back(-k.G(p, t));
        }
      ri.push_back(idx);
      rv.push_back(val);
    }
  }
  LpProblem lp = LpProblem::from_rows(col, ri, rv);
  lp.cost.assign(col, 0.0);
  lp.col_lo.assign(col, 0.0);
  lp.col_hi.assign(col, kInf);
  for (int p = 0; p < n; ++p) {
    lp.col_lo[p] = std::max(-1.0, bound_or(cone.lower, p, -kInf));
    lp.col_hi[p] = std::min(1.0, bound_or(cone.upper, p, kInf));
  }
  for (std::size_t r = 0; r < ri.size(); ++r) lp.row_lo[r] = lp.row_hi[r] = 0.0;
  *decided = true;
  for (int p = 0; p < n; ++p)
    if (lp.col_lo[p] > lp.col_hi[p]) return std::nullopt;
  Simplex s(std::move(lp));
  std::vector<double> cost(col, 0.0);
  for (int p = 0; p < n; ++p) {
    for (double sg : {-1.0, 1.0}) {
      std::fill(cost.begin(), cost.end(), 0.0);
      cost[p] = sg;
      s.set_cost(cost);
      LpStatus st = s.solve();
      if (st == LpStatus::Infeasible) return std::nullopt;
      if (st != LpStatus::Optimal) {
        *decided = false;
        return std::nullopt;
      }
      if (-s.objective() > 1e-9) {
        auto x = s.primal();
        Vec c = Eigen::Map<Vec>(x.data(), n);
        c /= c.lpNorm<1>();
        if (cone.contains(c)) return c;
        *decided = false;  // normalising broke a bound; let the MILP decide
      }
    }
  }
  return std::nullopt;
}

}  // namespace

bool solve_fp(const AdmissibleCone& cone, Vec* witness, const MilpBudget& budget) {
  if (cone.dim() <= 0) throw std::invalid_argument("FP needs a dimension");
  bool decided = false;
  if (auto c = fp_by_lp(cone, &decided)) {
    if (witness) *witness = *c;
    return true;
  }
  if (decided) return false;
  MilpModel m = build_fp(cone);
  MilpOptions mo;
  mo.budget = budget;
  auto sol = solve_milp(m, mo);
  if (!sol.has_solution()) return false;
  if (witness) {
    witness->resize(cone.dim());
    for (int p = 0; p < cone.dim(); ++p) (*witness)[p] = sol.x[p];
  }
  return true;
}

CostEstimate solve_phase2(const IopInstance& inst, const AdmissibleCone& cone, int projection) {
  if (inst.reference.size() == 0) throw std::invalid_argument("phase 2 needs a reference cost");
  auto r = solve_p2(inst.reference, cone.cones, cone.lower, cone.upper);
  CostEstimate e;
  e.projection = projection;
  e.c = r.c;
  e.distance2 = r.objective;
  // zero is always admissible; strict sign bounds can leave every nonzero point farther away
  const double zero_dist = inst.reference.squaredNorm();
  e.trivial = !r.feasible || r.c.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + inst.reference.lpNorm<Eigen::Infinity>()) ||
              r.objective >= zero_dist - 1e-12 * (1.0 + zero_dist);
  if (e.trivial) {
    e.c = Vec::Zero(inst.dim());
    e.distance2 = inst.reference.squaredNorm();
  }
  return e;
}

ExperimentData trim_outliers(const ExperimentData& e, double k) {
  const int n = e.poly.dim(), J = static_cast<int>(e.observations.size());
  if (J < 3) return e;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };
  Vec med(n), mad(n);
  for (int p = 0; p < n; ++p) {
    std::vector<double> v(J);
    for (int j = 0; j < J; ++j) v[j] = e.observations[j][p];
    med[p] = median(v);
    for (int j = 0; j < J; ++j) v[j] = std::abs(v[j] - med[p]);
    mad[p] = median(v);
  }
  ExperimentData out{e.id, e.poly, {}};
  for (const Vec& o : e.observations) {
    bool keep = true;
    for (int p = 0; p < n && keep; ++p) keep = !(mad[p] > 0.0 && std::abs(o[p] - med[p]) > k * mad[p]);
    if (keep) out.observations.push_back(o);
  }
  if (out.observations.empty()) out.observations = e.observations;
  return out;
}

namespace {

IopInstance preprocess(const IopInstance& inst, const IopOptions& o) {
  inst.validate();
  if (!o.outlier_mad) return inst;
  IopInstance t = inst;
  for (auto& e : t.experiments) e = trim_outliers(e, *o.outlier_mad);
  return t;
}

double tie(double r, double tol) { return tol * (1.0 + std::abs(r)); }

TwoPhaseResult trivial_result(const IopInstance& inst, bool complete) {
  TwoPhaseResult res;
  res.complete = complete;
  if (inst.reference.size()) {
    CostEstimate e;
    e.c = Vec::Zero(inst.dim());
    e.distance2 = inst.reference.squaredNorm();
    e.trivial = true;
    res.estimates.push_back(e);
  }
  return res;
}

void attach_estimates(const IopInstance& inst, TwoPhaseResult& res) {
  if (inst.reference.size() == 0) return;
  std::vector<CostEstimate> all_est;
  for (std::size_t k = 0; k < res.optima.size(); ++k)
    all_est.push_back(solve_phase2(inst, admissible_cone(inst, res.optima[k]), static_cast<int>(k)));
  double best = kInf;
  for (const auto& e : all_est) best = std::min(best, e.distance2);
  for (const auto& e : all_est) {
    if (e.distance2 > best + 1e-9 * (1.0 + best)) continue;
    bool dup = false;
    for (const auto& f : res.estimates) dup = dup || (f.c - e.c).lpNorm<Eigen::Infinity>() <= 1e-9;
    if (!dup) res.estimates.push_back(e);
  }
}

// nullopt when a single-experiment solve or the search stopped early; the MILP path takes over.
std::optional<TwoPhaseResult> two_phase_by_ranking(const IopInstance& inst, const IopOptions& options) {
  const int N = static_cast<int>(inst.experiments.size());
  VertexRanking ranking(options);
  Phase1Options one;
  one.iop = options;
  for (int i = 0; i < N; ++i) {
    auto s = solve_phase1(inst, {i}, one);
    if (s.status == MilpStatus::Infeasible) return trivial_result(inst, true);
    if (!s.optimal()) return std::nullopt;
    ranking.push(std::move(s));
  }
  auto r = ranking.search(inst, options.max_optima);
  if (!r.complete && r.optima.empty()) return std::nullopt;
  if (r.optima.empty()) return trivial_result(inst, true);
  TwoPhaseResult res;
  res.complete = r.complete;
  res.optima = std::move(r.optima);
  res.phase1_loss = res.optima.front().total_loss;
  attach_estimates(inst, res);
  return res;
}

}  // namespace

TwoPhaseResult two_phase(const IopInstance& input, const IopOptions& options) {
  IopInstance inst = preprocess(input, options);
  TwoPhaseResult res;
  const int N = static_cast<int>(inst.experiments.size());
  if (N == 0) throw std::invalid_argument("no experiments");
  std::vector<int> all(N);
  std::iota(all.begin(), all.end(), 0);

  if (options.resolve == ResolveMethod::Enumerate) {
    if (auto r = two_phase_by_ranking(inst, options)) return *r;
  }

  Phase1Options base;
  base.iop = options;
  if (options.strengthen) {
    // single-experiment optima bound each experiment's share of the joint loss
    AdmissibleCone singles;
    singles.lower = inst.sign_lower;
    singles.upper = inst.sign_upper;
    bool ok = true;
    Phase1Options one;
    one.iop = options;
    for (int i = 0; i < N; ++i) {
      auto s = solve_phase1(inst, {i}, one);
      if (!s.optimal()) {
        ok = false;
        break;
      }
      base.floors.push_back(s.total_loss);
      singles.cones.push_back(cone_of_vertex(inst.experiments[i].poly, s.active[0]));
      base.seed_costs.push_back(s.c);
    }
    if (!ok) {
      base.floors.clear();
      base.seed_costs.clear();
    } else {
      Vec wit;
      if (solve_fp(singles, &wit, options.budget)) base.seed_costs.insert(base.seed_costs.begin(), wit);
    }
    if (inst.reference.size()) base.seed_costs.push_back(inst.reference);
  }

  auto first = solve_phase1(inst, all, base);
  if (!first.found()) return trivial_result(inst, first.status == MilpStatus::Infeasible);
  if (!first.optimal()) res.complete = false;
  res.optima.push_back(first);
  res.phase1_loss = first.total_loss;
  const double cutoff = first.total_loss + tie(first.total_loss, options.tie_tol);

  while (res.complete && static_cast<int>(res.optima.size()) < options.max_optima) {
    Phase1Options o = base;
    o.cuts = res.optima;
    o.cutoff = cutoff;
    if (options.strengthen && !base.floors.empty()) {
      for (const auto& prev : res.optima)
        for (int i = 0; i < N; ++i)
          o.second_best.push_back({i, prev.active[i], second_best_loss(inst, i, prev.active[i], base.floors[i], options)});
    }
    auto next = solve_phase1(inst, all, o);
    if (next.status == MilpStatus::Infeasible) break;
    if (!next.found() || !next.optimal()) res.complete = false;
    if (!next.found() || next.total_loss > cutoff) break;
    res.optima.push_back(next);
  }
  if (static_cast<int>(res.optima.size()) >= options.max_optima) res.complete = false;

  attach_estimates(inst, res);
  return res;
}

OnlineState::OnlineState(const IopInstance& base, IopOptions options, bool estimate_each)
    : inst_(base), opt_(std::move(options)), ranking_(opt_), estimate_each_(estimate_each) {
  inst_.experiments.clear();
  cone_.lower = inst_.sign_lower;
  cone_.upper = inst_.sign_upper;
  if (inst_.reference.size()) {
    est_.c = Vec::Zero(inst_.dim());
    est_.distance2 = inst_.reference.squaredNorm();
    est_.trivial = true;
  }
}

const DecompositionStep& OnlineState::add(ExperimentData e) {
  auto t0 = std::chrono::steady_clock::now();
  if (opt_.outlier_mad) e = trim_outliers(e, *opt_.outlier_mad);
  inst_.experiments.push_back(std::move(e));
  inst_.validate();
  const int l = static_cast<int>(inst_.experiments.size()) - 1;
  DecompositionStep step;
  step.experiment = l;

  Phase1Options single;
  single.iop = opt_;
  auto s = solve_phase1(inst_, {l}, single);
  if (!s.optimal()) partial_ = true;
  if (!s.found()) {
    // nothing admissible for this experiment under the sign bounds
    step.experiment = -1;
    step.fp_feasible = false;
    inst_.experiments.pop_back();
    step.loss_prefix = proj_.total_loss;
    steps_.push_back(step);
    return steps_.back();
  }
  floors_.push_back(s.total_loss);
  ranking_.push(s);
  step.single_loss = s.total_loss;

  AdmissibleCone next = cone_;
  next.cones.push_back(cone_of_vertex(inst_.experiments[l].poly, s.active[0]));
  Vec wit;
  if (solve_fp(next, &wit, opt_.budget)) {
    proj_.subset.push_back(l);
    proj_.x.push_back(s.x[0]);
    proj_.active.push_back(s.active[0]);
    proj_.loss.push_back(s.loss[0]);
    proj_.total_loss += s.loss[0];
    proj_.c = wit;
    proj_.status = partial_ ? MilpStatus::IncumbentOnly : MilpStatus::Optimal;
    proj_.big_m_usage = std::max(proj_.big_m_usage, s.big_m_usage);
    cone_ = next;
  } else {
    step.fp_feasible = false;
    step.resolved = true;
    ++resolves_;
    std::vector<int> sub(l + 1);
    std::iota(sub.begin(), sub.end(), 0);
    std::optional<VertexProjection> found;
    bool settled = false;  // the ranking search proved there is no joint assignment
    if (opt_.resolve == ResolveMethod::Enumerate) {
      auto r = ranking_.search(inst_, 1);
      if (!r.optima.empty())
        found = std::move(r.optima.front());
      else
        settled = r.complete;
    }
    Phase1Options joint;
    joint.iop = opt_;
    joint.floors = floors_;
    // warm start: the previous projection plus this experiment's vertex under a cost from the old cone
    Vec probe = proj_.c;
    if (probe.size() == 0 || !solve_fp(cone_, &probe, opt_.budget)) probe = s.c;
    VertexProjection ws = proj_;
    ws.subset = sub;
    auto fop = solve_lp(probe, inst_.experiments[l].poly);
    ws.x.push_back(fop.x);
    ws.active.push_back(fop.active_set);
    ws.c = probe;
    joint.warm_start = ws;
    joint.seed_costs = {probe, s.c};
    VertexProjection j;
    if (found)
      j = std::move(*found);
    else if (!settled)
      j = solve_phase1(inst_, sub, joint);
    if (!j.optimal()) partial_ = true;
    if (!j.found()) {
      // no joint assignment exists, or the budget ran out first: leave this experiment out
      step.experiment = -1;
      inst_.experiments.pop_back();
      floors_.pop_back();
      ranking_.pop();
      step.loss_prefix = proj_.total_loss;
      steps_.push_back(step);
      return steps_.back();
    }
    proj_ = j;
    cone_ = admissible_cone(inst_, proj_);
    proj_.status = partial_ ? MilpStatus::IncumbentOnly : MilpStatus::Optimal;
  }
  step.loss_prefix = proj_.total_loss;
  if (estimate_each_ && inst_.reference.size()) {
    est_ = solve_phase2(inst_, cone_);
    step.estimate = est_;
  }
  step.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  steps_.push_back(step);
  return steps_.back();
}

namespace {

// Least loss over the polytope with row t held tight, for every row t (kInf when the face is empty).
Vec hyperplane_losses(const ExperimentData& e, LossNorm norm) {
  const Polytope& poly = e.poly;
  const int n = poly.dim(), rows = poly.rows(), J = static_cast<int>(e.observations.size());
  const int extra = norm == LossNorm::L1 ? J * n : J;
  std::vector<std::vector<int>> ri;
  std::vector<std::vector<double>> rv;
  std::vector<double> rlo, rhi;
  for (int k = 0; k < rows; ++k) {
    std::vector<int> idx;
    std::vector<double> val;
    for (int p = 0; p < n; ++p)
      if (poly.A()(k, p) != 0.0) {
        idx.push_back(p);
        val.push_back(poly.A()(k, p));
      }
    ri.push_back(idx);
    rv.push_back(val);
    rlo.push_back(-kInf);
    rhi.push_back(poly.b()[k]);
  }
  for (int j = 0; j < J; ++j)
    for (int p = 0; p < n; ++p) {
      int u = n + (norm == LossNorm::L1 ? j * n + p : j);
      double o = e.observations[j][p];
      ri.push_back({u, p});
      rv.push_back({1.0, -1.0});
      rlo.push_back(-o);
      rhi.push_back(kInf);
      ri.push_back({u, p});
      rv.push_back({1.0, 1.0});
      rlo.push_back(o);
      rhi.push_back(kInf);
    }
  LpProblem lp = LpProblem::from_rows(n + extra, ri, rv);
  lp.row_lo = rlo;
  lp.row_hi = rhi;
  lp.cost.assign(n + extra, 1.0);
  for (int p = 0; p < n; ++p) {
    lp.cost[p] = 0.0;
    lp.col_lo[p] = poly.lower()[p];
    lp.col_hi[p] = poly.upper()[p];
  }
  for (int k = n; k < n + extra; ++k) lp.col_lo[k] = 0.0;
  Simplex sx(std::move(lp));
  Vec out(rows);
  for (int t = 0; t < rows; ++t) {
    sx.set_row_bounds(t, poly.b()[t], poly.b()[t]);
    LpStatus st = sx.solve();
    if (st == LpStatus::Optimal) {
      double v = sx.objective();
      out[t] = std::max(0.0, v - 1e-9 * (1.0 + std::abs(v)));
    } else {
      out[t] = st == LpStatus::Infeasible ? kInf : 0.0;
    }
    sx.set_row_bounds(t, -kInf, poly.b()[t]);
  }
  return out;
}

}  // namespace

void VertexRanking::push(VertexProjection best) {
  lists_.push_back({std::move(best)});
  exhausted_.push_back(0);
  next_lb_.push_back(0.0);
  plane_loss_.emplace_back();
}

void VertexRanking::pop() {
  lists_.pop_back();
  exhausted_.pop_back();
  next_lb_.pop_back();
  plane_loss_.pop_back();
}

// The next entry makes some row outside each earlier active set tight, so it loses at least the
// least hyperplane loss among those rows.
double VertexRanking::next_bound(const IopInstance& inst, int i) {
  const auto& list = lists_[i];
  double lb = std::max(list.back().total_loss, next_lb_[i]);
  if (plane_loss_[i].size() == 0) plane_loss_[i] = hyperplane_losses(inst.experiments[i], inst.norm);
  const Vec& d = plane_loss_[i];
  for (const auto& e : list) {
    std::vector<char> in(d.size(), 0);
    for (int t : e.active[0]) in[t] = 1;
    double m = kInf;
    for (int t = 0; t < d.size(); ++t)
      if (!in[t]) m = std::min(m, d[t]);
    lb = std::max(lb, m);
  }
  return lb;
}

const VertexProjection* VertexRanking::get(const IopInstance& inst, int i, int k, double limit) {
  auto& list = lists_[i];
  while (static_cast<int>(list.size()) <= k && !exhausted_[i]) {
    if (next_lb_[i] >= limit) return nullptr;
    double lb = next_bound(inst, i);
    if (lb == kInf) {
      exhausted_[i] = 1;
      break;
    }
    if (lb > limit) {
      next_lb_[i] = std::max(next_lb_[i], limit);
      return nullptr;
    }
    Phase1Options o;
    o.iop = opt_;
    o.cuts = list;
    o.floors = {lb};
    o.cutoff = limit;
    auto r = solve_phase1(inst, {i}, o);
    if (r.status == MilpStatus::Infeasible) {
      if (limit < kInf) {
        next_lb_[i] = std::max(next_lb_[i], limit);
        return nullptr;
      }
      exhausted_[i] = 1;
    } else if (!r.optimal()) {
      failed_ = true;
      return nullptr;
    } else {
      list.push_back(std::move(r));
      next_lb_[i] = 0.0;
    }
  }
  return k < static_cast<int>(list.size()) ? &list[k] : nullptr;
}

// Tuples leave the queue in order of total loss, so the first one whose cones share a unit cost
// is optimal. Each tuple has one parent (undo its last increment), keeping the walk duplicate-free.
// A child whose new entry is not ranked yet waits in the queue under a lower bound and is only
// solved for when it reaches the front.
VertexRanking::Result VertexRanking::search(const IopInstance& inst, int max_optima) {
  const int L = size();
  struct Tuple {
    double total;
    std::vector<int> k;
    int last;
    long seq;
    int pending = -1;  // experiment whose entry k[pending] is still unranked
    double pending_lb = 0.0;
  };
  auto later = [](const Tuple& a, const Tuple& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.seq > b.seq;
  };
  std::priority_queue<Tuple, std::vector<Tuple>, decltype(later)> open(later);
  long seq = 0;
  Tuple root{0.0, std::vector<int>(L, 0), 0, seq++};
  for (int i = 0; i < L; ++i) root.total += lists_[i][0].total_loss;
  open.push(std::move(root));
  failed_ = false;
  Result res;
  double cutoff = kInf;
  for (long popped = 0; !open.empty() && open.top().total <= cutoff; ++popped) {
    if (popped >= opt_.max_tuples || static_cast<int>(res.optima.size()) >= max_optima) {
      res.complete = false;
      return res;
    }
    Tuple t = open.top();
    open.pop();
    if (t.pending >= 0) {
      const int j = t.pending;
      const double limit = cutoff == kInf ? kInf : cutoff - (t.total - t.pending_lb);
      const VertexProjection* e = get(inst, j, t.k[j], limit);
      if (!e) {
        if (failed_) {
          res.complete = false;
          return res;
        }
        continue;
      }
      t.total += e->total_loss - t.pending_lb;
      t.pending = -1;
      t.seq = seq++;
      open.push(std::move(t));
      continue;
    }
    AdmissibleCone cone;
    cone.lower = inst.sign_lower;
    cone.upper = inst.sign_upper;
    for (int i = 0; i < L; ++i)
      cone.cones.push_back(cone_of_vertex(inst.experiments[i].poly, lists_[i][t.k[i]].active[0]));
    Vec wit;
    if (solve_fp(cone, &wit, opt_.budget)) {
      VertexProjection out;
      out.status = MilpStatus::Optimal;
      for (int i = 0; i < L; ++i) {
        const auto& v = lists_[i][t.k[i]];
        out.subset.push_back(i);
        out.x.push_back(v.x[0]);
        out.active.push_back(v.active[0]);
        out.loss.push_back(v.loss[0]);
        out.total_loss += v.loss[0];
        out.big_m = v.big_m;
        out.big_m_usage = std::max(out.big_m_usage, v.big_m_usage);
        out.big_m_escalations = std::max(out.big_m_escalations, v.big_m_escalations);
        out.nodes += v.nodes;
      }
      out.c = wit;
      if (res.optima.empty()) cutoff = t.total + opt_.tie_tol * (1.0 + std::abs(t.total));
      res.optima.push_back(std::move(out));
    }
    for (int j = t.last; j < L; ++j) {
      const auto& list = lists_[j];
      const int kk = t.k[j] + 1;
      const double cur = list[kk - 1].total_loss;
      Tuple c = t;
      c.k[j] = kk;
      c.last = j;
      c.seq = seq++;
      if (kk < static_cast<int>(list.size())) {
        c.total += list[kk].total_loss - cur;
      } else if (exhausted_[j]) {
        continue;
      } else {
        c.pending = j;
        c.pending_lb = std::max(cur, next_lb_[j]);
        c.total += c.pending_lb - cur;
      }
      open.push(std::move(c));
    }
  }
  return res;
}

namespace {

DecompositionResult run_sequence(const IopInstance& inst, const std::vector<int>& order, const IopOptions& options,
                                 bool each) {
  inst.validate();
  std::vector<int> seq = order;
  if (seq.empty()) {
    seq.resize(inst.experiments.size());
    std::iota(seq.begin(), seq.end(), 0);
  }
  OnlineState st(inst, options, each);
  std::vector<int> origin;  // position in the state -> index in inst
  for (int i : seq)
    if (st.add(inst.experiments.at(i)).experiment >= 0) origin.push_back(i);
  DecompositionResult r;
  r.projection = st.projection();
  for (int& i : r.projection.subset) i = origin[i];
  r.cone = st.cone();
  r.resolves = st.resolves();
  r.partial = st.partial();
  r.steps = st.steps();
  for (std::size_t k = 0; k < r.steps.size(); ++k) r.steps[k].experiment = seq[k];
  if (inst.reference.size()) {
    r.estimate = each && !r.steps.empty() && r.steps.back().estimate ? *r.steps.back().estimate
                                                                      : solve_phase2(st.instance(), st.cone());
  }
  return r;
}

}  // namespace

DecompositionResult decomposition_solve(const IopInstance& inst, const IopOptions& options) {
  return run_sequence(inst, {}, options, false);
}

DecompositionResult online_run(const IopInstance& inst, const std::vector<int>& order, const IopOptions& options) {
  return run_sequence(inst, order, options, true);
}

}  // namespace invlp
