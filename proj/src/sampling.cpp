#include "invlp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "invlp/datagen.hpp"

namespace invlp {

Mat ConeRays::box_generators() const {
  const int r = static_cast<int>(rays.cols()), l = static_cast<int>(lineality.cols());
  Mat out(dim(), r + 2 * l);
  if (r) out.leftCols(r) = rays;
  for (int k = 0; k < l; ++k) {
    out.col(r + 2 * k) = lineality.col(k);
    out.col(r + 2 * k + 1) = -lineality.col(k);
  }
  return out;
}

namespace {

using Bits = std::vector<std::uint64_t>;

bool subset_of(const Bits& a, const Bits& b) {
  for (std::size_t w = 0; w < a.size(); ++w)
    if (a[w] & ~b[w]) return false;
  return true;
}

int popcount(const Bits& a) {
  int c = 0;
  for (auto w : a) c += __builtin_popcountll(w);
  return c;
}

struct Ray {
  Vec v;
  Bits tight;
};

Mat to_mat(const std::vector<Vec>& cols, int n) {
  Mat m(n, static_cast<int>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) m.col(static_cast<int>(k)) = cols[k];
  return m;
}

}  // namespace

ConeRays cone_rays(const Mat& H_in, double tol) {
  const int n = static_cast<int>(H_in.cols());
  // unit rows, exact duplicates removed
  std::vector<Vec> rows;
  for (int i = 0; i < H_in.rows(); ++i) {
    Vec h = H_in.row(i).transpose();
    double nh = h.norm();
    if (nh <= tol) continue;
    h /= nh;
    bool dup = false;
    for (const auto& g : rows)
      if ((g - h).lpNorm<Eigen::Infinity>() <= tol) {
        dup = true;
        break;
      }
    if (!dup) rows.push_back(h);
  }
  const int m = static_cast<int>(rows.size());
  const int words = (m + 63) / 64 + 1;

  std::vector<Vec> lin;
  for (int j = 0; j < n; ++j) lin.push_back(Vec::Unit(n, j));
  std::vector<Ray> rays;

  for (int k = 0; k < m; ++k) {
    const Vec& h = rows[k];
    const auto bit = [k](Bits& b) { b[k / 64] |= std::uint64_t{1} << (k % 64); };
    int piv = -1;
    double best = tol;
    for (std::size_t j = 0; j < lin.size(); ++j) {
      double v = std::abs(h.dot(lin[j]));
      if (v > best) best = v, piv = static_cast<int>(j);
    }
    if (piv >= 0) {
      // the constraint cuts the lineality space: one direction becomes a ray
      Vec l = lin[piv];
      if (h.dot(l) > 0) l = -l;
      const double hl = h.dot(l);
      lin.erase(lin.begin() + piv);
      for (auto& v : lin) {
        v -= (h.dot(v) / hl) * l;
        double nv = v.norm();
        if (nv > 0) v /= nv;
      }
      for (auto& r : rays) {
        r.v -= (h.dot(r.v) / hl) * l;
        r.v.normalize();
        bit(r.tight);
      }
      Ray nr{l.normalized(), Bits(words, 0)};
      // tight on every earlier row since those vanish on the lineality space
      for (int q = 0; q < k; ++q) nr.tight[q / 64] |= std::uint64_t{1} << (q % 64);
      rays.push_back(std::move(nr));
      continue;
    }
    std::vector<double> s(rays.size());
    std::vector<int> pos, neg, zero;
    for (std::size_t j = 0; j < rays.size(); ++j) {
      s[j] = h.dot(rays[j].v);
      if (s[j] > tol)
        pos.push_back(static_cast<int>(j));
      else if (s[j] < -tol)
        neg.push_back(static_cast<int>(j));
      else
        zero.push_back(static_cast<int>(j));
    }
    if (pos.empty()) {
      for (int j : zero) bit(rays[j].tight);
      continue;
    }
    const int need = n - static_cast<int>(lin.size()) - 2;
    std::vector<Ray> next;
    for (int p : pos)
      for (int q : neg) {
        Bits common(words);
        for (int w = 0; w < words; ++w) common[w] = rays[p].tight[w] & rays[q].tight[w];
        if (popcount(common) < need) continue;
        bool adjacent = true;
        for (std::size_t r = 0; r < rays.size() && adjacent; ++r)
          if (static_cast<int>(r) != p && static_cast<int>(r) != q && subset_of(common, rays[r].tight))
            adjacent = false;
        if (!adjacent) continue;
        Vec v = s[p] * rays[q].v - s[q] * rays[p].v;
        double nv = v.norm();
        if (nv <= tol) continue;
        bit(common);
        next.push_back({v / nv, std::move(common)});
      }
    std::vector<Ray> kept;
    for (int j : neg) kept.push_back(std::move(rays[j]));
    for (int j : zero) {
      bit(rays[j].tight);
      kept.push_back(std::move(rays[j]));
    }
    for (auto& r : next) kept.push_back(std::move(r));
    rays = std::move(kept);
  }

  ConeRays out;
  std::vector<Vec> rv;
  for (auto& r : rays) {
    bool dup = false;
    for (const auto& g : rv)
      if ((g - r.v).lpNorm<Eigen::Infinity>() <= 1e3 * tol) {
        dup = true;
        break;
      }
    if (!dup) rv.push_back(r.v);
  }
  out.rays = to_mat(rv, n);
  // orthonormal lineality basis
  if (!lin.empty()) {
    Mat L = to_mat(lin, n);
    Eigen::ColPivHouseholderQR<Mat> qr(L);
    qr.setThreshold(1e-9);
    const int rank = static_cast<int>(qr.rank());
    Mat Q = qr.householderQ();
    out.lineality = Q.leftCols(rank);
  } else {
    out.lineality = Mat(n, 0);
  }
  return out;
}

Mat cone_facets(const ConeGenerators& g, double tol) {
  const int n = g.dim();
  if (g.size() == 0) {
    Mat H(2 * n, n);
    H << Mat::Identity(n, n), -Mat::Identity(n, n);
    return H;
  }
  // polar {u : G'u <= 0}; its rays are the facet normals, its lineality the equalities
  ConeRays polar = cone_rays(g.G.transpose(), tol);
  const int r = static_cast<int>(polar.rays.cols()), l = static_cast<int>(polar.lineality.cols());
  Mat H(r + 2 * l, n);
  if (r) H.topRows(r) = polar.rays.transpose();
  if (l) {
    H.middleRows(r, l) = polar.lineality.transpose();
    H.bottomRows(l) = -polar.lineality.transpose();
  }
  return H;
}

ConeRays intersection_rays(const AdmissibleCone& cone) {
  const int n = cone.dim();
  std::vector<Vec> rows;
  for (int p = 0; p < n; ++p) {
    if (cone.lower.size() && cone.lower[p] >= 0.0) rows.push_back(-Vec::Unit(n, p));
    if (cone.upper.size() && cone.upper[p] <= 0.0) rows.push_back(Vec::Unit(n, p));
  }
  for (const auto& k : cone.cones) {
    Mat H = cone_facets(k);
    for (int i = 0; i < H.rows(); ++i) rows.push_back(H.row(i).transpose());
  }
  Mat H(static_cast<int>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) H.row(static_cast<int>(i)) = rows[i].transpose();
  return cone_rays(H);
}

Vec sample_probe_cost(const AdmissibleCone& cone, Rng& rng, const Vec& fallback, int max_tries,
                      const ConeRays* rays) {
  const int n = cone.dim();
  Vec wit;
  if (!solve_fp(cone, &wit)) throw std::invalid_argument("probe cost: the admissible cone is {0}");
  auto unit = [](Vec v) { return Vec(v / v.lpNorm<1>()); };
  if (!cone.cones.empty()) {
    for (int t = 0; t < max_tries; ++t) {
      const auto& g = cone.cones[rng.index(static_cast<int>(cone.cones.size()))];
      if (g.size() == 0) continue;
      Vec c = Vec::Zero(n);
      for (int k = 0; k < g.size(); ++k) c += rng.uniform_open_left() * g.G.col(k);
      if (c.lpNorm<1>() <= 1e-12) continue;
      c = unit(c);
      if (cone.contains(c)) return c;
    }
  }
  if (rays && !rays->zero()) {
    Mat B = rays->box_generators();
    Vec c = Vec::Zero(n);
    for (int k = 0; k < B.cols(); ++k) c += rng.uniform_open_left() * B.col(k);
    if (c.lpNorm<1>() > 1e-12 && cone.contains(unit(c))) return unit(c);
  }
  if (fallback.size() == n && fallback.lpNorm<1>() > 1e-12) return unit(fallback);
  return wit;
}

std::vector<char> predicted_active_flags(const Vec& c, const Polytope& poly) {
  LpSolution sol = solve_lp(c, poly);
  if (sol.status != SolveStatus::Optimal) throw std::runtime_error("predicted_active_flags: forward LP failed");
  std::vector<char> z(poly.rows(), 0);
  for (int k : sol.active_set) z[k] = 1;
  return z;
}

ConeGenerators candidate_cone(const Polytope& poly, const std::vector<char>& z) {
  std::vector<Vec> g;
  for (int k = 0; k < poly.rows(); ++k)
    if (z[k]) {
      Vec a = poly.A().row(k).transpose();
      g.push_back(-a / a.norm());
    }
  return ConeGenerators(poly.dim(), g);
}

namespace {

// min |y - K gamma|_1 over gamma >= 0, one LP re-solved with new right-hand sides.
class DistanceLp {
 public:
  DistanceLp(const ConeGenerators& K, int n) : n_(n) {
    const int T = K.size();
    LpProblem p;
    p.num_cols = T + 2 * n;
    p.num_rows = n;
    p.col_start.assign(p.num_cols + 1, 0);
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i)
        if (K.G(i, t) != 0.0) {
          p.row_index.push_back(i);
          p.value.push_back(K.G(i, t));
        }
      p.col_start[t + 1] = static_cast<int>(p.row_index.size());
    }
    for (int k = 0; k < 2 * n; ++k) {
      p.row_index.push_back(k % n);
      p.value.push_back(k < n ? 1.0 : -1.0);
      p.col_start[T + k + 1] = static_cast<int>(p.row_index.size());
    }
    p.cost.assign(p.num_cols, 1.0);
    for (int t = 0; t < T; ++t) p.cost[t] = 0.0;
    p.col_lo.assign(p.num_cols, 0.0);
    p.col_hi.assign(p.num_cols, kInf);
    p.row_lo.assign(n, 0.0);
    p.row_hi.assign(n, 0.0);
    lp_ = std::make_unique<Simplex>(std::move(p));
  }

  double solve(const Vec& y, Vec* certificate = nullptr) {
    for (int i = 0; i < n_; ++i) lp_->set_row_bounds(i, y[i], y[i]);
    LpStatus st = lp_->solve();
    if (st != LpStatus::Optimal) {
      lp_->reset_basis();
      st = lp_->solve();
    }
    if (st != LpStatus::Optimal) throw std::runtime_error("eta: distance LP failed");
    if (certificate) {
      auto u = lp_->row_duals();
      *certificate = Eigen::Map<Vec>(u.data(), n_);
    }
    return std::max(0.0, lp_->objective());
  }

 private:
  int n_;
  std::unique_ptr<Simplex> lp_;
};

struct VecHash {
  std::size_t operator()(const std::vector<long long>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (long long x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
    return h;
  }
};

}  // namespace

EtaResult eta_max(const Mat& Y_in, const ConeGenerators& candidate, const EtaOptions& opt) {
  if (!(opt.epsilon > 0.0)) throw std::invalid_argument("eta: epsilon must be positive");
  const int n = static_cast<int>(Y_in.rows());
  if (candidate.size() > 0 && candidate.dim() != n) throw std::invalid_argument("eta: dimension mismatch");
  std::vector<Vec> cols;
  for (int t = 0; t < Y_in.cols(); ++t) {
    double nt = Y_in.col(t).norm();
    if (nt > 0.0) cols.push_back(Y_in.col(t) / nt);
  }
  const int T = static_cast<int>(cols.size());
  EtaResult res;
  res.y = Vec::Zero(n);
  if (T == 0) return res;
  DistanceLp lp(candidate, n);

  // single columns are box vertices; when all lie in the cone so does every vertex and eta = 0
  std::vector<double> single(T);
  for (int t = 0; t < T; ++t) {
    ++res.evaluated;
    single[t] = lp.solve(cols[t]);
    if (single[t] > res.eta) {
      res.eta = single[t];
      res.y = cols[t];
    }
  }
  if (res.eta <= Tolerances::feasibility) {
    res.eta = 0.0;
    res.y.setZero();
    return res;
  }

  if (T <= opt.cap) {
    // Gray-code walk over the 2^T box vertices
    std::unordered_set<std::vector<long long>, VecHash> seen;
    Vec y = Vec::Zero(n);
    std::vector<long long> key(n);
    const std::uint64_t total = std::uint64_t{1} << T;
    std::uint64_t mask = 0;
    for (std::uint64_t g = 1; g < total; ++g) {
      const int t = __builtin_ctzll(g);
      mask ^= std::uint64_t{1} << t;
      if (mask >> t & 1)
        y += cols[t];
      else
        y -= cols[t];
      for (int i = 0; i < n; ++i) key[i] = std::llround(y[i] * 1e9);
      if (!seen.insert(key).second) continue;
      ++res.evaluated;
      double d = lp.solve(y);
      if (d > res.eta) {
        res.eta = d;
        res.y = y;
      }
    }
    res.eta *= opt.epsilon;
    res.y *= opt.epsilon;
    return res;
  }
  if (!opt.ascent_beyond_cap)
    throw std::length_error("eta: " + std::to_string(T) + " generators exceed the enumeration cap of " +
                            std::to_string(opt.cap) +
                            "; use a smaller cone representation or random sampling");

  // Ascent: the distance at y is u'y for a dual certificate u, so the box vertex {t : u'c_t > 0}
  // is at least as far. Starts from the full box, the farthest single columns and random vertices.
  res.exact = false;
  Rng rng(opt.ascent_seed);
  auto climb = [&](std::vector<char> sel) {
    double last = -1.0;
    for (int it = 0; it < 100; ++it) {
      Vec y = Vec::Zero(n);
      for (int t = 0; t < T; ++t)
        if (sel[t]) y += cols[t];
      Vec u;
      ++res.evaluated;
      double d = lp.solve(y, &u);
      if (d > res.eta) {
        res.eta = d;
        res.y = y;
      }
      if (d <= last + 1e-12) break;
      last = d;
      for (int t = 0; t < T; ++t) sel[t] = u.dot(cols[t]) > 1e-12;
    }
  };
  climb(std::vector<char>(T, 1));
  std::vector<int> order(T);
  for (int t = 0; t < T; ++t) order[t] = t;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return single[a] > single[b]; });
  for (int s = 0; s < opt.ascent_starts; ++s) {
    std::vector<char> sel(T, 0);
    if (s < opt.ascent_starts / 2 && s < T)
      sel[order[s]] = 1;
    else
      for (auto& b : sel) b = rng.uniform() < 0.5;
    climb(std::move(sel));
  }
  res.eta *= opt.epsilon;
  res.y *= opt.epsilon;
  return res;
}

EtaResult eta_of_candidate(const ConeRays& current, const AspCandidate& cand, const EtaOptions& opt) {
  return eta_max(current.box_generators(), candidate_cone(cand.poly, cand.z), opt);
}

EtaResult eta_of_candidate(const AdmissibleCone& cone, const AspCandidate& cand, const EtaOptions& opt) {
  return eta_of_candidate(intersection_rays(cone), cand, opt);
}

AspCandidate adaptive_select(const AdmissibleCone& cone, const ParameterSpace& space, int S,
                             std::uint64_t seed, int step, const Vec& fallback, const EtaOptions& opt,
                             std::vector<AspCandidate>* evaluated) {
  if (S < 1) throw std::invalid_argument("adaptive_select: S must be at least 1");
  ConeRays rays = intersection_rays(cone);
  if (rays.zero()) throw std::invalid_argument("adaptive_select: the admissible cone is {0}");
  Rng arng = Rng::stream(seed, streams::adaptive + static_cast<std::uint64_t>(step));
  std::vector<AspCandidate> cands;
  std::string last;
  for (int s = 0; s < S; ++s) {
    Rng prng = Rng::stream(seed, streams::experiment + static_cast<std::uint64_t>(step));
    Rng& r = s == 0 ? prng : arng;
    Vec theta;
    try {
      Polytope poly = space.sample(r, &theta);
      Vec probe = sample_probe_cost(cone, arng, fallback, 100, &rays);
      auto z = predicted_active_flags(probe, poly);
      cands.push_back(AspCandidate{std::move(poly), theta, probe, std::move(z), 0.0, true, s});
    } catch (const InvalidPolytope& e) {
      last = e.what();
    }
  }
  if (cands.empty()) throw std::runtime_error("adaptive_select: no valid candidate: " + last);
  int best = 0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    EtaResult r = eta_of_candidate(rays, cands[k], opt);
    cands[k].eta = r.eta;
    cands[k].exact = r.exact;
    if (r.eta > cands[best].eta) best = static_cast<int>(k);
  }
  if (evaluated) *evaluated = cands;
  return std::move(cands[best]);
}

std::vector<AdaptiveStep> adaptive_online(
    const IopInstance& base, const ParameterSpace& space, const Vec& hidden, const AdaptiveConfig& cfg,
    const IopOptions& options, const std::function<void(const AdaptiveStep&, const OnlineState&)>& on_step) {
  OnlineState st(base, options, true);
  std::vector<AdaptiveStep> out;
  for (int l = 0; l < cfg.experiments; ++l) {
    Vec fb = st.estimate().c.size() && st.estimate().c.lpNorm<1>() > 0 ? st.estimate().c : base.reference;
    AspCandidate cand = adaptive_select(st.cone(), space, cfg.S, cfg.seed, l, fb, cfg.eta);
    Rng nrng = Rng::stream(cfg.seed, streams::noise + static_cast<std::uint64_t>(l));
    AdaptiveStep rec;
    rec.eta = cand.eta;
    rec.eta_exact = cand.exact;
    rec.theta = cand.theta;
    rec.step = st.add(observe(cand.poly, hidden, cfg.J, cfg.sigma, nrng, l));
    if (on_step) on_step(rec, st);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace invlp
