#include "invlp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace invlp {

namespace {

constexpr double kEps = 1e-13;

// Plane rotation taking (a, b) to (h, 0); applied to column pairs of J and row pairs of R.
struct Givens {
  double c = 1.0, s = 0.0, h = 0.0;
  Givens(double a, double b) {
    h = std::hypot(a, b);
    if (h > 0.0) {
      c = a / h;
      s = b / h;
    }
  }
  void cols(Mat& J, int i, int j) const {
    Vec a = J.col(i), b = J.col(j);
    J.col(i) = c * a + s * b;
    J.col(j) = -s * a + c * b;
  }
};

}  // namespace

ProjectionResult project_polyhedron(const Vec& c, const Mat& C, const Vec& d) {
  const int n = static_cast<int>(c.size()), m = static_cast<int>(C.rows());
  if (C.cols() != n || d.size() != m) throw std::invalid_argument("projection data dimension mismatch");
  ProjectionResult res;
  res.x = c;
  res.mu = Vec::Zero(m);

  Mat J = Mat::Identity(n, n);
  Mat R = Mat::Zero(n, n);
  std::vector<int> act;
  std::vector<double> u;
  Vec rownorm(m);
  for (int i = 0; i < m; ++i) rownorm[i] = C.row(i).norm();

  auto slack = [&](int i) { return d[i] - C.row(i).dot(res.x); };

  auto drop = [&](int k) {
    const int q = static_cast<int>(act.size());
    for (int j = k; j + 1 < q; ++j) R.col(j) = R.col(j + 1);
    R.col(q - 1).setZero();
    for (int j = k; j + 1 < q; ++j) {
      Givens g(R(j, j), R(j + 1, j));
      for (int col = j; col < q - 1; ++col) {
        double a = R(j, col), b = R(j + 1, col);
        R(j, col) = g.c * a + g.s * b;
        R(j + 1, col) = -g.s * a + g.c * b;
      }
      R(j + 1, j) = 0.0;
      g.cols(J, j, j + 1);
    }
    act.erase(act.begin() + k);
    u.erase(u.begin() + k);
  };

  const int max_iter = 50 * (m + n) + 100;
  while (true) {
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      if (rownorm[i] == 0.0) {
        if (d[i] < 0.0) return res;  // 0 <= d[i] < 0
        continue;
      }
      if (std::find(act.begin(), act.end(), i) != act.end()) continue;
      double v = slack(i) / rownorm[i];
      if (v < -1e-12 * (1.0 + std::abs(d[i]) / rownorm[i]) && v < worst) {
        worst = v;
        p = i;
      }
    }
    if (p < 0) break;

    double up = 0.0;
    Vec np = -C.row(p).transpose();
    while (true) {
      if (++res.iterations > max_iter) throw std::runtime_error("projection QP did not terminate");
      const int q = static_cast<int>(act.size());
      Vec dv = J.transpose() * np;
      Vec z = J.rightCols(n - q) * dv.tail(n - q);
      Vec r(q);
      for (int j = q - 1; j >= 0; --j) {
        double s = dv[j];
        for (int k = j + 1; k < q; ++k) s -= R(j, k) * r[k];
        r[j] = s / R(j, j);
      }
      double t1 = std::numeric_limits<double>::infinity();
      int kdrop = -1;
      for (int j = 0; j < q; ++j) {
        if (r[j] > kEps && u[j] / r[j] < t1) {
          t1 = u[j] / r[j];
          kdrop = j;
        }
      }
      double t2 = std::numeric_limits<double>::infinity();
      double znp = z.dot(np);
      if (z.norm() > 1e-12 * np.norm() && znp > 0.0) t2 = -slack(p) / znp;
      double t = std::min(t1, t2);
      if (!std::isfinite(t)) return res;  // dual unbounded: no feasible point

      if (!std::isfinite(t2)) {
        for (int j = 0; j < q; ++j) u[j] -= t * r[j];
        up += t;
        drop(kdrop);
        continue;
      }
      res.x += t * z;
      for (int j = 0; j < q; ++j) u[j] -= t * r[j];
      up += t;
      if (t2 <= t1) {
        for (int i = n - 1; i > q; --i) {
          Givens g(dv[i - 1], dv[i]);
          if (dv[i] == 0.0) continue;
          dv[i - 1] = g.h;
          dv[i] = 0.0;
          g.cols(J, i - 1, i);
        }
        R.col(q).head(q + 1) = dv.head(q + 1);
        act.push_back(p);
        u.push_back(up);
        break;
      }
      drop(kdrop);
    }
  }
  res.feasible = true;
  res.active = act;
  for (std::size_t j = 0; j < act.size(); ++j) res.mu[act[j]] = std::max(0.0, u[j]);
  return res;
}

P2Result solve_p2(const Vec& cbar, const std::vector<ConeGenerators>& cones, const Vec& lo, const Vec& hi,
                  const P2Options& options) {
  const int n = static_cast<int>(cbar.size());
  if (!cbar.allFinite()) throw std::invalid_argument("reference cost must be finite");
  if ((lo.size() != 0 && lo.size() != n) || (hi.size() != 0 && hi.size() != n))
    throw std::invalid_argument("bound dimension mismatch");
  for (const auto& k : cones)
    if (k.size() > 0 && k.dim() != n) throw std::invalid_argument("cone dimension mismatch");
  std::vector<int> order = options.cone_order;
  if (order.empty()) {
    order.resize(cones.size());
    std::iota(order.begin(), order.end(), 0);
  }

  // Bound rows first, then cuts. An empty cone is {0}.
  std::vector<Vec> rows;
  std::vector<double> rhs;
  std::vector<int> lo_row(n, -1), hi_row(n, -1);
  bool apex_only = std::any_of(cones.begin(), cones.end(), [](const ConeGenerators& k) { return k.size() == 0; });
  for (int p = 0; p < n; ++p) {
    double l = lo.size() ? lo[p] : -kInf, h = hi.size() ? hi[p] : kInf;
    if (apex_only) {
      l = std::max(l, 0.0);
      h = std::min(h, 0.0);
    }
    if (std::isfinite(l)) {
      lo_row[p] = static_cast<int>(rows.size());
      rows.push_back(-Vec::Unit(n, p));
      rhs.push_back(-l);
    }
    if (std::isfinite(h)) {
      hi_row[p] = static_cast<int>(rows.size());
      rows.push_back(Vec::Unit(n, p));
      rhs.push_back(h);
    }
  }
  const int nbound = static_cast<int>(rows.size());
  P2Result out;

  auto separate = [&](const Vec& x) {
    int added = 0;
    if (apex_only) return added;
    double tol = options.sep_tol * (1.0 + x.lpNorm<1>());
    for (int i : order) {
      auto cd = cone_distance(x, cones[i]);
      if (cd.distance <= tol) continue;
      rows.push_back(cd.certificate);
      rhs.push_back(0.0);
      out.cut_cone.push_back(i);
      ++added;
    }
    return added;
  };
  for (const Vec& s : options.seeds) {
    if (s.size() != n) throw std::invalid_argument("seed dimension mismatch");
    separate(s);
  }

  ProjectionResult pr;
  while (true) {
    Mat C(rows.size(), n);
    for (std::size_t k = 0; k < rows.size(); ++k) C.row(static_cast<int>(k)) = rows[k].transpose();
    Vec d = Eigen::Map<Vec>(rhs.data(), static_cast<int>(rhs.size()));
    pr = project_polyhedron(cbar, C, d);
    ++out.rounds;
    if (!pr.feasible) {
      out.c = Vec::Zero(n);
      out.objective = cbar.squaredNorm();
      return out;
    }
    if (separate(pr.x) == 0) {
      out.converged = true;
      break;
    }
    if (out.rounds >= options.max_rounds) break;
  }

  out.feasible = true;
  out.c = pr.x;
  out.objective = (cbar - out.c).squaredNorm();
  out.lo_mult = Vec::Zero(n);
  out.hi_mult = Vec::Zero(n);
  for (int p = 0; p < n; ++p) {
    if (lo_row[p] >= 0) out.lo_mult[p] = pr.mu[lo_row[p]];
    if (hi_row[p] >= 0) out.hi_mult[p] = pr.mu[hi_row[p]];
  }
  // keep only the cuts that carry weight
  std::vector<int> cone_of = out.cut_cone;
  out.cut_cone.clear();
  for (int k = nbound; k < static_cast<int>(rows.size()); ++k) {
    if (pr.mu[k] <= 0.0) continue;
    out.cuts.push_back(rows[k]);
    out.cut_cone.push_back(cone_of[k - nbound]);
    out.cut_mult.push_back(pr.mu[k]);
  }
  return out;
}

}  // namespace invlp
