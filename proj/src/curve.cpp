#include "cklab/curve.hpp"

#include <algorithm>
#include <cmath>

namespace cklab {

double curve_metric(const CurveParam& p1, const CurveParam& p2) {
  return (p1.xi - p2.xi).norm() + (p1.v - p2.v).norm();
}

namespace {

// Residual and spatial Jacobian of F(x) = grad_xi phi(x, t, xi) - v.
// Jacobian entry (j, a) = d/dx_a d/dxi_j phi. Domain membership is not
// enforced on intermediate iterates.
void residual_and_jacobian(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi,
                           const Vec& v, Vec& f, Mat& jac) {
  Jet jet(phase, x, t, xi, 2);
  f = jet.grad_xi() - v;
  const int k = phase.n() - 1;
  jac.resize(k, k);
  for (int j = 0; j < k; ++j)
    for (int a = 0; a < k; ++a) jac(j, a) = jet.partial({a, jet.xi_index(j)});
}

}  // namespace

Vec solve_x(const PhaseSpec& phase, const Vec& xi, const Vec& v, double t, const Vec& x_guess,
            const NewtonOptions& opts, int* iters_out) {
  Vec x = x_guess, f;
  Mat jac;
  residual_and_jacobian(phase, x, t, xi, v, f, jac);
  double fn = f.norm();
  for (int it = 0; it < opts.max_iters; ++it) {
    if (fn <= opts.tol) {
      if (iters_out) *iters_out = it;
      return x;
    }
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff(), smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > opts.max_cond)
      throw TraceError("solve_x: Jacobian ill-conditioned");
    Vec step = svd.solve(f);
    double scale = 1.0;
    for (int half = 0; half < 30; ++half) {
      Vec cand = x - scale * step;
      Vec fc;
      Mat jc;
      residual_and_jacobian(phase, cand, t, xi, v, fc, jc);
      if (fc.norm() < fn || scale < 1e-6) {
        x = cand;
        f = fc;
        jac = jc;
        fn = fc.norm();
        break;
      }
      scale *= 0.5;
    }
  }
  if (fn <= opts.tol) {
    if (iters_out) *iters_out = opts.max_iters;
    return x;
  }
  throw TraceError("solve_x: no convergence in 50 iterations");
}

Vec v_of(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi) {
  return eval_jet(phase, x, t, xi, 1).grad_xi();
}

CurveSample trace_curve(const PhaseSpec& phase, const Vec& xi, const Vec& v,
                        const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("trace_curve: empty grid");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (t_grid[i] <= t_grid[i - 1]) throw std::invalid_argument("trace_curve: grid not increasing");

  const double t0 = phase.origin_t();
  size_t start = 0;
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (std::abs(t_grid[i] - t0) < std::abs(t_grid[start] - t0)) start = i;

  CurveSample s;
  s.t_grid = t_grid;
  s.points.resize(t_grid.size());
  s.newton_iters.resize(t_grid.size(), 0);

  auto solve_at = [&](size_t i, const Vec& guess) {
    try {
      s.points[i] = solve_x(phase, xi, v, t_grid[i], guess, {}, &s.newton_iters[i]);
    } catch (const TraceError& e) {
      throw TraceError(std::string(e.what()) + " at t = " + std::to_string(t_grid[i]));
    }
  };

  solve_at(start, phase.origin_m().head(phase.n() - 1));
  for (size_t i = start + 1; i < t_grid.size(); ++i) solve_at(i, s.points[i - 1]);
  for (size_t i = start; i-- > 0;) solve_at(i, s.points[i + 1]);
  return s;
}

Vec curve_tangent(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi) {
  Jet jet(phase, x, t, xi, 2);
  const int k = phase.n() - 1;
  Mat jac(k, k);
  Vec dt(k);
  for (int j = 0; j < k; ++j) {
    for (int a = 0; a < k; ++a) jac(j, a) = jet.partial({a, jet.xi_index(j)});
    dt[j] = jet.partial({jet.t_index(), jet.xi_index(j)});
  }
  return -jac.fullPivLu().solve(dt);
}

double check_implicit_derivative(const PhaseSpec& phase, const Vec& xi, const Vec& v, double t) {
  const int k = phase.n() - 1;
  const double h = 1e-5;
  Vec x = solve_x(phase, xi, v, t, phase.origin_m().head(k));
  Mat dxi(k, k), dv(k, k);
  for (int j = 0; j < k; ++j) {
    Vec xip = xi, xim = xi;
    xip[j] += h;
    xim[j] -= h;
    dxi.col(j) = (solve_x(phase, xip, v, t, x) - solve_x(phase, xim, v, t, x)) / (2.0 * h);
    Vec vp = v, vm = v;
    vp[j] += h;
    vm[j] -= h;
    dv.col(j) = (solve_x(phase, xi, vp, t, x) - solve_x(phase, xi, vm, t, x)) / (2.0 * h);
  }
  Mat hess = Jet(phase, x, t, xi, 2).hess_xi();
  return (dxi + dv * hess).norm();
}

Box discover_v_box(const PhaseSpec& phase, int samples) {
  const int n = phase.n();
  Box bm = phase.box_m().shrunk(0.1), bs = phase.box_sigma().shrunk(0.1);
  Halton h(2 * n - 1, 0);
  Vec lo = Vec::Constant(n - 1, 1e300), hi = Vec::Constant(n - 1, -1e300);
  for (int i = 0; i < samples; ++i) {
    Vec u = h.next();
    Vec m = bm.map01(u.head(n));
    Vec g = Jet(phase, m.head(n - 1), m[n - 1], bs.map01(u.tail(n - 1)), 1).grad_xi();
    lo = lo.cwiseMin(g);
    hi = hi.cwiseMax(g);
  }
  return Box(lo, hi).shrunk(0.1);
}

}  // namespace cklab
