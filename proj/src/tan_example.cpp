#include "cklab/tan_example.hpp"

#include <algorithm>
#include <cmath>

namespace cklab {

double verify_tan_ode(int n, int sample_count, std::uint64_t seed) {
  PhaseSpec phi = PhaseSpec::tan_phase(n);
  double worst = 0.0;
  for (const auto& p : sample_domain(phi, sample_count, seed)) {
    Jet jet = eval_jet(phi, p.x, p.t, p.xi, 2);
    const double t2 = p.t * p.t;
    for (int j = 0; j + 1 < n - 1; ++j)
      worst = std::max(worst, std::abs(jet.partial({jet.xi_index(j), jet.xi_index(j)}) - t2));
    const int last = n - 2;
    const double f = jet.partial({jet.xi_index(last)});
    const double df = jet.partial({jet.xi_index(last), jet.xi_index(last)});
    worst = std::max(worst, std::abs(df - (f * f + t2)));
  }
  return worst;
}

Vec tan_curve(int n, const Vec& xi, const Vec& v, double t) {
  Vec pt(n);
  for (int i = 0; i + 1 < n - 1; ++i) pt[i] = v[i] - t * t * xi[i];
  pt[n - 2] = std::atan(v[n - 2] / t) - t * xi[n - 2];
  pt[n - 1] = t;
  return pt;
}

Vec simplified_curve(int n, const Vec& xi, const Vec& v, double t) {
  Vec pt(n);
  for (int i = 0; i + 1 < n - 1; ++i) pt[i] = v[i] - t * xi[i];
  const double w = v[n - 2];
  pt[n - 2] = t * w - w * w * w / 3.0 - t * t * xi[n - 2];
  pt[n - 1] = t;
  return pt;
}

namespace {

// Real roots of w^3 + P w + Q = 0.
std::vector<double> depressed_cubic_roots(double P, double Q) {
  const double disc = -4.0 * P * P * P - 27.0 * Q * Q;
  std::vector<double> roots;
  if (disc > 0.0) {
    const double m = 2.0 * std::sqrt(-P / 3.0);
    const double theta = std::acos(std::clamp(3.0 * Q / (P * m), -1.0, 1.0));
    for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos(theta / 3.0 - 2.0 * M_PI * k / 3.0));
  } else {
    const double r = std::sqrt(Q * Q / 4.0 + P * P * P / 27.0);
    roots.push_back(std::cbrt(-Q / 2.0 + r) + std::cbrt(-Q / 2.0 - r));
  }
  // Newton polish; the closed forms lose digits when roots are small.
  for (double& w : roots)
    for (int it = 0; it < 3; ++it) {
      const double f = w * w * w + P * w + Q, df = 3.0 * w * w + P;
      if (std::abs(df) > 1e-300) w -= f / df;
    }
  return roots;
}

Vec family_point(CurveFamily family, int n, const Vec& xi, const Vec& v, double t) {
  if (family == CurveFamily::straight) {
    Vec pt(n);
    pt.head(n - 1) = v - t * xi;
    pt[n - 1] = t;
    return pt;
  }
  return simplified_curve(n, xi, v, t);
}

Vec family_dt(CurveFamily family, int n, const Vec& xi, const Vec& v, double t) {
  Vec g(n);
  if (family == CurveFamily::straight) {
    g.head(n - 1) = -xi;
  } else {
    for (int i = 0; i + 1 < n - 1; ++i) g[i] = -xi[i];
    g[n - 2] = v[n - 2] - 2.0 * t * xi[n - 2];
  }
  g[n - 1] = 1.0;
  return g;
}

}  // namespace

PencilSolution pencil_params(const TanConfig& cfg, double s, CurveFamily family) {
  const int n = cfg.n;
  const double t0 = cfg.t0;
  if (std::abs(s - t0) < 1e-9) throw PencilError("pencil: s at the target height (pole)");
  if (static_cast<int>(cfg.p.size()) != n - 1) throw std::invalid_argument("pencil: bad p size");

  PencilSolution sol;
  sol.s = s;
  sol.xi = Vec::Zero(n - 1);
  sol.v = Vec::Zero(n - 1);

  if (family == CurveFamily::straight) {
    sol.xi = -cfg.p / (t0 - s);
    sol.v = s * sol.xi;
  } else {
    for (int i = 0; i + 1 < n - 1; ++i) {
      sol.xi[i] = -cfg.p[i] / (t0 - s);
      sol.v[i] = s * sol.xi[i];
    }
    const double pn = cfg.p[n - 2];
    const double a = (t0 * t0 / (s * s) - 1.0) / 3.0;
    const double b = -t0 * (t0 / s - 1.0);
    const double leading = -s * pn / (t0 * (t0 - s));
    double w;
    if (std::abs(a) < 1e-14) {
      w = pn / b;
    } else {
      auto roots = depressed_cubic_roots(b / a, -pn / a);
      std::sort(roots.begin(), roots.end(), [&](double x, double y) {
        return std::abs(x - leading) < std::abs(y - leading);
      });
      if (roots.size() > 1 && std::abs(roots[0] - roots[1]) < 1e-12)
        throw PencilError("pencil: cubic roots too close to disambiguate");
      w = roots[0];
    }
    sol.v[n - 2] = w;
    sol.xi[n - 2] = w / s - w * w * w / (3.0 * s * s);
  }

  Vec at_s = family_point(family, n, sol.xi, sol.v, s);
  Vec at_t0 = family_point(family, n, sol.xi, sol.v, t0);
  sol.residuals.resize(4);
  sol.residuals[0] = at_s.head(n - 2).norm();
  sol.residuals[1] = (at_t0.head(n - 2) - cfg.p.head(n - 2)).norm();
  sol.residuals[2] = std::abs(at_s[n - 2]);
  sol.residuals[3] = std::abs(at_t0[n - 2] - cfg.p[n - 2]);
  return sol;
}

TangentFrame tangent_frame(const TanConfig& cfg, double s, double h_s, CurveFamily family) {
  const int n = cfg.n;
  if (h_s <= 0.0) h_s = 2e-3 * (cfg.t0 - 1.0);
  auto gamma_at = [&](double ss) {
    PencilSolution sol = pencil_params(cfg, ss, family);
    return family_dt(family, n, sol.xi, sol.v, cfg.t0);
  };
  TangentFrame f;
  Vec gm2 = gamma_at(s - 2 * h_s), gm1 = gamma_at(s - h_s), g0 = gamma_at(s);
  Vec gp1 = gamma_at(s + h_s), gp2 = gamma_at(s + 2 * h_s);
  f.gamma = g0;
  f.dgamma = (-gp2 + 8.0 * gp1 - 8.0 * gm1 + gm2) / (12.0 * h_s);
  f.ddgamma = (-gp2 + 16.0 * gp1 - 30.0 * g0 + 16.0 * gm1 - gm2) / (12.0 * h_s * h_s);
  return f;
}

ConinessResult coniness_det(const TanConfig& cfg, CurveFamily family) {
  const int n = cfg.n;
  for (int i = 0; i + 2 < n - 1; ++i)
    if (cfg.p[i] != 0.0)
      throw std::invalid_argument("coniness: p must be supported on its last two coordinates");
  if (cfg.p[n - 3 >= 0 ? n - 3 : 0] == 0.0 || cfg.p[n - 2] == 0.0)
    throw std::invalid_argument("coniness: the two active p components must be nonzero");

  TangentFrame f = tangent_frame(cfg, 1.0, 0.0, family);
  const int active[3] = {n - 3, n - 2, n - 1};
  Mat m(3, 3);
  for (int c = 0; c < 3; ++c) {
    m(0, c) = f.gamma[active[c]];
    m(1, c) = f.dgamma[active[c]];
    m(2, c) = f.ddgamma[active[c]];
  }
  ConinessResult r;
  r.det = m.determinant();
  const double t0 = cfg.t0;
  r.leading = 2.0 * std::pow(std::abs(cfg.p[n - 2]), 3.0) * std::abs(cfg.p[n - 3]) /
              (3.0 * t0 * t0 * std::pow(t0 - 1.0, 6.0));
  r.rel_err = std::abs(r.det - r.leading) / r.leading;
  return r;
}

LineMapView tan_illustration_map(int n, double v0_last) {
  LineMapView m;
  m.F = [n, v0_last](const Vec& x, double t) {
    Vec y = x;
    y[n - 2] = ((t * t + v0_last * v0_last) / t) * (x[n - 2] - std::atan(v0_last / t));
    return std::make_pair(y, t * t);
  };
  m.Xi = [](const Vec& xi) { return xi; };
  m.V = [n, v0_last](const Vec& xi, const Vec& v) {
    Vec w = v;
    w[n - 2] = v[n - 2] - v0_last - v0_last * v0_last * xi[n - 2];
    return w;
  };
  return m;
}

FitReport illustrate_straightening(int n, double v0_last, const std::vector<double>& radii,
                                   int samples_per_radius, std::uint64_t seed) {
  PhaseSpec phi = PhaseSpec::tan_phase(n);
  Vec v0 = Vec::Zero(n - 1);
  v0[n - 2] = v0_last;
  return fit_error_order_view(tan_illustration_map(n, v0_last), phi, Vec::Zero(n - 1), v0, radii,
                              samples_per_radius, seed);
}

}  // namespace cklab
