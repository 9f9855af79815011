#include "cklab/phase_checks.hpp"

#include <cmath>
#include <random>

namespace cklab {

namespace {

// Columns d/dxi_j of grad_{(x,t)} phi, from an order >= 2 jet.
Mat mixed_columns(const Jet& jet) { return jet.mixed_x_xi(); }

// d/dx_a of column j of the mixed matrix (entries are order-3 partials).
Vec mixed_column_deriv(const Jet& jet, int j, int a) {
  const int n = jet.n();
  Vec c(n);
  for (int b = 0; b < n; ++b) c[b] = jet.partial({a, b, jet.xi_index(j)});
  return c;
}

}  // namespace

Vec gauss_map(const Jet& jet) {
  Vec g = wedge(mixed_columns(jet));
  if (g.norm() < 1e-12) throw DegeneratePhaseError("gauss_map: wedge vanishes (H1 fails here)");
  return g;
}

Vec gauss_map(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi) {
  return gauss_map(eval_jet(phase, x, t, xi, 2));
}

double check_h1(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi) {
  Mat m = eval_jet(phase, x, t, xi, 2).mixed_x_xi();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

H2Result check_h2(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi) {
  Jet jet = eval_jet(phase, x, t, xi, 3);
  const int k = phase.n() - 1;
  Vec g = gauss_map(jet);
  Mat m1 = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < phase.n(); ++a)
        m1(i, j) += g[a] * jet.partial({a, jet.xi_index(i), jet.xi_index(j)});
  H2Result r;
  r.matrix = m1;
  r.det = m1.determinant();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m1 + m1.transpose()));
  r.posdef = es.eigenvalues().minCoeff() > 0.0;
  return r;
}

DirectionalDerivatives bourgain_matrices(const PhaseSpec& phase, const Vec& x, double t,
                                         const Vec& xi) {
  Jet jet = eval_jet(phase, x, t, xi, 4);
  const int n = phase.n(), k = n - 1;
  Vec g = gauss_map(jet);

  // dG[a] = d/dx_a G, by multilinearity of the wedge.
  Mat cols = mixed_columns(jet);
  std::vector<Vec> dg(n);
  for (int a = 0; a < n; ++a) {
    dg[a] = Vec::Zero(n);
    for (int j = 0; j < k; ++j) {
      Mat perturbed = cols;
      perturbed.col(j) = mixed_column_deriv(jet, j, a);
      dg[a] += wedge(perturbed);
    }
  }

  Mat m1 = Mat::Zero(k, k), m2 = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const int xi_i = jet.xi_index(i), xi_j = jet.xi_index(j);
      for (int a = 0; a < n; ++a) {
        m1(i, j) += g[a] * jet.partial({a, xi_i, xi_j});
        for (int b = 0; b < n; ++b) {
          m2(i, j) += g[a] * g[b] * jet.partial({a, b, xi_i, xi_j});
          m2(i, j) += g[a] * dg[a][b] * jet.partial({b, xi_i, xi_j});
        }
      }
    }
  return {g, m1, m2};
}

ProportionalityFit proportionality_fit(const Mat& m1, const Mat& m2) {
  const double n1 = m1.norm();
  if (n1 < 1e-12) throw DegeneratePhaseError("proportionality_fit: first matrix vanishes");
  ProportionalityFit f;
  // A target below the rounding noise of the jet terms is indistinguishable
  // from the zero matrix, which is proportional with lambda = 0.
  if (m2.norm() <= 1e-12 * std::max(1.0, n1)) return f;
  f.lambda_hat = (m1.array() * m2.array()).sum() / (n1 * n1);
  f.residual = (m2 - f.lambda_hat * m1).norm() / std::max(m2.norm(), 1e-14);
  return f;
}

ConditionReport check_bourgain(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi,
                               double tol) {
  (void)tol;
  ConditionReport r;
  r.x = x;
  r.t = t;
  r.xi = xi;
  r.h1_sigma_min = check_h1(phase, x, t, xi);
  H2Result h2 = check_h2(phase, x, t, xi);
  r.h2_det = h2.det;
  r.h2_posdef = h2.posdef;
  DirectionalDerivatives d = bourgain_matrices(phase, x, t, xi);
  ProportionalityFit f = proportionality_fit(d.m1, d.m2);
  r.bourgain_lambda_hat = f.lambda_hat;
  r.bourgain_residual = f.residual;
  return r;
}

ABCData canonical_abc(const PhaseSpec& phase) {
  const int k = phase.n() - 1;
  switch (phase.tag()) {
    case PhaseTag::Rest:
      return {[k](const Vec&, const Vec&) { return Mat::Zero(k, k).eval(); },
              [k](const Vec&, const Vec&) { return Mat::Identity(k, k).eval(); },
              [](const Vec&, double t, const Vec&) { return t; }};
    case PhaseTag::BochnerRiesz:
      return {[k](const Vec&, const Vec&) { return Mat::Zero(k, k).eval(); },
              [k](const Vec& v, const Vec&) {
                Mat b = Mat::Identity(k, k) - v * v.transpose();
                return b.eval();
              },
              [](const Vec& x, double t, const Vec& xi) {
                return t / std::sqrt(1.0 + (x - t * xi).squaredNorm());
              }};
    case PhaseTag::Tan:
      return {[k](const Vec& v, const Vec&) {
                Mat a = Mat::Zero(k, k);
                a(k - 1, k - 1) = v[k - 1] * v[k - 1];
                return a.eval();
              },
              [k](const Vec&, const Vec&) { return Mat::Identity(k, k).eval(); },
              [](const Vec&, double t, const Vec&) { return t * t; }};
    default:
      throw std::invalid_argument("canonical_abc: no closed-form triple for this phase");
  }
}

AbcCheck check_abc(const PhaseSpec& phase, const ABCData& abc, const Vec& x, double t,
                   const Vec& xi) {
  Jet jet = eval_jet(phase, x, t, xi, 2);
  Vec v = jet.grad_xi();
  Mat hess = jet.hess_xi();
  Mat b = abc.B(v, xi);
  Mat model = abc.A(v, xi) + abc.c(x, t, xi) * b;
  AbcCheck r;
  r.residual = (hess - model).norm() / (1.0 + hess.norm());
  r.det_b = b.determinant();
  // (G . grad_x) c by central finite difference along the Gauss direction.
  Vec g = gauss_map(jet);
  const double h = 1e-5;
  const int k = phase.n() - 1;
  Vec xp = x + h * g.head(k), xm = x - h * g.head(k);
  const double tp = t + h * g[k], tm = t - h * g[k];
  r.gc_derivative = (abc.c(xp, tp, xi) - abc.c(xm, tm, xi)) / (2.0 * h);
  return r;
}

std::vector<SamplePoint> sample_domain(const PhaseSpec& phase, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_domain: count >= 1");
  const int n = phase.n();
  Box bm = phase.box_m().shrunk(0.1), bs = phase.box_sigma().shrunk(0.1);
  std::vector<SamplePoint> pts;
  pts.reserve(count);
  SamplePoint origin;
  origin.x = phase.origin_m().head(n - 1);
  origin.t = phase.origin_t();
  origin.xi = phase.origin_sigma();
  pts.push_back(origin);
  Halton h(2 * n - 1, seed);
  while (static_cast<int>(pts.size()) < count) {
    Vec u = h.next();
    SamplePoint p;
    Vec m = bm.map01(u.head(n));
    p.x = m.head(n - 1);
    p.t = m[n - 1];
    p.xi = bs.map01(u.tail(n - 1));
    pts.push_back(std::move(p));
  }
  return pts;
}

PolyMap random_near_identity(int dim, double amplitude, std::uint64_t seed) {
  PolyMap m = PolyMap::identity(dim);
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 77);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  // Add every degree-2 monomial to every component with a small coefficient.
  for (int c = 0; c < dim; ++c) {
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) {
        PolyTerm t;
        t.coeff = u(rng);
        t.exps.assign(dim, 0);
        t.exps[i] += 1;
        t.exps[j] += 1;
        m.components[c].push_back(std::move(t));
      }
    }
  }
  return m;
}

}  // namespace cklab
