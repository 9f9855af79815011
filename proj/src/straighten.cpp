#include "cklab/straighten.hpp"

#include <cmath>
#include <random>

namespace cklab {

namespace {

Mat spatial_jacobian(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi) {
  Jet jet(phase, x, t, xi, 2);
  const int k = phase.n() - 1;
  Mat jac(k, k);
  for (int j = 0; j < k; ++j)
    for (int a = 0; a < k; ++a) jac(j, a) = jet.partial({a, jet.xi_index(j)});
  return jac;
}

}  // namespace

StraighteningMap StraighteningMap::build(const PhaseSpec& phase, const ABCData& abc, Vec xi0,
                                         Vec v0, bool validate) {
  StraighteningMap m;
  m.phase_ = phase;
  m.abc_ = abc;
  m.xi0_ = std::move(xi0);
  m.v0_ = std::move(v0);
  m.a0_ = abc.A(m.v0_, m.xi0_);
  m.b0_ = abc.B(m.v0_, m.xi0_);
  if (std::abs(m.b0_.determinant()) < 1e-6)
    throw StraighteningError("build: direction map B(v0, xi0) is degenerate");

  const int n = phase.n();
  const double tlo = phase.box_m().lo[n - 1], thi = phase.box_m().hi[n - 1];
  const int grid = 200;
  m.tg_.resize(grid);
  for (int i = 0; i < grid; ++i) m.tg_[i] = tlo + (thi - tlo) * i / (grid - 1);
  CurveSample anchor = trace_curve(phase, m.xi0_, m.v0_, m.tg_);
  m.anchor_ = anchor.points;

  std::vector<double> ct(grid);
  for (int i = 0; i < grid; ++i) ct[i] = abc.c(m.anchor_[i], m.tg_[i], m.xi0_);
  const double dir = ct[1] - ct[0];
  for (int i = 1; i < grid; ++i)
    if ((ct[i] - ct[i - 1]) * dir <= 0.0)
      throw StraighteningError("build: rescaled height c~ is not strictly monotone");

  if (validate) {
    for (int i = 0; i < grid; i += 10) {
      AbcCheck chk = check_abc(phase, abc, m.anchor_[i], m.tg_[i], m.xi0_);
      if (chk.residual > 1e-6)
        throw StraighteningError("build: Hessian decomposition inconsistent along the anchor");
    }
  }
  return m;
}

Vec StraighteningMap::anchor_x(double t) const {
  size_t near = 0;
  for (size_t i = 1; i < tg_.size(); ++i)
    if (std::abs(tg_[i] - t) < std::abs(tg_[near] - t)) near = i;
  return solve_x(phase_, xi0_, v0_, t, anchor_[near]);
}

double StraighteningMap::ctilde(double t) const { return abc_.c(anchor_x(t), t, xi0_); }

std::pair<Vec, double> StraighteningMap::apply(const Vec& x, double t) const {
  Vec ax = anchor_x(t);
  Mat k = spatial_jacobian(phase_, ax, t, xi0_);
  return {k * (x - ax), abc_.c(ax, t, xi0_)};
}

LineMapView StraighteningMap::view() const {
  StraighteningMap copy = *this;
  LineMapView v;
  v.F = [copy](const Vec& x, double t) { return copy.apply(x, t); };
  v.Xi = [copy](const Vec& xi) { return copy.map_xi(xi); };
  v.V = [copy](const Vec& xi, const Vec& vv) { return copy.map_v(xi, vv); };
  return v;
}

LineMapView worst_explicit_map() {
  LineMapView v;
  v.F = [](const Vec& x, double t) {
    Vec y(2);
    y << x[0], x[1] - t * x[0];
    return std::make_pair(y, t);
  };
  v.Xi = [](const Vec& xi) {
    Vec d(2);
    d << xi[1], xi[0];
    return d;
  };
  v.V = [](const Vec&, const Vec& vv) { return vv; };
  // The image line is exactly v - t (xi2, xi1 + v1): its direction picks up a
  // shear from v1, which the plain Xi cannot express.
  v.line = [](const Vec& xi, const Vec& vv) {
    Vec d(2);
    d << xi[1], xi[0] + vv[0];
    return std::make_pair(d, vv);
  };
  return v;
}

double straightening_error(const LineMapView& map, const PhaseSpec& phase, const Vec& xi,
                           const Vec& v, const std::vector<double>& t_grid) {
  CurveSample s = trace_curve(phase, xi, v, t_grid);
  Vec dir, off;
  if (map.line) {
    std::tie(dir, off) = map.line(xi, v);
  } else {
    dir = map.Xi(xi);
    off = map.V(xi, v);
  }
  double worst = 0.0;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    auto [y, h] = map.F(s.points[i], t_grid[i]);
    worst = std::max(worst, (y - (off - h * dir)).norm());
  }
  return worst;
}

std::vector<double> default_radius_ladder() {
  std::vector<double> r;
  for (int k = 3; k <= 8; ++k) r.push_back(std::pow(2.0, -k));
  return r;
}

FitReport fit_error_order_view(const LineMapView& map, const PhaseSpec& phase, const Vec& xi0,
                               const Vec& v0, const std::vector<double>& radii,
                               int samples_per_radius, std::uint64_t seed) {
  const int n = phase.n(), k = n - 1;
  const double tlo = phase.box_m().shrunk(0.1).lo[n - 1], thi = phase.box_m().shrunk(0.1).hi[n - 1];
  std::vector<double> tg(41);
  for (int i = 0; i < 41; ++i) tg[i] = tlo + (thi - tlo) * i / 40.0;

  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 3);
  std::normal_distribution<double> gauss(0.0, 1.0);

  FitReport rep;
  rep.radii = radii;
  for (double r : radii) {
    double worst = 0.0;
    for (int s = 0; s < samples_per_radius; ++s) {
      Vec d(2 * k);
      for (int i = 0; i < 2 * k; ++i) d[i] = gauss(rng);
      d *= r / d.norm();
      Vec xi = xi0 + d.head(k), v = v0 + d.tail(k);
      worst = std::max(worst, straightening_error(map, phase, xi, v, tg));
    }
    rep.max_errors.push_back(worst);
  }

  bool exact = true;
  for (double e : rep.max_errors) exact = exact && e < 1e-13;
  rep.exact = exact;
  if (!exact) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < radii.size(); ++i) {
      lx.push_back(std::log(radii[i]));
      ly.push_back(std::log(std::max(rep.max_errors[i], 1e-300)));
    }
    LineFit f = fit_line(lx, ly);
    rep.slope = f.slope;
    rep.intercept = f.intercept;
    rep.r2 = f.r2;
  }
  return rep;
}

FitReport fit_error_order(const PhaseSpec& phase, const ABCData& abc, const Vec& xi0,
                          const Vec& v0, const std::vector<double>& radii,
                          int samples_per_radius, std::uint64_t seed, bool validate) {
  StraighteningMap map = StraighteningMap::build(phase, abc, xi0, v0, validate);
  return fit_error_order_view(map.view(), phase, xi0, v0, radii, samples_per_radius, seed);
}

ExtractedABC extract_abc_from_map(const LineMapView& map, const PhaseSpec& phase, const Vec& xi0,
                                  const Vec& v0) {
  const int k = phase.n() - 1;
  const double h = 1e-6;
  Mat dv_v(k, k), dxi_v(k, k), dxi_xi(k, k);
  for (int j = 0; j < k; ++j) {
    Vec vp = v0, vm = v0;
    vp[j] += h;
    vm[j] -= h;
    dv_v.col(j) = (map.V(xi0, vp) - map.V(xi0, vm)) / (2.0 * h);
    Vec xp = xi0, xm = xi0;
    xp[j] += h;
    xm[j] -= h;
    dxi_v.col(j) = (map.V(xp, v0) - map.V(xm, v0)) / (2.0 * h);
    dxi_xi.col(j) = (map.Xi(xp) - map.Xi(xm)) / (2.0 * h);
  }
  Eigen::FullPivLU<Mat> lu(dv_v);
  if (!lu.isInvertible()) throw StraighteningError("extract: grad_v V is singular");

  ExtractedABC out;
  out.A = -lu.solve(dxi_v);
  out.B = lu.solve(dxi_xi);
  Vec xi0c = xi0, v0c = v0;
  PhaseSpec ph = phase;
  auto f = map.F;
  out.c_of_t = [ph, xi0c, v0c, f](double t) {
    Vec x = solve_x(ph, xi0c, v0c, t, ph.origin_m().head(ph.n() - 1));
    return f(x, t).second;
  };
  return out;
}

}  // namespace cklab
