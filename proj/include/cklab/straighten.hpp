// Curve-straightening maps (F, Xi, V) anchored at a parameter (xi0, v0):
// nearby curves map to straight lines up to an error quadratic in the
// parameter distance when the Hessian decomposition data is consistent.
#pragma once

#include "cklab/curve.hpp"
#include "cklab/phase_checks.hpp"

namespace cklab {

struct StraighteningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Type-erased straightening triple: F on space-time, Xi on directions,
// V on parameters. Target lines are {(V - s Xi, s)}.
struct LineMapView {
  std::function<std::pair<Vec, double>(const Vec& x, double t)> F;
  std::function<Vec(const Vec& xi)> Xi;
  std::function<Vec(const Vec& xi, const Vec& v)> V;
  // Target line as (direction, offset). Defaults to (Xi(xi), V(xi, v));
  // override when the image line's direction depends on v as well.
  std::function<std::pair<Vec, Vec>(const Vec& xi, const Vec& v)> line;
};

class StraighteningMap {
 public:
  // validate=false skips the decomposition-consistency check along the anchor
  // curve (used to build deliberately naive maps).
  static StraighteningMap build(const PhaseSpec& phase, const ABCData& abc, Vec xi0, Vec v0,
                                bool validate = true);

  // F(x, t) = (K(t)(x - X(t)), c~(t)) with X the anchor curve and K the
  // spatial Jacobian of grad_xi phi along it.
  std::pair<Vec, double> apply(const Vec& x, double t) const;
  Vec map_xi(const Vec& xi) const { return b0_ * (xi - xi0_); }
  Vec map_v(const Vec& xi, const Vec& v) const { return (v - v0_) - a0_ * (xi - xi0_); }
  double ctilde(double t) const;
  Vec anchor_x(double t) const;

  const Vec& xi0() const { return xi0_; }
  const Vec& v0() const { return v0_; }
  const Mat& a0() const { return a0_; }
  const Mat& b0() const { return b0_; }

  LineMapView view() const;  // self-contained copy, safe to outlive the map

 private:
  PhaseSpec phase_ = PhaseSpec::rest(2);
  ABCData abc_;
  Vec xi0_, v0_;
  Mat a0_, b0_;
  std::vector<double> tg_;
  std::vector<Vec> anchor_;  // X(t) on tg_
};

// Exact straightening of the n=3 cubic model phase: F(x,t) = (x1, x2 - t x1)
// with direction map (xi, v) -> (xi2, xi1 + v1) and offset map v.
LineMapView worst_explicit_map();

// max over the grid of |y - (V - s Xi)| where (y, s) = F(curve point).
double straightening_error(const LineMapView& map, const PhaseSpec& phase, const Vec& xi,
                           const Vec& v, const std::vector<double>& t_grid);

struct FitReport {
  bool exact = false;  // all errors below 1e-13
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  std::vector<double> radii, max_errors;
};

// Seeded parameters at each radius from the anchor; log-log regression of the
// max straightening error against the radius.
FitReport fit_error_order_view(const LineMapView& map, const PhaseSpec& phase, const Vec& xi0,
                               const Vec& v0, const std::vector<double>& radii,
                               int samples_per_radius, std::uint64_t seed);
FitReport fit_error_order(const PhaseSpec& phase, const ABCData& abc, const Vec& xi0,
                          const Vec& v0, const std::vector<double>& radii,
                          int samples_per_radius, std::uint64_t seed, bool validate = true);

std::vector<double> default_radius_ladder();  // 2^-3 ... 2^-8

struct ExtractedABC {
  Mat A, B;                             // values at the anchor
  std::function<double(double)> c_of_t; // s-component of F along the anchor curve
};

// First-order finite-difference jets of V and Xi at the anchor give
// A = -(grad_v V)^{-1} grad_xi V and B = (grad_v V)^{-1} grad_xi Xi. The B
// sign is fixed so that build + extract is the identity on (A, B).
ExtractedABC extract_abc_from_map(const LineMapView& map, const PhaseSpec& phase, const Vec& xi0,
                                  const Vec& v0);

}  // namespace cklab
