// The log-secant phase pipeline: ODE ansatz verification, closed-form and
// simplified curves, the pencil of curves through the axis curve and an
// off-axis point, and the tangent-frame determinant witnessing that the
// pencil is not contained in a surface.
#pragma once

#include "cklab/straighten.hpp"

namespace cklab {

struct PencilError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TanConfig {
  int n = 3;
  double t0 = 1.05;  // target height, t0 > 1
  Vec p;             // spatial part of the target point, nonzero
  double eps0 = 0.1;
};

// Which curve family the pencil is built from.
enum class CurveFamily { cubic, straight };

// Max residual of the defining derivative identities of the phase ansatz:
// d/dxi_j of the j-th frequency gradient component equals t^2 for j < n-2 and
// (component)^2 + t^2 for the last one.
double verify_tan_ode(int n, int sample_count, std::uint64_t seed);

// Closed-form curve (v' - t^2 xi', atan(v_{n-1}/t) - t xi_{n-1}, t).
Vec tan_curve(int n, const Vec& xi, const Vec& v, double t);

// Cubic model curve (v' - t xi', t v_{n-1} - v_{n-1}^3/3 - t^2 xi_{n-1}, t).
Vec simplified_curve(int n, const Vec& xi, const Vec& v, double t);

struct PencilSolution {
  double s = 0.0;
  Vec xi, v;
  Vec residuals;  // the four defining equations, in order
};

// Parameters of the family member that passes through (0, s) and (p, t0).
// The last v-component is the real root of the governing cubic nearest its
// leading-order value; the last xi-component then satisfies the s-equation
// exactly.
PencilSolution pencil_params(const TanConfig& cfg, double s,
                             CurveFamily family = CurveFamily::cubic);

struct TangentFrame {
  Vec gamma, dgamma, ddgamma;  // each in R^n, t-derivative of the curve at t0
};

// gamma(s) analytically in t; s-derivatives by 5-point central differences.
// h_s <= 0 selects the default step 2e-3 * (t0 - 1).
TangentFrame tangent_frame(const TanConfig& cfg, double s, double h_s = 0.0,
                           CurveFamily family = CurveFamily::cubic);

struct ConinessResult {
  double det = 0.0;      // 3x3 determinant on the active coordinates at s = 1
  double leading = 0.0;  // 2 |p_{n-1}|^3 |p_{n-2}| / (3 t0^2 (t0-1)^6)
  double rel_err = 0.0;
};

// Requires p' supported on its last coordinate so the frame lives in the
// (x_{n-2}, x_{n-1}, t) subspace.
ConinessResult coniness_det(const TanConfig& cfg, CurveFamily family = CurveFamily::cubic);

// Composite shift / dilate / time-reparameterization map taking the curves
// near the anchor (xi0 = 0, v0 supported on the last coordinate) to lines;
// matches the generic construction at the same anchor.
LineMapView tan_illustration_map(int n, double v0_last);

// Error-order fit of the illustration map around its anchor.
FitReport illustrate_straightening(int n, double v0_last, const std::vector<double>& radii,
                                   int samples_per_radius, std::uint64_t seed);

}  // namespace cklab
