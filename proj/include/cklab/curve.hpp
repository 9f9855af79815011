// Curves x(t) defined implicitly by grad_xi phi(x, t, xi) = v, traced by
// Newton continuation in t. Curves are graphs over t on the built-in boxes.
#pragma once

#include "cklab/phase.hpp"

namespace cklab {

struct CurveParam {
  Vec xi, v;
};

// Sum metric |xi - xi'| + |v - v'| on curve parameters.
double curve_metric(const CurveParam& p1, const CurveParam& p2);

struct CurveSample {
  std::vector<double> t_grid;
  std::vector<Vec> points;        // x(t) per grid point
  std::vector<int> newton_iters;  // per grid point
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iters = 50;
  double max_cond = 1e8;
};

// Newton solve of grad_xi phi(x, t, xi) = v for x from the given guess.
// Full steps with half-step fallback when the residual increases.
Vec solve_x(const PhaseSpec& phase, const Vec& xi, const Vec& v, double t, const Vec& x_guess,
            const NewtonOptions& opts = {}, int* iters_out = nullptr);

// grad_xi phi at a domain point.
Vec v_of(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi);

// Solve at the grid point nearest the phase's t-origin first, then march
// outward reusing the neighboring solution as the guess.
CurveSample trace_curve(const PhaseSpec& phase, const Vec& xi, const Vec& v,
                        const std::vector<double>& t_grid);

// Spatial part of the analytic curve tangent dx/dt = -J^{-1} d_t grad_xi phi,
// with J the spatial Jacobian of grad_xi phi.
Vec curve_tangent(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi);

// || grad_xi X + grad_v X * hess_xi phi ||_F with the X-gradients taken by
// central finite differences (step 1e-5) on solve_x.
double check_implicit_derivative(const PhaseSpec& phase, const Vec& xi, const Vec& v, double t);

// Bounding box of grad_xi phi over low-discrepancy samples of the (10%-shrunk)
// domain boxes, itself shrunk 10%.
Box discover_v_box(const PhaseSpec& phase, int samples = 10000);

}  // namespace cklab
