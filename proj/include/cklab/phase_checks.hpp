// Pointwise condition checks: rank of the mixed Hessian, nondegeneracy of the
// first directional derivative of the frequency Hessian along the Gauss map,
// and proportionality of the second directional derivative to the first.
#pragma once

#include <functional>

#include "cklab/phase.hpp"

namespace cklab {

struct ConditionReport {
  Vec x, xi;
  double t = 0.0;
  double h1_sigma_min = 0.0;
  double h2_det = 0.0;
  bool h2_posdef = false;
  double bourgain_lambda_hat = 0.0;
  double bourgain_residual = 0.0;
  bool holds(double tol) const { return bourgain_residual <= tol; }
};

// Wedge of the n-1 columns d/dxi_j grad_x phi; throws DegeneratePhaseError if
// the result is shorter than 1e-12.
Vec gauss_map(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi);
Vec gauss_map(const Jet& jet);

// Smallest singular value of the n x (n-1) matrix grad_x grad_xi phi.
double check_h1(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi);

struct H2Result {
  Mat matrix;  // (G . grad_x) hess_xi phi
  double det = 0.0;
  bool posdef = false;
};
H2Result check_h2(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi);

// First and second applications of the vector field G . grad_x to hess_xi phi.
// The second application differentiates G as well (product rule).
struct DirectionalDerivatives {
  Vec g;
  Mat m1, m2;
};
DirectionalDerivatives bourgain_matrices(const PhaseSpec& phase, const Vec& x, double t,
                                         const Vec& xi);

// Least-squares proportionality m2 ~ lambda * m1 with relative Frobenius
// residual against ||m2||.
struct ProportionalityFit {
  double lambda_hat = 0.0;
  double residual = 0.0;
};
ProportionalityFit proportionality_fit(const Mat& m1, const Mat& m2);

ConditionReport check_bourgain(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi,
                               double tol = 1e-6);

// The (A, B, c) data of the reformulated condition, as evaluators.
struct ABCData {
  std::function<Mat(const Vec& v, const Vec& xi)> A;
  std::function<Mat(const Vec& v, const Vec& xi)> B;
  std::function<double(const Vec& x, double t, const Vec& xi)> c;
};

// Closed-form triples for the rest / Bochner-Riesz / tan built-ins.
ABCData canonical_abc(const PhaseSpec& phase);

struct AbcCheck {
  double residual = 0.0;       // || hess_xi phi - A - c B ||_F / (1 + ||hess_xi phi||_F)
  double det_b = 0.0;
  double gc_derivative = 0.0;  // (G . grad_x) c, central FD along G
};
AbcCheck check_abc(const PhaseSpec& phase, const ABCData& abc, const Vec& x, double t,
                   const Vec& xi);

struct SamplePoint {
  Vec x, xi;
  double t = 0.0;
};

// Deterministic low-discrepancy samples in the 10%-shrunk domain boxes.
// The first sample is pinned to the domain origin.
std::vector<SamplePoint> sample_domain(const PhaseSpec& phase, int count, std::uint64_t seed);

// Identity plus a seeded degree-2 polynomial perturbation with coefficients
// bounded by `amplitude`.
PolyMap random_near_identity(int dim, double amplitude, std::uint64_t seed);

}  // namespace cklab
