// Finitary tube geometry: delta-neighborhoods of traced curves, shadings,
// distinctness and parallelism predicates, greedy multiscale covers, union
// volume by voxel rasterization, and the radial-dilation rescaling experiment.
#pragma once

#include <cstdint>
#include <string>

#include "cklab/straighten.hpp"

namespace cklab {

struct TubeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Union of disjoint sorted closed t-intervals.
struct Shading {
  std::vector<std::pair<double, double>> intervals;

  static Shading full(const PhaseSpec& phase);
  static Shading of(double lo, double hi) { return Shading{{{lo, hi}}}; }

  bool covers(double t) const;
  double total_length() const;
  void validate() const;  // disjoint, sorted, nonempty
};

struct Tube {
  CurveParam param;  // parameter of the central curve
  double delta = 0.0;
};

struct TubeMember {
  Tube tube;
  Shading shading;
};

struct TubeFamily {
  double delta = 0.0;
  PhaseSpec phase = PhaseSpec::rest(3);
  std::vector<TubeMember> members;
  std::string label;

  int n() const { return phase.n(); }
  int size() const { return static_cast<int>(members.size()); }
};

// Parameter distance at least delta (inclusive). Radii must agree.
bool essentially_distinct(const Tube& t1, const Tube& t2);
// Direction distance at most delta (inclusive). Radii must agree.
bool essentially_parallel(const Tube& t1, const Tube& t2);

struct CoverResult {
  TubeFamily parents;          // at scale rho, full shadings
  std::vector<int> parent_of;  // child index -> parent index
};

// Greedy cover in parameter space: each child's delta-ball is contained in
// its parent's rho-ball, i.e. d(child*, parent*) + delta <= rho.
CoverResult cover(const TubeFamily& family, double rho);

// Largest number of pairwise essentially parallel members, upper bound.
// Exact closed-neighborhood maximum for families of at most 4096 members;
// direction binning on a delta-grid (over-counts by at most 3^{n-1}) beyond.
int max_parallel_count(const TubeFamily& family);

// Sum of |Y(T)| computed analytically: interval length times the volume of
// the (n-1)-ball of radius delta.
double shading_mass(const TubeFamily& family);

// Rasterized volume of the union of shadings on a grid_res^n grid over the
// phase's space-time box. A voxel center (x, t) belongs to Y(T) when t lies
// in a shading interval and the slice distance |x - X(t)| is at most delta.
double union_volume(const TubeFamily& family, int grid_res);

struct ScaleCheck {
  double rho = 0.0;
  int cover_size = 0;
  int max_parallel = 0;
  double threshold = 0.0;
  bool ok = false;
};

struct SkReport {
  bool distinct_ok = false;              // (a)
  std::vector<ScaleCheck> scales;        // (b), one entry per ladder rho
  bool parallel_ok = false;
  double mass = 0.0, mass_threshold = 0.0;
  bool mass_ok = false;                  // (c)
  double union_vol = 0.0;
  double eps_hat = 0.0;

  bool pass() const { return distinct_ok && parallel_ok && mass_ok; }
};

// Dyadic scales from delta^{1/2} down to 2*delta.
std::vector<double> default_scale_ladder(double delta);

// Checks (a) pairwise essential distinctness, (b) greedy-cover parallel
// counts at most delta^{-eta} (times the 3^{n-1} binning allowance) at every
// ladder scale, (c) total shading mass at least delta^{eta}; reports the
// union volume and the empirical exponent log|union| / log delta.
// grid_res <= 0 selects 4/delta capped at 256.
SkReport sk_experiment(const TubeFamily& family, double eta,
                       std::vector<double> scale_ladder = {}, int grid_res = 0);

struct RescaleResult {
  TubeFamily straight;             // images as lines: phi_rest parameters
  double max_line_deviation = 0.0; // in image coordinates (already 1/rho scaled)
  double jacobian_ratio = 0.0;     // measured volume factor over rho^{-(n-1)}
};

// Applies h o F with h(x, t) = (x / rho, t) and F the straightening map at
// the parent's anchor. Children must lie within rho of the parent parameter.
// The Jacobian factor is measured by rasterizing the first child's image
// under h o F and under F alone and comparing the volumes.
RescaleResult rescale_within(const Tube& parent, const PhaseSpec& phase, const ABCData& abc,
                             const TubeFamily& children, int grid_res = 128);

enum class StickyMode { grid, cantor };

// grid: one tube per delta-grid direction over the frequency box, with v an
// affine seeded function of the direction (correlated so coarse covers stay
// low-multiplicity). cantor: directions on the depth-m middle-halves Cantor
// product (delta = 4^{-m}), 16 tubes per direction with v offset in steps of
// delta from a seeded digit-mapped image of the direction.
TubeFamily make_sticky_family(const PhaseSpec& phase, double delta, StickyMode mode,
                              std::uint64_t seed);

}  // namespace cklab
