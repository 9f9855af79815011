#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cklab/tubes.hpp"

using namespace cklab;

namespace {

Tube tube_at(double xi1, double xi2, double v1, double v2, double delta) {
  Vec xi(2), v(2);
  xi << xi1, xi2;
  v << v1, v2;
  return Tube{{xi, v}, delta};
}

TubeFamily family_of(const PhaseSpec& phase, double delta, const std::vector<Tube>& tubes) {
  TubeFamily fam;
  fam.delta = delta;
  fam.phase = phase;
  Shading full = Shading::full(phase);
  for (const auto& t : tubes) fam.members.push_back({t, full});
  return fam;
}

}  // namespace

TEST_CASE("distinctness and parallelism predicates") {
  const double d = 1.0 / 32.0;
  Tube a = tube_at(0, 0, 0, 0, d);
  CHECK_FALSE(essentially_distinct(a, a));
  CHECK(essentially_distinct(a, tube_at(2 * d, 0, 0, 0, d)));
  CHECK(essentially_distinct(a, tube_at(d, 0, 0, 0, d)));  // boundary inclusive
  CHECK(essentially_distinct(a, tube_at(0, 0, d, 0, d)));

  CHECK(essentially_parallel(a, tube_at(0, 0, 0.3, -0.1, d)));
  CHECK_FALSE(essentially_parallel(a, tube_at(2 * d, 0, 0, 0, d)));
  CHECK(essentially_parallel(a, tube_at(d, 0, 0, 0, d)));  // boundary inclusive

  CHECK_THROWS_AS((void)essentially_distinct(a, tube_at(0, 0, 0, 0, d / 2)), TubeError);
  CHECK_THROWS_AS((void)essentially_parallel(a, tube_at(0, 0, 0, 0, d / 2)), TubeError);
}

TEST_CASE("greedy cover basics and soundness") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 64.0;

  // One tube, any scale.
  TubeFamily one = family_of(rest, d, {tube_at(0.1, 0, 0, 0, d)});
  CHECK(cover(one, 0.25).parents.size() == 1);

  // At rho = delta only exact duplicates merge.
  std::vector<Tube> sep;
  for (int i = 0; i < 5; ++i) sep.push_back(tube_at(i * 2 * d, 0, 0, 0, d));
  TubeFamily fam = family_of(rest, d, sep);
  CHECK(cover(fam, d).parents.size() == 5);

  // Parameters inside a ball of radius (rho - delta)/2 around a point: every
  // member ball fits in the first ball, one parent.
  const double rho = 0.25;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Tube> clustered;
  for (int i = 0; i < 100; ++i) {
    Vec g(4);
    for (int j = 0; j < 4; ++j) g[j] = u(rng);
    g *= 0.5 * (rho - d) / (std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]) + std::abs(g[3]) + 1.0);
    clustered.push_back(tube_at(0.1 + g[0], g[1], g[2], g[3], d));
  }
  TubeFamily cf = family_of(rest, d, clustered);
  CoverResult cov = cover(cf, rho);
  CHECK(cov.parents.size() == 1);

  // Soundness: assigned parent ball contains the child's delta-ball.
  for (size_t i = 0; i < cf.members.size(); ++i) {
    int p = cov.parent_of[i];
    CHECK(p >= 0);
    CHECK(curve_metric(cf.members[i].tube.param, cov.parents.members[p].tube.param) + d <=
          rho + 1e-9);
  }

  CHECK_THROWS_AS(cover(fam, d / 2), std::invalid_argument);
}

TEST_CASE("cover near-minimality against brute force on small families") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 64.0, rho = 1.0 / 8.0;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  std::vector<Tube> tubes;
  for (int i = 0; i < 60; ++i) tubes.push_back(tube_at(u(rng), u(rng), u(rng), u(rng), d));
  TubeFamily fam = family_of(rest, d, tubes);
  const int greedy = cover(fam, rho).parents.size();

  // Brute-force baseline: best over many random greedy orders.
  int best = greedy;
  std::vector<int> order(tubes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> covered(tubes.size(), false);
    int cnt = 0;
    for (int i : order) {
      if (covered[i]) continue;
      ++cnt;
      for (size_t j = 0; j < tubes.size(); ++j)
        if (!covered[j] && curve_metric(tubes[j].param, tubes[i].param) + d <= rho)
          covered[j] = true;
    }
    best = std::min(best, cnt);
  }
  CHECK(greedy <= 625 * best);  // 5^{2(n-1)} doubling bound
}

TEST_CASE("parallel count, brute force and binning") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 32.0;

  CHECK(max_parallel_count(family_of(rest, d, {})) == 0);

  // All members share the direction.
  std::vector<Tube> same;
  for (int i = 0; i < 7; ++i) same.push_back(tube_at(0.1, -0.1, 0.05 * i, 0, d));
  CHECK(max_parallel_count(family_of(rest, d, same)) == 7);

  // Directions on a 2 delta grid: nobody is parallel to anyone else.
  std::vector<Tube> grid;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) grid.push_back(tube_at(2 * d * i, 2 * d * j, 0, 0, d));
  CHECK(max_parallel_count(family_of(rest, d, grid)) == 1);

  // Binning path (> 2000 members) stays within its 3^{n-1} over-count bound.
  const double fine = 1.0 / 128.0;
  std::vector<Tube> big;
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j)
      big.push_back(tube_at(-0.4 + 2 * fine * i, -0.4 + 2 * fine * j, 0, 0, fine));
  CHECK(big.size() > 2000);
  CHECK(max_parallel_count(family_of(rest, fine, big)) <= 9);
}

TEST_CASE("rasterized volume of a single straight cylinder") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 64.0;
  TubeFamily fam = family_of(rest, d, {tube_at(0, 0, 0, 0, d)});
  const double analytic = unit_ball_volume(2) * d * d * 1.0;
  const double measured = union_volume(fam, 256);
  CHECK(std::abs(measured - analytic) / analytic <= 0.2);

  // Empty shading.
  fam.members[0].shading.intervals.clear();
  CHECK(union_volume(fam, 256) == 0.0);

  // Too coarse a grid for the radius.
  TubeFamily thin = family_of(rest, 1.0 / 256.0, {tube_at(0, 0, 0, 0, 1.0 / 256.0)});
  CHECK_THROWS_AS(union_volume(thin, 64), TubeError);
}

TEST_CASE("volume is additive for disjoint tubes and subadditive always") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 16.0;
  Tube t1 = tube_at(0, 0, -0.25, -0.25, d);
  Tube t2 = tube_at(0, 0, 0.25, 0.25, d);
  double v1 = union_volume(family_of(rest, d, {t1}), 96);
  double v2 = union_volume(family_of(rest, d, {t2}), 96);
  double both = union_volume(family_of(rest, d, {t1, t2}), 96);
  CHECK(std::abs(both - (v1 + v2)) <= 0.01 * (v1 + v2));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Tube> tubes;
    for (int i = 0; i < 6; ++i) tubes.push_back(tube_at(u(rng), u(rng), u(rng), u(rng), d));
    TubeFamily fam = family_of(rest, d, tubes);
    double total = 0.0;
    for (const auto& t : tubes) total += union_volume(family_of(rest, d, {t}), 64);
    CHECK(union_volume(fam, 64) <= total + 1e-12);
  }
}

TEST_CASE("volume converges under grid refinement") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 32.0;
  TubeFamily fam = make_sticky_family(rest, d, StickyMode::grid, 5);
  double a = union_volume(fam, 128), b = union_volume(fam, 256);
  CHECK(std::abs(a - b) <= 0.1 * b);
}

TEST_CASE("sticky family generation") {
  PhaseSpec rest = PhaseSpec::rest(3);

  TubeFamily grid = make_sticky_family(rest, 1.0 / 32.0, StickyMode::grid, 9);
  CHECK(grid.size() == 1024);
  TubeFamily again = make_sticky_family(rest, 1.0 / 32.0, StickyMode::grid, 9);
  for (int i = 0; i < grid.size(); ++i) {
    CHECK(grid.members[i].tube.param.xi == again.members[i].tube.param.xi);
    CHECK(grid.members[i].tube.param.v == again.members[i].tube.param.v);
  }

  TubeFamily cantor = make_sticky_family(rest, 1.0 / 64.0, StickyMode::cantor, 9);
  CHECK(cantor.size() == 64 * 16);
  for (int i = 0; i < 40; ++i)
    for (int j = i + 1; j < 40; ++j)
      CHECK(essentially_distinct(cantor.members[i].tube, cantor.members[j].tube));

  CHECK_THROWS_AS(make_sticky_family(rest, 1.0 / 32.0, StickyMode::cantor, 9),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_sticky_family(rest, 0.3, StickyMode::grid, 9), std::invalid_argument);
}

TEST_CASE("hypothesis checks on generated families") {
  PhaseSpec rest = PhaseSpec::rest(3);

  TubeFamily grid = make_sticky_family(rest, 1.0 / 64.0, StickyMode::grid, 2);
  SkReport g = sk_experiment(grid, 0.2);
  CHECK(g.distinct_ok);
  CHECK(g.parallel_ok);
  CHECK(g.mass_ok);
  CHECK(g.pass());
  CHECK(g.eps_hat <= 0.5);
  CHECK(g.union_vol > 0.0);

  TubeFamily cantor = make_sticky_family(rest, 1.0 / 64.0, StickyMode::cantor, 2);
  SkReport c = sk_experiment(cantor, 0.1);
  CHECK(c.distinct_ok);
  CHECK(c.parallel_ok);
  CHECK(c.mass_ok);
}

TEST_CASE("hypothesis failures are detected") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 64.0;

  // Duplicate member trips (a).
  TubeFamily dup = family_of(rest, d, {tube_at(0.1, 0, 0, 0, d), tube_at(0.1, 0, 0, 0, d)});
  CHECK_FALSE(sk_experiment(dup, 0.2).distinct_ok);

  // One direction, offsets spread across the box: some ladder scale needs too
  // many pairwise parallel parents.
  std::vector<Tube> par;
  for (int i = 0; i < 100; ++i) par.push_back(tube_at(0, 0, -0.5 + i * d, 0, d));
  SkReport p = sk_experiment(family_of(rest, d, par), 0.2);
  CHECK(p.distinct_ok);
  CHECK_FALSE(p.parallel_ok);
}

TEST_CASE("single tube exponent approaches the cross-section dimension") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double d = 1.0 / 64.0;
  SkReport r = sk_experiment(family_of(rest, d, {tube_at(0, 0, 0, 0, d)}), 0.2);
  CHECK(r.eps_hat >= 1.5);
  CHECK(r.eps_hat <= 2.0);
}

TEST_CASE("rescaling a straight parent is exact") {
  PhaseSpec rest = PhaseSpec::rest(3);
  const double rho = 1.0 / 8.0, d = 1.0 / 32.0;
  Tube parent = tube_at(0, 0, 0, 0, rho);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Tube> kids;
  for (int i = 0; i < 4; ++i) {
    Vec g(4);
    for (int j = 0; j < 4; ++j) g[j] = u(rng);
    g *= 0.4 * rho / g.cwiseAbs().sum();
    kids.push_back(tube_at(g[0], g[1], g[2], g[3], d));
  }
  TubeFamily children = family_of(rest, d, kids);
  RescaleResult r = rescale_within(parent, rest, canonical_abc(rest), children, 96);
  CHECK(r.max_line_deviation <= 1e-10);
  CHECK(std::abs(r.jacobian_ratio - 1.0) <= 0.05);
  CHECK(r.straight.delta == doctest::Approx(d / rho).epsilon(1e-12));

  // Images of delta-offset boundary points sit at distance delta/rho from the
  // image line: the flat map rescales radii exactly.
  StraighteningMap m = StraighteningMap::build(rest, canonical_abc(rest), Vec::Zero(2), Vec::Zero(2));
  const auto& mem = children.members[0];
  Vec dirv = r.straight.members[0].tube.param.xi;
  Vec off = r.straight.members[0].tube.param.v;
  for (double t : {-0.3, 0.0, 0.3}) {
    Vec x = mem.tube.param.v - t * mem.tube.param.xi;
    x[0] += d;
    auto [y, s] = m.apply(x, t);
    double radius = (y / rho - (off - s * dirv)).norm();
    CHECK(std::abs(radius - d / rho) <= 0.1 * d / rho);
  }
}

TEST_CASE("rescaling the log-secant phase: linear deviation and Jacobian factor") {
  PhaseSpec tanp = PhaseSpec::tan_phase(3);
  ABCData abc = canonical_abc(tanp);
  Vec v0(2);
  v0 << 0.0, 0.2;

  std::vector<double> devs;
  for (int k = 3; k <= 5; ++k) {
    const double rho = std::pow(2.0, -k);
    Tube parent{{Vec::Zero(2), v0}, rho};
    std::mt19937_64 rng(21);  // same directions at every scale
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Tube> kids;
    for (int i = 0; i < 5; ++i) {
      Vec g(4);
      for (int j = 0; j < 4; ++j) g[j] = u(rng);
      g *= 0.8 * rho / g.cwiseAbs().sum();
      Vec xi = g.head(2), v = v0 + g.tail(2);
      kids.push_back(Tube{{xi, v}, rho * rho});
    }
    TubeFamily children;
    children.delta = rho * rho;
    children.phase = tanp;
    Shading full = Shading::full(tanp);
    for (const auto& t : kids) children.members.push_back({t, full});
    RescaleResult r = rescale_within(parent, tanp, abc, children, 96);
    devs.push_back(r.max_line_deviation / rho);
    if (k == 4) CHECK(std::abs(r.jacobian_ratio - 1.0) <= 0.15);
  }
  const double lo = *std::min_element(devs.begin(), devs.end());
  const double hi = *std::max_element(devs.begin(), devs.end());
  CHECK(hi / lo <= 2.0);

  // Direction separation survives the map up to a bounded factor.
  const double rho = 1.0 / 16.0, d = 1.0 / 256.0;
  Tube parent{{Vec::Zero(2), v0}, rho};
  Vec xi1 = Vec::Zero(2), xi2(2);
  xi2 << d, 0.0;
  TubeFamily pair;
  pair.delta = d;
  pair.phase = tanp;
  pair.members.push_back({Tube{{xi1, v0}, d}, Shading::full(tanp)});
  pair.members.push_back({Tube{{xi2, v0}, d}, Shading::full(tanp)});
  RescaleResult r = rescale_within(parent, tanp, abc, pair, 48);
  double sep = (r.straight.members[0].tube.param.xi - r.straight.members[1].tube.param.xi).norm();
  CHECK(sep / (d / rho) >= 0.1);
  CHECK(sep / (d / rho) <= 10.0);

  // Containment is enforced.
  TubeFamily far = pair;
  far.members[0].tube.param.v[0] += 10.0 * rho;
  CHECK_THROWS_AS(rescale_within(parent, tanp, abc, far, 48), TubeError);
}
