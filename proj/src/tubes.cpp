#include "cklab/tubes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace cklab {

Shading Shading::full(const PhaseSpec& phase) {
  const int n = phase.n();
  return Shading{{{phase.box_m().lo[n - 1], phase.box_m().hi[n - 1]}}};
}

bool Shading::covers(double t) const {
  auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                             [](double v, const auto& iv) { return v < iv.first; });
  if (it == intervals.begin()) return false;
  --it;
  return t <= it->second;
}

double Shading::total_length() const {
  double len = 0.0;
  for (const auto& iv : intervals) len += iv.second - iv.first;
  return len;
}

void Shading::validate() const {
  for (size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].second < intervals[i].first)
      throw TubeError("shading: empty or reversed interval");
    if (i > 0 && intervals[i].first <= intervals[i - 1].second)
      throw TubeError("shading: overlapping or unsorted intervals");
  }
}

bool essentially_distinct(const Tube& t1, const Tube& t2) {
  if (t1.delta != t2.delta) throw TubeError("essentially_distinct: mismatched radii");
  return curve_metric(t1.param, t2.param) >= t1.delta;
}

bool essentially_parallel(const Tube& t1, const Tube& t2) {
  if (t1.delta != t2.delta) throw TubeError("essentially_parallel: mismatched radii");
  return (t1.param.xi - t2.param.xi).norm() <= t1.delta;
}

CoverResult cover(const TubeFamily& family, double rho) {
  if (rho < family.delta - 1e-15 || rho > 1.0 + 1e-15)
    throw std::invalid_argument("cover: need delta <= rho <= 1");
  CoverResult res;
  res.parents.delta = rho;
  res.parents.phase = family.phase;
  res.parents.label = family.label + "/cover";
  res.parent_of.assign(family.members.size(), -1);
  Shading full = Shading::full(family.phase);
  for (size_t i = 0; i < family.members.size(); ++i) {
    if (res.parent_of[i] >= 0) continue;
    const CurveParam& center = family.members[i].tube.param;
    const int pidx = res.parents.size();
    res.parents.members.push_back({Tube{center, rho}, full});
    for (size_t j = i; j < family.members.size(); ++j) {
      if (res.parent_of[j] >= 0) continue;
      if (curve_metric(family.members[j].tube.param, center) + family.delta <= rho + 1e-12)
        res.parent_of[j] = pidx;
    }
  }
  return res;
}

int max_parallel_count(const TubeFamily& family) {
  const int N = family.size();
  if (N == 0) return 0;
  if (N <= 4096) {
    // Closed-neighborhood maximum: an upper bound for the pairwise count.
    int best = 0;
    for (int i = 0; i < N; ++i) {
      int cnt = 0;
      for (int j = 0; j < N; ++j)
        if (essentially_parallel(family.members[i].tube, family.members[j].tube)) ++cnt;
      best = std::max(best, cnt);
    }
    return best;
  }
  const int m = family.n() - 1;
  std::map<std::vector<long>, int> bins;
  for (const auto& mem : family.members) {
    std::vector<long> key(m);
    for (int i = 0; i < m; ++i)
      key[i] = static_cast<long>(std::floor(mem.tube.param.xi[i] / family.delta));
    ++bins[key];
  }
  int best = 0;
  for (const auto& [key, _] : bins) {
    int total = 0;
    std::vector<long> nb(m, -1);
    for (;;) {
      std::vector<long> probe(m);
      for (int i = 0; i < m; ++i) probe[i] = key[i] + nb[i];
      auto it = bins.find(probe);
      if (it != bins.end()) total += it->second;
      int d = 0;
      while (d < m && nb[d] == 1) nb[d++] = -1;
      if (d == m) break;
      ++nb[d];
    }
    best = std::max(best, total);
  }
  return best;
}

double shading_mass(const TubeFamily& family) {
  const int m = family.n() - 1;
  const double cross = unit_ball_volume(m) * std::pow(family.delta, m);
  double mass = 0.0;
  for (const auto& mem : family.members) mass += mem.shading.total_length() * cross;
  return mass;
}

namespace {

// Central-curve positions of every member at the slab centers, by tracing on
// a coarse grid and interpolating linearly in t.
std::vector<std::vector<Vec>> slab_positions(const TubeFamily& family,
                                             const std::vector<double>& slab_t) {
  const PhaseSpec& phase = family.phase;
  const int n = phase.n();
  const double tlo = phase.box_m().lo[n - 1], thi = phase.box_m().hi[n - 1];
  const int cache_pts = 129;
  std::vector<double> tc(cache_pts);
  for (int i = 0; i < cache_pts; ++i) tc[i] = tlo + (thi - tlo) * i / (cache_pts - 1);
  std::vector<std::vector<Vec>> out(family.members.size());
  for (size_t k = 0; k < family.members.size(); ++k) {
    CurveSample cs = trace_curve(phase, family.members[k].tube.param.xi,
                                 family.members[k].tube.param.v, tc);
    out[k].reserve(slab_t.size());
    for (double t : slab_t) {
      double u = (t - tlo) / (thi - tlo) * (cache_pts - 1);
      int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, cache_pts - 2);
      double w = u - i0;
      out[k].push_back((1.0 - w) * cs.points[i0] + w * cs.points[i0 + 1]);
    }
  }
  return out;
}

}  // namespace

double union_volume(const TubeFamily& family, int grid_res) {
  if (grid_res < 2) throw std::invalid_argument("union_volume: grid_res too small");
  const PhaseSpec& phase = family.phase;
  const int n = phase.n(), m = n - 1;
  const Box& bm = phase.box_m();
  Vec ext = bm.extent();
  std::vector<double> h(n);
  double hmax = 0.0;
  for (int i = 0; i < n; ++i) {
    h[i] = ext[i] / grid_res;
    if (i < m) hmax = std::max(hmax, h[i]);
  }
  if (family.size() == 0) return 0.0;
  if (hmax > 2.0 * family.delta)
    throw TubeError("union_volume: grid too coarse for the tube radius");

  std::vector<double> slab_t(grid_res);
  for (int it = 0; it < grid_res; ++it) slab_t[it] = bm.lo[n - 1] + (it + 0.5) * h[n - 1];
  auto pos = slab_positions(family, slab_t);

  long cells = 1;
  for (int i = 0; i < m; ++i) cells *= grid_res;
  std::vector<int> stamp(cells, -1);
  const double delta = family.delta;
  long count = 0;
  std::vector<int> lo(m), hi(m), idx(m);
  for (int it = 0; it < grid_res; ++it) {
    const double t = slab_t[it];
    for (size_t k = 0; k < family.members.size(); ++k) {
      if (!family.members[k].shading.covers(t)) continue;
      const Vec& X = pos[k][it];
      bool empty = false;
      for (int i = 0; i < m; ++i) {
        lo[i] = std::max(0, static_cast<int>(std::floor((X[i] - delta - bm.lo[i]) / h[i] - 0.5)));
        hi[i] = std::min(grid_res - 1,
                         static_cast<int>(std::ceil((X[i] + delta - bm.lo[i]) / h[i] - 0.5)));
        if (lo[i] > hi[i]) empty = true;
      }
      if (empty) continue;
      idx = lo;
      for (;;) {
        double d2 = 0.0;
        long flat = 0;
        for (int i = 0; i < m; ++i) {
          double c = bm.lo[i] + (idx[i] + 0.5) * h[i];
          d2 += (c - X[i]) * (c - X[i]);
          flat = flat * grid_res + idx[i];
        }
        if (d2 <= delta * delta) {
          if (stamp[flat] != it) {
            stamp[flat] = it;
            ++count;
          }
        }
        int d = 0;
        while (d < m && idx[d] == hi[d]) idx[d] = lo[d], ++d;
        if (d == m) break;
        ++idx[d];
      }
    }
  }
  double voxvol = 1.0;
  for (int i = 0; i < n; ++i) voxvol *= h[i];
  return count * voxvol;
}

std::vector<double> default_scale_ladder(double delta) {
  std::vector<double> ladder;
  double rho = std::sqrt(delta);
  while (rho > 2.0 * delta - 1e-15) {
    ladder.push_back(rho);
    rho *= 0.5;
  }
  return ladder;
}

SkReport sk_experiment(const TubeFamily& family, double eta, std::vector<double> scale_ladder,
                       int grid_res) {
  const int m = family.n() - 1;
  if (scale_ladder.empty()) scale_ladder = default_scale_ladder(family.delta);
  if (grid_res <= 0)
    grid_res = std::min(256, static_cast<int>(std::lround(4.0 / family.delta)));

  SkReport rep;
  rep.distinct_ok = true;
  for (int i = 0; i < family.size() && rep.distinct_ok; ++i)
    for (int j = i + 1; j < family.size(); ++j)
      if (!essentially_distinct(family.members[i].tube, family.members[j].tube)) {
        rep.distinct_ok = false;
        break;
      }

  rep.parallel_ok = true;
  const double allowance = std::pow(3.0, m);  // binning over-count budget
  for (double rho : scale_ladder) {
    ScaleCheck sc;
    sc.rho = rho;
    CoverResult cov = cover(family, rho);
    sc.cover_size = cov.parents.size();
    sc.max_parallel = max_parallel_count(cov.parents);
    sc.threshold = allowance * std::pow(family.delta, -eta);
    sc.ok = sc.max_parallel <= sc.threshold;
    rep.parallel_ok = rep.parallel_ok && sc.ok;
    rep.scales.push_back(sc);
  }

  rep.mass = shading_mass(family);
  rep.mass_threshold = std::pow(family.delta, eta);
  rep.mass_ok = rep.mass >= rep.mass_threshold;

  rep.union_vol = union_volume(family, grid_res);
  rep.eps_hat = std::log(std::max(rep.union_vol, 1e-300)) / std::log(family.delta);
  return rep;
}

namespace {

// Spatial Jacobian K(t) of grad_xi phi along the anchor curve, so that
// F(x, t) = (K(t)(x - X(t)), ctilde(t)).
Mat anchor_jacobian(const StraighteningMap& msp, const PhaseSpec& phase, double t) {
  const int m = phase.n() - 1;
  Jet jet(phase, msp.anchor_x(t), t, msp.xi0(), 2);
  return jet.mixed_x_xi().topRows(m).transpose();
}

// Volume of the image of one tube under x |-> scale * K(t)(x - X(t)),
// t |-> ctilde(t), rasterized in image coordinates. The monotone height map
// is inverted by bisection per slab.
double raster_image_volume(const StraighteningMap& msp, const PhaseSpec& phase,
                           const TubeMember& mem, double delta, double scale, int grid_res) {
  const int n = phase.n(), m = n - 1;
  Box bm = phase.box_m();
  const double tlo = bm.lo[n - 1], thi = bm.hi[n - 1];

  // t-range of the shading, clipped to the box.
  double ta = std::max(tlo, mem.shading.intervals.front().first);
  double tb = std::min(thi, mem.shading.intervals.back().second);
  double sa = msp.ctilde(ta), sb = msp.ctilde(tb);
  const bool increasing = sb > sa;
  if (!increasing) std::swap(sa, sb);

  // Central curve cache and image bounding box.
  const int cache_pts = 129;
  std::vector<double> tc(cache_pts);
  for (int i = 0; i < cache_pts; ++i) tc[i] = ta + (tb - ta) * i / (cache_pts - 1);
  CurveSample cs = trace_curve(phase, mem.tube.param.xi, mem.tube.param.v, tc);
  Vec ylo = Vec::Constant(m, 1e300), yhi = Vec::Constant(m, -1e300);
  double knorm = 0.0;
  for (int i = 0; i < cache_pts; i += 8) {
    auto [y, s] = msp.apply(cs.points[i], tc[i]);
    ylo = ylo.cwiseMin(scale * y);
    yhi = yhi.cwiseMax(scale * y);
    knorm = std::max(knorm, anchor_jacobian(msp, phase, tc[i]).norm());
  }
  const double pad = 2.0 * scale * delta * std::max(knorm, 1.0);
  ylo.array() -= pad;
  yhi.array() += pad;

  std::vector<double> h(m);
  for (int i = 0; i < m; ++i) h[i] = (yhi[i] - ylo[i]) / grid_res;
  const double hs = (sb - sa) / grid_res;

  auto interp_center = [&](double t) {
    double u = (t - ta) / (tb - ta) * (cache_pts - 1);
    int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, cache_pts - 2);
    double w = u - i0;
    return ((1.0 - w) * cs.points[i0] + w * cs.points[i0 + 1]).eval();
  };

  long count = 0;
  std::vector<int> idx(m);
  for (int is = 0; is < grid_res; ++is) {
    const double s = sa + (is + 0.5) * hs;
    // Invert ctilde on [ta, tb].
    double a = ta, b = tb;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (a + b);
      if ((msp.ctilde(mid) < s) == increasing)
        a = mid;
      else
        b = mid;
    }
    const double t = 0.5 * (a + b);
    if (!mem.shading.covers(t)) continue;
    Mat kinv = anchor_jacobian(msp, phase, t).inverse();
    Vec ax = msp.anchor_x(t);
    Vec xc = interp_center(t);
    std::fill(idx.begin(), idx.end(), 0);
    Vec y(m);
    for (;;) {
      for (int i = 0; i < m; ++i) y[i] = (ylo[i] + (idx[i] + 0.5) * h[i]) / scale;
      if ((ax + kinv * y - xc).norm() <= delta) ++count;
      int d = 0;
      while (d < m && idx[d] == grid_res - 1) idx[d] = 0, ++d;
      if (d == m) break;
      ++idx[d];
    }
  }
  double voxvol = hs;
  for (int i = 0; i < m; ++i) voxvol *= h[i];
  return count * voxvol;
}

}  // namespace

RescaleResult rescale_within(const Tube& parent, const PhaseSpec& phase, const ABCData& abc,
                             const TubeFamily& children, int grid_res) {
  const double rho = parent.delta;
  const int n = phase.n(), m = n - 1;
  for (const auto& mem : children.members)
    if (curve_metric(mem.tube.param, parent.param) > rho + 1e-12)
      throw TubeError("rescale_within: child outside the parent ball");

  StraighteningMap msp = StraighteningMap::build(phase, abc, parent.param.xi, parent.param.v);

  Box bm = phase.box_m().shrunk(0.1);
  std::vector<double> tg(41);
  for (int i = 0; i < 41; ++i)
    tg[i] = bm.lo[n - 1] + (bm.hi[n - 1] - bm.lo[n - 1]) * i / 40.0;

  RescaleResult res;
  res.straight.delta = children.delta / rho;
  res.straight.phase = PhaseSpec::rest(n);
  res.straight.label = children.label + "/rescaled";

  for (const auto& mem : children.members) {
    Vec dir = msp.map_xi(mem.tube.param.xi) / rho;
    Vec off = msp.map_v(mem.tube.param.xi, mem.tube.param.v) / rho;
    CurveSample cs = trace_curve(phase, mem.tube.param.xi, mem.tube.param.v, tg);
    for (size_t i = 0; i < tg.size(); ++i) {
      auto [y, s] = msp.apply(cs.points[i], tg[i]);
      res.max_line_deviation =
          std::max(res.max_line_deviation, (y / rho - (off - s * dir)).norm());
    }
    Shading im;
    for (const auto& iv : mem.shading.intervals) {
      double a = msp.ctilde(iv.first), b = msp.ctilde(iv.second);
      im.intervals.push_back({std::min(a, b), std::max(a, b)});
    }
    std::sort(im.intervals.begin(), im.intervals.end());
    res.straight.members.push_back({Tube{{dir, off}, res.straight.delta}, im});
  }

  if (!children.members.empty()) {
    // Different resolutions so the two voxelizations are independent; equal
    // ones would make the ratio exact by construction instead of measured.
    const double vh = raster_image_volume(msp, phase, children.members.front(), children.delta,
                                          1.0 / rho, grid_res);
    const double vf = raster_image_volume(msp, phase, children.members.front(), children.delta,
                                          1.0, (3 * grid_res) / 4);
    res.jacobian_ratio = (vh / vf) * std::pow(rho, m);
  }
  return res;
}

TubeFamily make_sticky_family(const PhaseSpec& phase, double delta, StickyMode mode,
                              std::uint64_t seed) {
  const int n = phase.n(), m = n - 1;
  const double k = -std::log2(delta);
  if (delta <= 0.0 || delta > 0.5 || std::abs(k - std::lround(k)) > 1e-9)
    throw std::invalid_argument("make_sticky_family: delta must be a dyadic 2^-k");

  TubeFamily fam;
  fam.delta = delta;
  fam.phase = phase;
  Shading full = Shading::full(phase);
  const Box& bs = phase.box_sigma();
  Vec ext = bs.extent();
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0xd1b54a32d192ed03ULL);

  if (mode == StickyMode::grid) {
    fam.label = "grid";
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vec v0 = Vec::NullaryExpr(m, [&](int) { return 0.2 * u01(rng) - 0.1; });
    // Random rotation; v is an affine function of the direction so that
    // nearby directions carry nearby offsets (a Lipschitz graph).
    Mat g = Mat::NullaryExpr(m, m, [&](int, int) { return 2.0 * u01(rng) - 1.0; });
    Mat R = Eigen::HouseholderQR<Mat>(g).householderQ();
    Vec c = bs.center();
    std::vector<int> counts(m), idx(m, 0);
    for (int i = 0; i < m; ++i) counts[i] = static_cast<int>(std::floor(ext[i] / delta + 1e-9));
    for (;;) {
      Vec xi(m);
      for (int i = 0; i < m; ++i) xi[i] = bs.lo[i] + (idx[i] + 0.5) * delta;
      Vec v = v0 + 0.55 * (R * (xi - c));
      fam.members.push_back({Tube{{xi, v}, delta}, full});
      int d = 0;
      while (d < m && idx[d] == counts[d] - 1) idx[d] = 0, ++d;
      if (d == m) break;
      ++idx[d];
    }
  } else {
    fam.label = "cantor";
    const long kk = std::lround(k);
    if (kk % 2 != 0)
      throw std::invalid_argument("make_sticky_family: cantor mode needs delta = 4^-m");
    const int depth = static_cast<int>(kk / 2);
    const int per_axis = 1 << depth;
    // Seeded digit maps: one flip bit per axis and level, shared by the whole
    // family so the direction-to-offset rule is self-similar.
    std::vector<std::vector<int>> flip(m, std::vector<int>(depth));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < depth; ++j) flip[i][j] = static_cast<int>(rng() & 1);

    auto cantor_point = [&](int code, int axis, bool mapped) {
      double p = 0.0, w = 0.25;
      for (int j = 0; j < depth; ++j) {
        int a = (code >> (depth - 1 - j)) & 1;
        if (mapped) a ^= flip[axis][j];
        p += a * 3.0 * w;
        w *= 0.25;
      }
      return p;
    };

    const int multiplicity = 16;  // carries the shading mass of hypothesis (c)
    std::vector<int> code(m, 0);
    for (;;) {
      Vec xi(m), vb(m);
      for (int i = 0; i < m; ++i) {
        xi[i] = bs.lo[i] + cantor_point(code[i], i, false) * ext[i];
        vb[i] = (cantor_point(code[i], i, true) - 0.47) * 0.5;
      }
      for (int q = 0; q < multiplicity; ++q) {
        Vec v = vb;
        v[m - 1] += q * delta;
        fam.members.push_back({Tube{{xi, v}, delta}, full});
      }
      int d = 0;
      while (d < m && code[d] == per_axis - 1) code[d] = 0, ++d;
      if (d == m) break;
      ++code[d];
    }
  }
  return fam;
}

}  // namespace cklab
