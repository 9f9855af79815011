#include "cklab/phase.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cklab {

std::string to_string(PhaseTag tag) {
  switch (tag) {
    case PhaseTag::Rest: return "rest";
    case PhaseTag::BochnerRiesz: return "bochner_riesz";
    case PhaseTag::Worst: return "worst";
    case PhaseTag::Tan: return "tan";
    case PhaseTag::Poly: return "user";
    case PhaseTag::Transformed: return "transformed";
  }
  return "?";
}

PolyMap PolyMap::identity(int dim) {
  PolyMap m;
  m.dim = dim;
  m.components.resize(dim);
  for (int c = 0; c < dim; ++c) {
    PolyTerm t;
    t.coeff = 1.0;
    t.exps.assign(dim, 0);
    t.exps[c] = 1;
    m.components[c].push_back(std::move(t));
  }
  return m;
}

Mat PolyMap::jacobian(const Vec& p) const {
  Mat j(dim, dim);
  std::vector<Dual1> in(dim);
  for (int col = 0; col < dim; ++col) {
    for (int i = 0; i < dim; ++i) in[i] = Dual1{p[i], i == col ? 1.0 : 0.0};
    auto out = eval(std::span<const Dual1>(in));
    for (int row = 0; row < dim; ++row) j(row, col) = out[row].b;
  }
  return j;
}

struct PhaseSpecBuilder {
  static PhaseSpec build(int n, PhaseTag tag, Box bm, Box bs, Vec om, Vec os,
                         std::vector<PolyTerm> terms = {},
                         std::shared_ptr<const PhaseSpec> base = nullptr,
                         PolyMap dx = {}, PolyMap dxi = {});
};

PhaseSpec PhaseSpec::rest(int n) {
  if (n < 2) throw std::invalid_argument("rest: need n >= 2");
  Vec om = Vec::Zero(n), os = Vec::Zero(n - 1);
  return PhaseSpecBuilder::build(n, PhaseTag::Rest, Box::centered(om, 0.5),
                                 Box::centered(os, 0.5), om, os);
}

PhaseSpec PhaseSpec::worst() {
  const int n = 3;
  Vec om = Vec::Zero(n), os = Vec::Zero(n - 1);
  return PhaseSpecBuilder::build(n, PhaseTag::Worst, Box::centered(om, 0.5),
                                 Box::centered(os, 0.5), om, os);
}

PhaseSpec PhaseSpec::bochner_riesz(int n) {
  if (n < 2) throw std::invalid_argument("bochner_riesz: need n >= 2");
  Vec om = Vec::Zero(n), os = Vec::Zero(n - 1);
  om[n - 1] = 1.0;  // origin (x, t) = (0, 1)
  Box bm = Box::centered(Vec::Zero(n), 0.25);
  bm.lo[n - 1] = 0.9;
  bm.hi[n - 1] = 1.1;
  return PhaseSpecBuilder::build(n, PhaseTag::BochnerRiesz, bm, Box::centered(os, 0.25), om, os);
}

PhaseSpec PhaseSpec::tan_phase(int n) {
  if (n < 3) throw std::invalid_argument("tan: need n >= 3");
  Vec om = Vec::Zero(n), os = Vec::Zero(n - 1);
  om[n - 1] = 1.0;
  Box bm = Box::centered(Vec::Zero(n), 0.25);
  bm.lo[n - 1] = 0.9;
  bm.hi[n - 1] = 1.1;
  return PhaseSpecBuilder::build(n, PhaseTag::Tan, bm, Box::centered(os, 0.25), om, os);
}

PhaseSpec PhaseSpec::poly(int n, std::vector<PolyTerm> terms, Box box_m, Box box_sigma,
                          Vec origin_m, Vec origin_sigma) {
  for (const auto& t : terms)
    if (static_cast<int>(t.exps.size()) != 2 * n - 1)
      throw std::invalid_argument("poly: each term needs 2n-1 exponents");
  return PhaseSpecBuilder::build(n, PhaseTag::Poly, std::move(box_m), std::move(box_sigma),
                                 std::move(origin_m), std::move(origin_sigma), std::move(terms));
}

PhaseSpec PhaseSpec::transformed(const PhaseSpec& base, PolyMap diffeo_x, PolyMap diffeo_xi,
                                 int jacobian_samples) {
  const int n = base.n();
  if (diffeo_x.dim != n || diffeo_xi.dim != n - 1)
    throw std::invalid_argument("transformed: diffeo dimension mismatch");
  // Transformed domain: shrink the base boxes so near-identity maps stay inside.
  Box bm = base.box_m().shrunk(0.2), bs = base.box_sigma().shrunk(0.2);
  Halton h(2 * n - 1, 0);
  for (int s = 0; s < jacobian_samples; ++s) {
    Vec u = h.next();
    Vec pm = bm.map01(u.head(n)), ps = bs.map01(u.tail(n - 1));
    if (std::abs(diffeo_x.jacobian(pm).determinant()) < 1e-6 ||
        std::abs(diffeo_xi.jacobian(ps).determinant()) < 1e-6)
      throw DegeneratePhaseError("transformed: map is not a diffeomorphism on the domain");
  }
  // Origins: preimages are not solved for; the composite keeps the base
  // origin coordinates (the maps used here are near-identity perturbations).
  auto base_copy = std::make_shared<PhaseSpec>(base);
  return PhaseSpecBuilder::build(n, PhaseTag::Transformed, bm, bs, base.origin_m(),
                                 base.origin_sigma(), {}, base_copy, std::move(diffeo_x),
                                 std::move(diffeo_xi));
}

PhaseSpec PhaseSpecBuilder::build(int n, PhaseTag tag, Box bm, Box bs, Vec om, Vec os,
                                  std::vector<PolyTerm> terms,
                                  std::shared_ptr<const PhaseSpec> base, PolyMap dx, PolyMap dxi) {
  PhaseSpec p;
  p.n_ = n;
  p.tag_ = tag;
  p.box_m_ = std::move(bm);
  p.box_sigma_ = std::move(bs);
  p.origin_m_ = std::move(om);
  p.origin_sigma_ = std::move(os);
  p.poly_terms_ = std::move(terms);
  p.base_ = std::move(base);
  p.diffeo_x_ = std::move(dx);
  p.diffeo_xi_ = std::move(dxi);
  return p;
}

bool PhaseSpec::in_domain(const Vec& x, double t, const Vec& xi) const {
  Vec m(n_);
  m.head(n_ - 1) = x;
  m[n_ - 1] = t;
  return box_m_.contains(m) && box_sigma_.contains(xi);
}

void PhaseSpec::require_domain(const Vec& x, double t, const Vec& xi) const {
  if (!in_domain(x, t, xi)) throw DomainError("point outside phase domain");
}

double PhaseSpec::value(const Vec& x, double t, const Vec& xi) const {
  std::vector<double> xs(x.data(), x.data() + x.size());
  std::vector<double> xis(xi.data(), xi.data() + xi.size());
  return eval(std::span<const double>(xs), t, std::span<const double>(xis));
}

namespace {

template <class T>
double seeded_eval(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi,
                   std::span<const int> dirs) {
  const int m = phase.n() - 1;
  std::vector<T> xs(m), xis(m);
  for (int i = 0; i < m; ++i) xs[i] = DualSeed<T>::make(x[i], dirs, i);
  T ts = DualSeed<T>::make(t, dirs, m);
  for (int i = 0; i < m; ++i) xis[i] = DualSeed<T>::make(xi[i], dirs, m + 1 + i);
  T r = phase.eval(std::span<const T>(xs), ts, std::span<const T>(xis));
  return DualExtract<T>::top(r);
}

}  // namespace

double mixed_partial(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi,
                     std::span<const int> vars) {
  switch (vars.size()) {
    case 0: return seeded_eval<double>(phase, x, t, xi, vars);
    case 1: return seeded_eval<Dual1>(phase, x, t, xi, vars);
    case 2: return seeded_eval<Dual2>(phase, x, t, xi, vars);
    case 3: return seeded_eval<Dual3>(phase, x, t, xi, vars);
    case 4: return seeded_eval<Dual4>(phase, x, t, xi, vars);
    default: throw std::invalid_argument("mixed_partial: order > 4 unsupported");
  }
}

std::uint64_t Jet::key(std::span<const int> sorted_vars) {
  std::uint64_t k = 0;
  for (int v : sorted_vars) k = (k << 8) | static_cast<std::uint64_t>(v + 1);
  return k;
}

Jet::Jet(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi, int order)
    : n_(phase.n()), order_(order), x_(x), xi_(xi), t_(t) {
  if (order < 0 || order > 4) throw std::invalid_argument("Jet: order must be in [0, 4]");
  const int m = phase.num_vars();
  // Enumerate sorted multi-indices (non-decreasing var lists) of size <= order.
  std::vector<int> idx;
  auto recurse = [&](auto&& self, int start) -> void {
    partials_[key(idx)] = mixed_partial(phase, x, t, xi, idx);
    if (static_cast<int>(idx.size()) == order_) return;
    for (int v = start; v < m; ++v) {
      idx.push_back(v);
      self(self, v);
      idx.pop_back();
    }
  };
  recurse(recurse, 0);
}

double Jet::partial(std::span<const int> vars) const {
  if (static_cast<int>(vars.size()) > order_)
    throw std::invalid_argument("Jet::partial: order exceeds jet order");
  std::array<int, 4> buf{};
  std::copy(vars.begin(), vars.end(), buf.begin());
  std::sort(buf.begin(), buf.begin() + vars.size());
  auto it = partials_.find(key(std::span<const int>(buf.data(), vars.size())));
  if (it == partials_.end()) throw std::logic_error("Jet::partial: missing entry");
  return it->second;
}

Vec Jet::grad_xi() const {
  Vec g(n_ - 1);
  for (int j = 0; j < n_ - 1; ++j) g[j] = partial({xi_index(j)});
  return g;
}

Mat Jet::hess_xi() const {
  Mat h(n_ - 1, n_ - 1);
  for (int i = 0; i < n_ - 1; ++i)
    for (int j = 0; j < n_ - 1; ++j) h(i, j) = partial({xi_index(i), xi_index(j)});
  return h;
}

Mat Jet::mixed_x_xi() const {
  Mat m(n_, n_ - 1);
  for (int a = 0; a < n_; ++a)
    for (int j = 0; j < n_ - 1; ++j) m(a, j) = partial({a, xi_index(j)});
  return m;
}

Jet eval_jet(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi, int order) {
  phase.require_domain(x, t, xi);
  if (order > 4) throw std::invalid_argument("eval_jet: order > 4 unsupported");
  return Jet(phase, x, t, xi, order);
}

}  // namespace cklab
