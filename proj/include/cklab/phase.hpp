// Phase functions on M x Sigma with exact derivatives up to order 4.
// Built-ins are evaluated generically over nested duals, so every jet entry
// is an exact derivative of the closed form (no truncation error).
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cklab/dual.hpp"
#include "cklab/geometry.hpp"

namespace cklab {

enum class PhaseTag { Rest, BochnerRiesz, Worst, Tan, Poly, Transformed };

std::string to_string(PhaseTag tag);

// One monomial coeff * prod_i var_i^e_i over a fixed variable list.
struct PolyTerm {
  double coeff = 0.0;
  std::vector<int> exps;
};

// Polynomial map R^k -> R^k, one term list per component.
struct PolyMap {
  int dim = 0;
  std::vector<std::vector<PolyTerm>> components;

  static PolyMap identity(int dim);

  template <class T>
  std::vector<T> eval(std::span<const T> in) const {
    std::vector<T> out(dim, DualTraits<T>::constant(0.0));
    for (int c = 0; c < dim; ++c) {
      for (const auto& term : components[c]) {
        T m = DualTraits<T>::constant(term.coeff);
        for (int i = 0; i < dim; ++i)
          for (int e = 0; e < term.exps[i]; ++e) m = m * in[i];
        out[c] = out[c] + m;
      }
    }
    return out;
  }

  Mat jacobian(const Vec& p) const;
};

// Immutable description of a phase function. Variables are ordered
// (x_0..x_{n-2}, t, xi_0..xi_{n-2}); index T_INDEX(n) = n-1 is t.
class PhaseSpec {
 public:
  static PhaseSpec rest(int n);
  static PhaseSpec bochner_riesz(int n);
  static PhaseSpec worst();  // n = 3
  static PhaseSpec tan_phase(int n);
  static PhaseSpec poly(int n, std::vector<PolyTerm> terms, Box box_m, Box box_sigma,
                        Vec origin_m, Vec origin_sigma);
  // Composite phi~(x,xi) = phi(G(x), H(xi)); jets follow by the chain rule
  // through the generic dual evaluation.
  static PhaseSpec transformed(const PhaseSpec& base, PolyMap diffeo_x, PolyMap diffeo_xi,
                               int jacobian_samples = 64);

  int n() const { return n_; }
  int num_vars() const { return 2 * n_ - 1; }
  PhaseTag tag() const { return tag_; }
  const Box& box_m() const { return box_m_; }          // over (x, t) in R^n, t last
  const Box& box_sigma() const { return box_sigma_; }  // over xi in R^{n-1}
  const Vec& origin_m() const { return origin_m_; }    // (x, t)
  const Vec& origin_sigma() const { return origin_sigma_; }
  double origin_t() const { return origin_m_[n_ - 1]; }

  bool in_domain(const Vec& x, double t, const Vec& xi) const;
  void require_domain(const Vec& x, double t, const Vec& xi) const;

  template <class T>
  T eval(std::span<const T> x, const T& t, std::span<const T> xi) const;

  double value(const Vec& x, double t, const Vec& xi) const;

 private:
  friend struct PhaseSpecBuilder;
  PhaseSpec() = default;

  int n_ = 0;
  PhaseTag tag_ = PhaseTag::Rest;
  Box box_m_, box_sigma_;
  Vec origin_m_, origin_sigma_;
  std::vector<PolyTerm> poly_terms_;                  // Poly
  std::shared_ptr<const PhaseSpec> base_;             // Transformed
  PolyMap diffeo_x_, diffeo_xi_;                      // Transformed
};

// All mixed partials of phi at a point, up to a requested total order <= 4,
// stored once per sorted multi-index.
class Jet {
 public:
  Jet(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi, int order);

  int order() const { return order_; }
  int n() const { return n_; }
  const Vec& x() const { return x_; }
  double t() const { return t_; }
  const Vec& xi() const { return xi_; }

  // vars: variable indices into (x_0..x_{n-2}, t, xi_0..xi_{n-2}), any order.
  double partial(std::span<const int> vars) const;
  double partial(std::initializer_list<int> vars) const {
    return partial(std::span<const int>(vars.begin(), vars.size()));
  }

  double value() const { return partial({}); }
  int t_index() const { return n_ - 1; }
  int xi_index(int j) const { return n_ + j; }

  Vec grad_xi() const;                       // (n-1)
  Mat hess_xi() const;                       // (n-1) x (n-1)
  Mat mixed_x_xi() const;                    // n x (n-1): d/dx_a d/dxi_j, t row last

 private:
  static std::uint64_t key(std::span<const int> sorted_vars);

  int n_ = 0, order_ = 0;
  Vec x_, xi_;
  double t_ = 0.0;
  std::unordered_map<std::uint64_t, double> partials_;
};

Jet eval_jet(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi, int order);

// Single mixed partial (order = vars.size() <= 4) via nested duals; does not
// check domain membership.
double mixed_partial(const PhaseSpec& phase, const Vec& x, double t, const Vec& xi,
                     std::span<const int> vars);

// --- template definitions ---

template <class T>
T PhaseSpec::eval(std::span<const T> x, const T& t, std::span<const T> xi) const {
  const int m = n_ - 1;  // spatial / frequency dimension
  switch (tag_) {
    case PhaseTag::Rest: {
      T acc = DualTraits<T>::constant(0.0);
      for (int i = 0; i < m; ++i) acc = acc + x[i] * xi[i] + 0.5 * (t * (xi[i] * xi[i]));
      return acc;
    }
    case PhaseTag::BochnerRiesz: {
      T s = DualTraits<T>::constant(1.0);
      for (int i = 0; i < m; ++i) {
        T d = x[i] - t * xi[i];
        s = s + d * d;
      }
      return sqrt(s) / t;
    }
    case PhaseTag::Worst:
      return x[0] * xi[0] + x[1] * xi[1] + t * (xi[0] * xi[1]) + 0.5 * (t * t) * (xi[1] * xi[1]);
    case PhaseTag::Tan: {
      T acc = DualTraits<T>::constant(0.0);
      for (int i = 0; i + 1 < m; ++i) acc = acc + x[i] * xi[i] + 0.5 * (t * t) * (xi[i] * xi[i]);
      // log(sec(u)) = -log(cos(u))
      T u = t * xi[m - 1] + x[m - 1];
      return acc - log(cos(u));
    }
    case PhaseTag::Poly: {
      T acc = DualTraits<T>::constant(0.0);
      for (const auto& term : poly_terms_) {
        T mono = DualTraits<T>::constant(term.coeff);
        for (int i = 0; i < m; ++i)
          for (int e = 0; e < term.exps[i]; ++e) mono = mono * x[i];
        for (int e = 0; e < term.exps[m]; ++e) mono = mono * t;
        for (int i = 0; i < m; ++i)
          for (int e = 0; e < term.exps[m + 1 + i]; ++e) mono = mono * xi[i];
        acc = acc + mono;
      }
      return acc;
    }
    case PhaseTag::Transformed: {
      std::vector<T> xt(x.begin(), x.end());
      xt.push_back(t);
      std::vector<T> y = diffeo_x_.eval(std::span<const T>(xt));
      std::vector<T> eta = diffeo_xi_.eval(xi);
      return base_->eval(std::span<const T>(y.data(), m), y[m], std::span<const T>(eta));
    }
  }
  throw std::logic_error("PhaseSpec::eval: bad tag");
}

}  // namespace cklab
