#include "cklab/geometry.hpp"

#include <cmath>
#include <random>

namespace cklab {

namespace {
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}
}  // namespace

Halton::Halton(int dim, std::uint64_t seed) : shift_(dim) {
  if (dim > static_cast<int>(std::size(kPrimes)))
    throw std::invalid_argument("Halton: dimension too large");
  bases_.assign(kPrimes, kPrimes + dim);
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int d = 0; d < dim; ++d) shift_[d] = (seed == 0) ? 0.0 : u(rng);
  index_ = 0;
}

Vec Halton::next() {
  Vec p(static_cast<int>(bases_.size()));
  ++index_;  // skip index 0 (all zeros)
  for (size_t d = 0; d < bases_.size(); ++d) {
    double v = radical_inverse(index_, bases_[d]) + shift_[static_cast<int>(d)];
    p[static_cast<int>(d)] = v - std::floor(v);
  }
  return p;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LineFit f;
  const double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  const double sstot = syy - sy * sy / n;
  double ssres = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ssres += e * e;
  }
  f.r2 = (sstot > 0) ? 1.0 - ssres / sstot : 1.0;
  return f;
}

double unit_ball_volume(int dim) {
  return std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

}  // namespace cklab
