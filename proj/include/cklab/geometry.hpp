// Axis-aligned boxes, the generalized cross product, and low-discrepancy
// sampling helpers shared across modules.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cklab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegeneratePhaseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Box {
  Vec lo, hi;

  Box() = default;
  Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {}
  static Box centered(const Vec& center, double half_width) {
    return Box(center.array() - half_width, center.array() + half_width);
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& p, double slack = 1e-12) const {
    for (int i = 0; i < dim(); ++i)
      if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
  }

  // Box shrunk toward its center by the given relative margin per side.
  Box shrunk(double margin) const {
    Vec c = 0.5 * (lo + hi), h = 0.5 * (hi - lo) * (1.0 - margin);
    return Box(c - h, c + h);
  }

  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }

  Vec map01(const Vec& u) const {  // unit cube -> box
    return lo.array() + u.array() * (hi - lo).array();
  }
};

// Wedge product of the n-1 columns of an n x (n-1) matrix, by cofactor
// expansion: component i is (-1)^(n-1-i) times the minor with row i removed
// (0-based rows). Orthogonal to every column; the orientation makes the last
// component +det of the top (n-1) x (n-1) block, so identity columns give
// (0, ..., 0, 1) in every dimension.
inline Vec wedge(const Mat& cols) {
  const int n = static_cast<int>(cols.rows());
  if (cols.cols() != n - 1) throw std::invalid_argument("wedge: need n x (n-1) matrix");
  Vec g(n);
  Mat minor(n - 1, n - 1);
  for (int i = 0; i < n; ++i) {
    int r = 0;
    for (int row = 0; row < n; ++row) {
      if (row == i) continue;
      minor.row(r++) = cols.row(row);
    }
    double det = (n == 2) ? minor(0, 0) : minor.determinant();
    g[i] = ((n - 1 - i) % 2 == 0) ? det : -det;
  }
  return g;
}

// Halton sequence (bases 2,3,5,...) with a seeded per-dimension rotation.
// Index 0 with seed-rotation disabled is reserved by callers for pinning.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed);
  Vec next();  // point in [0,1)^dim

 private:
  std::vector<int> bases_;
  Vec shift_;
  std::uint64_t index_ = 0;
};

// Least-squares slope/intercept of y against x, plus r^2 of the fit.
struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double unit_ball_volume(int dim);

}  // namespace cklab
