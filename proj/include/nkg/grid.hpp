#pragma once

// One-dimensional lattices carrying quadrature weights. A radial grid
// represents radial functions on R^N (for N = 1, even functions on the line
// folded onto r >= 0); a line grid represents functions on an interval of R
// with periodic or open ends.
//
// Discretization: node weights w_i are the measures of the dual cells around
// each node, and every edge e = (i, i+1) carries a coefficient c_e such that
// sum_e c_e |u_{i+1} - u_i|^2 approximates the integral of |grad u|^2. The
// Laplacian is the matching weighted graph Laplacian, so that
// d/du_i [ (1/2) sum_e c_e |du|^2 ] = -w_i (Lap u)_i holds exactly.

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nkg/errors.hpp"

namespace nkg {

enum class GridKind { radial, line_periodic, line_open };

/// Surface area of the unit sphere S^{N-1} (2 for N = 1).
inline double unit_sphere_area(int N) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

/// Volume of the N-ball of radius r.
inline double ball_volume(int N, double r) { return unit_sphere_area(N) / N * std::pow(r, N); }

class Grid {
 public:
  /// Uniform radial grid with nodes 0, h, ..., r_max.
  static Grid radial(int N, double r_max, std::size_t nodes) {
    if (N < 1 || N > 10) throw ArgumentError("radial grid: dimension must be in [1, 10]");
    if (!(r_max > 0.0)) throw ArgumentError("radial grid: r_max must be positive");
    if (nodes < 3) throw ArgumentError("radial grid: need at least 3 nodes");
    Grid g;
    g.kind_ = GridKind::radial;
    g.dim_ = N;
    g.h_ = r_max / static_cast<double>(nodes - 1);
    g.extent_ = r_max;
    g.x_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) g.x_[i] = g.h_ * static_cast<double>(i);
    g.x_.back() = r_max;
    const double area = unit_sphere_area(N);
    g.w_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double a = std::max(0.0, g.x_[i] - 0.5 * g.h_);
      const double b = std::min(r_max, g.x_[i] + 0.5 * g.h_);
      g.w_[i] = area / N * (std::pow(b, N) - std::pow(a, N));
    }
    g.c_.resize(nodes - 1);
    for (std::size_t e = 0; e + 1 < nodes; ++e) {
      const double mid = 0.5 * (g.x_[e] + g.x_[e + 1]);
      g.c_[e] = area * std::pow(mid, N - 1) / g.h_;
    }
    return g;
  }

  /// Uniform line grid on [-half_width, half_width]. Periodic grids omit the
  /// right endpoint (identified with the left one).
  static Grid line(double half_width, std::size_t nodes, bool periodic) {
    if (!(half_width > 0.0)) throw ArgumentError("line grid: half width must be positive");
    if (nodes < 4) throw ArgumentError("line grid: need at least 4 nodes");
    Grid g;
    g.kind_ = periodic ? GridKind::line_periodic : GridKind::line_open;
    g.dim_ = 1;
    g.extent_ = half_width;
    g.h_ = 2.0 * half_width / static_cast<double>(periodic ? nodes : nodes - 1);
    g.x_.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) g.x_[i] = -half_width + g.h_ * static_cast<double>(i);
    g.w_.assign(nodes, g.h_);
    if (!periodic) {
      g.x_.back() = half_width;
      g.w_.front() = g.w_.back() = 0.5 * g.h_;
    }
    g.c_.assign(periodic ? nodes : nodes - 1, 1.0 / g.h_);
    return g;
  }

  GridKind kind() const { return kind_; }
  bool is_radial() const { return kind_ == GridKind::radial; }
  bool is_periodic() const { return kind_ == GridKind::line_periodic; }
  int dimension() const { return dim_; }
  std::size_t size() const { return x_.size(); }
  double spacing() const { return h_; }
  /// r_max for radial grids, the half width for line grids.
  double extent() const { return extent_; }

  std::span<const double> nodes() const { return x_; }
  std::span<const double> weights() const { return w_; }
  double node(std::size_t i) const { return x_[i]; }
  double weight(std::size_t i) const { return w_[i]; }

  std::size_t edge_count() const { return c_.size(); }
  double edge_coefficient(std::size_t e) const { return c_[e]; }
  std::size_t edge_head(std::size_t e) const { return e + 1 == x_.size() ? 0 : e + 1; }

  /// Quadrature sum_i w_i f_i.
  double integrate(std::span<const double> f) const {
    check_size(f.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += w_[i] * f[i];
    return acc;
  }

  /// sum_i w_i |f_i|^2.
  template <class T>
  double norm2(std::span<const T> f) const {
    check_size(f.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += w_[i] * std::norm(f[i]);
    return acc;
  }

  /// Discrete integral of |grad f|^2.
  template <class T>
  double gradient_norm2(std::span<const T> f) const {
    check_size(f.size());
    double acc = 0.0;
    for (std::size_t e = 0; e < c_.size(); ++e) acc += c_[e] * std::norm(f[edge_head(e)] - f[e]);
    return acc;
  }

  /// out_i = (Lap f)_i. Open ends and the radial origin carry natural
  /// (zero-flux) boundary conditions.
  template <class T>
  void laplacian(std::span<const T> f, std::span<T> out) const {
    check_size(f.size());
    check_size(out.size());
    for (auto& v : out) v = T{};
    for (std::size_t e = 0; e < c_.size(); ++e) {
      const std::size_t j = edge_head(e);
      const T flux = c_[e] * (f[j] - f[e]);
      out[e] += flux;
      out[j] -= flux;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= w_[i];
  }

  template <class T>
  std::vector<T> laplacian(std::span<const T> f) const {
    std::vector<T> out(f.size());
    laplacian<T>(f, out);
    return out;
  }

  /// Central-difference derivative along a line grid (one-sided at open ends).
  template <class T>
  std::vector<T> derivative(std::span<const T> f) const {
    check_size(f.size());
    const std::size_t n = f.size();
    std::vector<T> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (is_periodic()) {
        d[i] = (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * h_);
      } else if (i == 0) {
        d[i] = is_radial() ? T{} : (f[1] - f[0]) / h_;
      } else if (i + 1 == n) {
        d[i] = (f[n - 1] - f[n - 2]) / h_;
      } else {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h_);
      }
    }
    return d;
  }

  bool same_layout(const Grid& o) const {
    return kind_ == o.kind_ && dim_ == o.dim_ && x_.size() == o.x_.size() && h_ == o.h_ && extent_ == o.extent_;
  }

  std::string describe() const {
    std::string s;
    switch (kind_) {
      case GridKind::radial: s = "radial N=" + std::to_string(dim_) + " r_max="; break;
      case GridKind::line_periodic: s = "periodic line half_width="; break;
      case GridKind::line_open: s = "open line half_width="; break;
    }
    return s + std::to_string(extent_) + " nodes=" + std::to_string(x_.size());
  }

 private:
  Grid() = default;

  void check_size(std::size_t n) const {
    if (n != x_.size()) throw ArgumentError("array size does not match grid");
  }

  GridKind kind_ = GridKind::radial;
  int dim_ = 1;
  double h_ = 0.0;
  double extent_ = 0.0;
  std::vector<double> x_;
  std::vector<double> w_;
  std::vector<double> c_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_radial_grid(int N, double r_max = 40.0, std::size_t nodes = 4001) {
  return std::make_shared<const Grid>(Grid::radial(N, r_max, nodes));
}

inline GridPtr make_line_grid(double half_width, std::size_t nodes, bool periodic = true) {
  return std::make_shared<const Grid>(Grid::line(half_width, nodes, periodic));
}

/// Nonnegative radial function sampled on a grid.
struct Profile {
  GridPtr grid;
  std::vector<double> u;

  Profile() = default;
  Profile(GridPtr g, std::vector<double> values) : grid(std::move(g)), u(std::move(values)) {
    if (!grid) throw ArgumentError("profile: null grid");
    if (u.size() != grid->size()) throw ArgumentError("profile: value count does not match grid");
  }

  static Profile zero(GridPtr g) {
    const std::size_t n = g->size();
    return Profile(std::move(g), std::vector<double>(n, 0.0));
  }

  double max() const {
    double m = 0.0;
    for (double v : u) m = std::max(m, v);
    return m;
  }
  bool is_zero() const {
    for (double v : u)
      if (v != 0.0) return false;
    return true;
  }
  std::span<const double> values() const { return u; }
};

/// A profile together with its frequency omega > 0.
struct StandingWave {
  Profile profile;
  double omega = 0.0;

  StandingWave() = default;
  StandingWave(Profile p, double w) : profile(std::move(p)), omega(w) {
    if (!(omega > 0.0)) throw ArgumentError("standing wave: omega must be positive");
  }
};

/// Cubic spline through the values of a radial profile with u'(0) = 0 and
/// u'(r_max) = 0; evaluates to zero beyond r_max.
class RadialInterpolant {
 public:
  explicit RadialInterpolant(const Profile& p) : h_(p.grid->spacing()), y_(p.u) {
    if (!p.grid->is_radial()) throw ArgumentError("interpolant: profile must live on a radial grid");
    const std::size_t n = y_.size();
    // Clamped spline: solve for second derivatives m_i.
    std::vector<double> a(n), b(n), c(n), d(n);
    b[0] = 2.0;
    c[0] = 1.0;
    d[0] = 6.0 / h_ * ((y_[1] - y_[0]) / h_);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      a[i] = 1.0;
      b[i] = 4.0;
      c[i] = 1.0;
      d[i] = 6.0 / (h_ * h_) * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]);
    }
    a[n - 1] = 1.0;
    b[n - 1] = 2.0;
    d[n - 1] = 6.0 / h_ * (-(y_[n - 1] - y_[n - 2]) / h_);
    for (std::size_t i = 1; i < n; ++i) {
      const double m = a[i] / b[i - 1];
      b[i] -= m * c[i - 1];
      d[i] -= m * d[i - 1];
    }
    m_.assign(n, 0.0);
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double r_max() const { return h_ * static_cast<double>(y_.size() - 1); }

  /// Value and derivative at r >= 0.
  std::pair<double, double> eval(double r) const {
    r = std::abs(r);
    const std::size_t n = y_.size();
    if (r >= r_max()) return {r == r_max() ? y_.back() : 0.0, 0.0};
    std::size_t i = static_cast<std::size_t>(r / h_);
    if (i >= n - 1) i = n - 2;
    const double t = r - h_ * static_cast<double>(i);
    // Snap to the node value when r coincides with a node.
    if (t == 0.0) {
      return {y_[i], (y_[i + 1] - y_[i]) / h_ - h_ * (2.0 * m_[i] + m_[i + 1]) / 6.0};
    }
    const double A = (h_ - t) / h_;
    const double B = t / h_;
    const double val =
        A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h_ * h_ / 6.0;
    const double der = (y_[i + 1] - y_[i]) / h_ - (3.0 * A * A - 1.0) / 6.0 * h_ * m_[i] +
                       (3.0 * B * B - 1.0) / 6.0 * h_ * m_[i + 1];
    return {val, der};
  }

  double operator()(double r) const { return eval(r).first; }

 private:
  double h_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace nkg
