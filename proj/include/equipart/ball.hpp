#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <numbers>
#include <vector>

#include "equipart/errors.hpp"
#include "equipart/field.hpp"
#include "equipart/gamma.hpp"
#include "equipart/group.hpp"
#include "equipart/mesh.hpp"
#include "equipart/partition.hpp"

namespace equipart {

/// A k-component field on a ball, discretized on a tensor grid: radial nodes
/// 0 = r_0 < ... < r_m times the vertices of a sphere mesh. values[i] has one
/// row per radial node. The mesh is referenced, not owned.
struct BallField {
  const SphereMesh* mesh = nullptr;
  Eigen::VectorXd radii;                 // m+1 nodes, radii[0] == 0
  std::vector<Eigen::MatrixXd> values;   // k matrices, (m+1) x n_vertices
  double beta = 0.0;                     // coupling weight of the interaction

  int k() const { return static_cast<int>(values.size()); }
  int shells() const { return static_cast<int>(radii.size()); }
  int n() const { return values.empty() ? 0 : static_cast<int>(values[0].cols()); }
};

/// Radial node ladder with clustering toward the outer boundary (interface
/// layers concentrate there): r_j = outer * sin(pi j / (2m)).
inline Eigen::VectorXd build_ball_grid(int m, double outer = 1.0) {
  if (m < 2) throw Error("build_ball_grid: need at least 2 radial cells");
  if (outer <= 0.0) throw NegativeInput("build_ball_grid: outer radius must be > 0");
  Eigen::VectorXd r(m + 1);
  for (int j = 0; j <= m; ++j)
    r[j] = outer * std::sin(0.5 * std::numbers::pi * double(j) / double(m));
  r[0] = 0.0;
  r[m] = outer;
  return r;
}

/// Radial extension of a sphere trace by the power law r^ell.
inline BallField homogeneous_extension(const SphereMesh& mesh, const Field& phi,
                                       double ell, const Eigen::VectorXd& radii) {
  if (ell <= 0.0) throw NegativeInput("homogeneous_extension: exponent must be > 0");
  if (phi.n() != mesh.n_vertices())
    throw IncompatibleMesh("homogeneous_extension: trace does not match mesh");
  BallField out;
  out.mesh = &mesh;
  out.radii = radii;
  out.values.resize(phi.k());
  for (int i = 0; i < phi.k(); ++i) {
    out.values[i].resize(radii.size(), phi.n());
    for (int j = 0; j < radii.size(); ++j)
      out.values[i].row(j) = std::pow(radii[j], ell) * phi.values.col(i).transpose();
  }
  return out;
}

namespace detail {

/// Integral over one radial cell of a P1-squared profile against the weight
/// (r0 + t h)^p, t in [0,1]: the profile enters through the quadratic form
/// q(t) = (1-t)^2 q0 + 2 t (1-t) q01 + t^2 q1. Three-point Gauss-Legendre is
/// exact whenever the full integrand is polynomial of degree <= 5, which
/// covers every p >= 0 used here and radially linear fields at p = -1.
inline double cell_integral(double q0, double q01, double q1, double r0, double h,
                            int p) {
  static const double t[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5,
                              0.5 + 0.5 * std::sqrt(0.6)};
  static const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double acc = 0.0;
  for (int g = 0; g < 3; ++g) {
    const double q =
        (1 - t[g]) * (1 - t[g]) * q0 + 2 * t[g] * (1 - t[g]) * q01 + t[g] * t[g] * q1;
    double wt = 1.0;
    const double r = r0 + t[g] * h;
    for (int e = 0; e < std::abs(p); ++e) wt *= r;
    acc += w[g] * q * (p >= 0 ? wt : 1.0 / wt);
  }
  return acc * h;
}

/// Exact integral of r^p over [a, b] for integer p >= 0.
inline double power_cell(double a, double b, int p) {
  return (std::pow(b, p + 1) - std::pow(a, p + 1)) / (p + 1);
}

/// Monotone (Fritsch-Carlson) cubic Hermite interpolant of tabulated data;
/// preserves strict monotonicity of the samples, which the blow-up radius
/// uniqueness argument relies on.
struct Pchip {
  Eigen::VectorXd x, y, d;

  Pchip(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) : x(xs), y(ys) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw InsufficientRange("Pchip: need at least 2 samples");
    d.resize(n);
    Eigen::VectorXd h(n - 1), delta(n - 1);
    for (int i = 0; i < n - 1; ++i) {
      h[i] = x[i + 1] - x[i];
      delta[i] = (y[i + 1] - y[i]) / h[i];
    }
    for (int i = 1; i < n - 1; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d[i] = 0.0;
      } else {
        const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
      double v = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (v * d0 <= 0.0)
        v = 0.0;
      else if (d0 * d1 < 0.0 && std::abs(v) > 3 * std::abs(d0))
        v = 3 * d0;
      return v;
    };
    if (n == 2) {
      d[0] = d[1] = delta[0];
    } else {
      d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
      d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
  }

  double operator()(double xi) const {
    const int n = static_cast<int>(x.size());
    int lo = 0, hi = n - 1;
    if (xi <= x[0]) {
      hi = 1;
    } else if (xi >= x[n - 1]) {
      lo = n - 2;
    } else {
      while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        (x[mid] <= xi ? lo : hi) = mid;
      }
    }
    const double h = x[lo + 1] - x[lo], t = (xi - x[lo]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * y[lo] + h * h10 * d[lo] + h01 * y[lo + 1] + h * h11 * d[lo + 1];
  }
};

}  // namespace detail

/// Radial profiles of the scaled boundary mass H, scaled energy E, the
/// Almgren quotient Nq = E/H, the per-component weighted energies J_i, and
/// the cumulative interaction volume integral.
struct RadialDiagnostics {
  Eigen::VectorXd radii;
  Eigen::VectorXd H;    // r^{1-N} * boundary mass of the squared components
  Eigen::VectorXd E;    // r^{2-N} * (Dirichlet + interaction) over the ball
  Eigen::VectorXd Nq;   // E / H (0 at r = 0 by convention)
  std::vector<Eigen::VectorXd> J;       // per component, weight |x|^{2-N}
  Eigen::VectorXd interaction_volume;   // cumulative sum_{i<j} u_i^2 u_j^2
};

/// Shell-exact quadrature of all radial diagnostics. The angular energy in a
/// cell interpolates the shell vectors linearly in r; the interaction density
/// is interpolated linearly. J weights are r (radial/interaction part) and
/// 1/r (angular part) for every ambient dimension.
inline RadialDiagnostics diagnostics(const BallField& bf) {
  const SphereMesh& mesh = *bf.mesh;
  const int m = bf.shells() - 1, k = bf.k(), N = mesh.dimension;
  RadialDiagnostics diag;
  diag.radii = bf.radii;
  diag.H.setZero(m + 1);
  diag.E.setZero(m + 1);
  diag.Nq.setZero(m + 1);
  diag.interaction_volume.setZero(m + 1);
  diag.J.assign(k, Eigen::VectorXd::Zero(m + 1));

  // Per-shell quadratic forms.
  Eigen::MatrixXd kq(m + 1, k);            // u_j^T K u_j
  std::vector<Eigen::VectorXd> sq(k);      // squared values per shell row
  Eigen::VectorXd pair_density(m + 1);     // sum_{i<j} <M, u_i^2 u_j^2>
  Eigen::MatrixXd comp_density(m + 1, k);  // <M, u_i^2 S_i>
  for (int j = 0; j <= m; ++j) {
    double hmass = 0.0;
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd row = bf.values[i].row(j).transpose();
      hmass += mesh.mass_inner(row, row);
      kq(j, i) = row.dot(mesh.stiffness * row);
    }
    diag.H[j] = hmass;
    double pd = 0.0;
    for (int i = 0; i < k; ++i) {
      const Eigen::ArrayXd si = bf.values[i].row(j).transpose().array().square();
      double own = 0.0;
      for (int l = 0; l < k; ++l) {
        if (l == i) continue;
        const Eigen::ArrayXd sl = bf.values[l].row(j).transpose().array().square();
        own += (mesh.lumped_mass.array() * si * sl).sum();
      }
      comp_density(j, i) = own;
      pd += 0.5 * own;
    }
    pair_density[j] = pd;
  }

  double e_cum = 0.0, int_cum = 0.0;
  std::vector<double> j_cum(k, 0.0);
  for (int j = 0; j < m; ++j) {
    const double r0 = bf.radii[j], h = bf.radii[j + 1] - r0;
    double rad_sq = 0.0;  // sum_i M-norm^2 of the radial difference / h^2
    std::vector<double> rad_i(k), k0(k), k1(k), k01(k);
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd du =
          (bf.values[i].row(j + 1) - bf.values[i].row(j)).transpose() / h;
      rad_i[i] = mesh.mass_inner(du, du);
      rad_sq += rad_i[i];
      k0[i] = kq(j, i);
      k1[i] = kq(j + 1, i);
      k01[i] = bf.values[i].row(j).transpose().dot(
          mesh.stiffness * bf.values[i].row(j + 1).transpose());
    }
    const double pd_mid = 0.5 * (pair_density[j] + pair_density[j + 1]);
    // Energy: weights r^{N-1} (radial, interaction) and r^{N-3} (angular).
    double cell_e = rad_sq * detail::power_cell(r0, r0 + h, N - 1);
    for (int i = 0; i < k; ++i)
      cell_e += detail::cell_integral(k0[i], k01[i], k1[i], r0, h, N - 3);
    cell_e += bf.beta * detail::cell_integral(pair_density[j], pd_mid,
                                              pair_density[j + 1], r0, h, N - 1);
    e_cum += cell_e;
    diag.E[j + 1] = e_cum / std::pow(bf.radii[j + 1], N - 2);
    int_cum += detail::cell_integral(pair_density[j], pd_mid, pair_density[j + 1],
                                     r0, h, N - 1);
    diag.interaction_volume[j + 1] = int_cum;
    // J_i: weights r (radial, interaction) and 1/r (angular).
    for (int i = 0; i < k; ++i) {
      const double cd_mid = 0.5 * (comp_density(j, i) + comp_density(j + 1, i));
      j_cum[i] += rad_i[i] * detail::power_cell(r0, r0 + h, 1) +
                  detail::cell_integral(k0[i], k01[i], k1[i], r0, h, -1) +
                  bf.beta * detail::cell_integral(comp_density(j, i), cd_mid,
                                                  comp_density(j + 1, i), r0, h, 1);
      diag.J[i][j + 1] = j_cum[i];
    }
  }
  for (int j = 1; j <= m; ++j)
    diag.Nq[j] = diag.H[j] > 0.0 ? diag.E[j] / diag.H[j] : 0.0;
  return diag;
}

struct MonotonicityReport {
  double max_violation = 0.0;  // largest downward step of Nq on the range
  double threshold = 0.0;
  double range = 0.0;          // Nq(r_max) - Nq(r_min)
  bool pass = false;
};

/// Checks that the Almgren quotient is nondecreasing on [r_min, r_max] up to
/// a tolerance scaled by the total variation across the range.
inline MonotonicityReport almgren_monotonicity_check(const RadialDiagnostics& diag,
                                                     double r_min, double r_max,
                                                     double tol_scale = 1e-3) {
  MonotonicityReport rep;
  double first = 0.0, last = 0.0;
  bool seen = false;
  double prev = 0.0;
  for (int j = 0; j < diag.radii.size(); ++j) {
    const double r = diag.radii[j];
    if (r < r_min || r > r_max) continue;
    if (!seen) {
      first = diag.Nq[j];
      seen = true;
    } else {
      rep.max_violation = std::max(rep.max_violation, prev - diag.Nq[j]);
    }
    prev = diag.Nq[j];
    last = diag.Nq[j];
  }
  if (!seen) throw InsufficientRange("almgren_monotonicity_check: empty range");
  rep.range = last - first;
  rep.threshold = tol_scale * std::max(rep.range, 0.0) + 1e-12;
  rep.pass = rep.max_violation <= rep.threshold;
  return rep;
}

/// Blow-up radius: the unique root of beta r^2 H(r) = 1, located by bisection
/// on a monotone cubic interpolant of the sampled H profile.
inline double find_r_beta(const BallField& bf) {
  const RadialDiagnostics diag = diagnostics(bf);
  const detail::Pchip hfit(diag.radii, diag.H);
  const auto g = [&](double r) { return bf.beta * r * r * hfit(r); };
  const int m = bf.shells() - 1;
  if (g(bf.radii[m]) < 1.0)
    throw NotBracketed("find_r_beta: beta r^2 H stays below 1 on the grid");
  double lo = 0.0, hi = bf.radii[m];
  for (int j = 1; j <= m; ++j) {
    if (g(bf.radii[j]) >= 1.0) {
      lo = bf.radii[j - 1];
      hi = bf.radii[j];
      break;
    }
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = g(mid);
    if (std::abs(v - 1.0) < 1e-8) return mid;
    (v < 1.0 ? lo : hi) = mid;
  }
  if (std::abs(g(mid) - 1.0) >= 1e-8)
    throw NonConvergence("find_r_beta: bisection residual above 1e-8");
  return mid;
}

/// Rescale to the unit-coupling normalization: V(x) = sqrt(beta) r_b U(r_b x)
/// on the ball of radius 1/r_b. The radial grid scales along with the field,
/// so no resampling error is introduced; the rescaled system has coupling 1.
inline BallField blow_up_rescale(const BallField& bf, double r_beta) {
  if (r_beta <= 0.0) throw NegativeInput("blow_up_rescale: r_beta must be > 0");
  BallField out;
  out.mesh = bf.mesh;
  out.radii = bf.radii / r_beta;
  const double scale = std::sqrt(bf.beta) * r_beta;
  out.values.resize(bf.k());
  for (int i = 0; i < bf.k(); ++i) out.values[i] = scale * bf.values[i];
  out.beta = 1.0;
  return out;
}

/// Monotone-cubic interpolation of the H profile at an arbitrary radius.
inline double h_at(const RadialDiagnostics& diag, double r) {
  return detail::Pchip(diag.radii, diag.H)(r);
}

struct ACFReport {
  double C = 0.0;  // smallest drift constant making the product monotone
  int n_radii = 0;
  double r_lo = 0.0, r_hi = 0.0;
  bool pass = false;
};

/// Drift fit for the weighted-energy product: with F(r) = log(J_1...J_k) -
/// 2 k ell log r, finds the smallest C >= 0 such that F(r) - C r^{-1/2} is
/// nondecreasing across the sampled radii above r_min.
inline ACFReport acf_check(const RadialDiagnostics& diag, double ell,
                           double r_min = 1.0, double c_max = 50.0) {
  const int k = static_cast<int>(diag.J.size());
  std::vector<double> rs, fs;
  for (int j = 0; j < diag.radii.size(); ++j) {
    const double r = diag.radii[j];
    if (r < r_min) continue;
    double logprod = 0.0;
    bool ok = true;
    for (int i = 0; i < k; ++i) {
      if (diag.J[i][j] <= 0.0) {
        ok = false;
        break;
      }
      logprod += std::log(diag.J[i][j]);
    }
    if (!ok) continue;
    rs.push_back(r);
    fs.push_back(logprod - 2.0 * k * ell * std::log(r));
  }
  if (rs.size() < 8)
    throw InsufficientRange("acf_check: fewer than 8 usable radii above r_min");
  ACFReport rep;
  rep.n_radii = static_cast<int>(rs.size());
  rep.r_lo = rs.front();
  rep.r_hi = rs.back();
  for (std::size_t t = 0; t + 1 < rs.size(); ++t) {
    const double drop = fs[t] - fs[t + 1];
    if (drop > 0.0) {
      const double denom = 1.0 / std::sqrt(rs[t]) - 1.0 / std::sqrt(rs[t + 1]);
      rep.C = std::max(rep.C, drop / denom);
    }
  }
  rep.pass = std::isfinite(rep.C) && rep.C <= c_max;
  return rep;
}

struct GrowthRateEstimate {
  double value = 0.0;       // Almgren quotient at the outermost radius
  double tail_range = 0.0;  // Nq spread over the last quartile of radii
};

inline GrowthRateEstimate growth_rate_estimate(const RadialDiagnostics& diag) {
  const int m = static_cast<int>(diag.radii.size());
  if (m < 8) throw InsufficientRange("growth_rate_estimate: need >= 8 radii");
  GrowthRateEstimate est;
  est.value = diag.Nq[m - 1];
  double lo = est.value, hi = est.value;
  for (int j = m - m / 4; j < m; ++j) {
    lo = std::min(lo, diag.Nq[j]);
    hi = std::max(hi, diag.Nq[j]);
  }
  est.tail_range = hi - lo;
  return est;
}

struct BallSolveOptions {
  int max_iters = 200;
  double tol = 1e-9;
  double step0 = 1.0;
};

namespace detail {

/// Lumped discrete energy used by the ball solver: radial P1 differences with
/// cell weight int r^{N-1}, per-shell angular K-form with nodal half-cell
/// weight int r^{N-3} (zero at the origin node), nodal interaction weight
/// int r^{N-1} over half-cells.
struct BallWeights {
  Eigen::VectorXd radial_cell;   // per cell: int r^{N-1} / h^2
  Eigen::VectorXd angular_node;  // per node: int r^{N-3} over half-cells
  Eigen::VectorXd volume_node;   // per node: int r^{N-1} over half-cells
};

inline BallWeights ball_weights(const Eigen::VectorXd& radii, int N) {
  const int m = static_cast<int>(radii.size()) - 1;
  BallWeights w;
  w.radial_cell.setZero(m);
  w.angular_node.setZero(m + 1);
  w.volume_node.setZero(m + 1);
  auto ipow = [&](double a, double b, int p) {
    if (p >= 0) return power_cell(a, b, p);
    return std::log(b / a);  // p == -1, only for N == 2 away from the origin
  };
  for (int j = 0; j < m; ++j) {
    const double a = radii[j], b = radii[j + 1], mid = 0.5 * (a + b);
    const double h = b - a;
    w.radial_cell[j] = power_cell(a, b, N - 1) / (h * h);
    w.volume_node[j] += power_cell(a, mid, N - 1);
    w.volume_node[j + 1] += power_cell(mid, b, N - 1);
    // The origin node carries no angular energy: the field is constant there.
    if (j > 0) w.angular_node[j] += ipow(a, mid, N - 3);
    w.angular_node[j + 1] += ipow(mid, b, N - 3);
  }
  return w;
}

inline double ball_energy_lumped(const SphereMesh& mesh, const BallField& bf,
                                 const BallWeights& w) {
  const int m = bf.shells() - 1, k = bf.k();
  double e = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd du =
          (bf.values[i].row(j + 1) - bf.values[i].row(j)).transpose();
      e += w.radial_cell[j] * mesh.mass_inner(du, du);
    }
    for (int j = 1; j <= m; ++j) {
      const Eigen::VectorXd u = bf.values[i].row(j).transpose();
      e += w.angular_node[j] * u.dot(mesh.stiffness * u);
    }
  }
  for (int j = 0; j <= m; ++j) {
    double pd = 0.0;
    for (int i = 0; i < k; ++i)
      for (int l = i + 1; l < k; ++l)
        pd += (mesh.lumped_mass.array() *
               bf.values[i].row(j).transpose().array().square() *
               bf.values[l].row(j).transpose().array().square())
                  .sum();
    e += bf.beta * w.volume_node[j] * pd;
  }
  return e;
}

/// Feasibility retraction for the ball solver: clamp to the nonnegative cone,
/// average over the group shell by shell, and collapse the origin shell to a
/// single value shared by all components.
inline void ball_retract(const SphereMesh& mesh, const SymmetryGroup& group,
                         BallField& bf) {
  const int m = bf.shells() - 1, k = bf.k(), n = bf.n();
  for (int i = 0; i < k; ++i)
    bf.values[i].topRows(m) = bf.values[i].topRows(m).cwiseMax(0.0);
  Field shell = Field::zero(mesh, k);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < k; ++i) shell.values.col(i) = bf.values[i].row(j).transpose();
    shell = equivariant_project(mesh, group, shell);
    for (int i = 0; i < k; ++i) bf.values[i].row(j) = shell.values.col(i).transpose();
  }
  double origin = 0.0;
  const double total = mesh.lumped_mass.sum();
  for (int i = 0; i < k; ++i)
    origin += mesh.lumped_mass.dot(bf.values[i].row(0).transpose()) / (k * total);
  origin = std::max(origin, 0.0);
  for (int i = 0; i < k; ++i) bf.values[i].row(0).setConstant(origin);
}

}  // namespace detail

/// Minimizes the discrete ball energy (Dirichlet + beta interaction) over
/// nonnegative equivariant fields with the boundary shell fixed to the given
/// trace. The trace is rescaled to unit total boundary mass. Each iteration
/// takes the per-component Newton direction (exact minimizer of the energy in
/// that component with the others frozen), projects it onto the feasible
/// tangent cone, and backtracks on the total energy.
inline BallField solve_ball(const AdmissibleTriplet& triplet, const SphereMesh& mesh,
                            double beta, const Field& boundary,
                            const Eigen::VectorXd& radii,
                            const BallSolveOptions& opts = {}) {
  if (beta < 0.0) throw NegativeInput("solve_ball: beta must be >= 0");
  const int m = static_cast<int>(radii.size()) - 1;
  if (m < 32) throw Error("solve_ball: need at least 32 radial cells");
  if (boundary.n() != mesh.n_vertices() || boundary.k() != triplet.k)
    throw IncompatibleMesh("solve_ball: boundary trace does not match mesh/triplet");
  const int n = mesh.n_vertices(), k = triplet.k, N = mesh.dimension;

  // Unit total boundary mass normalization.
  Field trace = boundary;
  double total = 0.0;
  for (int i = 0; i < k; ++i)
    total += mesh.mass_inner(trace.values.col(i), trace.values.col(i));
  if (total < 1e-30) throw ZeroComponent("solve_ball: boundary trace has zero mass");
  trace.values /= std::sqrt(total);

  const detail::BallWeights w = detail::ball_weights(radii, N);

  // Warm start: power-law extension with the averaged trace exponent.
  double ell0 = 0.0;
  for (int i = 0; i < k; ++i)
    ell0 += gamma_exponent(N, rayleigh(mesh, trace.values.col(i))) / k;
  BallField bf = homogeneous_extension(mesh, trace, ell0, radii);
  bf.beta = beta;
  detail::ball_retract(mesh, triplet.group, bf);
  for (int i = 0; i < k; ++i) bf.values[i].row(m) = trace.values.col(i).transpose();

  // Linear operator on the interior degrees of freedom, dof = j * n + v for
  // shells j = 0..m-1; the boundary shell couples through a_ib.
  const int dofs = m * n;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(dofs) * 12);
  std::vector<Eigen::Triplet<double>> trip_ib;
  for (int j = 0; j < m; ++j) {
    const double f = w.radial_cell[j];
    for (int v = 0; v < n; ++v) {
      const double mv = f * mesh.lumped_mass[v];
      trip.emplace_back(j * n + v, j * n + v, mv);
      if (j + 1 < m) {
        trip.emplace_back(j * n + v, (j + 1) * n + v, -mv);
        trip.emplace_back((j + 1) * n + v, j * n + v, -mv);
        trip.emplace_back((j + 1) * n + v, (j + 1) * n + v, mv);
      } else {
        trip_ib.emplace_back(j * n + v, v, -mv);
      }
    }
  }
  for (int j = 1; j < m; ++j)
    for (int c = 0; c < mesh.stiffness.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(mesh.stiffness, c); it; ++it)
        trip.emplace_back(j * n + it.row(), j * n + it.col(),
                          w.angular_node[j] * it.value());
  Eigen::SparseMatrix<double> a_int(dofs, dofs);
  a_int.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> a_ib(dofs, n);
  a_ib.setFromTriplets(trip_ib.begin(), trip_ib.end());

  // The tensor-product operator has 3D-lattice connectivity, where direct
  // factorization fill-in is prohibitive; preconditioned CG is fast and the
  // direction only needs moderate accuracy for the line search.
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      solver;
  solver.setTolerance(1e-8);
  solver.setMaxIterations(4000);

  auto flatten = [&](const Eigen::MatrixXd& vals) {
    Eigen::VectorXd x(dofs);
    for (int j = 0; j < m; ++j) x.segment(j * n, n) = vals.row(j).transpose();
    return x;
  };

  double fval = detail::ball_energy_lumped(mesh, bf, w);
  double step = opts.step0, last_rel = std::numeric_limits<double>::infinity();
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    // Newton directions, one factorization per component.
    std::vector<Eigen::MatrixXd> dir(k, Eigen::MatrixXd::Zero(m + 1, n));
    double grad_dot_dir = 0.0;
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd diagw(dofs);
      Eigen::VectorXd grad;
      {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m + 1, n);
        for (int l = 0; l < k; ++l)
          if (l != i) s += bf.values[l].array().square().matrix();
        for (int j = 0; j < m; ++j)
          diagw.segment(j * n, n) = beta * w.volume_node[j] *
                                    mesh.lumped_mass.cwiseProduct(
                                        s.row(j).transpose());
        const Eigen::VectorXd x = flatten(bf.values[i]);
        grad = a_int * x + a_ib * trace.values.col(i) + diagw.cwiseProduct(x);
      }
      Eigen::SparseMatrix<double> p = a_int;
      for (int d = 0; d < dofs; ++d) p.coeffRef(d, d) += diagw[d] + 1e-14;
      solver.compute(p);
      if (solver.info() != Eigen::Success)
        throw NonConvergence("solve_ball: preconditioner setup failed");
      const Eigen::VectorXd d = solver.solve(grad);
      for (int j = 0; j < m; ++j) dir[i].row(j) = d.segment(j * n, n).transpose();
    }
    // Tangent-cone projection: group-average each shell of the direction and
    // freeze entries pinned at zero that would move into the clamped region;
    // then re-measure the first-order decrease.
    {
      Field shell = Field::zero(mesh, k);
      for (int j = 0; j < m; ++j) {
        for (int i = 0; i < k; ++i) shell.values.col(i) = dir[i].row(j).transpose();
        shell = equivariant_project(mesh, triplet.group, shell);
        for (int i = 0; i < k; ++i) dir[i].row(j) = shell.values.col(i).transpose();
      }
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < m; ++j)
          for (int v = 0; v < n; ++v)
            if (bf.values[i](j, v) == 0.0 && dir[i](j, v) > 0.0) dir[i](j, v) = 0.0;
    }
    for (int i = 0; i < k; ++i) {
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m + 1, n);
      for (int l = 0; l < k; ++l)
        if (l != i) s += bf.values[l].array().square().matrix();
      const Eigen::VectorXd x = flatten(bf.values[i]);
      Eigen::VectorXd diagw(dofs);
      for (int j = 0; j < m; ++j)
        diagw.segment(j * n, n) =
            beta * w.volume_node[j] *
            mesh.lumped_mass.cwiseProduct(s.row(j).transpose());
      const Eigen::VectorXd grad = a_int * x + a_ib * trace.values.col(i) +
                                   diagw.cwiseProduct(x);
      grad_dot_dir += grad.dot(flatten(dir[i]));
    }

    step = std::min(4.0 * step, 16.0 * opts.step0);
    bool accepted = false;
    BallField trial = bf, best_trial = bf;
    double ftrial = fval, fbest = fval;
    for (int half = 0; half < 60 && step > 1e-16; ++half, step *= 0.5) {
      for (int i = 0; i < k; ++i)
        trial.values[i] = bf.values[i] - step * dir[i];
      detail::ball_retract(mesh, triplet.group, trial);
      for (int i = 0; i < k; ++i)
        trial.values[i].row(m) = trace.values.col(i).transpose();
      ftrial = detail::ball_energy_lumped(mesh, trial, w);
      if (ftrial < fbest) {
        fbest = ftrial;
        best_trial = trial;
      }
      if (grad_dot_dir > 0.0 && ftrial <= fval - 1e-4 * step * grad_dot_dir) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (fbest < fval - 1e-14 * std::max(std::abs(fval), 1.0)) {
        trial = best_trial;
        ftrial = fbest;
      } else {
        converged = true;
        break;
      }
    }
    last_rel = (fval - ftrial) / std::max(std::abs(fval), 1e-30);
    bf = trial;
    fval = ftrial;
    if (last_rel < opts.tol) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged && last_rel > 100.0 * opts.tol)
    throw NonConvergence("solve_ball: no convergence within max_iters");
  for (int i = 0; i < k; ++i) {
    double mass = 0.0;
    for (int j = 0; j <= m; ++j) {
      const Eigen::VectorXd row = bf.values[i].row(j).transpose();
      mass += mesh.mass_inner(row, row);
    }
    if (mass < 1e-24)
      throw ComponentCollapse("solve_ball: component " + std::to_string(i) +
                              " vanished");
  }
  return bf;
}

}  // namespace equipart
