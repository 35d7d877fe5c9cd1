#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <limits>
#include <random>
#include <vector>

#include "equipart/field.hpp"
#include "equipart/gamma.hpp"
#include "equipart/triplet.hpp"

namespace equipart {

namespace detail {

/// Per-component pieces of the penalized functional:
/// R_i = (u_i^T K u_i + beta/2 * q_i) / (u_i^T M u_i), with
/// q_i = sum_v m_v u_i(v)^2 S_i(v) and S_i = sum_{j != i} u_j^2.
struct FunctionalParts {
  Eigen::MatrixXd others_sq;  // n x k, column i = S_i
  Eigen::VectorXd dirichlet;  // a_i = u_i^T K u_i
  Eigen::VectorXd coupling;   // q_i
  Eigen::VectorXd mass;       // D_i = u_i^T M u_i
  Eigen::VectorXd ratio;      // R_i
};

inline FunctionalParts functional_parts(const SphereMesh& mesh, const Field& u,
                                        double beta) {
  const int k = u.k();
  FunctionalParts p;
  const Eigen::MatrixXd sq = u.values.array().square();
  const Eigen::VectorXd total_sq = sq.rowwise().sum();
  p.others_sq = (-sq).colwise() + total_sq;
  p.dirichlet.resize(k);
  p.coupling.resize(k);
  p.mass.resize(k);
  p.ratio.resize(k);
  for (int i = 0; i < k; ++i) {
    p.dirichlet[i] = u.values.col(i).dot(mesh.stiffness * u.values.col(i));
    p.coupling[i] = mesh.lumped_mass.dot(sq.col(i).cwiseProduct(p.others_sq.col(i)));
    p.mass[i] = mesh.mass_inner(u.values.col(i), u.values.col(i));
    if (p.mass[i] < 1e-30)
      throw ZeroComponent("functional_parts: component " + std::to_string(i) +
                          " has zero mass");
    p.ratio[i] = (p.dirichlet[i] + 0.5 * beta * p.coupling[i]) / p.mass[i];
  }
  return p;
}

}  // namespace detail

/// The penalized value: (1/k) sum_i gamma(R_i(u)).
inline double evaluate_I_beta(const SphereMesh& mesh, const Field& u, double beta) {
  const auto p = detail::functional_parts(mesh, u, beta);
  double acc = 0.0;
  for (int i = 0; i < u.k(); ++i) acc += gamma_exponent(mesh.dimension, p.ratio[i]);
  return acc / u.k();
}

/// The segregated limit value: (1/k) sum_i gamma(Rayleigh(u_i)) when the
/// components overlap by at most overlap_tol pointwise, +infinity otherwise.
inline double evaluate_I_infty(const SphereMesh& mesh, const Field& u,
                               double overlap_tol = 1e-10) {
  for (int i = 0; i < u.k(); ++i)
    for (int j = i + 1; j < u.k(); ++j)
      if (u.values.col(i).cwiseProduct(u.values.col(j)).maxCoeff() > overlap_tol)
        return std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (int i = 0; i < u.k(); ++i)
    acc += gamma_exponent(mesh.dimension, rayleigh(mesh, u.values.col(i)));
  return acc / u.k();
}

/// Euclidean gradient of u -> (1/k) sum_j gamma(R_j(u)), one column per
/// component (no manifold projection applied).
inline Eigen::MatrixXd i_beta_gradient(const SphereMesh& mesh, const Field& u,
                                       double beta) {
  const int k = u.k();
  const int N = mesh.dimension;
  const auto parts = detail::functional_parts(mesh, u, beta);
  Eigen::MatrixXd grad(u.n(), k);
  Eigen::VectorXd gp(k);
  for (int j = 0; j < k; ++j) gp[j] = gamma_exponent_derivative(N, parts.ratio[j]);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd g =
        gp[i] / parts.mass[i] *
        (2.0 * (mesh.stiffness * u.values.col(i)) +
         beta * mesh.lumped_mass.cwiseProduct(
                    u.values.col(i).cwiseProduct(parts.others_sq.col(i))) -
         2.0 * parts.ratio[i] * mesh.lumped_mass.cwiseProduct(u.values.col(i)));
    if (beta > 0.0)
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        g += gp[j] * beta / parts.mass[j] *
             mesh.lumped_mass.cwiseProduct(
                 u.values.col(i).cwiseProduct(u.values.col(j).cwiseAbs2()));
      }
    grad.col(i) = g / k;
  }
  return grad;
}

struct MinimizeOptions {
  int max_iters = 3000;
  double tol = 1e-9;    // relative decrease per accepted step
  double step0 = 1.0;
  /// Requires beta == 0: drop the nonnegativity clamp and deflate the
  /// per-component mean after each projection, so the iteration descends
  /// the Rayleigh quotient on the equivariant subspace orthogonal to
  /// constants (whose infimum is the smallest nontrivial equivariant
  /// eigenvalue).
  bool eigen_mode = false;
};

struct PartitionResult {
  Field field;
  double beta = 0.0;
  double ell_beta = 0.0;     // I_beta at the final iterate
  double lambda_beta = 0.0;  // a_1 + beta q_1 for the unit-mass first component
  double interaction = 0.0;  // sum_{i != j} beta int u_i^2 u_j^2
  int iterations = 0;
  double residual = 0.0;     // relative decrease of the last accepted step
};

namespace detail {

inline Field retract(const SphereMesh& mesh, const SymmetryGroup& group, Field u,
                     bool eigen_mode) {
  if (!eigen_mode) u = clamp_nonnegative(u);
  u = equivariant_project(mesh, group, u);
  if (eigen_mode) {
    const double total = mesh.lumped_mass.sum();
    for (int i = 0; i < u.k(); ++i)
      u.values.col(i).array() -= mesh.lumped_mass.dot(u.values.col(i)) / total;
  }
  return normalize_components(mesh, u, 1e-12);
}

}  // namespace detail

/// Minimizes the penalized functional over equivariant unit-mass fields by
/// preconditioned projected gradient descent with backtracking: the raw
/// gradient is smoothed through (K + beta diag(m S_i) + M)^{-1}, the step is
/// clamped to nonnegative values, averaged over the group, and renormalized.
inline PartitionResult minimize_I_beta(const SphereMesh& mesh, const SymmetryGroup& group,
                                       const Field& u0, double beta,
                                       const MinimizeOptions& opts = {}) {
  if (beta < 0.0) throw NegativeInput("minimize_I_beta: beta must be nonnegative");
  if (opts.eigen_mode && beta != 0.0)
    throw Error("minimize_I_beta: eigen_mode requires beta == 0");
  const int k = u0.k();
  const int n = mesh.n_vertices();

  Field u = detail::retract(mesh, group, u0, opts.eigen_mode);
  double fval = evaluate_I_beta(mesh, u, beta);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  Eigen::SparseMatrix<double> mass_diag(n, n), precond;
  {
    std::vector<Eigen::Triplet<double>> mt;
    for (int v = 0; v < n; ++v) mt.emplace_back(v, v, mesh.lumped_mass[v]);
    mass_diag.setFromTriplets(mt.begin(), mt.end());
  }
  precond = mesh.stiffness + mass_diag;  // sparsity pattern fixed across iterations
  solver.analyzePattern(precond);

  PartitionResult res;
  res.beta = beta;
  double step = opts.step0;
  double last_rel = std::numeric_limits<double>::infinity();
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const auto parts = detail::functional_parts(mesh, u, beta);
    const Eigen::MatrixXd grad = i_beta_gradient(mesh, u, beta);

    // Preconditioned direction, one elliptic solve per component.
    Eigen::MatrixXd raw(n, k);
    for (int i = 0; i < k; ++i) {
      Eigen::SparseMatrix<double> p = precond;
      if (beta > 0.0) {
        const Eigen::VectorXd d =
            beta * mesh.lumped_mass.cwiseProduct(parts.others_sq.col(i));
        for (int v = 0; v < n; ++v) p.coeffRef(v, v) += d[v];
      }
      solver.factorize(p);
      if (solver.info() != Eigen::Success)
        throw NonConvergence("minimize_I_beta: preconditioner factorization failed");
      raw.col(i) = solver.solve(grad.col(i));
    }

    // Project the direction onto the feasible tangent cone so that the Armijo
    // model matches the retracted decrease: average over the group, drop the
    // radial (renormalization) part, and freeze entries pinned at zero whose
    // update would point into the clamped region.
    Eigen::MatrixXd dir =
        equivariant_project(mesh, group, {raw}).values;
    for (int i = 0; i < k; ++i) {
      const double radial = mesh.lumped_mass.dot(dir.col(i).cwiseProduct(u.values.col(i)));
      dir.col(i) -= radial * u.values.col(i);  // unit M-mass components
      if (!opts.eigen_mode)
        for (int v = 0; v < n; ++v)
          if (u.values(v, i) == 0.0 && dir(v, i) > 0.0) dir(v, i) = 0.0;
    }
    const double grad_dot_dir = (grad.array() * dir.array()).sum();

    // Backtracking with sufficient decrease; retries from an enlarged step.
    step = std::min(4.0 * step, 16.0 * opts.step0);
    bool accepted = false;
    Field trial, best_trial;
    double ftrial = fval, fbest = fval;
    for (int half = 0; half < 60 && step > 1e-16; ++half, step *= 0.5) {
      trial.values = u.values - step * dir;
      try {
        trial = detail::retract(mesh, group, trial, opts.eigen_mode);
        ftrial = evaluate_I_beta(mesh, trial, beta);
      } catch (const ComponentCollapse&) {
        continue;
      }
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
      // Monotone fallback: keep the best decrease seen, if any.
      if (fbest < fval - 1e-14 * std::max(std::abs(fval), 1.0)) {
        trial = best_trial;
        ftrial = fbest;
      } else {
        converged = true;  // no admissible descent step remains
        break;
      }
    }
    last_rel = (fval - ftrial) / std::max(std::abs(fval), 1e-30);
    u = trial;
    fval = ftrial;
    if (last_rel < opts.tol) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged && last_rel > 100.0 * opts.tol)
    throw NonConvergence("minimize_I_beta: max_iters reached with residual " +
                         std::to_string(last_rel));

  const auto parts = detail::functional_parts(mesh, u, beta);
  res.field = u;
  res.ell_beta = fval;
  res.lambda_beta = (parts.dirichlet[0] + beta * parts.coupling[0]) / parts.mass[0];
  res.interaction = beta * parts.coupling.sum();
  res.iterations = it;
  res.residual = std::isfinite(last_rel) ? last_rel : 0.0;
  return res;
}

inline PartitionResult minimize_I_beta(const AdmissibleTriplet& triplet,
                                       const SphereMesh& mesh, double beta,
                                       const Field& init,
                                       const MinimizeOptions& opts = {}) {
  return minimize_I_beta(mesh, triplet.group, init, beta, opts);
}

namespace detail {

/// Segregated-competitor value of a relaxed state; +inf when segregation
/// annihilates a component (fully overlapping state).
inline double competitor_value(const SphereMesh& mesh, const Field& u) {
  try {
    return evaluate_I_infty(mesh, segregate(u));
  } catch (const ZeroComponent&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

struct SweepOptions {
  int n_seeds = 3;
  double noise_rel = 0.01;  // relative uniform perturbation for seeds > 0
  unsigned rng_seed = 12345;
  MinimizeOptions minimize;
};

struct EllEstimate {
  std::vector<double> betas;
  std::vector<double> ell_betas;
  std::vector<double> ell_uppers;          // per-beta segregated competitor value
  std::vector<double> max_scaled_products; // per-beta max_v beta^{1/2} u_i u_j
  double ell_upper = 0.0;        // best segregated competitor across the sweep
  double ell_extrapolated = 0.0;
  double fit_slope = 0.0;        // log(ell_upper - ell_beta) vs log(beta), upper half
  double lambda_extrapolated = 0.0;  // beta -> inf limit of lambda_beta
  int best_seed = 0;
  std::vector<PartitionResult> results;  // schedule of the best seed
};

/// Warm-started continuation over an increasing beta schedule, repeated from
/// perturbed starts (seed 0 is the unperturbed initial field); the lowest
/// segregated-competitor value wins. The slope of log(ell_upper - ell_beta)
/// against log(beta) over the upper half of the schedule tracks the
/// penalization convergence rate.
inline EllEstimate beta_sweep(const AdmissibleTriplet& triplet, const SphereMesh& mesh,
                              const std::vector<double>& betas, const Field& start,
                              const SweepOptions& opts = {}) {
  if (betas.empty()) throw Error("beta_sweep: empty schedule");
  for (std::size_t i = 0; i + 1 < betas.size(); ++i)
    if (betas[i + 1] <= betas[i] || betas[i] <= 0.0)
      throw Error("beta_sweep: schedule must be positive and strictly increasing");

  EllEstimate best;
  best.ell_upper = std::numeric_limits<double>::infinity();
  std::mt19937 rng(opts.rng_seed);
  for (int seed = 0; seed < opts.n_seeds; ++seed) {
    Field u0 = start;
    if (seed > 0) {
      std::uniform_real_distribution<double> noise(-opts.noise_rel, opts.noise_rel);
      const double amp = u0.values.cwiseAbs().maxCoeff();
      for (int i = 0; i < u0.values.size(); ++i) u0.values(i) += amp * noise(rng);
      u0 = clamp_nonnegative(u0);
    }
    std::vector<PartitionResult> results;
    double seed_best = std::numeric_limits<double>::infinity();
    Field u = u0;
    bool failed = false;
    for (double beta : betas) {
      // Run both the warm-started solve and a fresh solve from the initial
      // field and keep the lower value. The warm chain can get stuck on the
      // symmetric overlapping branch once beta grows (its value keeps rising
      // with beta), while descent from the segregated initial field can never
      // exceed the initial value, so the fresh solve caps every entry.
      PartitionResult r;
      bool have = false;
      for (const Field* init : {&u, &u0}) {
        try {
          PartitionResult cand =
              minimize_I_beta(mesh, triplet.group, *init, beta, opts.minimize);
          if (!have || cand.ell_beta < r.ell_beta) r = std::move(cand);
          have = true;
        } catch (const ComponentCollapse&) {
        }
      }
      if (!have) {
        failed = true;
        break;
      }
      u = r.field;
      seed_best = std::min(seed_best, detail::competitor_value(mesh, r.field));
      results.push_back(std::move(r));
    }
    if (failed || results.empty()) continue;
    if (seed_best < best.ell_upper) {
      best.ell_upper = seed_best;
      best.best_seed = seed;
      best.results = std::move(results);
    }
  }
  if (best.results.empty())
    throw NonConvergence("beta_sweep: every seed lost a component");

  best.ell_extrapolated = best.ell_upper;
  for (const auto& r : best.results) {
    best.betas.push_back(r.beta);
    best.ell_betas.push_back(r.ell_beta);
    best.ell_uppers.push_back(detail::competitor_value(mesh, r.field));
    double msp = 0.0;
    for (int i = 0; i < r.field.k(); ++i)
      for (int j = i + 1; j < r.field.k(); ++j)
        msp = std::max(msp, std::sqrt(r.beta) * r.field.values.col(i)
                                                    .cwiseProduct(r.field.values.col(j))
                                                    .maxCoeff());
    best.max_scaled_products.push_back(msp);
  }

  // Rate fit over the upper half of the schedule.
  std::vector<double> lx, ly;
  for (std::size_t i = best.betas.size() / 2; i < best.betas.size(); ++i) {
    const double gap = best.ell_upper - best.ell_betas[i];
    if (gap > 1e-14) {
      lx.push_back(std::log(best.betas[i]));
      ly.push_back(std::log(gap));
    }
  }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    best.fit_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }

  // Multiplier limit via Richardson extrapolation in beta^{-1/4}. The
  // multiplier converges at the same rate as the value gap, so a least-squares
  // fit of lambda_beta against beta^{-1/4} over the upper half of the schedule
  // recovers the limiting value far better than the last entry alone.
  {
    std::vector<double> bx, by;
    for (std::size_t i = best.betas.size() / 2; i < best.betas.size(); ++i) {
      bx.push_back(std::pow(best.betas[i], -0.25));
      by.push_back(best.results[i].lambda_beta);
    }
    if (bx.size() >= 2) {
      const double n = static_cast<double>(bx.size());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < bx.size(); ++i) {
        sx += bx[i];
        sy += by[i];
        sxx += bx[i] * bx[i];
        sxy += bx[i] * by[i];
      }
      // Intercept of the fit at beta^{-1/4} = 0.
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      best.lambda_extrapolated = (sy - slope * sx) / n;
    } else {
      best.lambda_extrapolated = best.results.back().lambda_beta;
    }
  }
  return best;
}

struct InteractionBoundReport {
  std::vector<double> betas;
  std::vector<double> max_scaled_products;  // max_v beta^{1/2} u_i u_j per beta
  std::vector<double> interaction_masses;   // max_{i<j} beta int u_i^2 u_j^2 per beta
  bool scaled_product_bounded = false;
  bool interaction_vanishing = false;  // decreasing along the final entries
};

/// Tracks the two penalization decay statements along a sweep: the scaled
/// pointwise product stays bounded across the schedule, and the interaction
/// mass decreases toward the end of it.
inline InteractionBoundReport interaction_bound_check(
    const SphereMesh& mesh, const std::vector<PartitionResult>& results,
    double slack = 3.0) {
  if (results.size() < 2)
    throw InsufficientRange("interaction_bound_check: need >= 2 results");
  InteractionBoundReport rep;
  for (const auto& r : results) {
    double msp = 0.0, mim = 0.0;
    for (int i = 0; i < r.field.k(); ++i)
      for (int j = i + 1; j < r.field.k(); ++j) {
        const Eigen::VectorXd prod =
            r.field.values.col(i).cwiseProduct(r.field.values.col(j));
        msp = std::max(msp, std::sqrt(r.beta) * prod.maxCoeff());
        mim = std::max(mim, r.beta * mesh.lumped_mass.dot(prod.cwiseAbs2()));
      }
    rep.betas.push_back(r.beta);
    rep.max_scaled_products.push_back(msp);
    rep.interaction_masses.push_back(mim);
  }
  const double early = std::max(rep.max_scaled_products.front(), 1e-12);
  rep.scaled_product_bounded = true;
  for (double v : rep.max_scaled_products)
    if (v > slack * early) rep.scaled_product_bounded = false;
  rep.interaction_vanishing = true;
  for (std::size_t i = rep.interaction_masses.size() / 2;
       i + 1 < rep.interaction_masses.size(); ++i)
    if (rep.interaction_masses[i + 1] >= rep.interaction_masses[i])
      rep.interaction_vanishing = false;
  return rep;
}

/// Relative deviation of the converged multiplier from ell_ref(ell_ref + N - 2).
inline double lambda_identity_check(const PartitionResult& result, double ell_ref,
                                    int ambient_dim) {
  const double target = eigenvalue_of_exponent(ambient_dim, ell_ref);
  return std::abs(result.lambda_beta - target) / std::max(target, 1e-30);
}

}  // namespace equipart
