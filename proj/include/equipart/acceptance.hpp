#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "equipart/ball.hpp"
#include "equipart/catalog.hpp"
#include "equipart/partition.hpp"
#include "equipart/verify.hpp"

namespace equipart {

struct CriterionOutcome {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string details;
  double seconds = 0.0;
};

/// Runs the numbered acceptance criteria. Results that feed several criteria
/// (the level-4 sweep, the ball solve at beta 400) are computed once and
/// cached. In quick mode only the circle-based criteria run; the rest are
/// reported as skipped.
class AcceptanceRunner {
 public:
  explicit AcceptanceRunner(bool quick = false) : quick_(quick) {}

  /// Runs all criteria (or the listed subset) in order, invoking the callback
  /// after each one.
  std::vector<CriterionOutcome> run(
      const std::vector<int>& only = {},
      const std::function<void(const CriterionOutcome&)>& on_done = {}) {
    std::vector<CriterionOutcome> out;
    for (int id = 1; id <= 12; ++id) {
      if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
        continue;
      CriterionOutcome res;
      res.id = id;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        res = dispatch(id);
      } catch (const std::exception& ex) {
        res.name = criterion_name(id);
        res.pass = false;
        res.details = std::string("exception: ") + ex.what();
      }
      res.id = id;
      res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  t0)
                        .count();
      total_seconds_ += res.seconds;
      if (on_done) on_done(res);
      out.push_back(std::move(res));
    }
    return out;
  }

  static std::string criterion_name(int id) {
    switch (id) {
      case 1: return "circle sector values d=1,2,3";
      case 2: return "coordinate-planes value on the sphere";
      case 3: return "prism value";
      case 4: return "three-lune value";
      case 5: return "multiplier limit identity";
      case 6: return "gap sign/monotonicity and interaction decay";
      case 7: return "frequency monotonicity on the ball";
      case 8: return "blow-up normalization and frequency bound";
      case 9: return "doubling bound";
      case 10: return "weighted-product drift constant";
      case 11: return "zero-coupling eigensolve equivalence";
      case 12: return "invariant suite and runtime budget";
      default: return "unknown";
    }
  }

 private:
  bool quick_ = false;
  double total_seconds_ = 0.0;
  std::optional<EllEstimate> xyz_sweep_;
  std::optional<BallField> xyz_ball_;
  std::optional<BallField> xyz_rescaled_;
  std::optional<RadialDiagnostics> xyz_rescaled_diag_;
  std::optional<SphereMesh> xyz_mesh_;

  static std::vector<double> schedule() { return {10, 40, 160, 640, 2560}; }

  CriterionOutcome skip(int id) {
    CriterionOutcome res;
    res.id = id;
    res.name = criterion_name(id);
    res.skipped = true;
    res.pass = true;
    res.details = "skipped in quick mode (needs the sphere pipeline)";
    return res;
  }

  CriterionOutcome dispatch(int id) {
    switch (id) {
      case 1: return c1();
      case 2: return quick_ ? skip(2) : c_value("xyz_r3", 3.0, 0.03, 600.0, 2);
      case 3: return quick_ ? skip(3) : c_value("prism3d(2)", 3.0, 0.03, 600.0, 3);
      case 4: return quick_ ? skip(4) : c_value("y3_s2", 1.5, 0.03, 600.0, 4);
      case 5: return quick_ ? skip(5) : c5();
      case 6: return quick_ ? skip(6) : c6();
      case 7: return quick_ ? skip(7) : c7();
      case 8: return quick_ ? skip(8) : c8();
      case 9: return quick_ ? skip(9) : c9();
      case 10: return c10();
      case 11: return c11();
      case 12: return c12();
    }
    throw Error("unknown criterion id");
  }

  EllEstimate sweep_entry(const CatalogEntry& entry, const SphereMesh& mesh) {
    const AdmissibleTriplet triplet = catalog_triplet(entry);
    return beta_sweep(triplet, mesh, schedule(), entry.witness(mesh));
  }

  const EllEstimate& xyz() {
    if (!xyz_sweep_) {
      const CatalogEntry entry = catalog_entry("xyz_r3");
      xyz_mesh_ = entry.default_mesh();
      build_transports(*xyz_mesh_, entry.group);
      xyz_sweep_ = sweep_entry(entry, *xyz_mesh_);
    }
    return *xyz_sweep_;
  }

  CriterionOutcome c1() {
    CriterionOutcome res;
    res.name = criterion_name(1);
    res.pass = true;
    std::ostringstream os;
    for (int d = 1; d <= 3; ++d) {
      const auto t0 = std::chrono::steady_clock::now();
      CatalogEntry entry = catalog_entry("dihedral2d(" + std::to_string(d) + ")");
      SphereMesh mesh = build_circle_mesh(2048);
      build_transports(mesh, entry.group);
      const EllEstimate est = sweep_entry(entry, mesh);
      const double t =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      const double rel = std::abs(est.ell_upper - d) / d;
      os << "d=" << d << ": ell=" << est.ell_upper << " rel_err=" << rel
         << " time=" << t << "s; ";
      if (rel > 0.005 || t >= 60.0) res.pass = false;
    }
    res.details = os.str();
    return res;
  }

  CriterionOutcome c_value(const std::string& id, double ref, double tol,
                           double budget, int crit) {
    CriterionOutcome res;
    res.name = criterion_name(crit);
    const auto t0 = std::chrono::steady_clock::now();
    EllEstimate est;
    if (id == "xyz_r3") {
      est = xyz();
    } else {
      CatalogEntry entry = catalog_entry(id);
      SphereMesh mesh = entry.default_mesh();
      build_transports(mesh, entry.group);
      est = sweep_entry(entry, mesh);
    }
    const double t =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rel = std::abs(est.ell_upper - ref) / ref;
    res.pass = rel <= tol && t < budget;
    std::ostringstream os;
    os << id << ": ell=" << est.ell_upper << " ref=" << ref << " rel_err=" << rel
       << " time=" << t << "s";
    res.details = os.str();
    return res;
  }

  CriterionOutcome c5() {
    CriterionOutcome res;
    res.name = criterion_name(5);
    const EllEstimate& est = xyz();
    // The pointwise multiplier at the top of the schedule converges only at
    // the same slow rate as the value gap, so the limit identity is tested on
    // the extrapolation of the multiplier in beta^{-1/4} over the sweep tail.
    const double target = 12.0;
    const double rel = std::abs(est.lambda_extrapolated - target) / target;
    res.pass = rel < 0.05;
    std::ostringstream os;
    os << "lambda_extrapolated=" << est.lambda_extrapolated << " target=" << target
       << " rel_err=" << rel << " (pointwise lambda at beta=2560: "
       << est.results.back().lambda_beta << ")";
    res.details = os.str();
    return res;
  }

  CriterionOutcome c6() {
    CriterionOutcome res;
    res.name = criterion_name(6);
    const EllEstimate& est = xyz();
    bool gaps_positive = true, gaps_mono = true, inter_dec = true;
    const std::size_t nb = est.betas.size();
    for (std::size_t i = 0; i < nb; ++i)
      if (est.ell_upper - est.ell_betas[i] <= 0.0) gaps_positive = false;
    for (std::size_t i = nb - 3; i + 1 < nb; ++i) {
      if (est.ell_upper - est.ell_betas[i + 1] >
          est.ell_upper - est.ell_betas[i] + 1e-9)
        gaps_mono = false;
      if (est.results[i + 1].interaction >= est.results[i].interaction)
        inter_dec = false;
    }
    res.pass = gaps_positive && gaps_mono && inter_dec;
    std::ostringstream os;
    os << "gaps_positive=" << gaps_positive << " gaps_nonincreasing=" << gaps_mono
       << " interaction_decreasing=" << inter_dec << "; gaps(last3)=";
    for (std::size_t i = nb - 3; i < nb; ++i)
      os << est.ell_upper - est.ell_betas[i] << " ";
    os << "interaction(last3)=";
    for (std::size_t i = nb - 3; i < nb; ++i) os << est.results[i].interaction << " ";
    res.details = os.str();
    return res;
  }

  const BallField& ball() {
    if (!xyz_ball_) {
      const CatalogEntry entry = catalog_entry("xyz_r3");
      if (!xyz_mesh_) xyz();  // builds mesh + transports
      // Boundary trace: the relaxed minimizer at beta = 400, reached by a
      // short warm-started continuation from the witness.
      SweepOptions sopts;
      sopts.n_seeds = 1;
      const EllEstimate pre = beta_sweep(catalog_triplet(entry), *xyz_mesh_,
                                         {10, 40, 160, 400},
                                         entry.witness(*xyz_mesh_), sopts);
      xyz_ball_ = solve_ball(catalog_triplet(entry), *xyz_mesh_, 400.0,
                             pre.results.back().field, build_ball_grid(96));
    }
    return *xyz_ball_;
  }

  const RadialDiagnostics& rescaled_diag() {
    if (!xyz_rescaled_diag_) {
      const double rb = find_r_beta(ball());
      xyz_rescaled_ = blow_up_rescale(ball(), rb);
      xyz_rescaled_diag_ = diagnostics(*xyz_rescaled_);
    }
    return *xyz_rescaled_diag_;
  }

  CriterionOutcome c7() {
    CriterionOutcome res;
    res.name = criterion_name(7);
    const RadialDiagnostics diag = diagnostics(ball());
    const MonotonicityReport rep = almgren_monotonicity_check(diag, 0.05, 1.0);
    res.pass = rep.pass;
    std::ostringstream os;
    os << "max_violation=" << rep.max_violation << " threshold=" << rep.threshold
       << " N(1)-N(0.05)=" << rep.range;
    res.details = os.str();
    return res;
  }

  CriterionOutcome c8() {
    CriterionOutcome res;
    res.name = criterion_name(8);
    const RadialDiagnostics& dv = rescaled_diag();
    const double h1 = h_at(dv, 1.0);
    double nmax = 0.0;
    for (int j = 1; j < dv.radii.size(); ++j) nmax = std::max(nmax, dv.Nq[j]);
    res.pass = std::abs(h1 - 1.0) <= 1e-6 && nmax <= 3.0 * 1.02;
    std::ostringstream os;
    os << "H(V,1)=" << h1 << " max N(V,r)=" << nmax << " cap=" << 3.0 * 1.02;
    res.details = os.str();
    return res;
  }

  CriterionOutcome c9() {
    CriterionOutcome res;
    res.name = criterion_name(9);
    const RadialDiagnostics& dv = rescaled_diag();
    const double cap = std::exp(3.0) * 1.02;
    double worst = 0.0;
    for (int j = 0; j < dv.radii.size(); ++j)
      if (dv.radii[j] >= 1.0)
        worst = std::max(worst, dv.H[j] / std::pow(dv.radii[j], 6.0));
    worst = std::max(worst, h_at(dv, 1.0));
    res.pass = worst <= cap;
    std::ostringstream os;
    os << "max H(V,R)/R^6 = " << worst << " cap=" << cap;
    res.details = os.str();
    return res;
  }

  CriterionOutcome c10() {
    CriterionOutcome res;
    res.name = criterion_name(10);
    std::ostringstream os;
    // Exact segregated degree-1 oracle on the circle: drift constant 0.
    CatalogEntry entry = catalog_entry("dihedral2d(1)");
    SphereMesh mesh = build_circle_mesh(512);
    build_transports(mesh, entry.group);
    Field phi = entry.witness(mesh);
    double tot = 0.0;
    for (int i = 0; i < phi.k(); ++i)
      tot += mesh.mass_inner(phi.values.col(i), phi.values.col(i));
    phi.values /= std::sqrt(tot);
    BallField oracle = homogeneous_extension(mesh, phi, 1.0, build_ball_grid(96, 2.5));
    oracle.beta = 1.0;
    const ACFReport oc = acf_check(diagnostics(oracle), 1.0, 1.0);
    os << "oracle C=" << oc.C;
    bool pass = oc.C <= 1e-6;
    if (!quick_) {
      const ACFReport rc = acf_check(rescaled_diag(), 3.0, 1.0, 50.0);
      os << "; rescaled solve C=" << rc.C << " cap=50";
      pass = pass && rc.pass;
    } else {
      os << "; rescaled solve skipped in quick mode";
    }
    res.pass = pass;
    res.details = os.str();
    return res;
  }

  CriterionOutcome c11() {
    CriterionOutcome res;
    res.name = criterion_name(11);
    res.pass = true;
    std::ostringstream os;
    for (int d = 1; d <= 3; ++d) {
      CatalogEntry entry = catalog_entry("dihedral2d(" + std::to_string(d) + ")");
      SphereMesh mesh = build_circle_mesh(132);  // divisible by 2d for d=1,2,3
      build_transports(mesh, entry.group);
      const double oracle = smallest_nontrivial_equivariant_eigenvalue(mesh, entry.group);
      MinimizeOptions opts;
      opts.eigen_mode = true;
      opts.max_iters = 50000;
      opts.tol = 1e-13;
      const PartitionResult r =
          minimize_I_beta(mesh, entry.group, entry.witness(mesh), 0.0, opts);
      const double target = gamma_exponent(2, oracle);
      const double rel = std::abs(r.ell_beta - target) / target;
      os << "d=" << d << ": descent=" << r.ell_beta << " eigensolve=" << target
         << " rel=" << rel << "; ";
      if (rel > 1e-6) res.pass = false;
    }
    res.details = os.str();
    return res;
  }

  CriterionOutcome c12() {
    CriterionOutcome res;
    res.name = criterion_name(12);
    std::ostringstream os;
    bool pass = true;

    // Exponent map inverse identity on a grid.
    double gmax = 0.0;
    for (int N : {2, 3})
      for (double t = 0.0; t <= 64.0; t += 0.37) {
        const double g = gamma_exponent(N, t);
        gmax = std::max(gmax, std::abs(g * (g + N - 2) - t));
      }
    os << "gamma_inverse_max_dev=" << gmax;
    if (gmax > 1e-12) pass = false;

    // Group closure orders.
    {
      std::vector<Eigen::MatrixXd> gens;
      for (int j = 0; j < 3; ++j)
        gens.push_back(reflection_2d(std::numbers::pi * (0.5 + j) / 3.0));
      const bool ok = group_closure(gens, 16).order() == 6;
      os << " closure_dihedral3=" << ok;
      pass = pass && ok;
    }

    // Projector idempotence.
    {
      CatalogEntry entry = catalog_entry("dihedral2d(2)");
      SphereMesh mesh = build_circle_mesh(256);
      build_transports(mesh, entry.group);
      std::mt19937 rng(5);
      std::normal_distribution<double> dist;
      Field u = Field::zero(mesh, 2);
      for (int i = 0; i < u.values.size(); ++i) u.values(i) = dist(rng);
      const Field p1 = equivariant_project(mesh, entry.group, u);
      const Field p2 = equivariant_project(mesh, entry.group, p1);
      const double dev = (p1.values - p2.values).cwiseAbs().maxCoeff();
      os << " projector_idem_dev=" << dev;
      if (dev > 1e-12) pass = false;

      // Gradient vs central finite differences.
      double worst = 0.0;
      for (int trial = 0; trial < 20; ++trial) {
        Field x = Field::zero(mesh, 2);
        for (int i = 0; i < x.values.size(); ++i) x.values(i) = 0.5 + std::abs(dist(rng));
        x = normalize_components(mesh, equivariant_project(mesh, entry.group, x));
        Field dvec = Field::zero(mesh, 2);
        for (int i = 0; i < dvec.values.size(); ++i) dvec.values(i) = dist(rng);
        const double beta = trial % 2 ? 0.0 : 25.0;
        const Eigen::MatrixXd g = i_beta_gradient(mesh, x, beta);
        Field up = x, um = x;
        const double eps = 1e-5;
        up.values += eps * dvec.values;
        um.values -= eps * dvec.values;
        const double fd =
            (evaluate_I_beta(mesh, up, beta) - evaluate_I_beta(mesh, um, beta)) /
            (2 * eps);
        const double an = (g.array() * dvec.values.array()).sum();
        worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-12));
      }
      os << " grad_fd_rel=" << worst;
      if (worst > 1e-5) pass = false;

      // Determinism: the same sweep twice gives bitwise-identical output.
      const AdmissibleTriplet triplet = catalog_triplet(entry);
      const Field w0 = entry.witness(mesh);
      const EllEstimate e1 = beta_sweep(triplet, mesh, {10, 40}, w0);
      const EllEstimate e2 = beta_sweep(triplet, mesh, {10, 40}, w0);
      const bool deterministic =
          e1.ell_upper == e2.ell_upper &&
          e1.results.back().field.values == e2.results.back().field.values;
      os << " deterministic=" << deterministic;
      pass = pass && deterministic;
    }

    const double budget_min = (total_seconds_ + 5.0) / 60.0;
    os << " total_runtime_min=" << budget_min;
    if (budget_min >= 45.0) pass = false;

    res.pass = pass;
    res.details = os.str();
    return res;
  }
};

}  // namespace equipart
