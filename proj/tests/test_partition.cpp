#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "equipart/catalog.hpp"
#include "equipart/partition.hpp"
#include "equipart/verify.hpp"

using namespace equipart;
using std::numbers::pi;

namespace {

struct Setup {
  CatalogEntry entry;
  SphereMesh mesh;
  Field witness;
};

Setup dihedral_setup(int d, int n) {
  Setup s{catalog_entry("dihedral2d(" + std::to_string(d) + ")"), build_circle_mesh(n),
          {}};
  build_transports(s.mesh, s.entry.group);
  s.witness = s.entry.witness(s.mesh);
  return s;
}

}  // namespace

TEST_CASE("half-circle sine pair evaluates to 1 at any beta") {
  Setup s = dihedral_setup(1, 512);
  Field u = Field::zero(s.mesh, 2);
  for (int v = 0; v < s.mesh.n_vertices(); ++v) {
    const double sine = s.mesh.vertices(v, 1);
    u.values(v, 0) = std::max(0.0, sine);
    u.values(v, 1) = std::max(0.0, -sine);
  }
  for (double beta : {0.0, 1.0, 400.0})
    CHECK(evaluate_I_beta(s.mesh, u, beta) == Catch::Approx(1.0).epsilon(1e-3));
  CHECK(evaluate_I_infty(s.mesh, u) == Catch::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("disjoint supports make I_beta independent of beta") {
  Setup s = dihedral_setup(3, 516);
  const double v0 = evaluate_I_beta(s.mesh, s.witness, 0.0);
  CHECK(evaluate_I_beta(s.mesh, s.witness, 1e4) == Catch::Approx(v0).margin(1e-13));
  CHECK(evaluate_I_infty(s.mesh, s.witness) == Catch::Approx(v0).margin(1e-13));
}

TEST_CASE("overlapping fields have infinite segregated value") {
  const SphereMesh mesh = build_circle_mesh(64);
  Field u = Field::zero(mesh, 2);
  u.values.setOnes();
  CHECK(std::isinf(evaluate_I_infty(mesh, u)));
}

TEST_CASE("gradient matches central finite differences") {
  Setup s = dihedral_setup(2, 64);
  std::mt19937 rng(17);
  std::normal_distribution<double> dist;
  const double eps = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Field u = Field::zero(s.mesh, 2);
    for (int i = 0; i < u.values.size(); ++i) u.values(i) = 0.5 + std::abs(dist(rng));
    u = normalize_components(s.mesh, equivariant_project(s.mesh, s.entry.group, u));
    Field d = Field::zero(s.mesh, 2);
    for (int i = 0; i < d.values.size(); ++i) d.values(i) = dist(rng);
    const double beta = trial % 2 ? 0.0 : 25.0;
    const Eigen::MatrixXd g = i_beta_gradient(s.mesh, u, beta);
    Field up = u, um = u;
    up.values += eps * d.values;
    um.values -= eps * d.values;
    const double fd =
        (evaluate_I_beta(s.mesh, up, beta) - evaluate_I_beta(s.mesh, um, beta)) /
        (2 * eps);
    const double an = (g.array() * d.values.array()).sum();
    CHECK(an == Catch::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("minimizer on the half-circle pair approaches 1") {
  Setup s = dihedral_setup(1, 256);
  const PartitionResult r =
      minimize_I_beta(s.mesh, s.entry.group, s.witness, 400.0);
  // Continuum value 1 minus an interface layer of order beta^{-1/4} ~ 0.22.
  CHECK(r.ell_beta > 0.8);
  CHECK(r.ell_beta < 1.0);
  CHECK(r.lambda_beta > -1e-8);
  // Unit masses and equivariance are maintained.
  for (int i = 0; i < 2; ++i)
    CHECK(s.mesh.mass_inner(r.field.values.col(i), r.field.values.col(i)) ==
          Catch::Approx(1.0).margin(1e-10));
  CHECK(equivariance_defect(s.mesh, s.entry.group, r.field) < 1e-8);
  // Segregated competitor upper-bounds the relaxed value.
  CHECK(evaluate_I_infty(s.mesh, segregate(r.field)) >= r.ell_beta - 1e-9);
}

TEST_CASE("beta = 0 descent matches the restricted eigensolve oracle") {
  for (int d : {1, 2}) {
    Setup s = dihedral_setup(d, 128);
    const double oracle =
        smallest_nontrivial_equivariant_eigenvalue(s.mesh, s.entry.group);
    // Continuum value is d^2; the discrete pencil should be close.
    CHECK(oracle == Catch::Approx(double(d) * d).epsilon(0.01));
    MinimizeOptions opts;
    opts.eigen_mode = true;
    opts.max_iters = 20000;
    opts.tol = 1e-13;
    const PartitionResult r = minimize_I_beta(s.mesh, s.entry.group, s.witness, 0.0, opts);
    const double target = gamma_exponent(2, oracle);
    CHECK(r.ell_beta == Catch::Approx(target).epsilon(1e-6));
  }
}

TEST_CASE("sweep on the smallest dihedral case") {
  Setup s = dihedral_setup(1, 256);
  SweepOptions opts;
  opts.n_seeds = 2;
  const EllEstimate est = beta_sweep(catalog_triplet(s.entry), s.mesh,
                                     {10.0, 40.0, 160.0, 640.0}, s.witness, opts);
  CHECK(est.ell_upper == Catch::Approx(1.0).epsilon(0.02));
  // ell_beta nondecreasing in beta, and below the competitor.
  for (std::size_t i = 0; i + 1 < est.ell_betas.size(); ++i)
    CHECK(est.ell_betas[i + 1] >= est.ell_betas[i] - 1e-6);
  for (double v : est.ell_betas) CHECK(v <= est.ell_upper + 1e-6);

  const InteractionBoundReport ib = interaction_bound_check(s.mesh, est.results);
  CHECK(ib.scaled_product_bounded);
  CHECK(ib.interaction_vanishing);
  // Boundedness of the scaled product between the last two betas.
  const double ratio = ib.max_scaled_products.back() /
                       ib.max_scaled_products[ib.max_scaled_products.size() - 2];
  CHECK(ratio > 0.3);
  CHECK(ratio < 3.0);

  // lambda converges like the beta gap; at beta = 640 the error is ~beta^{-1/4}.
  const double lam_err = lambda_identity_check(est.results.back(), 1.0, 2);
  CHECK(lam_err < 0.25);
}

TEST_CASE("error paths") {
  Setup s = dihedral_setup(1, 64);
  CHECK_THROWS_AS(minimize_I_beta(s.mesh, s.entry.group, s.witness, -1.0),
                  NegativeInput);
  MinimizeOptions bad;
  bad.eigen_mode = true;
  CHECK_THROWS_AS(minimize_I_beta(s.mesh, s.entry.group, s.witness, 10.0, bad), Error);
  CHECK_THROWS_AS(beta_sweep(catalog_triplet(s.entry), s.mesh, {10.0, 5.0}, s.witness),
                  Error);
  Field zero = Field::zero(s.mesh, 2);
  CHECK_THROWS_AS(evaluate_I_beta(s.mesh, zero, 1.0), ZeroComponent);
}
