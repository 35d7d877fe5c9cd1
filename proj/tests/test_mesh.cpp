#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "equipart/field.hpp"
#include "equipart/mesh.hpp"

using namespace equipart;
using std::numbers::pi;

namespace {

Eigen::VectorXd sample(const SphereMesh& mesh,
                       const std::function<double(const Eigen::VectorXd&)>& f) {
  Eigen::VectorXd v(mesh.n_vertices());
  for (int i = 0; i < mesh.n_vertices(); ++i)
    v[i] = f(mesh.vertices.row(i).transpose());
  return v;
}

double smallest_nonzero_eigenvalue(const SphereMesh& mesh) {
  const int n = mesh.n_vertices();
  const Eigen::VectorXd s = mesh.lumped_mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a =
      s.asDiagonal() * Eigen::MatrixXd(mesh.stiffness) * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()[i] > 1e-8) return es.eigenvalues()[i];
  return 0.0;
}

}  // namespace

TEST_CASE("circle mesh basics") {
  const SphereMesh mesh = build_circle_mesh(1024);
  CHECK(mesh.total_mass() == Catch::Approx(2 * pi).epsilon(1e-3));
  for (int i = 0; i < mesh.n_vertices(); ++i)
    CHECK(mesh.vertices.row(i).norm() == Catch::Approx(1.0).margin(1e-12));
  // Constants are harmonic.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.n_vertices());
  CHECK((mesh.stiffness * ones).cwiseAbs().maxCoeff() < 1e-10);
  // Rayleigh quotients of sampled harmonics.
  const Eigen::VectorXd c1 = sample(mesh, [](const Eigen::VectorXd& x) { return x[0]; });
  CHECK(rayleigh(mesh, c1) == Catch::Approx(1.0).margin(1e-4));
  const Eigen::VectorXd c3 = sample(mesh, [](const Eigen::VectorXd& x) {
    return std::cos(3 * std::atan2(x[1], x[0]));
  });
  CHECK(rayleigh(mesh, c3) == Catch::Approx(9.0).margin(1e-3));
}

TEST_CASE("circle pencil eigenvalue") {
  const SphereMesh mesh = build_circle_mesh(128);
  CHECK(smallest_nonzero_eigenvalue(mesh) == Catch::Approx(1.0).margin(2e-3));
}

TEST_CASE("icosphere combinatorics and mass") {
  const SphereMesh m0 = build_icosphere_mesh(0);
  CHECK(m0.n_vertices() == 12);
  CHECK(m0.cells.rows() == 20);
  for (int level : {2, 3}) {
    const SphereMesh m = build_icosphere_mesh(level);
    CHECK(m.n_vertices() == 10 * (1 << (2 * level)) + 2);
    CHECK(m.total_mass() == Catch::Approx(4 * pi).epsilon(1e-3));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_vertices());
    CHECK((m.stiffness * ones).cwiseAbs().maxCoeff() < 1e-10);
  }
  const SphereMesh oc = build_icosphere_mesh(2, SphereBase::octahedron);
  CHECK(oc.n_vertices() == 4 * 16 + 2);
  CHECK(oc.total_mass() == Catch::Approx(4 * pi).epsilon(1e-3));
}

TEST_CASE("octahedral level-4 mesh resolves xyz") {
  const SphereMesh m = build_icosphere_mesh(4, SphereBase::octahedron);
  const Eigen::VectorXd f =
      sample(m, [](const Eigen::VectorXd& x) { return x[0] * x[1] * x[2]; });
  CHECK(rayleigh(m, f) == Catch::Approx(12.0).epsilon(0.01));
}

TEST_CASE("latlong mesh mass and harmonics") {
  const SphereMesh m = build_latlong_mesh(48, 96);
  CHECK(m.total_mass() == Catch::Approx(4 * pi).epsilon(1e-3));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_vertices());
  CHECK((m.stiffness * ones).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::VectorXd z = sample(m, [](const Eigen::VectorXd& x) { return x[2]; });
  CHECK(rayleigh(m, z) == Catch::Approx(2.0).epsilon(0.01));
}

TEST_CASE("stiffness is positive semidefinite") {
  std::mt19937 rng(7);
  std::normal_distribution<double> dist;
  for (const SphereMesh& m :
       {build_circle_mesh(64), build_icosphere_mesh(2), build_latlong_mesh(12, 16)}) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd v(m.n_vertices());
      for (int i = 0; i < v.size(); ++i) v[i] = dist(rng);
      CHECK(v.dot(m.stiffness * v) >= -1e-10 * v.squaredNorm());
    }
  }
}

TEST_CASE("harmonic convergence rate on the icosphere") {
  // Rayleigh error of sampled degree-1..3 harmonics should decay ~ 4^-level.
  std::vector<double> errs;
  for (int level = 2; level <= 5; ++level) {
    const SphereMesh m = build_icosphere_mesh(level);
    const Eigen::VectorXd z = sample(m, [](const Eigen::VectorXd& x) { return x[2]; });
    const Eigen::VectorXd xy =
        sample(m, [](const Eigen::VectorXd& x) { return x[0] * x[1]; });
    const Eigen::VectorXd xyz =
        sample(m, [](const Eigen::VectorXd& x) { return x[0] * x[1] * x[2]; });
    errs.push_back(std::abs(rayleigh(m, z) - 2.0) / 2.0 +
                   std::abs(rayleigh(m, xy) - 6.0) / 6.0 +
                   std::abs(rayleigh(m, xyz) - 12.0) / 12.0);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    const double x = static_cast<double>(i), y = std::log(errs[i]) / std::log(4.0);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(errs.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope > -1.2);
  CHECK(slope < -0.8);
}

TEST_CASE("group-exact transports are permutations") {
  // Circle divisible by 2d with the dihedral reflections.
  SphereMesh mesh = build_circle_mesh(48);
  std::vector<Eigen::MatrixXd> gens;
  for (int j = 0; j < 3; ++j) gens.push_back(reflection_2d(pi * (0.5 + j) / 3.0));
  const SymmetryGroup g = group_closure(gens, 32);
  build_transports(mesh, g);
  REQUIRE(mesh.group_exact);
  for (const auto& [label, a] : mesh.transports) {
    for (int r = 0; r < a.outerSize(); ++r) {
      int nnz = 0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, r); it;
           ++it) {
        ++nnz;
        CHECK(it.value() == Catch::Approx(1.0).margin(1e-12));
      }
      CHECK(nnz == 1);
    }
  }
  // Identity element maps to the identity operator.
  CHECK((Eigen::MatrixXd(mesh.transport(0)) -
         Eigen::MatrixXd::Identity(mesh.n_vertices(), mesh.n_vertices()))
            .norm() == 0.0);
}

TEST_CASE("transport contravariance and row sums") {
  SphereMesh mesh = build_icosphere_mesh(3, SphereBase::octahedron);
  std::vector<Eigen::MatrixXd> gens;
  for (int a = 0; a < 3; ++a)
    gens.push_back(reflection_across_plane(Eigen::Vector3d::Unit(a)));
  const SymmetryGroup g = group_closure(gens, 16);
  build_transports(mesh, g);
  REQUIRE(mesh.group_exact);
  const int n = mesh.n_vertices();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  std::mt19937 rng(3);
  std::normal_distribution<double> dist;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  for (int a = 0; a < g.order(); ++a) {
    CHECK(((mesh.transport(a) * ones) - ones).cwiseAbs().maxCoeff() < 1e-12);
    for (int b = 0; b < g.order(); ++b) {
      // A_{g_a g_b} = A_{g_b} A_{g_a} (pullback reverses order).
      const Eigen::VectorXd lhs = mesh.transport(g.table[a][b]) * v;
      const Eigen::VectorXd rhs = mesh.transport(b) * (mesh.transport(a) * v);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("interpolating transports on an incompatible circle") {
  // n = 50 is not divisible by 2d = 6: rotation by pi/3 needs interpolation.
  SphereMesh mesh = build_circle_mesh(50);
  const SymmetryGroup g = group_closure({rotation_2d(pi / 3.0)}, 8);
  build_transports(mesh, g);
  CHECK(!mesh.group_exact);
  const int n = mesh.n_vertices();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  for (const auto& [label, a] : mesh.transports)
    CHECK(((a * ones) - ones).cwiseAbs().maxCoeff() < 1e-12);
  // Interpolation reproduces a smooth rotation-covariant function accurately.
  Eigen::VectorXd f(n), f_rot(n);
  for (int i = 0; i < n; ++i) {
    const double th = std::atan2(mesh.vertices(i, 1), mesh.vertices(i, 0));
    f[i] = std::cos(3 * th);
    f_rot[i] = std::cos(3 * (th + pi / 3.0));
  }
  CHECK(((mesh.transport(g.generator_labels[0]) * f) - f_rot).cwiseAbs().maxCoeff() <
        1e-3);
}

TEST_CASE("missing transport raises") {
  const SphereMesh mesh = build_circle_mesh(32);
  CHECK_THROWS_AS(mesh.transport(0), MissingTransport);
}

TEST_CASE("zero component raises in rayleigh") {
  const SphereMesh mesh = build_circle_mesh(32);
  CHECK_THROWS_AS(rayleigh(mesh, Eigen::VectorXd::Zero(32)), ZeroComponent);
}

TEST_CASE("mesh content hash discriminates") {
  CHECK(build_circle_mesh(32).content_hash() != build_circle_mesh(34).content_hash());
  CHECK(build_circle_mesh(32).content_hash() == build_circle_mesh(32).content_hash());
}
