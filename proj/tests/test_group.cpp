#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "equipart/group.hpp"

using namespace equipart;
using std::numbers::pi;

namespace {

std::vector<Eigen::MatrixXd> dihedral_reflections(int d) {
  std::vector<Eigen::MatrixXd> gens;
  for (int j = 0; j < d; ++j) gens.push_back(reflection_2d(pi * (0.5 + j) / d));
  return gens;
}

// Brute-force axioms check as an oracle, independent of the closure builder.
void check_group_axioms(const SymmetryGroup& g, double tol = 1e-9) {
  const int n = g.order();
  REQUIRE(g.elements[0].matrix.isIdentity(tol));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const Eigen::MatrixXd prod = g.elements[a].matrix * g.elements[b].matrix;
      REQUIRE((prod - g.elements[g.table[a][b]].matrix).norm() < tol);
    }
    REQUIRE(g.table[g.inverse_id(a)][a] == 0);
    REQUIRE((g.elements[a].matrix.transpose() * g.elements[a].matrix -
             Eigen::MatrixXd::Identity(g.dimension, g.dimension))
                .norm() < tol);
  }
}

}  // namespace

TEST_CASE("dihedral closures have order 2d") {
  for (int d = 1; d <= 5; ++d) {
    const SymmetryGroup g = group_closure(dihedral_reflections(d), 4 * d + 8);
    CHECK(g.order() == 2 * d);
    check_group_axioms(g);
  }
}

TEST_CASE("coordinate reflections on R^3 close to order 8") {
  std::vector<Eigen::MatrixXd> gens;
  for (int a = 0; a < 3; ++a)
    gens.push_back(reflection_across_plane(Eigen::Vector3d::Unit(a)));
  const SymmetryGroup g = group_closure(gens, 16);
  CHECK(g.order() == 8);
  check_group_axioms(g);
}

TEST_CASE("tetrahedral and cube reflection groups") {
  const std::vector<Eigen::MatrixXd> tetra = {
      reflection_across_plane(Eigen::Vector3d(0, 1, 1)),
      reflection_across_plane(Eigen::Vector3d(1, -1, 0)),
      reflection_across_plane(Eigen::Vector3d(0, 1, -1))};
  const SymmetryGroup gt = group_closure(tetra, 32);
  CHECK(gt.order() == 24);
  check_group_axioms(gt);

  std::vector<Eigen::MatrixXd> cube = tetra;
  cube.clear();
  for (int a = 0; a < 3; ++a)
    cube.push_back(reflection_across_plane(Eigen::Vector3d::Unit(a)));
  cube.push_back(reflection_across_plane(Eigen::Vector3d(1, -1, 0)));
  cube.push_back(reflection_across_plane(Eigen::Vector3d(0, 1, -1)));
  const SymmetryGroup gc = group_closure(cube, 96);
  CHECK(gc.order() == 48);
  check_group_axioms(gc);
}

TEST_CASE("closure failure modes") {
  // Irrational rotation never closes.
  CHECK_THROWS_AS(group_closure({rotation_2d(1.0)}, 32), ClosureOverflow);
  // Non-orthogonal generator.
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.3, 0.0, 1.0;
  CHECK_THROWS_AS(group_closure({bad}), NotOrthogonal);
}

TEST_CASE("orthogonality is preserved under long products") {
  // 120 products of a floating-point rotation stay orthogonal to 1e-12.
  const SymmetryGroup g = group_closure({rotation_2d(2 * pi / 120)}, 256, 1e-8);
  CHECK(g.order() == 120);
  for (const auto& e : g.elements)
    CHECK((e.matrix.transpose() * e.matrix - Eigen::MatrixXd::Identity(2, 2)).norm() <
          1e-12);
}

TEST_CASE("homomorphism extension and verification") {
  const SymmetryGroup g = group_closure(dihedral_reflections(3), 32);
  const SymmetryGroup gh =
      attach_homomorphism(g, 2, {{1, 0}, {1, 0}, {1, 0}});
  REQUIRE(gh.has_hom());
  CHECK(is_identity(gh.perm(0)));
  for (int a = 0; a < gh.order(); ++a)
    for (int b = 0; b < gh.order(); ++b)
      CHECK(gh.perm(gh.table[a][b]) == compose(gh.perm(a), gh.perm(b)));
}

TEST_CASE("non-homomorphic generator images are rejected") {
  // Order-3 rotation mapped to a transposition cannot extend.
  const SymmetryGroup c3 = group_closure({rotation_2d(2 * pi / 3)}, 8);
  REQUIRE(c3.order() == 3);
  CHECK_THROWS_AS(attach_homomorphism(c3, 2, {{1, 0}}), NotAHomomorphism);
  // Malformed image.
  CHECK_THROWS_AS(attach_homomorphism(c3, 2, {{0, 0}}), NotAHomomorphism);
}

TEST_CASE("permutation helpers") {
  CHECK(compose(Permutation{1, 2, 0}, Permutation{0, 2, 1}) == Permutation{1, 0, 2});
  CHECK(inverse(Permutation{1, 2, 0}) == Permutation{2, 0, 1});
  CHECK(cycle(4, {0, 1, 2, 3}) == Permutation{1, 2, 3, 0});
  CHECK(is_valid_permutation({2, 0, 1}));
  CHECK(!is_valid_permutation({2, 2, 1}));
}
