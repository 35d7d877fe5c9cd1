#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <sstream>
#include <vector>

#include "equipart/errors.hpp"
#include "equipart/permutation.hpp"

namespace equipart {

struct GroupElement {
  Eigen::MatrixXd matrix;  // N x N orthogonal
  int label = -1;          // index into SymmetryGroup::elements
};

/// A finite subgroup of O(N) given by explicit matrices, with its composition
/// table and (optionally) a permutation homomorphism into S_k.
///
/// elements[0] is always the identity. Each non-generator element records the
/// pair of earlier elements whose product created it, so that a homomorphism
/// prescribed on the generators extends to the whole group.
struct SymmetryGroup {
  int dimension = 0;
  std::vector<GroupElement> elements;
  std::vector<std::vector<int>> table;         // table[a][b] = label of a*b
  std::vector<int> generator_labels;           // labels of the input generators
  std::vector<std::pair<int, int>> provenance; // element i == elements[first]*elements[second]; (-1,-1) for id/generators
  int k = 0;                                   // 0 until a homomorphism is attached
  std::vector<Permutation> hom;                // per element, once attached

  int order() const { return static_cast<int>(elements.size()); }

  int compose_ids(int a, int b) const { return table[a][b]; }

  int inverse_id(int a) const {
    for (int b = 0; b < order(); ++b)
      if (table[a][b] == 0) return b;
    throw Error("SymmetryGroup: element without inverse (corrupt table)");
  }

  bool has_hom() const { return k > 0; }

  const Permutation& perm(int label) const { return hom[label]; }
};

namespace detail {

inline double frobenius_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm();
}

inline bool is_orthogonal(const Eigen::MatrixXd& m, double tol) {
  const int n = static_cast<int>(m.rows());
  return m.cols() == n &&
         (m.transpose() * m - Eigen::MatrixXd::Identity(n, n)).norm() <= tol;
}

/// One Newton step of the polar iteration X <- (X + X^-T)/2; for a matrix
/// already orthogonal to ~1e-8 this lands within machine precision.
inline Eigen::MatrixXd reorthonormalize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose().inverse());
}

inline int find_element(const std::vector<GroupElement>& elems, const Eigen::MatrixXd& m,
                        double tol) {
  for (const auto& e : elems)
    if (frobenius_distance(e.matrix, m) < tol) return e.label;
  return -1;
}

}  // namespace detail

/// Multiplicative closure of a generating set of orthogonal matrices.
/// Element matching uses Frobenius distance < tol; every newly found product
/// is re-orthonormalized before insertion so that repeated composition of
/// floating-point rotations cannot drift.
inline SymmetryGroup group_closure(const std::vector<Eigen::MatrixXd>& generators,
                                   int max_order = 64, double tol = 1e-10) {
  if (generators.empty()) throw Error("group_closure: no generators");
  if (max_order < 1) throw Error("group_closure: max_order must be >= 1");
  const int n = static_cast<int>(generators.front().rows());

  SymmetryGroup g;
  g.dimension = n;
  auto push = [&](const Eigen::MatrixXd& m, std::pair<int, int> prov) -> int {
    if (g.order() >= max_order)
      throw ClosureOverflow("group_closure: closure exceeds max_order = " +
                            std::to_string(max_order));
    GroupElement e;
    e.matrix = detail::reorthonormalize(m);
    e.label = g.order();
    g.elements.push_back(std::move(e));
    g.provenance.push_back(prov);
    return g.order() - 1;
  };

  push(Eigen::MatrixXd::Identity(n, n), {-1, -1});
  for (const auto& gen : generators) {
    if (!detail::is_orthogonal(gen, std::max(tol, 1e-9)))
      throw NotOrthogonal("group_closure: generator is not orthogonal within tolerance");
    if (detail::find_element(g.elements, gen, tol) < 0)
      g.generator_labels.push_back(push(gen, {-1, -1}));
    else
      g.generator_labels.push_back(detail::find_element(g.elements, gen, tol));
  }

  // Breadth-first products until closed.
  std::size_t frontier = 0;
  while (frontier < g.elements.size()) {
    const std::size_t sz = g.elements.size();
    for (std::size_t a = frontier; a < sz; ++a)
      for (std::size_t b = 0; b < g.elements.size(); ++b) {
        const Eigen::MatrixXd prod = g.elements[a].matrix * g.elements[b].matrix;
        if (detail::find_element(g.elements, prod, tol) < 0)
          push(prod, {static_cast<int>(a), static_cast<int>(b)});
      }
    frontier = sz;
  }

  // Composition table.
  g.table.assign(g.order(), std::vector<int>(g.order(), -1));
  for (int a = 0; a < g.order(); ++a)
    for (int b = 0; b < g.order(); ++b) {
      const int c = detail::find_element(g.elements, g.elements[a].matrix * g.elements[b].matrix, tol);
      if (c < 0) throw Error("group_closure: product escaped the closed set");
      g.table[a][b] = c;
    }
  return g;
}

/// Extends permutation images prescribed on the generators to the whole group
/// via the product provenance recorded during closure, then verifies the
/// homomorphism property on all pairs.
///
/// generator_images is indexed by generator slot (position in the generator
/// list passed to group_closure).
inline SymmetryGroup attach_homomorphism(SymmetryGroup g, int k,
                                         const std::vector<Permutation>& generator_images) {
  if (k < 1) throw Error("attach_homomorphism: k must be >= 1");
  if (generator_images.size() != g.generator_labels.size())
    throw Error("attach_homomorphism: one image per generator required");
  for (const auto& p : generator_images)
    if (static_cast<int>(p.size()) != k || !is_valid_permutation(p))
      throw NotAHomomorphism("attach_homomorphism: invalid generator image");

  g.k = k;
  g.hom.assign(g.order(), {});
  g.hom[0] = identity_permutation(k);
  for (std::size_t s = 0; s < g.generator_labels.size(); ++s)
    g.hom[g.generator_labels[s]] = generator_images[s];
  for (int e = 0; e < g.order(); ++e) {
    if (!g.hom[e].empty()) continue;
    const auto [a, b] = g.provenance[e];
    if (a < 0 || g.hom[a].empty() || g.hom[b].empty())
      throw Error("attach_homomorphism: element without resolvable word");
    g.hom[e] = compose(g.hom[a], g.hom[b]);
  }
  for (int a = 0; a < g.order(); ++a)
    for (int b = 0; b < g.order(); ++b)
      if (g.hom[g.table[a][b]] != compose(g.hom[a], g.hom[b])) {
        std::ostringstream msg;
        msg << "attach_homomorphism: hom(g" << a << " g" << b
            << ") != hom(g" << a << ") hom(g" << b << ")";
        throw NotAHomomorphism(msg.str());
      }
  return g;
}

// Small matrix builders for the catalog and tests.

inline Eigen::MatrixXd reflection_across_plane(const Eigen::VectorXd& normal) {
  const Eigen::VectorXd n = normal.normalized();
  const int d = static_cast<int>(n.size());
  return Eigen::MatrixXd::Identity(d, d) - 2.0 * n * n.transpose();
}

/// 2D reflection across the line through the origin at angle alpha.
inline Eigen::MatrixXd reflection_2d(double alpha) {
  Eigen::MatrixXd m(2, 2);
  m << std::cos(2 * alpha), std::sin(2 * alpha), std::sin(2 * alpha), -std::cos(2 * alpha);
  return m;
}

inline Eigen::MatrixXd rotation_2d(double angle) {
  Eigen::MatrixXd m(2, 2);
  m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return m;
}

/// 3D rotation by `angle` about the x3-axis.
inline Eigen::MatrixXd rotation_z(double angle) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  m.block<2, 2>(0, 0) = rotation_2d(angle);
  return m;
}

}  // namespace equipart
