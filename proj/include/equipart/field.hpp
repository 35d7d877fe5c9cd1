#pragma once

#include <Eigen/Dense>

#include "equipart/errors.hpp"
#include "equipart/group.hpp"
#include "equipart/mesh.hpp"

namespace equipart {

/// A k-tuple of P1 functions on a sphere mesh; column i holds component u_i.
struct Field {
  Eigen::MatrixXd values;  // n_vertices x k

  int k() const { return static_cast<int>(values.cols()); }
  int n() const { return static_cast<int>(values.rows()); }

  static Field zero(const SphereMesh& mesh, int k) {
    return {Eigen::MatrixXd::Zero(mesh.n_vertices(), k)};
  }
};

/// Group action on fields: component i of g . u is u_{sigma(i)} composed
/// with g, where sigma = hom(g). With hom extended multiplicatively under
/// left-to-right matrix composition, this index shuffle is the inverse
/// permutation of the component relabeling, which makes
/// (g1 g2) . u = g1 . (g2 . (...)) consistent for pullbacks.
inline Field apply_element(const SphereMesh& mesh, const SymmetryGroup& group,
                           const Field& u, int label) {
  if (!group.has_hom()) throw Error("apply_element: group carries no homomorphism");
  if (u.k() != group.k || u.n() != mesh.n_vertices())
    throw IncompatibleMesh("apply_element: field shape does not match mesh/group");
  const auto& a = mesh.transport(label);
  const Permutation& sigma = group.perm(label);
  Field out;
  out.values.resize(u.n(), u.k());
  for (int i = 0; i < u.k(); ++i) out.values.col(i) = a * u.values.col(sigma[i]);
  return out;
}

/// Averaging projector onto the equivariant subspace:
/// (P u) = |G|^{-1} sum_g g . u. Idempotent when the transports are exact.
inline Field equivariant_project(const SphereMesh& mesh, const SymmetryGroup& group,
                                 const Field& u) {
  Field acc = Field::zero(mesh, u.k());
  for (const auto& elem : group.elements)
    acc.values += apply_element(mesh, group, u, elem.label).values;
  acc.values /= group.order();
  return acc;
}

/// max over elements and components of |(g.u)_i - u_i| at the vertices.
inline double equivariance_defect(const SphereMesh& mesh, const SymmetryGroup& group,
                                  const Field& u) {
  double defect = 0.0;
  for (const auto& elem : group.elements) {
    const Field gu = apply_element(mesh, group, u, elem.label);
    defect = std::max(defect, (gu.values - u.values).cwiseAbs().maxCoeff());
  }
  return defect;
}

/// Segregation map: u_i -> (u_i - sum_{j != i} u_j)^+. Pairwise products of
/// the output vanish identically, and the map commutes with the group action.
inline Field segregate(const Field& u) {
  Field out;
  out.values.resize(u.n(), u.k());
  const Eigen::VectorXd total = u.values.rowwise().sum();
  for (int i = 0; i < u.k(); ++i)
    out.values.col(i) =
        (2.0 * u.values.col(i) - total).cwiseMax(0.0);
  return out;
}

inline Field clamp_nonnegative(const Field& u) {
  return {u.values.cwiseMax(0.0)};
}

/// Scales each component to unit lumped-mass L2 norm.
inline Field normalize_components(const SphereMesh& mesh, const Field& u,
                                  double collapse_tol = 1e-14) {
  Field out = u;
  for (int i = 0; i < u.k(); ++i) {
    const double m = mesh.mass_inner(u.values.col(i), u.values.col(i));
    if (m < collapse_tol)
      throw ComponentCollapse("normalize_components: component " + std::to_string(i) +
                              " has vanishing mass");
    out.values.col(i) /= std::sqrt(m);
  }
  return out;
}

/// Rayleigh quotient of a single component: (u^T K u) / (u^T M u).
inline double rayleigh(const SphereMesh& mesh, const Eigen::VectorXd& u) {
  const double denom = mesh.mass_inner(u, u);
  if (denom < 1e-30) throw ZeroComponent("rayleigh: component has zero mass");
  return u.dot(mesh.stiffness * u) / denom;
}

}  // namespace equipart
