#pragma once

#include <algorithm>
#include <functional>
#include <string>

#include "equipart/field.hpp"
#include "equipart/group.hpp"
#include "equipart/mesh.hpp"

namespace equipart {

/// A symmetry setup (k, G, hom) together with a segregated equivariant witness
/// showing that the associated infimum is taken over a nonempty class.
struct AdmissibleTriplet {
  std::string id;
  int k = 0;
  SymmetryGroup group;  // carries the homomorphism into S_k
  std::function<Field(const SphereMesh&)> witness;
};

struct AdmissibilityReport {
  bool admissible = false;
  double min_value = 0.0;           // most negative vertex value across components
  double min_component_max = 0.0;   // smallest sup-norm over components
  double max_pair_product = 0.0;    // max_i<j max_v u_i(v) u_j(v)
  double equivariance = 0.0;        // sup defect over group elements
  bool hom_transitive = false;      // every component reachable from component 0
  std::string failure;
};

/// Checks the three defining conditions on a witness field:
/// nonnegativity with every component nontrivial, vanishing pairwise
/// products, and equivariance with the homomorphism image acting
/// transitively on the components. Tolerances are relative to the sup norm
/// of the field (and its square, for the products).
inline AdmissibilityReport admissibility_check(const SphereMesh& mesh,
                                               const SymmetryGroup& group, const Field& u,
                                               double tol_pos = 1e-6,
                                               double tol_seg = 1e-6) {
  AdmissibilityReport rep;
  if (!group.has_hom()) throw Error("admissibility_check: group carries no homomorphism");
  if (u.k() != group.k)
    throw Error("admissibility_check: field has wrong number of components");

  const double scale = std::max(u.values.cwiseAbs().maxCoeff(), 1e-300);
  rep.min_value = u.values.minCoeff();
  rep.min_component_max = u.values.colwise().maxCoeff().minCoeff();
  for (int i = 0; i < u.k(); ++i)
    for (int j = i + 1; j < u.k(); ++j)
      rep.max_pair_product =
          std::max(rep.max_pair_product,
                   u.values.col(i).cwiseProduct(u.values.col(j)).maxCoeff());
  rep.equivariance = equivariance_defect(mesh, group, u);

  // Orbit of component 0 under the homomorphism image.
  std::vector<bool> reached(u.k(), false);
  reached[0] = true;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& elem : group.elements)
      for (int i = 0; i < u.k(); ++i)
        if (reached[i] && !reached[group.perm(elem.label)[i]]) {
          reached[group.perm(elem.label)[i]] = true;
          grew = true;
        }
  }
  rep.hom_transitive = std::all_of(reached.begin(), reached.end(), [](bool b) { return b; });

  if (rep.min_value < -tol_pos * scale)
    rep.failure = "component takes negative values";
  else if (rep.min_component_max <= tol_pos * scale)
    rep.failure = "component is identically zero";
  else if (rep.max_pair_product > tol_seg * scale * scale)
    rep.failure = "pairwise product does not vanish";
  else if (rep.equivariance > tol_pos * scale)
    rep.failure = "field is not equivariant";
  else if (!rep.hom_transitive)
    rep.failure = "homomorphism image does not act transitively on components";
  else
    rep.admissible = true;
  return rep;
}

}  // namespace equipart
