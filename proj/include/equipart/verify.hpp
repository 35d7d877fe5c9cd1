#pragma once

#include <Eigen/Dense>
#include <vector>

#include "equipart/field.hpp"
#include "equipart/group.hpp"
#include "equipart/mesh.hpp"

namespace equipart {

/// Direct dense eigensolve of the (K, M) pencil restricted to the equivariant
/// subspace of k-component fields; returns the ascending eigenvalues.
///
/// Independent of the descent solver: the subspace is extracted as the column
/// space of the averaging projector over the stacked (n*k)-dimensional field
/// space, and the restricted pencil is handed to a dense generalized
/// symmetric eigensolver. Intended for moderate meshes.
inline std::vector<double> equivariant_spectrum(const SphereMesh& mesh,
                                                const SymmetryGroup& group,
                                                int n_values) {
  const int n = mesh.n_vertices();
  const int k = group.k;
  if (k < 1) throw Error("equivariant_spectrum: group carries no homomorphism");
  const int dim = n * k;

  // Dense averaging projector, one column at a time.
  Eigen::MatrixXd proj(dim, dim);
  Field e = Field::zero(mesh, k);
  for (int c = 0; c < dim; ++c) {
    e.values.setZero();
    e.values(c % n, c / n) = 1.0;
    const Field pe = equivariant_project(mesh, group, e);
    for (int i = 0; i < k; ++i) proj.col(c).segment(i * n, n) = pe.values.col(i);
  }

  // Column-space basis of the (idempotent) projector.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(proj);
  qr.setThreshold(1e-8);
  const int rank = static_cast<int>(qr.rank());
  if (rank == 0) throw Error("equivariant_spectrum: trivial equivariant subspace");
  const Eigen::MatrixXd basis =
      qr.householderQ() * Eigen::MatrixXd::Identity(dim, rank);

  // Restricted stiffness/mass forms (block-diagonal in the components).
  Eigen::MatrixXd kb(dim, rank), mb(dim, rank);
  for (int c = 0; c < rank; ++c)
    for (int i = 0; i < k; ++i) {
      kb.col(c).segment(i * n, n) = mesh.stiffness * basis.col(c).segment(i * n, n);
      mb.col(c).segment(i * n, n) =
          mesh.lumped_mass.cwiseProduct(basis.col(c).segment(i * n, n));
    }
  const Eigen::MatrixXd kr = basis.transpose() * kb;
  const Eigen::MatrixXd mr = basis.transpose() * mb;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kr, mr);
  if (es.info() != Eigen::Success)
    throw NonConvergence("equivariant_spectrum: dense eigensolve failed");
  std::vector<double> out;
  for (int i = 0; i < std::min<int>(n_values, rank); ++i)
    out.push_back(es.eigenvalues()[i]);
  return out;
}

/// Smallest equivariant eigenvalue above the constant modes (which always sit
/// at zero, since constant fields are fixed by every action).
inline double smallest_nontrivial_equivariant_eigenvalue(const SphereMesh& mesh,
                                                         const SymmetryGroup& group,
                                                         double null_tol = 1e-8) {
  const auto spec = equivariant_spectrum(mesh, group, mesh.n_vertices() * group.k);
  for (double v : spec)
    if (v > null_tol) return v;
  throw Error("smallest_nontrivial_equivariant_eigenvalue: spectrum is all null");
}

}  // namespace equipart
