#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "equipart/field.hpp"
#include "equipart/group.hpp"
#include "equipart/mesh.hpp"
#include "equipart/triplet.hpp"

namespace equipart {

/// A named symmetry setup bundled with its witness, a reference value for the
/// optimal exponent (NaN when no reference is known), and a mesh that
/// resolves it comfortably.
struct CatalogEntry {
  std::string id;
  int dimension = 0;
  int k = 0;
  double ell_reference = std::numeric_limits<double>::quiet_NaN();
  std::string ell_provenance;  // "computed", "asserted", or "unknown"
  SymmetryGroup group;
  std::function<Field(const SphereMesh&)> witness;
  std::function<SphereMesh()> default_mesh;
};

namespace detail {

inline Field field_from_function(
    const SphereMesh& mesh, int k,
    const std::function<double(const Eigen::VectorXd&, int)>& f) {
  Field u = Field::zero(mesh, k);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const Eigen::VectorXd x = mesh.vertices.row(v).transpose();
    for (int i = 0; i < k; ++i) u.values(v, i) = f(x, i);
  }
  return u;
}

/// Nearest-direction bumps: component c is (x . dir_c - max_{c' != c} x . dir_c')^+.
inline double direction_bump(const Eigen::VectorXd& x,
                             const std::vector<Eigen::Vector3d>& dirs, int c) {
  double best_other = -2.0;
  for (std::size_t j = 0; j < dirs.size(); ++j)
    if (static_cast<int>(j) != c) best_other = std::max(best_other, dirs[j].dot(x.head<3>()));
  return std::max(0.0, dirs[c].dot(x.head<3>()) - best_other);
}

inline std::vector<Eigen::Vector3d> tetrahedron_directions() {
  return {Eigen::Vector3d(1, 1, 1).normalized(), Eigen::Vector3d(1, -1, -1).normalized(),
          Eigen::Vector3d(-1, 1, -1).normalized(),
          Eigen::Vector3d(-1, -1, 1).normalized()};
}

inline std::vector<Eigen::Vector3d> cube_directions() {
  return {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
}

}  // namespace detail

/// Witness fields cut from the faces of a regular polyhedron by radial
/// projection: one bump per face, or one per opposite-face pair for the cube.
inline Field face_bump_witness(const std::string& polyhedron, const SphereMesh& mesh,
                               const std::string& pairing = "none") {
  if (mesh.dimension != 3)
    throw IncompatibleMesh("face_bump_witness: requires a mesh of S^2");
  std::vector<Eigen::Vector3d> dirs;
  if (polyhedron == "tetrahedron")
    dirs = detail::tetrahedron_directions();
  else if (polyhedron == "cube")
    dirs = detail::cube_directions();
  else
    throw UnknownId("face_bump_witness: unknown polyhedron '" + polyhedron + "'");
  if (pairing == "none")
    return detail::field_from_function(
        mesh, static_cast<int>(dirs.size()),
        [dirs](const Eigen::VectorXd& x, int c) { return detail::direction_bump(x, dirs, c); });
  if (pairing != "opposite")
    throw Error("face_bump_witness: pairing must be none or opposite");
  if (polyhedron != "cube")
    throw Error("face_bump_witness: opposite pairing requires the cube");
  return detail::field_from_function(
      mesh, 3, [dirs](const Eigen::VectorXd& x, int c) {
        return detail::direction_bump(x, dirs, 2 * c) +
               detail::direction_bump(x, dirs, 2 * c + 1);
      });
}

namespace detail {

inline CatalogEntry make_xyz_r3() {
  CatalogEntry e;
  e.id = "xyz_r3";
  e.dimension = 3;
  e.k = 2;
  e.ell_reference = 3.0;
  e.ell_provenance = "computed";
  std::vector<Eigen::MatrixXd> gens;
  for (int a = 0; a < 3; ++a)
    gens.push_back(reflection_across_plane(Eigen::Vector3d::Unit(a)));
  e.group = attach_homomorphism(group_closure(gens, 16), 2, {{1, 0}, {1, 0}, {1, 0}});
  e.witness = [](const SphereMesh& mesh) {
    return field_from_function(mesh, 2, [](const Eigen::VectorXd& x, int c) {
      const double w = x[0] * x[1] * x[2];
      return std::max(0.0, c == 0 ? w : -w);
    });
  };
  e.default_mesh = [] { return build_icosphere_mesh(4, SphereBase::octahedron); };
  return e;
}

inline CatalogEntry make_dihedral2d(int d) {
  if (d < 1) throw UnknownId("dihedral2d: d must be >= 1");
  CatalogEntry e;
  e.id = "dihedral2d(" + std::to_string(d) + ")";
  e.dimension = 2;
  e.k = 2;
  e.ell_reference = d;
  e.ell_provenance = "computed";
  // Reflections across the d nodal lines of cos(d theta).
  std::vector<Eigen::MatrixXd> gens;
  std::vector<Permutation> images;
  for (int j = 0; j < d; ++j) {
    gens.push_back(reflection_2d(std::numbers::pi * (0.5 + j) / d));
    images.push_back({1, 0});
  }
  e.group = attach_homomorphism(group_closure(gens, 4 * d + 8), 2, images);
  e.witness = [d](const SphereMesh& mesh) {
    return field_from_function(mesh, 2, [d](const Eigen::VectorXd& x, int c) {
      const double w = std::cos(d * std::atan2(x[1], x[0]));
      return std::max(0.0, c == 0 ? w : -w);
    });
  };
  // Nearest multiple of 2d to 2048 keeps the transports group-exact.
  const int n = 2 * d * std::max(8, static_cast<int>(std::lround(2048.0 / (2 * d))));
  e.default_mesh = [n] { return build_circle_mesh(n); };
  return e;
}

inline CatalogEntry make_prism3d(int d) {
  if (d < 1) throw UnknownId("prism3d: d must be >= 1");
  CatalogEntry e;
  e.id = "prism3d(" + std::to_string(d) + ")";
  e.dimension = 3;
  e.k = 2;
  e.ell_reference = d + 1;
  e.ell_provenance = "computed";
  // Vertical planes through the nodal meridians of cos(d phi), plus the
  // equatorial reflection.
  std::vector<Eigen::MatrixXd> gens;
  std::vector<Permutation> images;
  for (int j = 0; j < d; ++j) {
    const double a = std::numbers::pi * (0.5 + j) / d;
    gens.push_back(
        reflection_across_plane(Eigen::Vector3d(-std::sin(a), std::cos(a), 0.0)));
    images.push_back({1, 0});
  }
  gens.push_back(reflection_across_plane(Eigen::Vector3d(0, 0, 1)));
  images.push_back({1, 0});
  e.group = attach_homomorphism(group_closure(gens, 8 * d + 8), 2, images);
  e.witness = [d](const SphereMesh& mesh) {
    return field_from_function(mesh, 2, [d](const Eigen::VectorXd& x, int c) {
      // Re((x1 + i x2)^d) * x3 restricted to the sphere.
      const double rho = std::hypot(x[0], x[1]);
      const double w = std::pow(rho, d) * std::cos(d * std::atan2(x[1], x[0])) * x[2];
      return std::max(0.0, c == 0 ? w : -w);
    });
  };
  const int n_phi = 4 * d * std::max(1, (96 + 4 * d - 1) / (4 * d));
  e.default_mesh = [n_phi] { return build_latlong_mesh(48, n_phi); };
  return e;
}

inline CatalogEntry make_rot2d(int k, int m) {
  if (k < 1 || m < 1 || (k * m) % 2 != 0)
    throw UnknownId("rot2d: requires k, m >= 1 with k*m even");
  const int d = k * m / 2;
  CatalogEntry e;
  e.id = "rot2d(" + std::to_string(k) + "," + std::to_string(m) + ")";
  e.dimension = 2;
  e.k = k;
  e.ell_reference = d;
  e.ell_provenance = "asserted";
  Permutation shift(k), negate(k);
  for (int j = 0; j < k; ++j) {
    shift[j] = (j + 1) % k;          // rotation advances the component index
    negate[j] = (k - j) % k;         // conjugation reverses it
  }
  e.group = attach_homomorphism(
      group_closure({rotation_2d(std::numbers::pi / d), reflection_2d(0.0)}, 8 * d + 8),
      k, {shift, negate});
  // Component j carries the lobes of |cos(d theta)| centered at
  // theta = j pi/d + 2 pi t / m; the 2d lobes tile the circle.
  e.witness = [d, k](const SphereMesh& mesh) {
    return field_from_function(mesh, k, [d, k](const Eigen::VectorXd& x, int c) {
      const double s = d * std::atan2(x[1], x[0]) / std::numbers::pi - c;
      const double q = std::round(s);
      const long long lobe = static_cast<long long>(q);
      if (((lobe % k) + k) % k != 0 || std::abs(s - q) > 0.5) return 0.0;
      return std::abs(std::cos(d * std::atan2(x[1], x[0])));
    });
  };
  const int n = 2 * d * std::max(8, static_cast<int>(std::lround(2048.0 / (2 * d))));
  e.default_mesh = [n] { return build_circle_mesh(n); };
  return e;
}

inline CatalogEntry make_y3_s2() {
  CatalogEntry e;
  e.id = "y3_s2";
  e.dimension = 3;
  e.k = 3;
  e.ell_reference = 1.5;
  e.ell_provenance = "computed";
  Permutation cyc = {1, 2, 0};   // rotation sends component j to j+1
  Permutation swap = {0, 2, 1};  // phi -> -phi exchanges the off-axis lunes
  e.group = attach_homomorphism(
      group_closure({rotation_z(2.0 * std::numbers::pi / 3.0),
                     reflection_across_plane(Eigen::Vector3d(0, 1, 0))},
                    16),
      3, {cyc, swap});
  // Lune j: (sin theta_polar)^{3/2} cos(3 psi / 2)^+ with psi = phi - 2 pi j/3
  // wrapped to (-pi, pi]; each profile lives on a single 2 pi/3 sector.
  e.witness = [](const SphereMesh& mesh) {
    return field_from_function(mesh, 3, [](const Eigen::VectorXd& x, int c) {
      const double sin_th = std::hypot(x[0], x[1]);
      double psi = std::atan2(x[1], x[0]) - 2.0 * std::numbers::pi * c / 3.0;
      psi = std::remainder(psi, 2.0 * std::numbers::pi);
      return std::pow(sin_th, 1.5) * std::max(0.0, std::cos(1.5 * psi));
    });
  };
  e.default_mesh = [] { return build_latlong_mesh(48, 96); };
  return e;
}

inline CatalogEntry make_tetra_k4() {
  CatalogEntry e;
  e.id = "tetra_k4";
  e.dimension = 3;
  e.k = 4;
  e.ell_provenance = "unknown";
  const std::vector<Eigen::MatrixXd> gens = {
      reflection_across_plane(Eigen::Vector3d(0, 1, 1)),
      reflection_across_plane(Eigen::Vector3d(1, -1, 0)),
      reflection_across_plane(Eigen::Vector3d(0, 1, -1))};
  e.group = attach_homomorphism(group_closure(gens, 32), 4,
                                {{1, 0, 2, 3}, {0, 2, 1, 3}, {0, 1, 3, 2}});
  e.witness = [](const SphereMesh& mesh) {
    return face_bump_witness("tetrahedron", mesh);
  };
  e.default_mesh = [] { return build_icosphere_mesh(4, SphereBase::octahedron); };
  return e;
}

inline CatalogEntry make_cube(int k) {
  CatalogEntry e;
  e.id = k == 6 ? "cube_k6" : "cube_k3";
  e.dimension = 3;
  e.k = k;
  e.ell_provenance = "unknown";
  const std::vector<Eigen::MatrixXd> gens = {
      reflection_across_plane(Eigen::Vector3d(1, 0, 0)),
      reflection_across_plane(Eigen::Vector3d(0, 1, 0)),
      reflection_across_plane(Eigen::Vector3d(0, 0, 1)),
      reflection_across_plane(Eigen::Vector3d(1, -1, 0)),   // swaps x1, x2
      reflection_across_plane(Eigen::Vector3d(0, 1, -1))};  // swaps x2, x3
  std::vector<Permutation> images;
  if (k == 6)
    // Faces ordered +x, -x, +y, -y, +z, -z.
    images = {{1, 0, 2, 3, 4, 5},
              {0, 1, 3, 2, 4, 5},
              {0, 1, 2, 3, 5, 4},
              {2, 3, 0, 1, 4, 5},
              {0, 1, 4, 5, 2, 3}};
  else if (k == 3)
    // Opposite-face pairs; coordinate reflections act trivially.
    images = {{0, 1, 2}, {0, 1, 2}, {0, 1, 2}, {1, 0, 2}, {0, 2, 1}};
  else
    throw UnknownId("cube: k must be 3 or 6");
  e.group = attach_homomorphism(group_closure(gens, 96), k, images);
  e.witness = [k](const SphereMesh& mesh) {
    return face_bump_witness("cube", mesh, k == 3 ? "opposite" : "none");
  };
  e.default_mesh = [] { return build_icosphere_mesh(4, SphereBase::octahedron); };
  return e;
}

/// Accepts "name", "name(3)", "name:3", "name(2,3)", "name:2,3".
inline std::pair<std::string, std::vector<int>> parse_catalog_id(const std::string& id) {
  std::string name = id;
  std::string args;
  const auto paren = id.find('(');
  const auto colon = id.find(':');
  if (paren != std::string::npos) {
    if (id.back() != ')') throw UnknownId("catalog: malformed id '" + id + "'");
    name = id.substr(0, paren);
    args = id.substr(paren + 1, id.size() - paren - 2);
  } else if (colon != std::string::npos) {
    name = id.substr(0, colon);
    args = id.substr(colon + 1);
  }
  std::vector<int> params;
  std::size_t pos = 0;
  while (pos < args.size()) {
    const auto comma = args.find(',', pos);
    const std::string tok = args.substr(pos, comma == std::string::npos ? args.size() - pos
                                                                        : comma - pos);
    try {
      params.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw UnknownId("catalog: bad parameter '" + tok + "' in '" + id + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return {name, params};
}

}  // namespace detail

inline std::vector<std::string> catalog_ids() {
  return {"xyz_r3",  "dihedral2d(d)", "prism3d(d)", "rot2d(k,m)",
          "y3_s2",   "tetra_k4",      "cube_k6",    "cube_k3"};
}

inline CatalogEntry catalog_entry(const std::string& id) {
  const auto [name, params] = detail::parse_catalog_id(id);
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw UnknownId("catalog: '" + name + "' expects " + std::to_string(n) +
                      " parameter(s)");
  };
  if (name == "xyz_r3") {
    need(0);
    return detail::make_xyz_r3();
  }
  if (name == "dihedral2d") {
    need(1);
    return detail::make_dihedral2d(params[0]);
  }
  if (name == "prism3d") {
    need(1);
    return detail::make_prism3d(params[0]);
  }
  if (name == "rot2d") {
    need(2);
    return detail::make_rot2d(params[0], params[1]);
  }
  if (name == "y3_s2") {
    need(0);
    return detail::make_y3_s2();
  }
  if (name == "tetra_k4") {
    need(0);
    return detail::make_tetra_k4();
  }
  if (name == "cube_k6") {
    need(0);
    return detail::make_cube(6);
  }
  if (name == "cube_k3") {
    need(0);
    return detail::make_cube(3);
  }
  throw UnknownId("catalog: unknown id '" + id + "'");
}

/// The triplet view of an entry, for admissibility checking.
inline AdmissibleTriplet catalog_triplet(const CatalogEntry& e) {
  return {e.id, e.k, e.group, e.witness};
}

}  // namespace equipart
