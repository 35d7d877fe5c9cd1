#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "equipart/errors.hpp"
#include "equipart/group.hpp"

namespace equipart {

enum class SphereBase { circle, icosahedron, octahedron, latlong };

inline const char* to_string(SphereBase b) {
  switch (b) {
    case SphereBase::circle: return "circle";
    case SphereBase::icosahedron: return "icosahedron";
    case SphereBase::octahedron: return "octahedron";
    case SphereBase::latlong: return "latlong";
  }
  return "?";
}

/// Piecewise-linear discretization of S^{N-1}, N in {2,3}: unit vertices,
/// segment/triangle cells, Laplace-Beltrami stiffness K, lumped mass M, and
/// (after build_transports) one interpolation operator per group element.
struct SphereMesh {
  int dimension = 0;                       // ambient N
  Eigen::MatrixXd vertices;                // n x N, unit rows
  Eigen::MatrixXi cells;                   // n_cells x N (segments or triangles)
  Eigen::SparseMatrix<double> stiffness;   // K, symmetric PSD
  Eigen::VectorXd lumped_mass;             // diagonal of lumped M
  Eigen::SparseMatrix<double> consistent_mass;  // only if requested at build time
  bool has_consistent_mass = false;

  std::map<int, Eigen::SparseMatrix<double, Eigen::RowMajor>> transports;
  bool group_exact = false;

  SphereBase base = SphereBase::circle;
  int resolution = 0;  // n for circle, subdivision level otherwise
  int latlong_rings = 0, latlong_slices = 0;

  int n_vertices() const { return static_cast<int>(vertices.rows()); }

  double total_mass() const { return lumped_mass.sum(); }

  Eigen::VectorXd apply_mass(const Eigen::VectorXd& v) const {
    return lumped_mass.cwiseProduct(v);
  }

  double mass_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(lumped_mass.cwiseProduct(b));
  }

  double stiffness_form(const Eigen::VectorXd& v) const {
    return v.dot(stiffness * v);
  }

  const Eigen::SparseMatrix<double, Eigen::RowMajor>& transport(int label) const {
    auto it = transports.find(label);
    if (it == transports.end())
      throw MissingTransport("SphereMesh: no transport operator for element " +
                             std::to_string(label));
    return it->second;
  }

  /// FNV-1a over the defining data; used to tie exported fields to their mesh.
  std::string content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    const int tag[4] = {dimension, static_cast<int>(base), resolution,
                        latlong_rings * 100000 + latlong_slices};
    mix(tag, sizeof(tag));
    mix(vertices.data(), sizeof(double) * vertices.size());
    mix(cells.data(), sizeof(int) * cells.size());
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }
};

namespace detail {

inline double spherical_triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                      const Eigen::Vector3d& c) {
  // Van Oosterom-Strackee solid angle.
  const double num = std::abs(a.dot(b.cross(c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

inline void assemble_triangle_operators(SphereMesh& mesh, bool consistent_mass) {
  const int n = mesh.n_vertices();
  std::vector<Eigen::Triplet<double>> kt, mt;
  mesh.lumped_mass = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < mesh.cells.rows(); ++c) {
    const int i0 = mesh.cells(c, 0), i1 = mesh.cells(c, 1), i2 = mesh.cells(c, 2);
    const Eigen::Vector3d p0 = mesh.vertices.row(i0), p1 = mesh.vertices.row(i1),
                          p2 = mesh.vertices.row(i2);
    // Cotangent weights on the flat triangle.
    const Eigen::Vector3d e0 = p2 - p1, e1 = p0 - p2, e2 = p1 - p0;
    const double area2 = e2.cross(-e1).norm();  // 2*area
    const double cot0 = -e1.dot(e2) / area2;    // angle at p0, opposite edge e0
    const double cot1 = -e2.dot(e0) / area2;
    const double cot2 = -e0.dot(e1) / area2;
    const int idx[3] = {i0, i1, i2};
    const double cot[3] = {cot0, cot1, cot2};
    for (int a = 0; a < 3; ++a) {
      const int i = idx[(a + 1) % 3], j = idx[(a + 2) % 3];
      const double w = 0.5 * cot[a];
      kt.emplace_back(i, j, -w);
      kt.emplace_back(j, i, -w);
      kt.emplace_back(i, i, w);
      kt.emplace_back(j, j, w);
    }
    // Lumped mass from the geodesic triangle area: total mass is exactly 4*pi.
    const double sa = spherical_triangle_area(p0, p1, p2) / 3.0;
    mesh.lumped_mass[i0] += sa;
    mesh.lumped_mass[i1] += sa;
    mesh.lumped_mass[i2] += sa;
    if (consistent_mass) {
      const double flat = 0.5 * area2;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          mt.emplace_back(idx[a], idx[b], flat / 12.0 * (a == b ? 2.0 : 1.0));
    }
  }
  mesh.stiffness.resize(n, n);
  mesh.stiffness.setFromTriplets(kt.begin(), kt.end());
  if (consistent_mass) {
    mesh.consistent_mass.resize(n, n);
    mesh.consistent_mass.setFromTriplets(mt.begin(), mt.end());
    mesh.has_consistent_mass = true;
  }
}

struct EdgeKey {
  int a, b;
  bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Loop-style 1->4 subdivision with radial projection to the unit sphere.
inline void subdivide_projected(Eigen::MatrixXd& verts, Eigen::MatrixXi& tris) {
  std::map<EdgeKey, int> midpoint;
  std::vector<Eigen::Vector3d> vs;
  vs.reserve(verts.rows());
  for (int i = 0; i < verts.rows(); ++i) vs.emplace_back(verts.row(i));
  auto mid = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    vs.push_back((vs[a] + vs[b]).normalized());
    const int id = static_cast<int>(vs.size()) - 1;
    midpoint.emplace(key, id);
    return id;
  };
  Eigen::MatrixXi out(4 * tris.rows(), 3);
  for (int t = 0; t < tris.rows(); ++t) {
    const int a = tris(t, 0), b = tris(t, 1), c = tris(t, 2);
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    out.row(4 * t + 0) << a, ab, ca;
    out.row(4 * t + 1) << b, bc, ab;
    out.row(4 * t + 2) << c, ca, bc;
    out.row(4 * t + 3) << ab, bc, ca;
  }
  verts.resize(vs.size(), 3);
  for (std::size_t i = 0; i < vs.size(); ++i) verts.row(i) = vs[i];
  tris = out;
}

inline void base_icosahedron(Eigen::MatrixXd& verts, Eigen::MatrixXi& tris) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double raw[12][3] = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  verts.resize(12, 3);
  for (int i = 0; i < 12; ++i)
    verts.row(i) = Eigen::Vector3d(raw[i][0], raw[i][1], raw[i][2]).normalized();
  const int f[20][3] = {{0, 11, 5},  {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                        {1, 5, 9},   {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                        {3, 9, 4},   {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                        {4, 9, 5},   {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  tris.resize(20, 3);
  for (int i = 0; i < 20; ++i) tris.row(i) << f[i][0], f[i][1], f[i][2];
}

inline void base_octahedron(Eigen::MatrixXd& verts, Eigen::MatrixXi& tris) {
  verts.resize(6, 3);
  verts << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  const int f[8][3] = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                       {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  tris.resize(8, 3);
  for (int i = 0; i < 8; ++i) tris.row(i) << f[i][0], f[i][1], f[i][2];
}

}  // namespace detail

/// n equispaced vertices on S^1, P1 elements in arc length, periodic.
inline SphereMesh build_circle_mesh(int n, bool consistent_mass = false) {
  if (n < 4) throw Error("build_circle_mesh: n must be >= 4");
  SphereMesh mesh;
  mesh.dimension = 2;
  mesh.base = SphereBase::circle;
  mesh.resolution = n;
  const double h = 2.0 * std::numbers::pi / n;
  mesh.vertices.resize(n, 2);
  mesh.cells.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    mesh.vertices.row(i) << std::cos(i * h), std::sin(i * h);
    mesh.cells.row(i) << i, (i + 1) % n;
  }
  std::vector<Eigen::Triplet<double>> kt, mt;
  mesh.lumped_mass = Eigen::VectorXd::Constant(n, h);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    kt.emplace_back(i, i, 1.0 / h);
    kt.emplace_back(j, j, 1.0 / h);
    kt.emplace_back(i, j, -1.0 / h);
    kt.emplace_back(j, i, -1.0 / h);
    if (consistent_mass) {
      mt.emplace_back(i, i, h / 3.0);
      mt.emplace_back(j, j, h / 3.0);
      mt.emplace_back(i, j, h / 6.0);
      mt.emplace_back(j, i, h / 6.0);
    }
  }
  mesh.stiffness.resize(n, n);
  mesh.stiffness.setFromTriplets(kt.begin(), kt.end());
  if (consistent_mass) {
    mesh.consistent_mass.resize(n, n);
    mesh.consistent_mass.setFromTriplets(mt.begin(), mt.end());
    mesh.has_consistent_mass = true;
  }
  return mesh;
}

/// Icosahedron (default) or octahedron subdivided `level` times, vertices
/// radially projected to S^2. The octahedron base keeps the coordinate planes
/// and all signed axis permutations as exact mesh symmetries.
inline SphereMesh build_icosphere_mesh(int level,
                                       SphereBase base = SphereBase::icosahedron,
                                       bool consistent_mass = false) {
  if (level < 0 || level > 7) throw Error("build_icosphere_mesh: level must be in [0,7]");
  SphereMesh mesh;
  mesh.dimension = 3;
  mesh.base = base;
  mesh.resolution = level;
  if (base == SphereBase::icosahedron)
    detail::base_icosahedron(mesh.vertices, mesh.cells);
  else if (base == SphereBase::octahedron)
    detail::base_octahedron(mesh.vertices, mesh.cells);
  else
    throw Error("build_icosphere_mesh: base must be icosahedron or octahedron");
  for (int l = 0; l < level; ++l) detail::subdivide_projected(mesh.vertices, mesh.cells);
  detail::assemble_triangle_operators(mesh, consistent_mass);
  return mesh;
}

/// Longitude-latitude product grid: rings at theta = pi*i/n_theta
/// (i = 1..n_theta-1), n_phi slices, two pole vertices, quads split along a
/// uniform diagonal so that all phi-rotations remain exact vertex maps.
inline SphereMesh build_latlong_mesh(int n_theta, int n_phi, bool consistent_mass = false) {
  if (n_theta < 4 || n_phi < 6) throw Error("build_latlong_mesh: grid too coarse");
  SphereMesh mesh;
  mesh.dimension = 3;
  mesh.base = SphereBase::latlong;
  mesh.latlong_rings = n_theta;
  mesh.latlong_slices = n_phi;
  const int rings = n_theta - 1;
  const int n = rings * n_phi + 2;
  mesh.vertices.resize(n, 3);
  auto vid = [&](int i, int j) { return i * n_phi + ((j % n_phi) + n_phi) % n_phi; };
  const int north = rings * n_phi, south = rings * n_phi + 1;
  for (int i = 0; i < rings; ++i) {
    const double th = std::numbers::pi * (i + 1) / n_theta;
    for (int j = 0; j < n_phi; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / n_phi;
      mesh.vertices.row(vid(i, j)) << std::sin(th) * std::cos(ph),
          std::sin(th) * std::sin(ph), std::cos(th);
    }
  }
  mesh.vertices.row(north) << 0, 0, 1;
  mesh.vertices.row(south) << 0, 0, -1;
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < n_phi; ++j) {
    tris.push_back({north, vid(0, j), vid(0, j + 1)});
    tris.push_back({south, vid(rings - 1, j + 1), vid(rings - 1, j)});
  }
  for (int i = 0; i + 1 < rings; ++i)
    for (int j = 0; j < n_phi; ++j) {
      tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  mesh.cells.resize(static_cast<int>(tris.size()), 3);
  for (std::size_t t = 0; t < tris.size(); ++t)
    mesh.cells.row(static_cast<int>(t)) << tris[t][0], tris[t][1], tris[t][2];
  detail::assemble_triangle_operators(mesh, consistent_mass);
  return mesh;
}

namespace detail {

/// Coarse spatial hash for exact-match lookups on the unit sphere.
class VertexLocator {
 public:
  explicit VertexLocator(const Eigen::MatrixXd& verts) : verts_(verts) {
    for (int i = 0; i < verts.rows(); ++i) buckets_[key(verts.row(i))].push_back(i);
  }

  int find(const Eigen::VectorXd& p, double tol) const {
    const int dim = static_cast<int>(p.size());
    const auto base = cell(p);
    std::array<int, 3> off{};
    const int span = 1;
    for (off[0] = -span; off[0] <= span; ++off[0])
      for (off[1] = -span; off[1] <= span; ++off[1])
        for (off[2] = (dim == 3 ? -span : 0); off[2] <= (dim == 3 ? span : 0); ++off[2]) {
          auto it = buckets_.find(pack(base[0] + off[0], base[1] + off[1], base[2] + off[2]));
          if (it == buckets_.end()) continue;
          for (int i : it->second)
            if ((verts_.row(i).transpose() - p).norm() < tol) return i;
        }
    return -1;
  }

 private:
  static constexpr double kCell = 1e-4;

  std::array<long long, 3> cell(const Eigen::VectorXd& p) const {
    std::array<long long, 3> c{0, 0, 0};
    for (int d = 0; d < p.size(); ++d) c[d] = static_cast<long long>(std::floor(p[d] / kCell));
    return c;
  }

  static std::uint64_t pack(long long a, long long b, long long c) {
    auto u = [](long long v) { return static_cast<std::uint64_t>(v + (1ll << 20)); };
    return (u(a) << 42) ^ (u(b) << 21) ^ u(c);
  }

  std::uint64_t key(const Eigen::VectorXd& p) const {
    const auto c = cell(p);
    return pack(c[0], c[1], c[2]);
  }

  const Eigen::MatrixXd& verts_;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

/// Barycentric location of direction p in a radially-projected triangle mesh,
/// via an adjacency walk with brute-force fallback.
class TriangleLocator {
 public:
  TriangleLocator(const Eigen::MatrixXd& verts, const Eigen::MatrixXi& tris)
      : verts_(verts), tris_(tris) {
    std::map<EdgeKey, std::pair<int, int>> edge_tris;
    neighbor_.assign(tris.rows(), {-1, -1, -1});
    for (int t = 0; t < tris.rows(); ++t)
      for (int e = 0; e < 3; ++e) {
        const auto key = edge_key(tris(t, (e + 1) % 3), tris(t, (e + 2) % 3));
        auto it = edge_tris.find(key);
        if (it == edge_tris.end())
          edge_tris[key] = {t, e};
        else {
          neighbor_[t][e] = it->second.first;
          neighbor_[it->second.first][it->second.second] = t;
        }
      }
  }

  /// Returns triangle index; fills normalized weights (sum 1, all >= -1e-12).
  int locate(const Eigen::Vector3d& p, int hint, Eigen::Vector3d& weights) const {
    int t = hint >= 0 ? hint : 0;
    for (int step = 0; step < 4 * static_cast<int>(tris_.rows()); ++step) {
      const Eigen::Vector3d w = barycentric(t, p);
      int worst = 0;
      for (int e = 1; e < 3; ++e)
        if (w[e] < w[worst]) worst = e;
      if (w[worst] >= -1e-12) {
        weights = w.cwiseMax(0.0);
        weights /= weights.sum();
        return t;
      }
      const int next = neighbor_[t][worst];
      if (next < 0) break;
      t = next;
    }
    // Fallback: smallest worst-coordinate over all triangles.
    int best = -1;
    double best_w = -1e30;
    Eigen::Vector3d best_bary;
    for (int tt = 0; tt < tris_.rows(); ++tt) {
      const Eigen::Vector3d w = barycentric(tt, p);
      const double worst = w.minCoeff();
      if (worst > best_w) {
        best_w = worst;
        best = tt;
        best_bary = w;
      }
    }
    if (best < 0 || best_w < -1e-6)
      throw PointLocationFailure("TriangleLocator: direction lies in no cell");
    weights = best_bary.cwiseMax(0.0);
    weights /= weights.sum();
    return best;
  }

 private:
  Eigen::Vector3d barycentric(int t, const Eigen::Vector3d& p) const {
    Eigen::Matrix3d m;
    for (int c = 0; c < 3; ++c) m.col(c) = verts_.row(tris_(t, c)).transpose();
    Eigen::Vector3d w = m.fullPivLu().solve(p);
    const double s = w.sum();
    if (std::abs(s) < 1e-14) return Eigen::Vector3d::Constant(-1e30);
    return w / s;
  }

  const Eigen::MatrixXd& verts_;
  const Eigen::MatrixXi& tris_;
  std::vector<std::array<int, 3>> neighbor_;
};

}  // namespace detail

/// Builds one interpolation operator A_g per group element, with
/// (A_g f)(v) = f(g(v)). Exact vertex matches become permutation rows; the
/// mesh is marked group-exact when every element matched every vertex.
/// Non-matching circle vertices use 4-point Lagrange interpolation in arc
/// length (periodic); triangle meshes use barycentric interpolation in the
/// containing cell.
inline void build_transports(SphereMesh& mesh, const SymmetryGroup& group,
                             double tol = 1e-10) {
  if (group.dimension != mesh.dimension)
    throw Error("build_transports: group/mesh dimension mismatch");
  const int n = mesh.n_vertices();
  detail::VertexLocator locator(mesh.vertices);
  std::unique_ptr<detail::TriangleLocator> tri_locator;
  if (mesh.dimension == 3)
    tri_locator = std::make_unique<detail::TriangleLocator>(mesh.vertices, mesh.cells);

  mesh.group_exact = true;
  mesh.transports.clear();
  for (const auto& elem : group.elements) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * 2);
    int hint = -1;
    for (int v = 0; v < n; ++v) {
      const Eigen::VectorXd target = elem.matrix * mesh.vertices.row(v).transpose();
      const int match = locator.find(target, tol);
      if (match >= 0) {
        trip.emplace_back(v, match, 1.0);
        continue;
      }
      mesh.group_exact = false;
      if (mesh.dimension == 2) {
        // Periodic 4-point Lagrange in the angle.
        const double h = 2.0 * std::numbers::pi / n;
        double t = std::atan2(target[1], target[0]) / h;
        t -= std::floor(t / n) * n;
        const int i0 = static_cast<int>(std::floor(t));
        const double s = t - i0;
        const double w[4] = {-s * (s - 1) * (s - 2) / 6.0, (s * s - 1) * (s - 2) / 2.0,
                             -s * (s + 1) * (s - 2) / 2.0, s * (s * s - 1) / 6.0};
        for (int a = 0; a < 4; ++a)
          trip.emplace_back(v, ((i0 - 1 + a) % n + n) % n, w[a]);
      } else {
        Eigen::Vector3d w;
        hint = tri_locator->locate(target, hint, w);
        for (int c = 0; c < 3; ++c)
          if (w[c] != 0.0) trip.emplace_back(v, mesh.cells(hint, c), w[c]);
      }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    mesh.transports.emplace(elem.label, std::move(a));
  }
}

}  // namespace equipart
