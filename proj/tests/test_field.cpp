#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "equipart/catalog.hpp"
#include "equipart/field.hpp"
#include "equipart/triplet.hpp"

using namespace equipart;

namespace {

SphereMesh mesh_for(const CatalogEntry& e) {
  // Smaller stand-ins for the heavier S^2 defaults keep the suite quick.
  SphereMesh mesh = (e.id == "xyz_r3" || e.id == "tetra_k4" || e.id == "cube_k6" ||
                     e.id == "cube_k3")
                        ? build_icosphere_mesh(3, SphereBase::octahedron)
                        : e.default_mesh();
  build_transports(mesh, e.group);
  return mesh;
}

}  // namespace

TEST_CASE("every catalog witness is admissible") {
  for (const std::string& id :
       {"xyz_r3", "dihedral2d(1)", "dihedral2d(2)", "dihedral2d(3)", "prism3d(2)",
        "rot2d(2,3)", "rot2d(3,2)", "y3_s2", "tetra_k4", "cube_k6", "cube_k3"}) {
    INFO("catalog id " << id);
    const CatalogEntry e = catalog_entry(id);
    const SphereMesh mesh = mesh_for(e);
    const Field w = e.witness(mesh);
    const AdmissibilityReport rep = admissibility_check(mesh, e.group, w);
    INFO("failure: " << rep.failure << " equivariance " << rep.equivariance
                     << " max product " << rep.max_pair_product);
    CHECK(rep.admissible);
  }
}

TEST_CASE("trivial homomorphism variants are rejected") {
  for (const std::string& id : {"xyz_r3", "dihedral2d(2)", "y3_s2"}) {
    const CatalogEntry e = catalog_entry(id);
    SymmetryGroup plain = e.group;
    plain.k = 0;
    plain.hom.clear();
    std::vector<Permutation> ids(plain.generator_labels.size(),
                                 identity_permutation(e.k));
    const SymmetryGroup trivial = attach_homomorphism(plain, e.k, ids);
    SphereMesh mesh = (e.dimension == 2) ? build_circle_mesh(256)
                                         : build_icosphere_mesh(2, SphereBase::octahedron);
    if (e.id == "y3_s2") mesh = build_latlong_mesh(24, 48);
    build_transports(mesh, trivial);
    const Field w = e.witness(mesh);
    const AdmissibilityReport rep = admissibility_check(mesh, trivial, w);
    CHECK(!rep.admissible);
    CHECK(!rep.hom_transitive);
  }
}

TEST_CASE("group action and projector") {
  const CatalogEntry e = catalog_entry("dihedral2d(2)");
  SphereMesh mesh = build_circle_mesh(256);
  build_transports(mesh, e.group);
  const Field w = e.witness(mesh);
  // The witness is a fixed point of every element action.
  for (const auto& elem : e.group.elements) {
    const Field gw = apply_element(mesh, e.group, w, elem.label);
    CHECK((gw.values - w.values).cwiseAbs().maxCoeff() < 1e-10);
  }
  // The projector is idempotent and fixes the witness.
  const Field pw = equivariant_project(mesh, e.group, w);
  CHECK((pw.values - w.values).cwiseAbs().maxCoeff() < 1e-10);
  // A random field becomes equivariant after projection.
  Field r = Field::zero(mesh, 2);
  std::mt19937 rng(11);
  std::normal_distribution<double> dist;
  for (int i = 0; i < r.values.size(); ++i) r.values(i) = dist(rng);
  const Field pr = equivariant_project(mesh, e.group, r);
  CHECK(equivariance_defect(mesh, e.group, pr) < 1e-10);
  const Field ppr = equivariant_project(mesh, e.group, pr);
  CHECK((ppr.values - pr.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("segregation map") {
  Field u;
  u.values.resize(1, 2);
  u.values << 0.7, 0.3;
  const Field s = segregate(u);
  CHECK(s.values(0, 0) == Catch::Approx(0.4).margin(1e-15));
  CHECK(s.values(0, 1) == 0.0);

  // Equal components annihilate.
  Field v;
  v.values = Eigen::MatrixXd::Constant(5, 2, 1.3);
  CHECK(segregate(v).values.cwiseAbs().maxCoeff() == 0.0);

  // Disjointly supported fields are unchanged, and outputs always have
  // vanishing pairwise products.
  const CatalogEntry e = catalog_entry("dihedral2d(3)");
  SphereMesh mesh = build_circle_mesh(258);
  build_transports(mesh, e.group);
  const Field w = e.witness(mesh);
  const Field sw = segregate(w);
  CHECK((sw.values - w.values).cwiseAbs().maxCoeff() < 1e-14);
  std::mt19937 rng(5);
  std::normal_distribution<double> dist;
  Field r = Field::zero(mesh, 3);
  for (int i = 0; i < r.values.size(); ++i) r.values(i) = std::abs(dist(rng));
  const Field sr = segregate(r);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      CHECK(sr.values.col(i).cwiseProduct(sr.values.col(j)).maxCoeff() == 0.0);

  // Segregation commutes with equivariance: an equivariant input stays so.
  const Field pr = equivariant_project(mesh, e.group, clamp_nonnegative({r.values.leftCols(2)}));
  CHECK(equivariance_defect(mesh, e.group, segregate(pr)) < 1e-10);
}

TEST_CASE("normalization and collapse") {
  const SphereMesh mesh = build_circle_mesh(64);
  Field u = Field::zero(mesh, 2);
  u.values.setOnes();
  u.values.col(1) *= 3.0;
  const Field n = normalize_components(mesh, u);
  for (int i = 0; i < 2; ++i)
    CHECK(mesh.mass_inner(n.values.col(i), n.values.col(i)) ==
          Catch::Approx(1.0).margin(1e-12));
  u.values.col(1).setZero();
  CHECK_THROWS_AS(normalize_components(mesh, u), ComponentCollapse);
}

TEST_CASE("face bump witnesses") {
  const SphereMesh mesh = build_icosphere_mesh(3, SphereBase::octahedron);
  const Field tetra = face_bump_witness("tetrahedron", mesh);
  CHECK(tetra.k() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      CHECK(tetra.values.col(i).cwiseProduct(tetra.values.col(j)).maxCoeff() == 0.0);
  const Field paired = face_bump_witness("cube", mesh, "opposite");
  CHECK(paired.k() == 3);
  // Each paired component touches two antipodal caps: it is even under x -> -x.
  const Field faces = face_bump_witness("cube", mesh);
  for (int i = 0; i < 3; ++i)
    CHECK((paired.values.col(i) - faces.values.col(2 * i) - faces.values.col(2 * i + 1))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  CHECK_THROWS_AS(face_bump_witness("dodecahedron", mesh), UnknownId);
  CHECK_THROWS_AS(face_bump_witness("tetrahedron", mesh, "opposite"), Error);
}

TEST_CASE("catalog id parsing") {
  CHECK(catalog_entry("dihedral2d:3").id == "dihedral2d(3)");
  CHECK(catalog_entry("rot2d:2,3").id == "rot2d(2,3)");
  CHECK(catalog_entry("xyz_r3").ell_reference == 3.0);
  CHECK(catalog_entry("prism3d(4)").ell_reference == 5.0);
  CHECK(std::isnan(catalog_entry("tetra_k4").ell_reference));
  CHECK_THROWS_AS(catalog_entry("nope"), UnknownId);
  CHECK_THROWS_AS(catalog_entry("rot2d(1,1)"), UnknownId);
  CHECK_THROWS_AS(catalog_entry("dihedral2d(x)"), UnknownId);
  CHECK(catalog_ids().size() == 8);
}
