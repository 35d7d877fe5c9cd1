#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "equipart/catalog.hpp"
#include "equipart/io.hpp"

using namespace equipart;
namespace fs = std::filesystem;

TEST_CASE("field files round-trip and detect mesh mismatches") {
  const fs::path dir = fs::temp_directory_path() / "equipart_io_test";
  fs::create_directories(dir);
  CatalogEntry entry = catalog_entry("dihedral2d(2)");
  SphereMesh mesh = build_circle_mesh(128);
  build_transports(mesh, entry.group);
  const Field w = entry.witness(mesh);

  const fs::path file = dir / "witness.txt";
  write_field(file, mesh, w);
  const Field back = read_field(file, mesh);
  REQUIRE(back.values.rows() == w.values.rows());
  REQUIRE(back.values.cols() == w.values.cols());
  CHECK((back.values - w.values).cwiseAbs().maxCoeff() == 0.0);

  SphereMesh other = build_circle_mesh(256);
  CHECK_THROWS_AS(read_field(file, other), IncompatibleMesh);
  CHECK_THROWS_AS(read_field(dir / "missing.txt", mesh), Error);

  // Truncated file.
  std::string text;
  {
    std::ifstream in(file);
    std::getline(in, text);
    text += "\nmesh_hash " + mesh.content_hash() + "\nn 128\nk 2\n1.0 0.0\n";
  }
  detail::write_text_file(dir / "short.txt", text);
  CHECK_THROWS_AS(read_field(dir / "short.txt", mesh), Error);
}

TEST_CASE("sweep and error records have the expected shape") {
  const fs::path dir = fs::temp_directory_path() / "equipart_io_test";
  fs::create_directories(dir);
  EllEstimate est;
  est.betas = {10, 40};
  est.ell_betas = {0.8, 0.9};
  est.ell_uppers = {1.1, 1.05};
  est.results.resize(2);
  est.results[0].lambda_beta = 0.9;
  est.results[1].lambda_beta = 0.95;
  write_sweep_csv(dir / "sweep.csv", est);
  std::ifstream in(dir / "sweep.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "beta,ell_beta,ell_upper,lambda_beta,interaction");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 2);

  write_error_record(dir, "UnknownId", "no such entry");
  std::ifstream err(dir / "error.json");
  std::string all((std::istreambuf_iterator<char>(err)),
                  std::istreambuf_iterator<char>());
  CHECK(all.find("UnknownId") != std::string::npos);
  CHECK(all.find("no such entry") != std::string::npos);
}
