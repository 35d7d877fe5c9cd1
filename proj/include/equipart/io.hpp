#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "equipart/ball.hpp"
#include "equipart/errors.hpp"
#include "equipart/field.hpp"
#include "equipart/mesh.hpp"
#include "equipart/partition.hpp"

namespace equipart {

inline constexpr const char* kVersion = "1.0.0";

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << content;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Structured-text field file: a header with the mesh content hash (so a
/// reload can detect mesh mismatches), then one row of component values per
/// vertex.
inline void write_field(const std::filesystem::path& path, const SphereMesh& mesh,
                        const Field& u) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# equipart field v1\n";
  os << "mesh_hash " << mesh.content_hash() << "\n";
  os << "n " << u.n() << "\n";
  os << "k " << u.k() << "\n";
  for (int v = 0; v < u.n(); ++v) {
    for (int i = 0; i < u.k(); ++i) os << (i ? " " : "") << u.values(v, i);
    os << "\n";
  }
  detail::write_text_file(path, os.str());
}

inline Field read_field(const std::filesystem::path& path, const SphereMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field file: " + path.string());
  std::string line, key, hash;
  std::getline(in, line);  // header comment
  int n = 0, k = 0;
  in >> key >> hash;
  if (key != "mesh_hash") throw Error("malformed field file: " + path.string());
  in >> key >> n >> key >> k;
  if (hash != mesh.content_hash())
    throw IncompatibleMesh("field file was written for a different mesh: " +
                           path.string());
  if (n != mesh.n_vertices() || k <= 0)
    throw IncompatibleMesh("field file shape mismatch: " + path.string());
  Field u;
  u.values.resize(n, k);
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < k; ++i)
      if (!(in >> u.values(v, i)))
        throw Error("truncated field file: " + path.string());
  return u;
}

/// Sweep summary CSV: one row per beta.
inline void write_sweep_csv(const std::filesystem::path& path,
                            const EllEstimate& est) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "beta,ell_beta,ell_upper,lambda_beta,interaction\n";
  for (std::size_t i = 0; i < est.betas.size(); ++i)
    os << est.betas[i] << ',' << est.ell_betas[i] << ',' << est.ell_uppers[i] << ','
       << est.results[i].lambda_beta << ',' << est.results[i].interaction << "\n";
  detail::write_text_file(path, os.str());
}

/// Radial diagnostics CSV with columns r, H, E, N, J_1..J_k.
inline void write_diagnostics_csv(const std::filesystem::path& path,
                                  const RadialDiagnostics& diag) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "r,H,E,N";
  for (std::size_t i = 0; i < diag.J.size(); ++i) os << ",J_" << (i + 1);
  os << "\n";
  for (int j = 0; j < diag.radii.size(); ++j) {
    os << diag.radii[j] << ',' << diag.H[j] << ',' << diag.E[j] << ',' << diag.Nq[j];
    for (std::size_t i = 0; i < diag.J.size(); ++i) os << ',' << diag.J[i][j];
    os << "\n";
  }
  detail::write_text_file(path, os.str());
}

/// Per-beta structured-text records of a sweep (value, multiplier,
/// interaction, iteration data and the field file each record refers to).
inline void write_sweep_records(const std::filesystem::path& path,
                                const EllEstimate& est) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < est.results.size(); ++i) {
    const PartitionResult& r = est.results[i];
    os << "record " << i << "\n"
       << "  beta " << r.beta << "\n"
       << "  ell_beta " << r.ell_beta << "\n"
       << "  lambda_beta " << r.lambda_beta << "\n"
       << "  interaction " << r.interaction << "\n"
       << "  iterations " << r.iterations << "\n"
       << "  residual " << r.residual << "\n"
       << "  field field_" << std::setfill('0') << std::setw(3) << i
       << std::setfill(' ') << ".txt\n";
  }
  detail::write_text_file(path, os.str());
}

/// Resolved run configuration + version stamp, written next to all outputs so
/// a run directory is self-contained.
inline void write_run_config(const std::filesystem::path& dir,
                             const nlohmann::json& config) {
  nlohmann::json out = config;
  out["version"] = kVersion;
  detail::write_text_file(dir / "config.json", out.dump(2) + "\n");
}

/// Machine-readable error record for failed CLI runs.
inline void write_error_record(const std::filesystem::path& dir,
                               const std::string& kind, const std::string& message) {
  nlohmann::json rec;
  rec["error"] = kind;
  rec["message"] = message;
  rec["version"] = kVersion;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (!ec) detail::write_text_file(dir / "error.json", rec.dump(2) + "\n");
}

}  // namespace equipart
