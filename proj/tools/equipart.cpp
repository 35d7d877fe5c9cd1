// Command-line driver: partition sweeps, ball solves, drift checks, catalog
// inspection, and the acceptance suite. Exit codes: 0 ok, 1 numeric failure,
// 2 configuration error.
#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "equipart/acceptance.hpp"
#include "equipart/ball.hpp"
#include "equipart/catalog.hpp"
#include "equipart/io.hpp"
#include "equipart/partition.hpp"

namespace fs = std::filesystem;
using namespace equipart;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

/// Parses a geometric schedule "start:end:xFactor" (e.g. "10:2560:x4").
std::vector<double> parse_schedule(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
  if (parts.size() != 3 || parts[2].empty() || parts[2][0] != 'x')
    throw Error("schedule must be start:end:xFactor, got '" + text + "'");
  double start = 0, end = 0, factor = 0;
  try {
    start = std::stod(parts[0]);
    end = std::stod(parts[1]);
    factor = std::stod(parts[2].substr(1));
  } catch (const std::exception&) {
    throw Error("schedule has non-numeric fields: '" + text + "'");
  }
  if (start <= 0 || end < start || factor <= 1)
    throw Error("schedule needs 0 < start <= end and factor > 1: '" + text + "'");
  std::vector<double> betas;
  for (double b = start; b <= end * (1 + 1e-12); b *= factor) betas.push_back(b);
  if (betas.back() < end * (1 - 1e-12)) betas.push_back(end);
  return betas;
}

fs::path make_out_dir(const std::string& out, const std::string& fallback) {
  fs::path dir = out.empty() ? fs::path("runs") / fallback : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

SphereMesh resolve_mesh(const CatalogEntry& entry, int n_override) {
  if (n_override > 0) {
    if (entry.dimension != 2)
      throw Error("--n overrides the mesh size only for circle entries");
    return build_circle_mesh(n_override);
  }
  return entry.default_mesh();
}

struct GlobalOpts {
  std::string out;
  unsigned seed = 12345;
  int threads = 0;
  bool quick = false;
};

int run_partition(const GlobalOpts& g, const std::string& triplet_id,
                  const std::string& betas_text, int n_override, int n_seeds) {
  const fs::path dir = make_out_dir(g.out, "partition");
  CatalogEntry entry;
  std::vector<double> betas;
  try {
    entry = catalog_entry(triplet_id);
    betas = parse_schedule(betas_text);
  } catch (const UnknownId& ex) {
    write_error_record(dir, "UnknownId", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const Error& ex) {
    write_error_record(dir, "ConfigError", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  try {
    SphereMesh mesh = resolve_mesh(entry, n_override);
    build_transports(mesh, entry.group);

    nlohmann::json cfg;
    cfg["command"] = "partition";
    cfg["triplet"] = entry.id;
    cfg["betas"] = betas_text;
    cfg["betas_resolved"] = betas;
    cfg["n_vertices"] = mesh.n_vertices();
    cfg["mesh_hash"] = mesh.content_hash();
    cfg["seed"] = g.seed;
    cfg["seeds"] = n_seeds;
    write_run_config(dir, cfg);

    SweepOptions opts;
    opts.n_seeds = n_seeds;
    opts.rng_seed = g.seed;
    const EllEstimate est =
        beta_sweep(catalog_triplet(entry), mesh, betas, entry.witness(mesh), opts);

    write_sweep_csv(dir / "sweep.csv", est);
    write_sweep_records(dir / "records.txt", est);
    for (std::size_t i = 0; i < est.results.size(); ++i) {
      std::ostringstream name;
      name << "field_" << std::setfill('0') << std::setw(3) << i << ".txt";
      write_field(dir / name.str(), mesh, est.results[i].field);
    }

    const InteractionBoundReport ib = interaction_bound_check(mesh, est.results);
    std::ostringstream rep;
    rep << std::setprecision(10);
    rep << "triplet " << entry.id << "\n"
        << "ell_upper " << est.ell_upper << "\n"
        << "ell_extrapolated " << est.ell_extrapolated << "\n"
        << "lambda_extrapolated " << est.lambda_extrapolated << "\n"
        << "fit_slope " << est.fit_slope << "\n"
        << "best_seed " << est.best_seed << "\n";
    if (std::isfinite(entry.ell_reference)) {
      rep << "ell_reference " << entry.ell_reference << " (" << entry.ell_provenance
          << ")\n"
          << "lambda_identity_rel_dev "
          << lambda_identity_check(est.results.back(), entry.ell_reference,
                                   entry.dimension)
          << "\n";
    }
    rep << "scaled_product_bounded " << ib.scaled_product_bounded << "\n"
        << "interaction_vanishing " << ib.interaction_vanishing << "\n";
    detail::write_text_file(dir / "summary.txt", rep.str());

    std::cout << "ell_upper = " << std::setprecision(10) << est.ell_upper
              << "  (outputs in " << dir.string() << ")\n";
    return kExitOk;
  } catch (const Error& ex) {
    write_error_record(dir, "NumericFailure", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitNumeric;
  }
}

int run_ball(const GlobalOpts& g, const std::string& triplet_id, double beta,
             int shells, const std::string& boundary_file) {
  const fs::path dir = make_out_dir(g.out, "ball");
  CatalogEntry entry;
  try {
    entry = catalog_entry(triplet_id);
    if (beta <= 0) throw Error("--beta must be positive");
  } catch (const UnknownId& ex) {
    write_error_record(dir, "UnknownId", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const Error& ex) {
    write_error_record(dir, "ConfigError", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  try {
    SphereMesh mesh = entry.default_mesh();
    build_transports(mesh, entry.group);

    nlohmann::json cfg;
    cfg["command"] = "ball";
    cfg["triplet"] = entry.id;
    cfg["beta"] = beta;
    cfg["shells"] = shells;
    cfg["mesh_hash"] = mesh.content_hash();
    cfg["seed"] = g.seed;
    cfg["boundary"] = boundary_file.empty() ? "(continuation from witness)"
                                            : boundary_file;
    write_run_config(dir, cfg);

    Field trace;
    if (!boundary_file.empty()) {
      trace = read_field(boundary_file, mesh);
    } else {
      // Short warm-started continuation toward the requested beta to obtain a
      // relaxed boundary trace.
      std::vector<double> pre;
      for (double b = std::min(10.0, beta); b < beta * (1 - 1e-12); b *= 4)
        pre.push_back(b);
      pre.push_back(beta);
      SweepOptions opts;
      opts.n_seeds = 1;
      opts.rng_seed = g.seed;
      const EllEstimate est =
          beta_sweep(catalog_triplet(entry), mesh, pre, entry.witness(mesh), opts);
      trace = est.results.back().field;
    }
    write_field(dir / "boundary.txt", mesh, trace);

    const BallField bf = solve_ball(catalog_triplet(entry), mesh, beta, trace,
                                    build_ball_grid(shells));
    const RadialDiagnostics d = diagnostics(bf);
    write_diagnostics_csv(dir / "diagnostics.csv", d);
    const MonotonicityReport mono = almgren_monotonicity_check(d, 0.05, 1.0);

    const double rb = find_r_beta(bf);
    const BallField v = blow_up_rescale(bf, rb);
    const RadialDiagnostics dv = diagnostics(v);
    write_diagnostics_csv(dir / "rescaled_diagnostics.csv", dv);

    const double ell_ref = std::isfinite(entry.ell_reference)
                               ? entry.ell_reference
                               : growth_rate_estimate(dv).value;
    const ACFReport acf = acf_check(dv, ell_ref, 1.0, 50.0);
    const GrowthRateEstimate growth = growth_rate_estimate(dv);
    double n_max = 0.0;
    for (int j = 1; j < dv.radii.size(); ++j) n_max = std::max(n_max, dv.Nq[j]);

    std::ostringstream rep;
    rep << std::setprecision(10);
    rep << "triplet " << entry.id << "\n"
        << "beta " << beta << "\n"
        << "r_beta " << rb << "\n"
        << "H_rescaled_at_1 " << h_at(dv, 1.0) << "\n"
        << "frequency_monotone " << mono.pass << " (max_violation "
        << mono.max_violation << ", threshold " << mono.threshold << ")\n"
        << "max_frequency_rescaled " << n_max << " (bound " << ell_ref * 1.02
        << ", pass " << (n_max <= ell_ref * 1.02) << ")\n"
        << "acf_drift_constant " << acf.C << " (cap 50, pass " << acf.pass << ")\n"
        << "growth_rate " << growth.value << " (tail spread " << growth.tail_range
        << ")\n";
    detail::write_text_file(dir / "report.txt", rep.str());
    std::cout << rep.str() << "outputs in " << dir.string() << "\n";

    const bool ok = mono.pass && acf.pass && n_max <= ell_ref * 1.02;
    if (!ok) write_error_record(dir, "CheckFailed", "a ball-solve check failed");
    return ok ? kExitOk : kExitNumeric;
  } catch (const NotBracketed& ex) {
    write_error_record(dir, "NotBracketed", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const Error& ex) {
    write_error_record(dir, "NumericFailure", ex.what());
    std::cerr << "error: " << ex.what() << "\n";
    return kExitNumeric;
  }
}

RadialDiagnostics read_diagnostics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open diagnostics file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty diagnostics file: " + path);
  int n_cols = 1;
  for (char c : line)
    if (c == ',') ++n_cols;
  const int k = n_cols - 4;
  if (k < 1) throw Error("diagnostics file needs columns r,H,E,N,J_1..: " + path);
  std::vector<std::vector<double>> cols(n_cols);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    for (int c = 0; c < n_cols; ++c) {
      if (!std::getline(ss, tok, ',')) throw Error("short row in " + path);
      cols[c].push_back(std::stod(tok));
    }
  }
  const int m = static_cast<int>(cols[0].size());
  if (m < 2) throw Error("diagnostics file has too few rows: " + path);
  RadialDiagnostics d;
  d.radii.resize(m);
  d.H.resize(m);
  d.E.resize(m);
  d.Nq.resize(m);
  d.interaction_volume = Eigen::VectorXd::Zero(m);
  d.J.assign(k, Eigen::VectorXd(m));
  for (int j = 0; j < m; ++j) {
    d.radii[j] = cols[0][j];
    d.H[j] = cols[1][j];
    d.E[j] = cols[2][j];
    d.Nq[j] = cols[3][j];
    for (int i = 0; i < k; ++i) d.J[i][j] = cols[4 + i][j];
  }
  return d;
}

int run_acf_check(const GlobalOpts& g, const std::string& input, double ell,
                  double r_min, double c_max) {
  try {
    if (ell <= 0) throw Error("--ell must be positive");
    const RadialDiagnostics d = read_diagnostics_csv(input);
    const ACFReport r = acf_check(d, ell, r_min, c_max);
    std::ostringstream rep;
    rep << std::setprecision(10);
    rep << "input " << input << "\n"
        << "ell " << ell << "\n"
        << "drift_constant " << r.C << "\n"
        << "radii_used " << r.n_radii << " on [" << r.r_lo << ", " << r.r_hi
        << "]\n"
        << "pass " << r.pass << " (cap " << c_max << ")\n";
    std::cout << rep.str();
    if (!g.out.empty())
      detail::write_text_file(make_out_dir(g.out, "acf-check") / "acf.txt",
                              rep.str());
    return r.pass ? kExitOk : kExitNumeric;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
}

int run_catalog_list() {
  std::printf("%-16s %3s %3s %10s  %s\n", "id", "dim", "k", "ell_ref",
              "provenance");
  for (const std::string& id : catalog_ids()) {
    std::string concrete = id;
    // Parametrized families are listed with a representative parameter choice.
    if (id == "dihedral2d(d)") concrete = "dihedral2d(2)";
    if (id == "prism3d(d)") concrete = "prism3d(2)";
    if (id == "rot2d(k,m)") concrete = "rot2d(2,2)";
    const CatalogEntry e = catalog_entry(concrete);
    std::printf("%-16s %3d %3d %10.4g  %s\n", id.c_str(), e.dimension, e.k,
                e.ell_reference, e.ell_provenance.c_str());
  }
  return kExitOk;
}

int run_catalog_show(const GlobalOpts& g, const std::string& id) {
  try {
    const CatalogEntry e = catalog_entry(id);
    SphereMesh mesh = e.default_mesh();
    build_transports(mesh, e.group);
    const Field w = e.witness(mesh);
    const AdmissibilityReport rep = admissibility_check(mesh, e.group, w);
    std::ostringstream os;
    os << std::setprecision(10);
    os << "id " << e.id << "\n"
       << "ambient_dimension " << e.dimension << "\n"
       << "components " << e.k << "\n"
       << "group_order " << e.group.order() << "\n"
       << "ell_reference " << e.ell_reference << " (" << e.ell_provenance << ")\n"
       << "default_mesh_vertices " << mesh.n_vertices() << "\n"
       << "mesh_hash " << mesh.content_hash() << "\n"
       << "witness_admissible " << rep.admissible << "\n"
       << "  equivariance_defect " << rep.equivariance << "\n"
       << "  max_pair_product " << rep.max_pair_product << "\n"
       << "  hom_transitive " << rep.hom_transitive << "\n";
    std::cout << os.str();
    if (!g.out.empty()) {
      const fs::path dir = make_out_dir(g.out, "catalog");
      detail::write_text_file(dir / "entry.txt", os.str());
      write_field(dir / "witness.txt", mesh, w);
      nlohmann::json cfg;
      cfg["command"] = "catalog show";
      cfg["id"] = e.id;
      cfg["mesh_hash"] = mesh.content_hash();
      write_run_config(dir, cfg);
    }
    return kExitOk;
  } catch (const UnknownId& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
}

int criterion_id_from_name(const std::string& name) {
  try {
    const int id = std::stoi(name);
    if (id >= 1 && id <= 12) return id;
  } catch (const std::exception&) {
  }
  if (name == "values-circle") return 1;
  if (name == "values-xyz") return 2;
  if (name == "values-prism") return 3;
  if (name == "values-lune") return 4;
  if (name == "multiplier") return 5;
  if (name == "gap") return 6;
  if (name == "almgren") return 7;
  if (name == "blowup") return 8;
  if (name == "doubling") return 9;
  if (name == "acf") return 10;
  if (name == "eigensolve") return 11;
  if (name == "invariants") return 12;
  throw Error("unknown criterion '" + name + "'");
}

int run_verify(const GlobalOpts& g, const std::vector<std::string>& criteria) {
  std::vector<int> only;
  try {
    for (const std::string& c : criteria) only.push_back(criterion_id_from_name(c));
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }

  AcceptanceRunner runner(g.quick);
  int failures = 0;
  std::ostringstream table;
  const auto results = runner.run(only, [&](const CriterionOutcome& r) {
    const char* verdict = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    std::printf("[%s] criterion %2d: %s (%.1fs)\n        %s\n", verdict, r.id,
                r.name.c_str(), r.seconds, r.details.c_str());
    std::fflush(stdout);
    table << verdict << "," << r.id << "," << r.name << "," << r.seconds << ","
          << r.details << "\n";
    if (!r.pass) ++failures;
  });
  if (!g.out.empty()) {
    const fs::path dir = make_out_dir(g.out, "verify");
    detail::write_text_file(dir / "verify.csv",
                            "verdict,id,name,seconds,details\n" + table.str());
    nlohmann::json cfg;
    cfg["command"] = "verify";
    cfg["quick"] = g.quick;
    write_run_config(dir, cfg);
  }
  std::printf("%zu criteria evaluated, %d failed\n", results.size(), failures);
  return failures ? kExitNumeric : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equivariant optimal-partition values on spheres and balls"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--out", g.out, "output directory (default runs/<command>)");
  app.add_option("--seed", g.seed, "random seed for perturbed sweep starts");
  app.add_option("--threads", g.threads, "linear-algebra thread count");
  app.add_flag("--quick", g.quick, "reduced, fast profile where supported");

  auto* p = app.add_subcommand("partition", "value sweep over a beta schedule");
  std::string p_triplet, p_betas = "10:2560:x4";
  int p_n = 0, p_seeds = 3;
  p->add_option("--triplet", p_triplet, "catalog id, e.g. xyz_r3 or dihedral2d:3")
      ->required();
  p->add_option("--betas", p_betas, "geometric schedule start:end:xFactor");
  p->add_option("--n", p_n, "circle mesh size override");
  p->add_option("--seeds", p_seeds, "number of perturbed starts");

  auto* b = app.add_subcommand("ball", "interior solve, blow-up, and checks");
  std::string b_triplet, b_boundary;
  double b_beta = 400.0;
  int b_shells = 96;
  b->add_option("--triplet", b_triplet, "catalog id")->required();
  b->add_option("--beta", b_beta, "coupling strength");
  b->add_option("--shells", b_shells, "radial shells");
  b->add_option("--boundary", b_boundary, "boundary trace field file");

  auto* a = app.add_subcommand("acf-check", "drift-constant check on a diagnostics CSV");
  std::string a_input;
  double a_ell = 0.0, a_rmin = 1.0, a_cmax = 50.0;
  a->add_option("--input", a_input, "diagnostics CSV (r,H,E,N,J_1..)")->required();
  a->add_option("--ell", a_ell, "homogeneity exponent")->required();
  a->add_option("--r-min", a_rmin, "lower end of the checked range");
  a->add_option("--c-max", a_cmax, "largest acceptable drift constant");

  auto* c = app.add_subcommand("catalog", "list or inspect symmetry setups");
  auto* cl = c->add_subcommand("list", "print all entries");
  auto* cs = c->add_subcommand("show", "print one entry with its witness checks");
  std::string c_id;
  cs->add_option("id", c_id, "catalog id")->required();
  c->require_subcommand(1);

  auto* v = app.add_subcommand("verify", "run the acceptance suite");
  std::vector<std::string> v_criteria;
  v->add_option("--criterion", v_criteria,
                "run only the named criteria (id or alias, e.g. acf)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (g.threads > 0) Eigen::setNbThreads(g.threads);

  if (*p) return run_partition(g, p_triplet, p_betas, p_n, p_seeds);
  if (*b) return run_ball(g, b_triplet, b_beta, b_shells, b_boundary);
  if (*a) return run_acf_check(g, a_input, a_ell, a_rmin, a_cmax);
  if (*cl) return run_catalog_list();
  if (*cs) return run_catalog_show(g, c_id);
  if (*v) return run_verify(g, v_criteria);
  return kExitConfig;
}
