#include "hhj/study.hpp"

#include "hhj/stokes.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace hhj {

std::string to_string(TableFormat format) {
  return format == TableFormat::Csv ? "csv" : "markdown";
}

TableFormat table_format_from_string(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "markdown" || name == "md") return TableFormat::Markdown;
  throw Error("unknown output format '" + name + "' (expected csv or markdown)");
}

std::vector<int> default_levels(int dim, int order) {
  if (dim == 2) {
    if (order == 2) return {4, 8, 16, 32, 64};
    if (order == 3) return {4, 8, 16, 32};
    return {2, 4, 8, 16};
  }
  if (order == 2) return {1, 2, 4};
  return {1, 2};
}

void StudyConfig::validate() {
  require(dim == 2 || dim == 3, "dim must be 2 or 3");
  require(supported_order(dim, order),
          "order k=" + std::to_string(order) + " is not supported in " + std::to_string(dim) + "D");
  if (levels.empty()) levels = default_levels(dim, order);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    require(levels[i] >= 1, "levels must be positive");
    require(i == 0 || levels[i] > levels[i - 1], "levels must be strictly increasing");
  }
  require(nu > 0.0 && std::isfinite(nu), "nu must be positive");
  require(tol >= 1e-14 && tol <= 1e-6, "tol must lie in [1e-14, 1e-6]");
  require(threads >= 1, "threads must be at least 1");
}

StudyConfig config_from_json(const std::string& text, StudyConfig base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("invalid JSON config: ") + e.what());
  }
  require(j.is_object(), "JSON config must be an object");
  try {
    if (j.contains("dim")) base.dim = j["dim"].get<int>();
    if (j.contains("order")) base.order = j["order"].get<int>();
    if (j.contains("levels")) base.levels = j["levels"].get<std::vector<int>>();
    if (j.contains("nu")) base.nu = j["nu"].get<double>();
    if (j.contains("tol")) base.tol = j["tol"].get<double>();
    if (j.contains("format")) base.format = table_format_from_string(j["format"].get<std::string>());
    if (j.contains("seed")) base.seed = j["seed"].get<unsigned long long>();
    if (j.contains("threads")) base.threads = j["threads"].get<int>();
    if (j.contains("perturbation")) base.perturbation = j["perturbation"].get<bool>();
    if (j.contains("method")) base.method = solver_method_from_string(j["method"].get<std::string>());
    if (j.contains("timing")) base.timing = j["timing"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad value in JSON config: ") + e.what());
  }
  return base;
}

StudyConfig load_config(const std::string& path, StudyConfig base) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str(), std::move(base));
}

namespace {

SolveOptions solve_options(const StudyConfig& config) {
  SolveOptions opts;
  opts.method = config.method;
  opts.tol = config.tol;
  return opts;
}

double relative_change(const Eigen::VectorXd& x, const Eigen::VectorXd& reference) {
  const double scale = reference.norm();
  return scale > 0.0 ? (x - reference).norm() / scale : (x - reference).norm();
}

std::string format(const char* fmt, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), fmt, value);
  return buffer;
}

}  // namespace

LevelResult run_level(const StudyConfig& config, int n) {
  const auto start = std::chrono::steady_clock::now();
  const ManufacturedCase mcase(config.dim, config.nu);
  auto mesh = std::make_shared<const Mesh>(Mesh::structured(config.dim, n));
  const SolveOptions opts = solve_options(config);

  const StokesSolution sol = solve_stokes(mcase, mesh, config.order, opts, config.threads);
  const PressureRecovery pr = recover_pressure(sol.sigma, mcase, opts, config.threads);

  LevelResult out;
  out.n = n;
  out.errors = error_norms(mcase, sol.sigma, sol.psi, pr.pressure, config.threads);
  out.errors.ndof_sigma = sol.disc.sigma->num_dofs();
  out.errors.ndof_stream = sol.disc.stream->num_dofs();
  out.errors.ndof_multiplier = sol.disc.multiplier ? sol.disc.multiplier->num_dofs() : 0;
  out.solver_residual = sol.report.residual;
  out.pressure_w = pr.relative_w();
  if (sol.lambda.space) out.multiplier_ratio = gradient_norm(sol.lambda) / load_norm(mcase, *mesh);
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Rates rates(const std::vector<LevelResult>& levels, std::size_t i) {
  require(i >= 1 && i < levels.size(), "eoc needs a previous level");
  const ErrorReport& p = levels[i - 1].errors;
  const ErrorReport& c = levels[i].errors;
  return {eoc(p.err_h1semi_u, c.err_h1semi_u), eoc(p.err_l2_sigma, c.err_l2_sigma),
          eoc(p.err_l2_p, c.err_l2_p), eoc(p.err_l2_u, c.err_l2_u)};
}

void write_header(const StudyConfig& config, std::ostream& out) {
  if (config.format == TableFormat::Csv) {
    out << "level,nT,ndof_sigma,ndof_stream,ndof_multiplier,err_h1semi_u,eoc_h1semi_u,"
           "err_l2_sigma,eoc_l2_sigma,err_l2_p,eoc_l2_p,err_l2_u,eoc_l2_u,solver_residual,"
           "wall_time_s\n";
    return;
  }
  out << "| n | \\|T\\| | ndof σ | ndof ψ | ndof λ | ‖∇u − ∇u_h‖ (eoc) "
         "| ‖σ − σ_h‖/ν (eoc) | ‖p − p_h‖ (eoc) | ‖u − u_h‖ (eoc) "
         "| residual | time [s] |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|\n";
}

void write_row(const StudyConfig& config, const std::vector<LevelResult>& levels, std::size_t i,
               std::ostream& out) {
  const LevelResult& r = levels[i];
  const ErrorReport& e = r.errors;
  const bool has_rate = i > 0;
  const Rates eo = has_rate ? rates(levels, i) : Rates{};
  const double time = config.timing ? r.wall_time_s : 0.0;
  const double errs[4] = {e.err_h1semi_u, e.err_l2_sigma, e.err_l2_p, e.err_l2_u};
  const double eocs[4] = {eo.h1semi_u, eo.l2_sigma, eo.l2_p, eo.l2_u};

  if (config.format == TableFormat::Csv) {
    out << r.n << ',' << e.num_elements << ',' << e.ndof_sigma << ',' << e.ndof_stream << ','
        << e.ndof_multiplier;
    for (int j = 0; j < 4; ++j) {
      out << ',' << format("%.6e", errs[j]) << ',';
      if (has_rate) out << format("%.4f", eocs[j]);
    }
    out << ',' << format("%.3e", r.solver_residual) << ',' << format("%.3f", time) << '\n';
    return;
  }
  out << "| " << r.n << " | " << e.num_elements << " | " << e.ndof_sigma << " | " << e.ndof_stream
      << " | " << e.ndof_multiplier;
  for (int j = 0; j < 4; ++j) {
    out << " | " << format("%.4e", errs[j]) << ' '
        << (has_rate ? "(" + format("%.4f", eocs[j]) + ")" : std::string("(-)"));
  }
  out << " | " << format("%.1e", r.solver_residual) << " | " << format("%.2f", time) << " |\n";
}

StudyResult run_study(StudyConfig config, std::ostream& out) {
  config.validate();
  StudyResult result{config, {}};
  write_header(config, out);
  out.flush();
  for (int n : config.levels) {
    try {
      result.levels.push_back(run_level(config, n));
    } catch (...) {
      out.flush();
      throw;
    }
    write_row(config, result.levels, result.levels.size() - 1, out);
    out.flush();
  }
  return result;
}

bool CheckReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

double nt_jump(const FEFunction& sigma_h) {
  const FESpace& space = *sigma_h.space;
  const Mesh& mesh = space.mesh();
  const int d = mesh.dim();
  const QuadratureRule& rule = simplex_rule(d - 1, 2 * space.order() + 2);

  auto nt_trace = [d](const Eigen::VectorXd& s, const Vec& n) {
    Mat m(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) m(r, c) = s[r * d + c];
    const Vec sn = m * n;
    return Vec(sn - n.dot(sn) * n);
  };

  double jump = 0.0;
  double scale = 0.0;
  for (int f = 0; f < mesh.num_facets(); ++f) {
    const auto owners = mesh.facet_owners(f);
    const Vec n = mesh.facet_frame(f).normal;
    const int e0 = owners[0].element;
    const auto& g0 = mesh.element_geometry(e0);
    for (const Vec& xhat : entity_points(mesh, mesh.facet_mask(owners[0].local_facet), rule)) {
      const Vec x = g0.map(xhat);
      const Vec t0 = nt_trace(sigma_h.value(e0, x), n);
      scale = std::max(scale, t0.cwiseAbs().maxCoeff());
      if (owners.size() < 2) continue;
      const Vec t1 = nt_trace(sigma_h.value(owners[1].element, x), n);
      jump = std::max(jump, (t0 - t1).cwiseAbs().maxCoeff());
    }
  }
  return scale > 0.0 ? jump / scale : jump;
}

CheckReport run_checks(StudyConfig config, std::ostream& out) {
  config.validate();
  const int n = config.levels.front();
  const int d = config.dim;
  const int k = config.order;
  const SolveOptions opts = solve_options(config);
  auto mesh = std::make_shared<const Mesh>(Mesh::structured(d, n));
  CheckReport report;

  auto record = [&](std::string name, double value, double threshold, std::string detail = {}) {
    CheckResult c{std::move(name), value, threshold, value <= threshold, std::move(detail)};
    char line[256];
    std::snprintf(line, sizeof(line), "%s %-28s value=%.3e limit=%.1e", c.passed ? "PASS" : "FAIL",
                  c.name.c_str(), c.value, c.threshold);
    out << line;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
    out.flush();
    report.checks.push_back(std::move(c));
  };

  out << "checks: dim=" << d << " k=" << k << " n=" << n << " nu=" << format("%g", config.nu)
      << " seed=" << config.seed << '\n';

  const ManufacturedCase mcase(d, config.nu);
  const StokesSolution base = solve_stokes(mcase, mesh, k, opts, config.threads);
  const PressureRecovery pr = recover_pressure(base.sigma, mcase, opts, config.threads);
  const ErrorReport errs = error_norms(mcase, base.sigma, base.psi, pr.pressure, config.threads);

  record("exact_sequence", errs.max_div_u, 1e-12, "max |div u_h| at quadrature points");

  const SparseMatrix bp = assemble_b(*base.disc.sigma, *base.disc.stream, Representation::Primal,
                                     config.threads);
  const SparseMatrix bd = assemble_b(*base.disc.sigma, *base.disc.stream, Representation::Dual,
                                     config.threads);
  record("representation_equivalence", relative_difference(bp, bd), 1e-12,
         "primal vs dual b, max-entry relative");

  if (d == 3) {
    record("multiplier_vanishing", gradient_norm(base.lambda) / load_norm(mcase, *mesh), 1e-8,
           "||grad lambda_h|| / ||f||");
  }

  if (config.perturbation) {
    ManufacturedCase perturbed = mcase;
    perturbed.theta_scale = 1.0;
    const StokesSolution sol = solve_stokes(perturbed, mesh, k, opts, config.threads);
    record("pressure_robustness", relative_change(sol.psi.coefficients, base.psi.coefficients),
           1e-8, "f -> f + grad(theta), relative psi_h change");
  }

  {
    const double small = 1e-6;
    const StokesSolution one = solve_stokes(ManufacturedCase(d, 1.0), mesh, k, opts, config.threads);
    const StokesSolution tiny =
        solve_stokes(ManufacturedCase(d, small), mesh, k, opts, config.threads);
    record("viscosity_independence_psi",
           relative_change(tiny.psi.coefficients, one.psi.coefficients), 1e-8,
           "psi_h for nu = 1 vs 1e-6");
    record("viscosity_scaling_sigma",
           relative_change(tiny.sigma.coefficients / small, one.sigma.coefficients), 1e-8,
           "sigma_h(1e-6) * 1e6 vs sigma_h(1)");
  }

  record("pressure_recovery_w", pr.relative_w(), 1e-8, "||w_h||_{1,h} / (||p_h|| + ||f||)");

  {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    FEFunction random_sigma(base.disc.sigma);
    for (Eigen::Index i = 0; i < random_sigma.coefficients.size(); ++i)
      random_sigma.coefficients[i] = uniform(rng);
    record("nt_continuity", nt_jump(random_sigma), 1e-12,
           "seeded random sigma_h, max facet nt mismatch");
  }

  out << (report.passed() ? "all checks passed" : "some checks FAILED") << '\n';
  return report;
}

}  // namespace hhj
