// Convergence studies and invariant checks for the stream function Stokes
// discretization.
//
//   hhj_stokes study --dim 2 --order 2 --levels 4,8,16,32,64 --format markdown
//   hhj_stokes check --dim 3 --order 2 --seed 7
//
// Exit status: 0 success, 1 failed check, 2 bad arguments or config,
// 3 solver failure.

#include "hhj/solver.hpp"
#include "hhj/study.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::string format;
  std::string method;
  hhj::StudyConfig config;
  bool no_timing = false;
  bool no_perturbation = false;
};

void add_common(CLI::App& app, Options& o) {
  app.add_option("--config", o.config_path, "JSON config file; command-line flags override it");
  app.add_option("--dim", o.config.dim, "spatial dimension (2 or 3)");
  app.add_option("--order", o.config.order, "stream order k");
  app.add_option("--levels", o.config.levels, "mesh subdivisions n, strictly increasing")
      ->delimiter(',');
  app.add_option("--nu", o.config.nu, "viscosity");
  app.add_option("--tol", o.config.tol, "relative residual tolerance of the linear solver");
  app.add_option("--out", o.out_path, "output file (default: stdout)");
  app.add_option("--format", o.format, "csv or markdown")
      ->check(CLI::IsMember({"csv", "markdown", "md"}));
  app.add_option("--seed", o.config.seed, "seed for the randomized checks");
  app.add_option("--threads", o.config.threads, "assembly threads")->check(CLI::PositiveNumber);
  app.add_option("--method", o.method, "direct or iterative (MINRES)")
      ->check(CLI::IsMember({"direct", "iterative"}));
  app.add_flag("--no-timing", o.no_timing, "write 0 to wall_time_s so output is reproducible");
  app.add_flag("--no-perturbation", o.no_perturbation, "skip the f -> f + grad(theta) check");
}

// JSON first, then every flag given explicitly on the command line.
hhj::StudyConfig resolve(const CLI::App& app, const Options& o) {
  hhj::StudyConfig c;
  if (!o.config_path.empty()) c = hhj::load_config(o.config_path, c);
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--dim")) c.dim = o.config.dim;
  if (given("--order")) c.order = o.config.order;
  if (given("--levels")) c.levels = o.config.levels;
  if (given("--nu")) c.nu = o.config.nu;
  if (given("--tol")) c.tol = o.config.tol;
  if (given("--seed")) c.seed = o.config.seed;
  if (given("--threads")) c.threads = o.config.threads;
  if (given("--format")) c.format = hhj::table_format_from_string(o.format);
  if (given("--method")) c.method = hhj::solver_method_from_string(o.method);
  if (o.no_timing) c.timing = false;
  if (o.no_perturbation) c.perturbation = false;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stream function Stokes solver: convergence studies and invariant checks"};
  app.require_subcommand(1);
  Options study_opts;
  Options check_opts;
  CLI::App* study = app.add_subcommand("study", "run a mesh refinement study and print the table");
  CLI::App* check = app.add_subcommand("check", "run the invariant suite on the coarsest level");
  add_common(*study, study_opts);
  add_common(*check, check_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const bool is_study = study->parsed();
  const Options& o = is_study ? study_opts : check_opts;
  const CLI::App& sub = is_study ? *study : *check;

  hhj::StudyConfig config;
  try {
    config = resolve(sub, o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  std::ofstream file;
  if (!o.out_path.empty()) {
    file.open(o.out_path);
    if (!file) {
      std::cerr << "error: cannot write " << o.out_path << '\n';
      return 2;
    }
  }
  std::ostream& out = o.out_path.empty() ? std::cout : file;

  try {
    if (is_study) {
      hhj::run_study(config, out);
      return 0;
    }
    const hhj::CheckReport report = hhj::run_checks(config, out);
    return report.passed() ? 0 : 1;
  } catch (const hhj::SolveError& e) {
    out.flush();
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    out.flush();
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
