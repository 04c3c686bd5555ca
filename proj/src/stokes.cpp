#include "hhj/stokes.hpp"

namespace hhj {

StokesSolution solve_stokes(const ManufacturedCase& mcase, std::shared_ptr<const Mesh> mesh, int k,
                            const SolveOptions& options, int threads, Representation rep) {
  Discretization disc(std::move(mesh), k);
  LinearSystem system = assemble_system(mcase, disc, rep, threads);
  SolveReport report = solve(system, options);
  const Eigen::VectorXd& x = report.solution;
  FEFunction sigma(disc.sigma, x.segment(system.offset_sigma, system.num_sigma()));
  FEFunction psi(disc.stream, x.segment(system.offset_stream, system.num_stream()));
  FEFunction lambda;
  if (disc.multiplier)
    lambda = FEFunction(disc.multiplier, x.segment(system.offset_multiplier, system.num_multiplier()));
  return {std::move(disc), std::move(system), std::move(report), std::move(sigma), std::move(psi),
          std::move(lambda)};
}

}  // namespace hhj
