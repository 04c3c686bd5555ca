#pragma once

#include "hhj/assembly.hpp"
#include "hhj/solver.hpp"

namespace hhj {

/// Discrete solution (sigma_h, psi_h, lambda_h) of the stream function method.
struct StokesSolution {
  Discretization disc;
  LinearSystem system;
  SolveReport report;
  FEFunction sigma;
  FEFunction psi;
  FEFunction lambda;  ///< 3D only
};

StokesSolution solve_stokes(const ManufacturedCase& mcase, std::shared_ptr<const Mesh> mesh, int k,
                            const SolveOptions& options = {}, int threads = 1,
                            Representation rep = Representation::Primal);

}  // namespace hhj
