#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "blockade/lattice.hpp"

namespace blockade {

struct ModelParams {
    double omega = 1.0;
};

// Pure state over the ConfigSpace basis, stamped with its time in units of
// 1/Omega (omega_t).
struct StateVector {
    Eigen::VectorXcd amplitudes;
    double omega_t = 0.0;
};

StateVector basis_state(const ConfigSpace& space, ConfigSpace::Mask mask);

// (H psi)_i = omega * sum over adjacent configurations j of psi_j.
Eigen::VectorXcd apply_hamiltonian(const ConfigSpace& space, const ModelParams& params,
                                   const Eigen::VectorXcd& psi);

struct PropagationOptions {
    double tolerance = 1e-9;  // global 2-norm error budget over the whole span
    int krylov_dim = 40;
    double max_step = 1.0;    // largest substep in omega_t
    long max_substeps = 1000000;
};

// exp(-i H t) psi0 at each requested omega_t (ascending, >= 0), matrix-free
// Krylov stepping with per-substep error control. The visitor form hands each
// snapshot to `visit` without retaining it (memory-lean for large spaces).
void propagate_visit(const ConfigSpace& space, const ModelParams& params,
                     const StateVector& psi0, const std::vector<double>& omega_times,
                     const std::function<void(const StateVector&)>& visit,
                     const PropagationOptions& options = {});

std::vector<StateVector> propagate(const ConfigSpace& space, const ModelParams& params,
                                   const StateVector& psi0,
                                   const std::vector<double>& omega_times,
                                   const PropagationOptions& options = {});

// Reference propagation through a full dense eigendecomposition; exact up to
// roundoff but O(dim^3), intended for small spaces and cross-checks.
std::vector<StateVector> propagate_dense(const ConfigSpace& space, const ModelParams& params,
                                         const StateVector& psi0,
                                         const std::vector<double>& omega_times);

// (<N>, <N^2>) from the column projection of psi.
std::pair<double, double> excitation_moments(const ConfigSpace& space,
                                             const StateVector& psi);

// Mean of p_n over a uniform sample grid covering [omega_t_begin, omega_t_end]
// (both endpoints included), renormalized to sum to one.
std::vector<double> time_averaged_distribution(const ConfigSpace& space,
                                               const ModelParams& params,
                                               const StateVector& psi0,
                                               double omega_t_begin, double omega_t_end,
                                               int samples,
                                               const PropagationOptions& options = {});

}  // namespace blockade
