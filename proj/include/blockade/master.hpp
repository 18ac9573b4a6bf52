#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "blockade/lattice.hpp"

namespace blockade {

// Tridiagonal birth-death generator over excitation number: W_{n-1,n} = down[n],
// W_{n+1,n} = up[n], W_{n,n} = -(up[n] + down[n]).
struct RateMatrix {
    int n_max = 0;
    std::vector<double> down;
    std::vector<double> up;

    Eigen::MatrixXd generator() const;
    // Normalized null vector via the detailed-balance recurrence (log domain).
    std::vector<double> stationary() const;
};

// 1D rates from the closed-form transition coefficients.
RateMatrix build_rates_1d(int L);

// Rates measured by census on an enumerated space: T up/down as the mean
// number of links per state between adjacent columns. The down rates must
// come out exactly n (every excitation is removable) and are asserted.
RateMatrix build_rates_2d(const ConfigSpace& space);

// Solves dp/dt = 2 omega^2 t W p through the substitution tau = (omega t)^2,
// i.e. p(t) = exp(tau W) p0, by a symmetrized spectral decomposition.
std::vector<std::vector<double>> solve_master(const RateMatrix& rates,
                                              const std::vector<double>& p0,
                                              const std::vector<double>& omega_times);

// Closed-form ring equilibrium: p_n = phi^{-L} nu_n with its raw sum and a
// renormalized copy.
struct Equilibrium {
    int L = 0;
    std::vector<double> raw;
    double raw_sum = 0.0;
    std::vector<double> normalized;
};

Equilibrium equilibrium_closed_form(int L);

// Least-squares fit of log(deviation) = log(A) - lambda * (omega t)^2.
struct RelaxationFit {
    double lambda = 0.0;
    double log_amplitude = 0.0;
    double r_squared = 0.0;
};

RelaxationFit gaussian_relaxation_fit(const std::vector<double>& omega_times,
                                      const std::vector<double>& deviations);

std::string rate_table_json(const RateMatrix& rates);

}  // namespace blockade
