#pragma once

#include <vector>

namespace blockade {

// Drift F(x) = (1 - 5x + 5x^2)/(1 - x).
double fpe_drift(double x);
// Diffusion D(x) = (1 - 3x + 3x^2)/((1 - x) L).
double fpe_diffusion(double x, int L);
// dD/dx in closed form.
double fpe_diffusion_derivative(double x, int L);

struct FpeField {
    int L = 0;
    std::vector<double> grid;  // ascending x values in [0, 1/2]
    std::vector<double> F;
    std::vector<double> D;
};

// Pointwise field table on a caller grid.
FpeField fields(int L, const std::vector<double>& grid);
// Uniform vertex-centered grid spanning [0, 1/2] inclusive.
FpeField uniform_field(int L, int nodes);

// Conservative finite-volume solution of the continuum equation in
// tau = (omega t)^2, no-flux at both ends, vertex-centered control volumes
// (trapezoid mass). Returns node densities at each requested omega_t.
std::vector<std::vector<double>> solve_fpe(const FpeField& field,
                                           const std::vector<double>& p0,
                                           const std::vector<double>& omega_times);

// Discrete zero-flux stationary profile of the same scheme, normalized.
std::vector<double> stationary_profile(const FpeField& field);

// Jacobian normalization for the constant-diffusion coordinate change:
// `scaled` uses J = 1/sqrt(2 L D) (L-independent y), `literal` uses 1/sqrt(D).
enum class JacobianConvention { scaled, literal };

struct TransformedField {
    JacobianConvention convention = JacobianConvention::scaled;
    int L = 0;
    std::vector<double> x;          // dense uniform grid on [0, 1/2]
    std::vector<double> y;          // y(x), strictly increasing, y(0) = 0
    std::vector<double> jacobian;   // J(x) = dy/dx
    std::vector<double> f_tilde;    // transformed drift
    std::vector<double> potential;  // U(y), U(y(0)) = 0, F~ = -dU/dy
    double a1 = 0.0;                // quadratic fit y ~ a1 x + a2 x^2
    double a2 = 0.0;
    double fit_residual = 0.0;      // relative RMS residual of the fit
};

TransformedField transform(const FpeField& field,
                           JacobianConvention convention = JacobianConvention::scaled,
                           int grid_points = 2001);

// Inverts y(x) exactly (Newton seeded by the quadratic-fit inverse).
double inverse_map(const TransformedField& tf, double y);

// Uniform density over the excitation bin [(n0-1/2)/L, (n0+1/2)/L] clipped to
// [0, 1/2], expressed on the field grid with unit trapezoid mass.
std::vector<double> column_top_hat(const FpeField& field, int n0);
// Integrates a nodal density over the excitation bins; entry n is the mass in
// [(n-1/2)/L, (n+1/2)/L] clipped to [0, 1/2], for n = 0..n_max.
std::vector<double> bin_density_to_columns(const FpeField& field,
                                           const std::vector<double>& density, int n_max);

// Bridges the discrete and continuum descriptions: master equation from the
// closed-form rates vs the FPE from the matched top-hat initial condition,
// compared through excitation-number bins.
struct ConsistencyReport {
    int L = 0;
    int n0 = 0;
    std::vector<double> omega_times;
    std::vector<double> tv;
    double max_tv = 0.0;
    double master_stationary_mean = 0.0;
    double fpe_stationary_mean = 0.0;
};

ConsistencyReport discrete_continuum_consistency(int L, int n0,
                                                 const std::vector<double>& omega_times,
                                                 int nodes_per_column = 3);

}  // namespace blockade
