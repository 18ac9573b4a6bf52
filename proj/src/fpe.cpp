#include "blockade/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "blockade/master.hpp"

namespace blockade {

namespace {

void validate_grid(const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("grid needs at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 0.5)
            throw std::invalid_argument("grid points must lie in [0, 1/2]");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw std::invalid_argument("grid must be strictly ascending");
    }
}

double uniform_spacing(const std::vector<double>& grid) {
    const double dx = grid[1] - grid[0];
    for (std::size_t i = 1; i + 1 < grid.size(); ++i)
        if (std::abs(grid[i + 1] - grid[i] - dx) > 1e-12 * std::max(1.0, dx))
            throw std::invalid_argument("solver requires a uniform grid");
    return dx;
}

// Control-volume widths for a vertex-centered uniform grid (trapezoid weights).
std::vector<double> volume_weights(const std::vector<double>& grid, double dx) {
    std::vector<double> w(grid.size(), dx);
    w.front() = w.back() = 0.5 * dx;
    return w;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

struct Scheme {
    // face-centered quantities between consecutive nodes
    std::vector<double> d_face;    // harmonic mean of node diffusion
    std::vector<double> feff_face; // F - D'/2 at the face midpoint
    double dx = 0.0;
};

Scheme make_scheme(const FpeField& field) {
    Scheme s;
    s.dx = uniform_spacing(field.grid);
    const std::size_t n = field.grid.size();
    s.d_face.resize(n - 1);
    s.feff_face.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        s.d_face[i] = 2.0 * field.D[i] * field.D[i + 1] / (field.D[i] + field.D[i + 1]);
        const double xf = 0.5 * (field.grid[i] + field.grid[i + 1]);
        s.feff_face[i] = fpe_drift(xf) - 0.5 * fpe_diffusion_derivative(xf, field.L);
    }
    return s;
}

}  // namespace

double fpe_drift(double x) { return (1.0 - 5.0 * x + 5.0 * x * x) / (1.0 - x); }

double fpe_diffusion(double x, int L) {
    return (1.0 - 3.0 * x + 3.0 * x * x) / ((1.0 - x) * L);
}

double fpe_diffusion_derivative(double x, int L) {
    const double om = 1.0 - x;
    return -(2.0 - 6.0 * x + 3.0 * x * x) / (L * om * om);
}

FpeField fields(int L, const std::vector<double>& grid) {
    if (L < 3) throw std::invalid_argument("fields requires L >= 3");
    validate_grid(grid);
    FpeField f;
    f.L = L;
    f.grid = grid;
    for (double x : grid) {
        f.F.push_back(fpe_drift(x));
        f.D.push_back(fpe_diffusion(x, L));
    }
    return f;
}

FpeField uniform_field(int L, int nodes) {
    if (nodes < 3) throw std::invalid_argument("uniform_field requires at least 3 nodes");
    std::vector<double> grid(nodes);
    for (int i = 0; i < nodes; ++i) grid[i] = 0.5 * static_cast<double>(i) / (nodes - 1);
    return fields(L, grid);
}

std::vector<std::vector<double>> solve_fpe(const FpeField& field,
                                           const std::vector<double>& p0,
                                           const std::vector<double>& omega_times) {
    const std::size_t n = field.grid.size();
    if (p0.size() != n) throw std::invalid_argument("initial density has the wrong dimension");
    for (double v : p0)
        if (v < 0.0) throw std::invalid_argument("initial density has negative entries");
    const Scheme scheme = make_scheme(field);
    const auto w = volume_weights(field.grid, scheme.dx);
    double mass0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass0 += w[i] * p0[i];
    if (std::abs(mass0 - 1.0) > 1e-8)
        throw std::invalid_argument("initial density does not integrate to one");
    for (double t : omega_times)
        if (t < 0.0) throw std::invalid_argument("negative times are not allowed");

    const double d_max = *std::max_element(field.D.begin(), field.D.end());
    double f_max = 0.0;
    for (double f : scheme.feff_face) f_max = std::max(f_max, std::abs(f));
    const double dtau_stable =
        0.4 * std::min(scheme.dx * scheme.dx / d_max, scheme.dx / std::max(f_max, 1e-300));

    std::vector<double> flux(n - 1);
    auto rhs = [&](const std::vector<double>& p, std::vector<double>& dp) {
        for (std::size_t i = 0; i + 1 < n; ++i)
            flux[i] = scheme.feff_face[i] * 0.5 * (p[i] + p[i + 1]) -
                      0.5 * scheme.d_face[i] * (p[i + 1] - p[i]) / scheme.dx;
        for (std::size_t i = 0; i < n; ++i) {
            const double in = i > 0 ? flux[i - 1] : 0.0;
            const double out = i + 1 < n ? flux[i] : 0.0;
            dp[i] = -(out - in) / w[i];
        }
    };

    std::vector<double> p = p0, k1(n), k2(n), k3(n), k4(n), tmp(n);
    auto rk4 = [&](double dt) {
        rhs(p, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = p[i] + dt * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    };

    std::vector<std::vector<double>> out;
    out.reserve(omega_times.size());
    double tau = 0.0;
    long steps = 0;
    for (double t : omega_times) {
        const double tau_target = t * t;
        while (tau_target - tau > 1e-14 * std::max(1.0, tau_target)) {
            const double dt = std::min(dtau_stable, tau_target - tau);
            rk4(dt);
            tau += dt;
            if (++steps > 50'000'000)
                throw std::runtime_error("FPE step budget exhausted: dtau=" +
                                         std::to_string(dtau_stable));
        }
        tau = tau_target;
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += w[i] * p[i];
        if (std::abs(mass - mass0) > 1e-8)
            throw std::runtime_error("FPE mass drift " + std::to_string(mass - mass0) +
                                     " after " + std::to_string(steps) +
                                     " steps (dtau=" + std::to_string(dtau_stable) + ")");
        out.push_back(p);
    }
    return out;
}

std::vector<double> stationary_profile(const FpeField& field) {
    const Scheme scheme = make_scheme(field);
    const std::size_t n = field.grid.size();
    std::vector<double> logp(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = scheme.d_face[i] / scheme.dx + scheme.feff_face[i];
        const double b = scheme.d_face[i] / scheme.dx - scheme.feff_face[i];
        if (a <= 0.0 || b <= 0.0)
            throw std::runtime_error("zero-flux recurrence needs a diffusion-dominated grid");
        logp[i + 1] = logp[i] + std::log(a / b);
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    const auto w = volume_weights(field.grid, scheme.dx);
    std::vector<double> p(n);
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += w[i] * (p[i] = std::exp(logp[i] - top));
    for (double& v : p) v /= mass;
    return p;
}

TransformedField transform(const FpeField& field, JacobianConvention convention,
                           int grid_points) {
    if (grid_points < 11) throw std::invalid_argument("transform needs a denser grid");
    const int L = field.L;
    auto jac = [&](double x) {
        return convention == JacobianConvention::scaled
                   ? 1.0 / std::sqrt(2.0 * L * fpe_diffusion(x, L))
                   : 1.0 / std::sqrt(fpe_diffusion(x, L));
    };
    // d(DJ)/dx in closed form for both conventions
    auto dj_derivative = [&](double x) {
        const double d = fpe_diffusion(x, L), dp = fpe_diffusion_derivative(x, L);
        return convention == JacobianConvention::scaled
                   ? dp / (2.0 * std::sqrt(2.0 * L * d))
                   : dp / (2.0 * std::sqrt(d));
    };
    auto f_tilde = [&](double x) {
        return jac(x) * fpe_drift(x) - 0.5 * dj_derivative(x);
    };

    TransformedField tf;
    tf.convention = convention;
    tf.L = L;
    tf.x.resize(grid_points);
    tf.y.resize(grid_points);
    tf.jacobian.resize(grid_points);
    tf.f_tilde.resize(grid_points);
    tf.potential.resize(grid_points);
    double y_acc = 0.0, u_acc = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double x = 0.5 * static_cast<double>(i) / (grid_points - 1);
        tf.x[i] = x;
        tf.jacobian[i] = jac(x);
        tf.f_tilde[i] = f_tilde(x);
        if (i > 0) {
            const double x0 = tf.x[i - 1];
            y_acc += integrate(jac, x0, x, 1e-12);
            u_acc += integrate([&](double t) { return -f_tilde(t) * jac(t); }, x0, x, 1e-12);
        }
        tf.y[i] = y_acc;
        tf.potential[i] = u_acc;
    }

    // least-squares y ~ a1 x + a2 x^2 over the dense grid
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0, yy = 0;
    for (int i = 0; i < grid_points; ++i) {
        const double x = tf.x[i], x2 = x * x, y = tf.y[i];
        s11 += x * x;
        s12 += x * x2;
        s22 += x2 * x2;
        b1 += x * y;
        b2 += x2 * y;
        yy += y * y;
    }
    const double det = s11 * s22 - s12 * s12;
    tf.a1 = (b1 * s22 - b2 * s12) / det;
    tf.a2 = (s11 * b2 - s12 * b1) / det;
    double res = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double d = tf.y[i] - tf.a1 * tf.x[i] - tf.a2 * tf.x[i] * tf.x[i];
        res += d * d;
    }
    tf.fit_residual = std::sqrt(res / yy);
    return tf;
}

double inverse_map(const TransformedField& tf, double y) {
    if (y < 0.0 || y > tf.y.back() + 1e-12)
        throw std::invalid_argument("y outside the transformed range");
    auto jac = [&](double x) {
        return tf.convention == JacobianConvention::scaled
                   ? 1.0 / std::sqrt(2.0 * tf.L * fpe_diffusion(x, tf.L))
                   : 1.0 / std::sqrt(fpe_diffusion(x, tf.L));
    };
    // seed with the quadratic-fit inverse, then Newton on the exact quadrature
    double x = tf.a2 > 0.0
                   ? (std::sqrt(tf.a1 * tf.a1 + 4.0 * tf.a2 * y) - tf.a1) / (2.0 * tf.a2)
                   : y / tf.a1;
    x = std::clamp(x, 0.0, 0.5);
    for (int it = 0; it < 60; ++it) {
        const double yx = integrate(jac, 0.0, x, 1e-13);
        const double dy = yx - y;
        if (std::abs(dy) < 1e-12) return x;
        x = std::clamp(x - dy / jac(x), 0.0, 0.5);
    }
    throw std::runtime_error("inverse map did not converge");
}

namespace {

// Overlap of the control volume around `node` with the excitation bin
// [(n-1/2)/L, (n+1/2)/L], both clipped to [0, 1/2].
double bin_overlap(const FpeField& field, double dx, int node, int n) {
    const double lo = std::max(field.grid[node] - 0.5 * dx, 0.0);
    const double hi = std::min(field.grid[node] + 0.5 * dx, 0.5);
    const double blo = std::max((n - 0.5) / field.L, 0.0);
    const double bhi = std::min((n + 0.5) / field.L, 0.5);
    return std::max(0.0, std::min(hi, bhi) - std::max(lo, blo));
}

}  // namespace

std::vector<double> column_top_hat(const FpeField& field, int n0) {
    if (n0 < 0 || n0 > field.L / 2) throw std::invalid_argument("n0 outside 0..floor(L/2)");
    const double dx = uniform_spacing(field.grid);
    const auto w = volume_weights(field.grid, dx);
    const double bin_lo = std::max((n0 - 0.5) / field.L, 0.0);
    const double bin_hi = std::min((n0 + 0.5) / field.L, 0.5);
    // Pull each edge that is shared with a neighbouring bin inward by half a
    // cell so the piecewise-linear interpolant of the returned density
    // vanishes outside the bin.  A density supported on a shared edge node
    // would spill half a control volume into the neighbouring bin, so the
    // initial column masses would not be exactly {0, ..., 1, ..., 0}.
    const double lo = bin_lo > 0.0 ? bin_lo + 0.5 * dx : bin_lo;
    const double hi = bin_hi < 0.5 ? bin_hi - 0.5 * dx : bin_hi;
    if (!(hi - lo > 0.0))
        throw std::invalid_argument("excitation bin narrower than one grid cell");
    std::vector<double> p0(field.grid.size(), 0.0);
    for (std::size_t i = 0; i < p0.size(); ++i) {
        const double clo = std::max(field.grid[i] - 0.5 * dx, 0.0);
        const double chi = std::min(field.grid[i] + 0.5 * dx, 0.5);
        const double overlap = std::max(0.0, std::min(chi, hi) - std::max(clo, lo));
        p0[i] = overlap / (w[i] * (hi - lo));
    }
    return p0;
}

std::vector<double> bin_density_to_columns(const FpeField& field,
                                           const std::vector<double>& density, int n_max) {
    if (density.size() != field.grid.size())
        throw std::invalid_argument("density size does not match the field grid");
    const double dx = uniform_spacing(field.grid);
    std::vector<double> mass(n_max + 1, 0.0);
    for (int n = 0; n <= n_max; ++n)
        for (std::size_t i = 0; i < density.size(); ++i)
            mass[n] += bin_overlap(field, dx, static_cast<int>(i), n) * density[i];
    return mass;
}

ConsistencyReport discrete_continuum_consistency(int L, int n0,
                                                 const std::vector<double>& omega_times,
                                                 int nodes_per_column) {
    if (L < 50) throw std::invalid_argument("continuum comparison needs L >= 50");
    if (nodes_per_column < 1) throw std::invalid_argument("nodes_per_column must be >= 1");
    const int n_max = L / 2;
    if (n0 < 0 || n0 > n_max) throw std::invalid_argument("n0 outside 0..floor(L/2)");

    const auto rates = build_rates_1d(L);
    std::vector<double> p0_master(n_max + 1, 0.0);
    p0_master[n0] = 1.0;
    const auto master = solve_master(rates, p0_master, omega_times);

    const int nodes = nodes_per_column * L + 1;
    const auto field = uniform_field(L, nodes);
    const auto fpe = solve_fpe(field, column_top_hat(field, n0), omega_times);

    ConsistencyReport rep;
    rep.L = L;
    rep.n0 = n0;
    rep.omega_times = omega_times;
    for (std::size_t k = 0; k < omega_times.size(); ++k) {
        const auto q = bin_density_to_columns(field, fpe[k], n_max);
        double tv = 0.0;
        for (int n = 0; n <= n_max; ++n) tv += std::abs(q[n] - master[k][n]);
        rep.tv.push_back(0.5 * tv);
        rep.max_tv = std::max(rep.max_tv, rep.tv.back());
    }

    const auto pi = rates.stationary();
    for (int n = 0; n <= n_max; ++n)
        rep.master_stationary_mean += static_cast<double>(n) / L * pi[n];
    const auto stat = stationary_profile(field);
    const double dx = 0.5 / (nodes - 1);
    const auto w = volume_weights(field.grid, dx);
    for (int i = 0; i < nodes; ++i) rep.fpe_stationary_mean += field.grid[i] * stat[i] * w[i];
    return rep;
}

}  // namespace blockade
