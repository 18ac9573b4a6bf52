#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "blockade/harness.hpp"
#include "blockade/lattice.hpp"
#include "blockade/master.hpp"

using namespace blockade;

namespace {

// Independent reference: RK4 on dp/dt = 2 t W p directly in t (omega = 1).
std::vector<double> integrate_direct(const RateMatrix& rates, std::vector<double> p,
                                     double t_end, int steps) {
    const auto w = rates.generator();
    const int dim = rates.n_max + 1;
    const double dt = t_end / steps;
    auto deriv = [&](const std::vector<double>& q, double t) {
        std::vector<double> d(dim, 0.0);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) d[i] += 2.0 * t * w(i, j) * q[j];
        return d;
    };
    for (int s = 0; s < steps; ++s) {
        const double t = s * dt;
        const auto k1 = deriv(p, t);
        std::vector<double> tmp(dim);
        for (int i = 0; i < dim; ++i) tmp[i] = p[i] + 0.5 * dt * k1[i];
        const auto k2 = deriv(tmp, t + 0.5 * dt);
        for (int i = 0; i < dim; ++i) tmp[i] = p[i] + 0.5 * dt * k2[i];
        const auto k3 = deriv(tmp, t + 0.5 * dt);
        for (int i = 0; i < dim; ++i) tmp[i] = p[i] + dt * k3[i];
        const auto k4 = deriv(tmp, t + dt);
        for (int i = 0; i < dim; ++i)
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return p;
}

}  // namespace

TEST_CASE("closed-form ring rates") {
    const auto r = build_rates_1d(8);
    REQUIRE(r.n_max == 4);
    CHECK(r.down == std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0});
    CHECK(r.up[0] == doctest::Approx(8.0));
    CHECK(r.up[1] == doctest::Approx(5.0));
    CHECK(r.up[2] == doctest::Approx(2.4));
    CHECK(r.up[3] == doctest::Approx(0.5));
    CHECK(r.up[4] == doctest::Approx(0.0));
    CHECK_THROWS_AS(build_rates_1d(2), std::invalid_argument);
}

TEST_CASE("generator columns sum to zero") {
    const auto w = build_rates_1d(11).generator();
    for (int j = 0; j < w.cols(); ++j) CHECK(std::abs(w.col(j).sum()) < 1e-12);
}

TEST_CASE("stationary vector matches the closed-form equilibrium") {
    for (int L : {8, 15, 25, 40}) {
        const auto pi = build_rates_1d(L).stationary();
        const auto eq = equilibrium_closed_form(L);
        REQUIRE(pi.size() == eq.normalized.size());
        for (std::size_t n = 0; n < pi.size(); ++n)
            CHECK(pi[n] == doctest::Approx(eq.normalized[n]).epsilon(1e-12));
    }
}

TEST_CASE("equilibrium normalization defect is small and decreasing") {
    double prev = 1.0;
    for (int L : {10, 15, 20, 25}) {
        const auto eq = equilibrium_closed_form(L);
        const double dev = std::abs(eq.raw_sum - 1.0);
        CHECK(dev < prev);
        prev = dev;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("spectral solve agrees with direct integration of the time-dependent form") {
    const auto rates = build_rates_1d(12);
    std::vector<double> p0(rates.n_max + 1, 0.0);
    p0[2] = 1.0;
    const auto spectral = solve_master(rates, p0, {0.7, 2.0});
    const auto direct_07 = integrate_direct(rates, p0, 0.7, 20000);
    const auto direct_20 = integrate_direct(rates, p0, 2.0, 40000);
    for (int n = 0; n <= rates.n_max; ++n) {
        CHECK(spectral[0][n] == doctest::Approx(direct_07[n]).epsilon(1e-8));
        CHECK(spectral[1][n] == doctest::Approx(direct_20[n]).epsilon(1e-8));
    }
}

TEST_CASE("master solution conserves probability and relaxes monotonically") {
    const auto rates = build_rates_1d(20);
    std::vector<double> p0(rates.n_max + 1, 0.0);
    p0[5] = 1.0;
    std::vector<double> times;
    for (int k = 0; k <= 40; ++k) times.push_back(0.1 * k);
    const auto rows = solve_master(rates, p0, times);
    const auto pi = rates.stationary();
    double prev_tv = 1e9;
    for (const auto& row : rows) {
        double sum = 0.0, tv = 0.0;
        for (int n = 0; n <= rates.n_max; ++n) {
            sum += row[n];
            tv += std::abs(row[n] - pi[n]);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(0.5 * tv <= prev_tv + 1e-12);
        prev_tv = 0.5 * tv;
    }
    CHECK(prev_tv < 0.05);  // essentially equilibrated by omega_t = 4
}

TEST_CASE("master solver input validation") {
    const auto rates = build_rates_1d(8);
    std::vector<double> p0(rates.n_max + 1, 0.0);
    p0[1] = 1.0;
    CHECK_THROWS_AS(solve_master(rates, p0, {-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(solve_master(rates, std::vector<double>(3, 0.0), {1.0}),
                    std::invalid_argument);
    auto bad = p0;
    bad[1] = 0.5;
    CHECK_THROWS_AS(solve_master(rates, bad, {1.0}), std::invalid_argument);
    auto negative = p0;
    negative[1] = 1.2;
    negative[2] = -0.2;
    CHECK_THROWS_AS(solve_master(rates, negative, {1.0}), std::invalid_argument);
}

TEST_CASE("census rates on the smallest torus") {
    const auto space = enumerate_configurations(Lattice::torus(2, 2));
    const auto r = build_rates_2d(space);
    REQUIRE(r.n_max == 2);
    CHECK(r.up[0] == doctest::Approx(4.0));
    CHECK(r.up[1] == doctest::Approx(1.0));  // each single points to one diagonal pair
    CHECK(r.up[2] == doctest::Approx(0.0));
    CHECK(r.down[1] == doctest::Approx(1.0));
    CHECK(r.down[2] == doctest::Approx(2.0));
}

TEST_CASE("census rates on a ring reproduce the closed form") {
    const auto space = enumerate_configurations(Lattice::ring(14));
    const auto measured = build_rates_2d(space);
    const auto closed = build_rates_1d(14);
    REQUIRE(measured.n_max == closed.n_max);
    for (int n = 0; n <= closed.n_max; ++n) {
        CHECK(measured.down[n] == doctest::Approx(closed.down[n]).epsilon(1e-14));
        CHECK(measured.up[n] == doctest::Approx(closed.up[n]).epsilon(1e-14));
    }
}

TEST_CASE("gaussian relaxation fit on a two-state toy model") {
    RateMatrix toy;
    toy.n_max = 1;
    toy.down = {0.0, 2.0};
    toy.up = {3.0, 0.0};
    std::vector<double> p0 = {1.0, 0.0};
    std::vector<double> times, dev;
    const auto pi = toy.stationary();
    CHECK(pi[0] == doctest::Approx(0.4));
    for (int k = 1; k <= 30; ++k) times.push_back(0.02 * k);
    const auto rows = solve_master(toy, p0, times);
    for (const auto& row : rows) dev.push_back(std::abs(row[0] - pi[0]));
    const auto fit = gaussian_relaxation_fit(times, dev);
    // deviation decays as exp(-(a+b) tau) with tau = (omega t)^2
    CHECK(fit.lambda == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("relaxation fit rejects degenerate inputs") {
    const auto rates = build_rates_1d(10);
    const auto pi = rates.stationary();
    const auto rows = solve_master(rates, pi, {0.1, 0.2, 0.3});
    std::vector<double> dev;
    for (const auto& row : rows) {
        double tv = 0.0;
        for (std::size_t n = 0; n < row.size(); ++n) tv += std::abs(row[n] - pi[n]);
        dev.push_back(0.5 * tv);
    }
    CHECK_THROWS_AS(gaussian_relaxation_fit({0.1, 0.2, 0.3}, dev), std::runtime_error);
    CHECK_THROWS_AS(gaussian_relaxation_fit({0.1, 0.2}, {0.5, 0.4}), std::invalid_argument);
}

TEST_CASE("rate table json names both directions") {
    const auto text = rate_table_json(build_rates_1d(8));
    CHECK(text.find("\"t_up\"") != std::string::npos);
    CHECK(text.find("\"t_down\"") != std::string::npos);
}
