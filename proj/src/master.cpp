#include "blockade/master.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace blockade {

Eigen::MatrixXd RateMatrix::generator() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        w(n, n) = -(up[n] + down[n]);
        if (n > 0) w(n - 1, n) = down[n];
        if (n < n_max) w(n + 1, n) = up[n];
    }
    return w;
}

std::vector<double> RateMatrix::stationary() const {
    std::vector<double> logpi(n_max + 1, 0.0);
    for (int n = 0; n < n_max; ++n) {
        if (up[n] <= 0.0 || down[n + 1] <= 0.0)
            throw std::runtime_error("stationary distribution needs positive interior rates");
        logpi[n + 1] = logpi[n] + std::log(up[n]) - std::log(down[n + 1]);
    }
    const double top = *std::max_element(logpi.begin(), logpi.end());
    std::vector<double> pi(n_max + 1);
    double sum = 0.0;
    for (int n = 0; n <= n_max; ++n) sum += pi[n] = std::exp(logpi[n] - top);
    for (double& v : pi) v /= sum;
    return pi;
}

RateMatrix build_rates_1d(int L) {
    // Direct closed forms (no state counts, so arbitrary ring sizes work):
    // T_{n->n-1} = n, T_{n->n+1} = (L-2n-1)(L-2n)/(L-n-1).
    if (L < 3) throw std::invalid_argument("ring rates require L >= 3");
    RateMatrix r;
    r.n_max = L / 2;
    for (int n = 0; n <= r.n_max; ++n) {
        r.down.push_back(static_cast<double>(n));
        const double num = static_cast<double>(L - 2 * n - 1) * (L - 2 * n);
        r.up.push_back(num / (L - n - 1));
    }
    return r;
}

RateMatrix build_rates_2d(const ConfigSpace& space) {
    RateMatrix r;
    r.n_max = space.max_excitation();
    for (int n = 0; n <= r.n_max; ++n) {
        const std::size_t begin = space.column_begin(n), end = space.column_end(n);
        if (begin == end) throw std::runtime_error("empty excitation column in census");
        std::int64_t up_links = 0, down_links = 0;
        for (std::size_t i = begin; i < end; ++i)
            for (std::uint32_t j : space.neighbors(i))
                (space.excitations(j) > n ? up_links : down_links) += 1;
        const auto nu = static_cast<std::int64_t>(end - begin);
        if (down_links != static_cast<std::int64_t>(n) * nu)
            throw std::logic_error("measured down-hop count is not n per state");
        r.down.push_back(static_cast<double>(n));
        r.up.push_back(static_cast<double>(up_links) / static_cast<double>(nu));
    }
    return r;
}

std::vector<std::vector<double>> solve_master(const RateMatrix& rates,
                                              const std::vector<double>& p0,
                                              const std::vector<double>& omega_times) {
    const int dim = rates.n_max + 1;
    if (static_cast<int>(p0.size()) != dim)
        throw std::invalid_argument("initial distribution has the wrong dimension");
    double sum = 0.0;
    for (double v : p0) {
        if (v < -1e-12) throw std::invalid_argument("initial distribution has negative entries");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-10)
        throw std::invalid_argument("initial distribution does not sum to one");
    for (double t : omega_times)
        if (t < 0.0) throw std::invalid_argument("negative times are not allowed");

    // Detailed balance makes D^{-1/2} W D^{1/2} symmetric with
    // S_{n,n+1} = sqrt(up[n] * down[n+1]); propagate spectrally.
    const auto pi = rates.stationary();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) {
        s(n, n) = -(rates.up[n] + rates.down[n]);
        if (n + 1 < dim) s(n, n + 1) = s(n + 1, n) = std::sqrt(rates.up[n] * rates.down[n + 1]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    Eigen::VectorXd q(dim);
    for (int n = 0; n < dim; ++n) q[n] = p0[n] / std::sqrt(pi[n]);
    const Eigen::VectorXd c = es.eigenvectors().transpose() * q;

    std::vector<std::vector<double>> out;
    out.reserve(omega_times.size());
    for (double t : omega_times) {
        const double tau = t * t;
        Eigen::VectorXd scaled(dim);
        for (int k = 0; k < dim; ++k) scaled[k] = c[k] * std::exp(es.eigenvalues()[k] * tau);
        Eigen::VectorXd p = es.eigenvectors() * scaled;
        std::vector<double> row(dim);
        for (int n = 0; n < dim; ++n) row[n] = p[n] * std::sqrt(pi[n]);
        out.push_back(std::move(row));
    }
    return out;
}

Equilibrium equilibrium_closed_form(int L) {
    if (L < 3) throw std::invalid_argument("equilibrium_closed_form requires L >= 3");
    Equilibrium eq;
    eq.L = L;
    const double log_phi = std::log((1.0 + std::sqrt(5.0)) / 2.0);
    for (int n = 0; n <= L / 2; ++n) {
        // log nu_n via lgamma keeps large L in range
        double log_nu;
        if (n == 0) {
            log_nu = 0.0;
        } else {
            log_nu = std::log(static_cast<double>(L)) - std::log(static_cast<double>(L - n)) +
                     std::lgamma(L - n + 1.0) - std::lgamma(n + 1.0) -
                     std::lgamma(L - 2.0 * n + 1.0);
        }
        eq.raw.push_back(std::exp(log_nu - L * log_phi));
        eq.raw_sum += eq.raw.back();
    }
    for (double v : eq.raw) eq.normalized.push_back(v / eq.raw_sum);
    return eq;
}

RelaxationFit gaussian_relaxation_fit(const std::vector<double>& omega_times,
                                      const std::vector<double>& deviations) {
    if (omega_times.size() != deviations.size() || omega_times.size() < 3)
        throw std::invalid_argument("fit needs matching series with at least 3 samples");
    double dev_max = 0.0;
    for (double d : deviations) dev_max = std::max(dev_max, d);
    if (dev_max < 1e-10)
        throw std::runtime_error("trajectory already at equilibrium: relaxation fit is degenerate");
    for (double d : deviations)
        if (d <= 0.0 || d < dev_max * 1e-14)
            throw std::runtime_error("deviation collapsed to zero inside the fit window");

    const std::size_t n = omega_times.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = omega_times[i] * omega_times[i];
        const double y = std::log(deviations[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) throw std::runtime_error("degenerate abscissa in relaxation fit");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = omega_times[i] * omega_times[i];
        const double y = std::log(deviations[i]);
        ss_res += (y - slope * x - intercept) * (y - slope * x - intercept);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    RelaxationFit fit;
    fit.lambda = -slope;
    fit.log_amplitude = intercept;
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

std::string rate_table_json(const RateMatrix& rates) {
    nlohmann::json j;
    j["n_max"] = rates.n_max;
    j["t_down"] = rates.down;
    j["t_up"] = rates.up;
    return j.dump(2) + "\n";
}

}  // namespace blockade
