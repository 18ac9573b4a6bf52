#include "blockade/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace blockade {

namespace {

using Complex = std::complex<double>;

void adjacency_apply(const ConfigSpace& space, const Eigen::VectorXcd& x,
                     Eigen::VectorXcd& y) {
    const std::size_t n = space.size();
    for (std::size_t i = 0; i < n; ++i) {
        Complex acc{0.0, 0.0};
        for (std::uint32_t j : space.neighbors(i)) acc += x[static_cast<Eigen::Index>(j)];
        y[static_cast<Eigen::Index>(i)] = acc;
    }
}

// exp(-i h T) e1 for the leading m x m block of the Lanczos tridiagonal.
Eigen::VectorXcd subspace_exponential(const std::vector<double>& alpha,
                                      const std::vector<double>& beta, int m, double h) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        t(j, j) = alpha[j];
        if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j + 1];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const auto& vec = es.eigenvectors();
    const auto& val = es.eigenvalues();
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(m);
    for (int k = 0; k < m; ++k) {
        const Complex phase = std::exp(Complex(0.0, -h * val[k]));
        u += (vec(0, k) * phase) * vec.col(k).cast<Complex>();
    }
    return u;
}

class KrylovStepper {
public:
    KrylovStepper(const ConfigSpace& space, const PropagationOptions& options)
        : space_(space),
          options_(options),
          dim_(static_cast<Eigen::Index>(space.size())),
          v_prev_(dim_),
          v_(dim_),
          w_(dim_),
          acc_(dim_) {}

    // Advances psi by the largest achievable substep <= h_request whose error
    // estimate fits budget_per_unit * substep; returns the substep taken.
    double step(Eigen::VectorXcd& psi, double h_request, double budget_per_unit) {
        build_basis(psi);
        double h = h_request;
        for (int halving = 0;; ++halving) {
            Eigen::VectorXcd u = subspace_exponential(alpha_, beta_, m_, h);
            double err = 0.0;
            if (!exact_ && m_ > 2) {
                Eigen::VectorXcd u_lo = subspace_exponential(alpha_, beta_, m_ - 2, h);
                u_lo.conservativeResize(m_);
                u_lo[m_ - 2] = u_lo[m_ - 1] = Complex{0.0, 0.0};
                err = (u - u_lo).norm();
            }
            if (exact_ || err <= budget_per_unit * h || h <= 1e-308) {
                assemble(psi, u);
                return h;
            }
            if (halving > 60)
                throw std::runtime_error(
                    "propagation tolerance not achievable within the step budget");
            h *= 0.5;
        }
    }

private:
    void build_basis(const Eigen::VectorXcd& psi) {
        const int m_max = std::min<Eigen::Index>(options_.krylov_dim, dim_);
        alpha_.assign(m_max, 0.0);
        beta_.assign(m_max + 1, 0.0);
        exact_ = false;
        v_prev_.setZero();
        v_ = psi;
        m_ = m_max;
        for (int j = 0; j < m_max; ++j) {
            adjacency_apply(space_, v_, w_);
            alpha_[j] = v_.dot(w_).real();
            w_ -= alpha_[j] * v_;
            if (j > 0) w_ -= beta_[j] * v_prev_;
            beta_[j + 1] = w_.norm();
            if (beta_[j + 1] < 1e-12) {
                m_ = j + 1;
                exact_ = true;  // invariant subspace: the exponential is exact
                break;
            }
            if (j + 1 < m_max) {
                v_prev_.swap(v_);
                v_ = w_ / beta_[j + 1];
            }
        }
    }

    // psi <- sum_j u_j v_j, regenerating the basis by the stored recurrence.
    void assemble(Eigen::VectorXcd& psi, const Eigen::VectorXcd& u) {
        v_prev_.setZero();
        v_ = psi;
        acc_ = u[0] * v_;
        for (int j = 0; j + 1 < m_; ++j) {
            adjacency_apply(space_, v_, w_);
            w_ -= alpha_[j] * v_;
            if (j > 0) w_ -= beta_[j] * v_prev_;
            v_prev_.swap(v_);
            v_ = w_ / beta_[j + 1];
            acc_ += u[j + 1] * v_;
        }
        psi = acc_;
    }

    const ConfigSpace& space_;
    PropagationOptions options_;
    Eigen::Index dim_;
    std::vector<double> alpha_, beta_;
    int m_ = 0;
    bool exact_ = false;
    Eigen::VectorXcd v_prev_, v_, w_, acc_;
};

}  // namespace

StateVector basis_state(const ConfigSpace& space, ConfigSpace::Mask mask) {
    StateVector psi;
    psi.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.size()));
    psi.amplitudes[static_cast<Eigen::Index>(space.index_of(mask))] = Complex{1.0, 0.0};
    return psi;
}

Eigen::VectorXcd apply_hamiltonian(const ConfigSpace& space, const ModelParams& params,
                                   const Eigen::VectorXcd& psi) {
    if (params.omega <= 0.0) throw std::invalid_argument("omega must be positive");
    if (static_cast<std::size_t>(psi.size()) != space.size())
        throw std::invalid_argument("state dimension does not match the configuration space");
    Eigen::VectorXcd out(psi.size());
    adjacency_apply(space, psi, out);
    return params.omega * out;
}

void propagate_visit(const ConfigSpace& space, const ModelParams& params,
                     const StateVector& psi0, const std::vector<double>& omega_times,
                     const std::function<void(const StateVector&)>& visit,
                     const PropagationOptions& options) {
    if (params.omega <= 0.0) throw std::invalid_argument("omega must be positive");
    if (static_cast<std::size_t>(psi0.amplitudes.size()) != space.size())
        throw std::invalid_argument("state dimension does not match the configuration space");
    if (std::abs(psi0.amplitudes.squaredNorm() - 1.0) > 1e-9)
        throw std::invalid_argument("initial state is not normalized");
    double prev = 0.0;
    for (double t : omega_times) {
        if (!(t >= prev))
            throw std::invalid_argument("requested times must be ascending and >= 0");
        prev = t;
    }
    if (omega_times.empty()) return;

    const double total = omega_times.back();
    const double budget_per_unit =
        total > 0.0 ? options.tolerance / total : options.tolerance;
    KrylovStepper stepper(space, options);
    Eigen::VectorXcd psi = psi0.amplitudes;
    double s = 0.0;
    long substeps = 0;
    for (double target : omega_times) {
        while (target - s > 1e-13 * std::max(1.0, target)) {
            if (++substeps > options.max_substeps)
                throw std::runtime_error(
                    "propagation tolerance not achievable within the step budget");
            const double h_request = std::min(options.max_step, target - s);
            s += stepper.step(psi, h_request, budget_per_unit);
        }
        s = target;
        StateVector out;
        out.amplitudes = psi;
        out.omega_t = target;
        visit(out);
    }
}

std::vector<StateVector> propagate(const ConfigSpace& space, const ModelParams& params,
                                   const StateVector& psi0,
                                   const std::vector<double>& omega_times,
                                   const PropagationOptions& options) {
    std::vector<StateVector> out;
    out.reserve(omega_times.size());
    propagate_visit(space, params, psi0, omega_times,
                    [&](const StateVector& s) { out.push_back(s); }, options);
    return out;
}

std::vector<StateVector> propagate_dense(const ConfigSpace& space, const ModelParams& params,
                                         const StateVector& psi0,
                                         const std::vector<double>& omega_times) {
    if (params.omega <= 0.0) throw std::invalid_argument("omega must be positive");
    const auto dim = static_cast<Eigen::Index>(space.size());
    if (psi0.amplitudes.size() != dim)
        throw std::invalid_argument("state dimension does not match the configuration space");
    if (dim > 20000) throw std::invalid_argument("dense propagation is limited to 20000 states");

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (std::uint32_t j : space.neighbors(static_cast<std::size_t>(i)))
            h(i, static_cast<Eigen::Index>(j)) = params.omega;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense eigensolve failed");

    // omega_t enters through theta = (E/omega) * omega_t, so this is exact in t.
    const Eigen::VectorXcd coeff = es.eigenvectors().transpose() * psi0.amplitudes;
    std::vector<StateVector> out;
    out.reserve(omega_times.size());
    for (double t : omega_times) {
        Eigen::VectorXcd rotated(dim);
        for (Eigen::Index k = 0; k < dim; ++k) {
            const double theta = es.eigenvalues()[k] / params.omega * t;
            rotated[k] = coeff[k] * std::complex<double>(std::cos(theta), -std::sin(theta));
        }
        StateVector s;
        s.amplitudes = es.eigenvectors() * rotated;
        s.omega_t = t;
        out.push_back(s);
    }
    return out;
}

std::pair<double, double> excitation_moments(const ConfigSpace& space,
                                             const StateVector& psi) {
    const auto p = column_projection(
        space, {psi.amplitudes.data(), static_cast<std::size_t>(psi.amplitudes.size())});
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        m1 += static_cast<double>(n) * p[n];
        m2 += static_cast<double>(n) * static_cast<double>(n) * p[n];
    }
    return {m1, m2};
}

std::vector<double> time_averaged_distribution(const ConfigSpace& space,
                                               const ModelParams& params,
                                               const StateVector& psi0,
                                               double omega_t_begin, double omega_t_end,
                                               int samples,
                                               const PropagationOptions& options) {
    if (samples < 2) throw std::invalid_argument("time average requires samples >= 2");
    if (!(omega_t_begin < omega_t_end))
        throw std::invalid_argument("time average requires omega_t_begin < omega_t_end");
    std::vector<double> times(samples);
    for (int i = 0; i < samples; ++i)
        times[i] = omega_t_begin +
                   (omega_t_end - omega_t_begin) * static_cast<double>(i) / (samples - 1);
    std::vector<double> mean(space.max_excitation() + 1, 0.0);
    propagate_visit(space, params, psi0, times, [&](const StateVector& s) {
        const auto p = column_projection(
            space, {s.amplitudes.data(), static_cast<std::size_t>(s.amplitudes.size())});
        for (std::size_t n = 0; n < p.size(); ++n) mean[n] += p[n];
    }, options);
    double sum = 0.0;
    for (double& v : mean) sum += v;
    for (double& v : mean) v /= sum;
    return mean;
}

}  // namespace blockade
