#include "blockade/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "blockade/dimer.hpp"
#include "blockade/fpe.hpp"
#include "blockade/io.hpp"
#include "json.hpp"

namespace blockade {

namespace {

using ordered_json = nlohmann::ordered_json;

// Seeds for the pinned validation runs; replayable via random_column_mask.
constexpr std::uint64_t kEnsembleSeeds[7] = {101, 102, 103, 104, 105, 106, 107};
constexpr std::uint64_t kTorusSeed = 2026;
constexpr std::uint64_t kSweepSeed = 7;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::vector<double> projection_of(const ConfigSpace& space, const StateVector& sv) {
    return column_projection(
        space, {sv.amplitudes.data(), static_cast<std::size_t>(sv.amplitudes.size())});
}

std::string trajectory_csv(const std::vector<double>& times,
                           const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    out << "omega_t";
    for (std::size_t n = 0; n < cols; ++n) out << ",p_" << n;
    out << ",meanN,meanN2\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::vector<double> vals;
        vals.reserve(cols + 3);
        vals.push_back(times[k]);
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t n = 0; n < cols; ++n) {
            vals.push_back(rows[k][n]);
            m1 += static_cast<double>(n) * rows[k][n];
            m2 += static_cast<double>(n) * static_cast<double>(n) * rows[k][n];
        }
        vals.push_back(m1);
        vals.push_back(m2);
        out << csv_row(vals) << "\n";
    }
    return out.str();
}

ordered_json config_json(const ExperimentConfig& c) {
    ordered_json j;
    j["lattice"]["kind"] = c.lattice.kind == LatticeKind::ring ? "ring" : "torus";
    if (c.lattice.kind == LatticeKind::ring) {
        j["lattice"]["length"] = c.lattice.lx;
    } else {
        j["lattice"]["lx"] = c.lattice.lx;
        j["lattice"]["ly"] = c.lattice.ly;
    }
    switch (c.initial.kind) {
        case InitialSpec::Kind::mask:
            j["initial"]["kind"] = "mask";
            j["initial"]["mask"] = std::to_string(c.initial.mask);
            break;
        case InitialSpec::Kind::canonical_column:
            j["initial"]["kind"] = "canonical_column";
            j["initial"]["column"] = c.initial.column;
            break;
        case InitialSpec::Kind::random_column:
            j["initial"]["kind"] = "random_column";
            j["initial"]["column"] = c.initial.column;
            j["initial"]["seed"] = c.initial.seed;
            break;
    }
    j["times"]["start"] = c.times.start;
    j["times"]["stop"] = c.times.stop;
    j["times"]["samples"] = c.times.samples;
    j["run_quantum"] = c.run_quantum;
    j["run_master"] = c.run_master;
    j["run_fpe"] = c.run_fpe;
    j["fpe_nodes_per_column"] = c.fpe_nodes_per_column;
    j["capacity"] = c.capacity;
    j["output_dir"] = c.output_dir;
    return j;
}

ComparisonReport compare_rows(const std::vector<double>& times,
                              const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b,
                              const std::vector<double>& stationary) {
    ComparisonReport rep;
    rep.omega_times = times;
    double sum = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        rep.tv.push_back(total_variation(a[k], b[k]));
        rep.max_tv = std::max(rep.max_tv, rep.tv.back());
        rep.max_ks = std::max(rep.max_ks, kolmogorov_smirnov(a[k], b[k]));
        sum += rep.tv.back();
    }
    rep.mean_tv = times.empty() ? 0.0 : sum / static_cast<double>(times.size());
    if (!a.empty()) rep.equilibrium_tv = total_variation(a.back(), stationary);
    return rep;
}

ordered_json comparison_json(const ComparisonReport& rep) {
    ordered_json j;
    j["max_tv"] = rep.max_tv;
    j["mean_tv"] = rep.mean_tv;
    j["equilibrium_tv"] = rep.equilibrium_tv;
    j["max_ks"] = rep.max_ks;
    j["omega_times"] = rep.omega_times;
    j["tv"] = rep.tv;
    return j;
}

}  // namespace

std::vector<double> TimeGrid::points() const {
    if (samples < 1) throw std::invalid_argument("time grid needs at least one sample");
    if (!(start >= 0.0)) throw std::invalid_argument("time grid must start at omega_t >= 0");
    if (samples == 1) {
        if (stop != start)
            throw std::invalid_argument("a single-sample grid requires stop == start");
        return {start};
    }
    if (!(stop > start)) throw std::invalid_argument("time grid requires stop > start");
    std::vector<double> pts(samples);
    for (int i = 0; i < samples; ++i)
        pts[i] = start + (stop - start) * static_cast<double>(i) / (samples - 1);
    return pts;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ExperimentConfig c;
    const auto& jl = j.at("lattice");
    const std::string kind = jl.at("kind").get<std::string>();
    if (kind == "ring") {
        c.lattice = Lattice::ring(jl.at("length").get<int>());
    } else if (kind == "torus") {
        c.lattice = Lattice::torus(jl.at("lx").get<int>(), jl.at("ly").get<int>());
    } else {
        throw std::invalid_argument("lattice kind must be \"ring\" or \"torus\"");
    }
    if (j.contains("initial")) {
        const auto& ji = j.at("initial");
        const std::string ik = ji.value("kind", std::string("canonical_column"));
        if (ik == "mask") {
            c.initial.kind = InitialSpec::Kind::mask;
            c.initial.mask = std::stoull(ji.at("mask").get<std::string>());
        } else if (ik == "canonical_column") {
            c.initial.kind = InitialSpec::Kind::canonical_column;
            c.initial.column = ji.at("column").get<int>();
        } else if (ik == "random_column") {
            c.initial.kind = InitialSpec::Kind::random_column;
            c.initial.column = ji.at("column").get<int>();
            c.initial.seed = ji.at("seed").get<std::uint64_t>();
        } else {
            throw std::invalid_argument("initial kind must be mask, canonical_column, "
                                        "or random_column");
        }
    }
    if (j.contains("times")) {
        const auto& jt = j.at("times");
        c.times.start = jt.value("start", 0.0);
        c.times.stop = jt.at("stop").get<double>();
        c.times.samples = jt.at("samples").get<int>();
    }
    c.run_quantum = j.value("run_quantum", true);
    c.run_master = j.value("run_master", true);
    c.run_fpe = j.value("run_fpe", false);
    c.fpe_nodes_per_column = j.value("fpe_nodes_per_column", 3);
    c.capacity = j.value("capacity", static_cast<std::int64_t>(6'000'000));
    c.output_dir = j.value("output_dir", std::string("out"));
    return c;
}

std::string ExperimentConfig::to_json_text() const { return config_json(*this).dump(2) + "\n"; }

double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("total variation requires equal-length distributions");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

double kolmogorov_smirnov(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("KS distance requires equal-length distributions");
    double ca = 0.0, cb = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca += a[i];
        cb += b[i];
        worst = std::max(worst, std::abs(ca - cb));
    }
    return worst;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t uniform_index(std::uint64_t& state, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_index needs a positive bound");
    // Rejection below 2^64 mod bound keeps the draw exactly uniform.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = splitmix64(state);
        if (r >= threshold) return r % bound;
    }
}

ConfigSpace::Mask random_column_mask(const ConfigSpace& space, int column,
                                     std::uint64_t seed) {
    if (column < 0 || column > space.max_excitation())
        throw std::invalid_argument("column outside the excitation range");
    const std::size_t begin = space.column_begin(column), end = space.column_end(column);
    if (begin == end) throw std::invalid_argument("requested excitation column is empty");
    std::uint64_t state = seed;
    return space.state(begin + uniform_index(state, end - begin));
}

ConfigSpace::Mask canonical_column_mask(const Lattice& lattice, int column) {
    if (lattice.kind != LatticeKind::ring)
        throw std::invalid_argument(
            "canonical initial states are defined for rings; use a seeded random state");
    const int L = lattice.lx;
    if (L > 63)
        throw std::invalid_argument("configuration masks address at most 63 sites");
    if (column < 0 || column > L / 2)
        throw std::invalid_argument("column outside the excitation range");
    ConfigSpace::Mask mask = 0;
    for (int i = 0; i < column; ++i)
        mask |= ConfigSpace::Mask{1} << (static_cast<std::int64_t>(i) * L / column);
    return mask;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    using clock = std::chrono::steady_clock;
    const auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    const auto times = config.times.points();
    const fs::path dir(config.output_dir);
    ordered_json wall = ordered_json::object();
    ExperimentResult result;

    auto emit = [&](const char* name, const std::string& content) {
        const fs::path p = dir / name;
        atomic_write_text(p, content);
        result.artifacts.push_back(p.string());
    };

    // The kinetic descriptions need only the ring length, so enumeration is
    // skipped when nothing asks for individual configurations.  This keeps
    // master/continuum runs open to ring sizes whose state count is
    // astronomically beyond any enumeration capacity.
    const bool needs_space = config.run_quantum ||
                             config.lattice.kind == LatticeKind::torus ||
                             config.initial.kind == InitialSpec::Kind::random_column ||
                             (!config.run_master && !config.run_fpe);

    auto t0 = clock::now();
    std::optional<ConfigSpace> space_storage;
    if (needs_space) {
        try {
            space_storage.emplace(enumerate_configurations(config.lattice, config.capacity));
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("enumerate stage failed: ") + e.what());
        }
        wall["enumerate"] = ms_since(t0);
    }
    const int n_max = space_storage ? space_storage->max_excitation()
                                    : config.lattice.lx / 2;

    // initial state
    try {
        switch (config.initial.kind) {
            case InitialSpec::Kind::mask: {
                const int sites = config.lattice.sites();
                if (sites > 63)
                    throw std::invalid_argument(
                        "mask initial states address at most 63 sites; "
                        "use a column initial state");
                result.initial_mask = config.initial.mask;
                if ((result.initial_mask >> sites) != 0)
                    throw std::invalid_argument("mask has bits beyond the lattice sites");
                for (int s = 0; s < sites; ++s) {
                    if (!((result.initial_mask >> s) & 1)) continue;
                    for (int nb : config.lattice.neighbor_sites(s))
                        if ((result.initial_mask >> nb) & 1)
                            throw std::invalid_argument(
                                "mask violates the blockade constraint");
                }
                break;
            }
            case InitialSpec::Kind::canonical_column:
                if (config.lattice.kind == LatticeKind::ring && config.lattice.lx > 63) {
                    // kinetic-only runs on large rings: the excitation number
                    // fully specifies the initial condition
                    if (config.initial.column < 0 || config.initial.column > n_max)
                        throw std::invalid_argument("column outside the excitation range");
                    result.mask_known = false;
                } else {
                    result.initial_mask = canonical_column_mask(config.lattice,
                                                                config.initial.column);
                }
                break;
            case InitialSpec::Kind::random_column:
                result.initial_mask = random_column_mask(*space_storage,
                                                         config.initial.column,
                                                         config.initial.seed);
                break;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("initial-state stage failed: ") + e.what());
    }
    result.initial_column = result.mask_known ? std::popcount(result.initial_mask)
                                              : config.initial.column;

    if (space_storage) emit("space.json", space_summary_json(*space_storage));

    // quantum trajectory
    std::vector<std::vector<double>> qrows;
    if (config.run_quantum) {
        const ConfigSpace& space = *space_storage;
        t0 = clock::now();
        try {
            const auto psi0 = basis_state(space, result.initial_mask);
            propagate_visit(space, ModelParams{}, psi0, times, [&](const StateVector& sv) {
                qrows.push_back(projection_of(space, sv));
            });
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("quantum stage failed: ") + e.what());
        }
        wall["quantum"] = ms_since(t0);
        emit("quantum.csv", trajectory_csv(times, qrows));
    }

    // master trajectory
    std::optional<RateMatrix> rates;
    std::vector<std::vector<double>> mrows;
    if (config.run_master) {
        t0 = clock::now();
        try {
            rates = config.lattice.kind == LatticeKind::ring
                        ? build_rates_1d(config.lattice.lx)
                        : build_rates_2d(*space_storage);
            std::vector<double> p0(n_max + 1, 0.0);
            p0[result.initial_column] = 1.0;
            mrows = solve_master(*rates, p0, times);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("master stage failed: ") + e.what());
        }
        wall["master"] = ms_since(t0);
        emit("master.csv", trajectory_csv(times, mrows));
        emit("rates.json", rate_table_json(*rates));
    }

    // continuum trajectory (rings)
    std::optional<FpeField> field;
    std::vector<std::vector<double>> frows;
    if (config.run_fpe) {
        t0 = clock::now();
        try {
            if (config.lattice.kind != LatticeKind::ring)
                throw std::invalid_argument("the continuum solver applies to rings");
            const int L = config.lattice.lx;
            const int nodes = config.fpe_nodes_per_column * L + 1;
            field = uniform_field(L, nodes);
            frows = solve_fpe(*field, column_top_hat(*field, result.initial_column), times);
            const auto tf = transform(*field, JacobianConvention::scaled, nodes);
            std::ostringstream fcsv;
            fcsv << "x,F,D,y,U\n";
            for (int i = 0; i < nodes; ++i) {
                const double vals[] = {field->grid[i], field->F[i], field->D[i], tf.y[i],
                                       tf.potential[i]};
                fcsv << csv_row(vals) << "\n";
            }
            std::ostringstream scsv;
            scsv << "omega_t";
            for (int i = 0; i < nodes; ++i) scsv << ",rho_" << i;
            scsv << "\n";
            for (std::size_t k = 0; k < times.size(); ++k) {
                std::vector<double> vals;
                vals.reserve(frows[k].size() + 1);
                vals.push_back(times[k]);
                vals.insert(vals.end(), frows[k].begin(), frows[k].end());
                scsv << csv_row(vals) << "\n";
            }
            wall["fpe"] = ms_since(t0);
            emit("fpe_field.csv", fcsv.str());
            emit("fpe_snapshots.csv", scsv.str());
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("fpe stage failed: ") + e.what());
        }
    }

    // comparisons
    ordered_json report;
    report["version"] = kVersion;
    report["lattice"] = config.lattice.label();
    if (result.mask_known)
        report["initial_mask"] = std::to_string(result.initial_mask);
    else
        report["initial_mask"] = nullptr;
    report["initial_column"] = result.initial_column;
    if (config.run_quantum && config.run_master) {
        result.quantum_vs_master = compare_rows(times, qrows, mrows, rates->stationary());
        report["quantum_vs_master"] = comparison_json(*result.quantum_vs_master);
    }
    if (config.run_master && config.run_fpe) {
        std::vector<std::vector<double>> binned;
        binned.reserve(frows.size());
        for (const auto& row : frows)
            binned.push_back(bin_density_to_columns(*field, row, n_max));
        auto rep = compare_rows(times, binned, mrows, rates->stationary());
        rep.equilibrium_tv = total_variation(
            bin_density_to_columns(*field, stationary_profile(*field), n_max),
            rates->stationary());
        result.master_vs_fpe = rep;
        report["master_vs_fpe"] = comparison_json(rep);
    }
    emit("report.json", report.dump(2) + "\n");

    ordered_json man;
    man["version"] = kVersion;
    // keep the manifest identical for identical runs regardless of where the
    // artifacts land: record file names, not paths, and leave the output
    // directory implied by the manifest's own location
    ordered_json cfg = config_json(config);
    cfg.erase("output_dir");
    man["config"] = cfg;
    man["lattice"] = config.lattice.label();
    if (space_storage) {
        man["state_count"] = space_storage->size();
        man["edge_count"] = space_storage->edge_count();
        man["column_sizes"] = space_storage->column_sizes();
    } else {
        try {
            const int L = config.lattice.lx;
            std::vector<std::int64_t> sizes;
            std::int64_t edges = 0;
            for (int n = 0; n <= n_max; ++n) {
                sizes.push_back(nu_closed_form(L, n));
                edges += hop_count_product_form(L, n);
            }
            man["state_count"] = lucas_number(L);
            man["edge_count"] = edges;
            man["column_sizes"] = sizes;
        } catch (const std::overflow_error&) {
            // counts beyond 64-bit range are omitted rather than approximated
        }
    }
    if (result.mask_known)
        man["initial_mask"] = std::to_string(result.initial_mask);
    else
        man["initial_mask"] = nullptr;
    man["initial_column"] = result.initial_column;
    ordered_json names = ordered_json::array();
    for (const auto& a : result.artifacts) names.push_back(fs::path(a).filename().string());
    man["artifacts"] = names;
    man["wall_ms"] = wall;  // the only fields expected to differ between reruns
    atomic_write_text(dir / "manifest.json", man.dump(2) + "\n");
    result.artifacts.push_back((dir / "manifest.json").string());
    return result;
}

SweepSummary sweep_finite_size(const std::vector<int>& sizes,
                               const std::vector<int>& columns, int states_per_size,
                               std::uint64_t seed, const TimeGrid& window) {
    if (sizes.size() != columns.size())
        throw std::invalid_argument("sweep needs one column per ring size");
    if (sizes.empty()) throw std::invalid_argument("sweep needs at least one ring size");
    if (states_per_size < 1)
        throw std::invalid_argument("sweep needs at least one state per size");
    const auto times = window.points();

    SweepSummary summary;
    summary.window = window;
    summary.sizes = sizes;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const int L = sizes[i], column = columns[i];
        const auto space = enumerate_configurations(Lattice::ring(L));
        const auto rates = build_rates_1d(L);
        std::vector<double> p0(rates.n_max + 1, 0.0);
        p0.at(column) = 1.0;
        const auto master = solve_master(rates, p0, times);
        std::vector<double> xm(times.size(), 0.0);
        for (std::size_t k = 0; k < times.size(); ++k)
            for (int n = 0; n <= rates.n_max; ++n)
                xm[k] += static_cast<double>(n) / L * master[k][n];

        double pooled = 0.0;
        for (int s = 0; s < states_per_size; ++s) {
            std::uint64_t stream = seed ^ (0x9E3779B97F4A7C15ULL *
                                           static_cast<std::uint64_t>(L * 1000 + s + 1));
            const std::uint64_t state_seed = splitmix64(stream);
            const auto mask = random_column_mask(space, column, state_seed);
            const auto psi0 = basis_state(space, mask);
            double acc = 0.0;
            std::size_t k = 0;
            propagate_visit(space, ModelParams{}, psi0, times, [&](const StateVector& sv) {
                const auto [m1, m2] = excitation_moments(space, sv);
                const double d = m1 / L - xm[k];
                acc += d * d;
                ++k;
            });
            pooled += acc;
            summary.rows.push_back(
                {L, column, state_seed, std::sqrt(acc / static_cast<double>(times.size()))});
        }
        summary.pooled_rms.push_back(std::sqrt(
            pooled / (static_cast<double>(times.size()) * states_per_size)));
    }
    return summary;
}

std::string sweep_csv(const SweepSummary& summary) {
    const std::size_t per_size = summary.rows.size() / summary.sizes.size();
    std::ostringstream out;
    out << "L,column,seed,rms\n";
    for (std::size_t i = 0; i < summary.sizes.size(); ++i) {
        int column = 0;
        for (std::size_t s = 0; s < per_size; ++s) {
            const auto& r = summary.rows[i * per_size + s];
            column = r.column;
            out << r.L << "," << r.column << "," << r.seed << "," << format_double(r.rms)
                << "\n";
        }
        // pooled row for the size: empty seed field
        out << summary.sizes[i] << "," << column << ",," << format_double(summary.pooled_rms[i])
            << "\n";
    }
    return out.str();
}

bool check_detailed_balance(const RateMatrix& rates, std::span<const double> stationary,
                            double relative_tolerance, std::string* detail) {
    if (static_cast<int>(stationary.size()) != rates.n_max + 1)
        throw std::invalid_argument("stationary vector size does not match the rate table");
    double worst = 0.0;
    int worst_n = -1;
    for (int n = 0; n < rates.n_max; ++n) {
        const double lhs = stationary[n] * rates.up[n];
        const double rhs = stationary[n + 1] * rates.down[n + 1];
        const double scale = std::max(std::abs(lhs), std::abs(rhs));
        if (scale == 0.0) continue;
        const double rel = std::abs(lhs - rhs) / scale;
        if (rel > worst) {
            worst = rel;
            worst_n = n;
        }
    }
    if (detail) {
        std::ostringstream os;
        os << "max relative flux residual " << num(worst) << " (n=" << worst_n << ")";
        *detail = os.str();
    }
    return worst <= relative_tolerance;
}

namespace {

std::vector<std::int64_t> up_links_per_column(const ConfigSpace& space) {
    std::vector<std::int64_t> up(space.max_excitation() + 1, 0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const int n = space.excitations(i);
        for (std::uint32_t j : space.neighbors(i))
            if (space.excitations(j) == n + 1) ++up[n];
    }
    return up;
}

void criterion_ring_census(CriterionResult& r) {
    for (int L = 3; L <= 20; ++L) {
        const auto space = enumerate_configurations(Lattice::ring(L));
        const auto c = transition_coefficients(L);
        const auto sizes = space.column_sizes();
        std::int64_t total = 0;
        for (std::size_t n = 0; n < sizes.size(); ++n) {
            total += sizes[n];
            if (sizes[n] != c.nu[n]) {
                r.passed = false;
                r.measured = "column count mismatch at L=" + std::to_string(L) +
                             ", n=" + std::to_string(n);
                return;
            }
        }
        if (total != lucas_number(L)) {
            r.passed = false;
            r.measured = "state total differs from the Lucas number at L=" + std::to_string(L);
            return;
        }
        const auto up = up_links_per_column(space);
        for (std::size_t n = 0; n < up.size(); ++n) {
            // measured mean forward degree equals the closed form as a rational
            if (up[n] * c.t_up[n].den != c.t_up[n].num * c.nu[n]) {
                r.passed = false;
                r.measured = "forward-rate mismatch at L=" + std::to_string(L) +
                             ", n=" + std::to_string(n);
                return;
            }
        }
    }
    r.passed = true;
    r.measured = "L=3..20: column counts, Lucas totals, and forward rates exact";
}

void criterion_detailed_balance(CriterionResult& r) {
    double worst_float = 0.0;
    for (int L = 3; L <= 30; ++L) {
        const auto c = transition_coefficients(L);
        for (std::size_t n = 0; n + 1 < c.nu.size(); ++n) {
            const __int128 lhs = static_cast<__int128>(c.nu[n]) * c.t_up[n].num *
                                 c.t_down[n + 1].den;
            const __int128 rhs = static_cast<__int128>(c.nu[n + 1]) * c.t_down[n + 1].num *
                                 c.t_up[n].den;
            if (lhs != rhs) {
                r.passed = false;
                r.measured = "rational flux balance fails at L=" + std::to_string(L) +
                             ", n=" + std::to_string(n);
                return;
            }
        }
        const auto eq = equilibrium_closed_form(L);
        const auto rates = build_rates_1d(L);
        std::string detail;
        if (!check_detailed_balance(rates, eq.normalized, 1e-12, &detail)) {
            r.passed = false;
            r.measured = "float residual too large at L=" + std::to_string(L) + ": " + detail;
            return;
        }
        for (int n = 0; n < L / 2; ++n) {
            const double lhs = eq.normalized[n] * rates.up[n];
            const double rhs = eq.normalized[n + 1] * rates.down[n + 1];
            const double scale = std::max(lhs, rhs);
            if (scale > 0.0) worst_float = std::max(worst_float, std::abs(lhs - rhs) / scale);
        }
    }
    r.passed = true;
    r.measured = "exact rational balance for L=3..30; worst float residual " +
                 num(worst_float);
}

void criterion_normalization_defect(CriterionResult& r) {
    const int sizes[] = {10, 15, 20, 25};
    std::vector<double> devs;
    for (int L : sizes) devs.push_back(std::abs(equilibrium_closed_form(L).raw_sum - 1.0));
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < devs.size(); ++i)
        if (!(devs[i + 1] < devs[i])) monotone = false;
    r.passed = monotone && devs.back() < 1e-4;
    std::ostringstream os;
    os << "|sum-1| = ";
    for (std::size_t i = 0; i < devs.size(); ++i)
        os << (i ? ", " : "") << num(devs[i]) << " (L=" << sizes[i] << ")";
    if (!monotone) os << "; not monotone";
    r.measured = os.str();
}

struct EnsembleOutcome {
    double max_tv_early = 0.0;   // ensemble vs master over omega_t <= 3
    double tv_avg_vs_eq = 0.0;   // time average over [2, 10] vs equilibrium
    std::vector<double> member_max_tv;
};

EnsembleOutcome run_relaxation_ensemble() {
    const int L = 25, n0 = 7, members = 8;
    const auto lattice = Lattice::ring(L);
    const auto space = enumerate_configurations(lattice);
    std::vector<double> times(201);
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = 0.05 * static_cast<double>(k);

    const auto rates = build_rates_1d(L);
    std::vector<double> p0(rates.n_max + 1, 0.0);
    p0[n0] = 1.0;
    const auto master = solve_master(rates, p0, times);

    std::vector<std::vector<double>> ensemble(times.size(),
                                              std::vector<double>(rates.n_max + 1, 0.0));
    EnsembleOutcome out;
    for (int m = 0; m < members; ++m) {
        const auto mask = m == 0 ? canonical_column_mask(lattice, n0)
                                 : random_column_mask(space, n0, kEnsembleSeeds[m - 1]);
        const auto psi0 = basis_state(space, mask);
        std::size_t k = 0;
        double member_max = 0.0;
        propagate_visit(space, ModelParams{}, psi0, times, [&](const StateVector& sv) {
            const auto p = projection_of(space, sv);
            for (std::size_t n = 0; n < p.size(); ++n)
                ensemble[k][n] += p[n] / static_cast<double>(members);
            if (times[k] <= 3.0 + 1e-12)
                member_max = std::max(member_max, total_variation(p, master[k]));
            ++k;
        });
        out.member_max_tv.push_back(member_max);
    }

    for (std::size_t k = 0; k < times.size(); ++k)
        if (times[k] <= 3.0 + 1e-12)
            out.max_tv_early =
                std::max(out.max_tv_early, total_variation(ensemble[k], master[k]));

    std::vector<double> avg(rates.n_max + 1, 0.0);
    std::size_t used = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 2.0 - 1e-12) continue;
        for (std::size_t n = 0; n < avg.size(); ++n) avg[n] += ensemble[k][n];
        ++used;
    }
    for (auto& v : avg) v /= static_cast<double>(used);
    out.tv_avg_vs_eq = total_variation(avg, equilibrium_closed_form(L).normalized);
    return out;
}

void criterion_finite_size_sweep(CriterionResult& r) {
    const auto summary = sweep_finite_size({15, 20, 25}, {3, 5, 7}, 5, kSweepSeed,
                                           TimeGrid{2.0, 6.0, 81});
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < summary.pooled_rms.size(); ++i)
        if (!(summary.pooled_rms[i + 1] < summary.pooled_rms[i])) monotone = false;
    r.passed = monotone;
    std::ostringstream os;
    os << "pooled rms of <x> fluctuation: ";
    for (std::size_t i = 0; i < summary.pooled_rms.size(); ++i)
        os << (i ? ", " : "") << num(summary.pooled_rms[i]) << " (L=" << summary.sizes[i]
           << ")";
    r.measured = os.str();
}

void criterion_continuum_fields(CriterionResult& r) {
    const int L = 200;
    const auto rates = build_rates_1d(L);
    double dev_f = 0.0, dev_d = 0.0;
    for (int n = 0; n <= rates.n_max; ++n) {
        const double x = static_cast<double>(n) / L;
        if (x < 0.05 || x > 0.45) continue;
        dev_f = std::max(dev_f,
                         std::abs((rates.up[n] - rates.down[n]) / L - fpe_drift(x)));
        dev_d = std::max(dev_d, std::abs((rates.up[n] + rates.down[n]) / (L * double(L)) -
                                         fpe_diffusion(x, L)));
    }
    const auto field = uniform_field(L, 3 * L + 1);
    const auto stat = stationary_profile(field);
    const double dx = 0.5 / (3 * L);
    double fpe_mean = 0.0;
    for (std::size_t i = 0; i < stat.size(); ++i) {
        const double w = (i == 0 || i + 1 == stat.size()) ? 0.5 * dx : dx;
        fpe_mean += field.grid[i] * stat[i] * w;
    }
    const auto pi = rates.stationary();
    double master_mean = 0.0;
    for (int n = 0; n <= rates.n_max; ++n)
        master_mean += static_cast<double>(n) / L * pi[n];

    const double target = (5.0 - std::sqrt(5.0)) / 10.0;
    const bool fields_ok = dev_f < 3.0 / L && dev_d < 3.0 / L;
    const bool mean_ok = std::abs(fpe_mean - target) < 0.01;
    const bool agree_ok = std::abs(master_mean - fpe_mean) < 3.0 / L;
    r.passed = fields_ok && mean_ok && agree_ok;
    r.measured = "field dev " + num(dev_f) + "/" + num(dev_d) + " (gate " + num(3.0 / L) +
                 "); stationary mean " + num(fpe_mean) + " vs " + num(target) +
                 "; master mean " + num(master_mean);
}

void criterion_transform_fit(CriterionResult& r) {
    const auto tf = transform(uniform_field(200, 201), JacobianConvention::scaled, 2001);
    const bool ok = std::abs(tf.a1 - 0.7074) <= 0.005 && std::abs(tf.a2 - 0.4169) <= 0.01 &&
                    tf.fit_residual < 0.01;
    r.passed = ok;
    r.measured = "a1=" + num(tf.a1) + ", a2=" + num(tf.a2) + ", residual=" +
                 num(tf.fit_residual) + ", y(1/2)=" + num(tf.y.back());
}

void criterion_gaussian_relaxation(CriterionResult& r) {
    const int L = 25, n0 = 7;
    const auto rates = build_rates_1d(L);
    std::vector<double> times;
    for (int k = 10; k <= 80; ++k) times.push_back(0.01 * k);
    std::vector<double> p0(rates.n_max + 1, 0.0);
    p0[n0] = 1.0;
    const auto rows = solve_master(rates, p0, times);
    const auto pi = rates.stationary();
    std::vector<double> dev;
    dev.reserve(times.size());
    for (const auto& row : rows) dev.push_back(total_variation(row, pi));
    const auto fit = gaussian_relaxation_fit(times, dev);
    r.passed = fit.lambda > 0.0 && fit.r_squared > 0.98;
    r.measured = "lambda=" + num(fit.lambda) + ", R^2=" + num(fit.r_squared);
}

void criterion_torus_thermalization(CriterionResult& r) {
    const auto lattice = Lattice::torus(6, 6);
    const std::int64_t predicted = predict_state_count(lattice);
    if (predicted != 2406862) {
        r.passed = false;
        r.measured = "transfer-matrix count " + std::to_string(predicted) +
                     " != 2406862";
        return;
    }
    // enumeration independently reproduces the transfer-matrix count (asserted inside)
    const auto space = enumerate_configurations(lattice, predicted + 1);
    const auto rates = build_rates_2d(space);  // asserts measured down rates equal n
    const auto mask = random_column_mask(space, 8, kTorusSeed);
    const auto psi0 = basis_state(space, mask);
    std::vector<double> p_final;
    propagate_visit(space, ModelParams{}, psi0, {3.0}, [&](const StateVector& sv) {
        p_final = projection_of(space, sv);
    });
    const double tv = total_variation(p_final, rates.stationary());
    r.passed = tv < 0.10;
    r.measured = std::to_string(space.size()) + " states (trace-verified), down rates " +
                 "exact, TV(quantum at omega_t=3, stationary) = " + num(tv);
}

void criterion_walk_census(CriterionResult& r) {
    std::vector<double> ratios;
    std::ostringstream os;
    for (int L = 10; L <= 20; ++L) {
        const int n = static_cast<int>(std::lround(L / 4.0));
        const auto space = enumerate_configurations(Lattice::ring(L));
        const auto census = transition_census(space, n);
        const auto nu = space.column_sizes().at(n);
        const double ratio = static_cast<double>(census.reflections) /
                             (static_cast<double>(census.loops) * (nu - 1));
        ratios.push_back(ratio);
        os << (L > 10 ? ", " : "") << num(ratio);
    }
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < ratios.size(); ++i)
        if (!(ratios[i + 1] < ratios[i])) monotone = false;
    r.passed = monotone;
    r.measured = "reflection/loop ratio per distinct target, L=10..20: " + os.str();
}

void criterion_sparse_vs_dense(CriterionResult& r) {
    const std::vector<double> times = {0.5, 1.0, 2.0};
    double worst = 0.0;
    for (int L : {8, 12}) {
        const auto lattice = Lattice::ring(L);
        const auto space = enumerate_configurations(lattice);

        std::vector<StateVector> initials;
        initials.push_back(basis_state(space, canonical_column_mask(lattice, L / 4)));
        StateVector random_state;
        random_state.amplitudes.resize(static_cast<Eigen::Index>(space.size()));
        std::uint64_t stream = 0xB10CADE + static_cast<std::uint64_t>(L);
        for (Eigen::Index i = 0; i < random_state.amplitudes.size(); ++i) {
            const double re = std::ldexp(static_cast<double>(splitmix64(stream) >> 11), -53);
            const double im = std::ldexp(static_cast<double>(splitmix64(stream) >> 11), -53);
            random_state.amplitudes[i] = std::complex<double>(2.0 * re - 1.0, 2.0 * im - 1.0);
        }
        random_state.amplitudes.normalize();
        initials.push_back(random_state);

        for (const auto& psi0 : initials) {
            const auto sparse = propagate(space, ModelParams{}, psi0, times);
            const auto dense = propagate_dense(space, ModelParams{}, psi0, times);
            for (std::size_t k = 0; k < times.size(); ++k)
                worst = std::max(worst,
                                 (sparse[k].amplitudes - dense[k].amplitudes).norm());
        }
    }
    r.passed = worst <= 1e-7;
    r.measured = "max |sparse - dense| over L={8,12}, omega_t={0.5,1,2}: " + num(worst);
}

}  // namespace

std::vector<CriterionResult> validate_all(bool fast) {
    std::vector<CriterionResult> out;
    auto run = [&](int id, const char* name, bool heavy, auto&& fn) {
        CriterionResult r;
        r.id = id;
        r.name = name;
        if (fast && heavy) {
            r.ran = false;
            r.passed = false;
            r.measured = "skipped in fast mode";
            out.push_back(r);
            return;
        }
        r.ran = true;
        try {
            fn(r);
        } catch (const std::exception& e) {
            r.passed = false;
            r.measured = std::string("error: ") + e.what();
        }
        out.push_back(r);
    };

    run(1, "ring census and forward rates exact (L=3..20)", false, criterion_ring_census);
    run(2, "detailed balance exact and in floating point (L=3..30)", false,
        criterion_detailed_balance);
    run(3, "equilibrium normalization defect shrinks with L", false,
        criterion_normalization_defect);

    // criteria 4 and 5 share one ensemble propagation
    {
        CriterionResult r4, r5;
        r4.id = 4;
        r4.name = "quantum vs master ensemble relaxation (L=25, n0=7)";
        r5.id = 5;
        r5.name = "time-averaged quantum distribution matches equilibrium";
        if (fast) {
            r4.ran = r5.ran = false;
            r4.passed = r5.passed = false;
            r4.measured = r5.measured = "skipped in fast mode";
        } else {
            r4.ran = r5.ran = true;
            try {
                const auto e = run_relaxation_ensemble();
                r4.passed = e.max_tv_early < 0.10;
                std::ostringstream os;
                os << "ensemble max TV " << num(e.max_tv_early)
                   << " over omega_t in [0,3]; member max TV ";
                for (std::size_t m = 0; m < e.member_max_tv.size(); ++m)
                    os << (m ? "/" : "") << num(e.member_max_tv[m]);
                r4.measured = os.str();
                r5.passed = e.tv_avg_vs_eq < 0.05;
                r5.measured = "TV(time average over omega_t in [2,10], equilibrium) = " +
                              num(e.tv_avg_vs_eq);
            } catch (const std::exception& ex) {
                r4.passed = r5.passed = false;
                r4.measured = r5.measured = std::string("error: ") + ex.what();
            }
        }
        out.push_back(r4);
        out.push_back(r5);
    }

    run(6, "quantum fluctuations around the master mean shrink with L", true,
        criterion_finite_size_sweep);
    run(7, "discrete rates reach the continuum fields (L=200)", false,
        criterion_continuum_fields);
    run(8, "constant-diffusion coordinate is near-quadratic", false, criterion_transform_fit);
    run(9, "master relaxation is Gaussian in omega_t", false, criterion_gaussian_relaxation);
    run(10, "6x6 torus census and quantum thermalization", true,
        criterion_torus_thermalization);
    run(11, "reflection/loop walk ratio decreases with L", false, criterion_walk_census);
    run(12, "sparse propagation matches dense eigensolve (L<=12)", false,
        criterion_sparse_vs_dense);
    return out;
}

std::string validation_report_json(const std::vector<CriterionResult>& results) {
    ordered_json j;
    j["version"] = kVersion;
    auto arr = ordered_json::array();
    bool all = true;
    for (const auto& r : results) {
        arr.push_back({{"id", r.id},
                       {"name", r.name},
                       {"ran", r.ran},
                       {"passed", r.passed},
                       {"measured", r.measured}});
        if (r.ran && !r.passed) all = false;
    }
    j["criteria"] = arr;
    j["all_ran_passed"] = all;
    return j.dump(2) + "\n";
}

}  // namespace blockade
