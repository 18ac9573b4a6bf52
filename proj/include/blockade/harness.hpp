#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockade/lattice.hpp"
#include "blockade/master.hpp"
#include "blockade/quantum.hpp"

namespace blockade {

struct TimeGrid {
    double start = 0.0;
    double stop = 5.0;
    int samples = 51;

    std::vector<double> points() const;  // uniform, both endpoints included
};

struct InitialSpec {
    enum class Kind { mask, canonical_column, random_column };
    Kind kind = Kind::canonical_column;
    ConfigSpace::Mask mask = 0;  // kind == mask
    int column = 0;              // column kinds
    std::uint64_t seed = 0;      // kind == random_column (mandatory)
};

struct ExperimentConfig {
    Lattice lattice = Lattice::ring(8);
    InitialSpec initial;
    TimeGrid times;
    bool run_quantum = true;
    bool run_master = true;
    bool run_fpe = false;
    int fpe_nodes_per_column = 3;
    std::int64_t capacity = 6'000'000;
    std::string output_dir = "out";

    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

// 1/2 sum |a_n - b_n|.
double total_variation(std::span<const double> a, std::span<const double> b);
// max |CDF_a - CDF_b| (secondary, informational).
double kolmogorov_smirnov(std::span<const double> a, std::span<const double> b);

std::uint64_t splitmix64(std::uint64_t& state);
// Platform-independent uniform draw in [0, bound).
std::uint64_t uniform_index(std::uint64_t& state, std::uint64_t bound);

// Uniformly random basis configuration from a column, replayable from the seed.
ConfigSpace::Mask random_column_mask(const ConfigSpace& space, int column,
                                     std::uint64_t seed);
// Maximally even ring arrangement (rings only: the analogous highly symmetric
// torus states relax anomalously slowly and are unrepresentative).
ConfigSpace::Mask canonical_column_mask(const Lattice& lattice, int column);

struct ComparisonReport {
    std::vector<double> omega_times;
    std::vector<double> tv;
    double max_tv = 0.0;
    double mean_tv = 0.0;
    double equilibrium_tv = 0.0;  // final-time distance to the stationary law
    double max_ks = 0.0;
};

struct ExperimentResult {
    ConfigSpace::Mask initial_mask = 0;
    // false on rings too large for 64-bit masks, where only the excitation
    // number of the initial condition is defined
    bool mask_known = true;
    int initial_column = 0;
    std::optional<ComparisonReport> quantum_vs_master;
    std::optional<ComparisonReport> master_vs_fpe;
    std::vector<std::string> artifacts;
};

// Runs the configured solvers, writes trajectory CSVs, rate/field tables, a
// comparison report, and a manifest into config.output_dir (atomic writes).
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepRow {
    int L = 0;
    int column = 0;
    std::uint64_t seed = 0;
    double rms = 0.0;  // deviation of quantum <x>(t) from the master mean
};

struct SweepSummary {
    TimeGrid window;
    std::vector<int> sizes;
    std::vector<SweepRow> rows;
    std::vector<double> pooled_rms;  // one entry per size
};

// Fig.-2a-style finite-size fluctuation sweep: per size, `states_per_size`
// seeded random initial states from the paired column.
SweepSummary sweep_finite_size(const std::vector<int>& sizes,
                               const std::vector<int>& columns, int states_per_size,
                               std::uint64_t seed, const TimeGrid& window);
std::string sweep_csv(const SweepSummary& summary);

// Relative detailed-balance residual check against a stationary distribution.
bool check_detailed_balance(const RateMatrix& rates, std::span<const double> stationary,
                            double relative_tolerance, std::string* detail = nullptr);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool ran = false;
    bool passed = false;
    std::string measured;
};

// The full self-validation suite; `fast` runs the quick subset on small rings.
std::vector<CriterionResult> validate_all(bool fast);
std::string validation_report_json(const std::vector<CriterionResult>& results);

}  // namespace blockade
