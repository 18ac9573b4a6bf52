#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blockade/dimer.hpp"
#include "blockade/fpe.hpp"
#include "blockade/harness.hpp"
#include "blockade/io.hpp"
#include "blockade/lattice.hpp"

namespace {

using namespace blockade;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Shared experiment options; sentinel values mean "not set on the command line".
struct ExperimentCli {
    std::string config_path;
    int ring_length = 0;
    std::vector<int> torus_dims;
    int column = -1;
    std::string mask_text;
    std::uint64_t seed = 0;
    bool seeded = false;
    double start = std::nan("");
    double stop = std::nan("");
    int samples = -1;
    int nodes_per_column = -1;
    std::int64_t capacity = -1;
    std::string output_dir;
};

void add_experiment_options(CLI::App* cmd, ExperimentCli& x) {
    cmd->add_option("--config", x.config_path, "experiment config JSON file");
    cmd->add_option("--ring", x.ring_length, "ring length L");
    cmd->add_option("--torus", x.torus_dims, "torus dimensions LX LY")->expected(2);
    cmd->add_option("--column", x.column, "initial excitation number n0");
    cmd->add_option("--mask", x.mask_text, "initial configuration bitmask (decimal)");
    auto* seed_opt = cmd->add_option("--seed", x.seed,
                                     "draw the initial state from the column at random");
    cmd->parse_complete_callback([seed_opt, &x] { x.seeded = seed_opt->count() > 0; });
    cmd->add_option("--start", x.start, "first omega_t sample");
    cmd->add_option("--stop", x.stop, "last omega_t sample");
    cmd->add_option("--samples", x.samples, "number of omega_t samples");
    cmd->add_option("--nodes-per-column", x.nodes_per_column,
                    "continuum grid nodes per excitation bin");
    cmd->add_option("--capacity", x.capacity, "refuse to enumerate more states than this");
    cmd->add_option("--output-dir", x.output_dir, "artifact directory");
}

ExperimentConfig make_config(const ExperimentCli& x, bool quantum, bool master, bool fpe) {
    ExperimentConfig c;
    if (!x.config_path.empty()) c = ExperimentConfig::from_json_text(read_file(x.config_path));
    if (x.ring_length > 0) c.lattice = Lattice::ring(x.ring_length);
    if (!x.torus_dims.empty()) c.lattice = Lattice::torus(x.torus_dims[0], x.torus_dims[1]);
    if (!x.mask_text.empty()) {
        c.initial.kind = InitialSpec::Kind::mask;
        c.initial.mask = std::stoull(x.mask_text);
    } else if (x.column >= 0) {
        c.initial.column = x.column;
        if (x.seeded) {
            c.initial.kind = InitialSpec::Kind::random_column;
            c.initial.seed = x.seed;
        } else {
            c.initial.kind = InitialSpec::Kind::canonical_column;
        }
    } else if (x.seeded) {
        c.initial.kind = InitialSpec::Kind::random_column;
        c.initial.seed = x.seed;
    }
    if (!std::isnan(x.start)) c.times.start = x.start;
    if (!std::isnan(x.stop)) c.times.stop = x.stop;
    if (x.samples > 0) c.times.samples = x.samples;
    if (x.nodes_per_column > 0) c.fpe_nodes_per_column = x.nodes_per_column;
    if (x.capacity > 0) c.capacity = x.capacity;
    if (!x.output_dir.empty()) c.output_dir = x.output_dir;
    if (x.config_path.empty()) {
        c.run_quantum = quantum;
        c.run_master = master;
        c.run_fpe = fpe;
    }
    return c;
}

void print_result(const ExperimentConfig& config, const ExperimentResult& result) {
    std::cout << "lattice " << config.lattice.label() << ", initial ";
    if (result.mask_known) std::cout << "mask " << result.initial_mask << " ";
    std::cout << "(column " << result.initial_column << ")\n";
    if (result.quantum_vs_master) {
        const auto& r = *result.quantum_vs_master;
        std::cout << "quantum vs master: max TV " << format_double(r.max_tv) << ", mean TV "
                  << format_double(r.mean_tv) << ", final TV to stationary "
                  << format_double(r.equilibrium_tv) << ", max KS "
                  << format_double(r.max_ks) << "\n";
    }
    if (result.master_vs_fpe) {
        const auto& r = *result.master_vs_fpe;
        std::cout << "master vs fpe:     max TV " << format_double(r.max_tv) << ", mean TV "
                  << format_double(r.mean_tv) << ", stationary TV "
                  << format_double(r.equilibrium_tv) << "\n";
    }
    for (const auto& a : result.artifacts) std::cout << "wrote " << a << "\n";
}

int run_validate(bool fast, const std::string& report_path) {
    const auto results = validate_all(fast);
    bool ok = true;
    for (const auto& r : results) {
        const char* verdict = r.ran ? (r.passed ? "PASS" : "FAIL") : "SKIP";
        std::cout << "[" << (r.id < 10 ? " " : "") << r.id << "/12] " << verdict << "  "
                  << r.name << " :: " << r.measured << "\n";
        if (r.ran && !r.passed) ok = false;
    }
    std::cout << (ok ? "validation passed" : "validation FAILED") << "\n";
    if (!report_path.empty()) atomic_write_text(report_path, validation_report_json(results));
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blockade-constrained spin model: configuration spaces, quantum dynamics, "
                 "and kinetic descriptions"};
    app.require_subcommand(1);
    int exit_code = 0;

    // enumerate
    auto* enumerate_cmd = app.add_subcommand("enumerate", "enumerate a configuration space");
    ExperimentCli ex_enum;
    add_experiment_options(enumerate_cmd, ex_enum);
    std::string edges_path, summary_path;
    enumerate_cmd->add_option("--edges", edges_path, "write the adjacency edge list here");
    enumerate_cmd->add_option("--summary", summary_path, "write the JSON summary here");
    enumerate_cmd->callback([&] {
        const auto config = make_config(ex_enum, false, false, false);
        const auto space = enumerate_configurations(config.lattice, config.capacity);
        const auto summary = space_summary_json(space);
        std::cout << summary;
        if (!summary_path.empty()) atomic_write_text(summary_path, summary);
        if (!edges_path.empty()) {
            std::ostringstream out;
            write_edge_list(space, out);
            atomic_write_text(edges_path, out.str());
            std::cout << "wrote " << edges_path << "\n";
        }
    });

    // coeffs
    auto* coeffs_cmd = app.add_subcommand("coeffs", "closed-form census and rate table");
    int coeffs_length = 0;
    std::string coeffs_output;
    coeffs_cmd->add_option("--ring", coeffs_length, "ring length L")->required();
    coeffs_cmd->add_option("--output", coeffs_output, "write the CSV here");
    coeffs_cmd->callback([&] {
        const auto c = transition_coefficients(coeffs_length);
        std::ostringstream out;
        out << "L,n,nu_n,c_down,T_down,T_up\n";
        for (std::size_t n = 0; n < c.nu.size(); ++n)
            out << c.L << "," << n << "," << c.nu[n] << "," << c.c_down[n] << ","
                << format_double(c.t_down[n].value()) << ","
                << format_double(c.t_up[n].value()) << "\n";
        std::cout << out.str();
        if (!coeffs_output.empty()) atomic_write_text(coeffs_output, out.str());
    });

    // quantum / master / fpe / compare share the experiment runner
    struct Runner {
        const char* name;
        const char* help;
        bool quantum, master, fpe;
    };
    const Runner runners[] = {
        {"quantum", "exact closed-system propagation", true, false, false},
        {"master", "excitation-number master equation", false, true, false},
        {"fpe", "continuum drift-diffusion equation", false, false, true},
        {"compare", "run all descriptions and compare", true, true, true},
    };
    std::vector<ExperimentCli> runner_cli(4);
    for (std::size_t i = 0; i < 4; ++i) {
        auto* cmd = app.add_subcommand(runners[i].name, runners[i].help);
        add_experiment_options(cmd, runner_cli[i]);
        cmd->callback([&runners, &runner_cli, i] {
            const Runner& r = runners[i];
            auto config = make_config(runner_cli[i], r.quantum, r.master, r.fpe);
            if (i == 3 && config.lattice.kind != LatticeKind::ring)
                config.run_fpe = false;  // compare on a torus: no continuum stage
            if (i == 3 && config.lattice.kind == LatticeKind::ring &&
                config.lattice.lx > 63) {
                config.run_quantum = false;
                std::cout << "ring too large for exact propagation; "
                             "comparing the kinetic descriptions only\n";
            }
            const auto result = run_experiment(config);
            print_result(config, result);
        });
    }

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "finite-size fluctuation sweep");
    std::vector<int> sweep_sizes{15, 20, 25};
    std::vector<int> sweep_columns{3, 5, 7};
    int sweep_states = 5;
    std::uint64_t sweep_seed = 7;
    double sweep_start = 2.0, sweep_stop = 6.0;
    int sweep_samples = 81;
    std::string sweep_output;
    sweep_cmd->add_option("--sizes", sweep_sizes, "ring lengths");
    sweep_cmd->add_option("--columns", sweep_columns, "initial column per ring length");
    sweep_cmd->add_option("--states", sweep_states, "random states per ring length");
    sweep_cmd->add_option("--seed", sweep_seed, "sweep seed");
    sweep_cmd->add_option("--start", sweep_start, "window start (omega_t)");
    sweep_cmd->add_option("--stop", sweep_stop, "window stop (omega_t)");
    sweep_cmd->add_option("--samples", sweep_samples, "window samples");
    sweep_cmd->add_option("--output", sweep_output, "write the CSV here");
    sweep_cmd->callback([&] {
        const auto summary =
            sweep_finite_size(sweep_sizes, sweep_columns, sweep_states, sweep_seed,
                              TimeGrid{sweep_start, sweep_stop, sweep_samples});
        const auto csv = sweep_csv(summary);
        std::cout << csv;
        if (!sweep_output.empty()) atomic_write_text(sweep_output, csv);
    });

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "run the self-validation suite");
    bool fast = false;
    std::string report_path;
    validate_cmd->add_flag("--fast", fast, "quick subset (skips the long quantum runs)");
    validate_cmd->add_option("--report", report_path, "write the JSON report here");
    validate_cmd->callback([&] { exit_code = run_validate(fast, report_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
