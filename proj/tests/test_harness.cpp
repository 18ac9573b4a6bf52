#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blockade/harness.hpp"
#include "blockade/master.hpp"

using namespace blockade;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

// strips the one intentionally non-reproducible block
std::string drop_wall_times(std::string text) {
    const auto pos = text.find("\"wall_ms\"");
    if (pos != std::string::npos) text.erase(pos);
    return text;
}

}  // namespace

TEST_CASE("time grids") {
    const auto pts = TimeGrid{0.0, 2.0, 5}.points();
    CHECK(pts == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK(TimeGrid{1.5, 1.5, 1}.points() == std::vector<double>{1.5});
    CHECK_THROWS_AS((TimeGrid{2.0, 1.0, 5}.points()), std::invalid_argument);
    CHECK_THROWS_AS((TimeGrid{-1.0, 1.0, 5}.points()), std::invalid_argument);
    CHECK_THROWS_AS((TimeGrid{0.0, 1.0, 0}.points()), std::invalid_argument);
}

TEST_CASE("distribution distances") {
    const std::vector<double> a = {1.0, 0.0, 0.0};
    const std::vector<double> b = {0.0, 0.0, 1.0};
    CHECK(total_variation(a, a) == 0.0);
    CHECK(total_variation(a, b) == doctest::Approx(1.0));
    CHECK(kolmogorov_smirnov(a, b) == doctest::Approx(1.0));
    const std::vector<double> c = {0.5, 0.25, 0.25};
    CHECK(total_variation(a, c) == doctest::Approx(0.5));
    CHECK(kolmogorov_smirnov(a, c) == doctest::Approx(0.5));
    const std::vector<double> short_vec = {0.5, 0.5};
    CHECK_THROWS_AS(total_variation(a, short_vec), std::invalid_argument);
}

TEST_CASE("splitmix64 reference stream") {
    std::uint64_t s = 0;
    CHECK(splitmix64(s) == 0xE220A8397B1DCDAFULL);
    CHECK(splitmix64(s) == 0x6E789E6AA1B965F4ULL);
    CHECK(splitmix64(s) == 0x06C45D188009454FULL);
}

TEST_CASE("uniform index draws stay in range and replay") {
    std::uint64_t s1 = 99, s2 = 99;
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 500; ++i) {
        const auto v = uniform_index(s1, 37);
        CHECK(v < 37);
        CHECK(v == uniform_index(s2, 37));
        seen.insert(v);
    }
    CHECK(seen.size() == 37);  // 500 draws cover a 37-way alphabet
    std::uint64_t s = 5;
    CHECK(uniform_index(s, 1) == 0);
    CHECK_THROWS_AS(uniform_index(s, 0), std::invalid_argument);
}

TEST_CASE("canonical column states are maximally spread") {
    CHECK(canonical_column_mask(Lattice::ring(8), 4) == 0b01010101ULL);
    CHECK(canonical_column_mask(Lattice::ring(25), 7) == 2245769ULL);
    CHECK(canonical_column_mask(Lattice::ring(10), 0) == 0ULL);
    for (int L : {9, 14, 25}) {
        for (int n = 0; n <= L / 2; ++n) {
            const auto mask = canonical_column_mask(Lattice::ring(L), n);
            CHECK(std::popcount(mask) == n);
            // blockade-valid including the wrap pair
            const auto space = enumerate_configurations(Lattice::ring(L));
            CHECK(space.excitations(space.index_of(mask)) == n);
        }
    }
    CHECK_THROWS_AS(canonical_column_mask(Lattice::torus(4, 4), 2), std::invalid_argument);
    CHECK_THROWS_AS(canonical_column_mask(Lattice::ring(10), 6), std::invalid_argument);
}

TEST_CASE("random column states replay from their seed") {
    const auto space = enumerate_configurations(Lattice::ring(20));
    const auto a = random_column_mask(space, 5, 11);
    const auto b = random_column_mask(space, 5, 11);
    CHECK(a == b);
    CHECK(std::popcount(a) == 5);
    CHECK(space.excitations(space.index_of(a)) == 5);
    std::set<ConfigSpace::Mask> distinct;
    for (std::uint64_t seed = 0; seed < 40; ++seed)
        distinct.insert(random_column_mask(space, 5, seed));
    CHECK(distinct.size() > 20);  // draws move around the column
    CHECK_THROWS_AS(random_column_mask(space, 99, 1), std::invalid_argument);
}

TEST_CASE("experiment config json round trip") {
    ExperimentConfig c;
    c.lattice = Lattice::torus(4, 5);
    c.initial.kind = InitialSpec::Kind::random_column;
    c.initial.column = 3;
    c.initial.seed = 17;
    c.times = {0.0, 2.5, 26};
    c.run_fpe = false;
    c.capacity = 123456;
    c.output_dir = "scratch";
    const auto text = c.to_json_text();
    const auto back = ExperimentConfig::from_json_text(text);
    CHECK(back.to_json_text() == text);
    CHECK(back.lattice.kind == LatticeKind::torus);
    CHECK(back.initial.seed == 17);
    CHECK(back.times.samples == 26);
    CHECK(back.capacity == 123456);

    const auto parsed = ExperimentConfig::from_json_text(
        R"({"lattice":{"kind":"ring","length":12},"times":{"stop":1.0,"samples":11}})");
    CHECK(parsed.lattice.lx == 12);
    CHECK(parsed.run_quantum);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"lattice":{"kind":"chain"}})"),
                    std::exception);
}

TEST_CASE("experiments are reproducible byte for byte") {
    ExperimentConfig c;
    c.lattice = Lattice::ring(12);
    c.initial.kind = InitialSpec::Kind::canonical_column;
    c.initial.column = 3;
    c.times = {0.0, 1.0, 11};
    c.run_quantum = c.run_master = c.run_fpe = true;

    const fs::path dir_a = "harness_scratch_a", dir_b = "harness_scratch_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    c.output_dir = dir_a.string();
    const auto res_a = run_experiment(c);
    c.output_dir = dir_b.string();
    const auto res_b = run_experiment(c);

    CHECK(res_a.initial_mask == res_b.initial_mask);
    const char* names[] = {"quantum.csv",       "master.csv",  "fpe_field.csv",
                           "fpe_snapshots.csv", "space.json",  "rates.json",
                           "report.json",       "manifest.json"};
    for (const char* name : names) {
        REQUIRE(fs::exists(dir_a / name));
        const auto ta = slurp(dir_a / name), tb = slurp(dir_b / name);
        if (std::string(name) == "manifest.json")
            CHECK(drop_wall_times(ta) == drop_wall_times(tb));
        else
            CHECK(ta == tb);
    }

    SUBCASE("trajectory rows are normalized distributions") {
        for (const char* name : {"quantum.csv", "master.csv"}) {
            const auto rows = parse_csv(slurp(dir_a / name));
            REQUIRE(rows.size() == 11);
            for (const auto& row : rows) {
                REQUIRE(row.size() == 1 + 7 + 2);  // omega_t, p_0..p_6, meanN, meanN2
                double sum = 0.0;
                for (std::size_t i = 1; i + 2 < row.size(); ++i) sum += row[i];
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
            }
        }
    }
    SUBCASE("comparison reports cover the grid") {
        REQUIRE(res_a.quantum_vs_master.has_value());
        CHECK(res_a.quantum_vs_master->tv.size() == 11);
        CHECK(res_a.quantum_vs_master->max_tv <= 1.0);
        REQUIRE(res_a.master_vs_fpe.has_value());
        CHECK(res_a.master_vs_fpe->tv.front() < 1e-10);
    }
}

TEST_CASE("basis-mask initial states must belong to the space") {
    ExperimentConfig c;
    c.lattice = Lattice::ring(10);
    c.initial.kind = InitialSpec::Kind::mask;
    c.initial.mask = 0b11;  // blocked neighbors
    c.times = {0.0, 1.0, 3};
    c.output_dir = "harness_scratch_bad";
    CHECK_THROWS_AS(run_experiment(c), std::runtime_error);
}

TEST_CASE("a corrupted rate table breaks detailed balance") {
    auto rates = build_rates_1d(10);
    const auto eq = equilibrium_closed_form(10);
    std::string detail;
    CHECK(check_detailed_balance(rates, eq.normalized, 1e-12, &detail));
    CHECK(detail.find("residual") != std::string::npos);

    rates.up[2] *= 1.0 + 1e-6;  // fault injection
    CHECK_FALSE(check_detailed_balance(rates, eq.normalized, 1e-12, &detail));
    CHECK(detail.find("n=2") != std::string::npos);
}

TEST_CASE("sweep produces one pooled value per size") {
    const auto summary =
        sweep_finite_size({8, 10}, {2, 2}, 2, 123, TimeGrid{1.0, 2.0, 5});
    REQUIRE(summary.rows.size() == 4);
    REQUIRE(summary.pooled_rms.size() == 2);
    for (const auto& row : summary.rows) {
        CHECK(row.rms >= 0.0);
        CHECK(row.rms < 0.5);
    }
    const auto csv = sweep_csv(summary);
    CHECK(csv.find("L,column,seed,rms") == 0);
    // 1 header + 2 state rows + 1 pooled row per size
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK_THROWS_AS(sweep_finite_size({8}, {2, 3}, 1, 1, TimeGrid{1.0, 2.0, 3}),
                    std::invalid_argument);
}

TEST_CASE("fast validation runs the quick criteria and passes") {
    const auto results = validate_all(true);
    REQUIRE(results.size() == 12);
    const std::set<int> heavy = {4, 5, 6, 10};
    for (const auto& r : results) {
        CHECK(r.id >= 1);
        CHECK(r.id <= 12);
        if (heavy.count(r.id)) {
            CHECK_FALSE(r.ran);
            CHECK(r.measured.find("skipped") != std::string::npos);
        } else {
            CHECK(r.ran);
            CHECK_MESSAGE(r.passed, (r.name + ": " + r.measured));
        }
    }
    const auto report = validation_report_json(results);
    CHECK(report.find("\"criteria\"") != std::string::npos);
    CHECK(report.find("\"all_ran_passed\": true") != std::string::npos);
}
