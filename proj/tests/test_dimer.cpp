#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <stdexcept>

#include "blockade/dimer.hpp"
#include "blockade/lattice.hpp"

using namespace blockade;

TEST_CASE("lucas numbers") {
    CHECK(lucas_number(0) == 2);
    CHECK(lucas_number(1) == 1);
    CHECK(lucas_number(2) == 3);
    CHECK(lucas_number(3) == 4);
    CHECK(lucas_number(10) == 123);
    CHECK(lucas_number(20) == 15127);
    CHECK(lucas_number(36) == 33385282);
}

TEST_CASE("closed-form column counts") {
    CHECK(nu_closed_form(8, 0) == 1);
    CHECK(nu_closed_form(8, 1) == 8);
    CHECK(nu_closed_form(8, 2) == 20);
    CHECK(nu_closed_form(8, 3) == 16);
    CHECK(nu_closed_form(8, 4) == 2);
    CHECK(nu_closed_form(12, 3) == 112);
    CHECK(nu_closed_form(25, 7) == 44200);
    CHECK_THROWS_AS(nu_closed_form(8, 5), std::invalid_argument);
    CHECK_THROWS_AS(nu_closed_form(1, 0), std::invalid_argument);
}

TEST_CASE("column counts sum to the Lucas number") {
    for (int L = 3; L <= 24; ++L) {
        std::int64_t total = 0;
        for (int n = 0; n <= L / 2; ++n) total += nu_closed_form(L, n);
        CHECK(total == lucas_number(L));
    }
}

TEST_CASE("product-form hop count equals n times the column count") {
    for (int L = 3; L <= 20; ++L)
        for (int n = 0; n <= L / 2; ++n)
            CHECK(hop_count_product_form(L, n) == n * nu_closed_form(L, n));
}

TEST_CASE("rational normalization") {
    CHECK(Rational(4, -6) == Rational(-2, 3));
    CHECK(Rational(0, 5) == Rational(0, 1));
    CHECK(Rational(12, 5).value() == doctest::Approx(2.4));
    CHECK_THROWS_AS(Rational(3, 0), std::invalid_argument);
}

TEST_CASE("transition coefficients for L=8") {
    const auto c = transition_coefficients(8);
    REQUIRE(c.nu.size() == 5);
    CHECK(c.nu == std::vector<std::int64_t>{1, 8, 20, 16, 2});
    CHECK(c.c_down == std::vector<std::int64_t>{0, 8, 40, 48, 8});
    for (int n = 0; n <= 4; ++n) CHECK(c.t_down[n] == Rational(n, 1));
    CHECK(c.t_up[0] == Rational(8, 1));
    CHECK(c.t_up[1] == Rational(5, 1));
    CHECK(c.t_up[2] == Rational(12, 5));
    CHECK(c.t_up[3] == Rational(1, 2));
    CHECK(c.t_up[4] == Rational(0, 1));
}

TEST_CASE("exact detailed balance of the closed-form coefficients") {
    for (int L = 3; L <= 30; ++L) {
        const auto c = transition_coefficients(L);
        for (std::size_t n = 0; n + 1 < c.nu.size(); ++n) {
            // nu_n T_{n->n+1} == nu_{n+1} T_{n+1->n}, cross-multiplied exactly
            const __int128 lhs = static_cast<__int128>(c.nu[n]) * c.t_up[n].num *
                                 c.t_down[n + 1].den;
            const __int128 rhs = static_cast<__int128>(c.nu[n + 1]) * c.t_down[n + 1].num *
                                 c.t_up[n].den;
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("generating polynomials come from the enumeration") {
    const auto g = generating_polys(8);
    CHECK(g.xi == std::vector<std::int64_t>{1, 8, 20, 16, 2});
    CHECK(g.lambda == std::vector<std::int64_t>{0, 8, 40, 48, 8});
}

TEST_CASE("walk census fixtures") {
    const auto space8 = enumerate_configurations(Lattice::ring(8));
    const auto c80 = transition_census(space8, 0);
    CHECK(c80.loops == 8);
    CHECK(c80.reflections == 0);
    CHECK(c80.transmissions == 40);

    const auto c81 = transition_census(space8, 1);
    CHECK(c81.loops == 48);
    CHECK(c81.reflections == 96);
    CHECK(c81.transmissions == 96);

    const auto space4 = enumerate_configurations(Lattice::ring(4));
    const auto c41 = transition_census(space4, 1);
    CHECK(c41.loops == 8);
    CHECK(c41.reflections == 16);
    CHECK(c41.transmissions == 0);
}

TEST_CASE("walk census totals match the neighborhood degree sum") {
    for (int L : {6, 9, 12}) {
        const auto space = enumerate_configurations(Lattice::ring(L));
        for (int n = 0; n <= space.max_excitation(); ++n) {
            const auto census = transition_census(space, n);
            std::int64_t walks = 0;
            for (std::size_t s = space.column_begin(n); s < space.column_end(n); ++s)
                for (std::uint32_t u : space.neighbors(s))
                    walks += static_cast<std::int64_t>(space.degree(u));
            CHECK(census.loops + census.reflections + census.transmissions == walks);
            // every walk can return: loops equal the total degree of the column
            std::int64_t degsum = 0;
            for (std::size_t s = space.column_begin(n); s < space.column_end(n); ++s)
                degsum += static_cast<std::int64_t>(space.degree(s));
            CHECK(census.loops == degsum);
        }
    }
}
