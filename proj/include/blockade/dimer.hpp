#pragma once

#include <cstdint>
#include <vector>

#include "blockade/lattice.hpp"

namespace blockade {

// Lucas(0) = 2, Lucas(1) = 1, Lucas(n) = Lucas(n-1) + Lucas(n-2).
std::int64_t lucas_number(int n);

// Number of blockade-allowed ring configurations with n excitations:
// nu_n = L/(L-n) * C(L-n, n), nu_0 = 1. Exact integer.
std::int64_t nu_closed_form(int L, int n);

// Number of directed hops from column n down to column n-1, via the
// generating-function product form; equals n * nu_n.
std::int64_t hop_count_product_form(int L, int n);

// Exact rational p/q, normalized with q > 0.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d);

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

// Closed-form transition coefficients: T_{n->n-1} = n and
// T_{n->n+1} = (L-2n-1)(L-2n)/(L-n-1), for n = 0..floor(L/2).
struct DimerCounts {
    int L = 0;
    std::vector<std::int64_t> nu;
    std::vector<std::int64_t> c_down;
    std::vector<Rational> t_down;
    std::vector<Rational> t_up;
};

DimerCounts transition_coefficients(int L);

// Xi(z) = sum nu_n z^n and Lambda(z) = sum c_{n->n-1} z^n, with coefficients
// taken from an actual enumeration of the ring space.
struct GeneratingPolys {
    int L = 0;
    std::vector<std::int64_t> xi;
    std::vector<std::int64_t> lambda;
};

GeneratingPolys generating_polys(int L);

// Exhaustive classification of ordered length-2 walks out of column n:
// back to the start (loop), to a distinct state of the same column
// (reflection), or two columns away (transmission).
struct TransitionCensus {
    int L = 0;
    int n = 0;
    std::int64_t loops = 0;
    std::int64_t reflections = 0;
    std::int64_t transmissions = 0;
};

TransitionCensus transition_census(const ConfigSpace& space, int n);

}  // namespace blockade
