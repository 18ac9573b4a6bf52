#include "blockade/dimer.hpp"

#include <numeric>
#include <stdexcept>

namespace blockade {

namespace {

std::int64_t narrow(__int128 v, const char* what) {
    if (v > INT64_MAX || v < INT64_MIN)
        throw std::overflow_error(std::string(what) + " overflows 64-bit range");
    return static_cast<std::int64_t>(v);
}

// C(a, b) exactly, with overflow checks.
std::int64_t binomial(int a, int b) {
    if (b < 0 || b > a) return 0;
    b = std::min(b, a - b);
    __int128 acc = 1;
    for (int i = 1; i <= b; ++i) {
        acc *= (a - b + i);
        acc /= i;  // exact: prefix products of C are integers
        if (acc > INT64_MAX) throw std::overflow_error("binomial overflows 64-bit range");
    }
    return static_cast<std::int64_t>(acc);
}

}  // namespace

std::int64_t lucas_number(int n) {
    if (n < 0) throw std::invalid_argument("Lucas index must be >= 0");
    std::int64_t a = 2, b = 1;
    for (int i = 0; i < n; ++i) {
        std::int64_t next = narrow(static_cast<__int128>(a) + b, "Lucas number");
        a = b;
        b = next;
    }
    return a;
}

std::int64_t nu_closed_form(int L, int n) {
    if (L < 2) throw std::invalid_argument("nu_closed_form requires L >= 2");
    if (n < 0 || n > L / 2) throw std::invalid_argument("excitation number outside 0..floor(L/2)");
    if (n == 0) return 1;
    const __int128 prod = static_cast<__int128>(binomial(L - n, n)) * L;
    if (prod % (L - n) != 0) throw std::logic_error("nu closed form is not integral");
    return narrow(prod / (L - n), "nu_n");
}

std::int64_t hop_count_product_form(int L, int n) {
    if (L < 2) throw std::invalid_argument("hop_count_product_form requires L >= 2");
    if (n < 0 || n > L / 2) throw std::invalid_argument("excitation number outside 0..floor(L/2)");
    if (n == 0) return 0;
    // c_{n->n-1} = L/(n-1)! * prod_{j=n+1}^{2n-1} (L-j)
    __int128 acc = L;
    for (int j = n + 1; j <= 2 * n - 1; ++j) acc *= (L - j);
    // dividing in increasing order stays exact: the falling factorial is
    // divisible by every prefix factorial
    for (int f = 2; f <= n - 1; ++f) acc /= f;
    return narrow(acc, "hop count");
}

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) {
        if (num != 0) throw std::invalid_argument("rational with zero denominator");
        den = 1;  // convention: 0/0 rates mean "no such transition"
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

DimerCounts transition_coefficients(int L) {
    if (L < 3) throw std::invalid_argument("transition_coefficients requires L >= 3");
    const int nmax = L / 2;
    DimerCounts out;
    out.L = L;
    for (int n = 0; n <= nmax; ++n) {
        out.nu.push_back(nu_closed_form(L, n));
        out.c_down.push_back(narrow(static_cast<__int128>(n) * out.nu.back(), "c_down"));
        out.t_down.emplace_back(n, 1);
        out.t_up.emplace_back(static_cast<std::int64_t>(L - 2 * n - 1) * (L - 2 * n),
                              L - n - 1);
    }
    return out;
}

GeneratingPolys generating_polys(int L) {
    if (L < 2) throw std::invalid_argument("generating_polys requires L >= 2");
    const auto space = enumerate_configurations(Lattice::ring(L));
    GeneratingPolys out;
    out.L = L;
    out.xi = space.column_sizes();
    for (std::size_t n = 0; n < out.xi.size(); ++n)
        out.lambda.push_back(narrow(static_cast<__int128>(n) * out.xi[n], "Lambda coefficient"));
    return out;
}

TransitionCensus transition_census(const ConfigSpace& space, int n) {
    if (n < 0 || n > space.max_excitation() ||
        space.column_begin(n) == space.column_end(n))
        throw std::invalid_argument("transition census over an empty column");
    TransitionCensus c;
    c.L = space.lattice().sites();
    c.n = n;
    for (std::size_t s = space.column_begin(n); s < space.column_end(n); ++s) {
        for (std::uint32_t u : space.neighbors(s)) {
            for (std::uint32_t w : space.neighbors(u)) {
                if (w == s)
                    ++c.loops;
                else if (space.excitations(w) == n)
                    ++c.reflections;
                else
                    ++c.transmissions;
            }
        }
    }
    return c;
}

}  // namespace blockade
