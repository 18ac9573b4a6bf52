#include "blockade/lattice.hpp"

#include <algorithm>
#include <bit>
#include <complex>
#include <ostream>
#include <set>

#include "json.hpp"

namespace blockade {

namespace {

std::vector<ConfigSpace::Mask> ring_masks(int L) {
    std::vector<ConfigSpace::Mask> out;
    auto rec = [&](auto&& self, int pos, bool prev, ConfigSpace::Mask m, bool first) -> void {
        if (pos == L) {
            out.push_back(m);
            return;
        }
        self(self, pos + 1, false, m, first);
        if (!prev && !(pos == L - 1 && first))
            self(self, pos + 1, true, m | (ConfigSpace::Mask{1} << pos), first);
    };
    rec(rec, 1, false, 0, false);
    rec(rec, 1, true, 1, true);
    return out;
}

std::vector<ConfigSpace::Mask> torus_masks(int lx, int ly) {
    const auto rows = ring_masks(lx);
    std::vector<ConfigSpace::Mask> out;
    auto rec = [&](auto&& self, int row, ConfigSpace::Mask acc, ConfigSpace::Mask prev,
                   ConfigSpace::Mask first) -> void {
        if (row == ly) {
            if ((prev & first) == 0) out.push_back(acc);
            return;
        }
        for (ConfigSpace::Mask p : rows) {
            if (row > 0 && (p & prev) != 0) continue;
            self(self, row + 1, acc | (p << (lx * row)), p, row == 0 ? p : first);
        }
    };
    rec(rec, 0, 0, 0, 0);
    return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    __int128 s = static_cast<__int128>(a) + b;
    if (s > INT64_MAX) throw std::overflow_error("state count overflows 64-bit range");
    return static_cast<std::int64_t>(s);
}

std::int64_t checked_mul_add(std::int64_t acc, std::int64_t a, std::int64_t b) {
    __int128 s = static_cast<__int128>(acc) + static_cast<__int128>(a) * b;
    if (s > INT64_MAX) throw std::overflow_error("state count overflows 64-bit range");
    return static_cast<std::int64_t>(s);
}

}  // namespace

Lattice Lattice::ring(int length) {
    // rings larger than the 64-bit mask limit are fine as long as nothing
    // enumerates their configurations; the kinetic solvers only need L
    if (length < 2) throw std::invalid_argument("ring length must be >= 2");
    if (length > 1'000'000) throw std::invalid_argument("ring length must be <= 1000000");
    Lattice l;
    l.kind = LatticeKind::ring;
    l.lx = length;
    l.ly = 1;
    return l;
}

Lattice Lattice::torus(int lx, int ly) {
    if (lx < 2 || ly < 2) throw std::invalid_argument("torus extents must be >= 2");
    if (lx * ly > 64) throw std::invalid_argument("torus must fit a 64-bit mask (Lx*Ly <= 64)");
    Lattice l;
    l.kind = LatticeKind::torus;
    l.lx = lx;
    l.ly = ly;
    return l;
}

std::string Lattice::label() const {
    if (kind == LatticeKind::ring) return "ring-" + std::to_string(lx);
    return "torus-" + std::to_string(lx) + "x" + std::to_string(ly);
}

std::vector<int> Lattice::neighbor_sites(int site) const {
    if (site < 0 || site >= sites()) throw std::out_of_range("site index out of range");
    std::set<int> uniq;
    if (kind == LatticeKind::ring) {
        uniq.insert((site + 1) % lx);
        uniq.insert((site + lx - 1) % lx);
    } else {
        int x = site % lx, y = site / lx;
        uniq.insert((x + 1) % lx + y * lx);
        uniq.insert((x + lx - 1) % lx + y * lx);
        uniq.insert(x + ((y + 1) % ly) * lx);
        uniq.insert(x + ((y + ly - 1) % ly) * lx);
    }
    uniq.erase(site);
    return {uniq.begin(), uniq.end()};
}

std::vector<std::uint64_t> Lattice::neighbor_masks() const {
    std::vector<std::uint64_t> masks(sites(), 0);
    for (int s = 0; s < sites(); ++s)
        for (int t : neighbor_sites(s)) masks[s] |= std::uint64_t{1} << t;
    return masks;
}

CapacityError::CapacityError(std::int64_t predicted, std::int64_t limit)
    : std::runtime_error("predicted state count " + std::to_string(predicted) +
                         " exceeds the capacity limit " + std::to_string(limit)),
      predicted_(predicted) {}

std::int64_t predict_state_count(const Lattice& lattice) {
    if (lattice.kind == LatticeKind::ring) {
        // Lucas numbers: 2, 1, 3, 4, 7, ...
        std::int64_t a = 2, b = 1;  // Lucas(0), Lucas(1)
        for (int i = 0; i < lattice.lx; ++i) {
            std::int64_t next = checked_add(a, b);
            a = b;
            b = next;
        }
        return a;
    }
    const auto rows = ring_masks(lattice.lx);
    const int P = static_cast<int>(rows.size());
    std::vector<std::vector<std::int64_t>> T(P, std::vector<std::int64_t>(P, 0)), M;
    for (int i = 0; i < P; ++i)
        for (int j = 0; j < P; ++j) T[i][j] = (rows[i] & rows[j]) == 0 ? 1 : 0;
    M = T;
    for (int step = 1; step < lattice.ly; ++step) {
        std::vector<std::vector<std::int64_t>> N(P, std::vector<std::int64_t>(P, 0));
        for (int i = 0; i < P; ++i)
            for (int k = 0; k < P; ++k) {
                if (M[i][k] == 0) continue;
                for (int j = 0; j < P; ++j)
                    if (T[k][j]) N[i][j] = checked_mul_add(N[i][j], M[i][k], T[k][j]);
            }
        M = std::move(N);
    }
    std::int64_t trace = 0;
    for (int i = 0; i < P; ++i) trace = checked_add(trace, M[i][i]);
    return trace;
}

ConfigSpace::ConfigSpace(Lattice lattice, std::vector<Mask> states_sorted)
    : lattice_(lattice), states_(std::move(states_sorted)) {
    int nmax = 0;
    for (Mask m : states_) nmax = std::max(nmax, std::popcount(m));
    column_offsets_.assign(nmax + 2, 0);
    for (Mask m : states_) ++column_offsets_[std::popcount(m) + 1];
    for (std::size_t n = 1; n < column_offsets_.size(); ++n)
        column_offsets_[n] += column_offsets_[n - 1];

    const auto nbr = lattice_.neighbor_masks();
    const int S = lattice_.sites();
    adj_offsets_.assign(states_.size() + 1, 0);
    auto for_each_neighbor = [&](std::size_t i, auto&& fn) {
        const Mask m = states_[i];
        for (int k = 0; k < S; ++k) {
            const Mask bit = Mask{1} << k;
            if (m & bit) {
                fn(m ^ bit);
            } else if ((m & nbr[k]) == 0) {
                fn(m | bit);
            }
        }
    };
    for (std::size_t i = 0; i < states_.size(); ++i) {
        std::size_t deg = 0;
        for_each_neighbor(i, [&](Mask) { ++deg; });
        adj_offsets_[i + 1] = adj_offsets_[i] + deg;
    }
    adj_.resize(adj_offsets_.back());
    for (std::size_t i = 0; i < states_.size(); ++i) {
        std::size_t pos = adj_offsets_[i];
        for_each_neighbor(i, [&](Mask target) {
            adj_[pos++] = static_cast<std::uint32_t>(index_of(target));
        });
    }
}

void ConfigSpace::check_index(std::size_t index) const {
    if (index >= states_.size()) throw std::out_of_range("state index out of range");
}

ConfigSpace::Mask ConfigSpace::state(std::size_t index) const {
    check_index(index);
    return states_[index];
}

int ConfigSpace::excitations(std::size_t index) const {
    check_index(index);
    return std::popcount(states_[index]);
}

std::size_t ConfigSpace::index_of(Mask mask) const {
    const int n = std::popcount(mask);
    if (n > max_excitation()) throw std::out_of_range("configuration not in space");
    const auto first = states_.begin() + column_offsets_[n];
    const auto last = states_.begin() + column_offsets_[n + 1];
    auto it = std::lower_bound(first, last, mask);
    if (it == last || *it != mask) throw std::out_of_range("configuration not in space");
    return static_cast<std::size_t>(it - states_.begin());
}

std::span<const std::uint32_t> ConfigSpace::neighbors(std::size_t index) const {
    check_index(index);
    return {adj_.data() + adj_offsets_[index],
            adj_offsets_[index + 1] - adj_offsets_[index]};
}

std::size_t ConfigSpace::degree(std::size_t index) const {
    check_index(index);
    return adj_offsets_[index + 1] - adj_offsets_[index];
}

std::size_t ConfigSpace::column_begin(int n) const {
    if (n < 0 || n > max_excitation()) throw std::out_of_range("column index out of range");
    return column_offsets_[n];
}

std::size_t ConfigSpace::column_end(int n) const {
    if (n < 0 || n > max_excitation()) throw std::out_of_range("column index out of range");
    return column_offsets_[n + 1];
}

std::vector<std::int64_t> ConfigSpace::column_sizes() const {
    std::vector<std::int64_t> sizes(max_excitation() + 1);
    for (int n = 0; n <= max_excitation(); ++n)
        sizes[n] = static_cast<std::int64_t>(column_offsets_[n + 1] - column_offsets_[n]);
    return sizes;
}

std::int64_t ConfigSpace::edge_count() const {
    return static_cast<std::int64_t>(adj_.size() / 2);
}

ConfigSpace enumerate_configurations(const Lattice& lattice, std::int64_t capacity) {
    if (lattice.sites() > 63)
        throw std::invalid_argument("enumeration requires at most 63 sites (64-bit masks)");
    const std::int64_t predicted = predict_state_count(lattice);
    if (predicted > capacity) throw CapacityError(predicted, capacity);
    auto masks = lattice.kind == LatticeKind::ring ? ring_masks(lattice.lx)
                                                   : torus_masks(lattice.lx, lattice.ly);
    std::sort(masks.begin(), masks.end(), [](ConfigSpace::Mask a, ConfigSpace::Mask b) {
        const int na = std::popcount(a), nb = std::popcount(b);
        return na != nb ? na < nb : a < b;
    });
    if (static_cast<std::int64_t>(masks.size()) != predicted)
        throw std::logic_error("enumeration disagrees with the predicted state count");
    return ConfigSpace(lattice, std::move(masks));
}

std::vector<double> column_projection(const ConfigSpace& space,
                                      std::span<const std::complex<double>> amplitudes) {
    if (amplitudes.size() != space.size())
        throw std::invalid_argument("amplitude dimension does not match state count");
    std::vector<double> p(space.max_excitation() + 1, 0.0);
    for (int n = 0; n <= space.max_excitation(); ++n)
        for (std::size_t i = space.column_begin(n); i < space.column_end(n); ++i)
            p[n] += std::norm(amplitudes[i]);
    return p;
}

void write_edge_list(const ConfigSpace& space, std::ostream& out) {
    for (std::size_t i = 0; i < space.size(); ++i)
        for (std::uint32_t j : space.neighbors(i))
            if (j > i) out << i << ' ' << j << '\n';
}

std::string space_summary_json(const ConfigSpace& space) {
    nlohmann::json j;
    const Lattice& lat = space.lattice();
    j["lattice"]["kind"] = lat.kind == LatticeKind::ring ? "ring" : "torus";
    j["lattice"]["label"] = lat.label();
    j["lattice"]["lx"] = lat.lx;
    j["lattice"]["ly"] = lat.ly;
    j["lattice"]["sites"] = lat.sites();
    j["states"] = space.size();
    j["max_excitation"] = space.max_excitation();
    j["column_sizes"] = space.column_sizes();
    j["edges"] = space.edge_count();
    return j.dump(2) + "\n";
}

}  // namespace blockade
