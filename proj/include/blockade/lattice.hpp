#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockade {

enum class LatticeKind { ring, torus };

// Periodic lattice geometry: a 1D ring of L sites or a 2D Lx x Ly torus.
struct Lattice {
    LatticeKind kind = LatticeKind::ring;
    int lx = 0;
    int ly = 1;

    static Lattice ring(int length);
    static Lattice torus(int lx, int ly);

    int sites() const { return lx * ly; }
    std::string label() const;

    // Deduplicated neighbor sites (extent-2 wrap edges collapse to one pair).
    std::vector<int> neighbor_sites(int site) const;
    // Per-site bitmask over all neighbor sites.
    std::vector<std::uint64_t> neighbor_masks() const;
};

class CapacityError : public std::runtime_error {
public:
    CapacityError(std::int64_t predicted, std::int64_t limit);
    std::int64_t predicted_states() const { return predicted_; }

private:
    std::int64_t predicted_;
};

// The blockade-allowed configuration set, partitioned into excitation-number
// columns, with single-spin-flip adjacency (the transition graph).
class ConfigSpace {
public:
    using Mask = std::uint64_t;

    const Lattice& lattice() const { return lattice_; }
    std::size_t size() const { return states_.size(); }
    int max_excitation() const { return static_cast<int>(column_offsets_.size()) - 2; }

    Mask state(std::size_t index) const;
    int excitations(std::size_t index) const;
    std::size_t index_of(Mask mask) const;  // throws std::out_of_range if absent

    std::span<const std::uint32_t> neighbors(std::size_t index) const;
    std::size_t degree(std::size_t index) const;

    std::size_t column_begin(int n) const;
    std::size_t column_end(int n) const;
    std::vector<std::int64_t> column_sizes() const;
    std::int64_t edge_count() const;  // undirected

    friend ConfigSpace enumerate_configurations(const Lattice&, std::int64_t);

private:
    ConfigSpace(Lattice lattice, std::vector<Mask> states_sorted);

    void check_index(std::size_t index) const;

    Lattice lattice_;
    std::vector<Mask> states_;                 // sorted by (n, mask)
    std::vector<std::size_t> column_offsets_;  // size max_excitation()+2
    std::vector<std::uint64_t> adj_offsets_;
    std::vector<std::uint32_t> adj_;
};

// Exact count of blockade-allowed configurations (Lucas number for rings,
// transfer-matrix trace for tori) without enumerating.
std::int64_t predict_state_count(const Lattice& lattice);

ConfigSpace enumerate_configurations(const Lattice& lattice,
                                     std::int64_t capacity = 6'000'000);

// p_n = sum of |amplitude|^2 over column n; sums to the squared input norm.
std::vector<double> column_projection(const ConfigSpace& space,
                                      std::span<const std::complex<double>> amplitudes);

// Plain-text edge list: one "i j" pair per undirected edge, i < j.
void write_edge_list(const ConfigSpace& space, std::ostream& out);
// JSON summary: lattice, state count, column sizes, edge count.
std::string space_summary_json(const ConfigSpace& space);

}  // namespace blockade
