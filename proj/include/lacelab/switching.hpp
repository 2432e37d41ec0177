#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lacelab/graph.hpp"

namespace lacelab {

// Brute-force verification of the source-switching identity and its
// multi-path generalization on labeled multigraphs carrying genuine integer
// currents.  Everything in this module is exact integer counting.

struct LabeledEdge {
    int bond;
    int u, v;
};

using EdgeSet = std::uint32_t;   // bitset over labeled edges

struct MultiCurrent {
    const GraphSpec* graph = nullptr;
    std::vector<int> N;                  // integer current per bond
    std::vector<LabeledEdge> edges;      // N_b parallel labeled edges per bond

    static MultiCurrent make(const GraphSpec& g, std::vector<int> N,
                             int max_edges = 24);
    int n_edges() const { return static_cast<int>(edges.size()); }
};

// Odd-degree vertex set of an edge selection.
SiteMask selection_sources(const MultiCurrent& mc, EdgeSet S);

// Edges whose endpoints both lie inside `sites`.
EdgeSet edges_within(const MultiCurrent& mc, SiteMask sites);

// Source-switching counts.  Selections are constrained to edges of bonds
// inside A^c (the m-current support).  With the optional base source set V:
//   lhs = #{S : dS = V xor {v,x}, constraint}
//   rhs = 1[v <-> x inside A^c on the positive bonds of N] * #{S : dS = V, constraint}
// For V = 0 the identity lhs == rhs is unconditional: a selection sourced
// exactly at {v,x} carries a v-x path, so the left side vanishes whenever
// the indicator does.  For a general V the symmetric-difference bijection
// needs the connection to exist; the counts are asserted equal on the
// indicator event only (a disconnected pair with V = {v,x} already gives
// lhs = 1, rhs = 0).
std::pair<long long, long long> count_switching_sides(const MultiCurrent& mc, SiteMask A,
                                                      int v, int x, SiteMask V = 0);

// The symmetric-difference map along a path omega; an involution that
// exchanges the two source constraints above.
EdgeSet switching_bijection(EdgeSet S, EdgeSet omega);

// Multi-path switching counts.  Partitions (S_0,...,S_k) of the labeled
// edges carry either the plain sources (dS_0 = V, dS_i = 0) or the switched
// sources (dS_0 = V xor {z_1,z'_1} xor ... , dS_i = {z_i,z'_i}), together
// with a tuple of mutually edge-disjoint paths omega_i: z_i -> z'_i with
// omega_i inside S_0 u S_i.
//
// Two tuple readings are counted:
//
//  * ordered: omega_i is chosen greedily as the earliest admissible path in
//    a fixed order, where admissible means (a) edge-disjoint from the
//    earlier omegas, (b) not containing any admissible path that was passed
//    over at an earlier stage, and (c) leaving enough room for the remaining
//    pairs on the free graph.  The symmetric-difference bijection exchanges
//    the two source patterns class by class, so these counts are equal.
//
//  * literal: a bare "exists a mutually edge-disjoint tuple" quantifier.
//    These counts can differ between the two source patterns (a doubled
//    single bond with k = 2 identical pairs already separates them); they
//    are reported for diagnosis, not asserted.
struct GhsBkCounts {
    long long ordered_plain = 0;
    long long ordered_switched = 0;
    long long literal_plain = 0;
    long long literal_switched = 0;
};

GhsBkCounts verify_ghs_bk(const MultiCurrent& mc, SiteMask V,
                          const std::vector<std::pair<int, int>>& pairs,
                          const EnumerationBudget& budget = EnumerationBudget::from_env());

} // namespace lacelab
