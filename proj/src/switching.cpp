#include "lacelab/switching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace lacelab {

MultiCurrent MultiCurrent::make(const GraphSpec& g, std::vector<int> N, int max_edges) {
    if (static_cast<int>(N.size()) != g.n_bonds()) {
        throw ConfigError("MultiCurrent: current vector size mismatch");
    }
    MultiCurrent mc;
    mc.graph = &g;
    mc.N = std::move(N);
    int total = 0;
    for (int b = 0; b < g.n_bonds(); ++b) {
        if (mc.N[b] < 0) throw ConfigError("MultiCurrent: currents must be nonnegative");
        total += mc.N[b];
        for (int k = 0; k < mc.N[b]; ++k) mc.edges.push_back({b, g.bonds[b].u, g.bonds[b].v});
    }
    if (total > max_edges) {
        throw BudgetError("MultiCurrent: " + std::to_string(total) + " labeled edges exceed cap " +
                          std::to_string(max_edges));
    }
    return mc;
}

SiteMask selection_sources(const MultiCurrent& mc, EdgeSet S) {
    SiteMask parity = 0;
    for (int e = 0; e < mc.n_edges(); ++e) {
        if (S & (EdgeSet{1} << e)) parity ^= site_bit(mc.edges[e].u) ^ site_bit(mc.edges[e].v);
    }
    return parity;
}

EdgeSet edges_within(const MultiCurrent& mc, SiteMask sites) {
    EdgeSet out = 0;
    for (int e = 0; e < mc.n_edges(); ++e) {
        const SiteMask em = site_bit(mc.edges[e].u) | site_bit(mc.edges[e].v);
        if ((em & sites) == em) out |= EdgeSet{1} << e;
    }
    return out;
}

namespace {

bool connected_on_edges(const MultiCurrent& mc, EdgeSet allowed, int x, int y) {
    if (x == y) return true;
    SiteMask cluster = site_bit(x);
    bool grew = true;
    while (grew) {
        grew = false;
        for (int e = 0; e < mc.n_edges(); ++e) {
            if (!(allowed & (EdgeSet{1} << e))) continue;
            const SiteMask em = site_bit(mc.edges[e].u) | site_bit(mc.edges[e].v);
            const SiteMask hit = em & cluster;
            if (hit != 0 && hit != em) {
                cluster |= em;
                grew = true;
            }
        }
    }
    return (cluster & site_bit(y)) != 0;
}

} // namespace

std::pair<long long, long long> count_switching_sides(const MultiCurrent& mc, SiteMask A,
                                                      int v, int x, SiteMask V) {
    const GraphSpec& g = *mc.graph;
    const SiteMask complement = all_sites_mask(g.n_sites) & ~A;
    const EdgeSet allowed = edges_within(mc, complement);
    const SiteMask shifted = V ^ ((v == x) ? 0 : (site_bit(v) | site_bit(x)));

    long long lhs = 0, rhs_count = 0;
    // Enumerate subsets of the allowed edges only; edges outside are frozen out.
    std::vector<int> allowed_edges;
    for (int e = 0; e < mc.n_edges(); ++e) {
        if (allowed & (EdgeSet{1} << e)) allowed_edges.push_back(e);
    }
    const int m = static_cast<int>(allowed_edges.size());
    for (std::uint32_t bits = 0; bits < (std::uint32_t{1} << m); ++bits) {
        SiteMask parity = 0;
        for (int k = 0; k < m; ++k) {
            if (bits & (std::uint32_t{1} << k)) {
                const LabeledEdge& e = mc.edges[allowed_edges[k]];
                parity ^= site_bit(e.u) ^ site_bit(e.v);
            }
        }
        if (parity == shifted) ++lhs;
        if (parity == V) ++rhs_count;
    }

    // Indicator: v connected to x inside A^c on the positive bonds of N.
    const bool linked = (v == x && (complement & site_bit(v))) ||
                        (v != x && connected_on_edges(mc, allowed, v, x));
    const long long rhs = (linked ? 1 : 0) * rhs_count;
    return {lhs, rhs};
}

EdgeSet switching_bijection(EdgeSet S, EdgeSet omega) { return S ^ omega; }

namespace {

// Backtracking search for a simultaneous tuple of mutually edge-disjoint,
// self-avoiding site paths omega_i: z_i -> z'_i, each inside its pool.
// Paths of different indices may only collide on shared pool edges, so
// `used` tracks edges consumed by earlier paths.
struct PathSearch {
    const MultiCurrent* mc;
    const std::vector<EdgeSet>* pools;   // pool per path index
    const std::vector<std::pair<int, int>>* pairs;

    bool tuple_exists(EdgeSet used = 0) { return advance(0, used); }

    bool advance(std::size_t i, EdgeSet used) {
        if (i == pairs->size()) return true;
        const auto [z, zp] = (*pairs)[i];
        return walk(i, z, zp, site_bit(z), 0, used);
    }

    bool walk(std::size_t i, int at, int goal, SiteMask visited, EdgeSet path, EdgeSet used) {
        if (at == goal) return advance(i + 1, used | path);
        const EdgeSet pool = (*pools)[i] & ~used & ~path;
        for (int e = 0; e < mc->n_edges(); ++e) {
            if (!(pool & (EdgeSet{1} << e))) continue;
            const LabeledEdge& edge = mc->edges[e];
            int next = -1;
            if (edge.u == at) {
                next = edge.v;
            } else if (edge.v == at) {
                next = edge.u;
            } else {
                continue;
            }
            if (visited & site_bit(next)) continue;   // self-avoiding
            if (walk(i, next, goal, visited | site_bit(next), path | (EdgeSet{1} << e), used)) {
                return true;
            }
        }
        return false;
    }
};

// All self-avoiding paths z -> z' as edge sets, in a fixed order
// (size, then mask value); the order seeds the greedy chain below.
std::vector<EdgeSet> all_paths(const MultiCurrent& mc, int z, int zp) {
    std::vector<EdgeSet> out;
    auto walk = [&](auto&& self, int at, SiteMask visited, EdgeSet path) -> void {
        if (at == zp) {
            out.push_back(path);
            return;
        }
        for (int e = 0; e < mc.n_edges(); ++e) {
            if (path & (EdgeSet{1} << e)) continue;
            const LabeledEdge& edge = mc.edges[e];
            int next = -1;
            if (edge.u == at) {
                next = edge.v;
            } else if (edge.v == at) {
                next = edge.u;
            } else {
                continue;
            }
            if (visited & site_bit(next)) continue;
            self(self, next, visited | site_bit(next), path | (EdgeSet{1} << e));
        }
    };
    walk(walk, z, site_bit(z), 0);
    std::sort(out.begin(), out.end(), [](EdgeSet a, EdgeSet b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        return pa != pb ? pa < pb : a < b;
    });
    return out;
}

// The greedy earliest-path chain of the ordered decomposition.  Stage i
// builds the admissible family: paths disjoint from the chosen omegas,
// edge-disjoint from every family member passed over at an earlier stage,
// and (before the last stage) leaving mutually edge-disjoint room for the
// remaining pairs on the free graph.  The stage then commits to the
// earliest family member inside S_0 u S_i; the chain fails when none fits.
//
// The passed-over filter must be "shares no edge", not merely "does not
// contain": the symmetric-difference map that exchanges the two source
// patterns moves whole later-stage paths into S_0, and a path that merely
// intersects a passed-over one can then complete it inside the new pool and
// dethrone the committed earliest element.  A doubled square bond with two
// overlapping pair routes separates the two filters; only the edge-disjoint
// one balances the counts.
struct GreedyChain {
    const MultiCurrent* mc;
    const std::vector<std::vector<EdgeSet>>* paths;   // per pair, fixed order
    const std::vector<std::pair<int, int>>* pairs;

    bool succeeds(const std::vector<EdgeSet>& sets) const {
        const int k = static_cast<int>(pairs->size());
        EdgeSet used = 0;
        std::vector<std::vector<EdgeSet>> families(k);
        std::vector<std::size_t> chosen(k);
        for (int i = 0; i < k; ++i) {
            auto& family = families[i];
            for (EdgeSet zeta : (*paths)[i]) {
                if (zeta & used) continue;
                bool shadowed = false;
                for (int ip = 0; ip < i && !shadowed; ++ip) {
                    for (std::size_t s = 0; s < chosen[ip] && !shadowed; ++s) {
                        shadowed = (zeta & families[ip][s]) != 0;
                    }
                }
                if (shadowed) continue;
                if (i + 1 < k) {
                    std::vector<std::pair<int, int>> rest(pairs->begin() + i + 1, pairs->end());
                    std::vector<EdgeSet> free_pool(rest.size(),
                                                   static_cast<EdgeSet>(~EdgeSet{0}));
                    PathSearch forward{mc, &free_pool, &rest};
                    if (!forward.tuple_exists(used | zeta)) continue;
                }
                family.push_back(zeta);
            }
            const EdgeSet pool = sets[0] | sets[i + 1];
            bool found = false;
            for (std::size_t s = 0; s < family.size(); ++s) {
                if ((family[s] & pool) == family[s]) {
                    chosen[i] = s;
                    used |= family[s];
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
        return true;
    }
};

} // namespace

GhsBkCounts verify_ghs_bk(const MultiCurrent& mc, SiteMask V,
                          const std::vector<std::pair<int, int>>& pairs,
                          const EnumerationBudget& budget) {
    const int k = static_cast<int>(pairs.size());
    if (k < 1) throw ConfigError("verify_ghs_bk: need at least one path pair");
    for (const auto& [z, zp] : pairs) {
        if (z == zp) throw ConfigError("verify_ghs_bk: path endpoints must differ");
    }
    const int E = mc.n_edges();
    budget.require_states(std::pow(static_cast<double>(k + 1), E), "verify_ghs_bk");

    SiteMask switched = V;
    for (const auto& [z, zp] : pairs) switched ^= site_bit(z) ^ site_bit(zp);

    std::vector<std::vector<EdgeSet>> paths(k);
    for (int i = 0; i < k; ++i) paths[i] = all_paths(mc, pairs[i].first, pairs[i].second);
    const GreedyChain chain{&mc, &paths, &pairs};

    GhsBkCounts counts;

    // Assignment of each labeled edge to one of S_0..S_k.
    std::vector<SiteMask> sources(k + 1, 0);
    std::vector<EdgeSet> sets(k + 1, 0);

    auto dfs = [&](auto&& self, int e) -> void {
        if (e == E) {
            bool plain_ok = sources[0] == V;
            bool switched_ok = sources[0] == switched;
            for (int i = 1; i <= k && (plain_ok || switched_ok); ++i) {
                const SiteMask want = site_bit(pairs[i - 1].first) ^ site_bit(pairs[i - 1].second);
                plain_ok = plain_ok && sources[i] == 0;
                switched_ok = switched_ok && sources[i] == want;
            }
            if (!plain_ok && !switched_ok) return;
            std::vector<EdgeSet> pools(k);
            for (int i = 0; i < k; ++i) pools[i] = sets[0] | sets[i + 1];
            PathSearch search{&mc, &pools, &pairs};
            const bool literal = search.tuple_exists();
            const bool ordered = chain.succeeds(sets);
            if (plain_ok) {
                counts.literal_plain += literal;
                counts.ordered_plain += ordered;
            }
            if (switched_ok) {
                counts.literal_switched += literal;
                counts.ordered_switched += ordered;
            }
            return;
        }
        const SiteMask em = site_bit(mc.edges[e].u) ^ site_bit(mc.edges[e].v);
        const EdgeSet bit = EdgeSet{1} << e;
        for (int i = 0; i <= k; ++i) {
            sources[i] ^= em;
            sets[i] |= bit;
            self(self, e + 1);
            sets[i] &= ~bit;
            sources[i] ^= em;
        }
    };
    dfs(dfs, 0);
    return counts;
}

} // namespace lacelab
