#include "lacelab/connectivity.hpp"

#include <algorithm>
#include <bit>

namespace lacelab {

SiteMask cluster_of(const GraphSpec& g, BondMask pos, int x, SiteMask within, int deleted_bond) {
    if (!(within & site_bit(x))) return 0;
    SiteMask cluster = site_bit(x);
    // Small graphs: sweep the bond list to a fixed point.
    bool grew = true;
    while (grew) {
        grew = false;
        for (int b = 0; b < g.n_bonds(); ++b) {
            if (b == deleted_bond || !(pos & bond_bit(b))) continue;
            const SiteMask em = g.endpoint_mask[b];
            if ((em & within) != em) continue;          // a path endpoint left `within`
            const SiteMask hit = em & cluster;
            if (hit != 0 && hit != em) {
                cluster |= em;
                grew = true;
            }
        }
    }
    return cluster;
}

bool connected(const GraphSpec& g, BondMask pos, int x, int y, SiteMask within) {
    if (!(within & site_bit(x)) || !(within & site_bit(y))) return false;
    if (x == y) return true;
    return (cluster_of(g, pos, x, within) & site_bit(y)) != 0;
}

bool connected_through(const GraphSpec& g, BondMask pos, int x, int y, SiteMask A) {
    const SiteMask all = all_sites_mask(g.n_sites);
    if (!connected(g, pos, x, y, all)) return false;
    return !connected(g, pos, x, y, all & ~A);
}

SiteMask cluster_off_bond(const GraphSpec& g, BondMask pos, int x, int b) {
    return cluster_of(g, pos, x, all_sites_mask(g.n_sites), b);
}

std::vector<DirectedBond> pivotal_bonds_from(const GraphSpec& g, BondMask pos, int x, int y) {
    const SiteMask all = all_sites_mask(g.n_sites);
    std::vector<DirectedBond> out;
    if (!connected(g, pos, x, y, all)) return out;

    std::vector<SiteMask> clusters;
    for (int b = 0; b < g.n_bonds(); ++b) {
        if (!(pos & bond_bit(b))) continue;
        const SiteMask cb = cluster_off_bond(g, pos, x, b);
        for (int o = 0; o < 2; ++o) {
            const DirectedBond db = g.directed(b, o);
            if (!(cb & site_bit(db.tail))) continue;            // x <-> tail off b
            if (connected(g, pos, db.head, y, all & ~cb)) {     // head <-> y in C^b(x)^c
                out.push_back(db);
                clusters.push_back(cb);
            }
        }
    }
    // Pivotal bonds are linearly ordered from x; the off-bond cluster of x
    // grows strictly along the chain, so sorting by cluster size orders them.
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b2) {
        return std::popcount(clusters[a]) < std::popcount(clusters[b2]);
    });
    std::vector<DirectedBond> ordered;
    ordered.reserve(out.size());
    for (std::size_t i : idx) ordered.push_back(out[i]);
    return ordered;
}

bool doubly_connected(const GraphSpec& g, BondMask pos, int x, int y) {
    if (x == y) return true;
    const SiteMask all = all_sites_mask(g.n_sites);
    if (!connected(g, pos, x, y, all)) return false;
    return pivotal_bonds_from(g, pos, x, y).empty();
}

bool event_E(const GraphSpec& g, BondMask pos, int v, int x, SiteMask A) {
    if (!connected_through(g, pos, v, x, A)) return false;
    for (const DirectedBond& db : pivotal_bonds_from(g, pos, v, x)) {
        if (connected_through(g, pos, v, db.tail, A)) return false;
    }
    return true;
}

bool event_Eprime(const GraphSpec& g, BondMask pos, int z, int x, SiteMask A) {
    return connected_through(g, pos, z, x, A) && doubly_connected(g, pos, z, x);
}

bool event_Edoubleprime(const GraphSpec& g, BondMask pos, int z, int x, int v, SiteMask A) {
    return event_Eprime(g, pos, z, x, A) &&
           connected(g, pos, z, v, all_sites_mask(g.n_sites));
}

} // namespace lacelab
