#include "lacelab/spin.hpp"

#include <array>
#include <bit>
#include <cmath>

#include "lacelab/kahan.hpp"

namespace lacelab {

namespace {

constexpr int kSiteBudget = 24;

struct SweepTables {
    std::vector<int> sites;                     // sites in the mask, ascending
    std::vector<std::array<int, 2>> bonds;      // endpoint positions within `sites`
    std::vector<double> J;
};

SweepTables sweep_tables(const GraphSpec& g, SiteMask mask) {
    SweepTables t;
    std::vector<int> pos(g.n_sites, -1);
    for (int s = 0; s < g.n_sites; ++s) {
        if (mask & site_bit(s)) {
            pos[s] = static_cast<int>(t.sites.size());
            t.sites.push_back(s);
        }
    }
    for (int b = 0; b < g.n_bonds(); ++b) {
        if ((g.endpoint_mask[b] & mask) == g.endpoint_mask[b]) {
            t.bonds.push_back({pos[g.bonds[b].u], pos[g.bonds[b].v]});
            t.J.push_back(g.coupling[b]);
        }
    }
    return t;
}

// Visits all 2^m spin assignments in lexicographic order and hands the
// Boltzmann weight exp(p*(sum J phi phi + h sum phi)) to the visitor along
// with the raw configuration bits (bit set = spin +1).
template <class Visitor>
void spin_sweep(const SweepTables& t, double p, double h, Visitor&& visit) {
    const int m = static_cast<int>(t.sites.size());
    const std::uint64_t total = std::uint64_t{1} << m;
    for (std::uint64_t cfg = 0; cfg < total; ++cfg) {
        KahanSum energy;  // sum J phi phi + h sum phi
        for (std::size_t k = 0; k < t.bonds.size(); ++k) {
            const int su = (cfg >> t.bonds[k][0]) & 1 ? 1 : -1;
            const int sv = (cfg >> t.bonds[k][1]) & 1 ? 1 : -1;
            energy.add(t.J[k] * su * sv);
        }
        if (h != 0.0) {
            for (int k = 0; k < m; ++k) energy.add(h * ((cfg >> k) & 1 ? 1 : -1));
        }
        visit(cfg, std::exp(p * energy.value()));
    }
}

void check_budget(SiteMask mask) {
    if (std::popcount(mask) > kSiteBudget) {
        throw BudgetError("spin oracle: restriction exceeds " + std::to_string(kSiteBudget) + " sites");
    }
}

} // namespace

double partition_function(const SpinObservableRequest& req) {
    const GraphSpec& g = *req.graph;
    check_budget(req.restriction);
    const SweepTables t = sweep_tables(g, req.restriction);
    const int m = static_cast<int>(t.sites.size());
    KahanSum z;
    spin_sweep(t, req.p, req.h, [&](std::uint64_t, double w) { z.add(w); });
    return z.value() * std::ldexp(1.0, -m);   // 2^{-|A|} prefactor
}

double two_point(const SpinObservableRequest& req, int x, int y) {
    const GraphSpec& g = *req.graph;
    if (x < 0 || x >= g.n_sites || y < 0 || y >= g.n_sites) {
        throw ConfigError("two_point: unknown site");
    }
    const SiteMask mask = req.restriction;
    if (!(mask & site_bit(x)) || !(mask & site_bit(y))) return 0.0;
    if (x == y) return 1.0;
    check_budget(mask);
    const SweepTables t = sweep_tables(g, mask);
    int px = -1, py = -1;
    for (std::size_t k = 0; k < t.sites.size(); ++k) {
        if (t.sites[k] == x) px = static_cast<int>(k);
        if (t.sites[k] == y) py = static_cast<int>(k);
    }
    KahanSum z, num;
    spin_sweep(t, req.p, req.h, [&](std::uint64_t cfg, double w) {
        z.add(w);
        const int sx = (cfg >> px) & 1 ? 1 : -1;
        const int sy = (cfg >> py) & 1 ? 1 : -1;
        num.add(w * sx * sy);
    });
    return num.value() / z.value();
}

double partition_function(const GraphSpec& g, double p) {
    SpinObservableRequest req{&g, p, 0.0, all_sites_mask(g.n_sites)};
    return partition_function(req);
}

double two_point(const GraphSpec& g, double p, int x, int y) {
    SpinObservableRequest req{&g, p, 0.0, all_sites_mask(g.n_sites)};
    return two_point(req, x, y);
}

double two_point_monotonicity_margin(const GraphSpec& g, double p, SiteMask A, int x, int y) {
    if (!g.ferromagnetic()) {
        throw ConfigError("two_point_monotonicity_margin: requires ferromagnetic couplings");
    }
    const SiteMask all = all_sites_mask(g.n_sites);
    SpinObservableRequest full{&g, p, 0.0, all};
    SpinObservableRequest restr{&g, p, 0.0, static_cast<SiteMask>(all & ~A)};
    return two_point(full, x, y) - two_point(restr, x, y);
}

RestrictedCorrelations restricted_correlations(const GraphSpec& g, double p, SiteMask mask) {
    check_budget(mask);
    const SweepTables t = sweep_tables(g, mask);
    const int m = static_cast<int>(t.sites.size());
    const int n = g.n_sites;

    RestrictedCorrelations out;
    out.G.assign(static_cast<std::size_t>(n) * n, 0.0);

    KahanSum z;
    std::vector<KahanSum> pair(static_cast<std::size_t>(m) * m);
    spin_sweep(t, p, 0.0, [&](std::uint64_t cfg, double w) {
        z.add(w);
        for (int a = 0; a < m; ++a) {
            const int sa = (cfg >> a) & 1 ? 1 : -1;
            for (int b = a + 1; b < m; ++b) {
                const int sb = (cfg >> b) & 1 ? 1 : -1;
                pair[static_cast<std::size_t>(a) * m + b].add(w * sa * sb);
            }
        }
    });
    out.Z = z.value() * std::ldexp(1.0, -m);
    for (int a = 0; a < m; ++a) {
        out.G[static_cast<std::size_t>(t.sites[a]) * n + t.sites[a]] = 1.0;
        for (int b = a + 1; b < m; ++b) {
            const double v = pair[static_cast<std::size_t>(a) * m + b].value() / z.value();
            out.G[static_cast<std::size_t>(t.sites[a]) * n + t.sites[b]] = v;
            out.G[static_cast<std::size_t>(t.sites[b]) * n + t.sites[a]] = v;
        }
    }
    return out;
}

const RestrictedCorrelations& SpinCache::at(SiteMask mask) {
    auto it = cache_.find(mask);
    if (it == cache_.end()) {
        it = cache_.emplace(mask, restricted_correlations(*g_, p_, mask)).first;
    }
    return it->second;
}

double SpinCache::G(SiteMask mask, int x, int y) {
    if (!(mask & site_bit(x)) || !(mask & site_bit(y))) return 0.0;
    if (x == y) return 1.0;
    return at(mask).g(x, y, g_->n_sites);
}

} // namespace lacelab
