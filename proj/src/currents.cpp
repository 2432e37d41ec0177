#include "lacelab/currents.hpp"

#include <cmath>

#include "lacelab/kahan.hpp"

namespace lacelab {

BondMask CurrentClass::positivity() const {
    BondMask pos = 0;
    for (std::size_t b = 0; b < states.size(); ++b) {
        if (states[b] != BondState::Zero) pos |= bond_bit(static_cast<int>(b));
    }
    return pos;
}

std::vector<BondWeights> bond_class_weights(const GraphSpec& g, double p) {
    std::vector<BondWeights> w(g.n_bonds());
    for (int b = 0; b < g.n_bonds(); ++b) {
        const double x = p * g.coupling[b];
        // cosh(x) - 1 via expm1 keeps relative accuracy for small couplings.
        w[b].even_positive = 0.5 * (std::expm1(x) + std::expm1(-x));
        w[b].odd = std::sinh(x);
    }
    return w;
}

BondMask bonds_within(const GraphSpec& g, SiteMask sites) {
    BondMask out = 0;
    for (int b = 0; b < g.n_bonds(); ++b) {
        if ((g.endpoint_mask[b] & sites) == g.endpoint_mask[b]) out |= bond_bit(b);
    }
    return out;
}

SiteMask sources_of(const GraphSpec& g, const CurrentClass& c) {
    SiteMask s = 0;
    for (std::size_t b = 0; b < c.states.size(); ++b) {
        if (c.states[b] == BondState::Odd) s ^= g.endpoint_mask[b];
    }
    return s;
}

namespace {

// Depth-first mixed-radix sweep; visiting order equals counting the bond
// states as base-3 digits, least significant bond last.
template <class Leaf>
void current_dfs(const GraphSpec& g, const std::vector<BondWeights>& w, BondMask support,
                 CurrentClass& c, int b, double weight, BondMask pos, SiteMask parity,
                 Leaf&& leaf) {
    if (b == g.n_bonds()) {
        leaf(c, weight, pos, parity);
        return;
    }
    c.states[b] = BondState::Zero;
    current_dfs(g, w, support, c, b + 1, weight, pos, parity, leaf);
    if (support & bond_bit(b)) {
        c.states[b] = BondState::EvenPositive;
        current_dfs(g, w, support, c, b + 1, weight * w[b].even_positive, pos | bond_bit(b),
                    parity, leaf);
        c.states[b] = BondState::Odd;
        current_dfs(g, w, support, c, b + 1, weight * w[b].odd, pos | bond_bit(b),
                    parity ^ g.endpoint_mask[b], leaf);
        c.states[b] = BondState::Zero;
    }
}

} // namespace

void enumerate_currents(const GraphSpec& g, double p, BondMask support, SiteMask sources,
                        const CurrentVisitor& visit, const EnumerationBudget& budget) {
    budget.require_single_sweep(g.n_bonds(), "enumerate_currents");
    const auto w = bond_class_weights(g, p);
    CurrentClass c;
    c.states.assign(g.n_bonds(), BondState::Zero);
    c.support = support;
    current_dfs(g, w, support, c, 0, 1.0, 0, 0,
                [&](const CurrentClass& cc, double weight, BondMask pos, SiteMask parity) {
                    if (parity == sources) visit(cc, weight, pos);
                });
}

double current_weight_sum(const GraphSpec& g, double p, BondMask support, SiteMask sources,
                          const EnumerationBudget& budget) {
    KahanSum total;
    enumerate_currents(
        g, p, support, sources,
        [&](const CurrentClass&, double weight, BondMask) { total.add(weight); }, budget);
    return total.value();
}

double two_point_via_currents(const GraphSpec& g, double p, int x, int y,
                              const EnumerationBudget& budget) {
    const BondMask support = all_bonds_mask(g.n_bonds());
    const SiteMask sources = (x == y) ? 0 : (site_bit(x) | site_bit(y));
    const double num = current_weight_sum(g, p, support, sources, budget);
    const double den = current_weight_sum(g, p, support, 0, budget);
    return num / den;
}

void enumerate_current_pairs(const GraphSpec& g, double p, SiteMask A, SiteMask sources_m,
                             SiteMask sources_n, const PairVisitor& visit,
                             const EnumerationBudget& budget) {
    budget.require_pair_sweep(g.n_bonds(), "enumerate_current_pairs");
    const SiteMask all = all_sites_mask(g.n_sites);
    const SiteMask complement = all & ~A;
    if ((sources_m & complement) != sources_m) {
        throw ConfigError("enumerate_current_pairs: m-sources must lie inside the complement of A");
    }
    const BondMask m_support = bonds_within(g, complement);
    const BondMask n_support = all_bonds_mask(g.n_bonds());

    const double Zac = current_weight_sum(g, p, m_support, 0, budget);
    const double Zlam = current_weight_sum(g, p, n_support, 0, budget);
    const double norm = Zac * Zlam;

    const auto w = bond_class_weights(g, p);
    CurrentClass m, n;
    m.states.assign(g.n_bonds(), BondState::Zero);
    m.support = m_support;
    n.states.assign(g.n_bonds(), BondState::Zero);
    n.support = n_support;

    current_dfs(g, w, m_support, m, 0, 1.0, 0, 0,
                [&](const CurrentClass& mc, double mw, BondMask mpos, SiteMask mparity) {
                    if (mparity != sources_m) return;
                    BondMask modd = 0;
                    for (int b = 0; b < g.n_bonds(); ++b) {
                        if (mc.states[b] == BondState::Odd) modd |= bond_bit(b);
                    }
                    current_dfs(g, w, n_support, n, 0, 1.0, 0, 0,
                                [&](const CurrentClass& nc, double nw, BondMask npos,
                                    SiteMask nparity) {
                                    if (nparity != sources_n) return;
                                    BondMask nodd = 0;
                                    for (int b = 0; b < g.n_bonds(); ++b) {
                                        if (nc.states[b] == BondState::Odd) nodd |= bond_bit(b);
                                    }
                                    CurrentPairView view{&mc, &nc, mw * nw / norm,
                                                         mpos | npos, modd, nodd};
                                    visit(view);
                                });
                });
}

PairClassTable PairClassTable::build(const GraphSpec& g, double p, SiteMask A,
                                     const EnumerationBudget& budget) {
    budget.require_pair_sweep(g.n_bonds(), "PairClassTable");
    PairClassTable t;
    t.n_sites_ = g.n_sites;
    t.n_bonds_ = g.n_bonds();
    t.amask_ = A;

    const SiteMask complement = all_sites_mask(g.n_sites) & ~A;
    const BondMask m_support = bonds_within(g, complement);
    const auto cw = bond_class_weights(g, p);

    const std::size_t cells = std::size_t{1} << (t.n_bonds_ + t.n_sites_);
    t.w_.assign(cells, 0.0);
    std::vector<double> comp(cells, 0.0);
    auto deposit = [&](std::size_t cell, double v) {
        // per-cell Kahan step
        const double y = v - comp[cell];
        const double s = t.w_[cell] + y;
        comp[cell] = (s - t.w_[cell]) - y;
        t.w_[cell] = s;
    };

    // Per-bond pair classes: (positivity, parity of m, parity of n) with the
    // summed weights of the underlying ternary pair states.
    struct Cls {
        double weight;
        bool pos, pm, pn;
    };
    std::vector<std::vector<Cls>> classes(t.n_bonds_);
    for (int b = 0; b < t.n_bonds_; ++b) {
        const double x = p * g.coupling[b];
        const double ch = std::cosh(x);
        const double sh = std::sinh(x);
        const bool msup = (m_support & bond_bit(b)) != 0;
        auto& cl = classes[b];
        cl.push_back({1.0, false, false, false});
        if (msup) {
            cl.push_back({ch * ch - 1.0, true, false, false});
            cl.push_back({ch * sh, true, false, true});
            cl.push_back({sh * ch, true, true, false});
            cl.push_back({sh * sh, true, true, true});
        } else {
            cl.push_back({ch - 1.0, true, false, false});
            cl.push_back({sh, true, false, true});
        }
    }

    const int n_sites = t.n_sites_;
    auto dfs = [&](auto&& self, int b, double weight, BondMask pos, SiteMask pm,
                   SiteMask pn) -> void {
        if (b == t.n_bonds_) {
            if (pm == 0) deposit((static_cast<std::size_t>(pos) << n_sites) | pn, weight);
            return;
        }
        for (const Cls& c : classes[b]) {
            self(self, b + 1, weight * c.weight, c.pos ? (pos | bond_bit(b)) : pos,
                 c.pm ? (pm ^ g.endpoint_mask[b]) : pm, c.pn ? (pn ^ g.endpoint_mask[b]) : pn);
        }
    };
    dfs(dfs, 0, 1.0, 0, 0, 0);

    KahanSum norm;
    for (BondMask pos = 0; pos < (BondMask{1} << t.n_bonds_); ++pos) {
        norm.add(t.w_[static_cast<std::size_t>(pos) << n_sites]);
    }
    t.norm_ = norm.value();
    return t;
}

} // namespace lacelab
