#include "lacelab/expansion.hpp"

#include <cmath>
#include <limits>

#include "lacelab/kahan.hpp"

namespace lacelab {

namespace {

SiteMask source_pair(int a, int b) {
    return (a == b) ? 0 : (site_bit(a) | site_bit(b));
}

std::uint64_t pack_event_key(int kind, BondMask pos, int v, int t, int aux, SiteMask A) {
    std::uint64_t k = static_cast<std::uint64_t>(pos);
    k = k * 33 + static_cast<std::uint64_t>(v + 1);
    k = k * 33 + static_cast<std::uint64_t>(t + 1);
    k = k * 33 + static_cast<std::uint64_t>(aux + 2);
    k = (k << 25) ^ static_cast<std::uint64_t>(A);
    return (k << 2) | static_cast<std::uint64_t>(kind);
}

} // namespace

Expansion::Expansion(const GraphSpec& g, double p, EnumerationBudget budget)
    : g_(&g), p_(p), budget_(budget), spins_(g, p), all_sites_(all_sites_mask(g.n_sites)) {
    if (p < 0) throw ConfigError("Expansion: inverse temperature must be nonnegative");
    tau_.resize(g.n_bonds());
    for (int b = 0; b < g.n_bonds(); ++b) tau_[b] = std::tanh(p * g.coupling[b]);
}

const PairClassTable& Expansion::table(SiteMask A) {
    auto it = tables_.find(A);
    if (it == tables_.end()) {
        it = tables_.emplace(A, PairClassTable::build(*g_, p_, A, budget_)).first;
        states_visited_ += budget_.pair_sweep_states(g_->n_bonds());
    }
    return it->second;
}

bool Expansion::event_cached(SourceEvent kind, BondMask pos, int v, int t, int aux, SiteMask A) {
    const std::uint64_t key = pack_event_key(static_cast<int>(kind), pos, v, t, aux, A);
    auto it = event_cache_.find(key);
    if (it != event_cache_.end()) return it->second;
    bool value = false;
    switch (kind) {
        case SourceEvent::E: value = event_E(*g_, pos, v, t, A); break;
        case SourceEvent::EPrime: value = event_Eprime(*g_, pos, v, t, A); break;
        case SourceEvent::EDoublePrime: value = event_Edoubleprime(*g_, pos, v, t, aux, A); break;
    }
    event_cache_.emplace(key, value);
    return value;
}

double Expansion::theta_functional(int v, int x, SiteMask A,
                                   const std::function<double(BondMask)>& f,
                                   SourceEvent event, int event_site) {
    if (A == 0) return 0.0;   // through the empty set is impossible
    const PairClassTable& t = table(A);
    const SiteMask srcs = source_pair(v, x);
    KahanSum acc;
    const BondMask pos_end = BondMask{1} << g_->n_bonds();
    for (BondMask pos = 0; pos < pos_end; ++pos) {
        const double w = t.weight(pos, srcs);
        if (w == 0.0) continue;
        if (!event_cached(event, pos, v, x, event_site, A)) continue;
        acc.add(f ? w * f(pos) : w);
    }
    return acc.value() / t.normalizer();
}

double Expansion::theta(int v, int x, SiteMask A) {
    return theta_functional(v, x, A, nullptr, SourceEvent::E);
}

double Expansion::theta_prime(int z, int x, SiteMask A) {
    return theta_functional(z, x, A, nullptr, SourceEvent::EPrime);
}

double Expansion::theta_dprime(int z, int x, int v, SiteMask A) {
    return theta_functional(z, x, A, nullptr, SourceEvent::EDoublePrime, v);
}

double Expansion::pi0(int x) {
    // Single current with a double-connection event; the pair table with
    // through-set Lambda has the m-current frozen to zero, so it *is* the
    // single-current class table.
    const PairClassTable& t = table(all_sites_);
    const SiteMask srcs = source_pair(g_->origin, x);
    KahanSum acc;
    const BondMask pos_end = BondMask{1} << g_->n_bonds();
    for (BondMask pos = 0; pos < pos_end; ++pos) {
        const double w = t.weight(pos, srcs);
        if (w == 0.0) continue;
        if (doubly_connected(*g_, pos, g_->origin, x)) acc.add(w);
    }
    return acc.value() / t.normalizer();
}

double Expansion::G(int x, int y) { return spins_.G(all_sites_, x, y); }

double Expansion::nested_level(bool remainder, int last, int level, int v, SiteMask A, int x,
                               std::unordered_map<std::uint64_t, double>& memo) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(level) << 40) | (static_cast<std::uint64_t>(v) << 32) |
        static_cast<std::uint64_t>(A);
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    const PairClassTable& t = table(A);
    double result = 0.0;

    if (!remainder && level == last) {
        result = theta_functional(v, x, A, nullptr, SourceEvent::E);
    } else {
        // Transition level: sum over the pivot bond, the source event at this
        // layer, and the realized cluster handed to the next layer.
        KahanSum acc;
        const BondMask pos_end = BondMask{1} << g_->n_bonds();
        for (const DirectedBond& db : g_->directed_bonds()) {
            const double tau = tau_[db.bond];
            if (tau == 0.0) continue;
            const SiteMask srcs = source_pair(v, db.tail);
            for (BondMask pos = 0; pos < pos_end; ++pos) {
                const double w = t.weight(pos, srcs);
                if (w == 0.0) continue;
                if (!event_cached(SourceEvent::E, pos, v, db.tail, -1, A)) continue;
                const SiteMask cluster = cluster_of(*g_, pos, v, all_sites_, db.bond);
                double inner;
                if (remainder && level == last) {
                    const SiteMask complement = all_sites_ & ~cluster;
                    inner = G(db.head, x) - spins_.G(complement, db.head, x);
                } else {
                    inner = nested_level(remainder, last, level + 1, db.head, cluster, x, memo);
                }
                if (inner != 0.0) acc.add(w * tau * inner);
            }
        }
        result = acc.value() / t.normalizer();
    }
    memo.emplace(key, result);
    return result;
}

double Expansion::pi_j(int j, int x) {
    if (j < 0) throw ConfigError("pi_j: order must be nonnegative");
    if (j == 0) return pi0(x);
    std::unordered_map<std::uint64_t, double> memo;
    return nested_level(false, j, 0, g_->origin, all_sites_, x, memo);
}

double Expansion::R_j(int j, int x) {
    if (j < 1) throw ConfigError("R_j: order must be at least 1");
    std::unordered_map<std::uint64_t, double> memo;
    return nested_level(true, j - 1, 0, g_->origin, all_sites_, x, memo);
}

ExpansionReport Expansion::verify_lace_identity(int j, double tolerance) {
    const int n = g_->n_sites;
    ExpansionReport rep;
    rep.graph = g_->name;
    rep.p = p_;
    rep.order = j;
    rep.tolerance = tolerance;
    rep.pi.assign(j + 1, std::vector<double>(n, 0.0));
    rep.Pi.assign(n, 0.0);
    rep.R.assign(n, 0.0);
    rep.residual.assign(n, 0.0);

    for (int x = 0; x < n; ++x) {
        for (int i = 0; i <= j; ++i) rep.pi[i][x] = pi_j(i, x);
        KahanSum alt;
        for (int i = 0; i <= j; ++i) alt.add((i % 2 == 0 ? 1.0 : -1.0) * rep.pi[i][x]);
        rep.Pi[x] = alt.value();
        rep.R[x] = R_j(j + 1, x);
    }

    const double r_sign = (j % 2 == 0) ? -1.0 : 1.0;   // (-1)^{j+1}
    double max_res = 0.0;
    for (int x = 0; x < n; ++x) {
        KahanSum rhs;
        rhs.add(rep.Pi[x]);
        for (const DirectedBond& db : g_->directed_bonds()) {
            rhs.add(rep.Pi[db.tail] * tau_[db.bond] * G(db.head, x));
        }
        rhs.add(r_sign * rep.R[x]);
        rep.residual[x] = G(g_->origin, x) - rhs.value();
        max_res = std::max(max_res, std::abs(rep.residual[x]));
    }
    rep.residual_max = max_res;
    rep.pass = max_res <= tolerance;

    if (g_->ferromagnetic()) {
        const double inf = std::numeric_limits<double>::infinity();
        double pi_margin = inf, r_low = inf, r_high = inf;
        for (int x = 0; x < n; ++x) {
            for (int i = 0; i <= j; ++i) {
                const double lower = (i == 0 && x == g_->origin) ? 1.0 : 0.0;
                pi_margin = std::min(pi_margin, rep.pi[i][x] - lower);
            }
            r_low = std::min(r_low, rep.R[x]);
            KahanSum ub;
            for (const DirectedBond& db : g_->directed_bonds()) {
                ub.add(rep.pi[j][db.tail] * tau_[db.bond] * G(db.head, x));
            }
            r_high = std::min(r_high, ub.value() - rep.R[x]);
        }
        rep.margins.push_back({"pi_lower_bound", pi_margin});
        rep.margins.push_back({"R_nonnegative", r_low});
        rep.margins.push_back({"R_upper_bound", r_high});
    }
    return rep;
}

double Expansion::through_identity_residual(SiteMask A, int v, int x) {
    const SiteMask complement = all_sites_ & ~A;
    const double lhs = G(v, x) - spins_.G(complement, v, x);

    const PairClassTable& t = table(A);
    const SiteMask srcs = source_pair(v, x);
    KahanSum acc;
    const BondMask pos_end = BondMask{1} << g_->n_bonds();
    for (BondMask pos = 0; pos < pos_end; ++pos) {
        const double w = t.weight(pos, srcs);
        if (w == 0.0) continue;
        if (connected_through(*g_, pos, v, x, A)) acc.add(w);
    }
    const double rhs = acc.value() / t.normalizer();
    return lhs - rhs;
}

std::optional<double> critical_point_heuristic(const GraphSpec& g, int j, double p_max,
                                               int scan_points, double tol) {
    if (!g.ferromagnetic()) {
        throw ConfigError("critical_point_heuristic: requires ferromagnetic couplings");
    }
    auto f = [&](double p) {
        Expansion exp(g, p);
        KahanSum sum;
        for (int x = 0; x < g.n_sites; ++x) {
            KahanSum alt;
            for (int i = 0; i <= j; ++i) alt.add((i % 2 == 0 ? 1.0 : -1.0) * exp.pi_j(i, x));
            sum.add(alt.value());
        }
        return step_distribution(g, p).tau_total * sum.value() - 1.0;
    };

    double prev_p = 0.0;
    double prev_f = f(0.0);   // = -1
    for (int k = 1; k <= scan_points; ++k) {
        const double p = p_max * k / scan_points;
        const double fp = f(p);
        if (prev_f <= 0.0 && fp >= 0.0) {
            double lo = prev_p, hi = p;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                if (f(mid) >= 0.0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev_p = p;
        prev_f = fp;
    }
    return std::nullopt;
}

} // namespace lacelab
