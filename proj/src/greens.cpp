#include "lacelab/greens.hpp"

#include <algorithm>
#include <cmath>

#include "lacelab/kahan.hpp"
#include "lacelab/spin.hpp"

namespace lacelab {

Stencil nn_stencil(int d) {
    if (d < 1) throw ConfigError("nn_stencil: need d >= 1");
    Stencil s;
    s.d = d;
    for (int axis = 0; axis < d; ++axis) {
        for (int sign : {-1, 1}) {
            std::vector<int> off(d, 0);
            off[axis] = sign;
            s.offsets.push_back(off);
            s.weights.push_back(1.0 / (2.0 * d));
        }
    }
    s.sigma2 = 1.0;
    return s;
}

Stencil spread_out_stencil(int d, int L) {
    if (d < 1 || L < 1) throw ConfigError("spread_out_stencil: need d >= 1 and L >= 1");
    Stencil s;
    s.d = d;
    std::vector<int> off(d, -L);
    const double w = 1.0 / (std::pow(2.0 * L + 1.0, d) - 1.0);
    KahanSum sig;
    while (true) {
        int linf = 0;
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            linf = std::max(linf, std::abs(off[k]));
            r2 += static_cast<double>(off[k]) * off[k];
        }
        if (linf >= 1) {
            s.offsets.push_back(off);
            s.weights.push_back(w);
            sig.add(r2 * w);
        }
        int k = 0;
        while (k < d && off[k] == L) off[k++] = -L;
        if (k == d) break;
        ++off[k];
    }
    s.sigma2 = sig.value();
    return s;
}

namespace {

int fold(int c, int M) {
    c %= M;
    if (c < 0) c += M;
    return std::min(c, M - c);
}

std::uint64_t pack_coords(const std::vector<int>& c) {
    std::uint64_t key = 0;
    for (int v : c) key = key * 4096 + static_cast<std::uint64_t>(v + 1);
    return key;
}

} // namespace

std::size_t TorusGreens::canonical_index(const std::vector<int>& x) const {
    std::vector<int> c(d_);
    for (int k = 0; k < d_; ++k) c[k] = fold(x[k], M_);
    std::sort(c.begin(), c.end());
    return index_.at(pack_coords(c));
}

double TorusGreens::at(const std::vector<int>& x) const { return S_[canonical_index(x)]; }

double TorusGreens::minimal_image_norm2(const std::vector<int>& x) const {
    double r2 = 0.0;
    for (int k = 0; k < d_; ++k) {
        const double f = fold(x[k], M_);
        r2 += f * f;
    }
    return r2;
}

double TorusGreens::sum_all() const {
    KahanSum total;
    for (std::size_t i = 0; i < reps_.size(); ++i) total.add(S_[i] * multiplicity_[i]);
    return total.value();
}

TorusGreens TorusGreens::solve(int d, int M, const Stencil& D, double r, double eps, int cap) {
    if (d < 1 || M < 1) throw ConfigError("TorusGreens: need d >= 1 and M >= 1");
    if (D.d != d) throw ConfigError("TorusGreens: stencil dimension mismatch");
    if (r < 0.0 || r > 1.0) throw ConfigError("TorusGreens: r must lie in [0, 1]");
    if (r >= 1.0 && d <= 2) {
        throw ConfigError("TorusGreens: the r = 1 series diverges for d <= 2");
    }

    if (cap <= 0) cap = M * M;

    TorusGreens t;
    t.d_ = d;
    t.M_ = M;
    t.r_ = r;

    // Canonical orbit representatives: folded coordinates sorted ascending.
    const int half = M / 2;
    std::vector<int> c(d, 0);
    while (true) {
        bool sorted = true;
        for (int k = 1; k < d; ++k) sorted = sorted && c[k - 1] <= c[k];
        if (sorted) {
            t.index_.emplace(pack_coords(c), t.reps_.size());
            t.reps_.push_back(c);
            // orbit size: distinct sign choices times distinct orderings
            long long signs = 1;
            for (int k = 0; k < d; ++k) {
                const bool self_paired = (c[k] == 0) || (M % 2 == 0 && c[k] == half);
                if (!self_paired) signs *= 2;
            }
            long long perms = 1;
            for (long long k = 1; k <= d; ++k) perms *= k;
            int run = 1;
            for (int k = 1; k <= d; ++k) {
                if (k < d && c[k] == c[k - 1]) {
                    ++run;
                } else {
                    for (long long f = 2; f <= run; ++f) perms /= f;
                    run = 1;
                }
            }
            t.multiplicity_.push_back(signs * perms);
        }
        int k = 0;
        while (k < d && c[k] == half) c[k++] = 0;
        if (k == d) break;
        ++c[k];
    }

    const std::size_t npts = t.reps_.size();
    const std::size_t origin_idx = t.canonical_index(std::vector<int>(d, 0));

    // Precompute the neighbor index of each representative under each offset.
    const std::size_t ntaps = D.offsets.size();
    std::vector<std::size_t> nbr(npts * ntaps);
    {
        std::vector<int> y(d);
        for (std::size_t i = 0; i < npts; ++i) {
            for (std::size_t a = 0; a < ntaps; ++a) {
                for (int k = 0; k < d; ++k) y[k] = t.reps_[i][k] - D.offsets[a][k];
                nbr[i * ntaps + a] = t.canonical_index(y);
            }
        }
    }

    std::vector<double> cur(npts, 0.0), next(npts, 0.0);
    cur[origin_idx] = 1.0;   // S^(0) = delta

    const int max_iter = (r < 1.0) ? 100000 : cap;
    int it = 0;
    for (; it < max_iter; ++it) {
        double update = 0.0;
        for (std::size_t i = 0; i < npts; ++i) {
            KahanSum conv;
            for (std::size_t a = 0; a < ntaps; ++a) {
                conv.add(D.weights[a] * cur[nbr[i * ntaps + a]]);
            }
            next[i] = r * conv.value() + (i == origin_idx ? 1.0 : 0.0);
        }
        for (std::size_t i = 0; i < npts; ++i) {
            update = std::max(update, std::abs(next[i] - cur[i]));
        }
        cur.swap(next);
        if (r < 1.0 && update < eps) {
            ++it;
            break;
        }
    }
    t.iterations_ = it;
    t.S_ = cur;

    // Fixed-point residual ||S - delta - r D*S||_inf.
    double resid = 0.0;
    for (std::size_t i = 0; i < npts; ++i) {
        KahanSum conv;
        for (std::size_t a = 0; a < ntaps; ++a) conv.add(D.weights[a] * t.S_[nbr[i * ntaps + a]]);
        const double rhs = r * conv.value() + (i == origin_idx ? 1.0 : 0.0);
        resid = std::max(resid, std::abs(t.S_[i] - rhs));
    }
    t.residual_ = resid;
    return t;
}

double a_d(int d) {
    if (d <= 2) throw ConfigError("a_d: defined for d > 2 only");
    return 0.5 * d * std::pow(M_PI, -0.5 * d) * std::tgamma(0.5 * d - 1.0);
}

double check_green_asymptotics(int d, int M, double r, double window_lo, double window_hi,
                               int cap) {
    if (r != 1.0) throw ConfigError("check_green_asymptotics: the power law applies at r = 1 only");
    if (d <= 2) throw ConfigError("check_green_asymptotics: need d > 2");
    const Stencil D = nn_stencil(d);
    const TorusGreens S = TorusGreens::solve(d, M, D, 1.0, 1e-12, cap);
    const double amp = a_d(d);
    double worst = 0.0;
    for (std::size_t i = 0; i < S.n_points(); ++i) {
        double r2 = 0.0;
        for (int v : S.rep(i)) r2 += static_cast<double>(v) * v;
        const double norm = std::sqrt(r2);
        if (norm < window_lo || norm > window_hi) continue;
        const double predicted = amp / (D.sigma2 * std::pow(norm, d - 2));
        worst = std::max(worst, std::abs(S.at_index(i) / predicted - 1.0));
    }
    return worst;
}

namespace {

double angle_norm(double r2) { return std::max(1.0, std::sqrt(r2)); }   // <x> = |x| v 1

// Deterministic 64-bit mix for sampling (splitmix64).
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct BoxGrid {
    int d, side;
    std::size_t npts;
    std::vector<std::vector<int>> pts;

    explicit BoxGrid(int d_, int side_) : d(d_), side(side_) {
        npts = 1;
        for (int k = 0; k < d; ++k) npts *= static_cast<std::size_t>(side);
        pts.reserve(npts);
        std::vector<int> c(d, 0);
        for (std::size_t i = 0; i < npts; ++i) {
            pts.push_back(c);
            int k = 0;
            while (k < d && c[k] == side - 1) c[k++] = 0;
            if (k < d) ++c[k];
        }
    }

    double dist2(std::size_t i, std::size_t j) const {
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            const double diff = pts[i][k] - pts[j][k];
            r2 += diff * diff;
        }
        return r2;
    }

    // Corner points plus the center: the axis-aligned extremes of the box.
    std::vector<std::size_t> extremes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < npts; ++i) {
            bool corner = true;
            for (int k = 0; k < d; ++k) {
                corner = corner && (pts[i][k] == 0 || pts[i][k] == side - 1);
            }
            if (corner) out.push_back(i);
        }
        std::vector<int> center(d, side / 2);
        std::size_t ci = 0;
        for (int k = d - 1; k >= 0; --k) ci = ci * side + center[k];
        out.push_back(ci);
        return out;
    }
};

// Table of <z>^-e over all difference vectors of a box of the given side.
struct PowerTable {
    int d, side, span;
    std::vector<double> v;

    PowerTable(int d_, int side_, double e) : d(d_), side(side_), span(2 * side - 1) {
        std::size_t cells = 1;
        for (int k = 0; k < d; ++k) cells *= static_cast<std::size_t>(span);
        v.resize(cells);
        std::vector<int> c(d, 0);
        for (std::size_t i = 0; i < cells; ++i) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = c[k] - (side - 1);
                r2 += diff * diff;
            }
            v[i] = std::pow(angle_norm(r2), -e);
            int k = 0;
            while (k < d && c[k] == span - 1) c[k++] = 0;
            if (k < d) ++c[k];
        }
    }

    double at(const std::vector<int>& a, const std::vector<int>& b) const {
        std::size_t idx = 0;
        for (int k = d - 1; k >= 0; --k) {
            idx = idx * span + static_cast<std::size_t>(a[k] - b[k] + side - 1);
        }
        return v[idx];
    }
};

} // namespace

double SupRatioResult::max_growth() const {
    double g = 0.0;
    for (std::size_t i = 1; i < sup.size(); ++i) g = std::max(g, sup[i] / sup[i - 1]);
    return g;
}

SupRatioResult convolution_bound_check(int d, double a, double b, const std::vector<int>& sides,
                                       std::uint64_t seed, int samples) {
    if (!(a >= b && b > 0 && a + b > d)) {
        throw ConfigError("convolution_bound_check: need a >= b > 0 and a + b > d");
    }
    SupRatioResult res;
    const double decay = std::min(a, static_cast<double>(d)) + b - d;
    for (int side : sides) {
        const BoxGrid grid(d, side);
        const PowerTable pa(d, side, a), pb(d, side, b);

        auto ratio = [&](std::size_t v, std::size_t x) {
            KahanSum lhs;
            for (std::size_t y = 0; y < grid.npts; ++y) {
                lhs.add(pa.at(grid.pts[y], grid.pts[v]) * pb.at(grid.pts[x], grid.pts[y]));
            }
            return lhs.value() * std::pow(angle_norm(grid.dist2(x, v)), decay);
        };

        double sup = 0.0;
        const auto ext = grid.extremes();
        for (std::size_t i : ext)
            for (std::size_t j : ext) sup = std::max(sup, ratio(i, j));

        const std::size_t pair_count = grid.npts * grid.npts;
        if (pair_count <= 1000000) {
            for (std::size_t i = 0; i < grid.npts; ++i)
                for (std::size_t j = 0; j < grid.npts; ++j) sup = std::max(sup, ratio(i, j));
        } else {
            std::uint64_t state = seed ^ (0x1ace1100ULL + side);
            for (int s = 0; s < samples; ++s) {
                state = mix64(state);
                const std::size_t i = state % grid.npts;
                state = mix64(state);
                const std::size_t j = state % grid.npts;
                sup = std::max(sup, ratio(i, j));
            }
        }
        res.sides.push_back(side);
        res.sup.push_back(sup);
    }
    return res;
}

SupRatioResult star_bound_check(int d, double q, const std::vector<int>& sides,
                                std::uint64_t seed, int samples) {
    if (!(q > 0.5 * d && q < d)) {
        throw ConfigError("star_bound_check: need d/2 < q < d");
    }
    SupRatioResult res;
    for (int side : sides) {
        const BoxGrid grid(d, side);
        const PowerTable pq(d, side, q);

        auto ratio = [&](std::size_t x, std::size_t xp, std::size_t y, std::size_t yp) {
            KahanSum lhs;
            for (std::size_t z = 0; z < grid.npts; ++z) {
                lhs.add(pq.at(grid.pts[x], grid.pts[z]) * pq.at(grid.pts[xp], grid.pts[z]) *
                        pq.at(grid.pts[z], grid.pts[y]) * pq.at(grid.pts[z], grid.pts[yp]));
            }
            return lhs.value() * std::pow(angle_norm(grid.dist2(x, y)), q) *
                   std::pow(angle_norm(grid.dist2(xp, yp)), q);
        };

        double sup = 0.0;
        const auto ext = grid.extremes();
        for (std::size_t i : ext)
            for (std::size_t j : ext)
                for (std::size_t k : ext)
                    for (std::size_t l : ext) sup = std::max(sup, ratio(i, j, k, l));

        std::uint64_t state = seed ^ (0x57a1b000ULL + side);
        for (int s = 0; s < samples; ++s) {
            state = mix64(state);
            const std::size_t x = state % grid.npts;
            state = mix64(state);
            const std::size_t xp = state % grid.npts;
            state = mix64(state);
            const std::size_t y = state % grid.npts;
            state = mix64(state);
            const std::size_t yp = state % grid.npts;
            sup = std::max(sup, ratio(x, xp, y, yp));
        }
        res.sides.push_back(side);
        res.sup.push_back(sup);
    }
    return res;
}

std::pair<double, double> bar_norms(const TorusGreens& G, double s, double t) {
    const int d = G.d(), M = G.M();
    std::size_t npts = 1;
    for (int k = 0; k < d; ++k) npts *= static_cast<std::size_t>(M);
    if (npts > (std::size_t{1} << 22)) {
        throw BudgetError("bar_norms: torus too large for the full double sweep");
    }

    std::vector<std::vector<int>> pts;
    pts.reserve(npts);
    std::vector<int> c(d, 0);
    for (std::size_t i = 0; i < npts; ++i) {
        pts.push_back(c);
        int k = 0;
        while (k < d && c[k] == M - 1) c[k++] = 0;
        if (k < d) ++c[k];
    }

    std::vector<double> val(npts), norm2(npts);
    for (std::size_t i = 0; i < npts; ++i) {
        val[i] = G.at(pts[i]);
        norm2[i] = G.minimal_image_norm2(pts[i]);
    }

    double gbar = 0.0;
    for (std::size_t i = 0; i < npts; ++i) {
        gbar = std::max(gbar, std::pow(norm2[i], 0.5 * s) * val[i]);
    }

    double wbar = 0.0;
    std::vector<int> diff(d);
    for (std::size_t x = 0; x < npts; ++x) {
        KahanSum acc;
        for (std::size_t y = 0; y < npts; ++y) {
            for (int k = 0; k < d; ++k) diff[k] = pts[x][k] - pts[y][k];
            acc.add(std::pow(norm2[y], 0.5 * t) * val[y] * G.at(diff));
        }
        wbar = std::max(wbar, acc.value());
    }
    return {gbar, wbar};
}

std::vector<double> random_walk_domination_check(const GraphSpec& g, double p) {
    if (!g.ferromagnetic()) {
        throw ConfigError("random_walk_domination_check: requires ferromagnetic couplings");
    }
    if (g.coords.empty()) {
        throw ConfigError("random_walk_domination_check: graph carries no coordinates");
    }
    const int d = static_cast<int>(g.coords[0].size());
    const double J = g.coupling.empty() ? 1.0 : g.coupling[0];
    for (double c : g.coupling) {
        if (c != J) throw ConfigError("random_walk_domination_check: needs uniform couplings");
    }
    const double tau = 2.0 * d * std::tanh(p * J);
    if (tau > 1.0) {
        throw ConfigError("random_walk_domination_check: tau = " + std::to_string(tau) + " > 1");
    }

    int extent = 1;
    for (const auto& c : g.coords)
        for (int v : c) extent = std::max(extent, std::abs(v) + 1);
    const int M = 4 * extent + 1;

    const Stencil D = nn_stencil(d);
    const TorusGreens S = (tau == 0.0) ? TorusGreens::solve(d, M, D, 0.0)
                                       : TorusGreens::solve(d, M, D, tau);

    SpinObservableRequest req{&g, p, 0.0, all_sites_mask(g.n_sites)};
    std::vector<double> margins(g.n_sites);
    std::vector<int> diff(d);
    for (int x = 0; x < g.n_sites; ++x) {
        for (int k = 0; k < d; ++k) diff[k] = g.coords[x][k] - g.coords[g.origin][k];
        margins[x] = S.at(diff) - two_point(req, g.origin, x);
    }
    return margins;
}

} // namespace lacelab
