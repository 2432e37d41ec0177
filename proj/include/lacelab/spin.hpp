#pragma once

#include <unordered_map>
#include <vector>

#include "lacelab/graph.hpp"

namespace lacelab {

// Ground-truth Ising quantities by direct summation over the 2^|A| spin
// configurations of the (possibly restricted) graph.  The configuration order
// is fixed lexicographic and every sum is compensated, so results are
// bit-reproducible.
//
// Conventions for restricted averages: a two-point function evaluated with a
// site outside the restriction is 0, and 1 when x == y inside it.

struct SpinObservableRequest {
    const GraphSpec* graph = nullptr;
    double p = 0.0;
    double h = 0.0;
    SiteMask restriction = 0;   // site subset A; bonds are those inside A
};

double partition_function(const SpinObservableRequest& req);
double two_point(const SpinObservableRequest& req, int x, int y);

// Convenience overloads on the full graph at h = 0.
double partition_function(const GraphSpec& g, double p);
double two_point(const GraphSpec& g, double p, int x, int y);

// <phi_x phi_y>_Lambda - <phi_x phi_y>_{A^c}, which is nonnegative for
// ferromagnetic couplings.  Refuses graphs with negative couplings.
double two_point_monotonicity_margin(const GraphSpec& g, double p, SiteMask A, int x, int y);

// Partition function and full two-point matrix of one restriction, from a
// single spin sweep.
struct RestrictedCorrelations {
    double Z = 1.0;
    std::vector<double> G;      // n_sites x n_sites, zero outside the mask
    double g(int x, int y, int n) const { return G[static_cast<std::size_t>(x) * n + y]; }
};

RestrictedCorrelations restricted_correlations(const GraphSpec& g, double p, SiteMask mask);

// Memoizing cache keyed by restriction mask; the expansion pipeline hits the
// same complements over and over.
class SpinCache {
public:
    SpinCache(const GraphSpec& g, double p) : g_(&g), p_(p) {}

    const RestrictedCorrelations& at(SiteMask mask);
    double Z(SiteMask mask) { return at(mask).Z; }
    // Restricted two-point with the out-of-restriction conventions applied.
    double G(SiteMask mask, int x, int y);

private:
    const GraphSpec* g_;
    double p_;
    std::unordered_map<SiteMask, RestrictedCorrelations> cache_;
};

} // namespace lacelab
