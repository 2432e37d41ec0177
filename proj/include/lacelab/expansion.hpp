#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lacelab/connectivity.hpp"
#include "lacelab/currents.hpp"
#include "lacelab/graph.hpp"
#include "lacelab/spin.hpp"

namespace lacelab {

// Lace-expansion coefficients and identities on one (graph, p) pair.
//
// The j-th coefficient nests j+1 current layers: the outer layer is a single
// current with a double-connection source event, and each inner layer is a
// coupled pair (m, n) whose through-set is the cluster realized one layer
// further out.  Layers communicate only through that cluster, the pivot bond
// and the layer's source site, so the recursion memoizes on
// (depth, source, cluster) and sums each layer against the aggregated
// pair-class table of its through-set.
//
// The remainder R^(j) replaces the innermost operator by the restricted
// two-point difference <phi phi>_Lambda - <phi phi>_{C^c}, with the
// restricted averages memoized per cluster complement.

struct NamedMargin {
    std::string name;
    double value;
};

struct ExpansionReport {
    std::string graph;
    double p = 0.0;
    int order = 0;
    std::vector<std::vector<double>> pi;   // pi[i][x], i = 0..order
    std::vector<double> Pi;                // alternating sum, per site
    std::vector<double> R;                 // R^(order+1), per site
    std::vector<double> residual;          // identity defect, per site
    double residual_max = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
    std::vector<NamedMargin> margins;      // ferromagnetic bound slacks
};

enum class SourceEvent { E, EPrime, EDoublePrime };

class Expansion {
public:
    Expansion(const GraphSpec& g, double p,
              EnumerationBudget budget = EnumerationBudget::from_env());

    const GraphSpec& graph() const { return *g_; }
    double inverse_temperature() const { return p_; }
    SpinCache& spins() { return spins_; }
    const PairClassTable& table(SiteMask A);

    // Theta operators.  A is the through-set; the optional functional is
    // evaluated on the combined positivity mask.
    double theta(int v, int x, SiteMask A);
    double theta_prime(int z, int x, SiteMask A);
    double theta_dprime(int z, int x, int v, SiteMask A);
    double theta_functional(int v, int x, SiteMask A,
                            const std::function<double(BondMask)>& f,
                            SourceEvent event = SourceEvent::E, int event_site = -1);

    double pi0(int x);
    double pi_j(int j, int x);
    double R_j(int j, int x);              // j >= 1

    // Full two-point function (spin oracle, cached).
    double G(int x, int y);

    // residual(x) of  <phi_o phi_x> = Pi^(j) + sum Pi^(j) tau G + (-1)^{j+1} R^(j+1).
    ExpansionReport verify_lace_identity(int j, double tolerance = 1e-9);

    // LHS - RHS of the through-A difference identity.
    double through_identity_residual(SiteMask A, int v, int x);

    // Number of table builds performed (budget accounting).
    double states_visited() const { return states_visited_; }

private:
    double nested_level(bool remainder, int last, int level, int v, SiteMask A, int x,
                        std::unordered_map<std::uint64_t, double>& memo);
    bool event_cached(SourceEvent kind, BondMask pos, int v, int t, int aux, SiteMask A);

    const GraphSpec* g_;
    double p_;
    EnumerationBudget budget_;
    SpinCache spins_;
    SiteMask all_sites_;
    std::vector<double> tau_;              // tanh(p J_b) per bond
    std::unordered_map<SiteMask, PairClassTable> tables_;
    std::unordered_map<std::uint64_t, bool> event_cache_;
    double states_visited_ = 0.0;
};

// Bisection solve of tau(p) * sum_x Pi^(j)_p(x) = 1 on [0, p_max]; returns
// nothing when the equation has no root there (finite graphs may have none).
std::optional<double> critical_point_heuristic(const GraphSpec& g, int j, double p_max = 4.0,
                                               int scan_points = 64, double tol = 1e-10);

} // namespace lacelab
