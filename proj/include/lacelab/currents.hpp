#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lacelab/budget.hpp"
#include "lacelab/graph.hpp"

namespace lacelab {

// Exact random-current representation.  Integer currents are marginalized
// bond-by-bond into three classes; every indicator the expansion evaluates
// reads a current only through per-bond parity and positivity, so the
// reduction is lossless:
//
//   Zero          weight 1
//   EvenPositive  weight cosh(pJ_b) - 1
//   Odd           weight sinh(pJ_b)
//
// Sweeps run in mixed-radix lexicographic order over the bond index, so the
// visiting order (and therefore every compensated sum) is reproducible.

enum class BondState : std::uint8_t { Zero = 0, EvenPositive = 1, Odd = 2 };

struct CurrentClass {
    std::vector<BondState> states;
    BondMask support = 0;       // bonds allowed to carry current
    BondMask positivity() const;
};

struct BondWeights {
    double even_positive;       // cosh(pJ) - 1
    double odd;                 // sinh(pJ)
};

std::vector<BondWeights> bond_class_weights(const GraphSpec& g, double p);

// Bonds with both endpoints inside `sites` (the support of a current
// restricted to a sub-site-set).
BondMask bonds_within(const GraphSpec& g, SiteMask sites);

// Source set (odd-degree sites) of a per-bond parity assignment.
SiteMask sources_of(const GraphSpec& g, const CurrentClass& c);

// Visits every current class on `support` with the given source set.
// Visitor signature: void(const CurrentClass&, double weight, BondMask pos).
using CurrentVisitor = std::function<void(const CurrentClass&, double, BondMask)>;
void enumerate_currents(const GraphSpec& g, double p, BondMask support, SiteMask sources,
                        const CurrentVisitor& visit,
                        const EnumerationBudget& budget = EnumerationBudget::from_env());

// Total weight of all current classes with the given source set (the
// unnormalized partition-style sum; equals the spin-oracle Z for empty
// sources on full support).
double current_weight_sum(const GraphSpec& g, double p, BondMask support, SiteMask sources,
                          const EnumerationBudget& budget = EnumerationBudget::from_env());

double two_point_via_currents(const GraphSpec& g, double p, int x, int y,
                              const EnumerationBudget& budget = EnumerationBudget::from_env());

// Coupled pair (m, n): m lives on the bonds inside A^c, n on all bonds.
// The visitor receives the normalized weight
// w_{A^c}(m) w_Lambda(n) / (Z_{A^c} Z_Lambda), the combined positivity mask
// and both parity masks.  m sweeps outer, n inner, both lexicographic.
struct CurrentPairView {
    const CurrentClass* m;
    const CurrentClass* n;
    double weight;              // normalized
    BondMask positivity;        // (m_b != 0) or (n_b != 0)
    BondMask parity_m;          // bit set where m_b is odd
    BondMask parity_n;
};
using PairVisitor = std::function<void(const CurrentPairView&)>;
void enumerate_current_pairs(const GraphSpec& g, double p, SiteMask A, SiteMask sources_m,
                             SiteMask sources_n, const PairVisitor& visit,
                             const EnumerationBudget& budget = EnumerationBudget::from_env());

// Aggregated pair-class table.  For a fixed through-set A it accumulates the
// total unnormalized weight of all pairs (m, n) with dm = 0, grouped by
// (combined positivity mask, source set of n).  Grouping is exact: the five
// per-bond classes (zero; positive with the four parity combinations) carry
// the summed marginal weights of all integer pairs in the class.  Every
// expansion functional is measurable with respect to (positivity, sources),
// so sums against this table reproduce the full 9^bonds pair sweep at
// 5^bonds cost.
class PairClassTable {
public:
    static PairClassTable build(const GraphSpec& g, double p, SiteMask A,
                                const EnumerationBudget& budget = EnumerationBudget::from_env());

    double weight(BondMask pos, SiteMask sources_n) const {
        return w_[(static_cast<std::size_t>(pos) << n_sites_) | sources_n];
    }
    // Z_{A^c} * Z_Lambda: the total weight at empty n-sources.
    double normalizer() const { return norm_; }
    int n_sites() const { return n_sites_; }
    int n_bonds() const { return n_bonds_; }
    SiteMask through_set() const { return amask_; }

private:
    int n_sites_ = 0;
    int n_bonds_ = 0;
    SiteMask amask_ = 0;
    double norm_ = 0.0;
    std::vector<double> w_;
};

} // namespace lacelab
