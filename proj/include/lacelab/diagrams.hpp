#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lacelab/expansion.hpp"
#include "lacelab/graph.hpp"

namespace lacelab {

using Kernel = Eigen::MatrixXd;

// Thrown when a bubble series has no decay (spectral radius at or above 1).
class SeriesDivergence : public std::runtime_error {
public:
    explicit SeriesDivergence(const std::string& what) : std::runtime_error(what) {}
};

// Bounding-diagram algebra: pair kernels built from two-point functions.
//
// The walk kernel tilde_G, the bubble chain psi and the P/Q families are
// assembled from one chain shape per order j: a path of 2j-1 two-point
// factors with a bubble-chain rung (psi - delta) across each of the j
// overlapping spans.  The primed variants are generated programmatically by
// substituting factor matrices in that shape, so the "2j-1 choices" and the
// two-factor replacement combinatorics are never hand-coded per order.
class DiagramKernels {
public:
    DiagramKernels(const GraphSpec& g, double p);

    const GraphSpec& graph() const { return *g_; }
    int n() const { return n_; }
    const Kernel& G() const { return G_; }
    const Kernel& tilde_G() const { return tG_; }
    double bubble_spectral_radius() const { return radius_; }
    bool psi_convergent() const { return convergent_; }

    // (I - B)^{-1} with B the entrywise square of tilde_G; throws
    // SeriesDivergence when the bubble series has no sum.
    const Kernel& psi() const;
    // Truncated geometric series, for the series/solve agreement check.
    Kernel psi_series(double tol = 1e-14, int cap = 4096) const;

    Kernel P(int j) const;                       // j >= 1
    Kernel P_prime(int j, int u) const;          // j >= 0
    Kernel P_dprime(int j, int u, int v) const;  // j >= 0
    // Series over j with entrywise 1e-14 truncation and a hard cap of 12
    // terms; throws SeriesDivergence when the cap binds.
    Kernel P_prime_sum(int u) const;
    Kernel P_dprime_sum(int u, int v) const;
    Kernel Q_prime(int u) const;
    Kernel Q_dprime(int u, int v) const;

private:
    Kernel chain_value(int j, const std::vector<Kernel>& edges,
                       const std::vector<Kernel>& rungs) const;
    Kernel base_rung() const;                    // psi - delta
    Kernel replaced_edge(int u) const;           // G(.,u) G(u,.)
    Kernel psi_weighted_edge(int v) const;       // sum_v' G(.,v')G(v',.) psi(v',v)
    Kernel split_bubble(int u) const;
    Kernel split_bubble_psi(int v) const;

    const GraphSpec* g_;
    double p_;
    int n_;
    Kernel G_, tG_, bubble_, psi_;
    double radius_ = 0.0;
    bool convergent_ = false;
};

// One inequality instance: margin = rhs - lhs, or an infinite-RHS vacuous
// pass when the bounding series diverges at this p.
struct BoundCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool vacuous = false;
    bool pass(double tol = 1e-9) const { return vacuous || margin >= -tol; }
};

// Bound verification bundle for one (graph, p): builds the kernels once and
// reuses the P'/P''/Q'/Q'' families across every inequality instance.  When
// the bubble series has no sum at this p the affected bounds hold vacuously
// (their right side is a divergent series of nonnegative terms); such checks
// are reported with an infinite margin and a note instead of a number.
class BoundSuite {
public:
    explicit BoundSuite(Expansion& exp);

    bool series_ok() const { return series_ok_; }
    double bubble_radius() const { return kernels_.bubble_spectral_radius(); }
    const std::string& series_note() const { return series_note_; }
    const DiagramKernels& kernels() const { return kernels_; }

    // pi^(j)(x) against its diagrammatic bound: <phi_o phi_x>^3 for j = 0,
    // the P'(0) tau Q'' ... tau Q' pivot-chain contraction for j >= 1.
    std::vector<BoundCheck> diagrammatic(int j);

    // Auxiliary kernel bounds on one (A, y, x, v) instance:
    //   (a) the double-connection-with-branch sum against P'(0),
    //   (b) Theta against (delta + tilde_G) Theta',
    //   (c) Theta[1{y<->v}] against the Theta''/Theta' combination,
    //   (d) Theta' and Theta'' against the P' / P'' sums over u in A.
    std::vector<BoundCheck> aux(SiteMask A, int y, int x, int v);

private:
    BoundCheck vacuous_check(const std::string& name, double lhs) const;
    void ensure_dprime();                             // the N^2 family is built on demand

    Expansion* exp_;
    DiagramKernels kernels_;
    bool series_ok_ = false;
    bool dprime_built_ = false;
    std::string series_note_;
    std::vector<Kernel> p_prime_sum_;                 // per u
    std::vector<std::vector<Kernel>> p_dprime_sum_;   // per (u, v)
    std::vector<Kernel> q_prime_;                     // per u
    std::vector<std::vector<Kernel>> q_dprime_;       // per (u, v)
};

// One-shot wrappers.
std::vector<BoundCheck> verify_diagrammatic_bounds(Expansion& exp, int j);
std::vector<BoundCheck> verify_aux_bounds(Expansion& exp, SiteMask A, int y, int x, int v);

} // namespace lacelab
