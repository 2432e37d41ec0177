#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lacelab/budget.hpp"

namespace lacelab {

// Bitsets over sites and bonds.  All exact-enumeration graphs are small
// (site budget 24, bond budget set by the sweep caps), so 32 bits suffice.
using SiteMask = std::uint32_t;
using BondMask = std::uint32_t;

inline SiteMask site_bit(int s) { return SiteMask{1} << s; }
inline BondMask bond_bit(int b) { return BondMask{1} << b; }
inline SiteMask all_sites_mask(int n) { return n >= 32 ? ~SiteMask{0} : (SiteMask{1} << n) - 1; }
inline BondMask all_bonds_mask(int n) { return n >= 32 ? ~BondMask{0} : (BondMask{1} << n) - 1; }

// Undirected bond between two distinct sites.
struct Bond {
    int u = 0;
    int v = 0;
};

// A directed view of a bond: tail -> head.
struct DirectedBond {
    int bond = -1;
    int tail = -1;
    int head = -1;
};

// Finite graph with real couplings and a distinguished origin.  Coordinates
// are optional metadata used for |x| and lattice-symmetry checks only; the
// expansion machinery never looks at them.
struct GraphSpec {
    std::string name;
    int n_sites = 0;
    std::vector<Bond> bonds;
    std::vector<double> coupling;               // J per bond, same indexing as bonds
    int origin = 0;
    std::vector<std::vector<int>> coords;       // per-site Z^d coordinates, may be empty

    // Derived, filled by finalize().
    std::vector<SiteMask> endpoint_mask;        // per bond: bit(u) | bit(v)
    std::vector<std::vector<DirectedBond>> incident; // per site, directed outward

    int n_bonds() const { return static_cast<int>(bonds.size()); }
    bool ferromagnetic() const;
    int bond_between(int u, int v) const;       // -1 when absent
    DirectedBond directed(int bond, int orientation) const;
    std::vector<DirectedBond> directed_bonds() const; // both orientations, bond-major
    double squared_distance(int x, int y) const;      // from coords; requires coords

    // Validates invariants (no self-loops, no duplicates, endpoints and origin
    // in range) and builds the derived tables.  Throws ConfigError on violation.
    void finalize();
};

enum class CouplingKind { NearestNeighbor, SpreadOutUniform, Custom };

// Box {0,...,side-1}^d with free boundary.  NN couplings are J=1; spread-out
// couplings are uniform over 0 < ||x||_inf <= L and normalized by the full
// Z^d neighborhood count (2L+1)^d - 1.  When `enforce_budget` is set the
// builder rejects graphs whose single-current sweep exceeds the budget.
GraphSpec build_box_graph(CouplingKind kind, int d, int side, int L = 1,
                          const EnumerationBudget& budget = EnumerationBudget::from_env(),
                          bool enforce_budget = true);

// One-step neighborhood star of the origin on Z^d, carrying the full-lattice
// coupling of the given kind.  Used for tau, D and sigma^2 of the infinite
// model.
GraphSpec build_stencil_graph(CouplingKind kind, int d, int L = 1);

GraphSpec build_custom_graph(std::string name, int n_sites,
                             std::vector<std::array<int, 2>> edges,
                             std::vector<double> couplings, int origin = 0,
                             std::vector<std::vector<int>> coords = {});

// Single-step distribution quantities tau = sum_x tanh(p J_{o,x}),
// D(x) = tanh(p J_{o,x}) / tau and sigma^2 = sum |x|^2 D(x), read off the
// bonds incident to the origin of the given graph.
struct StepDistribution {
    double tau_total = 0.0;
    bool defined = false;                    // false when tau_total == 0 (e.g. p = 0)
    std::vector<int> sites;                  // neighbor sites of the origin
    std::vector<double> D;                   // D per neighbor, same order
    double sigma2 = 0.0;
};

double tau_bond(double p, double J);
StepDistribution step_distribution(const GraphSpec& g, double p);

// Built-in graph catalog used by all verification suites.
struct CatalogEntry {
    GraphSpec graph;
    double single_sweep_states;
    double pair_sweep_states;
};

const std::vector<CatalogEntry>& builtin_catalog();
const GraphSpec& catalog_graph(const std::string& name); // throws ConfigError

// UTF-8 JSON array of {name, sites, bonds:[[u,v,J],...], origin}.  `sites` is
// either a site count or a list of identifiers.
std::vector<GraphSpec> load_graph_file(const std::string& path);

// Resolves a --graph argument: catalog name first, then a file containing
// exactly one graph (or one whose name matches `name_in_file`).
GraphSpec resolve_graph(const std::string& ref);

} // namespace lacelab
