#pragma once

#include <vector>

#include "lacelab/graph.hpp"

namespace lacelab {

// Percolation-style events on a positivity mask: bit b set means the
// (combined) current on bond b is positive.  All operations are pure.
//
// Connectivity "in W" restricts paths to bonds whose endpoints both lie in
// the site set W; x is connected to itself iff x is in W.
//
// "off b" is implemented as bond deletion.  Connectivity events are monotone
// in bond positivity, so stability of the event under changing the current on
// b is equivalent to the event holding with the bond forced to zero; the
// equivalence is exercised by a unit test over all single-current
// configurations of the triangle.

SiteMask cluster_of(const GraphSpec& g, BondMask pos, int x, SiteMask within,
                    int deleted_bond = -1);

bool connected(const GraphSpec& g, BondMask pos, int x, int y, SiteMask within);

// Connected in the full graph but not inside the complement of A.
bool connected_through(const GraphSpec& g, BondMask pos, int x, int y, SiteMask A);

// Cluster {y : x <-> y with bond b forced to zero}.
SiteMask cluster_off_bond(const GraphSpec& g, BondMask pos, int x, int b);

// Directed bonds pivotal for x <-> y, ordered as they are crossed walking
// from x.  Empty when x and y are not connected.
std::vector<DirectedBond> pivotal_bonds_from(const GraphSpec& g, BondMask pos, int x, int y);

bool doubly_connected(const GraphSpec& g, BondMask pos, int x, int y);

// Source event of the expansion: {v <-> x through A} and no pivotal bond b
// for v <-> x from v has {v <-> tail(b) through A}.
bool event_E(const GraphSpec& g, BondMask pos, int v, int x, SiteMask A);

// E' = {z <-> x through A} and {z doubly connected to x};  E'' adds {z <-> v}.
bool event_Eprime(const GraphSpec& g, BondMask pos, int z, int x, SiteMask A);
bool event_Edoubleprime(const GraphSpec& g, BondMask pos, int z, int x, int v, SiteMask A);

} // namespace lacelab
