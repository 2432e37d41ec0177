#include "lacelab/graph.hpp"
#include "lacelab/kahan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace lacelab {

bool GraphSpec::ferromagnetic() const {
    return std::all_of(coupling.begin(), coupling.end(), [](double J) { return J >= 0.0; });
}

int GraphSpec::bond_between(int u, int v) const {
    for (int b = 0; b < n_bonds(); ++b) {
        if ((bonds[b].u == u && bonds[b].v == v) || (bonds[b].u == v && bonds[b].v == u)) return b;
    }
    return -1;
}

DirectedBond GraphSpec::directed(int bond, int orientation) const {
    const Bond& b = bonds[bond];
    if (orientation == 0) return {bond, b.u, b.v};
    return {bond, b.v, b.u};
}

std::vector<DirectedBond> GraphSpec::directed_bonds() const {
    std::vector<DirectedBond> out;
    out.reserve(2 * bonds.size());
    for (int b = 0; b < n_bonds(); ++b) {
        out.push_back(directed(b, 0));
        out.push_back(directed(b, 1));
    }
    return out;
}

double GraphSpec::squared_distance(int x, int y) const {
    if (coords.empty()) throw ConfigError("graph '" + name + "' carries no coordinates");
    double r2 = 0.0;
    for (std::size_t i = 0; i < coords[x].size(); ++i) {
        const double d = coords[x][i] - coords[y][i];
        r2 += d * d;
    }
    return r2;
}

void GraphSpec::finalize() {
    if (n_sites <= 0 || n_sites > 31) {
        throw ConfigError("graph '" + name + "': site count " + std::to_string(n_sites) +
                          " out of range [1,31]");
    }
    if (coupling.size() != bonds.size()) {
        throw ConfigError("graph '" + name + "': bond list and coupling map differ in size");
    }
    if (origin < 0 || origin >= n_sites) {
        throw ConfigError("graph '" + name + "': origin not a listed site");
    }
    std::set<std::pair<int, int>> seen;
    for (const Bond& b : bonds) {
        if (b.u == b.v) throw ConfigError("graph '" + name + "': self-loop at site " + std::to_string(b.u));
        if (b.u < 0 || b.u >= n_sites || b.v < 0 || b.v >= n_sites) {
            throw ConfigError("graph '" + name + "': bond endpoint out of range");
        }
        auto key = std::minmax(b.u, b.v);
        if (!seen.insert(key).second) {
            throw ConfigError("graph '" + name + "': duplicate bond {" + std::to_string(b.u) + "," +
                              std::to_string(b.v) + "}");
        }
    }
    if (!coords.empty() && static_cast<int>(coords.size()) != n_sites) {
        throw ConfigError("graph '" + name + "': coordinate list size mismatch");
    }

    endpoint_mask.assign(bonds.size(), 0);
    incident.assign(n_sites, {});
    for (int b = 0; b < n_bonds(); ++b) {
        endpoint_mask[b] = site_bit(bonds[b].u) | site_bit(bonds[b].v);
        incident[bonds[b].u].push_back({b, bonds[b].u, bonds[b].v});
        incident[bonds[b].v].push_back({b, bonds[b].v, bonds[b].u});
    }
}

double tau_bond(double p, double J) {
    if (p < 0) throw ConfigError("tau_bond: inverse temperature must be nonnegative");
    return std::tanh(p * J);
}

StepDistribution step_distribution(const GraphSpec& g, double p) {
    if (p < 0) throw ConfigError("step_distribution: inverse temperature must be nonnegative");
    StepDistribution s;
    KahanSum tau;
    for (const DirectedBond& db : g.incident[g.origin]) {
        s.sites.push_back(db.head);
        tau.add(std::tanh(p * g.coupling[db.bond]));
    }
    s.tau_total = tau.value();
    if (s.tau_total == 0.0) {
        s.defined = false;
        return s;
    }
    s.defined = true;
    KahanSum sig;
    for (const DirectedBond& db : g.incident[g.origin]) {
        const double D = std::tanh(p * g.coupling[db.bond]) / s.tau_total;
        s.D.push_back(D);
        sig.add(g.squared_distance(g.origin, db.head) * D);
    }
    s.sigma2 = sig.value();
    return s;
}

namespace {

std::vector<int> box_coord(int index, int d, int side) {
    std::vector<int> c(d);
    for (int i = 0; i < d; ++i) {
        c[i] = index % side;
        index /= side;
    }
    return c;
}

int box_index(const std::vector<int>& c, int side) {
    int idx = 0;
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) idx = idx * side + c[i];
    return idx;
}

double spread_out_coupling(int d, int L) {
    // Uniform over 0 < ||x||_inf <= L, normalized by the full Z^d count.
    const double count = std::pow(2.0 * L + 1.0, d) - 1.0;
    return 1.0 / count;
}

} // namespace

GraphSpec build_box_graph(CouplingKind kind, int d, int side, int L,
                          const EnumerationBudget& budget, bool enforce_budget) {
    if (d < 1 || side < 1) throw ConfigError("build_box_graph: need d >= 1 and side >= 1");
    if (kind == CouplingKind::SpreadOutUniform && !(L >= 1 && L < side)) {
        throw ConfigError("build_box_graph: spread-out range needs 1 <= L < side");
    }
    if (kind == CouplingKind::Custom) throw ConfigError("build_box_graph: custom graphs use build_custom_graph");

    GraphSpec g;
    g.name = (kind == CouplingKind::NearestNeighbor ? "box-nn" : "box-spread");
    double sites = std::pow(static_cast<double>(side), d);
    if (sites > 31) throw ConfigError("build_box_graph: box has more than 31 sites");
    g.n_sites = static_cast<int>(sites);
    g.origin = 0;
    for (int i = 0; i < g.n_sites; ++i) g.coords.push_back(box_coord(i, d, side));

    const int range = (kind == CouplingKind::NearestNeighbor) ? 1 : L;
    const double J_spread = spread_out_coupling(d, L);
    for (int i = 0; i < g.n_sites; ++i) {
        for (int j = i + 1; j < g.n_sites; ++j) {
            int linf = 0;
            long l1 = 0;
            for (int k = 0; k < d; ++k) {
                const int diff = std::abs(g.coords[i][k] - g.coords[j][k]);
                linf = std::max(linf, diff);
                l1 += diff;
            }
            if (kind == CouplingKind::NearestNeighbor) {
                if (l1 == 1) {
                    g.bonds.push_back({i, j});
                    g.coupling.push_back(1.0);
                }
            } else if (linf >= 1 && linf <= range) {
                g.bonds.push_back({i, j});
                g.coupling.push_back(J_spread);
            }
        }
    }
    g.finalize();
    if (enforce_budget) budget.require_single_sweep(g.n_bonds(), "build_box_graph");
    return g;
}

GraphSpec build_stencil_graph(CouplingKind kind, int d, int L) {
    if (d < 1) throw ConfigError("build_stencil_graph: need d >= 1");
    GraphSpec g;
    g.name = (kind == CouplingKind::NearestNeighbor ? "stencil-nn" : "stencil-spread");
    g.origin = 0;
    g.n_sites = 1;
    g.coords.push_back(std::vector<int>(d, 0));
    const int range = (kind == CouplingKind::NearestNeighbor) ? 1 : L;
    const double J = (kind == CouplingKind::NearestNeighbor) ? 1.0 : spread_out_coupling(d, L);

    // Enumerate the neighborhood offsets.
    std::vector<int> offset(d, -range);
    while (true) {
        int linf = 0;
        long l1 = 0;
        for (int k = 0; k < d; ++k) {
            linf = std::max(linf, std::abs(offset[k]));
            l1 += std::abs(offset[k]);
        }
        const bool keep = (kind == CouplingKind::NearestNeighbor) ? (l1 == 1) : (linf >= 1);
        if (keep) {
            if (g.n_sites >= 31) throw ConfigError("build_stencil_graph: neighborhood too large for a graph");
            g.coords.push_back(offset);
            g.bonds.push_back({0, g.n_sites});
            g.coupling.push_back(J);
            ++g.n_sites;
        }
        int k = 0;
        while (k < d && offset[k] == range) offset[k++] = -range;
        if (k == d) break;
        ++offset[k];
    }
    g.finalize();
    return g;
}

GraphSpec build_custom_graph(std::string name, int n_sites, std::vector<std::array<int, 2>> edges,
                             std::vector<double> couplings, int origin,
                             std::vector<std::vector<int>> coords) {
    GraphSpec g;
    g.name = std::move(name);
    g.n_sites = n_sites;
    for (const auto& e : edges) g.bonds.push_back({e[0], e[1]});
    g.coupling = std::move(couplings);
    g.origin = origin;
    g.coords = std::move(coords);
    g.finalize();
    return g;
}

namespace {

std::vector<CatalogEntry> make_catalog() {
    std::vector<GraphSpec> graphs;

    graphs.push_back(build_custom_graph("single-bond", 2, {{{0, 1}}}, {1.0}, 0, {{0}, {1}}));
    graphs.push_back(build_custom_graph("path-3", 3, {{{0, 1}, {1, 2}}}, {1.0, 1.0}, 0, {{0}, {1}, {2}}));
    graphs.push_back(build_custom_graph("triangle", 3, {{{0, 1}, {0, 2}, {1, 2}}}, {1.0, 1.0, 1.0}, 0,
                                        {{0, 0}, {1, 0}, {0, 1}}));
    graphs.push_back(build_custom_graph("square", 4, {{{0, 1}, {1, 2}, {2, 3}, {3, 0}}},
                                        {1.0, 1.0, 1.0, 1.0}, 0, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    graphs.push_back(build_custom_graph("square-diag", 4, {{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}},
                                        {1.0, 1.0, 1.0, 1.0, 1.0}, 0, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    graphs.push_back(build_custom_graph("K4", 4,
                                        {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}},
                                        {1.0, 1.0, 1.0, 1.0, 1.0, 1.0}, 0,
                                        {{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    GraphSpec b22 = build_box_graph(CouplingKind::NearestNeighbor, 2, 2);
    b22.name = "box-2x2";
    graphs.push_back(b22);

    // 2x3 box: sides (2,3) rather than a cube; built by hand from coordinates.
    {
        GraphSpec g;
        g.name = "box-2x3";
        g.n_sites = 6;
        g.origin = 0;
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 2; ++x) g.coords.push_back({x, y});
        for (int i = 0; i < 6; ++i) {
            for (int j = i + 1; j < 6; ++j) {
                const int dx = std::abs(g.coords[i][0] - g.coords[j][0]);
                const int dy = std::abs(g.coords[i][1] - g.coords[j][1]);
                if (dx + dy == 1) {
                    g.bonds.push_back({i, j});
                    g.coupling.push_back(1.0);
                }
            }
        }
        g.finalize();
        graphs.push_back(g);
    }

    std::vector<CatalogEntry> entries;
    for (auto& g : graphs) {
        CatalogEntry e;
        e.single_sweep_states = std::pow(3.0, g.n_bonds());
        e.pair_sweep_states = std::pow(9.0, g.n_bonds());
        e.graph = std::move(g);
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace

const std::vector<CatalogEntry>& builtin_catalog() {
    static const std::vector<CatalogEntry> catalog = make_catalog();
    return catalog;
}

const GraphSpec& catalog_graph(const std::string& name) {
    for (const CatalogEntry& e : builtin_catalog()) {
        if (e.graph.name == name) return e.graph;
    }
    throw ConfigError("unknown catalog graph '" + name + "'");
}

std::vector<GraphSpec> load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open graph file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("graph file '" + path + "': " + e.what());
    }
    if (!doc.is_array()) throw ConfigError("graph file '" + path + "': expected a JSON array");

    std::vector<GraphSpec> out;
    for (const auto& item : doc) {
        GraphSpec g;
        g.name = item.value("name", std::string("unnamed"));
        const auto& sites = item.at("sites");
        if (sites.is_number_integer()) {
            g.n_sites = sites.get<int>();
        } else if (sites.is_array()) {
            g.n_sites = static_cast<int>(sites.size());
        } else {
            throw ConfigError("graph '" + g.name + "': sites must be a count or a list");
        }
        for (const auto& bond : item.at("bonds")) {
            if (!bond.is_array() || bond.size() < 3) {
                throw ConfigError("graph '" + g.name + "': bonds must be [u,v,J] triples");
            }
            g.bonds.push_back({bond[0].get<int>(), bond[1].get<int>()});
            g.coupling.push_back(bond[2].get<double>());
        }
        g.origin = item.value("origin", 0);
        if (item.contains("coords")) g.coords = item["coords"].get<std::vector<std::vector<int>>>();
        g.finalize();
        out.push_back(std::move(g));
    }
    return out;
}

GraphSpec resolve_graph(const std::string& ref) {
    for (const CatalogEntry& e : builtin_catalog()) {
        if (e.graph.name == ref) return e.graph;
    }
    std::ifstream probe(ref);
    if (!probe) throw ConfigError("graph reference '" + ref + "' is neither a catalog name nor a readable file");
    probe.close();
    auto graphs = load_graph_file(ref);
    if (graphs.empty()) throw ConfigError("graph file '" + ref + "' contains no graphs");
    return graphs.front();
}

} // namespace lacelab
