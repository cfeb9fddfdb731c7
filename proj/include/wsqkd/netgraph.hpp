#ifndef WSQKD_NETGRAPH_HPP
#define WSQKD_NETGRAPH_HPP

// Wavelength-saving routing plans: 2N+1 nodes served by N wavelengths.
//
// The complete graph K_{2N+1} splits into N edge-disjoint Hamiltonian cycles.
// Each cycle is oriented and assigned one wavelength; the passive router then
// forwards wavelength k arriving on port p to the successor of p on cycle k.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsqkd {

struct NodeId {
    std::size_t index = 0;
    auto operator<=>(const NodeId&) const = default;
};

struct WavelengthChannel {
    std::size_t index = 0;
    double nominal_nm = 0.0;  // display only
    auto operator<=>(const WavelengthChannel&) const = default;
};

// Port i of the router serves node i.
struct DirectedLink {
    NodeId src;
    NodeId dst;
    WavelengthChannel wavelength;
    std::size_t router_in_port = 0;
    std::size_t router_out_port = 0;
    bool operator==(const DirectedLink&) const = default;
};

struct NetworkPlan {
    std::size_t n_wavelengths = 0;
    std::size_t node_count = 0;
    std::vector<std::vector<std::size_t>> cycles;  // cycles[k] carries wavelength k
    std::vector<WavelengthChannel> wavelengths;
    std::vector<DirectedLink> links;
    std::vector<std::string> labels;
    bool operator==(const NetworkPlan&) const = default;
};

struct PortPermutation {
    WavelengthChannel wavelength;
    std::vector<std::size_t> mapping;  // mapping[p] = exit port for entry port p
};

enum class Role { transmit, receive };

struct ScheduleEntry {
    WavelengthChannel wavelength;
    Role role = Role::transmit;
    NodeId peer;
    bool operator==(const ScheduleEntry&) const = default;
};

struct PlanViolation {
    std::string invariant;  // "hamiltonicity", "edge-disjointness", ...
    std::string detail;
};

/// Spreadsheet-style labels: 0 -> "A", 25 -> "Z", 26 -> "AA".
inline std::string default_label(std::size_t index) {
    std::string out;
    std::size_t n = index + 1;
    while (n > 0) {
        const std::size_t rem = (n - 1) % 26;
        out.insert(out.begin(), static_cast<char>('A' + rem));
        n = (n - 1) / 26;
    }
    return out;
}

inline std::vector<double> default_wavelengths_nm(std::size_t n_wavelengths) {
    std::vector<double> nm(n_wavelengths);
    for (std::size_t k = 0; k < n_wavelengths; ++k) {
        nm[k] = 1530.0 + 20.0 * static_cast<double>(k);
    }
    return nm;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> undirected(std::size_t a, std::size_t b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

inline void require_node(const NetworkPlan& plan, NodeId n) {
    if (n.index >= plan.node_count) {
        throw std::out_of_range("unknown node " + std::to_string(n.index) + " (plan has " +
                                std::to_string(plan.node_count) + " nodes)");
    }
}

inline void require_wavelength(const NetworkPlan& plan, std::size_t w) {
    if (w >= plan.cycles.size() || w >= plan.wavelengths.size()) {
        throw std::out_of_range("unknown wavelength index " + std::to_string(w));
    }
}

}  // namespace detail

/// Fill `links` from `cycles` and `wavelengths`. Used by build_plan and by
/// callers that assemble plans by hand (e.g. to test validate_plan).
inline void derive_links(NetworkPlan& plan) {
    plan.links.clear();
    for (std::size_t k = 0; k < plan.cycles.size(); ++k) {
        const auto& cyc = plan.cycles[k];
        const WavelengthChannel ch =
            k < plan.wavelengths.size() ? plan.wavelengths[k] : WavelengthChannel{k, 0.0};
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            const std::size_t a = cyc[i];
            const std::size_t b = cyc[(i + 1) % cyc.size()];
            plan.links.push_back(DirectedLink{NodeId{a}, NodeId{b}, ch, a, b});
        }
    }
}

/// Walecki construction. Node 0 is the hub; nodes 1..2N hold Z_{2N} (value i
/// at node i+1). Cycle k visits hub, k, k+1, k-1, k+2, k-2, ..., k+N.
inline NetworkPlan build_plan(std::size_t n_wavelengths, std::vector<double> nominal_nm = {}) {
    if (n_wavelengths == 0) {
        throw std::invalid_argument("build_plan: at least one wavelength is required (N >= 1)");
    }
    if (nominal_nm.empty()) {
        nominal_nm = default_wavelengths_nm(n_wavelengths);
    }
    if (nominal_nm.size() != n_wavelengths) {
        throw std::invalid_argument("build_plan: expected " + std::to_string(n_wavelengths) +
                                    " nominal wavelengths, got " + std::to_string(nominal_nm.size()));
    }
    for (std::size_t k = 1; k < nominal_nm.size(); ++k) {
        if (!(nominal_nm[k] > nominal_nm[k - 1])) {
            throw std::invalid_argument("build_plan: nominal wavelengths must be strictly increasing");
        }
    }

    const std::size_t n = n_wavelengths;
    const std::size_t ring = 2 * n;
    NetworkPlan plan;
    plan.n_wavelengths = n;
    plan.node_count = ring + 1;
    for (std::size_t k = 0; k < n; ++k) {
        plan.wavelengths.push_back(WavelengthChannel{k, nominal_nm[k]});
        std::vector<std::size_t> cyc{0};
        for (std::size_t j = 0; j < ring; ++j) {
            // offsets 0, +1, -1, +2, -2, ..., +N
            const std::size_t step = (j + 1) / 2;
            const std::size_t z = (j % 2 == 1) ? (k + step) % ring : (k + ring - step) % ring;
            cyc.push_back(z + 1);
        }
        plan.cycles.push_back(std::move(cyc));
    }
    for (std::size_t i = 0; i < plan.node_count; ++i) {
        plan.labels.push_back(default_label(i));
    }
    derive_links(plan);
    return plan;
}

/// Plan for an explicit node count. Only odd counts decompose.
inline NetworkPlan plan_for_nodes(std::size_t node_count) {
    if (node_count < 3) {
        throw std::invalid_argument("plan_for_nodes: need at least 3 nodes");
    }
    if (node_count % 2 == 0) {
        throw std::invalid_argument(
            "plan_for_nodes: " + std::to_string(node_count) +
            " nodes cannot be decomposed into Hamiltonian cycles (even complete graph); plan for " +
            std::to_string(node_count + 1) + " nodes with " + std::to_string(node_count / 2) +
            " wavelengths and leave one router port unused");
    }
    return build_plan((node_count - 1) / 2);
}

inline std::vector<PlanViolation> validate_plan(const NetworkPlan& plan) {
    std::vector<PlanViolation> out;
    auto violate = [&out](std::string inv, std::string detail) {
        out.push_back(PlanViolation{std::move(inv), std::move(detail)});
    };
    const std::size_t nodes = plan.node_count;

    if (nodes != 2 * plan.n_wavelengths + 1) {
        violate("node-count", "node_count " + std::to_string(nodes) + " != 2N+1 with N=" +
                                  std::to_string(plan.n_wavelengths));
    }
    if (plan.cycles.size() != plan.n_wavelengths) {
        violate("cycle-count", std::to_string(plan.cycles.size()) + " cycles for N=" +
                                   std::to_string(plan.n_wavelengths));
    }

    // Hamiltonicity
    for (std::size_t k = 0; k < plan.cycles.size(); ++k) {
        const auto& cyc = plan.cycles[k];
        std::vector<int> seen(nodes, 0);
        bool bad_index = false;
        for (std::size_t v : cyc) {
            if (v >= nodes) {
                bad_index = true;
            } else {
                ++seen[v];
            }
        }
        std::vector<std::string> problems;
        if (bad_index) {
            problems.push_back("contains out-of-range node");
        }
        for (std::size_t v = 0; v < nodes; ++v) {
            if (seen[v] == 0) {
                problems.push_back("omits node " + std::to_string(v));
            } else if (seen[v] > 1) {
                problems.push_back("repeats node " + std::to_string(v));
            }
        }
        if (!problems.empty()) {
            std::string detail = "cycle " + std::to_string(k) + ":";
            for (const auto& p : problems) {
                detail += " " + p + ";";
            }
            violate("hamiltonicity", detail);
        }
    }

    // Edge-disjointness and coverage of K_n
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> owner;
    for (std::size_t k = 0; k < plan.cycles.size(); ++k) {
        const auto& cyc = plan.cycles[k];
        for (std::size_t i = 0; i < cyc.size(); ++i) {
            const std::size_t a = cyc[i];
            const std::size_t b = cyc[(i + 1) % cyc.size()];
            if (a == b) {
                violate("self-loop", "cycle " + std::to_string(k) + " has self-loop at " + std::to_string(a));
                continue;
            }
            owner[detail::undirected(a, b)].push_back(k);
        }
    }
    for (const auto& [edge, cycles] : owner) {
        if (cycles.size() > 1) {
            std::string detail = "edge {" + std::to_string(edge.first) + "," + std::to_string(edge.second) +
                                 "} used by cycles";
            for (std::size_t c : cycles) {
                detail += " " + std::to_string(c);
            }
            violate("edge-disjointness", detail);
        }
    }
    for (std::size_t a = 0; a < nodes; ++a) {
        for (std::size_t b = a + 1; b < nodes; ++b) {
            if (!owner.contains({a, b})) {
                violate("coverage", "pair {" + std::to_string(a) + "," + std::to_string(b) + "} not served");
            }
        }
    }

    // Links: one per unordered pair, consistent ports, degree 1 per wavelength.
    std::map<std::pair<std::size_t, std::size_t>, int> pair_links;
    std::map<std::pair<std::size_t, std::size_t>, int> out_deg;  // (node, wavelength)
    std::map<std::pair<std::size_t, std::size_t>, int> in_deg;
    for (const auto& link : plan.links) {
        const std::size_t a = link.src.index;
        const std::size_t b = link.dst.index;
        const std::size_t w = link.wavelength.index;
        if (a == b) {
            violate("link-endpoints", "self link at node " + std::to_string(a));
            continue;
        }
        if (a >= nodes || b >= nodes) {
            violate("link-endpoints", "link references unknown node");
            continue;
        }
        if (link.router_in_port != a || link.router_out_port != b) {
            violate("router-ports", "link " + std::to_string(a) + "->" + std::to_string(b) +
                                        " uses ports " + std::to_string(link.router_in_port) + "->" +
                                        std::to_string(link.router_out_port));
        }
        ++pair_links[detail::undirected(a, b)];
        ++out_deg[{a, w}];
        ++in_deg[{b, w}];
    }
    for (std::size_t a = 0; a < nodes; ++a) {
        for (std::size_t b = a + 1; b < nodes; ++b) {
            const auto it = pair_links.find({a, b});
            const int count = it == pair_links.end() ? 0 : it->second;
            if (count != 1) {
                violate("pair-links", "pair {" + std::to_string(a) + "," + std::to_string(b) + "} has " +
                                          std::to_string(count) + " links");
            }
        }
    }
    for (std::size_t v = 0; v < nodes; ++v) {
        for (std::size_t w = 0; w < plan.n_wavelengths; ++w) {
            const int o = out_deg.contains({v, w}) ? out_deg[{v, w}] : 0;
            const int i = in_deg.contains({v, w}) ? in_deg[{v, w}] : 0;
            if (o != 1 || i != 1) {
                violate("degree", "node " + std::to_string(v) + " wavelength " + std::to_string(w) +
                                      ": out " + std::to_string(o) + ", in " + std::to_string(i));
            }
        }
    }
    return out;
}

inline DirectedLink route_lookup(const NetworkPlan& plan, NodeId a, NodeId b) {
    detail::require_node(plan, a);
    detail::require_node(plan, b);
    if (a == b) {
        throw std::invalid_argument("route_lookup: no self link");
    }
    for (const auto& link : plan.links) {
        if ((link.src == a && link.dst == b) || (link.src == b && link.dst == a)) {
            return link;
        }
    }
    throw std::out_of_range("route_lookup: pair not served by plan");
}

inline PortPermutation router_permutation(const NetworkPlan& plan, std::size_t wavelength) {
    detail::require_wavelength(plan, wavelength);
    PortPermutation perm{plan.wavelengths[wavelength], std::vector<std::size_t>(plan.node_count)};
    const auto& cyc = plan.cycles[wavelength];
    for (std::size_t i = 0; i < cyc.size(); ++i) {
        perm.mapping.at(cyc[i]) = cyc[(i + 1) % cyc.size()];
    }
    return perm;
}

/// Transmit and receive duties of one node, ordered by wavelength, tx before rx.
inline std::vector<ScheduleEntry> node_schedule(const NetworkPlan& plan, NodeId a) {
    detail::require_node(plan, a);
    std::vector<ScheduleEntry> out;
    for (std::size_t w = 0; w < plan.cycles.size(); ++w) {
        for (const auto& link : plan.links) {
            if (link.wavelength.index == w && link.src == a) {
                out.push_back(ScheduleEntry{link.wavelength, Role::transmit, link.dst});
            }
        }
        for (const auto& link : plan.links) {
            if (link.wavelength.index == w && link.dst == a) {
                out.push_back(ScheduleEntry{link.wavelength, Role::receive, link.src});
            }
        }
    }
    return out;
}

/// The five-node routing rule used in the field deployment, labels A..E as
/// indices 0..4: wavelength 0 is the pentagon, wavelength 1 the pentagram.
inline std::vector<std::vector<std::size_t>> reference_five_node_rule() {
    return {{0, 1, 2, 3, 4}, {0, 2, 4, 1, 3}};
}

/// Search for a node relabeling sigma with sigma(plan.cycles[k]) equal to
/// reference[k] as directed cycles, wavelength order fixed. Returns sigma
/// (plan index -> reference index). Brute force; meant for small plans.
inline std::optional<std::vector<std::size_t>> find_relabeling(
    const NetworkPlan& plan, const std::vector<std::vector<std::size_t>>& reference) {
    if (reference.size() != plan.cycles.size()) {
        return std::nullopt;
    }
    auto successor_sets = [](const std::vector<std::vector<std::size_t>>& cycles, std::size_t nodes) {
        std::vector<std::vector<std::size_t>> succ(cycles.size(), std::vector<std::size_t>(nodes, nodes));
        for (std::size_t k = 0; k < cycles.size(); ++k) {
            for (std::size_t i = 0; i < cycles[k].size(); ++i) {
                const std::size_t a = cycles[k][i];
                const std::size_t b = cycles[k][(i + 1) % cycles[k].size()];
                if (a < nodes) {
                    succ[k][a] = b;
                }
            }
        }
        return succ;
    };
    const std::size_t nodes = plan.node_count;
    const auto mine = successor_sets(plan.cycles, nodes);
    const auto ref = successor_sets(reference, nodes);
    std::vector<std::size_t> sigma(nodes);
    std::iota(sigma.begin(), sigma.end(), std::size_t{0});
    do {
        bool ok = true;
        for (std::size_t k = 0; k < mine.size() && ok; ++k) {
            for (std::size_t v = 0; v < nodes && ok; ++v) {
                if (mine[k][v] >= nodes || ref[k][sigma[v]] != sigma[mine[k][v]]) {
                    ok = false;
                }
            }
        }
        if (ok) {
            return sigma;
        }
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    return std::nullopt;
}

/// Tab-separated link table: src, dst, wavelength index, nominal nm.
inline std::string export_links_text(const NetworkPlan& plan) {
    std::ostringstream os;
    os << "# src\tdst\twavelength\tnominal_nm\n";
    for (const auto& link : plan.links) {
        os << plan.labels.at(link.src.index) << '\t' << plan.labels.at(link.dst.index) << '\t'
           << link.wavelength.index << '\t' << link.wavelength.nominal_nm << '\n';
    }
    return os.str();
}

inline std::string export_dot(const NetworkPlan& plan) {
    static const char* const palette[] = {"blue", "red", "darkgreen", "orange", "purple", "brown", "magenta", "gray"};
    std::ostringstream os;
    os << "digraph wsqkd_plan {\n";
    for (std::size_t v = 0; v < plan.node_count; ++v) {
        os << "  \"" << plan.labels.at(v) << "\";\n";
    }
    for (const auto& link : plan.links) {
        os << "  \"" << plan.labels.at(link.src.index) << "\" -> \"" << plan.labels.at(link.dst.index)
           << "\" [label=\"w" << link.wavelength.index << " " << link.wavelength.nominal_nm
           << "nm\", color=" << palette[link.wavelength.index % 8] << "];\n";
    }
    os << "}\n";
    return os.str();
}

inline std::optional<NodeId> find_label(const NetworkPlan& plan, const std::string& label) {
    for (std::size_t i = 0; i < plan.labels.size(); ++i) {
        if (plan.labels[i] == label) {
            return NodeId{i};
        }
    }
    return std::nullopt;
}

}  // namespace wsqkd

#endif  // WSQKD_NETGRAPH_HPP
