#ifndef WSQKD_OPTICS_HPP
#define WSQKD_OPTICS_HPP

// Passive optical layer: M&D units, fibre routes, link budgets and the
// first-order leakage paths that turn other transmitters into crosstalk.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "netgraph.hpp"

namespace wsqkd {

inline constexpr double kSpeedOfLightKmPerNs = 299792.458e-9;
inline constexpr double kInfiniteDb = std::numeric_limits<double>::infinity();

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) {
    return ratio > 0.0 ? 10.0 * std::log10(ratio) : -kInfiniteDb;
}

enum class MndStructure {
    one_cir_two_wdm,  // one 3-port circulator, two N-wavelength WDMs
    one_wdm_n_cir,    // one N-wavelength WDM, N circulators
};

/// Component data. Reflection-type quantities are positive magnitudes in dB;
/// infinity means the mechanism is absent.
struct ComponentSpec {
    double cir_pass_loss_db = 0.6;
    double wdm_pass_loss_db = 0.35;
    double cir_return_loss_db = 50.0;
    double cir_directivity_db = 50.0;
    double connector_reflection_db = 45.0;
    double rayleigh_backscatter_db_per_km = 70.0;  // backscattered/forward, per km of fibre
    double group_index = 1.468;
    MndStructure structure = MndStructure::one_cir_two_wdm;
    bool operator==(const ComponentSpec&) const = default;
};

/// Values below 20 dB are legal but unusual for datasheet parts.
inline std::vector<std::string> component_warnings(const ComponentSpec& spec) {
    std::vector<std::string> out;
    auto check = [&out](double v, const char* name) {
        if (v < 20.0) {
            out.push_back(std::string(name) + " = " + std::to_string(v) + " dB is below the typical 20 dB");
        }
    };
    check(spec.cir_return_loss_db, "cir_return_loss_db");
    check(spec.cir_directivity_db, "cir_directivity_db");
    check(spec.connector_reflection_db, "connector_reflection_db");
    return out;
}

struct MAndDSpec {
    MndStructure structure = MndStructure::one_cir_two_wdm;
    std::size_t n_wavelengths = 0;
    double per_pass_loss_db = 0.0;
};

inline double mnd_pass_loss(const ComponentSpec& spec, MndStructure structure) {
    switch (structure) {
        case MndStructure::one_cir_two_wdm:
            return spec.cir_pass_loss_db + 2.0 * spec.wdm_pass_loss_db;
        case MndStructure::one_wdm_n_cir:
            return spec.wdm_pass_loss_db + spec.cir_pass_loss_db;
    }
    throw std::invalid_argument("mnd_pass_loss: unknown structure");
}

inline MAndDSpec make_mnd(const ComponentSpec& spec, MndStructure structure, std::size_t n_wavelengths) {
    return MAndDSpec{structure, n_wavelengths, mnd_pass_loss(spec, structure)};
}

/// A measured end-to-end path crosses four M&D units; the transmitter-side
/// multiplexer belongs to the transmitter, so three quarters remain.
inline double effective_insertion_loss(double measured_path_loss_db) {
    if (!(measured_path_loss_db >= 0.0)) {
        throw std::invalid_argument("effective_insertion_loss: path loss must be >= 0 dB");
    }
    return 0.75 * measured_path_loss_db;
}

struct FiberSpec {
    double length_km = 0.0;
    std::vector<double> atten_db_per_km;  // indexed by wavelength
    bool operator==(const FiberSpec&) const = default;

    double attenuation(std::size_t wavelength) const {
        if (wavelength >= atten_db_per_km.size()) {
            throw std::out_of_range("fiber has no attenuation for wavelength " + std::to_string(wavelength));
        }
        return atten_db_per_km[wavelength];
    }
};

/// Feeder from a node to its router port. Spans are listed from the node
/// outward; joint positions are measured from the node in km.
struct FiberRoute {
    std::vector<FiberSpec> spans;
    std::vector<double> joints_km;
    bool operator==(const FiberRoute&) const = default;

    double length_km() const {
        double total = 0.0;
        for (const auto& s : spans) {
            total += s.length_km;
        }
        return total;
    }

    /// Loss in dB between positions z0 <= z1 (km from node).
    double loss_between(double z0, double z1, std::size_t wavelength) const {
        double loss = 0.0;
        double start = 0.0;
        for (const auto& s : spans) {
            const double end = start + s.length_km;
            const double lo = std::max(z0, start);
            const double hi = std::min(z1, end);
            if (hi > lo) {
                loss += (hi - lo) * s.attenuation(wavelength);
            }
            start = end;
        }
        return loss;
    }

    double loss_db(std::size_t wavelength) const { return loss_between(0.0, length_km(), wavelength); }

    double delay_ns(double group_index) const { return length_km() * group_index / kSpeedOfLightKmPerNs; }

    /// Linear backscattered power returned to the launch end, for unit power
    /// launched at the node end (from_node) or the router end.
    double rayleigh_return(std::size_t wavelength, double backscatter_per_km, bool from_node) const {
        if (backscatter_per_km <= 0.0) {
            return 0.0;
        }
        std::vector<FiberSpec> order = spans;
        if (!from_node) {
            std::reverse(order.begin(), order.end());
        }
        double total = 0.0;
        double loss_so_far_db = 0.0;
        for (const auto& s : order) {
            const double a = s.attenuation(wavelength);
            // integral over z in [0, L] of 10^(-2 a z / 10)
            double integral = s.length_km;
            if (a > 0.0) {
                const double k = 2.0 * a * std::log(10.0) / 10.0;
                integral = (1.0 - std::exp(-k * s.length_km)) / k;
            }
            total += backscatter_per_km * db_to_linear(-2.0 * loss_so_far_db) * integral;
            loss_so_far_db += a * s.length_km;
        }
        return total;
    }
};

struct LinkBudget {
    double fiber_db = 0.0;
    double effective_insertion_loss_db = 0.0;
    double total_db = 0.0;
    std::optional<double> measured_override_db;

    bool measured() const { return measured_override_db.has_value(); }
};

/// `segments` cover transmitter->router and router->receiver.
inline LinkBudget link_budget(const DirectedLink& link, std::span<const FiberSpec> segments,
                              double il_effective_db, std::optional<double> measured_override_db = {}) {
    LinkBudget b;
    b.effective_insertion_loss_db = il_effective_db;
    b.measured_override_db = measured_override_db;
    if (segments.empty() && !measured_override_db) {
        throw std::invalid_argument("link_budget: no fibre data and no measured attenuation");
    }
    try {
        for (const auto& s : segments) {
            b.fiber_db += s.length_km * s.attenuation(link.wavelength.index);
        }
    } catch (const std::out_of_range&) {
        if (!measured_override_db) {
            throw std::invalid_argument("link_budget: fibre data lacks attenuation for wavelength " +
                                        std::to_string(link.wavelength.index));
        }
        b.fiber_db = std::numeric_limits<double>::quiet_NaN();
    }
    b.total_db = measured_override_db ? *measured_override_db : b.fiber_db + il_effective_db;
    return b;
}

enum class CrosstalkKind { point, continuous };
enum class CrosstalkBand { intraband, interband };
enum class LeakMechanism {
    node_cir_return_loss,
    node_cir_directivity,
    router_cir_return_loss,
    router_cir_directivity,
    connector_reflection,
    rayleigh_backscatter,
};

inline const char* to_string(CrosstalkKind k) { return k == CrosstalkKind::point ? "point" : "continuous"; }
inline const char* to_string(CrosstalkBand b) {
    return b == CrosstalkBand::intraband ? "intraband" : "interband";
}
inline const char* to_string(LeakMechanism m) {
    switch (m) {
        case LeakMechanism::node_cir_return_loss: return "node_cir_return_loss";
        case LeakMechanism::node_cir_directivity: return "node_cir_directivity";
        case LeakMechanism::router_cir_return_loss: return "router_cir_return_loss";
        case LeakMechanism::router_cir_directivity: return "router_cir_directivity";
        case LeakMechanism::connector_reflection: return "connector_reflection";
        case LeakMechanism::rayleigh_backscatter: return "rayleigh_backscatter";
    }
    return "?";
}

struct CrosstalkContribution {
    CrosstalkKind kind = CrosstalkKind::point;
    CrosstalkBand band = CrosstalkBand::intraband;
    LeakMechanism mechanism = LeakMechanism::node_cir_return_loss;
    DirectedLink source_link;
    double power_ratio_db = -kInfiniteDb;  // relative to the source's launch power
    double arrival_offset_ns = 0.0;        // in [0, period); point only

    /// Interband leakage is removable with narrow-band filtering.
    bool removable() const { return band == CrosstalkBand::interband; }
};

struct CrosstalkTiming {
    double pulse_period_ns = 50.0;
    std::vector<double> launch_delay_ns;  // per node; missing entries are 0

    double delay(std::size_t node) const { return node < launch_delay_ns.size() ? launch_delay_ns[node] : 0.0; }
};

inline double wrap_offset(double t, double period) {
    double r = std::fmod(t, period);
    if (r < 0.0) {
        r += period;
    }
    return r >= period ? 0.0 : r;
}

/// First-order leakage into the receiver of `victim` (src s -> dst d on w).
///
/// Two transmitters on w couple in:
///  - the one co-located at d: its light passes d's circulator and feeder, so
///    circulator return loss and directivity at d, return loss at router
///    port d, joints and Rayleigh on d's feeder all fold back into d;
///  - the one feeding s (prev -> s): at router port s its light leaks through
///    the circulator directivity into s's input, and reflections and Rayleigh
///    on s's feeder return into port s; both are then routed to d on w.
/// d's transmitters on other wavelengths follow the co-located paths and are
/// tagged interband. Everything else needs two or more bounces and is dropped.
inline std::vector<CrosstalkContribution> enumerate_crosstalk_paths(const NetworkPlan& plan,
                                                                    const DirectedLink& victim,
                                                                    const ComponentSpec& spec,
                                                                    std::span<const FiberRoute> routes,
                                                                    const CrosstalkTiming& timing) {
    std::vector<CrosstalkContribution> out;
    bool found = false;
    for (const auto& l : plan.links) {
        found = found || l == victim;
    }
    if (!found) {
        throw std::invalid_argument("enumerate_crosstalk_paths: victim link is not part of the plan");
    }
    if (plan.links.size() <= 1) {
        return out;
    }
    const std::size_t s = victim.src.index;
    const std::size_t d = victim.dst.index;
    const std::size_t w = victim.wavelength.index;
    const FiberRoute empty_route;
    auto route = [&](std::size_t node) -> const FiberRoute& {
        return node < routes.size() ? routes[node] : empty_route;
    };
    const double m = mnd_pass_loss(spec, spec.structure);
    const double ng = spec.group_index;
    const double period = timing.pulse_period_ns;
    const double ns_per_km = ng / kSpeedOfLightKmPerNs;
    const double signal_arrival = timing.delay(s) + route(s).delay_ns(ng) + route(d).delay_ns(ng);
    const double backscatter = db_to_linear(-spec.rayleigh_backscatter_db_per_km);

    auto emit = [&](CrosstalkKind kind, LeakMechanism mech, const DirectedLink& src, double loss_db,
                    double arrival_ns) {
        if (!std::isfinite(loss_db)) {
            return;
        }
        CrosstalkContribution c;
        c.kind = kind;
        c.band = src.wavelength.index == w ? CrosstalkBand::intraband : CrosstalkBand::interband;
        c.mechanism = mech;
        c.source_link = src;
        c.power_ratio_db = -loss_db;
        c.arrival_offset_ns = kind == CrosstalkKind::point ? wrap_offset(arrival_ns - signal_arrival, period) : 0.0;
        out.push_back(c);
    };

    // Transmitters at d (co-located with the victim receiver).
    for (const auto& src : plan.links) {
        if (src.src.index != d || src == victim) {
            continue;
        }
        const std::size_t lw = src.wavelength.index;
        const FiberRoute& fd = route(d);
        const double t0 = timing.delay(d);
        emit(CrosstalkKind::point, LeakMechanism::node_cir_return_loss, src, m + spec.cir_return_loss_db, t0);
        emit(CrosstalkKind::point, LeakMechanism::node_cir_directivity, src, m + spec.cir_directivity_db, t0);
        emit(CrosstalkKind::point, LeakMechanism::router_cir_return_loss, src,
             m + 2.0 * fd.loss_db(lw) + spec.cir_return_loss_db, t0 + 2.0 * fd.delay_ns(ng));
        for (double z : fd.joints_km) {
            emit(CrosstalkKind::point, LeakMechanism::connector_reflection, src,
                 m + 2.0 * fd.loss_between(0.0, z, lw) + spec.connector_reflection_db, t0 + 2.0 * z * ns_per_km);
        }
        const double back = fd.rayleigh_return(lw, backscatter, true);
        if (back > 0.0) {
            emit(CrosstalkKind::continuous, LeakMechanism::rayleigh_backscatter, src, m - linear_to_db(back), 0.0);
        }
    }

    // The transmitter whose light is routed into port s on w.
    for (const auto& src : plan.links) {
        if (src.dst.index != s || src.wavelength.index != w) {
            continue;
        }
        const std::size_t p = src.src.index;
        const FiberRoute& fp = route(p);
        const FiberRoute& fs = route(s);
        const FiberRoute& fd = route(d);
        const double common_db = fp.loss_db(w) + fd.loss_db(w);
        const double t0 = timing.delay(p) + fp.delay_ns(ng) + fd.delay_ns(ng);
        emit(CrosstalkKind::point, LeakMechanism::router_cir_directivity, src,
             4.0 * m + common_db + spec.cir_directivity_db, t0);
        const double ls = fs.length_km();
        for (double z : fs.joints_km) {
            emit(CrosstalkKind::point, LeakMechanism::connector_reflection, src,
                 5.0 * m + common_db + 2.0 * fs.loss_between(z, ls, w) + spec.connector_reflection_db,
                 t0 + 2.0 * (ls - z) * ns_per_km);
        }
        const double back = fs.rayleigh_return(w, backscatter, false);
        if (back > 0.0) {
            emit(CrosstalkKind::continuous, LeakMechanism::rayleigh_backscatter, src,
                 5.0 * m + common_db - linear_to_db(back), 0.0);
        }
    }
    return out;
}

/// Crosstalk as reported by the power-meter procedure: output power of the
/// victim port minus the reference launch power after one M&D pass.
inline double emulate_crosstalk_measurement(double output_power_dbm, double p0_dbm, double measured_path_loss_db) {
    return output_power_dbm - (p0_dbm - measured_path_loss_db / 4.0);
}

/// Summed power ratio of the given contributions, in dB.
inline double total_power_ratio_db(std::span<const CrosstalkContribution> contributions, bool include_interband) {
    double total = 0.0;
    for (const auto& c : contributions) {
        if (c.band == CrosstalkBand::interband && !include_interband) {
            continue;
        }
        total += db_to_linear(c.power_ratio_db);
    }
    return linear_to_db(total);
}

inline std::string crosstalk_table(const NetworkPlan& plan, std::span<const CrosstalkContribution> contributions) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "kind" << std::setw(11) << "band" << std::setw(24) << "mechanism"
       << std::setw(10) << "source" << std::right << std::setw(10) << "dB" << std::setw(12) << "offset_ns"
       << '\n';
    os << std::fixed;
    for (const auto& c : contributions) {
        const std::string src = plan.labels.at(c.source_link.src.index) + "2" + plan.labels.at(c.source_link.dst.index);
        os << std::left << std::setw(12) << to_string(c.kind) << std::setw(11) << to_string(c.band) << std::setw(24)
           << to_string(c.mechanism) << std::setw(10) << src << std::right << std::setw(10) << std::setprecision(2)
           << c.power_ratio_db << std::setw(12) << std::setprecision(3) << c.arrival_offset_ns << '\n';
    }
    return os.str();
}

}  // namespace wsqkd

#endif  // WSQKD_OPTICS_HPP
