#ifndef WSQKD_SCENARIO_HPP
#define WSQKD_SCENARIO_HPP

// Scenario documents: JSON with unit-suffixed keys. Parsing is strict:
// unknown keys, missing required fields and out-of-range values are errors
// that name the offending field.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "netgraph.hpp"
#include "optics.hpp"
#include "qkdrate.hpp"

namespace wsqkd {

class ScenarioError : public std::runtime_error {
public:
    enum class Kind { syntax, semantic, missing };
    ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct MeasuredLink {
    std::optional<double> attenuation_db;
    std::optional<double> crosstalk_db;
    std::optional<double> dead_time_us;
    std::optional<double> sifted_kbps;
    std::optional<double> signal_qber_pct;
    std::optional<double> secure_kbps;
    bool operator==(const MeasuredLink&) const = default;
};

struct ScenarioLink {
    std::string name;
    std::string src;
    std::string dst;
    std::optional<double> wavelength_nm;
    std::optional<double> e_detector;  // absent: calibrated from the measured QBER
    MeasuredLink measured;
    bool operator==(const ScenarioLink&) const = default;
};

struct ReferenceConstants {
    std::optional<double> p0_dbm;
    std::optional<double> measured_path_loss_db;
    std::optional<double> effective_insertion_loss_db;
    std::optional<double> vacuum_yield_ref;
    std::optional<double> crosstalk_gain_ref;
    std::optional<std::string> crosstalk_link;
    bool operator==(const ReferenceConstants&) const = default;
};

struct Scenario {
    std::string name;
    std::size_t n_wavelengths = 0;
    std::vector<double> wavelengths_nm;
    std::vector<std::string> node_labels;
    ComponentSpec components;
    std::map<std::string, FiberRoute> fibers;  // by node label
    std::map<std::string, double> launch_delay_ns;
    SourceParams source;
    DetectorParams detector;
    SystemParams system;
    std::vector<ScenarioLink> links;
    ReferenceConstants reference;
    bool operator==(const Scenario&) const = default;

    double pulse_period_ns() const { return 1e9 / source.pulse_rate_hz; }
};

namespace scenario_detail {

using nlohmann::json;

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ScenarioError(ScenarioError::Kind::semantic, where() + ": expected an object");
        }
    }

    std::string where(std::string_view key = {}) const {
        if (key.empty()) {
            return path_.empty() ? "document" : path_;
        }
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    const json& required(const std::string& key) {
        if (!j_.contains(key)) {
            throw ScenarioError(ScenarioError::Kind::missing, where(key) + " required");
        }
        return raw(key);
    }

    double number(const json& v, const std::string& key) const {
        if (v.is_number()) {
            return v.get<double>();
        }
        if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
            return kInfiniteDb;
        }
        throw ScenarioError(ScenarioError::Kind::semantic, where(key) + ": expected a number");
    }

    double req_number(const std::string& key) { return number(required(key), key); }

    std::optional<double> opt_number(const std::string& key) {
        if (!has(key)) {
            return std::nullopt;
        }
        return number(raw(key), key);
    }

    void read(const std::string& key, double& target) {
        if (auto v = opt_number(key)) {
            target = *v;
        }
    }

    std::string req_string(const std::string& key) {
        const auto& v = required(key);
        if (!v.is_string()) {
            throw ScenarioError(ScenarioError::Kind::semantic, where(key) + ": expected a string");
        }
        return v.get<std::string>();
    }

    std::optional<std::string> opt_string(const std::string& key) {
        if (!has(key)) {
            return std::nullopt;
        }
        const auto& v = raw(key);
        if (!v.is_string()) {
            throw ScenarioError(ScenarioError::Kind::semantic, where(key) + ": expected a string");
        }
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ScenarioError(ScenarioError::Kind::semantic, where(key) + ": unknown key");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) {
        throw ScenarioError(ScenarioError::Kind::semantic, field + ": " + message);
    }
}

inline json number_json(double v) {
    if (std::isinf(v)) {
        return v > 0 ? json("inf") : json("-inf");
    }
    return json(v);
}

inline std::vector<double> number_array(ObjectReader& r, const std::string& key, const json& arr) {
    require(arr.is_array(), r.where(key), "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        out.push_back(r.number(arr[i], key + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline MndStructure parse_structure(const std::string& s, const std::string& field) {
    if (s == "one_cir_two_wdm") {
        return MndStructure::one_cir_two_wdm;
    }
    if (s == "one_wdm_n_cir") {
        return MndStructure::one_wdm_n_cir;
    }
    throw ScenarioError(ScenarioError::Kind::semantic, field + ": unknown structure '" + s + "'");
}

inline const char* structure_name(MndStructure s) {
    return s == MndStructure::one_cir_two_wdm ? "one_cir_two_wdm" : "one_wdm_n_cir";
}

inline Scenario from_json(const json& doc) {
    ObjectReader top(doc, "");
    Scenario sc;
    if (auto name = top.opt_string("name")) {
        sc.name = *name;
    }
    {
        const auto& n = top.required("n_wavelengths");
        require(n.is_number_integer() && n.get<long long>() >= 1, "n_wavelengths", "must be an integer >= 1");
        sc.n_wavelengths = n.get<std::size_t>();
    }
    const std::size_t nodes = 2 * sc.n_wavelengths + 1;

    if (top.has("wavelengths_nm")) {
        sc.wavelengths_nm = number_array(top, "wavelengths_nm", top.raw("wavelengths_nm"));
        require(sc.wavelengths_nm.size() == sc.n_wavelengths, "wavelengths_nm", "needs one entry per wavelength");
        for (std::size_t k = 0; k < sc.wavelengths_nm.size(); ++k) {
            require(sc.wavelengths_nm[k] > 0.0, "wavelengths_nm", "entries must be positive");
            require(k == 0 || sc.wavelengths_nm[k] > sc.wavelengths_nm[k - 1], "wavelengths_nm",
                    "must be strictly increasing");
        }
    } else {
        sc.wavelengths_nm = default_wavelengths_nm(sc.n_wavelengths);
    }

    if (top.has("node_labels")) {
        const auto& labels = top.raw("node_labels");
        require(labels.is_array(), "node_labels", "expected an array of strings");
        std::set<std::string> unique;
        for (const auto& l : labels) {
            require(l.is_string() && !l.get<std::string>().empty(), "node_labels", "labels must be non-empty strings");
            sc.node_labels.push_back(l.get<std::string>());
            unique.insert(l.get<std::string>());
        }
        require(sc.node_labels.size() == nodes, "node_labels",
                "needs " + std::to_string(nodes) + " labels (2N+1 nodes)");
        require(unique.size() == nodes, "node_labels", "labels must be unique");
    } else {
        for (std::size_t i = 0; i < nodes; ++i) {
            sc.node_labels.push_back(default_label(i));
        }
    }
    auto known_label = [&sc](const std::string& l) {
        return std::find(sc.node_labels.begin(), sc.node_labels.end(), l) != sc.node_labels.end();
    };

    if (top.has("components")) {
        ObjectReader r(top.raw("components"), "components");
        auto& c = sc.components;
        if (auto s = r.opt_string("structure")) {
            c.structure = parse_structure(*s, r.where("structure"));
        }
        r.read("cir_pass_loss_db", c.cir_pass_loss_db);
        r.read("wdm_pass_loss_db", c.wdm_pass_loss_db);
        r.read("cir_return_loss_db", c.cir_return_loss_db);
        r.read("cir_directivity_db", c.cir_directivity_db);
        r.read("connector_reflection_db", c.connector_reflection_db);
        r.read("rayleigh_backscatter_db_per_km", c.rayleigh_backscatter_db_per_km);
        r.read("group_index", c.group_index);
        r.finish();
        for (auto [v, f] : {std::pair{c.cir_pass_loss_db, "cir_pass_loss_db"}, {c.wdm_pass_loss_db, "wdm_pass_loss_db"},
                            {c.cir_return_loss_db, "cir_return_loss_db"},
                            {c.cir_directivity_db, "cir_directivity_db"},
                            {c.connector_reflection_db, "connector_reflection_db"},
                            {c.rayleigh_backscatter_db_per_km, "rayleigh_backscatter_db_per_km"}}) {
            require(v >= 0.0, r.where(f), "must be >= 0 dB");
        }
        require(c.group_index >= 1.0, r.where("group_index"), "must be >= 1");
    }

    if (top.has("fibers")) {
        const auto& fibers = top.raw("fibers");
        require(fibers.is_object(), "fibers", "expected an object keyed by node label");
        for (const auto& [label, route_json] : fibers.items()) {
            const std::string path = "fibers." + label;
            require(known_label(label), path, "unknown node label");
            ObjectReader r(route_json, path);
            FiberRoute route;
            const auto& spans = r.required("spans");
            require(spans.is_array(), r.where("spans"), "expected an array");
            for (std::size_t i = 0; i < spans.size(); ++i) {
                ObjectReader sr(spans[i], path + ".spans[" + std::to_string(i) + "]");
                FiberSpec f;
                f.length_km = sr.req_number("length_km");
                require(f.length_km >= 0.0, sr.where("length_km"), "must be >= 0");
                f.atten_db_per_km = number_array(sr, "atten_db_per_km", sr.required("atten_db_per_km"));
                require(f.atten_db_per_km.size() == sc.n_wavelengths, sr.where("atten_db_per_km"),
                        "needs one entry per wavelength");
                for (double a : f.atten_db_per_km) {
                    require(a >= 0.0, sr.where("atten_db_per_km"), "entries must be >= 0");
                }
                sr.finish();
                route.spans.push_back(std::move(f));
            }
            if (r.has("joints_km")) {
                route.joints_km = number_array(r, "joints_km", r.raw("joints_km"));
                for (double z : route.joints_km) {
                    require(z >= 0.0 && z <= route.length_km(), r.where("joints_km"),
                            "joint positions must lie on the route");
                }
            }
            r.finish();
            sc.fibers.emplace(label, std::move(route));
        }
    }

    if (top.has("launch_delay_ns")) {
        const auto& delays = top.raw("launch_delay_ns");
        require(delays.is_object(), "launch_delay_ns", "expected an object keyed by node label");
        for (const auto& [label, v] : delays.items()) {
            require(known_label(label), "launch_delay_ns." + label, "unknown node label");
            require(v.is_number(), "launch_delay_ns." + label, "expected a number");
            sc.launch_delay_ns[label] = v.get<double>();
        }
    }

    if (top.has("source")) {
        ObjectReader r(top.raw("source"), "source");
        auto& s = sc.source;
        r.read("mu", s.mu);
        r.read("nu", s.nu);
        r.read("extinction_ratio_db", s.extinction_ratio_db);
        if (r.has("state_ratio")) {
            const auto& arr = r.raw("state_ratio");
            require(arr.is_array() && arr.size() == 3, r.where("state_ratio"), "expected [signal, decoy, vacuum]");
            for (std::size_t i = 0; i < 3; ++i) {
                require(arr[i].is_number_integer() && arr[i].get<long long>() > 0, r.where("state_ratio"),
                        "entries must be positive integers");
                s.state_ratio[i] = arr[i].get<unsigned>();
            }
        }
        r.read("pulse_rate_hz", s.pulse_rate_hz);
        r.read("pulse_width_ps", s.pulse_width_ps);
        r.finish();
        require(s.mu > 0.0, "source.mu", "must be > 0");
        require(s.nu > 0.0 && s.nu < s.mu, "source.nu", "must satisfy 0 < nu < mu");
        require(s.extinction_ratio_db >= 0.0, "source.extinction_ratio_db", "must be >= 0");
        require(s.pulse_rate_hz > 0.0, "source.pulse_rate_hz", "must be > 0");
        require(s.pulse_width_ps > 0.0, "source.pulse_width_ps", "must be > 0");
    }

    if (top.has("detector")) {
        ObjectReader r(top.raw("detector"), "detector");
        auto& d = sc.detector;
        r.read("efficiency", d.efficiency);
        r.read("dark_per_gate", d.dark_per_gate);
        r.read("gate_ns", d.gate_ns);
        r.read("dead_time_us", d.dead_time_us);
        r.read("max_trigger_hz", d.max_trigger_hz);
        r.finish();
        require(d.efficiency > 0.0 && d.efficiency <= 1.0, "detector.efficiency", "must be in (0, 1]");
        require(d.dark_per_gate >= 0.0 && d.dark_per_gate < 1.0, "detector.dark_per_gate", "must be in [0, 1)");
        require(d.gate_ns > 0.0, "detector.gate_ns", "must be > 0");
        require(d.dead_time_us >= 0.0, "detector.dead_time_us", "must be >= 0");
        require(d.max_trigger_hz > 0.0, "detector.max_trigger_hz", "must be > 0");
    }

    if (top.has("system")) {
        ObjectReader r(top.raw("system"), "system");
        auto& s = sc.system;
        r.read("e_detector", s.e_detector);
        r.read("f_ec", s.f_ec);
        r.read("q_sift", s.q_sift);
        r.finish();
        require(s.e_detector >= 0.0 && s.e_detector < 0.5, "system.e_detector", "must be in [0, 0.5)");
        require(s.f_ec >= 1.0, "system.f_ec", "must be >= 1");
        require(s.q_sift > 0.0 && s.q_sift <= 1.0, "system.q_sift", "must be in (0, 1]");
    }

    if (top.has("links")) {
        const auto& links = top.raw("links");
        require(links.is_array(), "links", "expected an array");
        const NetworkPlan plan = build_plan(sc.n_wavelengths, sc.wavelengths_nm);
        std::set<std::string> names;
        for (std::size_t i = 0; i < links.size(); ++i) {
            const std::string path = "links[" + std::to_string(i) + "]";
            ObjectReader r(links[i], path);
            ScenarioLink l;
            l.src = r.req_string("src");
            l.dst = r.req_string("dst");
            l.name = r.opt_string("name").value_or(l.src + "2R2" + l.dst);
            require(names.insert(l.name).second, r.where("name"), "duplicate link name '" + l.name + "'");
            require(known_label(l.src), r.where("src"), "unknown node label '" + l.src + "'");
            require(known_label(l.dst), r.where("dst"), "unknown node label '" + l.dst + "'");
            require(l.src != l.dst, path, "no self link");
            l.wavelength_nm = r.opt_number("wavelength_nm");
            l.e_detector = r.opt_number("e_detector");
            if (l.e_detector) {
                require(*l.e_detector >= 0.0 && *l.e_detector < 0.5, r.where("e_detector"), "must be in [0, 0.5)");
            }
            if (r.has("measured")) {
                ObjectReader m(r.raw("measured"), path + ".measured");
                auto& ms = l.measured;
                ms.attenuation_db = m.opt_number("attenuation_db");
                ms.crosstalk_db = m.opt_number("crosstalk_db");
                ms.dead_time_us = m.opt_number("dead_time_us");
                ms.sifted_kbps = m.opt_number("sifted_kbps");
                ms.signal_qber_pct = m.opt_number("signal_qber_pct");
                ms.secure_kbps = m.opt_number("secure_kbps");
                m.finish();
                require(!ms.attenuation_db || *ms.attenuation_db >= 0.0, m.where("attenuation_db"), "must be >= 0");
                require(!ms.crosstalk_db || *ms.crosstalk_db <= 0.0, m.where("crosstalk_db"), "must be <= 0");
                require(!ms.dead_time_us || *ms.dead_time_us >= 0.0, m.where("dead_time_us"), "must be >= 0");
                require(!ms.sifted_kbps || *ms.sifted_kbps >= 0.0, m.where("sifted_kbps"), "must be >= 0");
                require(!ms.signal_qber_pct || (*ms.signal_qber_pct >= 0.0 && *ms.signal_qber_pct <= 50.0),
                        m.where("signal_qber_pct"), "must be in [0, 50]");
                require(!ms.secure_kbps || *ms.secure_kbps >= 0.0, m.where("secure_kbps"), "must be >= 0");
            }
            r.finish();

            // The plan must carry src -> dst in this direction.
            std::size_t a = 0;
            std::size_t b = 0;
            for (std::size_t k = 0; k < sc.node_labels.size(); ++k) {
                a = sc.node_labels[k] == l.src ? k : a;
                b = sc.node_labels[k] == l.dst ? k : b;
            }
            const auto route = route_lookup(plan, NodeId{a}, NodeId{b});
            require(route.src.index == a, path, "plan routes this pair as " + l.dst + " -> " + l.src);
            if (l.wavelength_nm) {
                require(std::abs(*l.wavelength_nm - route.wavelength.nominal_nm) < 1e-9, r.where("wavelength_nm"),
                        "plan assigns " + std::to_string(route.wavelength.nominal_nm) + " nm to this link");
            }
            sc.links.push_back(std::move(l));
        }
    }

    if (top.has("reference")) {
        ObjectReader r(top.raw("reference"), "reference");
        auto& ref = sc.reference;
        ref.p0_dbm = r.opt_number("p0_dbm");
        ref.measured_path_loss_db = r.opt_number("measured_path_loss_db");
        ref.effective_insertion_loss_db = r.opt_number("effective_insertion_loss_db");
        ref.vacuum_yield_ref = r.opt_number("vacuum_yield_ref");
        ref.crosstalk_gain_ref = r.opt_number("crosstalk_gain_ref");
        ref.crosstalk_link = r.opt_string("crosstalk_link");
        r.finish();
        require(!ref.measured_path_loss_db || *ref.measured_path_loss_db >= 0.0, "reference.measured_path_loss_db",
                "must be >= 0");
        if (ref.crosstalk_link) {
            bool found = false;
            for (const auto& l : sc.links) {
                found = found || l.name == *ref.crosstalk_link;
            }
            require(found, "reference.crosstalk_link", "names no link in this scenario");
        }
    }
    top.finish();
    return sc;
}

inline json to_json(const Scenario& sc) {
    json doc = json::object();
    doc["name"] = sc.name;
    doc["n_wavelengths"] = sc.n_wavelengths;
    doc["wavelengths_nm"] = sc.wavelengths_nm;
    doc["node_labels"] = sc.node_labels;
    const auto& c = sc.components;
    doc["components"] = {
        {"structure", structure_name(c.structure)},
        {"cir_pass_loss_db", number_json(c.cir_pass_loss_db)},
        {"wdm_pass_loss_db", number_json(c.wdm_pass_loss_db)},
        {"cir_return_loss_db", number_json(c.cir_return_loss_db)},
        {"cir_directivity_db", number_json(c.cir_directivity_db)},
        {"connector_reflection_db", number_json(c.connector_reflection_db)},
        {"rayleigh_backscatter_db_per_km", number_json(c.rayleigh_backscatter_db_per_km)},
        {"group_index", c.group_index},
    };
    json fibers = json::object();
    for (const auto& [label, route] : sc.fibers) {
        json spans = json::array();
        for (const auto& s : route.spans) {
            spans.push_back({{"length_km", s.length_km}, {"atten_db_per_km", s.atten_db_per_km}});
        }
        fibers[label] = {{"spans", spans}, {"joints_km", route.joints_km}};
    }
    doc["fibers"] = fibers;
    doc["launch_delay_ns"] = sc.launch_delay_ns;
    const auto& s = sc.source;
    doc["source"] = {
        {"mu", s.mu},
        {"nu", s.nu},
        {"extinction_ratio_db", number_json(s.extinction_ratio_db)},
        {"state_ratio", s.state_ratio},
        {"pulse_rate_hz", s.pulse_rate_hz},
        {"pulse_width_ps", s.pulse_width_ps},
    };
    const auto& d = sc.detector;
    doc["detector"] = {
        {"efficiency", d.efficiency},         {"dark_per_gate", d.dark_per_gate},
        {"gate_ns", d.gate_ns},               {"dead_time_us", d.dead_time_us},
        {"max_trigger_hz", d.max_trigger_hz},
    };
    doc["system"] = {{"e_detector", sc.system.e_detector}, {"f_ec", sc.system.f_ec}, {"q_sift", sc.system.q_sift}};
    json links = json::array();
    auto put = [](json& obj, const char* key, const std::optional<double>& v) {
        if (v) {
            obj[key] = number_json(*v);
        }
    };
    for (const auto& l : sc.links) {
        json lj = {{"name", l.name}, {"src", l.src}, {"dst", l.dst}};
        put(lj, "wavelength_nm", l.wavelength_nm);
        put(lj, "e_detector", l.e_detector);
        json m = json::object();
        put(m, "attenuation_db", l.measured.attenuation_db);
        put(m, "crosstalk_db", l.measured.crosstalk_db);
        put(m, "dead_time_us", l.measured.dead_time_us);
        put(m, "sifted_kbps", l.measured.sifted_kbps);
        put(m, "signal_qber_pct", l.measured.signal_qber_pct);
        put(m, "secure_kbps", l.measured.secure_kbps);
        lj["measured"] = m;
        links.push_back(lj);
    }
    doc["links"] = links;
    json ref = json::object();
    put(ref, "p0_dbm", sc.reference.p0_dbm);
    put(ref, "measured_path_loss_db", sc.reference.measured_path_loss_db);
    put(ref, "effective_insertion_loss_db", sc.reference.effective_insertion_loss_db);
    put(ref, "vacuum_yield_ref", sc.reference.vacuum_yield_ref);
    put(ref, "crosstalk_gain_ref", sc.reference.crosstalk_gain_ref);
    if (sc.reference.crosstalk_link) {
        ref["crosstalk_link"] = *sc.reference.crosstalk_link;
    }
    doc["reference"] = ref;
    return doc;
}

}  // namespace scenario_detail

inline Scenario parse_scenario(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(ScenarioError::Kind::syntax, std::string("syntax error: ") + e.what());
    }
    if (doc.is_object() && !doc.contains("n_wavelengths")) {
        throw ScenarioError(ScenarioError::Kind::missing, "n_wavelengths required");
    }
    return scenario_detail::from_json(doc);
}

inline std::string serialize_scenario(const Scenario& sc) { return scenario_detail::to_json(sc).dump(2) + "\n"; }

/// Routing plan of the scenario, labelled with its node labels.
inline NetworkPlan scenario_plan(const Scenario& sc) {
    NetworkPlan plan = build_plan(sc.n_wavelengths, sc.wavelengths_nm);
    plan.labels = sc.node_labels;
    return plan;
}

inline std::vector<FiberRoute> scenario_routes(const Scenario& sc) {
    std::vector<FiberRoute> routes(sc.node_labels.size());
    for (std::size_t i = 0; i < sc.node_labels.size(); ++i) {
        if (auto it = sc.fibers.find(sc.node_labels[i]); it != sc.fibers.end()) {
            routes[i] = it->second;
        }
    }
    return routes;
}

inline CrosstalkTiming scenario_timing(const Scenario& sc) {
    CrosstalkTiming t;
    t.pulse_period_ns = sc.pulse_period_ns();
    t.launch_delay_ns.assign(sc.node_labels.size(), 0.0);
    for (std::size_t i = 0; i < sc.node_labels.size(); ++i) {
        if (auto it = sc.launch_delay_ns.find(sc.node_labels[i]); it != sc.launch_delay_ns.end()) {
            t.launch_delay_ns[i] = it->second;
        }
    }
    return t;
}

inline const ScenarioLink& find_link(const Scenario& sc, const std::string& name) {
    for (const auto& l : sc.links) {
        if (l.name == name) {
            return l;
        }
    }
    throw std::out_of_range("unknown link '" + name + "'");
}

inline DirectedLink plan_link(const NetworkPlan& plan, const ScenarioLink& l) {
    const auto a = find_label(plan, l.src);
    const auto b = find_label(plan, l.dst);
    if (!a || !b) {
        throw std::out_of_range("link " + l.name + " references unknown nodes");
    }
    return route_lookup(plan, *a, *b);
}

/// Budget from the feeder fibres of both end nodes plus the effective
/// insertion loss, with the measured attenuation as override when present.
inline LinkBudget scenario_link_budget(const Scenario& sc, const ScenarioLink& l, bool use_override = true) {
    const NetworkPlan plan = scenario_plan(sc);
    const DirectedLink link = plan_link(plan, l);
    std::vector<FiberSpec> segments;
    for (const auto& label : {l.src, l.dst}) {
        if (auto it = sc.fibers.find(label); it != sc.fibers.end()) {
            segments.insert(segments.end(), it->second.spans.begin(), it->second.spans.end());
        }
    }
    const double il = sc.reference.effective_insertion_loss_db
                          ? *sc.reference.effective_insertion_loss_db
                          : effective_insertion_loss(sc.reference.measured_path_loss_db.value_or(0.0));
    std::optional<double> override_db = use_override ? l.measured.attenuation_db : std::nullopt;
    return link_budget(link, segments, il, override_db);
}

/// Model inputs for one link: attenuation, per-link dead time and the
/// misalignment error (explicit, or calibrated to the measured QBER).
struct LinkModelInputs {
    double attenuation_db = 0.0;
    SourceParams source;
    DetectorParams detector;
    SystemParams system;
    bool e_detector_calibrated = false;
};

inline LinkModelInputs link_model_inputs(const Scenario& sc, const ScenarioLink& l) {
    LinkModelInputs in;
    in.attenuation_db = scenario_link_budget(sc, l).total_db;
    in.source = sc.source;
    in.detector = sc.detector;
    if (l.measured.dead_time_us) {
        in.detector.dead_time_us = *l.measured.dead_time_us;
    }
    in.system = sc.system;
    if (l.e_detector) {
        in.system.e_detector = *l.e_detector;
    } else if (l.measured.signal_qber_pct) {
        in.system.e_detector =
            calibrate_e_detector(in.attenuation_db, *l.measured.signal_qber_pct / 100.0, in.source, in.detector);
        in.e_detector_calibrated = true;
    }
    return in;
}

// Field deployment: five nodes on two wavelengths, four measured links from
// node A. Labels are listed in plan-index order so that the generated plan
// reproduces the deployed routing rule exactly. Feeder lengths are an
// illustrative geometry consistent with the measured attenuations; the
// measured values override fibre-derived budgets.
inline constexpr std::string_view kWuhuDocument = R"json({
  "name": "wuhu",
  "n_wavelengths": 2,
  "wavelengths_nm": [1530, 1550],
  "node_labels": ["A", "B", "C", "E", "D"],
  "components": {
    "structure": "one_cir_two_wdm",
    "cir_pass_loss_db": 0.6,
    "wdm_pass_loss_db": 0.35,
    "cir_return_loss_db": 50,
    "cir_directivity_db": 50,
    "connector_reflection_db": 45,
    "rayleigh_backscatter_db_per_km": 70,
    "group_index": 1.468
  },
  "fibers": {
    "A": {"spans": [{"length_km": 6.0, "atten_db_per_km": [0.25, 0.25]}], "joints_km": [5.988]},
    "B": {"spans": [{"length_km": 10.56, "atten_db_per_km": [0.25, 0.25]}], "joints_km": [10.548]},
    "C": {"spans": [{"length_km": 16.72, "atten_db_per_km": [0.25, 0.25]}], "joints_km": [16.708]},
    "D": {"spans": [{"length_km": 24.76, "atten_db_per_km": [0.25, 0.25]}], "joints_km": [24.748]},
    "E": {"spans": [{"length_km": 25.28, "atten_db_per_km": [0.2, 0.2]},
                    {"length_km": 20.456, "atten_db_per_km": [0.25, 0.25]}],
          "joints_km": [25.28, 45.724]}
  },
  "launch_delay_ns": {"A": 0, "B": 0, "C": 0, "D": 0, "E": 0},
  "source": {
    "mu": 0.6,
    "nu": 0.2,
    "extinction_ratio_db": 27,
    "state_ratio": [6, 3, 1],
    "pulse_rate_hz": 20000000,
    "pulse_width_ps": 750
  },
  "detector": {
    "efficiency": 0.2,
    "dark_per_gate": 2e-05,
    "gate_ns": 1,
    "dead_time_us": 0,
    "max_trigger_hz": 20000000
  },
  "system": {"e_detector": 0.01, "f_ec": 1.22, "q_sift": 0.5},
  "links": [
    {"name": "A2R2B", "src": "A", "dst": "B", "wavelength_nm": 1530,
     "measured": {"attenuation_db": 7.24, "crosstalk_db": -38.37, "dead_time_us": 5,
                  "sifted_kbps": 31.00, "signal_qber_pct": 2.92, "secure_kbps": 4.91}},
    {"name": "A2R2C", "src": "A", "dst": "C", "wavelength_nm": 1550,
     "measured": {"attenuation_db": 8.78, "crosstalk_db": -36.07, "dead_time_us": 10,
                  "sifted_kbps": 17.64, "signal_qber_pct": 2.84, "secure_kbps": 2.02}},
    {"name": "D2R2A", "src": "D", "dst": "A", "wavelength_nm": 1550,
     "measured": {"attenuation_db": 10.79, "crosstalk_db": -35.88, "dead_time_us": 25,
                  "sifted_kbps": 8.16, "signal_qber_pct": 2.78, "secure_kbps": 1.82}},
    {"name": "E2R2A", "src": "E", "dst": "A", "wavelength_nm": 1530,
     "measured": {"attenuation_db": 14.77, "crosstalk_db": -34.62, "dead_time_us": 50,
                  "sifted_kbps": 3.83, "signal_qber_pct": 3.76, "secure_kbps": 0.41}}
  ],
  "reference": {
    "p0_dbm": -24.00,
    "measured_path_loss_db": 4.14,
    "effective_insertion_loss_db": 3.10,
    "vacuum_yield_ref": 1.24e-05,
    "crosstalk_gain_ref": 7.98e-06,
    "crosstalk_link": "E2R2A"
  }
}
)json";

/// The field-test dataset as a value, independent of the document parser.
inline Scenario wuhu_dataset() {
    Scenario sc;
    sc.name = "wuhu";
    sc.n_wavelengths = 2;
    sc.wavelengths_nm = {1530.0, 1550.0};
    sc.node_labels = {"A", "B", "C", "E", "D"};
    sc.components = ComponentSpec{};
    auto route = [](std::vector<FiberSpec> spans, std::vector<double> joints) {
        return FiberRoute{std::move(spans), std::move(joints)};
    };
    sc.fibers["A"] = route({{6.0, {0.25, 0.25}}}, {5.988});
    sc.fibers["B"] = route({{10.56, {0.25, 0.25}}}, {10.548});
    sc.fibers["C"] = route({{16.72, {0.25, 0.25}}}, {16.708});
    sc.fibers["D"] = route({{24.76, {0.25, 0.25}}}, {24.748});
    sc.fibers["E"] = route({{25.28, {0.2, 0.2}}, {20.456, {0.25, 0.25}}}, {25.28, 45.724});
    sc.launch_delay_ns = {{"A", 0.0}, {"B", 0.0}, {"C", 0.0}, {"D", 0.0}, {"E", 0.0}};
    sc.source = SourceParams{};
    sc.detector = DetectorParams{};
    sc.system = SystemParams{};
    auto link = [](std::string name, std::string src, std::string dst, double nm, double att, double xt, double dead,
                   double sifted, double qber, double secure) {
        ScenarioLink l;
        l.name = std::move(name);
        l.src = std::move(src);
        l.dst = std::move(dst);
        l.wavelength_nm = nm;
        l.measured = MeasuredLink{att, xt, dead, sifted, qber, secure};
        return l;
    };
    sc.links = {
        link("A2R2B", "A", "B", 1530, 7.24, -38.37, 5, 31.00, 2.92, 4.91),
        link("A2R2C", "A", "C", 1550, 8.78, -36.07, 10, 17.64, 2.84, 2.02),
        link("D2R2A", "D", "A", 1550, 10.79, -35.88, 25, 8.16, 2.78, 1.82),
        link("E2R2A", "E", "A", 1530, 14.77, -34.62, 50, 3.83, 3.76, 0.41),
    };
    sc.reference = ReferenceConstants{-24.00, 4.14, 3.10, 1.24e-5, 7.98e-6, std::string("E2R2A")};
    return sc;
}

}  // namespace wsqkd

#endif  // WSQKD_SCENARIO_HPP
