#ifndef WSQKD_WORKFLOWS_HPP
#define WSQKD_WORKFLOWS_HPP

// Command workflows shared by the CLI and the tests. Each returns a
// fixed-width table for people and a JSON document for scripts.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "netgraph.hpp"
#include "optics.hpp"
#include "pulsesim.hpp"
#include "qkdrate.hpp"
#include "scenario.hpp"
#include "xtalk.hpp"

namespace wsqkd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitReproductionFailed = 2;

struct CommandOutput {
    std::string table;
    nlohmann::json document;
    int exit_code = kExitOk;
};

enum class Tolerance { factor2, pct25 };

inline const char* to_string(Tolerance t) { return t == Tolerance::factor2 ? "factor2" : "pct25"; }

inline std::optional<Tolerance> parse_tolerance(const std::string& s) {
    if (s == "factor2") {
        return Tolerance::factor2;
    }
    if (s == "pct25") {
        return Tolerance::pct25;
    }
    return std::nullopt;
}

inline bool within_tolerance(double ratio, Tolerance t) {
    if (!std::isfinite(ratio)) {
        return false;
    }
    return t == Tolerance::factor2 ? (ratio >= 0.5 && ratio <= 2.0) : (ratio >= 0.75 && ratio <= 1.25);
}

namespace report {

inline std::string num(double v, int precision = 3, bool scientific = false) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, scientific ? "%.*e" : "%.*f", precision, v);
    return buf;
}

inline std::string pad(const std::string& s, std::size_t width, bool left = false) {
    if (s.size() >= width) {
        return s;
    }
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

inline std::string rule(std::size_t width) { return std::string(width, '-') + "\n"; }

inline nlohmann::json num_json(double v) { return scenario_detail::number_json(v); }

inline std::string link_name(const NetworkPlan& plan, const DirectedLink& l) {
    return plan.labels.at(l.src.index) + "2R2" + plan.labels.at(l.dst.index);
}

}  // namespace report

// ---------------------------------------------------------------- plan

inline CommandOutput cmd_plan(std::size_t n_wavelengths, const std::vector<std::string>& labels = {}) {
    NetworkPlan plan = build_plan(n_wavelengths);
    if (!labels.empty()) {
        if (labels.size() != plan.node_count) {
            throw std::invalid_argument("plan: expected " + std::to_string(plan.node_count) + " labels");
        }
        plan.labels = labels;
    }
    const auto violations = validate_plan(plan);
    CommandOutput out;
    std::ostringstream os;
    os << "plan: " << plan.node_count << " nodes, " << plan.n_wavelengths << " wavelengths, " << plan.links.size()
       << " directed links\n";
    os << report::pad("link", 10, true) << report::pad("src", 5) << report::pad("dst", 5) << report::pad("w", 4)
       << report::pad("nm", 9) << report::pad("in", 5) << report::pad("out", 5) << "\n";
    os << report::rule(43);
    nlohmann::json links = nlohmann::json::array();
    for (const auto& l : plan.links) {
        const auto& a = plan.labels.at(l.src.index);
        const auto& b = plan.labels.at(l.dst.index);
        os << report::pad(a + "2" + b, 10, true) << report::pad(a, 5) << report::pad(b, 5)
           << report::pad(std::to_string(l.wavelength.index), 4) << report::pad(report::num(l.wavelength.nominal_nm, 1), 9)
           << report::pad(std::to_string(l.router_in_port), 5) << report::pad(std::to_string(l.router_out_port), 5)
           << "\n";
        links.push_back({{"src", a},
                         {"dst", b},
                         {"wavelength", l.wavelength.index},
                         {"nominal_nm", l.wavelength.nominal_nm},
                         {"router_in_port", l.router_in_port},
                         {"router_out_port", l.router_out_port}});
    }
    nlohmann::json cycles = nlohmann::json::array();
    for (std::size_t k = 0; k < plan.cycles.size(); ++k) {
        std::vector<std::string> c;
        os << "cycle w" << k << ":";
        for (std::size_t v : plan.cycles[k]) {
            c.push_back(plan.labels.at(v));
            os << ' ' << plan.labels.at(v);
        }
        os << " -> " << plan.labels.at(plan.cycles[k].front()) << "\n";
        cycles.push_back(c);
    }
    nlohmann::json wavelengths = nlohmann::json::array();
    for (const auto& w : plan.wavelengths) {
        wavelengths.push_back({{"index", w.index}, {"nominal_nm", w.nominal_nm}});
    }
    nlohmann::json viol = nlohmann::json::array();
    for (const auto& v : violations) {
        viol.push_back({{"invariant", v.invariant}, {"detail", v.detail}});
        os << "violation [" << v.invariant << "] " << v.detail << "\n";
    }
    out.document = {{"command", "plan"},
                    {"n_wavelengths", plan.n_wavelengths},
                    {"node_count", plan.node_count},
                    {"labels", plan.labels},
                    {"wavelengths", wavelengths},
                    {"cycles", cycles},
                    {"links", links},
                    {"violations", viol}};
    if (plan.n_wavelengths == 2) {
        const auto sigma = find_relabeling(plan, reference_five_node_rule());
        nlohmann::json rel = nullptr;
        if (sigma) {
            static const char* const ref_labels[] = {"A", "B", "C", "D", "E"};
            rel = nlohmann::json::object();
            os << "matches the five-node reference rule under";
            for (std::size_t v = 0; v < sigma->size(); ++v) {
                rel[plan.labels[v]] = ref_labels[(*sigma)[v]];
                os << ' ' << plan.labels[v] << "->" << ref_labels[(*sigma)[v]];
            }
            os << "\n";
        }
        out.document["reference_relabeling"] = rel;
    }
    out.table = os.str();
    out.exit_code = violations.empty() ? kExitOk : kExitUsage;
    return out;
}

// ---------------------------------------------------------------- budget

inline CommandOutput cmd_budget(const Scenario& sc, const std::string& link_name) {
    const ScenarioLink& l = find_link(sc, link_name);
    const NetworkPlan plan = scenario_plan(sc);
    const DirectedLink link = plan_link(plan, l);
    const LinkBudget b = scenario_link_budget(sc, l);
    std::optional<LinkBudget> derived;
    if (sc.fibers.contains(l.src) || sc.fibers.contains(l.dst)) {
        derived = scenario_link_budget(sc, l, false);
    }
    CommandOutput out;
    std::ostringstream os;
    os << "budget " << l.name << " (" << report::num(link.wavelength.nominal_nm, 0) << " nm)\n";
    os << report::rule(44);
    auto row = [&os](const std::string& k, const std::string& v) {
        os << report::pad(k, 30, true) << report::pad(v, 14) << "\n";
    };
    row("fibre loss [dB]", derived ? report::num(derived->fiber_db, 2) : "n/a");
    row("effective insertion loss [dB]", report::num(b.effective_insertion_loss_db, 3));
    if (derived) {
        row("fibre-derived total [dB]", report::num(derived->total_db, 2));
    }
    row("total [dB]", report::num(b.total_db, 2) + (b.measured() ? " measured" : " derived"));
    out.table = os.str();
    out.document = {{"command", "budget"},
                    {"link", l.name},
                    {"wavelength_nm", link.wavelength.nominal_nm},
                    {"fiber_db", derived ? nlohmann::json(derived->fiber_db) : nlohmann::json(nullptr)},
                    {"effective_insertion_loss_db", b.effective_insertion_loss_db},
                    {"fiber_derived_total_db", derived ? nlohmann::json(derived->total_db) : nlohmann::json(nullptr)},
                    {"total_db", b.total_db},
                    {"source", b.measured() ? "measured" : "derived"}};
    return out;
}

// ---------------------------------------------------------------- crosstalk

struct CrosstalkAnalysis {
    std::vector<CrosstalkContribution> modelled;
    std::vector<CrosstalkContribution> calibrated;
    double calibration_db = 0.0;
    bool is_calibrated = false;
    CrosstalkSummary summary;  // calibrated when a reference exists
    KeyRateReport report;
    CrosstalkImpact impact;
    std::optional<FloorCheck> floor;
    std::optional<double> recommended_delay_ns;
    CrosstalkSummary after_delay;
};

namespace workflow_detail {

inline std::vector<CrosstalkContribution> contributions_for(const Scenario& sc, const ScenarioLink& l) {
    const NetworkPlan plan = scenario_plan(sc);
    const auto routes = scenario_routes(sc);
    return enumerate_crosstalk_paths(plan, plan_link(plan, l), sc.components, routes, scenario_timing(sc));
}

inline CrosstalkSummary summarize(const Scenario& sc, std::span<const CrosstalkContribution> c, double victim_gain,
                                  bool include_interband) {
    return aggregate_chi(c, sc.detector.gate_ns, sc.pulse_period_ns(), victim_gain, sc.source.mean_intensity(),
                         sc.detector.efficiency, include_interband);
}

/// dB offset that makes the worst-case crosstalk gain of the reference link
/// equal the reference value; nullopt without a reference.
inline std::optional<double> scenario_calibration_db(const Scenario& sc) {
    if (!sc.reference.crosstalk_gain_ref || !sc.reference.crosstalk_link) {
        return std::nullopt;
    }
    const ScenarioLink& ref = find_link(sc, *sc.reference.crosstalk_link);
    const auto c = contributions_for(sc, ref);
    const auto in = link_model_inputs(sc, ref);
    const auto rep = link_performance(in.attenuation_db, in.source, in.detector, in.system);
    const auto s = summarize(sc, c, rep.observables.q_mu, false);
    if (!(s.y_worst > 0.0)) {
        return std::nullopt;
    }
    return calibration_offset_db(s, *sc.reference.crosstalk_gain_ref, GateCase::worst);
}

}  // namespace workflow_detail

inline CrosstalkAnalysis analyze_crosstalk(const Scenario& sc, const std::string& link_name, GateCase which,
                                           bool include_interband = false) {
    const ScenarioLink& l = find_link(sc, link_name);
    CrosstalkAnalysis a;
    a.modelled = workflow_detail::contributions_for(sc, l);
    const auto in = link_model_inputs(sc, l);
    a.report = link_performance(in.attenuation_db, in.source, in.detector, in.system);
    if (auto off = workflow_detail::scenario_calibration_db(sc)) {
        a.calibration_db = *off;
        a.is_calibrated = true;
        a.calibrated = offset_power(a.modelled, *off);
    } else {
        a.calibrated = a.modelled;
    }
    a.summary = workflow_detail::summarize(sc, a.calibrated, a.report.observables.q_mu, include_interband);
    a.impact = apply_crosstalk_to_link(a.report, a.summary, which);
    if (l.measured.crosstalk_db) {
        a.floor = leakage_floor_check(*l.measured.crosstalk_db, in.attenuation_db, sc.source.extinction_ratio_db);
    }
    a.recommended_delay_ns = recommend_delay(a.calibrated, sc.detector.gate_ns, sc.pulse_period_ns());
    const auto shifted =
        shift_point_offsets(a.calibrated, a.recommended_delay_ns.value_or(0.0), sc.pulse_period_ns());
    a.after_delay = workflow_detail::summarize(sc, shifted, a.report.observables.q_mu, include_interband);
    return a;
}

inline CommandOutput cmd_xtalk(const Scenario& sc, const std::string& link_name, GateCase which,
                               bool include_interband = false) {
    const auto a = analyze_crosstalk(sc, link_name, which, include_interband);
    const NetworkPlan plan = scenario_plan(sc);
    const ScenarioLink& l = find_link(sc, link_name);
    const char* case_name = which == GateCase::worst ? "worst" : "best";
    CommandOutput out;
    std::ostringstream os;
    os << "crosstalk into " << l.name << " (" << case_name << " case"
       << (include_interband ? ", interband included" : ", intraband only") << ")\n";
    os << crosstalk_table(plan, a.modelled);
    os << report::rule(60);
    auto row = [&os](const std::string& k, const std::string& v) {
        os << report::pad(k, 36, true) << report::pad(v, 16) << "\n";
    };
    row("modelled intraband total [dB]", report::num(total_power_ratio_db(a.modelled, false), 2));
    if (l.measured.crosstalk_db) {
        row("measured crosstalk [dB]", report::num(*l.measured.crosstalk_db, 2));
    }
    row("calibration offset [dB]", a.is_calibrated ? report::num(a.calibration_db, 2) : "none");
    row("Y_X worst / best", report::num(a.summary.y_worst, 3, true) + " / " + report::num(a.summary.y_best, 3, true));
    row("chi worst / best", report::num(a.summary.chi_worst, 3, true) + " / " + report::num(a.summary.chi_best, 3, true));
    row("Y_X below dark count", a.impact.below_dark_count ? "yes" : "no");
    row("QBER0 signal / decoy [%]",
        report::num(a.impact.qber0_signal * 100, 3) + " / " + report::num(a.impact.qber0_decoy * 100, 3));
    row("dQBER signal / decoy [%]",
        report::num(a.impact.delta_qber_signal * 100, 3) + " / " + report::num(a.impact.delta_qber_decoy * 100, 3));
    row("negligible (<= QBER0/10)", a.impact.negligible ? "yes" : "no");
    row("secure rate without / with [kbit/s]",
        report::num(a.report.secure_bps / 1e3, 3) + " / " + report::num(a.impact.adjusted.secure_bps / 1e3, 3));
    if (a.floor) {
        row("leakage floor [dB]", report::num(a.floor->floor_db, 2));
        row("above floor (margin dB)", std::string(a.floor->above_floor ? "yes" : "no") + " (" +
                                           report::num(a.floor->margin_db, 2) + ")");
    }
    row("recommended launch delay [ns]",
        a.recommended_delay_ns ? report::num(*a.recommended_delay_ns, 3) : "none feasible");
    row("Y_X best after delay", report::num(a.after_delay.y_best, 3, true));
    out.table = os.str();

    nlohmann::json contribs = nlohmann::json::array();
    for (std::size_t i = 0; i < a.modelled.size(); ++i) {
        const auto& c = a.modelled[i];
        const auto& g = a.summary.contributions[i];
        contribs.push_back({{"kind", to_string(c.kind)},
                            {"band", to_string(c.band)},
                            {"mechanism", to_string(c.mechanism)},
                            {"source_link", report::link_name(plan, c.source_link)},
                            {"power_ratio_db", report::num_json(c.power_ratio_db)},
                            {"calibrated_power_ratio_db", report::num_json(a.calibrated[i].power_ratio_db)},
                            {"arrival_offset_ns", c.arrival_offset_ns},
                            {"gain", g.gain},
                            {"in_gate_worst", g.in_gate_worst},
                            {"in_gate_best", g.in_gate_best},
                            {"removable", c.removable()}});
    }
    nlohmann::json floor = nullptr;
    if (a.floor) {
        floor = {{"floor_db", a.floor->floor_db}, {"margin_db", a.floor->margin_db}, {"above_floor", a.floor->above_floor}};
    }
    out.document = {
        {"command", "xtalk"},
        {"link", l.name},
        {"case", case_name},
        {"include_interband", include_interband},
        {"contributions", contribs},
        {"modelled_total_db", report::num_json(total_power_ratio_db(a.modelled, false))},
        {"measured_crosstalk_db", l.measured.crosstalk_db ? nlohmann::json(*l.measured.crosstalk_db) : nlohmann::json(nullptr)},
        {"calibration_offset_db", a.is_calibrated ? nlohmann::json(a.calibration_db) : nlohmann::json(nullptr)},
        {"y_worst", a.summary.y_worst},
        {"y_best", a.summary.y_best},
        {"chi_worst", a.summary.chi_worst},
        {"chi_best", a.summary.chi_best},
        {"below_dark_count", a.impact.below_dark_count},
        {"qber0_signal", a.impact.qber0_signal},
        {"qber0_decoy", a.impact.qber0_decoy},
        {"delta_qber_signal", a.impact.delta_qber_signal},
        {"delta_qber_decoy", a.impact.delta_qber_decoy},
        {"negligible", a.impact.negligible},
        {"secure_bps_without", a.report.secure_bps},
        {"secure_bps_with", a.impact.adjusted.secure_bps},
        {"leakage_floor", floor},
        {"recommended_delay_ns", a.recommended_delay_ns ? nlohmann::json(*a.recommended_delay_ns) : nlohmann::json(nullptr)},
        {"y_best_after_delay", a.after_delay.y_best},
    };
    return out;
}

// ---------------------------------------------------------------- keyrate

inline CommandOutput cmd_keyrate(const Scenario& sc, const std::string& link_name) {
    const ScenarioLink& l = find_link(sc, link_name);
    const auto in = link_model_inputs(sc, l);
    const auto r = link_performance(in.attenuation_db, in.source, in.detector, in.system);
    std::optional<double> observed_secure;
    if (l.measured.sifted_kbps && l.measured.signal_qber_pct && *l.measured.sifted_kbps > 0.0) {
        observed_secure = secure_rate_from_observed(*l.measured.sifted_kbps * 1e3, *l.measured.signal_qber_pct / 100.0,
                                                    in.attenuation_db, in.source, in.detector, in.system);
    }
    CommandOutput out;
    std::ostringstream os;
    os << "key rate " << l.name << "\n";
    os << report::pad("", 32, true) << report::pad("model", 14) << report::pad("measured", 14) << "\n";
    os << report::rule(60);
    auto row = [&os](const std::string& k, const std::string& model, const std::string& measured) {
        os << report::pad(k, 32, true) << report::pad(model, 14) << report::pad(measured, 14) << "\n";
    };
    auto opt = [](const std::optional<double>& v, int p) { return v ? report::num(*v, p) : std::string("-"); };
    row("attenuation [dB]", report::num(in.attenuation_db, 2), opt(l.measured.attenuation_db, 2));
    row("dead time [us]", report::num(in.detector.dead_time_us, 1), opt(l.measured.dead_time_us, 1));
    row("e_detector", report::num(in.system.e_detector, 5), in.e_detector_calibrated ? "calibrated" : "-");
    row("Q_mu", report::num(r.observables.q_mu, 3, true), "-");
    row("Q_nu", report::num(r.observables.q_nu, 3, true), "-");
    row("vacuum yield", report::num(r.observables.y_vac, 3, true), "-");
    row("vacuum-like", r.vacuum_like ? "yes" : "no", "-");
    row("Y1 lower", report::num(r.y1_lower, 3, true), "-");
    row("e1 upper", report::num(r.e1_upper, 4), "-");
    row("detection rate [kHz]", report::num(r.detection_rate_hz / 1e3, 2), "-");
    row("sifted [kbit/s]", report::num(r.sifted_bps / 1e3, 2), opt(l.measured.sifted_kbps, 2));
    row("signal QBER [%]", report::num(r.observables.e_mu * 100, 2), opt(l.measured.signal_qber_pct, 2));
    row("secure, model [kbit/s]", report::num(r.secure_bps / 1e3, 3), opt(l.measured.secure_kbps, 2));
    row("secure, from observed [kbit/s]", observed_secure ? report::num(*observed_secure / 1e3, 3) : "-",
        opt(l.measured.secure_kbps, 2));
    out.table = os.str();
    out.document = {{"command", "keyrate"},
                    {"link", l.name},
                    {"attenuation_db", in.attenuation_db},
                    {"dead_time_us", in.detector.dead_time_us},
                    {"e_detector", in.system.e_detector},
                    {"e_detector_calibrated", in.e_detector_calibrated},
                    {"eta_total", r.observables.eta_total},
                    {"q_mu", r.observables.q_mu},
                    {"q_nu", r.observables.q_nu},
                    {"y_vac", r.observables.y_vac},
                    {"e_mu", r.observables.e_mu},
                    {"e_nu", r.observables.e_nu},
                    {"vacuum_like", r.vacuum_like},
                    {"y1_lower", r.y1_lower},
                    {"e1_upper", r.e1_upper},
                    {"q1_lower", r.q1_lower},
                    {"y1_clamped", r.y1_clamped},
                    {"e1_clamped", r.e1_clamped},
                    {"raw_detection_rate_hz", r.raw_detection_rate_hz},
                    {"detection_rate_hz", r.detection_rate_hz},
                    {"r_per_pulse", r.r_per_pulse},
                    {"sifted_bps", r.sifted_bps},
                    {"secure_bps", r.secure_bps},
                    {"secure_from_observed_bps",
                     observed_secure ? nlohmann::json(*observed_secure) : nlohmann::json(nullptr)}};
    return out;
}

// ---------------------------------------------------------------- simulate

struct SimComparison {
    SimResult result;
    DecoyObservables analytic;
    std::array<double, 3> gain_z{};
    std::array<double, 3> qber_z{};
    double detection_rate_model_hz = 0.0;
};

inline SimComparison simulate_scenario_link(const Scenario& sc, const ScenarioLink& l, std::uint64_t pulses,
                                            std::uint64_t seed, unsigned workers, bool trace) {
    const auto in = link_model_inputs(sc, l);
    SimConfig cfg;
    cfg.n_pulses = pulses;
    cfg.seed = seed;
    cfg.attenuation_db = in.attenuation_db;
    cfg.source = in.source;
    cfg.detector = in.detector;
    cfg.system = in.system;
    cfg.record_timestamps = trace;
    cfg.workers = workers;
    SimComparison c;
    c.result = simulate_link(cfg);
    c.analytic = model_observables(in.attenuation_db, in.source, in.detector, in.system.e_detector);
    const std::array<double, 3> gains{c.analytic.q_mu, c.analytic.q_nu, c.analytic.y_vac};
    const std::array<double, 3> qbers{c.analytic.e_mu, c.analytic.e_nu, 0.5};
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& st = c.result.per_class[k];
        c.gain_z[k] = st.gain_se > 0.0 ? (st.gain - gains[k]) / st.gain_se : 0.0;
        c.qber_z[k] = st.qber_se > 0.0 ? (st.qber - qbers[k]) / st.qber_se : 0.0;
    }
    const double load = in.detector.dark_per_gate - std::expm1(-c.analytic.eta_total * in.source.mean_intensity());
    c.detection_rate_model_hz = dead_time_throughput(in.source.pulse_rate_hz * load, in.detector.dead_time_us);
    return c;
}

inline CommandOutput cmd_simulate(const Scenario& sc, const std::string& link_name, std::uint64_t pulses,
                                  std::uint64_t seed, unsigned workers = 0, std::ostream* trace = nullptr) {
    const ScenarioLink& l = find_link(sc, link_name);
    const auto c = simulate_scenario_link(sc, l, pulses, seed, workers, trace != nullptr);
    if (trace) {
        write_trace(*trace, c.result.trace);
    }
    static const char* const names[] = {"signal", "decoy", "vacuum"};
    const std::array<double, 3> gains{c.analytic.q_mu, c.analytic.q_nu, c.analytic.y_vac};
    const std::array<double, 3> qbers{c.analytic.e_mu, c.analytic.e_nu, 0.5};
    CommandOutput out;
    std::ostringstream os;
    os << "simulate " << l.name << ": " << pulses << " pulses, seed " << seed << "\n";
    os << report::pad("class", 8, true) << report::pad("live", 11) << report::pad("gain", 12)
       << report::pad("analytic", 12) << report::pad("z", 7) << report::pad("QBER %", 9) << report::pad("analytic", 10)
       << report::pad("z", 7) << "\n";
    os << report::rule(76);
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& st = c.result.per_class[k];
        os << report::pad(names[k], 8, true) << report::pad(std::to_string(st.live), 11)
           << report::pad(report::num(st.gain, 3, true), 12) << report::pad(report::num(gains[k], 3, true), 12)
           << report::pad(report::num(c.gain_z[k], 2), 7) << report::pad(report::num(st.qber * 100, 3), 9)
           << report::pad(report::num(qbers[k] * 100, 3), 10) << report::pad(report::num(c.qber_z[k], 2), 7) << "\n";
        classes.push_back({{"class", names[k]},
                           {"sent", st.sent},
                           {"live", st.live},
                           {"clicks", st.clicks},
                           {"sifted", st.sifted},
                           {"errors", st.errors},
                           {"gain", st.gain},
                           {"gain_se", st.gain_se},
                           {"gain_analytic", gains[k]},
                           {"gain_z", c.gain_z[k]},
                           {"qber", st.qber},
                           {"qber_se", st.qber_se},
                           {"qber_analytic", qbers[k]},
                           {"qber_z", c.qber_z[k]}});
    }
    os << "detection rate [Hz]: simulated " << report::num(c.result.detection_rate_hz, 1) << ", analytic "
       << report::num(c.detection_rate_model_hz, 1) << "\n";
    out.table = os.str();
    out.document = {{"command", "simulate"},
                    {"link", l.name},
                    {"pulses", pulses},
                    {"seed", seed},
                    {"classes", classes},
                    {"candidate_clicks", c.result.candidate_clicks},
                    {"accepted_clicks", c.result.accepted_clicks},
                    {"sifted_count", c.result.sifted_count},
                    {"detection_rate_hz", c.result.detection_rate_hz},
                    {"detection_rate_model_hz", c.detection_rate_model_hz},
                    {"trace_records", c.result.trace.size()}};
    return out;
}

// ---------------------------------------------------------------- reproduce

struct LinkReproduction {
    std::string link;
    double attenuation_db = 0.0;
    std::optional<double> measured_sifted_kbps;
    double modelled_sifted_kbps = 0.0;
    std::optional<double> sifted_ratio;
    std::optional<double> measured_secure_kbps;
    std::optional<double> modelled_secure_kbps;  // from observed sifted rate and QBER
    std::optional<double> secure_ratio;
    double pipeline_secure_kbps = 0.0;  // fully modelled, informational
    std::optional<double> measured_qber_pct;
    double modelled_qber_pct = 0.0;
    std::optional<FloorCheck> floor;
    double mc_signal_gain_z = 0.0;
    double mc_signal_qber_z = 0.0;
    bool sifted_pass = true;
    bool secure_pass = true;
    bool pass = true;
};

struct ReproductionReport {
    Tolerance tolerance = Tolerance::factor2;
    std::vector<LinkReproduction> links;
    std::optional<std::string> crosstalk_link;
    bool crosstalk_below_dark = true;
    bool crosstalk_negligible = true;
    double crosstalk_gain = 0.0;
    double delta_qber_signal = 0.0;
    double delta_qber_decoy = 0.0;
    bool pass = true;
};

inline ReproductionReport reproduce(const Scenario& sc, Tolerance tol, std::uint64_t mc_pulses, std::uint64_t seed,
                                    unsigned workers = 0) {
    ReproductionReport rep;
    rep.tolerance = tol;
    for (std::size_t i = 0; i < sc.links.size(); ++i) {
        const auto& l = sc.links[i];
        LinkReproduction r;
        r.link = l.name;
        const auto in = link_model_inputs(sc, l);
        r.attenuation_db = in.attenuation_db;
        const auto perf = link_performance(in.attenuation_db, in.source, in.detector, in.system);
        r.modelled_sifted_kbps = perf.sifted_bps / 1e3;
        r.pipeline_secure_kbps = perf.secure_bps / 1e3;
        r.modelled_qber_pct = perf.observables.e_mu * 100.0;
        r.measured_qber_pct = l.measured.signal_qber_pct;
        r.measured_sifted_kbps = l.measured.sifted_kbps;
        r.measured_secure_kbps = l.measured.secure_kbps;
        if (r.measured_sifted_kbps && *r.measured_sifted_kbps > 0.0) {
            r.sifted_ratio = r.modelled_sifted_kbps / *r.measured_sifted_kbps;
            r.sifted_pass = within_tolerance(*r.sifted_ratio, tol);
            if (l.measured.signal_qber_pct) {
                r.modelled_secure_kbps =
                    secure_rate_from_observed(*r.measured_sifted_kbps * 1e3, *l.measured.signal_qber_pct / 100.0,
                                              in.attenuation_db, in.source, in.detector, in.system) /
                    1e3;
            }
        }
        if (r.modelled_secure_kbps && r.measured_secure_kbps && *r.measured_secure_kbps > 0.0) {
            r.secure_ratio = *r.modelled_secure_kbps / *r.measured_secure_kbps;
            r.secure_pass = within_tolerance(*r.secure_ratio, tol);
        }
        if (l.measured.crosstalk_db) {
            r.floor = leakage_floor_check(*l.measured.crosstalk_db, in.attenuation_db, sc.source.extinction_ratio_db);
        }
        if (mc_pulses > 0) {
            const auto c = simulate_scenario_link(sc, l, mc_pulses, seed + i, workers, false);
            r.mc_signal_gain_z = c.gain_z[0];
            r.mc_signal_qber_z = c.qber_z[0];
        }
        r.pass = r.sifted_pass && r.secure_pass;
        rep.pass = rep.pass && r.pass;
        rep.links.push_back(r);
    }
    rep.crosstalk_link = sc.reference.crosstalk_link;
    if (rep.crosstalk_link) {
        const auto a = analyze_crosstalk(sc, *rep.crosstalk_link, GateCase::worst);
        rep.crosstalk_gain = a.impact.crosstalk_gain;
        rep.crosstalk_below_dark = a.impact.below_dark_count;
        rep.crosstalk_negligible = a.impact.negligible;
        rep.delta_qber_signal = a.impact.delta_qber_signal;
        rep.delta_qber_decoy = a.impact.delta_qber_decoy;
        rep.pass = rep.pass && rep.crosstalk_below_dark && rep.crosstalk_negligible;
    }
    return rep;
}

inline CommandOutput cmd_reproduce(const Scenario& sc, Tolerance tol, std::uint64_t mc_pulses, std::uint64_t seed,
                                   unsigned workers = 0) {
    const auto rep = reproduce(sc, tol, mc_pulses, seed, workers);
    auto opt = [](const std::optional<double>& v, int p) { return v ? report::num(*v, p) : std::string("-"); };
    auto optj = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    CommandOutput out;
    std::ostringstream os;
    os << "reproduction of " << (sc.name.empty() ? std::string("scenario") : sc.name) << " (tolerance "
       << to_string(tol) << ")\n";
    os << report::pad("link", 7, true) << report::pad("att dB", 8) << report::pad("sifted", 9)
       << report::pad("model", 9) << report::pad("ratio", 7) << report::pad("QBER%", 7) << report::pad("secure", 8)
       << report::pad("model", 8) << report::pad("ratio", 7) << report::pad("MC z", 7) << report::pad("", 6) << "\n";
    os << report::rule(83);
    nlohmann::json links = nlohmann::json::array();
    for (const auto& r : rep.links) {
        os << report::pad(r.link, 7, true) << report::pad(report::num(r.attenuation_db, 2), 8)
           << report::pad(opt(r.measured_sifted_kbps, 2), 9) << report::pad(report::num(r.modelled_sifted_kbps, 2), 9)
           << report::pad(opt(r.sifted_ratio, 2), 7) << report::pad(opt(r.measured_qber_pct, 2), 7)
           << report::pad(opt(r.measured_secure_kbps, 2), 8) << report::pad(opt(r.modelled_secure_kbps, 2), 8)
           << report::pad(opt(r.secure_ratio, 2), 7) << report::pad(report::num(r.mc_signal_gain_z, 2), 7)
           << report::pad(r.pass ? "PASS" : "FAIL", 6) << "\n";
        nlohmann::json floor = nullptr;
        if (r.floor) {
            floor = {{"floor_db", r.floor->floor_db}, {"margin_db", r.floor->margin_db},
                     {"above_floor", r.floor->above_floor}};
        }
        links.push_back({{"link", r.link},
                         {"attenuation_db", r.attenuation_db},
                         {"measured_sifted_kbps", optj(r.measured_sifted_kbps)},
                         {"modelled_sifted_kbps", r.modelled_sifted_kbps},
                         {"sifted_ratio", optj(r.sifted_ratio)},
                         {"measured_qber_pct", optj(r.measured_qber_pct)},
                         {"modelled_qber_pct", r.modelled_qber_pct},
                         {"measured_secure_kbps", optj(r.measured_secure_kbps)},
                         {"modelled_secure_kbps", optj(r.modelled_secure_kbps)},
                         {"secure_ratio", optj(r.secure_ratio)},
                         {"pipeline_secure_kbps", r.pipeline_secure_kbps},
                         {"leakage_floor", floor},
                         {"mc_signal_gain_z", r.mc_signal_gain_z},
                         {"mc_signal_qber_z", r.mc_signal_qber_z},
                         {"sifted_pass", r.sifted_pass},
                         {"secure_pass", r.secure_pass},
                         {"pass", r.pass}});
    }
    if (rep.crosstalk_link) {
        os << "crosstalk on " << *rep.crosstalk_link << ": Y_X " << report::num(rep.crosstalk_gain, 3, true)
           << (rep.crosstalk_below_dark ? " below" : " above") << " dark count; dQBER signal "
           << report::num(rep.delta_qber_signal * 100, 3) << "%, decoy " << report::num(rep.delta_qber_decoy * 100, 3)
           << "%" << (rep.crosstalk_negligible ? " (negligible)" : " (not negligible)") << "\n";
    }
    os << (rep.pass ? "PASS" : "FAIL") << "\n";
    out.table = os.str();
    out.document = {{"command", "reproduce"},
                    {"scenario", sc.name},
                    {"tolerance", to_string(tol)},
                    {"mc_pulses", mc_pulses},
                    {"seed", seed},
                    {"links", links},
                    {"crosstalk_link", rep.crosstalk_link ? nlohmann::json(*rep.crosstalk_link) : nlohmann::json(nullptr)},
                    {"crosstalk_gain", rep.crosstalk_gain},
                    {"crosstalk_below_dark", rep.crosstalk_below_dark},
                    {"crosstalk_negligible", rep.crosstalk_negligible},
                    {"delta_qber_signal", rep.delta_qber_signal},
                    {"delta_qber_decoy", rep.delta_qber_decoy},
                    {"pass", rep.pass}};
    out.exit_code = rep.pass ? kExitOk : kExitReproductionFailed;
    return out;
}

}  // namespace wsqkd

#endif  // WSQKD_WORKFLOWS_HPP
