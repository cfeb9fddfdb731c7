#ifndef WSQKD_XTALK_HPP
#define WSQKD_XTALK_HPP

// QBER penalty of incoherent crosstalk, best/worst gate-timing aggregation and
// delay planning that pushes point crosstalk out of the detector gate.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "optics.hpp"
#include "qkdrate.hpp"

namespace wsqkd {

/// Extra QBER from crosstalk at ratio chi on a stream with error rate qber0.
/// Crosstalk clicks carry uniformly random bits; the result stays below chi/2.
inline double delta_qber(double chi, double qber0) {
    if (!(chi >= 0.0)) {
        throw std::domain_error("delta_qber: chi must be >= 0");
    }
    if (!(qber0 >= 0.0 && qber0 <= 0.5)) {
        throw std::domain_error("delta_qber: qber0 must be in [0, 0.5]");
    }
    return 0.5 * chi * (1.0 - qber0 * (3.0 - 2.0 * qber0)) / (1.0 + chi * (1.0 - qber0));
}

inline double chi_from_gains(double crosstalk_gain, double signal_gain) {
    if (!(signal_gain > 0.0)) {
        throw std::invalid_argument("chi_from_gains: signal gain must be > 0");
    }
    return crosstalk_gain / signal_gain;
}

enum class GateCase { worst, best };
enum class IncludedBand { intraband_only, all };

struct GatedContribution {
    CrosstalkContribution contribution;
    double gain = 0.0;  // per-gate click probability it adds
    bool in_gate_worst = true;
    bool in_gate_best = false;
};

struct CrosstalkSummary {
    double chi_worst = 0.0;
    double chi_best = 0.0;
    double y_worst = 0.0;  // crosstalk gain per gate
    double y_best = 0.0;
    IncludedBand included_band = IncludedBand::intraband_only;
    std::vector<GatedContribution> contributions;

    double chi(GateCase c) const { return c == GateCase::worst ? chi_worst : chi_best; }
    double gain(GateCase c) const { return c == GateCase::worst ? y_worst : y_best; }
};

/// True when `offset` (relative to the signal arrival, modulo `period`) lies
/// within `half_width` of the gate centre.
inline bool within_gate(double offset_ns, double half_width_ns, double period_ns) {
    const double x = wrap_offset(offset_ns, period_ns);
    return std::min(x, period_ns - x) <= half_width_ns;
}

/// Point terms count in the worst case always and in the best case only when
/// they already land inside the gate; continuous terms count in both with the
/// gate duty cycle.
inline CrosstalkSummary aggregate_chi(std::span<const CrosstalkContribution> contributions, double gate_ns,
                                      double pulse_period_ns, double victim_signal_gain, double source_mean_photon,
                                      double det_efficiency, bool include_interband = false) {
    if (!(gate_ns <= pulse_period_ns)) {
        throw std::invalid_argument("aggregate_chi: gate must not exceed the pulse period");
    }
    CrosstalkSummary s;
    s.included_band = include_interband ? IncludedBand::all : IncludedBand::intraband_only;
    const double duty = gate_ns / pulse_period_ns;
    for (const auto& c : contributions) {
        GatedContribution g;
        g.contribution = c;
        const double y = source_mean_photon * db_to_linear(c.power_ratio_db) * det_efficiency;
        if (c.kind == CrosstalkKind::point) {
            g.gain = y;
            g.in_gate_worst = true;
            g.in_gate_best = within_gate(c.arrival_offset_ns, gate_ns / 2.0, pulse_period_ns);
        } else {
            g.gain = y * duty;
            g.in_gate_worst = true;
            g.in_gate_best = true;
        }
        const bool counted = include_interband || c.band == CrosstalkBand::intraband;
        if (counted) {
            s.y_worst += g.in_gate_worst ? g.gain : 0.0;
            s.y_best += g.in_gate_best ? g.gain : 0.0;
        }
        s.contributions.push_back(g);
    }
    if (victim_signal_gain > 0.0) {
        s.chi_worst = s.y_worst / victim_signal_gain;
        s.chi_best = s.y_best / victim_signal_gain;
    }
    return s;
}

struct FloorCheck {
    bool above_floor = false;
    double floor_db = 0.0;
    double margin_db = 0.0;
};

/// Compares measured crosstalk with the modulator-leakage floor
/// -(extinction ratio) - attenuation.
inline FloorCheck leakage_floor_check(double crosstalk_db, double attenuation_db, double extinction_ratio_db) {
    FloorCheck f;
    f.floor_db = -extinction_ratio_db - attenuation_db;
    f.margin_db = crosstalk_db - f.floor_db;
    f.above_floor = crosstalk_db > f.floor_db;
    return f;
}

inline constexpr double kDelayGuardNs = 0.25;

/// Smallest launch delay in [0, period) that moves every point contribution
/// at least `guard` outside the gate. nullopt when no such delay exists.
inline std::optional<double> recommend_delay(std::span<const CrosstalkContribution> contributions, double gate_ns,
                                             double pulse_period_ns, double guard_ns = kDelayGuardNs) {
    if (!(gate_ns < pulse_period_ns)) {
        throw std::invalid_argument("recommend_delay: gate must be shorter than the pulse period");
    }
    const double half = gate_ns / 2.0 + guard_ns;
    if (2.0 * half >= pulse_period_ns) {
        bool any_point = false;
        for (const auto& c : contributions) {
            any_point = any_point || c.kind == CrosstalkKind::point;
        }
        return any_point ? std::nullopt : std::optional<double>(0.0);
    }
    // Forbidden delays: open intervals (-half - x, half - x) modulo the period.
    std::vector<std::pair<double, double>> forbidden;
    for (const auto& c : contributions) {
        if (c.kind != CrosstalkKind::point) {
            continue;
        }
        const double lo = wrap_offset(-half - c.arrival_offset_ns, pulse_period_ns);
        const double hi = lo + 2.0 * half;
        if (hi <= pulse_period_ns) {
            forbidden.emplace_back(lo, hi);
        } else {
            forbidden.emplace_back(lo, pulse_period_ns);
            forbidden.emplace_back(-1.0, hi - pulse_period_ns);  // open at the low end: covers 0
        }
    }
    std::sort(forbidden.begin(), forbidden.end());
    // Sweep from 0 for the first point not strictly inside any interval.
    double candidate = 0.0;
    bool moved = true;
    while (moved) {
        moved = false;
        for (const auto& [lo, hi] : forbidden) {
            if (candidate > lo && candidate < hi) {
                candidate = hi;
                moved = true;
            }
        }
    }
    if (candidate >= pulse_period_ns) {
        return std::nullopt;
    }
    return candidate;
}

/// Point contributions shifted by `delay_ns`, as if the interfering
/// transmitters were delayed.
inline std::vector<CrosstalkContribution> shift_point_offsets(std::span<const CrosstalkContribution> contributions,
                                                              double delay_ns, double pulse_period_ns) {
    std::vector<CrosstalkContribution> out(contributions.begin(), contributions.end());
    for (auto& c : out) {
        if (c.kind == CrosstalkKind::point) {
            c.arrival_offset_ns = wrap_offset(c.arrival_offset_ns + delay_ns, pulse_period_ns);
        }
    }
    return out;
}

/// Uniform dB offset that rescales modelled leakage so that the crosstalk
/// gain of the chosen case equals a measured reference.
inline double calibration_offset_db(const CrosstalkSummary& summary, double target_gain, GateCase which) {
    const double current = summary.gain(which);
    if (!(current > 0.0) || !(target_gain > 0.0)) {
        throw std::invalid_argument("calibration_offset_db: gains must be positive");
    }
    return 10.0 * std::log10(target_gain / current);
}

inline std::vector<CrosstalkContribution> offset_power(std::span<const CrosstalkContribution> contributions,
                                                       double offset_db) {
    std::vector<CrosstalkContribution> out(contributions.begin(), contributions.end());
    for (auto& c : out) {
        c.power_ratio_db += offset_db;
    }
    return out;
}

struct CrosstalkImpact {
    KeyRateReport adjusted;
    double crosstalk_gain = 0.0;
    double chi_signal = 0.0;
    double chi_decoy = 0.0;
    double delta_qber_signal = 0.0;
    double delta_qber_decoy = 0.0;
    double qber0_signal = 0.0;
    double qber0_decoy = 0.0;
    bool below_dark_count = true;
    bool negligible = true;  // both deltas <= QBER0/10 and gain <= dark count
};

/// Adds the crosstalk gain to every intensity class, raises each QBER by the
/// corresponding delta_qber and recomputes bounds and rate. The same crosstalk
/// gain applies to all intensities; each class uses its own gain for chi.
inline CrosstalkImpact apply_crosstalk_to_link(const KeyRateReport& report, const CrosstalkSummary& summary,
                                               GateCase which = GateCase::worst) {
    CrosstalkImpact imp;
    imp.adjusted = report;
    const double y = summary.gain(which);
    imp.crosstalk_gain = y;
    const auto& o = report.observables;
    imp.qber0_signal = o.e_mu;
    imp.qber0_decoy = o.e_nu;
    imp.below_dark_count = y <= report.detector.dark_per_gate;
    if (y <= 0.0) {
        imp.negligible = imp.below_dark_count;
        return imp;
    }
    imp.chi_signal = chi_from_gains(y, o.q_mu);
    imp.chi_decoy = chi_from_gains(y, o.q_nu);
    imp.delta_qber_signal = delta_qber(imp.chi_signal, o.e_mu);
    imp.delta_qber_decoy = delta_qber(imp.chi_decoy, o.e_nu);

    auto& a = imp.adjusted.observables;
    a.q_mu = o.q_mu + y;
    a.q_nu = o.q_nu + y;
    a.y_vac = o.y_vac + y;
    a.e_mu = o.e_mu + imp.delta_qber_signal;
    a.e_nu = o.e_nu + imp.delta_qber_decoy;
    detail::fill_bounds_and_rate(imp.adjusted);

    imp.negligible = imp.below_dark_count && imp.delta_qber_signal <= o.e_mu / 10.0 &&
                     imp.delta_qber_decoy <= o.e_nu / 10.0;
    return imp;
}

}  // namespace wsqkd

#endif  // WSQKD_XTALK_HPP
