#ifndef WSQKD_QKDRATE_HPP
#define WSQKD_QKDRATE_HPP

// Analytic decoy-state BB84 model for a Poisson source, threshold detector
// and three intensities (signal, decoy, near-vacuum). No finite-size terms.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wsqkd {

struct SourceParams {
    double mu = 0.6;
    double nu = 0.2;
    double extinction_ratio_db = 27.0;
    std::array<unsigned, 3> state_ratio{6, 3, 1};  // signal : decoy : vacuum
    double pulse_rate_hz = 2.0e7;
    double pulse_width_ps = 750.0;
    bool operator==(const SourceParams&) const = default;

    /// Mean photon number leaking through the modulator in the vacuum state.
    double vacuum_intensity() const {
        return std::isinf(extinction_ratio_db) ? 0.0 : mu * std::pow(10.0, -extinction_ratio_db / 10.0);
    }
    double weight(std::size_t cls) const {
        const double total = static_cast<double>(state_ratio[0] + state_ratio[1] + state_ratio[2]);
        return static_cast<double>(state_ratio.at(cls)) / total;
    }
    double signal_fraction() const { return weight(0); }
    double mean_intensity() const { return weight(0) * mu + weight(1) * nu + weight(2) * vacuum_intensity(); }
    double intensity(std::size_t cls) const {
        switch (cls) {
            case 0: return mu;
            case 1: return nu;
            default: return vacuum_intensity();
        }
    }
};

struct DetectorParams {
    double efficiency = 0.20;
    double dark_per_gate = 2.0e-5;
    double gate_ns = 1.0;
    double dead_time_us = 0.0;
    double max_trigger_hz = 2.0e7;
    bool operator==(const DetectorParams&) const = default;
};

struct SystemParams {
    double e_detector = 0.01;  // intrinsic misalignment error
    double f_ec = 1.22;        // error-correction inefficiency
    double q_sift = 0.5;
    static constexpr double e0 = 0.5;  // error rate of background counts
    bool operator==(const SystemParams&) const = default;
};

inline void validate(const SourceParams& s) {
    if (!(s.nu > 0.0 && s.nu < s.mu)) {
        throw std::invalid_argument("source: require 0 < nu < mu");
    }
    if (s.state_ratio[0] == 0 || s.state_ratio[1] == 0 || s.state_ratio[2] == 0) {
        throw std::invalid_argument("source: state ratios must be positive integers");
    }
    if (!(s.pulse_rate_hz > 0.0)) {
        throw std::invalid_argument("source: pulse_rate_hz must be > 0");
    }
    if (!(s.extinction_ratio_db >= 0.0)) {
        throw std::invalid_argument("source: extinction_ratio_db must be >= 0");
    }
}

inline void validate(const DetectorParams& d) {
    if (!(d.efficiency > 0.0 && d.efficiency <= 1.0)) {
        throw std::invalid_argument("detector: efficiency must be in (0, 1]");
    }
    if (!(d.dark_per_gate >= 0.0 && d.dark_per_gate < 1.0)) {
        throw std::invalid_argument("detector: dark_per_gate must be in [0, 1)");
    }
    if (!(d.dead_time_us >= 0.0)) {
        throw std::invalid_argument("detector: dead_time_us must be >= 0");
    }
}

inline void validate(const SystemParams& s) {
    if (!(s.e_detector >= 0.0 && s.e_detector < 0.5)) {
        throw std::invalid_argument("system: e_detector must be in [0, 0.5)");
    }
    if (!(s.f_ec >= 1.0)) {
        throw std::invalid_argument("system: f_ec must be >= 1");
    }
    if (!(s.q_sift > 0.0 && s.q_sift <= 1.0)) {
        throw std::invalid_argument("system: q_sift must be in (0, 1]");
    }
}

inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("binary_entropy: argument outside [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return 0.0;
    }
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// End-to-end detection probability of one photon.
inline double eta_total(double attenuation_db, const DetectorParams& det) {
    if (!(attenuation_db >= 0.0)) {
        throw std::invalid_argument("eta_total: attenuation must be >= 0 dB");
    }
    return det.efficiency * std::pow(10.0, -attenuation_db / 10.0);
}

struct GainQber {
    double gain = 0.0;
    double qber = 0.0;
};

inline GainQber gain_and_qber(double intensity, double eta, double y0, double e_det) {
    if (!(intensity >= 0.0)) {
        throw std::invalid_argument("gain_and_qber: intensity must be >= 0");
    }
    const double signal = -std::expm1(-eta * intensity);
    const double gain = y0 + signal;
    if (gain <= 0.0) {
        return {0.0, SystemParams::e0};
    }
    return {gain, (SystemParams::e0 * y0 + e_det * signal) / gain};
}

/// Gain of the near-vacuum state: dark counts plus photons the modulator
/// fails to extinguish.
inline double vacuum_state_yield(const SourceParams& src, double eta, double y0) {
    return y0 - std::expm1(-eta * src.vacuum_intensity());
}

/// Near-vacuum pulses behave as vacuum when their leaked yield stays below
/// the detector's own dark count.
inline bool is_vacuum_like(double vacuum_yield, double y0, double dark_per_gate) {
    return vacuum_yield - y0 < dark_per_gate;
}

struct DecoyObservables {
    double q_mu = 0.0;
    double q_nu = 0.0;
    double y_vac = 0.0;
    double e_mu = 0.0;
    double e_nu = 0.0;
    double eta_total = 0.0;
    bool operator==(const DecoyObservables&) const = default;
};

struct DecoyBounds {
    double y1_lower = 0.0;
    double e1_upper = 0.5;
    double q1_lower = 0.0;
    bool y1_clamped = false;
    bool e1_clamped = false;
};

/// Three-intensity lower bound on the single-photon yield and upper bound on
/// its error rate, from signal (mu) and decoy (nu) observables and the
/// vacuum yield y0.
inline DecoyBounds decoy_bounds(double q_mu, double q_nu, double e_mu, double e_nu, double mu, double nu,
                                double y0) {
    if (!(nu > 0.0 && nu < mu)) {
        throw std::invalid_argument("decoy_bounds: require 0 < nu < mu");
    }
    (void)e_mu;
    DecoyBounds b;
    const double mu2 = mu * mu;
    const double nu2 = nu * nu;
    double y1 = (mu / (mu * nu - nu2)) *
                (q_nu * std::exp(nu) - q_mu * std::exp(mu) * nu2 / mu2 - (mu2 - nu2) / mu2 * y0);
    if (!(y1 > 0.0)) {
        b.y1_clamped = true;
        b.y1_lower = 0.0;
        b.e1_upper = 0.5;
        b.e1_clamped = true;
        b.q1_lower = 0.0;
        return b;
    }
    b.y1_lower = y1;
    double e1 = (e_nu * q_nu * std::exp(nu) - SystemParams::e0 * y0) / (y1 * nu);
    if (e1 > 0.5) {
        e1 = 0.5;
        b.e1_clamped = true;
    } else if (e1 < 0.0) {
        e1 = 0.0;
    }
    b.e1_upper = e1;
    b.q1_lower = y1 * mu * std::exp(-mu);
    return b;
}

/// Secure bits per clock, clamped at zero.
inline double gllp_rate(double q_sift, double q_mu, double e_mu, double q1_lower, double e1_upper, double f_ec) {
    const double e1 = std::min(e1_upper, 0.5);
    const double r = q_sift * (-q_mu * f_ec * binary_entropy(e_mu) + q1_lower * (1.0 - binary_entropy(e1)));
    return std::max(0.0, r);
}

/// Non-paralyzable dead time: R / (1 + R tau).
inline double dead_time_throughput(double raw_detection_rate_hz, double dead_time_us) {
    if (!(raw_detection_rate_hz >= 0.0)) {
        throw std::invalid_argument("dead_time_throughput: rate must be >= 0");
    }
    return raw_detection_rate_hz / (1.0 + raw_detection_rate_hz * dead_time_us * 1e-6);
}

inline DecoyObservables model_observables(double attenuation_db, const SourceParams& src,
                                          const DetectorParams& det, double e_detector) {
    DecoyObservables o;
    o.eta_total = std::isinf(attenuation_db) ? 0.0 : eta_total(attenuation_db, det);
    const auto sig = gain_and_qber(src.mu, o.eta_total, det.dark_per_gate, e_detector);
    const auto dec = gain_and_qber(src.nu, o.eta_total, det.dark_per_gate, e_detector);
    o.q_mu = sig.gain;
    o.e_mu = sig.qber;
    o.q_nu = dec.gain;
    o.e_nu = dec.qber;
    o.y_vac = vacuum_state_yield(src, o.eta_total, det.dark_per_gate);
    return o;
}

/// Misalignment error that makes the modelled signal QBER equal `signal_qber`.
inline double calibrate_e_detector(double attenuation_db, double signal_qber, const SourceParams& src,
                                   const DetectorParams& det) {
    const double eta = eta_total(attenuation_db, det);
    const double signal = -std::expm1(-eta * src.mu);
    const double gain = det.dark_per_gate + signal;
    if (signal <= 0.0) {
        throw std::invalid_argument("calibrate_e_detector: no signal detections at this attenuation");
    }
    const double e = (signal_qber * gain - SystemParams::e0 * det.dark_per_gate) / signal;
    if (!(e >= 0.0 && e < 0.5)) {
        throw std::invalid_argument("calibrate_e_detector: QBER " + std::to_string(signal_qber) +
                                    " not reachable at this attenuation");
    }
    return e;
}

struct KeyRateReport {
    // inputs echo
    double attenuation_db = 0.0;
    SourceParams source;
    DetectorParams detector;
    SystemParams system;
    // intermediates
    DecoyObservables observables;
    double raw_detection_rate_hz = 0.0;
    double detection_rate_hz = 0.0;  // after dead time
    bool vacuum_like = true;
    bool y1_clamped = false;
    bool e1_clamped = false;
    // results
    double y1_lower = 0.0;
    double e1_upper = 0.5;
    double q1_lower = 0.0;
    double r_per_pulse = 0.0;
    double sifted_bps = 0.0;
    double secure_bps = 0.0;
};

namespace detail {

inline void fill_bounds_and_rate(KeyRateReport& r) {
    const auto& o = r.observables;
    const auto b = decoy_bounds(o.q_mu, o.q_nu, o.e_mu, o.e_nu, r.source.mu, r.source.nu, o.y_vac);
    r.y1_lower = b.y1_lower;
    r.e1_upper = b.e1_upper;
    r.q1_lower = b.q1_lower;
    r.y1_clamped = b.y1_clamped;
    r.e1_clamped = b.e1_clamped;
    r.r_per_pulse = gllp_rate(r.system.q_sift, o.q_mu, o.e_mu, b.q1_lower, b.e1_upper, r.system.f_ec);
    const double per_sifted = o.q_mu > 0.0 ? r.r_per_pulse / (r.system.q_sift * o.q_mu) : 0.0;
    r.secure_bps = r.sifted_bps * per_sifted;
}

}  // namespace detail

/// Full analytic chain for one link: gains, dead-time-limited detection rate,
/// sifted rate, decoy bounds and GLLP rate. Decoy and vacuum pulses load the
/// detector through the mean intensity; only signal pulses feed the key.
inline KeyRateReport link_performance(double attenuation_db, const SourceParams& src, const DetectorParams& det,
                                      const SystemParams& sys) {
    validate(src);
    validate(det);
    validate(sys);
    if (src.pulse_rate_hz > det.max_trigger_hz) {
        throw std::invalid_argument("pulse rate exceeds the detector's maximum trigger rate");
    }
    KeyRateReport r;
    r.attenuation_db = attenuation_db;
    r.source = src;
    r.detector = det;
    r.system = sys;
    r.observables = model_observables(attenuation_db, src, det, sys.e_detector);
    const double eta = r.observables.eta_total;
    const double load = det.dark_per_gate - std::expm1(-eta * src.mean_intensity());
    r.raw_detection_rate_hz = src.pulse_rate_hz * load;
    r.detection_rate_hz = dead_time_throughput(r.raw_detection_rate_hz, det.dead_time_us);
    r.sifted_bps = r.detection_rate_hz * src.signal_fraction() * sys.q_sift;
    r.vacuum_like = is_vacuum_like(r.observables.y_vac, det.dark_per_gate, det.dark_per_gate);
    detail::fill_bounds_and_rate(r);
    return r;
}

/// Secure rate for a measured sifted rate and signal QBER. The decoy
/// observables are modelled at the given attenuation with the misalignment
/// calibrated to the observed QBER.
inline double secure_rate_from_observed(double sifted_bps, double e_mu_observed, double attenuation_db,
                                        const SourceParams& src, const DetectorParams& det,
                                        const SystemParams& sys) {
    if (!(sifted_bps > 0.0)) {
        throw std::invalid_argument("secure_rate_from_observed: sifted rate must be > 0");
    }
    if (e_mu_observed >= 0.5) {
        return 0.0;
    }
    const double e_det = calibrate_e_detector(attenuation_db, e_mu_observed, src, det);
    const auto o = model_observables(attenuation_db, src, det, e_det);
    const auto b = decoy_bounds(o.q_mu, o.q_nu, e_mu_observed, o.e_nu, src.mu, src.nu, o.y_vac);
    const double per_sifted =
        -sys.f_ec * binary_entropy(e_mu_observed) + (b.q1_lower / o.q_mu) * (1.0 - binary_entropy(b.e1_upper));
    return sifted_bps * std::max(0.0, per_sifted);
}

}  // namespace wsqkd

#endif  // WSQKD_QKDRATE_HPP
