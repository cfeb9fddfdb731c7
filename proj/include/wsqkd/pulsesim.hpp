#ifndef WSQKD_PULSESIM_HPP
#define WSQKD_PULSESIM_HPP

// Click-level Monte Carlo of a decoy-state link: Poisson photon numbers,
// channel loss, dark counts, misalignment errors, gated detection with
// non-paralyzable dead time, basis sifting and optional crosstalk clicks.
//
// Pulses are generated in fixed-size blocks. Block b draws from its own
// generator seeded by (seed, b), so blocks can be produced by any number of
// workers; dead time and counting then run over the blocks in index order.
// Output depends on (config, seed) only.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qkdrate.hpp"

namespace wsqkd {

struct SimConfig {
    std::uint64_t n_pulses = 1'000'000;
    std::uint64_t seed = 1;
    double attenuation_db = 0.0;
    SourceParams source;
    DetectorParams detector;
    SystemParams system;
    std::optional<double> chi_injection;
    bool record_timestamps = false;
    unsigned workers = 0;  // 0: hardware concurrency
};

struct ClassStats {
    std::uint64_t sent = 0;
    std::uint64_t live = 0;  // pulses that met an armed detector
    std::uint64_t clicks = 0;
    std::uint64_t sifted = 0;
    std::uint64_t errors = 0;
    double gain = 0.0;
    double gain_se = 0.0;
    double qber = 0.0;
    double qber_se = 0.0;
    bool operator==(const ClassStats&) const = default;
};

struct ClickRecord {
    std::uint64_t pulse_index = 0;
    std::uint8_t intensity_class = 0;  // 0 signal, 1 decoy, 2 vacuum
    std::uint8_t bit = 0;
    bool error = false;
    bool operator==(const ClickRecord&) const = default;
};

struct SimResult {
    std::array<ClassStats, 3> per_class{};
    std::uint64_t candidate_clicks = 0;  // before dead time
    std::uint64_t accepted_clicks = 0;
    std::uint64_t sifted_count = 0;
    std::uint64_t crosstalk_clicks = 0;
    double detection_rate_raw_hz = 0.0;
    double detection_rate_hz = 0.0;
    std::uint64_t elapsed_pulses = 0;
    std::vector<ClickRecord> trace;
    bool operator==(const SimResult&) const = default;
};

namespace sim {

inline constexpr std::uint64_t kBlockPulses = 1u << 16;
inline constexpr std::uint64_t kBlocksPerChunk = 64;

// Pulse code bits.
inline constexpr std::uint8_t kClassMask = 0x03;
inline constexpr std::uint8_t kClick = 0x04;
inline constexpr std::uint8_t kError = 0x08;
inline constexpr std::uint8_t kSifted = 0x10;
inline constexpr std::uint8_t kCrosstalk = 0x20;
inline constexpr std::uint8_t kBit = 0x40;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class BlockRng {
public:
    BlockRng(std::uint64_t seed, std::uint64_t block) : engine_(splitmix64(seed ^ splitmix64(block))) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Generates codes for all pulses block by block (in parallel) and hands each
/// chunk to `consume(first_pulse_index, codes)` in order.
template <typename Generate, typename Consume>
void run_blocks(std::uint64_t n_pulses, std::uint64_t seed, unsigned workers, Generate&& generate,
                Consume&& consume) {
    const std::uint64_t n_blocks = (n_pulses + kBlockPulses - 1) / kBlockPulses;
    const unsigned n_workers = resolve_workers(workers);
    std::vector<std::vector<std::uint8_t>> codes;
    for (std::uint64_t chunk_start = 0; chunk_start < n_blocks; chunk_start += kBlocksPerChunk) {
        const std::uint64_t chunk_blocks = std::min(kBlocksPerChunk, n_blocks - chunk_start);
        codes.assign(chunk_blocks, {});
        auto work = [&](std::uint64_t local) {
            const std::uint64_t block = chunk_start + local;
            const std::uint64_t first = block * kBlockPulses;
            const std::uint64_t count = std::min(kBlockPulses, n_pulses - first);
            BlockRng rng(seed, block);
            auto& out = codes[local];
            out.resize(count);
            for (std::uint64_t i = 0; i < count; ++i) {
                out[i] = generate(rng);
            }
        };
        if (n_workers <= 1 || chunk_blocks == 1) {
            for (std::uint64_t b = 0; b < chunk_blocks; ++b) {
                work(b);
            }
        } else {
            std::atomic<std::uint64_t> next{0};
            std::vector<std::jthread> pool;
            const unsigned spawn = static_cast<unsigned>(std::min<std::uint64_t>(n_workers, chunk_blocks));
            for (unsigned t = 0; t < spawn; ++t) {
                pool.emplace_back([&] {
                    for (std::uint64_t b = next++; b < chunk_blocks; b = next++) {
                        work(b);
                    }
                });
            }
        }
        for (std::uint64_t b = 0; b < chunk_blocks; ++b) {
            consume((chunk_start + b) * kBlockPulses, codes[b]);
        }
    }
}

inline std::uint64_t poisson_draw(BlockRng& rng, double mean) {
    if (mean <= 0.0) {
        return 0;
    }
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t n = 0;
    while (u > cdf && n < 200) {
        ++n;
        p *= mean / static_cast<double>(n);
        cdf += p;
    }
    return n;
}

/// Per-gate model shared by the link and mixing simulations.
struct PulseModel {
    std::array<double, 3> intensity{};
    std::array<double, 3> cumulative_weight{};
    std::array<double, 3> crosstalk_given_idle{};  // injection probability in gates without own click
    double eta = 0.0;
    double dark = 0.0;
    double e_det = 0.0;
    double q_sift = 0.5;
    bool force_signal = false;

    std::uint8_t operator()(BlockRng& rng) const {
        std::uint8_t cls = 0;
        if (!force_signal) {
            const double u = rng.uniform();
            cls = u < cumulative_weight[0] ? 0 : (u < cumulative_weight[1] ? 1 : 2);
        }
        const std::uint64_t photons = poisson_draw(rng, intensity[cls]);
        const bool detected = photons > 0 && rng.uniform() < -std::expm1(static_cast<double>(photons) * std::log1p(-eta));
        const bool dark_click = rng.uniform() < dark;
        bool crosstalk = false;
        if (!detected && !dark_click && crosstalk_given_idle[cls] > 0.0) {
            crosstalk = rng.uniform() < crosstalk_given_idle[cls];
        }
        std::uint8_t code = cls;
        if (detected || dark_click || crosstalk) {
            code |= kClick;
            const double e = detected ? e_det : 0.5;
            if (rng.uniform() < e) {
                code |= kError;
            }
            if (rng.uniform() < q_sift) {
                code |= kSifted;
            }
            const bool alice_bit = rng.uniform() < 0.5;
            if (alice_bit != ((code & kError) != 0)) {
                code |= kBit;
            }
            if (crosstalk) {
                code |= kCrosstalk;
            }
        }
        return code;
    }
};

inline double idle_probability(double intensity, double eta, double dark) {
    return (1.0 - dark) * std::exp(-eta * intensity);
}

inline PulseModel make_model(const SimConfig& cfg) {
    PulseModel m;
    const auto& src = cfg.source;
    m.eta = std::isinf(cfg.attenuation_db) ? 0.0 : eta_total(cfg.attenuation_db, cfg.detector);
    m.dark = cfg.detector.dark_per_gate;
    m.e_det = cfg.system.e_detector;
    m.q_sift = cfg.system.q_sift;
    for (std::size_t c = 0; c < 3; ++c) {
        m.intensity[c] = src.intensity(c);
    }
    m.cumulative_weight[0] = src.weight(0);
    m.cumulative_weight[1] = src.weight(0) + src.weight(1);
    m.cumulative_weight[2] = 1.0;
    if (cfg.chi_injection && *cfg.chi_injection > 0.0) {
        // Crosstalk clicks per gate: chi times the error-free signal gain.
        const auto sig = gain_and_qber(src.mu, m.eta, m.dark, m.e_det);
        const double per_gate = *cfg.chi_injection * sig.gain * (1.0 - sig.qber);
        for (std::size_t c = 0; c < 3; ++c) {
            const double idle = idle_probability(m.intensity[c], m.eta, m.dark);
            m.crosstalk_given_idle[c] = idle > 0.0 ? std::min(1.0, per_gate / idle) : 0.0;
        }
    }
    return m;
}

inline void finish_stats(ClassStats& s) {
    if (s.live > 0) {
        s.gain = static_cast<double>(s.clicks) / static_cast<double>(s.live);
        s.gain_se = std::sqrt(s.gain * (1.0 - s.gain) / static_cast<double>(s.live));
    }
    if (s.sifted > 0) {
        s.qber = static_cast<double>(s.errors) / static_cast<double>(s.sifted);
        s.qber_se = std::sqrt(s.qber * (1.0 - s.qber) / static_cast<double>(s.sifted));
    }
}

/// Number of gates blocked after a click.
inline std::uint64_t dead_gates(double dead_time_us, double clock_hz) {
    return static_cast<std::uint64_t>(std::llround(dead_time_us * 1e-6 * clock_hz));
}

}  // namespace sim

inline SimResult simulate_link(const SimConfig& cfg) {
    if (cfg.n_pulses == 0) {
        throw std::invalid_argument("simulate_link: n_pulses must be >= 1");
    }
    validate(cfg.source);
    validate(cfg.detector);
    const sim::PulseModel model = sim::make_model(cfg);
    const std::uint64_t dead = sim::dead_gates(cfg.detector.dead_time_us, cfg.source.pulse_rate_hz);

    SimResult r;
    std::uint64_t next_live = 0;
    sim::run_blocks(
        cfg.n_pulses, cfg.seed, cfg.workers, model, [&](std::uint64_t first, const std::vector<std::uint8_t>& codes) {
            for (std::uint64_t i = 0; i < codes.size(); ++i) {
                const std::uint64_t pulse = first + i;
                const std::uint8_t code = codes[i];
                const std::uint8_t cls = code & sim::kClassMask;
                auto& st = r.per_class[cls];
                ++st.sent;
                const bool click = (code & sim::kClick) != 0;
                r.candidate_clicks += click ? 1 : 0;
                if (pulse < next_live) {
                    continue;
                }
                ++st.live;
                if (!click) {
                    continue;
                }
                ++st.clicks;
                ++r.accepted_clicks;
                r.crosstalk_clicks += (code & sim::kCrosstalk) ? 1 : 0;
                next_live = pulse + 1 + dead;
                if (code & sim::kSifted) {
                    ++st.sifted;
                    ++r.sifted_count;
                    st.errors += (code & sim::kError) ? 1 : 0;
                    if (cfg.record_timestamps) {
                        r.trace.push_back(ClickRecord{pulse, cls, static_cast<std::uint8_t>((code & sim::kBit) ? 1 : 0),
                                                      (code & sim::kError) != 0});
                    }
                }
            }
        });
    for (auto& st : r.per_class) {
        sim::finish_stats(st);
    }
    const double n = static_cast<double>(cfg.n_pulses);
    r.elapsed_pulses = cfg.n_pulses;
    r.detection_rate_raw_hz = static_cast<double>(r.candidate_clicks) / n * cfg.source.pulse_rate_hz;
    r.detection_rate_hz = static_cast<double>(r.accepted_clicks) / n * cfg.source.pulse_rate_hz;
    return r;
}

struct MixResult {
    double qber0 = 0.0;        // sifted signal-only clicks
    double qber_mixed = 0.0;   // sifted signal and crosstalk clicks
    double delta = 0.0;        // qber_mixed - qber0
    double delta_se = 0.0;
    std::uint64_t signal_sifted = 0;
    std::uint64_t crosstalk_sifted = 0;
    bool operator==(const MixResult&) const = default;
};

/// Signal-state stream with crosstalk clicks injected at ratio chi (relative
/// to the error-free signal clicks) carrying random bits. Dead time is not
/// applied. The baseline QBER comes from the same stream, so the difference
/// only carries the crosstalk noise.
inline MixResult simulate_crosstalk_mix(const SimConfig& cfg) {
    if (!cfg.chi_injection || !(*cfg.chi_injection >= 0.0)) {
        throw std::invalid_argument("simulate_crosstalk_mix: chi_injection must be set and >= 0");
    }
    sim::PulseModel model = sim::make_model(cfg);
    model.force_signal = true;
    std::uint64_t sig_n = 0;
    std::uint64_t sig_err = 0;
    std::uint64_t x_n = 0;
    std::uint64_t x_err = 0;
    sim::run_blocks(cfg.n_pulses, cfg.seed, cfg.workers, model,
                    [&](std::uint64_t, const std::vector<std::uint8_t>& codes) {
                        for (std::uint8_t code : codes) {
                            if (!(code & sim::kClick) || !(code & sim::kSifted)) {
                                continue;
                            }
                            const bool err = (code & sim::kError) != 0;
                            if (code & sim::kCrosstalk) {
                                ++x_n;
                                x_err += err ? 1 : 0;
                            } else {
                                ++sig_n;
                                sig_err += err ? 1 : 0;
                            }
                        }
                    });
    MixResult m;
    m.signal_sifted = sig_n;
    m.crosstalk_sifted = x_n;
    if (sig_n == 0) {
        return m;
    }
    const double total = static_cast<double>(sig_n + x_n);
    m.qber0 = static_cast<double>(sig_err) / static_cast<double>(sig_n);
    m.qber_mixed = static_cast<double>(sig_err + x_err) / total;
    m.delta = m.qber_mixed - m.qber0;
    const double e = m.qber0;
    m.delta_se = std::sqrt(static_cast<double>(x_n) * (0.5 - e + e * e)) / total;
    return m;
}

/// Effective click rate of a detector clicking with probability rate/clock
/// per gate, behind non-paralyzable dead time on the gate grid.
inline double dead_time_empirical(double rate_hz, double tau_us, std::uint64_t n_pulses, std::uint64_t seed,
                                  double clock_hz = 2.0e7, unsigned workers = 0) {
    if (!(rate_hz >= 0.0 && rate_hz <= clock_hz) || n_pulses == 0) {
        throw std::invalid_argument("dead_time_empirical: need 0 <= rate <= clock and n_pulses >= 1");
    }
    const double p = rate_hz / clock_hz;
    const std::uint64_t dead = sim::dead_gates(tau_us, clock_hz);
    std::uint64_t next_live = 0;
    std::uint64_t accepted = 0;
    sim::run_blocks(
        n_pulses, seed, workers,
        [p](sim::BlockRng& rng) -> std::uint8_t { return rng.uniform() < p ? sim::kClick : 0; },
        [&](std::uint64_t first, const std::vector<std::uint8_t>& codes) {
            for (std::uint64_t i = 0; i < codes.size(); ++i) {
                const std::uint64_t pulse = first + i;
                if (pulse >= next_live && (codes[i] & sim::kClick)) {
                    ++accepted;
                    next_live = pulse + 1 + dead;
                }
            }
        });
    return static_cast<double>(accepted) / static_cast<double>(n_pulses) * clock_hz;
}

/// One line per sifted detection: pulse index, intensity class, bit, error flag.
inline void write_trace(std::ostream& os, const std::vector<ClickRecord>& trace) {
    os << "pulse_index,intensity_class,bit,error\n";
    for (const auto& c : trace) {
        os << c.pulse_index << ',' << static_cast<int>(c.intensity_class) << ',' << static_cast<int>(c.bit) << ','
           << (c.error ? 1 : 0) << '\n';
    }
}

}  // namespace wsqkd

#endif  // WSQKD_PULSESIM_HPP
