#ifndef WSQKD_TESTS_ORACLES_HPP
#define WSQKD_TESTS_ORACLES_HPP

// Reference computations written without the library, used to check it.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

/// Gain and QBER of a Poisson source by summing photon-number terms:
/// Y_n = y0 + 1 - (1 - eta)^n and e_n Y_n = y0/2 + e_det (1 - (1 - eta)^n).
struct GainQber {
    double gain = 0.0;
    double qber = 0.0;
};

inline GainQber poisson_series(double intensity, double eta, double y0, double e_det) {
    double gain = 0.0;
    double err = 0.0;
    double p = std::exp(-intensity);
    for (int n = 0; n < 200; ++n) {
        const double eta_n = 1.0 - std::pow(1.0 - eta, n);
        gain += p * (y0 + eta_n);
        err += p * (0.5 * y0 + e_det * eta_n);
        p *= intensity / (n + 1);
    }
    return {gain, gain > 0.0 ? err / gain : 0.0};
}

inline double entropy(double x) {
    if (x <= 0.0 || x >= 1.0) {
        return 0.0;
    }
    return -(x * std::log(x) + (1 - x) * std::log(1 - x)) / std::log(2.0);
}

/// QBER shift from mixing S signal clicks (error rate q) with chi*S*(1-q)
/// random-bit clicks, by direct counting.
inline double mixed_qber_shift(double chi, double q) {
    const double signal = 1.0;
    const double xt = chi * signal * (1.0 - q);
    const double mixed = (q * signal + 0.5 * xt) / (signal + xt);
    return mixed - q;
}

/// Stationary click rate per gate of a detector with click probability p per
/// live gate that stays blind for k gates after each click, by power
/// iteration over the (k+1)-state chain.
inline double dead_time_chain(double p, std::size_t k) {
    std::vector<double> pi(k + 1, 0.0);
    pi[0] = 1.0;  // state 0: armed; state j > 0: j gates of blindness left
    for (int it = 0; it < 200000; ++it) {
        std::vector<double> next(k + 1, 0.0);
        next[0] += pi[0] * (1.0 - p);
        if (k == 0) {
            next[0] += pi[0] * p;
        } else {
            next[k] += pi[0] * p;
            for (std::size_t j = 1; j <= k; ++j) {
                next[j - 1] += pi[j];
            }
        }
        double diff = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
            diff += std::abs(next[j] - pi[j]);
        }
        pi = std::move(next);
        if (diff < 1e-15) {
            break;
        }
    }
    return pi[0] * p;
}

/// Independent Hamiltonian-decomposition check from raw successor maps:
/// every map is one cycle through all nodes, and the undirected edges of all
/// maps partition the complete graph.
inline bool is_hamiltonian_decomposition(const std::vector<std::vector<std::size_t>>& successor, std::size_t nodes) {
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& succ : successor) {
        if (succ.size() != nodes) {
            return false;
        }
        std::size_t v = 0;
        std::set<std::size_t> seen;
        for (std::size_t step = 0; step < nodes; ++step) {
            if (!seen.insert(v).second || succ[v] >= nodes || succ[v] == v) {
                return false;
            }
            const auto e = std::minmax(v, succ[v]);
            if (!edges.insert({e.first, e.second}).second) {
                return false;
            }
            v = succ[v];
        }
        if (v != 0 || seen.size() != nodes) {
            return false;
        }
    }
    return edges.size() == nodes * (nodes - 1) / 2;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace oracle

#endif  // WSQKD_TESTS_ORACLES_HPP
