#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "cmsdr/errors.hpp"
#include "cmsdr/random.hpp"

namespace cmsdr {

using cplx = std::complex<double>;

enum class Modulation { Bpsk, Qpsk };

inline int bits_per_symbol(Modulation m) { return m == Modulation::Bpsk ? 1 : 2; }

inline const char* modulation_name(Modulation m) { return m == Modulation::Bpsk ? "BPSK" : "QPSK"; }

// FIR channel taps plus per-sample circular complex noise power.
struct ChannelModel {
    std::vector<cplx> taps;
    double noise_variance = 0.0;

    int tap_count() const { return static_cast<int>(taps.size()); }

    void validate() const {
        if (taps.empty()) throw ValueError("channel needs at least one tap");
        bool any = false;
        for (const auto& h : taps) any = any || std::abs(h) > 0.0;
        if (!any) throw ValueError("channel taps are all zero");
        if (!(noise_variance >= 0.0)) throw ValueError("noise variance must be nonnegative");
    }
};

// BPSK: bit b -> 2b - 1 on the real axis.
// QPSK: bits consumed in pairs; the first bit of a pair sets the sign of the
// in-phase component, the second the quadrature component, both scaled to
// unit symbol energy. Adjacent constellation points differ in one bit.
inline std::vector<cplx> modulate(const std::vector<int>& bits, Modulation scheme) {
    std::vector<cplx> out;
    if (scheme == Modulation::Bpsk) {
        out.reserve(bits.size());
        for (int b : bits) out.emplace_back(2.0 * b - 1.0, 0.0);
        return out;
    }
    if (bits.size() % 2 != 0) throw ValueError("QPSK needs an even number of bits");
    const double a = 1.0 / std::sqrt(2.0);
    out.reserve(bits.size() / 2);
    for (std::size_t i = 0; i < bits.size(); i += 2) {
        out.emplace_back((2.0 * bits[i] - 1.0) * a, (2.0 * bits[i + 1] - 1.0) * a);
    }
    return out;
}

// x = h * s + v over the full convolution support (length N + K_h - 1),
// v i.i.d. circular complex Gaussian with the channel's per-sample variance.
inline std::vector<cplx> transmit(const std::vector<cplx>& symbols, const ChannelModel& channel,
                                  std::uint64_t seed) {
    channel.validate();
    const int n = static_cast<int>(symbols.size());
    const int kh = channel.tap_count();
    if (n == 0) return {};
    std::vector<cplx> x(static_cast<std::size_t>(n + kh - 1), cplx(0.0, 0.0));
    for (int k = 0; k < n + kh - 1; ++k) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < kh; ++j) {
            const int si = k - j;
            if (si >= 0 && si < n) acc += channel.taps[static_cast<std::size_t>(j)] * symbols[static_cast<std::size_t>(si)];
        }
        x[static_cast<std::size_t>(k)] = acc;
    }
    if (channel.noise_variance > 0.0) {
        Rng rng(mix_seed(seed, seed_tag::channel_noise));
        for (auto& v : x) v += rng.complex_gaussian(channel.noise_variance);
    }
    return x;
}

struct Frame {
    std::vector<int> coded_bits;
    std::vector<cplx> symbols;
    std::vector<cplx> received;
    std::uint64_t seed = 0;
};

// Sliding windows x_n = [x_n, x_{n-1}, ..., x_{n-L}] over the received
// sequence, their rank-1 outer products, and the window -> symbol pairing
// induced by the equalization delay. Only full windows are kept.
struct RegressorSet {
    int taps = 0;       // equalizer length L+1
    int n_symbols = 0;  // frame symbol count the pairing clips against
    int delay = 0;
    std::vector<Eigen::VectorXcd> windows;
    std::vector<Eigen::MatrixXcd> rank1;
    std::vector<int> paired_symbol;  // per window, -1 when outside [0, n_symbols)

    int window_count() const { return static_cast<int>(windows.size()); }

    int paired_count() const {
        int c = 0;
        for (int p : paired_symbol) c += (p >= 0);
        return c;
    }
};

inline RegressorSet build_regressors(const std::vector<cplx>& received, int L, int delay,
                                     int n_symbols = -1) {
    if (L < 0) throw ValueError("equalizer order L must be nonnegative");
    if (delay < 0) throw ValueError("delay must be nonnegative");
    const int len = static_cast<int>(received.size());
    if (len <= L) throw ValueError("received sequence too short to form one full window");
    if (n_symbols < 0) n_symbols = len;

    RegressorSet r;
    r.taps = L + 1;
    r.n_symbols = n_symbols;
    r.delay = delay;
    const int count = len - L;
    r.windows.reserve(static_cast<std::size_t>(count));
    r.rank1.reserve(static_cast<std::size_t>(count));
    r.paired_symbol.reserve(static_cast<std::size_t>(count));
    for (int n = L; n < len; ++n) {
        Eigen::VectorXcd x(L + 1);
        for (int j = 0; j <= L; ++j) x(j) = received[static_cast<std::size_t>(n - j)];
        r.rank1.push_back(x * x.adjoint());
        r.windows.push_back(std::move(x));
        const int sym = n - delay;
        r.paired_symbol.push_back(sym >= 0 && sym < n_symbols ? sym : -1);
    }
    return r;
}

// y[n] = w^H x_n for every window.
inline std::vector<cplx> equalize(const Eigen::VectorXcd& w, const RegressorSet& r) {
    if (w.size() != r.taps) throw ValueError("equalizer length does not match regressors");
    std::vector<cplx> y;
    y.reserve(r.windows.size());
    for (const auto& x : r.windows) y.push_back(w.dot(x));
    return y;
}

// Average absolute deviation of |y[n]|^2 from unit modulus.
inline double cm_cost(const Eigen::VectorXcd& w, const RegressorSet& r) {
    if (w.size() != r.taps) throw ValueError("equalizer length does not match regressors");
    if (r.windows.empty()) throw ValueError("empty regressor set");
    double acc = 0.0;
    for (const auto& x : r.windows) {
        const cplx y = w.dot(x);
        acc += std::abs(std::norm(y) - 1.0);
    }
    return acc / static_cast<double>(r.windows.size());
}

// Center-tap delay for an (L+1)-tap equalizer over a K_h-tap channel.
inline int default_delay(int L, int channel_taps) { return (L + channel_taps - 1) / 2; }

}  // namespace cmsdr
