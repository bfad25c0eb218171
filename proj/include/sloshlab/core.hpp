// sloshlab core: error types, constants, and the fixed-step RK4 stepper
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <thread>
#include <cstdint>
#include <exception>
#include <mutex>
#include <atomic>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sloshlab {

// =============================================================================
// Errors
// =============================================================================

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or overflowing state during evaluation or integration.
class StateCorruptionError : public Error {
public:
    StateCorruptionError(const std::string &what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// A parameter set or configuration violates its invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    CalibrationError(const std::string &what, double achieved_peak)
        : Error(what), achieved_peak_(achieved_peak) {}
    double achieved_peak() const noexcept { return achieved_peak_; }

private:
    double achieved_peak_;
};

class TrainingError : public Error {
public:
    TrainingError(const std::string &what, std::size_t epoch)
        : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

// =============================================================================
// Constants
// =============================================================================

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kRadToDeg = 180.0 / kPi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kPascalPerPsi = 6894.757293168;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Reaction-wheel torque limit of the XACT-50 class ADCS [N·m].
inline constexpr double kTorqueMax = 0.006;
/// Default control / sensor / integration step [s] (100 Hz).
inline constexpr double kDefaultDt = 0.01;

inline constexpr double deg_to_rad(double deg) { return deg * kDegToRad; }
inline constexpr double rad_to_deg(double rad) { return rad * kRadToDeg; }

inline bool all_finite(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

// =============================================================================
// Fixed-step classical Runge-Kutta
// =============================================================================

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
inline Vec<N> axpy(const Vec<N> &x, double a, const Vec<N> &k) {
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + a * k[i];
    return out;
}

/// One classical RK4 step of x' = f(t, x).
template <std::size_t N, typename F>
Vec<N> rk4_step(F &&f, double t, const Vec<N> &x, double dt) {
    const Vec<N> k1 = f(t, x);
    const Vec<N> k2 = f(t + 0.5 * dt, axpy(x, 0.5 * dt, k1));
    const Vec<N> k3 = f(t + 0.5 * dt, axpy(x, 0.5 * dt, k2));
    const Vec<N> k4 = f(t + dt, axpy(x, dt, k3));
    Vec<N> out;
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

/// Number of samples produced by a fixed-step run over [0, t_end]:
/// floor(t_end/dt) + 1, robust to representation error in t_end/dt.
inline std::size_t sample_count(double t_end, double dt) {
    return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9)) + 1;
}

// =============================================================================
// Seeds and parallel execution
// =============================================================================

/// SplitMix64 finaliser; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(base) ^ a) ^ b);
}

inline unsigned default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
/// by index so the outcome does not depend on scheduling. The first exception
/// thrown is rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F &&fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// =============================================================================
// Series statistics
// =============================================================================

namespace stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double rms(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x * x;
    return std::sqrt(s / static_cast<double>(xs.size()));
}

/// Sample standard deviation (n-1 denominator).
inline double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double max_abs(std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return 0.0;
    const double ma = mean(a.first(n));
    const double mb = mean(b.first(n));
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

/// Range-normalised RMSE result; `degenerate` when the target range is < 1e-12.
struct Nrmse {
    double value = 0.0;
    double rmse = 0.0;
    bool degenerate = false;
};

inline Nrmse nrmse(std::span<const double> prediction, std::span<const double> target) {
    const std::size_t n = std::min(prediction.size(), target.size());
    Nrmse r;
    if (n == 0) {
        r.degenerate = true;
        return r;
    }
    double se = 0.0;
    double lo = target[0], hi = target[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double e = prediction[i] - target[i];
        se += e * e;
        lo = std::min(lo, target[i]);
        hi = std::max(hi, target[i]);
    }
    r.rmse = std::sqrt(se / static_cast<double>(n));
    const double range = hi - lo;
    if (range < 1e-12) {
        r.degenerate = true;
        r.value = r.rmse;
    } else {
        r.value = r.rmse / range;
    }
    return r;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace stats

}  // namespace sloshlab
