// Gyro and accelerometer noise models, pressure-pad proxy, detectability
#pragma once

#include "sloshlab/core.hpp"
#include "sloshlab/emm.hpp"
#include "sloshlab/telemetry.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <span>
#include <vector>

namespace sloshlab::sensors {

// =============================================================================
// Gyroscope
// =============================================================================

/// Rate-gyro noise parameters. Units are degrees.
struct GyroSpec {
    double sigma_v = 0.0015;  // angular random walk [deg/√s]
    double sigma_u = 2.7e-5;  // bias instability [deg/s^{3/2}]
    double dt = 0.01;         // sampling interval [s]

    void validate() const {
        if (!(sigma_v >= 0.0) || !(sigma_u >= 0.0)) throw ValidationError("gyro: noise densities must be >= 0");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("gyro: dt must be > 0");
    }

    bool operator==(const GyroSpec &) const = default;
};

/// Epson M-G364 class MEMS gyro at 100 Hz.
inline GyroSpec default_gyro() { return GyroSpec{}; }

/// Per-sample rate noise standard deviation [deg/s].
inline double gyro_noise_sigma(const GyroSpec &spec) {
    spec.validate();
    return std::sqrt(spec.sigma_v * spec.sigma_v / spec.dt + spec.sigma_u * spec.sigma_u * spec.dt / 3.0);
}

/// Incremental gyro: white noise plus a bias random walk, one sample per call.
class GyroModel {
public:
    GyroModel(const GyroSpec &spec, std::uint64_t seed) : rng_(seed) {
        spec.validate();
        white_ = spec.sigma_v / std::sqrt(spec.dt);
        walk_ = spec.sigma_u * std::sqrt(spec.dt);
        silent_ = spec.sigma_v == 0.0 && spec.sigma_u == 0.0;
    }

    /// Measured rate [deg/s] for the true rate [deg/s].
    double measure(double truth) {
        if (silent_) return truth;
        const double w = n_(rng_);
        const double b = n_(rng_);
        if (started_) bias_ += walk_ * b;
        started_ = true;
        return truth + white_ * w + bias_;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> n_{0.0, 1.0};
    double white_ = 0.0;
    double walk_ = 0.0;
    double bias_ = 0.0;
    bool silent_ = false;
    bool started_ = false;
};

/// Measured rates [deg/s] for a truth series sampled at spec.dt.
inline std::vector<double> simulate_gyro(std::span<const double> truth, const GyroSpec &spec, std::uint64_t seed) {
    GyroModel g(spec, seed);
    std::vector<double> out;
    out.reserve(truth.size());
    for (double x : truth) out.push_back(g.measure(x));
    return out;
}

// =============================================================================
// Accelerometer
// =============================================================================

struct AccelSpec {
    double radius = 0.1;         // lever arm from the centre of mass [m]
    double noise_sigma = 1e-5;   // white noise per sample [m/s²]

    void validate() const {
        if (!(radius >= 0.0) || !(noise_sigma >= 0.0)) throw ValidationError("accel: radius and noise must be >= 0");
    }

    bool operator==(const AccelSpec &) const = default;
};

/// Tangential acceleration [m/s²] from angular acceleration [rad/s²].
inline std::vector<double> simulate_accel(std::span<const double> omega_dot, const AccelSpec &spec,
                                          std::uint64_t seed) {
    spec.validate();
    std::vector<double> out(omega_dot.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = omega_dot[i] * spec.radius;
        if (spec.noise_sigma > 0.0) out[i] += spec.noise_sigma * n(rng);
    }
    return out;
}

/// 100 Hz motion-suite export, one column triplet per body axis.
struct MssSeries {
    std::vector<double> t;
    std::array<std::vector<double>, 3> omega_meas;  // deg/s
    std::array<std::vector<double>, 3> accel;       // m/s²
};

inline void write_mss_csv(std::ostream &os, const MssSeries &s) {
    os << "t,omega_meas_x,omega_meas_y,omega_meas_z,accel_x,accel_y,accel_z\n";
    char buf[256];
    auto col = [](const std::vector<double> &v, std::size_t i) { return i < v.size() ? v[i] : 0.0; };
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t[i], col(s.omega_meas[0], i),
                      col(s.omega_meas[1], i), col(s.omega_meas[2], i), col(s.accel[0], i), col(s.accel[1], i),
                      col(s.accel[2], i));
        os << buf;
    }
}

// =============================================================================
// Detectability
// =============================================================================

/// Default integration window for the rate disturbance [s].
inline constexpr double kDetectWindow = 0.05;

struct DetectabilityReport {
    double omega_dot_s = 0.0;  // deg/s²
    double omega_s = 0.0;      // deg/s
    double sigma_omega = 0.0;  // deg/s
    double margin = 0.0;       // omega_s / sigma_omega
};

inline DetectabilityReport detectability(double gamma_s_max, double i_sat, double window = kDetectWindow,
                                         const GyroSpec &spec = default_gyro()) {
    if (!(gamma_s_max > 0.0) || !(i_sat > 0.0) || !(window > 0.0))
        throw ValidationError("detectability: torque, inertia and window must be positive");
    DetectabilityReport r;
    r.omega_dot_s = gamma_s_max / i_sat * kRadToDeg;
    r.omega_s = r.omega_dot_s * window;
    r.sigma_omega = gyro_noise_sigma(spec);
    r.margin = r.sigma_omega > 0.0 ? r.omega_s / r.sigma_omega : kInfinity;
    return r;
}

// =============================================================================
// Pressure-pad proxy
// =============================================================================

inline constexpr double kPsiPerPascal = 1.0 / kPascalPerPsi;

struct PressureArraySpec {
    std::size_t n_strips = 8;
    std::size_t pads_per_strip = 16;
    double pad_size = 0.005;          // m
    int resolution_bits = 12;
    double threshold_lo = 0.01;       // psi
    double threshold_hi = 0.02;       // psi
    double frame_rate = 10.0;         // Hz
    double full_scale = 0.5;          // psi
    double moment_arm = 0.1;          // m
    /// Wall area carrying the slosh load [m²]; <= 0 selects one pad face.
    double contact_area = 0.0;

    double area() const { return contact_area > 0.0 ? contact_area : pad_size * pad_size; }
    std::uint16_t max_raw() const { return static_cast<std::uint16_t>((1u << resolution_bits) - 1u); }

    void validate() const {
        if (n_strips < 1 || pads_per_strip < 1) throw ValidationError("pressure: need at least one strip and pad");
        if (resolution_bits < 1 || resolution_bits > 16) throw ValidationError("pressure: resolution_bits outside [1, 16]");
        if (!(pad_size > 0.0) || !(moment_arm > 0.0)) throw ValidationError("pressure: pad size and arm must be > 0");
        if (!(threshold_lo >= 0.0) || threshold_hi < threshold_lo)
            throw ValidationError("pressure: activation interval is invalid");
        if (!(frame_rate > 0.0)) throw ValidationError("pressure: frame_rate must be > 0");
        if (!(full_scale > threshold_hi)) throw ValidationError("pressure: full scale must exceed the activation threshold");
    }

    bool operator==(const PressureArraySpec &) const = default;
};

/// Wall pressure magnitude [psi] implied by a slosh torque.
inline double wall_pressure(double gamma_s, const PressureArraySpec &spec) {
    return std::abs(gamma_s) / (spec.moment_arm * spec.area()) * kPsiPerPascal;
}

/// Strip weight for a torque of the given sign: cosine lobe toward the loaded wall.
inline double strip_weight(std::size_t strip, std::size_t n_strips, double torque_sign) {
    const double phi = 2.0 * kPi * static_cast<double>(strip) / static_cast<double>(n_strips);
    return std::max(0.0, torque_sign * std::cos(phi));
}

inline std::uint16_t quantize(double p, const PressureArraySpec &spec) {
    const double code = std::round(p / spec.full_scale * spec.max_raw());
    return static_cast<std::uint16_t>(std::clamp(code, 0.0, static_cast<double>(spec.max_raw())));
}

/// Pad activation thresholds, one per pad, drawn uniformly from the activation interval.
inline std::vector<double> pad_thresholds(const PressureArraySpec &spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(spec.threshold_lo, spec.threshold_hi);
    std::vector<double> th(spec.n_strips * spec.pads_per_strip);
    for (double &x : th) x = spec.threshold_hi > spec.threshold_lo ? u(rng) : spec.threshold_lo;
    return th;
}

/// Frames at spec.frame_rate from a slosh-torque series sampled every `dt`.
inline std::vector<telemetry::PressureFrame> simulate_pressure(std::span<const double> gamma_s, double dt,
                                                               const PressureArraySpec &spec,
                                                               const emm::TankGeometry &geometry,
                                                               std::uint64_t seed) {
    spec.validate();
    geometry.validate();
    if (!(dt > 0.0)) throw ValidationError("pressure: dt must be > 0");
    if (static_cast<double>(spec.pads_per_strip) * spec.pad_size > geometry.straight_length + 1e-12)
        throw ValidationError("pressure: strip is longer than the tank barrel");
    if (static_cast<double>(spec.n_strips) * spec.pad_size > kPi * geometry.diameter)
        throw ValidationError("pressure: strips do not fit around the tank");
    const double ratio = 1.0 / (dt * spec.frame_rate);
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
        throw ValidationError("pressure: frame rate must divide the sampling rate");

    const auto thresholds = pad_thresholds(spec, seed);
    std::vector<telemetry::PressureFrame> frames;
    for (std::size_t k = 0, seq = 0; k < gamma_s.size(); k += stride, ++seq) {
        telemetry::PressureFrame f(spec.n_strips, spec.pads_per_strip);
        f.sequence = seq;
        const double g = gamma_s[k];
        const double p = wall_pressure(g, spec);
        const double sign = g >= 0.0 ? 1.0 : -1.0;
        for (std::size_t s = 0; s < spec.n_strips; ++s) {
            const double ps = p * strip_weight(s, spec.n_strips, sign);
            for (std::size_t j = 0; j < spec.pads_per_strip; ++j) {
                if (ps >= thresholds[s * spec.pads_per_strip + j]) f.at(s, j) = quantize(ps, spec);
            }
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

/// Largest pad pressure in a frame [psi].
inline double frame_peak_psi(const telemetry::PressureFrame &f, const PressureArraySpec &spec) {
    std::uint16_t m = 0;
    for (auto v : f.samples) m = std::max(m, v);
    return static_cast<double>(m) / spec.max_raw() * spec.full_scale;
}

}  // namespace sloshlab::sensors
