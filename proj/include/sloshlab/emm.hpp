// Coupled rigid-body + equivalent-mechanical-model slosh plant
//
//   θ̇  = Ω
//   Ω̇  = (Γ_RW + Γ_s + Γ_d) / I_sat
//   Γ̈_s = −A_s·Ω − B_s·Ω̇ − C_s·Γ̇_s − K_s·Γ_s
//
// Single rotational axis per instance. Ω̇ inside the slosh equation is the
// value computed in the same derivative call (no lag).
#pragma once

#include "sloshlab/actuator.hpp"
#include "sloshlab/core.hpp"

#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace sloshlab::emm {

/// Published satellite inertia presets [kg·m²].
inline constexpr double kInertiaCad = 0.0542;
inline constexpr double kInertiaManeuver = 0.058;

struct SatelliteState {
    double theta = 0.0;        // [rad]
    double omega = 0.0;        // [rad/s]
    double gamma_s = 0.0;      // [N·m]
    double gamma_s_dot = 0.0;  // [N·m/s]
    double t = 0.0;            // [s]

    bool finite() const {
        return std::isfinite(theta) && std::isfinite(omega) && std::isfinite(gamma_s) &&
               std::isfinite(gamma_s_dot) && std::isfinite(t);
    }
    bool operator==(const SatelliteState &) const = default;
};

struct EmmParams {
    double a_s = 0.0;  // rate coupling      [N·m/s² per rad/s]
    double b_s = 0.0;  // acceleration coupling [N·m/s² per rad/s²]
    double c_s = 0.0;  // damping            [1/s]
    double k_s = 0.0;  // stiffness          [1/s²]
    double i_sat = kInertiaCad;

    double natural_frequency_hz() const { return std::sqrt(k_s) / (2.0 * kPi); }

    /// Throws ValidationError unless the parameter set is usable by the plant.
    void validate() const {
        if (!std::isfinite(a_s) || !std::isfinite(b_s) || !std::isfinite(c_s) ||
            !std::isfinite(k_s) || !std::isfinite(i_sat))
            throw ValidationError("EMM parameters must be finite");
        if (!(i_sat > 0.0)) throw ValidationError("EMM: i_sat must be > 0");
        if (!(k_s > 0.0)) throw ValidationError("EMM: k_s must be > 0");
        if (c_s < 0.0) throw ValidationError("EMM: c_s must be >= 0");
    }

    /// Accepted configurations keep the slosh mode inside (0.1, 5) Hz.
    bool accepted() const {
        const double f = natural_frequency_hz();
        return f > 0.1 && f < 5.0;
    }

    bool operator==(const EmmParams &) const = default;
};

inline constexpr double kDefaultDampingRatio = 0.05;
inline constexpr double kDefaultSloshHz = 1.0;

/// Uncalibrated parameter set: 1 Hz mode, ζ = 0.05, unit coupling shape
/// (a_s : b_s = 0.1 : 1). calibrate_emm() scales the coupling.
inline EmmParams base_params(double i_sat = kInertiaCad) {
    EmmParams p;
    p.k_s = std::pow(2.0 * kPi * kDefaultSloshHz, 2);
    p.c_s = 2.0 * kDefaultDampingRatio * std::sqrt(p.k_s);
    p.a_s = 0.1;
    p.b_s = 1.0;
    p.i_sat = i_sat;
    return p;
}

/// Coupling scale produced by calibrate_emm(base_params(), [1e-4, 1e-3],
/// max-torque profile). Frozen from the calibration run; test_emm re-derives it.
inline constexpr double kDefaultCouplingScale = 0.0853495598;

inline EmmParams default_params(double i_sat = kInertiaCad) {
    EmmParams p = base_params(i_sat);
    p.a_s *= kDefaultCouplingScale;
    p.b_s *= kDefaultCouplingScale;
    return p;
}

struct Disturbances {
    double gamma_d = 0.0;  // constant over one experiment [N·m]
};

struct StateDerivative {
    double theta_dot = 0.0;
    double omega_dot = 0.0;
    double gamma_s_dot = 0.0;
    double gamma_s_ddot = 0.0;
    double t_dot = 1.0;
};

namespace detail {

inline Vec<4> rhs(const Vec<4> &x, double gamma_rw, const EmmParams &p, double gamma_d) {
    const double omega_dot = (gamma_rw + x[2] + gamma_d) / p.i_sat;
    const double gamma_ddot = -p.a_s * x[1] - p.b_s * omega_dot - p.c_s * x[3] - p.k_s * x[2];
    return {x[1], omega_dot, x[3], gamma_ddot};
}

inline Vec<4> pack(const SatelliteState &s) { return {s.theta, s.omega, s.gamma_s, s.gamma_s_dot}; }

}  // namespace detail

inline StateDerivative emm_derivatives(const SatelliteState &state, double gamma_rw,
                                       const EmmParams &params, const Disturbances &dist = {}) {
    if (!state.finite() || !std::isfinite(gamma_rw) || !std::isfinite(dist.gamma_d))
        throw StateCorruptionError("emm_derivatives: non-finite input", 0);
    const Vec<4> d = detail::rhs(detail::pack(state), gamma_rw, params, dist.gamma_d);
    return {d[0], d[1], d[2], d[3], 1.0};
}

// =============================================================================
// Trajectories
// =============================================================================

struct Sample {
    double t = 0.0;
    double theta = 0.0;
    double omega = 0.0;
    double omega_dot = 0.0;
    double gamma_s = 0.0;
    double gamma_s_dot = 0.0;
    double gamma_rw = 0.0;   // delivered wheel torque
    double gamma_cmd = 0.0;  // excitation command (pre-actuator)

    bool operator==(const Sample &) const = default;
};

enum class Channel { GammaS, Omega };

struct Trajectory {
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    const Sample &back() const { return samples.back(); }

    std::vector<double> column(double Sample::*field) const {
        std::vector<double> out;
        out.reserve(samples.size());
        for (const auto &s : samples) out.push_back(s.*field);
        return out;
    }
    std::vector<double> channel(Channel c) const {
        return column(c == Channel::GammaS ? &Sample::gamma_s : &Sample::omega);
    }
    double peak_abs(double Sample::*field) const {
        double m = 0.0;
        for (const auto &s : samples) m = std::max(m, std::abs(s.*field));
        return m;
    }

    bool operator==(const Trajectory &) const = default;
};

inline void write_csv(std::ostream &os, const Trajectory &traj) {
    os << "t,theta,omega,omega_dot,gamma_s,gamma_s_dot,gamma_rw\n";
    char buf[256];
    for (const auto &s : traj.samples) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t, s.theta,
                      s.omega, s.omega_dot, s.gamma_s, s.gamma_s_dot, s.gamma_rw);
        os << buf;
    }
}

using TorqueSource = std::function<double(double)>;

inline void check_step_args(double dt, double t_end) {
    if (!(dt > 0.0) || dt > 0.1) throw ValidationError("integrate: dt must be in (0, 0.1]");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("integrate: t_end must be > 0");
}

/// Fixed-step RK4 of the plant driven by a delivered-torque source Γ_RW(t)
/// (evaluated at the RK4 stage times). Output has floor(t_end/dt)+1 samples
/// starting at `initial.t`.
inline Trajectory integrate(const SatelliteState &initial, const TorqueSource &torque_source,
                            const EmmParams &params, const Disturbances &dist, double dt,
                            double t_end) {
    params.validate();
    check_step_args(dt, t_end);
    if (!initial.finite()) throw StateCorruptionError("integrate: non-finite initial state", 0);

    const std::size_t n = sample_count(t_end, dt);
    const double gd = dist.gamma_d;
    const auto f = [&](double t, const Vec<4> &x) { return detail::rhs(x, torque_source(t), params, gd); };

    Trajectory traj;
    traj.samples.reserve(n);
    Vec<4> x = detail::pack(initial);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = initial.t + static_cast<double>(k) * dt;
        const double u = torque_source(t);
        const Vec<4> d = detail::rhs(x, u, params, gd);
        traj.samples.push_back({t, x[0], x[1], d[1], x[2], x[3], u, u});
        if (k + 1 < n) {
            x = rk4_step<4>(f, t, x, dt);
            if (!all_finite(x)) throw StateCorruptionError("integrate: non-finite state", k + 1);
        }
    }
    return traj;
}

// =============================================================================
// Plant with wheel dynamics
// =============================================================================

/// Per-step input for AxisPlant. `filtered` passes through the wheel response
/// H(s); `direct` is added after it (fast torque-loop corrections). When
/// `cancel_slosh` is set the delivered torque additionally cancels the live
/// slosh torque (oracle compensation, evaluated at every RK4 stage).
struct AxisInput {
    double filtered = 0.0;
    double direct = 0.0;
    bool cancel_slosh = false;
};

/// One body axis: slosh plant + wheel filter state, advanced by RK4 with the
/// input held over each step. State layout: θ, Ω, Γ_s, Γ̇_s, x1, x2.
class AxisPlant {
public:
    AxisPlant() = default;
    AxisPlant(const EmmParams &params, const Disturbances &dist = {}, double torque_max = kTorqueMax)
        : params_(params), dist_(dist), torque_max_(torque_max) {
        params_.validate();
    }

    void reset(const SatelliteState &s) {
        x_ = {s.theta, s.omega, s.gamma_s, s.gamma_s_dot, 0.0, 0.0};
        t_ = s.t;
    }

    double commanded(const Vec<6> &x, const AxisInput &in) const {
        double torque = actuator::rw_filter_output(x[4], x[5]) + in.direct;
        if (in.cancel_slosh) torque -= x[2];
        return torque;
    }

    double delivered(const Vec<6> &x, const AxisInput &in) const {
        return actuator::saturate(commanded(x, in), torque_max_);
    }

    /// Wheel torque request before saturation at the current state.
    double commanded(const AxisInput &in) const { return commanded(x_, in); }
    double delivered(const AxisInput &in) const { return delivered(x_, in); }

    Vec<6> derivative(const Vec<6> &x, const AxisInput &in) const {
        const double g = delivered(x, in);
        const Vec<4> d = detail::rhs({x[0], x[1], x[2], x[3]}, g, params_, dist_.gamma_d);
        const Vec<2> w = actuator::rw_filter_derivative({x[4], x[5]}, in.filtered);
        return {d[0], d[1], d[2], d[3], w[0], w[1]};
    }

    /// Snapshot of the current state under input `in` (which sets Γ_RW and Ω̇).
    Sample sample(const AxisInput &in, double gamma_cmd) const {
        const Vec<6> d = derivative(x_, in);
        return {t_, x_[0], x_[1], d[1], x_[2], x_[3], delivered(x_, in), gamma_cmd};
    }

    /// Advance one step; returns the delivered torque averaged over the step
    /// with the RK4 stage weights (what the rate change actually integrated).
    double step(const AxisInput &in, double dt, std::size_t step_index = 0) {
        std::array<double, 4> stage{};
        std::size_t i = 0;
        const auto f = [&](double, const Vec<6> &x) {
            stage[i++] = delivered(x, in);
            return derivative(x, in);
        };
        x_ = rk4_step<6>(f, t_, x_, dt);
        t_ += dt;
        if (!all_finite(x_)) throw StateCorruptionError("plant: non-finite state", step_index);
        return (stage[0] + 2.0 * stage[1] + 2.0 * stage[2] + stage[3]) / 6.0;
    }

    /// Position the clock exactly (avoids drift from repeated addition).
    void set_time(double t) { t_ = t; }

    SatelliteState state() const { return {x_[0], x_[1], x_[2], x_[3], t_}; }
    double time() const { return t_; }
    const EmmParams &params() const { return params_; }
    double torque_max() const { return torque_max_; }

private:
    EmmParams params_{};
    Disturbances dist_{};
    double torque_max_ = kTorqueMax;
    Vec<6> x_{};
    double t_ = 0.0;
};

/// Command value held over the step starting at t (boundaries on the grid switch on time).
inline double zoh_command(const actuator::CommandProfile &profile, double t) {
    return profile.value_at(t + 1e-9);
}

/// Open-loop response to an excitation command through the wheel dynamics.
inline Trajectory simulate_profile(const actuator::CommandProfile &profile, const EmmParams &params,
                                   double dt, double t_end, const Disturbances &dist = {},
                                   const SatelliteState &initial = {}, double torque_max = kTorqueMax) {
    check_step_args(dt, t_end);
    AxisPlant plant(params, dist, torque_max);
    plant.reset(initial);
    const std::size_t n = sample_count(t_end, dt);
    Trajectory traj;
    traj.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = initial.t + static_cast<double>(k) * dt;
        plant.set_time(t);
        const double u = zoh_command(profile, t);
        const AxisInput in{u, 0.0, false};
        traj.samples.push_back(plant.sample(in, u));
        if (k + 1 < n) plant.step(in, dt, k + 1);
    }
    return traj;
}

// =============================================================================
// Calibration
// =============================================================================

struct CalibrationOptions {
    double dt = kDefaultDt;
    /// Simulated time after the last command [s].
    double settle_window = 60.0;
    /// Acceptable relative miss of the target peak.
    double tolerance = 0.05;
    int max_iterations = 60;
};

struct CalibrationResult {
    EmmParams params;
    double scale = 0.0;
    double peak = 0.0;
    double target = 0.0;
    int iterations = 0;
};

inline double peak_slosh(const actuator::CommandProfile &profile, const EmmParams &params,
                         const CalibrationOptions &opt) {
    const double t_end = profile.end_time() + opt.settle_window;
    return simulate_profile(profile, params, opt.dt, t_end).peak_abs(&Sample::gamma_s);
}

/// Scale (a_s, b_s) by one common factor so peak |Γ_s| under `profile` hits the
/// geometric mean of [target_lo, target_hi]. k_s and c_s are left untouched.
inline CalibrationResult calibrate_emm_detailed(double target_lo, double target_hi,
                                                const actuator::CommandProfile &profile,
                                                const EmmParams &base,
                                                const CalibrationOptions &opt = {}) {
    base.validate();
    if (!(target_lo > 0.0) || !(target_hi >= target_lo))
        throw ValidationError("calibrate_emm: target interval must be nonempty and positive");
    if (base.a_s == 0.0 && base.b_s == 0.0)
        throw ValidationError("calibrate_emm: base coupling is zero");

    const double target = std::sqrt(target_lo * target_hi);
    auto scaled = [&](double s) {
        EmmParams p = base;
        p.a_s *= s;
        p.b_s *= s;
        return p;
    };
    auto peak_at = [&](double s) { return peak_slosh(profile, scaled(s), opt); };

    double lo = 0.0;
    double hi = 1.0;
    double peak_hi = peak_at(hi);
    for (int i = 0; peak_hi < target; ++i) {
        if (i >= opt.max_iterations || peak_hi == 0.0)
            throw CalibrationError("calibrate_emm: cannot bracket target peak", peak_hi);
        lo = hi;
        hi *= 2.0;
        peak_hi = peak_at(hi);
    }

    CalibrationResult r;
    r.target = target;
    double mid = hi, peak_mid = peak_hi;
    for (int it = 0; it < opt.max_iterations; ++it) {
        r.iterations = it + 1;
        mid = 0.5 * (lo + hi);
        peak_mid = peak_at(mid);
        if (std::abs(peak_mid - target) <= 1e-6 * target) break;
        (peak_mid < target ? lo : hi) = mid;
    }
    if (std::abs(peak_mid - target) > opt.tolerance * target)
        throw CalibrationError("calibrate_emm: bisection did not converge", peak_mid);
    r.scale = mid;
    r.peak = peak_mid;
    r.params = scaled(mid);
    return r;
}

inline EmmParams calibrate_emm(double target_lo, double target_hi,
                               const actuator::CommandProfile &profile, const EmmParams &base,
                               const CalibrationOptions &opt = {}) {
    return calibrate_emm_detailed(target_lo, target_hi, profile, base, opt).params;
}

/// The maximum-torque excitation used for calibration: 0.006 N·m, 6 s pulses,
/// 10 s coast, starting at t = 30 s.
inline actuator::CommandProfile max_torque_profile() {
    return actuator::bang_stop_bang(kTorqueMax, 6.0, 10.0, 30.0, +1);
}

// =============================================================================
// Tank geometry
// =============================================================================

struct TankGeometry {
    double diameter = 0.090;
    double straight_length = 0.1295;
    double head_depth = 0.01524;
    double total_length = 0.1295 + 2.0 * 0.01524;
    double fill_ratio = 0.70;
    double fluid_density = 998.2;  // water at 20 °C [kg/m³]
    double dish_parameter = 1.00;     // crown radius / D
    double knuckle_parameter = 0.06;  // knuckle radius / D

    void validate() const {
        if (!(diameter > 0.0) || straight_length < 0.0 || head_depth < 0.0)
            throw ValidationError("tank: dimensions must be positive");
        if (std::abs(total_length - (straight_length + 2.0 * head_depth)) > 1e-9)
            throw ValidationError("tank: total_length != straight_length + 2*head_depth");
        if (fill_ratio < 0.0 || fill_ratio > 1.0) throw ValidationError("tank: fill_ratio outside [0,1]");
        if (!(fluid_density > 0.0)) throw ValidationError("tank: fluid_density must be > 0");
        if (!(dish_parameter > 0.0) || !(knuckle_parameter > 0.0))
            throw ValidationError("tank: head parameters must be positive");
    }

    bool operator==(const TankGeometry &) const = default;
};

/// Table-style default tank (90 mm bore, ASME flanged & dished heads).
inline TankGeometry default_tank() { return TankGeometry{}; }

/// Radius of a torispherical head at height z above its tangent line.
inline double head_radius(const TankGeometry &g, double z) {
    const double R = g.dish_parameter * g.diameter;
    const double r = g.knuckle_parameter * g.diameter;
    const double a = g.diameter / 2.0 - r;  // knuckle centre offset from axis
    double rho = g.diameter / 2.0;
    if (z < r) rho = std::min(rho, a + std::sqrt(r * r - z * z));
    else rho = std::min(rho, a);
    const double zc = g.head_depth - R;  // crown centre (below the tangent line)
    const double dz = z - zc;
    const double crown = dz < R ? std::sqrt(R * R - dz * dz) : 0.0;
    return std::max(0.0, std::min(rho, crown));
}

inline double head_volume(const TankGeometry &g, int slices = 1000) {
    if (g.head_depth <= 0.0) return 0.0;
    const double h = g.head_depth / slices;
    double v = 0.0;
    for (int i = 0; i < slices; ++i) {
        const double rho = head_radius(g, (i + 0.5) * h);
        v += kPi * rho * rho * h;
    }
    return v;
}

/// Internal volume: cylinder plus two dished heads (midpoint slices).
inline double tank_volume(const TankGeometry &g) {
    g.validate();
    const double rc = g.diameter / 2.0;
    return kPi * rc * rc * g.straight_length + 2.0 * head_volume(g);
}

inline double fluid_volume(const TankGeometry &g) { return g.fill_ratio * tank_volume(g); }

/// Fluid bookkeeping reporting both the derived (fill × volume) and the
/// published fluid volume, since they disagree.
struct FluidBudget {
    double tank_volume = 0.0;
    double fluid_volume_derived = 0.0;
    double fluid_volume_published = 0.0;
    double mass_fraction_derived = 0.0;
    double mass_fraction_published = 0.0;
};

inline FluidBudget fluid_budget(const TankGeometry &g, double published_fluid_volume = 0.000709,
                                double satellite_mass = 7.0) {
    FluidBudget b;
    b.tank_volume = tank_volume(g);
    b.fluid_volume_derived = g.fill_ratio * b.tank_volume;
    b.fluid_volume_published = published_fluid_volume;
    b.mass_fraction_derived = b.fluid_volume_derived * g.fluid_density / satellite_mass;
    b.mass_fraction_published = published_fluid_volume * g.fluid_density / satellite_mass;
    return b;
}

// =============================================================================
// Settling time
// =============================================================================

/// Minimum settled tail required before a signal is declared settled [s].
inline constexpr double kDefaultMinHold = 1.0;

/// Earliest time t ≥ t_ref after which |values| stays ≤ threshold until the end
/// of the record. Returns +∞ when the final exceedance leaves less than
/// `min_hold` seconds of settled tail.
inline double settle_after(std::span<const double> t, std::span<const double> values, double t_ref,
                           double threshold, double min_hold = kDefaultMinHold) {
    if (t.empty() || t.size() != values.size()) throw ValidationError("settling: empty or ragged series");
    std::size_t start = 0;
    while (start < t.size() && t[start] < t_ref - 1e-9) ++start;
    if (start == t.size()) return kInfinity;
    std::size_t last = t.size();  // index of last exceedance
    for (std::size_t i = t.size(); i-- > start;) {
        if (std::abs(values[i]) > threshold) {
            last = i;
            break;
        }
    }
    if (last == t.size()) return t[start];
    if (last + 1 >= t.size()) return kInfinity;
    const double settle = t[last + 1];
    if (t.back() - settle < min_hold) return kInfinity;
    return settle;
}

/// Time at which the last nonzero excitation command ends (or the first sample
/// when there is no command).
inline double last_command_time(const Trajectory &traj) {
    if (traj.empty()) throw ValidationError("settling_time: empty trajectory");
    for (std::size_t i = traj.size(); i-- > 0;) {
        if (traj.samples[i].gamma_cmd != 0.0) {
            return i + 1 < traj.size() ? traj.samples[i + 1].t : traj.samples[i].t;
        }
    }
    return traj.samples.front().t;
}

/// Earliest time after the last command beyond which |channel| stays within
/// band × (its post-command peak). +∞ if it never settles in the record.
inline double settling_time(const Trajectory &traj, Channel channel, double band,
                            double min_hold = kDefaultMinHold) {
    if (traj.empty()) throw ValidationError("settling_time: empty trajectory");
    if (!(band > 0.0) || !(band < 1.0)) throw ValidationError("settling_time: band must be in (0,1)");
    const double t_ref = last_command_time(traj);
    const auto t = traj.column(&Sample::t);
    const auto v = traj.channel(channel);
    double peak = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= t_ref - 1e-9) peak = std::max(peak, std::abs(v[i]));
    }
    if (peak == 0.0) return t_ref;
    return settle_after(t, v, t_ref, band * peak, min_hold);
}

}  // namespace sloshlab::emm
