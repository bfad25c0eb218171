// Reaction-wheel command generation and actuator low-pass dynamics
#pragma once

#include "sloshlab/core.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sloshlab::actuator {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline std::string_view to_string(Axis a) {
    switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
    }
    return "?";
}

inline Axis axis_from_string(std::string_view s) {
    if (s == "x") return Axis::X;
    if (s == "y") return Axis::Y;
    if (s == "z") return Axis::Z;
    throw ValidationError("unknown axis '" + std::string(s) + "'");
}

/// Constant-torque interval [t0, t1).
struct Segment {
    double t0 = 0.0;
    double t1 = 0.0;
    double torque = 0.0;

    bool operator==(const Segment &) const = default;
};

// Training-range bounds for excitation profiles.
inline constexpr double kTorqueRangeMin = 0.002;
inline constexpr double kTorqueRangeMax = 0.006;
inline constexpr double kDwellRangeMin = 25.0;
inline constexpr double kDwellRangeMax = 40.0;
inline constexpr double kDurRangeMin = 5.0;
inline constexpr double kDurRangeMax = 25.0;

/// Piecewise-constant torque command for one body axis; zero outside the segments.
struct CommandProfile {
    Axis axis = Axis::X;
    std::vector<Segment> segments;
    double torque_max = kTorqueMax;
    /// Set when generated from parameters outside the nominal excitation ranges.
    bool out_of_range = false;

    double value_at(double t) const {
        for (const auto &s : segments) {
            if (t >= s.t0 && t < s.t1) return s.torque;
        }
        return 0.0;
    }

    double end_time() const { return segments.empty() ? 0.0 : segments.back().t1; }
    double start_time() const { return segments.empty() ? 0.0 : segments.front().t0; }

    double net_impulse() const {
        double j = 0.0;
        for (const auto &s : segments) j += s.torque * (s.t1 - s.t0);
        return j;
    }

    bool is_zero() const {
        for (const auto &s : segments) {
            if (s.torque != 0.0 && s.t1 > s.t0) return false;
        }
        return true;
    }

    void validate() const {
        double prev_end = -kInfinity;
        for (const auto &s : segments) {
            if (!std::isfinite(s.t0) || !std::isfinite(s.t1) || !std::isfinite(s.torque))
                throw ValidationError("profile segment has non-finite field");
            if (s.t1 < s.t0) throw ValidationError("profile segment ends before it starts");
            if (s.t0 < prev_end) throw ValidationError("profile segments overlap or are unordered");
            if (std::abs(s.torque) > torque_max * (1.0 + 1e-12))
                throw ValidationError("profile torque exceeds the wheel limit");
            prev_end = s.t1;
        }
    }

    bool operator==(const CommandProfile &) const = default;
};

/// Two equal and opposite pulses separated by a coast: the rest-to-rest slew.
inline CommandProfile bang_stop_bang(double gamma_max, double t_dur, double t_dwell,
                                     double t_start, int sign, Axis axis = Axis::X,
                                     double torque_max = kTorqueMax) {
    if (!(t_dur > 0.0) || !(t_dwell > 0.0))
        throw ValidationError("bang_stop_bang: t_dur and t_dwell must be positive");
    if (!(gamma_max >= 0.0) || gamma_max > torque_max)
        throw ValidationError("bang_stop_bang: gamma_max outside [0, torque_max]");
    if (sign != 1 && sign != -1) throw ValidationError("bang_stop_bang: sign must be +1 or -1");

    CommandProfile p;
    p.axis = axis;
    p.torque_max = torque_max;
    const double g = gamma_max * sign;
    const double t_rev = t_start + t_dur + t_dwell;
    p.segments = {{t_start, t_start + t_dur, g}, {t_rev, t_rev + t_dur, -g}};
    p.out_of_range = gamma_max < kTorqueRangeMin || gamma_max > kTorqueRangeMax ||
                     t_dwell < kDwellRangeMin || t_dwell > kDwellRangeMax ||
                     t_dur < kDurRangeMin || t_dur > kDurRangeMax;
    return p;
}

/// Bang-stop-bang plus the quantities it was solved from.
struct ManeuverPlan {
    CommandProfile profile;
    double t_dur = 0.0;
    double t_dwell = 0.0;
    /// Peak body rate of the ideal rigid-body response [rad/s].
    double peak_rate = 0.0;
};

/// Default slew-rate cap for rest-to-rest maneuvers [rad/s] (16 deg/s).
inline constexpr double kDefaultSlewRate = 16.0 * kDegToRad;

/// Symmetric bang-stop-bang reaching `angle_target` with zero terminal rate in the
/// ideal rigid body. The coast rate is capped at `max_rate`; if the angle is too
/// small to reach the cap the profile degenerates to bang-bang (zero dwell).
inline ManeuverPlan maneuver_profile(double angle_target, double i_sat, double gamma_max,
                                     double max_rate = kDefaultSlewRate, double t_start = 0.0,
                                     Axis axis = Axis::X) {
    if (angle_target == 0.0 || !std::isfinite(angle_target))
        throw ValidationError("maneuver_profile: angle target must be finite and nonzero");
    if (!(i_sat > 0.0) || !(gamma_max > 0.0) || !(max_rate > 0.0))
        throw ValidationError("maneuver_profile: inertia, torque and rate must be positive");
    if (gamma_max > kTorqueMax) throw ValidationError("maneuver_profile: torque above wheel limit");

    const double angle = std::abs(angle_target);
    const double accel = gamma_max / i_sat;
    double t_dur = max_rate / accel;
    double t_dwell = angle / max_rate - t_dur;
    if (t_dwell < 0.0) {
        // θ = a·t_dur² when there is no coast
        t_dur = std::sqrt(angle / accel);
        t_dwell = 0.0;
    }
    if (!(t_dur > 0.0)) throw ValidationError("maneuver_profile: infeasible (t_dur <= 0)");

    ManeuverPlan m;
    m.t_dur = t_dur;
    m.t_dwell = t_dwell;
    m.peak_rate = accel * t_dur;
    const double g = angle_target > 0.0 ? gamma_max : -gamma_max;
    const double t_rev = t_start + t_dur + t_dwell;
    m.profile.axis = axis;
    m.profile.segments = {{t_start, t_start + t_dur, g}, {t_rev, t_rev + t_dur, -g}};
    return m;
}

// =============================================================================
// Wheel torque response H(s) = (1.2 s + 0.76) / (s² + 2.4 s + 0.76)
// =============================================================================

inline constexpr double kFilterB1 = 1.2;
inline constexpr double kFilterB0 = 0.76;
inline constexpr double kFilterA1 = 2.4;
inline constexpr double kFilterA0 = 0.76;

/// Controllable-canonical state of H(s).
struct RwFilterState {
    double x1 = 0.0;
    double x2 = 0.0;

    bool operator==(const RwFilterState &) const = default;
};

inline Vec<2> rw_filter_derivative(const Vec<2> &x, double u) {
    return {x[1], -kFilterA0 * x[0] - kFilterA1 * x[1] + u};
}

inline double rw_filter_output(double x1, double x2) { return kFilterB0 * x1 + kFilterB1 * x2; }

inline double saturate(double torque, double limit) { return std::clamp(torque, -limit, limit); }

struct RwFilterStep {
    RwFilterState state;
    double torque = 0.0;
};

/// Advance the wheel dynamics one RK4 step with `commanded` held over the step.
/// Pass `torque_max = kInfinity` to disable output saturation.
inline RwFilterStep rw_filter_step(const RwFilterState &state, double commanded, double dt,
                                   double torque_max = kTorqueMax) {
    if (!(dt > 0.0) || dt > 0.1) throw ValidationError("rw_filter_step: dt must be in (0, 0.1]");
    const auto f = [commanded](double, const Vec<2> &x) { return rw_filter_derivative(x, commanded); };
    const Vec<2> next = rk4_step<2>(f, 0.0, Vec<2>{state.x1, state.x2}, dt);
    RwFilterStep r;
    r.state = {next[0], next[1]};
    r.torque = saturate(rw_filter_output(next[0], next[1]), torque_max);
    return r;
}

/// Poles of H(s), ordered slow then fast.
inline std::pair<double, double> rw_filter_poles() {
    const double disc = std::sqrt(kFilterA1 * kFilterA1 - 4.0 * kFilterA0);
    return {(-kFilterA1 + disc) / 2.0, (-kFilterA1 - disc) / 2.0};
}

/// Run a command series (ZOH at dt) through the filter; returns delivered torque
/// sampled at the same instants, starting from rest (y[0] = 0).
inline std::vector<double> filter_series(std::span<const double> commanded, double dt,
                                         double torque_max = kTorqueMax) {
    std::vector<double> out;
    out.reserve(commanded.size());
    RwFilterState s;
    for (std::size_t k = 0; k < commanded.size(); ++k) {
        if (k == 0) {
            out.push_back(0.0);
            continue;
        }
        auto step = rw_filter_step(s, commanded[k - 1], dt, torque_max);
        s = step.state;
        out.push_back(step.torque);
    }
    return out;
}

}  // namespace sloshlab::actuator
