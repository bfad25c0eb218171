// Attitude controllers, reference governor and the closed-loop experiment executor
#pragma once

#include "sloshlab/actuator.hpp"
#include "sloshlab/core.hpp"
#include "sloshlab/emm.hpp"
#include "sloshlab/narx.hpp"
#include "sloshlab/sensors.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sloshlab::control {

using actuator::Axis;

// =============================================================================
// PID
// =============================================================================

struct PidGains {
    double k_p = 0.0;
    double k_d = 0.0;
    double k_i = 0.0;

    void validate() const {
        if (!(k_p >= 0.0) || !(k_d >= 0.0) || !std::isfinite(k_i))
            throw ValidationError("pid: k_p and k_d must be >= 0, k_i finite");
    }

    bool operator==(const PidGains &) const = default;
};

/// Rigid-body pole placement: I·ωn² and 2ζωn·I.
inline PidGains default_gains(double i_sat = emm::kInertiaCad, double wn = 0.3, double zeta = 1.0) {
    return {i_sat * wn * wn, 2.0 * zeta * wn * i_sat, 0.0};
}

/// Γ_RW = -k_p(θ - θ_d) - k_d(Ω - Ω_d) - k_i·∫(θ - θ_d) - compensation.
inline double pid_step(double theta, double theta_d, double omega, const PidGains &gains, double compensation,
                       double omega_d = 0.0, double integral = 0.0) {
    return -gains.k_p * (theta - theta_d) - gains.k_d * (omega - omega_d) - gains.k_i * integral - compensation;
}

// =============================================================================
// Controller kinds
// =============================================================================

enum class Algorithm { Baseline, OutputFeedbackAdaptive, MachineLearning };

inline std::string to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Baseline: return "baseline";
    case Algorithm::OutputFeedbackAdaptive: return "adaptive";
    case Algorithm::MachineLearning: return "ml";
    }
    return "?";
}

inline Algorithm algorithm_from_string(const std::string &s) {
    if (s == "baseline") return Algorithm::Baseline;
    if (s == "adaptive") return Algorithm::OutputFeedbackAdaptive;
    if (s == "ml") return Algorithm::MachineLearning;
    throw ValidationError("unknown controller algorithm '" + s + "'");
}

/// The five experiment controllers. ReferenceGovernor wraps `inner`; Combined
/// wraps whichever of adaptive / ML is resolved into `inner` (unset until resolved).
struct ControllerKind {
    enum class Type { Baseline, OutputFeedbackAdaptive, MachineLearning, ReferenceGovernor, Combined };

    Type type = Type::Baseline;
    std::optional<Algorithm> inner;

    static ControllerKind baseline() { return {Type::Baseline, std::nullopt}; }
    static ControllerKind adaptive() { return {Type::OutputFeedbackAdaptive, std::nullopt}; }
    static ControllerKind ml() { return {Type::MachineLearning, std::nullopt}; }
    static ControllerKind governed(Algorithm a) { return {Type::ReferenceGovernor, a}; }
    static ControllerKind combined(std::optional<Algorithm> a = std::nullopt) { return {Type::Combined, a}; }

    bool governed_loop() const { return type == Type::ReferenceGovernor || type == Type::Combined; }

    /// Compensation algorithm actually running in the loop.
    Algorithm algorithm() const {
        switch (type) {
        case Type::Baseline: return Algorithm::Baseline;
        case Type::OutputFeedbackAdaptive: return Algorithm::OutputFeedbackAdaptive;
        case Type::MachineLearning: return Algorithm::MachineLearning;
        case Type::ReferenceGovernor:
        case Type::Combined:
            if (!inner) throw ValidationError("controller '" + name() + "' has no resolved inner algorithm");
            return *inner;
        }
        return Algorithm::Baseline;
    }

    void validate() const {
        if (type == Type::ReferenceGovernor && !inner) throw ValidationError("governor needs an inner controller");
        if (type == Type::Combined && inner == Algorithm::Baseline)
            throw ValidationError("combined controller chooses between adaptive and ml");
        if ((type == Type::Baseline || type == Type::OutputFeedbackAdaptive || type == Type::MachineLearning) && inner)
            throw ValidationError("only governed controllers take an inner algorithm");
    }

    std::string name() const {
        switch (type) {
        case Type::Baseline: return "baseline";
        case Type::OutputFeedbackAdaptive: return "adaptive";
        case Type::MachineLearning: return "ml";
        case Type::ReferenceGovernor: return "governor:" + (inner ? to_string(*inner) : std::string("?"));
        case Type::Combined: return inner ? "combined:" + to_string(*inner) : "combined";
        }
        return "?";
    }

    static ControllerKind parse(const std::string &s) {
        if (s == "baseline") return baseline();
        if (s == "adaptive") return adaptive();
        if (s == "ml") return ml();
        if (s == "combined") return combined();
        const auto colon = s.find(':');
        if (colon != std::string::npos) {
            const std::string head = s.substr(0, colon);
            const Algorithm a = algorithm_from_string(s.substr(colon + 1));
            ControllerKind k;
            if (head == "governor") k = governed(a);
            else if (head == "combined") k = combined(a);
            else throw ValidationError("unknown controller '" + s + "'");
            k.validate();
            return k;
        }
        throw ValidationError("unknown controller '" + s + "'");
    }

    bool operator==(const ControllerKind &) const = default;
};

/// Inner algorithm for the combined controller: lower median settling time wins,
/// ties go to the adaptive controller.
inline Algorithm choose_combined(double median_adaptive, double median_ml) {
    return median_ml < median_adaptive ? Algorithm::MachineLearning : Algorithm::OutputFeedbackAdaptive;
}

// =============================================================================
// Time-delay disturbance estimate
// =============================================================================

/// One control tick: measured rate at sample k and the delivered wheel torque
/// averaged over the step that ended at sample k.
struct TdcSample {
    double omega = 0.0;
    double gamma_rw = 0.0;
};

/// Γ̂_D = I·Ω̇(t-δ) - Γ_RW(t-δ). Ω̇ is the central difference around sample
/// k-δ; Γ_RW is the delivered torque averaged over the same two steps.
/// Returns 0 until the history covers the stencil.
inline double tdc_estimate(std::span<const TdcSample> history, double i_sat, int delay_steps, double dt) {
    if (delay_steps < 1) throw ValidationError("tdc: delay_steps must be >= 1");
    const auto d = static_cast<std::size_t>(delay_steps);
    if (history.size() < d + 2) return 0.0;
    const std::size_t k = history.size() - 1;
    const double omega_dot = (history[k - d + 1].omega - history[k - d - 1].omega) / (2.0 * dt);
    const double gamma = 0.5 * (history[k - d].gamma_rw + history[k - d + 1].gamma_rw);
    return i_sat * omega_dot - gamma;
}

struct TdcConfig {
    int delay_steps = 1;
    /// First-order smoothing of the estimate [s]; 0 disables.
    double filter_tau = 0.0;

    void validate() const {
        if (delay_steps < 1) throw ValidationError("tdc: delay_steps must be >= 1");
        if (!(filter_tau >= 0.0)) throw ValidationError("tdc: filter_tau must be >= 0");
    }

    bool operator==(const TdcConfig &) const = default;
};

// =============================================================================
// Reference governor
// =============================================================================

struct GovernorConstraints {
    double torque_limit = kTorqueMax;  // N·m
    double pressure_limit = 0.1;       // psi
    /// Body-rate bound [rad/s]; keeps governed slews under the recovery trigger.
    double rate_limit = deg_to_rad(16.0);
    double horizon = 5.0;              // s
    double kappa_resolution = 1.0 / 64.0;
    /// Fractional tightening of both limits inside the prediction.
    double margin = 0.02;

    void validate() const {
        if (!(torque_limit > 0.0) || !(pressure_limit > 0.0) || !(rate_limit > 0.0))
            throw ValidationError("governor: limits must be > 0");
        if (!(horizon > 0.0)) throw ValidationError("governor: horizon must be > 0");
        if (!(kappa_resolution > 0.0) || kappa_resolution > 1.0)
            throw ValidationError("governor: kappa_resolution must be in (0, 1]");
        if (!(margin >= 0.0) || margin >= 1.0) throw ValidationError("governor: margin must be in [0, 1)");
    }

    bool operator==(const GovernorConstraints &) const = default;
};

/// Linear closed-loop prediction model (slosh plant + PID with ZOH at dt).
/// With `compensated`, the loop is assumed to cancel the slosh torque and the
/// commanded torque carries the cancellation term.
class GovernorModel {
public:
    GovernorModel(const emm::EmmParams &plant, const PidGains &gains, double dt, double horizon, bool compensated,
                  double pressure_per_torque)
        : pressure_per_torque_(pressure_per_torque) {
        plant.validate();
        gains.validate();
        if (!(dt > 0.0) || !(horizon > 0.0)) throw ValidationError("governor model: dt and horizon must be > 0");
        const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
        // one held-input RK4 step as an affine map x' = M x + m θ_a
        const auto rhs = [&](const Vec<4> &x, double theta_a) {
            return [&, x, theta_a](double, const Vec<4> &y) {
                const double cmd_pid = -gains.k_p * (x[0] - theta_a) - gains.k_d * x[1];
                const double body = compensated ? cmd_pid : cmd_pid + y[2];
                const double od = body / plant.i_sat;
                return Vec<4>{y[1], od, y[3], -plant.a_s * y[1] - plant.b_s * od - plant.c_s * y[3] - plant.k_s * y[2]};
            };
        };
        std::array<Vec<4>, 4> cols{};
        for (std::size_t i = 0; i < 4; ++i) {
            Vec<4> e{};
            e[i] = 1.0;
            cols[i] = rk4_step<4>(rhs(e, 0.0), 0.0, e, dt);
        }
        const Vec<4> m = rk4_step<4>(rhs(Vec<4>{}, 1.0), 0.0, Vec<4>{}, dt);
        const Vec<4> k_row{-gains.k_p, -gains.k_d, compensated ? -1.0 : 0.0, 0.0};

        // rows of C·M^j and offsets C·S_j·m (+ feedthrough) for j = 0..n
        Vec<4> acc_g{0, 0, 1, 0};  // e3ᵀ M^j
        Vec<4> acc_w{0, 1, 0, 0};  // e2ᵀ M^j
        Vec<4> acc_t = k_row;      // Kᵀ M^j
        double off_t = 0.0, off_g = 0.0, off_w = 0.0;
        const auto advance = [&](Vec<4> &row, double &off) {
            // o_{j+1} = o_j + row_j · m, row_{j+1} = row_j M
            for (std::size_t i = 0; i < 4; ++i) off += row[i] * m[i];
            Vec<4> next{};
            for (std::size_t c = 0; c < 4; ++c) {
                for (std::size_t r = 0; r < 4; ++r) next[c] += row[r] * cols[c][r];
            }
            row = next;
        };
        for (std::size_t j = 0; j <= n; ++j) {
            torque_rows_.push_back(acc_t);
            torque_off_.push_back(off_t + gains.k_p);
            slosh_rows_.push_back(acc_g);
            slosh_off_.push_back(off_g);
            rate_rows_.push_back(acc_w);
            rate_off_.push_back(off_w);
            advance(acc_t, off_t);
            advance(acc_g, off_g);
            advance(acc_w, off_w);
        }
    }

    std::size_t steps() const { return torque_rows_.size(); }

    /// Predicted commanded torque at horizon step j for state x and held reference θ_a.
    double torque(std::size_t j, const Vec<4> &x, double theta_a) const {
        return dot(torque_rows_[j], x) + torque_off_[j] * theta_a;
    }
    double slosh(std::size_t j, const Vec<4> &x, double theta_a) const {
        return dot(slosh_rows_[j], x) + slosh_off_[j] * theta_a;
    }
    double rate(std::size_t j, const Vec<4> &x, double theta_a) const {
        return dot(rate_rows_[j], x) + rate_off_[j] * theta_a;
    }
    double pressure_per_torque() const { return pressure_per_torque_; }

private:
    static double dot(const Vec<4> &a, const Vec<4> &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]; }

    double pressure_per_torque_;
    std::vector<Vec<4>> torque_rows_, slosh_rows_, rate_rows_;
    std::vector<double> torque_off_, slosh_off_, rate_off_;
};

struct GovernorStep {
    double applied = 0.0;
    double kappa = 0.0;
    /// The previous reference itself was predicted inadmissible.
    bool recovery = false;
};

namespace detail {

/// Shrink [lo, hi] to the κ satisfying |a + κ·b| ≤ limit.
inline void clip_interval(double a, double b, double limit, double &lo, double &hi) {
    if (b == 0.0) {
        if (std::abs(a) > limit) {
            lo = 1.0;
            hi = 0.0;
        }
        return;
    }
    double k1 = (-limit - a) / b, k2 = (limit - a) / b;
    if (k1 > k2) std::swap(k1, k2);
    lo = std::max(lo, k1);
    hi = std::min(hi, k2);
}

}  // namespace detail

/// Scalar reference governor: θ_applied = prev + κ(requested - prev) with the
/// largest κ on the grid whose held-reference prediction respects the torque,
/// pressure and rate limits.
inline GovernorStep governor_step(double requested, double prev, const emm::SatelliteState &state,
                                  const GovernorModel &model, const GovernorConstraints &c) {
    c.validate();
    if (requested == prev) return {prev, 1.0, false};
    if (std::isinf(c.torque_limit) && std::isinf(c.pressure_limit) && std::isinf(c.rate_limit))
        return {requested, 1.0, false};
    const Vec<4> x{state.theta, state.omega, state.gamma_s, state.gamma_s_dot};
    // κ interval admissible for the limits scaled by `shrink`
    const auto interval = [&](double shrink, double &lo, double &hi) {
        lo = -kInfinity;
        hi = kInfinity;
        const double t_lim = c.torque_limit * shrink;
        const double p_lim = c.pressure_limit * shrink / model.pressure_per_torque();
        const double w_lim = c.rate_limit * shrink;
        for (std::size_t j = 0; j < model.steps(); ++j) {
            const double t0 = model.torque(j, x, prev);
            const double g0 = model.slosh(j, x, prev);
            const double w0 = model.rate(j, x, prev);
            if (!std::isinf(c.torque_limit)) detail::clip_interval(t0, model.torque(j, x, requested) - t0, t_lim, lo, hi);
            if (!std::isinf(c.pressure_limit)) detail::clip_interval(g0, model.slosh(j, x, requested) - g0, p_lim, lo, hi);
            if (!std::isinf(c.rate_limit)) detail::clip_interval(w0, model.rate(j, x, requested) - w0, w_lim, lo, hi);
        }
    };
    double lo = 0.0, hi = 0.0;
    interval(1.0 - c.margin, lo, hi);
    if (lo > 0.0 || hi < 0.0 || lo > hi) {
        // inside the margin the previous reference is held; beyond the limits it is a fault
        interval(1.0, lo, hi);
        return {prev, 0.0, lo > 0.0 || hi < 0.0 || lo > hi};
    }
    double kappa = std::floor(std::min(hi, 1.0) / c.kappa_resolution + 1e-12) * c.kappa_resolution;
    kappa = std::clamp(kappa, 0.0, 1.0);
    return {kappa >= 1.0 ? requested : prev + kappa * (requested - prev), kappa, false};
}

// =============================================================================
// Recovery
// =============================================================================

struct RecoveryLimits {
    double omega_max = deg_to_rad(26.0);  // rad/s
    double gamma_s_max = 0.01;            // N·m

    void validate() const {
        if (!(omega_max > 0.0) || !(gamma_s_max > 0.0)) throw ValidationError("recovery limits must be > 0");
    }

    bool operator==(const RecoveryLimits &) const = default;
};

inline bool recovery_check(const emm::SatelliteState &s, const RecoveryLimits &limits = {}) {
    limits.validate();
    return std::abs(s.omega) > limits.omega_max || std::abs(s.gamma_s) > limits.gamma_s_max;
}

// =============================================================================
// Maneuvers
// =============================================================================

/// The seven excitation modes: single axes, axis pairs and all three.
inline const std::array<std::string, 7> &excitation_modes() {
    static const std::array<std::string, 7> modes{"x", "y", "z", "xy", "xz", "yz", "xyz"};
    return modes;
}

inline std::vector<Axis> excitation_axes(const std::string &mode) {
    for (const auto &m : excitation_modes()) {
        if (m == mode) {
            std::vector<Axis> axes;
            for (char ch : m) axes.push_back(actuator::axis_from_string(std::string(1, ch)));
            return axes;
        }
    }
    throw ValidationError("unknown excitation mode '" + mode + "'");
}

/// Bang-stop-bang excitation applied to every axis of `excitation`. Governed
/// loops (and any loop with `setpoint`) skip the feedforward and step the
/// reference to `angle` at t_start, defaulting to the rigid-body final angle of
/// the same profile.
struct Maneuver {
    std::string excitation = "x";
    double torque = kTorqueMax;
    double t_dur = 6.0;
    double t_dwell = 10.0;
    double t_start = 5.0;
    int sign = 1;
    std::optional<double> angle;
    bool setpoint = false;

    double target(double i_sat) const { return angle ? *angle : rigid_angle(i_sat); }

    actuator::CommandProfile profile(Axis axis) const {
        return actuator::bang_stop_bang(torque, t_dur, t_dwell, t_start, sign, axis);
    }

    /// Rest-to-rest angle of the ideal rigid body under the unfiltered profile.
    double rigid_angle(double i_sat) const {
        const double a = sign * torque / i_sat;
        return a * t_dur * (t_dur + t_dwell);
    }

    void validate() const {
        excitation_axes(excitation);
        (void)profile(Axis::X);
        if (angle && !std::isfinite(*angle)) throw ValidationError("maneuver: angle must be finite");
    }

    bool operator==(const Maneuver &) const = default;
};

// =============================================================================
// Closed loop
// =============================================================================

struct MlConfig {
    /// Control steps per predictor sample (10 at 100 Hz gives the 10 Hz cadence).
    int decimation = 10;

    void validate() const {
        if (decimation < 1) throw ValidationError("ml: decimation must be >= 1");
    }

    bool operator==(const MlConfig &) const = default;
};

struct ClosedLoopConfig {
    emm::EmmParams plant = emm::default_params();
    double torque_max = kTorqueMax;
    double dt = kDefaultDt;
    /// Simulated time after the excitation (or the settled reference) [s].
    double t_tail = 60.0;
    PidGains gains = default_gains();
    bool sensor_noise = true;
    sensors::GyroSpec gyro;
    sensors::AccelSpec accel;
    sensors::PressureArraySpec pressure;
    TdcConfig tdc;
    MlConfig ml;
    GovernorConstraints governor;
    bool recovery_enabled = false;
    RecoveryLimits recovery;
    /// Absolute band on the rate-tracking error |Ω - Ω_ref| [rad/s].
    double rate_band = 5e-5;
    /// Relative band for slosh-torque settling.
    double slosh_band = 0.05;
    double min_hold = emm::kDefaultMinHold;

    void validate() const {
        plant.validate();
        gains.validate();
        gyro.validate();
        accel.validate();
        pressure.validate();
        tdc.validate();
        ml.validate();
        governor.validate();
        recovery.validate();
        if (!(torque_max > 0.0)) throw ValidationError("closed loop: torque_max must be > 0");
        if (!(dt > 0.0) || dt > 0.1) throw ValidationError("closed loop: dt must be in (0, 0.1]");
        if (!(t_tail >= 0.0)) throw ValidationError("closed loop: t_tail must be >= 0");
        if (!(rate_band > 0.0)) throw ValidationError("closed loop: rate_band must be > 0");
        if (!(slosh_band > 0.0) || slosh_band >= 1.0) throw ValidationError("closed loop: slosh_band must be in (0, 1)");
        if (!(min_hold >= 0.0)) throw ValidationError("closed loop: min_hold must be >= 0");
    }

    bool operator==(const ClosedLoopConfig &) const = default;
};

/// Where the compensation term comes from.
struct Predictors {
    const predictor::NarxModel *narx = nullptr;
    /// Perfect knowledge of the live slosh torque (cancelled inside the plant step).
    bool oracle = false;
};

struct AxisRecord {
    Axis axis = Axis::X;
    emm::Trajectory traj;  // gamma_cmd = excitation command
    std::vector<double> theta_ref;
    std::vector<double> omega_ref;
    std::vector<double> commanded;     // wheel request before saturation
    std::vector<double> compensation;  // subtracted from the PID output
    std::vector<double> omega_meas;    // deg/s
    std::vector<double> accel;         // m/s²
    double settling_time = 0.0;
    double slosh_settling_time = 0.0;

    bool operator==(const AxisRecord &) const = default;
};

struct ConstraintViolations {
    std::size_t torque = 0;
    std::size_t pressure = 0;

    std::size_t total() const { return torque + pressure; }
    bool operator==(const ConstraintViolations &) const = default;
};

inline constexpr int kRecordVersion = 1;

struct ExperimentRecord {
    int record_version = kRecordVersion;
    std::string controller;
    std::string excitation;
    std::uint64_t seed = 0;
    std::vector<AxisRecord> axes;
    /// Start of the settling clock: end of the excitation, or when the governed
    /// reference reaches its request.
    double t_ref = 0.0;
    double settling_time = 0.0;        // s after t_ref, worst axis
    double slosh_settling_time = 0.0;  // s after t_ref, worst axis
    double peak_gamma_s = 0.0;
    double peak_pressure = 0.0;        // psi
    double peak_commanded = 0.0;
    ConstraintViolations violations;
    std::size_t governor_recoveries = 0;
    bool recovery_triggered = false;
    double recovery_time = kInfinity;
    bool aborted = false;

    bool operator==(const ExperimentRecord &) const = default;
};

namespace detail {

struct AxisLoop {
    AxisLoop(Axis a, emm::AxisPlant p, emm::AxisPlant r, actuator::CommandProfile prof, sensors::GyroModel g)
        : axis(a), plant(std::move(p)), reference(std::move(r)), profile(std::move(prof)), gyro(std::move(g)) {}

    Axis axis;
    emm::AxisPlant plant;
    emm::AxisPlant reference;  // slosh-free copy driven by the same excitation
    actuator::CommandProfile profile;
    sensors::GyroModel gyro;
    std::vector<TdcSample> tdc_history;
    double tdc_filtered = 0.0;
    std::optional<predictor::NarxStream> narx;
    double ml_hold = 0.0;
    double last_mean_delivered = 0.0;
    emm::AxisInput last_input{};
    double target = 0.0;
    double applied = 0.0;
    std::optional<GovernorModel> governor;
    AxisRecord rec;
    std::vector<double> omega_dot;
};

inline emm::EmmParams rigid(emm::EmmParams p) {
    p.a_s = 0.0;
    p.b_s = 0.0;
    return p;
}

}  // namespace detail

/// Run one experiment: excitation or governed slew, wheel dynamics, plant,
/// sensors and controller at the control rate. Deterministic in (inputs, seed).
inline ExperimentRecord run_closed_loop(const ControllerKind &kind, const Maneuver &maneuver,
                                        const ClosedLoopConfig &cfg, std::uint64_t seed,
                                        const Predictors &pred = {}) {
    kind.validate();
    maneuver.validate();
    cfg.validate();
    const Algorithm algo = kind.algorithm();
    const bool governed = kind.governed_loop();
    const bool stepped = governed || maneuver.setpoint;
    if (algo == Algorithm::MachineLearning && !pred.oracle && !pred.narx)
        throw ValidationError("ml controller needs a predictor model or the oracle");
    if (pred.narx) pred.narx->validate();

    const auto axes = excitation_axes(maneuver.excitation);
    const double dt = cfg.dt;
    const double i_sat = cfg.plant.i_sat;
    std::vector<detail::AxisLoop> loops;
    loops.reserve(axes.size());
    double t_end = 0.0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const Axis ax = axes[a];
        detail::AxisLoop L{ax, emm::AxisPlant(cfg.plant, {}, cfg.torque_max),
                           emm::AxisPlant(detail::rigid(cfg.plant), {}, kInfinity), maneuver.profile(ax),
                           sensors::GyroModel(cfg.sensor_noise ? cfg.gyro : sensors::GyroSpec{0.0, 0.0, cfg.gyro.dt},
                                              derive_seed(seed, static_cast<std::uint64_t>(ax), 1))};
        L.plant.reset({});
        L.reference.reset({});
        L.rec.axis = ax;
        if (algo == Algorithm::MachineLearning && pred.narx && !pred.oracle) L.narx.emplace(*pred.narx);
        if (stepped) L.target = maneuver.target(i_sat);
        if (governed) {
            L.governor.emplace(cfg.plant, cfg.gains, dt, cfg.governor.horizon, algo != Algorithm::Baseline,
                               sensors::wall_pressure(1.0, cfg.pressure));
        }
        loops.push_back(std::move(L));
    }
    t_end = loops.front().profile.end_time() + cfg.t_tail;
    if (governed) t_end += cfg.t_tail;  // the governed slew is slower than the bang profile

    const std::size_t n = sample_count(t_end, dt);
    const int decim = cfg.ml.decimation;
    const double psi_per_torque = sensors::wall_pressure(1.0, cfg.pressure);
    const double tdc_alpha = cfg.tdc.filter_tau > 0.0 ? dt / (cfg.tdc.filter_tau + dt) : 1.0;
    std::mt19937_64 accel_rng(derive_seed(seed, 7));
    std::normal_distribution<double> accel_noise(0.0, 1.0);

    ExperimentRecord out;
    out.controller = kind.name();
    out.excitation = maneuver.excitation;
    out.seed = seed;
    double t_reached = governed ? kInfinity : 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        bool abort = false;
        bool all_reached = true;
        for (auto &L : loops) {
            L.plant.set_time(t);
            L.reference.set_time(t);
            const emm::SatelliteState s = L.plant.state();

            // reference and feedforward
            double u_ff = 0.0, theta_ref = 0.0, omega_ref = 0.0;
            const double request = t >= maneuver.t_start - 1e-9 ? L.target : 0.0;
            if (governed) {
                const auto g = governor_step(request, L.applied, s, *L.governor, cfg.governor);
                L.applied = g.applied;
                if (g.recovery) ++out.governor_recoveries;
                theta_ref = L.applied;
                if (L.applied != L.target) all_reached = false;
            } else if (stepped) {
                theta_ref = request;
            } else {
                u_ff = emm::zoh_command(L.profile, t);
                const emm::SatelliteState r = L.reference.state();
                theta_ref = r.theta;
                omega_ref = r.omega;
            }

            // sensing
            const double omega_meas = deg_to_rad(L.gyro.measure(rad_to_deg(s.omega)));
            L.tdc_history.push_back({omega_meas, L.last_mean_delivered});
            if (L.tdc_history.size() > static_cast<std::size_t>(cfg.tdc.delay_steps) + 2)
                L.tdc_history.erase(L.tdc_history.begin());

            // compensation
            double comp = 0.0;
            bool cancel = false;
            switch (algo) {
            case Algorithm::Baseline: break;
            case Algorithm::OutputFeedbackAdaptive: {
                const double est = tdc_estimate(L.tdc_history, i_sat, cfg.tdc.delay_steps, dt);
                L.tdc_filtered += tdc_alpha * (est - L.tdc_filtered);
                comp = L.tdc_filtered;
                break;
            }
            case Algorithm::MachineLearning:
                if (pred.oracle) {
                    cancel = true;
                } else if (k % static_cast<std::size_t>(decim) == 0) {
                    L.ml_hold = L.narx->push(omega_meas, L.plant.delivered(L.last_input));
                }
                if (!pred.oracle) comp = L.ml_hold;
                break;
            }

            const double fb = pid_step(s.theta, theta_ref, omega_meas, cfg.gains, comp, omega_ref);
            const emm::AxisInput in{u_ff, fb, cancel};
            const emm::Sample smp = L.plant.sample(in, u_ff);
            const double cmd = L.plant.commanded(in);
            const double pressure = std::abs(s.gamma_s) * psi_per_torque;

            if (std::abs(cmd) > cfg.governor.torque_limit * (1.0 + 1e-12)) ++out.violations.torque;
            if (pressure > cfg.governor.pressure_limit) ++out.violations.pressure;
            out.peak_commanded = std::max(out.peak_commanded, std::abs(cmd));
            out.peak_gamma_s = std::max(out.peak_gamma_s, std::abs(s.gamma_s));
            out.peak_pressure = std::max(out.peak_pressure, pressure);

            L.rec.traj.samples.push_back(smp);
            L.rec.theta_ref.push_back(theta_ref);
            L.rec.omega_ref.push_back(omega_ref);
            L.rec.commanded.push_back(cmd);
            L.rec.compensation.push_back(cancel ? s.gamma_s : comp);
            L.rec.omega_meas.push_back(rad_to_deg(omega_meas));
            L.omega_dot.push_back(smp.omega_dot);

            if (cfg.recovery_enabled && recovery_check(s, cfg.recovery)) abort = true;

            if (k + 1 < n && !abort) {
                L.last_mean_delivered = L.plant.step(in, dt, k + 1);
                L.last_input = in;
                L.reference.step({u_ff, 0.0, false}, dt, k + 1);
            }
        }
        if (governed && all_reached && std::isinf(t_reached)) t_reached = t;
        if (abort) {
            out.recovery_triggered = true;
            out.recovery_time = t;
            out.aborted = true;
            break;
        }
    }

    // accelerometer channel and metrics
    out.t_ref = governed ? t_reached : stepped ? maneuver.t_start : loops.front().profile.end_time();
    for (auto &L : loops) {
        for (double wd : L.omega_dot) {
            double a = wd * cfg.accel.radius;
            if (cfg.sensor_noise && cfg.accel.noise_sigma > 0.0) a += cfg.accel.noise_sigma * accel_noise(accel_rng);
            L.rec.accel.push_back(a);
        }
        const auto tv = L.rec.traj.column(&emm::Sample::t);
        std::vector<double> err(tv.size());
        for (std::size_t i = 0; i < tv.size(); ++i) err[i] = L.rec.traj.samples[i].omega - L.rec.omega_ref[i];
        const double settle = std::isinf(out.t_ref) ? kInfinity
                                                    : emm::settle_after(tv, err, out.t_ref, cfg.rate_band, cfg.min_hold);
        L.rec.settling_time = settle - out.t_ref;
        double slosh = kInfinity;
        if (!std::isinf(out.t_ref)) {
            const auto gs = L.rec.traj.column(&emm::Sample::gamma_s);
            double peak = 0.0;
            for (std::size_t i = 0; i < tv.size(); ++i) {
                if (tv[i] >= out.t_ref - 1e-9) peak = std::max(peak, std::abs(gs[i]));
            }
            slosh = peak == 0.0 ? out.t_ref : emm::settle_after(tv, gs, out.t_ref, cfg.slosh_band * peak, cfg.min_hold);
        }
        L.rec.slosh_settling_time = slosh - out.t_ref;
        if (std::isnan(L.rec.settling_time)) L.rec.settling_time = kInfinity;
        if (std::isnan(L.rec.slosh_settling_time)) L.rec.slosh_settling_time = kInfinity;
        out.settling_time = std::max(out.settling_time, L.rec.settling_time);
        out.slosh_settling_time = std::max(out.slosh_settling_time, L.rec.slosh_settling_time);
        out.axes.push_back(std::move(L.rec));
    }
    return out;
}

/// Motion-suite export of a record (unexcited axes are zero).
inline sensors::MssSeries mss_series(const ExperimentRecord &rec) {
    sensors::MssSeries s;
    if (rec.axes.empty()) return s;
    s.t = rec.axes.front().traj.column(&emm::Sample::t);
    for (auto &c : s.omega_meas) c.assign(s.t.size(), 0.0);
    for (auto &c : s.accel) c.assign(s.t.size(), 0.0);
    for (const auto &a : rec.axes) {
        const auto i = static_cast<std::size_t>(a.axis);
        s.omega_meas[i] = a.omega_meas;
        s.accel[i] = a.accel;
    }
    return s;
}

// =============================================================================
// Paired comparison
// =============================================================================

/// The 3 x 3 x 3 single-axis maneuver grid (torque, pulse duration, dwell).
inline std::vector<Maneuver> comparison_grid(const std::string &excitation = "x") {
    std::vector<Maneuver> out;
    for (double torque : {0.002, 0.004, 0.006}) {
        for (double t_dur : {5.0, 15.0, 25.0}) {
            for (double t_dwell : {25.0, 32.5, 40.0}) {
                Maneuver m;
                m.excitation = excitation;
                m.torque = torque;
                m.t_dur = t_dur;
                m.t_dwell = t_dwell;
                m.t_start = 2.0;
                out.push_back(m);
            }
        }
    }
    return out;
}

struct PairedRow {
    Maneuver maneuver;
    std::uint64_t seed = 0;
    double reference = 0.0;  // settling time of the reference controller [s]
    double candidate = 0.0;
    /// candidate / reference; NaN when neither settled.
    double ratio = 0.0;
};

struct PairedComparison {
    std::string reference;
    std::string candidate;
    std::vector<PairedRow> rows;
    /// Median over rows with a defined ratio.
    double median_ratio = 0.0;
    std::size_t undefined = 0;
};

/// Runs both controllers on every maneuver with the same seed per pair.
inline PairedComparison compare_paired(const ControllerKind &reference, const ControllerKind &candidate,
                                       std::span<const Maneuver> maneuvers, const ClosedLoopConfig &cfg,
                                       std::uint64_t seed, const Predictors &pred = {}) {
    PairedComparison out;
    out.reference = reference.name();
    out.candidate = candidate.name();
    std::vector<double> ratios;
    for (std::size_t i = 0; i < maneuvers.size(); ++i) {
        PairedRow row;
        row.maneuver = maneuvers[i];
        row.seed = derive_seed(seed, i);
        row.reference = run_closed_loop(reference, maneuvers[i], cfg, row.seed, pred).settling_time;
        row.candidate = run_closed_loop(candidate, maneuvers[i], cfg, row.seed, pred).settling_time;
        if (row.reference == 0.0 && row.candidate == 0.0) {
            row.ratio = 1.0;
        } else {
            row.ratio = row.candidate / row.reference;
        }
        if (std::isnan(row.ratio)) {
            ++out.undefined;
        } else {
            ratios.push_back(row.ratio);
        }
        out.rows.push_back(row);
    }
    out.median_ratio = ratios.empty() ? std::nan("") : stats::median(ratios);
    return out;
}

}  // namespace sloshlab::control
