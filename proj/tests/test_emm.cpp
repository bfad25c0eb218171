#include "sloshlab/emm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace sloshlab;
using namespace sloshlab::emm;

namespace {

EmmParams harmonic_params(double c_s = 0.0) {
    EmmParams p = base_params();
    p.a_s = 0.0;
    p.b_s = 0.0;
    p.c_s = c_s;
    return p;
}

const TorqueSource kZero = [](double) { return 0.0; };

}  // namespace

TEST(EmmDerivatives, EquilibriumIsStationary) {
    const auto d = emm_derivatives({}, 0.0, default_params());
    EXPECT_EQ(d.theta_dot, 0.0);
    EXPECT_EQ(d.omega_dot, 0.0);
    EXPECT_EQ(d.gamma_s_dot, 0.0);
    EXPECT_EQ(d.gamma_s_ddot, 0.0);
}

TEST(EmmDerivatives, SloshTorqueAcceleratesBody) {
    SatelliteState s;
    s.gamma_s = 1e-3;
    const auto d = emm_derivatives(s, 0.0, default_params(0.0542));
    EXPECT_NEAR(d.omega_dot, 1e-3 / 0.0542, 1e-15);
    EXPECT_NEAR(d.omega_dot, 1.845e-2, 1e-5);
}

TEST(EmmDerivatives, RateCouplingByHand) {
    // Γ̈_s = −A·Ω when Ω̇ = 0, Γ_s = Γ̇_s = 0.
    EmmParams p = base_params();
    p.k_s = 39.48;
    p.a_s = 0.37;
    SatelliteState s;
    s.omega = 0.1;
    const auto d = emm_derivatives(s, 0.0, p);
    EXPECT_DOUBLE_EQ(d.gamma_s_ddot, -0.1 * 0.37);
    EXPECT_DOUBLE_EQ(d.theta_dot, 0.1);
}

TEST(EmmDerivatives, UsesFreshAngularAcceleration) {
    EmmParams p = base_params();
    p.a_s = 0.0;
    p.b_s = 2.0;
    p.c_s = 0.0;
    const auto d = emm_derivatives({}, 0.004, p);
    EXPECT_DOUBLE_EQ(d.gamma_s_ddot, -2.0 * 0.004 / p.i_sat);
}

TEST(EmmDerivatives, RejectsNonFinite) {
    SatelliteState s;
    s.omega = std::nan("");
    EXPECT_THROW(emm_derivatives(s, 0.0, default_params()), StateCorruptionError);
    EXPECT_THROW(emm_derivatives({}, INFINITY, default_params()), StateCorruptionError);
}

TEST(EmmParamsTest, Invariants) {
    EXPECT_NO_THROW(default_params().validate());
    EXPECT_TRUE(default_params().accepted());
    EXPECT_NEAR(default_params().natural_frequency_hz(), 1.0, 1e-12);
    EmmParams p = default_params();
    p.i_sat = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = default_params();
    p.c_s = -0.1;
    EXPECT_THROW(p.validate(), ValidationError);
    p = default_params();
    p.k_s = 39.48 * 100.0;  // 10 Hz
    EXPECT_FALSE(p.accepted());
}

TEST(Integrate, ZeroInputStaysAtInitialValue) {
    SatelliteState s0;
    s0.theta = 0.7;
    const auto traj = integrate(s0, kZero, default_params(), {}, 0.01, 100.0);
    ASSERT_EQ(traj.size(), 10001u);
    for (const auto &s : traj.samples) {
        ASSERT_EQ(s.theta, 0.7);
        ASSERT_EQ(s.omega, 0.0);
        ASSERT_EQ(s.gamma_s, 0.0);
    }
}

TEST(Integrate, LengthIsFloorPlusOne) {
    EXPECT_EQ(integrate({}, kZero, default_params(), {}, 0.01, 1.0).size(), 101u);
    EXPECT_EQ(integrate({}, kZero, default_params(), {}, 0.03, 1.0).size(), 34u);
    EXPECT_EQ(integrate({}, kZero, default_params(), {}, 0.1, 0.05).size(), 1u);
}

TEST(Integrate, RejectsBadStep) {
    EXPECT_THROW(integrate({}, kZero, default_params(), {}, 0.0, 1.0), ValidationError);
    EXPECT_THROW(integrate({}, kZero, default_params(), {}, 0.2, 1.0), ValidationError);
    EXPECT_THROW(integrate({}, kZero, default_params(), {}, 0.01, 0.0), ValidationError);
}

TEST(Integrate, AbortsOnNanWithStepIndex) {
    const TorqueSource bad = [](double t) { return t > 0.5 ? std::nan("") : 0.0; };
    try {
        integrate({}, bad, default_params(), {}, 0.01, 2.0);
        FAIL() << "expected StateCorruptionError";
    } catch (const StateCorruptionError &e) {
        EXPECT_GE(e.step(), 50u);
        EXPECT_LE(e.step(), 52u);
    }
}

TEST(Integrate, FreeOscillationMatchesHarmonicOracle) {
    const EmmParams p = harmonic_params();
    const double w = std::sqrt(p.k_s);
    SatelliteState s0;
    s0.gamma_s = 1e-4;
    const double period = 2.0 * kPi / w;
    const auto traj = integrate(s0, kZero, p, {}, 0.01, 10.0 * period);
    double max_err = 0.0;
    double max_amp_dev = 0.0;
    for (const auto &s : traj.samples) {
        max_err = std::max(max_err, std::abs(s.gamma_s - 1e-4 * std::cos(w * s.t)));
        const double amp = std::sqrt(s.gamma_s * s.gamma_s + s.gamma_s_dot * s.gamma_s_dot / (w * w));
        max_amp_dev = std::max(max_amp_dev, std::abs(amp - 1e-4) / 1e-4);
    }
    EXPECT_LT(max_amp_dev, 1e-6);
    EXPECT_LT(max_err, 1e-4 * 1e-4);
}

TEST(Integrate, Rk4ConvergenceRatioNearSixteen) {
    const EmmParams p = harmonic_params();
    const double w = std::sqrt(p.k_s);
    SatelliteState s0;
    s0.gamma_s = 1e-4;
    const double t_end = 10.0;
    auto err = [&](double dt) {
        const auto traj = integrate(s0, kZero, p, {}, dt, t_end);
        double e = 0.0;
        for (const auto &s : traj.samples) e = std::max(e, std::abs(s.gamma_s - 1e-4 * std::cos(w * s.t)));
        return e;
    };
    const double ratio = err(0.02) / err(0.01);
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
}

TEST(Integrate, DampedEnergyNonIncreasing) {
    const EmmParams p = harmonic_params(2.0 * 0.05 * std::sqrt(39.478));
    SatelliteState s0;
    s0.gamma_s = 1e-4;
    s0.gamma_s_dot = 3e-4;
    const auto traj = integrate(s0, kZero, p, {}, 0.01, 60.0);
    auto energy = [&](const Sample &s) { return 0.5 * (s.gamma_s_dot * s.gamma_s_dot + p.k_s * s.gamma_s * s.gamma_s); };
    for (std::size_t i = 1; i < traj.size(); ++i) {
        const double e0 = energy(traj.samples[i - 1]);
        ASSERT_LE(energy(traj.samples[i]), e0 * (1.0 + 1e-12)) << "at sample " << i;
    }
    EXPECT_LT(energy(traj.back()), 1e-3 * energy(traj.samples.front()));
}

TEST(Integrate, LinearInInputWithoutAccelerationCoupling) {
    EmmParams p = default_params();
    p.b_s = 0.0;
    const TorqueSource u = [](double t) { return 0.004 * std::sin(0.7 * t) * std::exp(-0.05 * t); };
    const double c = 3.7;
    const TorqueSource cu = [&](double t) { return c * u(t); };
    const auto a = integrate({}, u, p, {}, 0.01, 40.0);
    const auto b = integrate({}, cu, p, {}, 0.01, 40.0);
    const double scale = a.peak_abs(&Sample::gamma_s);
    ASSERT_GT(scale, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_NEAR(b.samples[i].gamma_s, c * a.samples[i].gamma_s, 1e-9 * c * scale);
    }
}

TEST(Integrate, RigidBodyMatchesDoubleIntegral) {
    EmmParams p = default_params();
    p.a_s = p.b_s = 0.0;
    const TorqueSource u = [](double t) { return 0.003 * std::sin(0.5 * t) + 0.001 * std::cos(1.3 * t); };
    const double t_end = 30.0;
    const auto traj = integrate({}, u, p, {}, 0.01, t_end);

    // Trapezoid oracle on a fine grid.
    const double h = 1e-4;
    double omega = 0.0, theta = 0.0;
    double prev_acc = u(0.0) / p.i_sat;
    const auto n = static_cast<std::size_t>(std::llround(t_end / h));
    for (std::size_t k = 1; k <= n; ++k) {
        const double acc = u(k * h) / p.i_sat;
        const double new_omega = omega + 0.5 * h * (prev_acc + acc);
        theta += 0.5 * h * (omega + new_omega);
        omega = new_omega;
        prev_acc = acc;
    }
    EXPECT_NEAR(traj.back().theta, theta, 1e-6);
    EXPECT_NEAR(traj.back().omega, omega, 1e-7);
}

TEST(Integrate, Deterministic) {
    const auto prof = max_torque_profile();
    const auto a = simulate_profile(prof, default_params(), 0.01, 80.0);
    const auto b = simulate_profile(prof, default_params(), 0.01, 80.0);
    EXPECT_TRUE(a == b);
}

TEST(SimulateProfile, StepHalvingSelfConvergence) {
    const auto prof = max_torque_profile();
    const auto coarse = simulate_profile(prof, default_params(), 0.01, 120.0);
    const auto fine = simulate_profile(prof, default_params(), 0.005, 120.0);
    ASSERT_EQ(fine.size(), 2 * coarse.size() - 1);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
        max_diff = std::max(max_diff, std::abs(coarse.samples[i].gamma_s - fine.samples[2 * i].gamma_s));
    EXPECT_LT(max_diff, 1e-8);
}

TEST(SimulateProfile, NoSloshBeforeFirstCommand) {
    const auto traj = simulate_profile(max_torque_profile(), default_params(), 0.01, 60.0);
    for (const auto &s : traj.samples) {
        if (s.t < 30.0 - 1e-9) {
            ASSERT_EQ(s.gamma_s, 0.0);
        }
    }
    EXPECT_GT(traj.peak_abs(&Sample::gamma_s), 0.0);
}

TEST(Calibration, DefaultScaleReproduces) {
    const auto r = calibrate_emm_detailed(1e-4, 1e-3, max_torque_profile(), base_params());
    EXPECT_NEAR(r.scale, kDefaultCouplingScale, 1e-6 * kDefaultCouplingScale);
    EXPECT_GE(r.peak, 3.0e-4);
    EXPECT_LE(r.peak, 3.3e-4);
    EXPECT_EQ(r.params.k_s, base_params().k_s);
    EXPECT_EQ(r.params.c_s, base_params().c_s);
    const double peak = peak_slosh(max_torque_profile(), default_params(), {});
    EXPECT_NEAR(peak, std::sqrt(1e-4 * 1e-3), 0.05 * std::sqrt(1e-4 * 1e-3));
}

TEST(Calibration, DegenerateIntervalHitsPoint) {
    const double c = 5e-4;
    const auto p = calibrate_emm(c, c, max_torque_profile(), base_params());
    EXPECT_NEAR(peak_slosh(max_torque_profile(), p, {}), c, 0.05 * c);
}

TEST(Calibration, ZeroExcitationFails) {
    actuator::CommandProfile empty;
    EXPECT_THROW(calibrate_emm(1e-4, 1e-3, empty, base_params()), CalibrationError);
    const auto zero = actuator::bang_stop_bang(0.0, 6.0, 10.0, 30.0, +1);
    try {
        calibrate_emm(1e-4, 1e-3, zero, base_params());
        FAIL();
    } catch (const CalibrationError &e) {
        EXPECT_EQ(e.achieved_peak(), 0.0);
    }
}

TEST(Calibration, RejectsBadInterval) {
    EXPECT_THROW(calibrate_emm(1e-3, 1e-4, max_torque_profile(), base_params()), ValidationError);
    EXPECT_THROW(calibrate_emm(0.0, 1e-4, max_torque_profile(), base_params()), ValidationError);
}

TEST(Tank, PublishedVolume) {
    EXPECT_NEAR(tank_volume(default_tank()), 0.000942, 0.03 * 0.000942);
}

TEST(Tank, HeadProfileMatchesFlangedDishedDepth) {
    // For a consistent F&D head the radius reaches zero exactly at the apex
    // and equals the bore at the tangent line.
    const auto g = default_tank();
    EXPECT_NEAR(head_radius(g, 0.0), g.diameter / 2.0, 1e-12);
    EXPECT_NEAR(head_radius(g, g.head_depth), 0.0, 1e-12);
}

TEST(Tank, PureCylinder) {
    TankGeometry g = default_tank();
    g.head_depth = 0.0;
    g.total_length = g.straight_length;
    EXPECT_NEAR(tank_volume(g), kPi * 0.045 * 0.045 * 0.1295, 1e-12);
    EXPECT_NEAR(tank_volume(g), 8.238e-4, 1e-7);
}

TEST(Tank, EmptyFill) {
    TankGeometry g = default_tank();
    g.fill_ratio = 0.0;
    EXPECT_EQ(fluid_volume(g), 0.0);
}

TEST(Tank, InvariantsEnforced) {
    TankGeometry g = default_tank();
    g.total_length = 0.160;
    EXPECT_THROW(tank_volume(g), ValidationError);
    g = default_tank();
    g.fill_ratio = 1.2;
    EXPECT_THROW(tank_volume(g), ValidationError);
}

TEST(Tank, FluidBudgetReportsBothDerivations) {
    const auto b = fluid_budget(default_tank());
    EXPECT_NEAR(b.fluid_volume_derived, 0.70 * b.tank_volume, 1e-15);
    EXPECT_NEAR(b.fluid_volume_derived, 0.000659, 0.00001);
    EXPECT_EQ(b.fluid_volume_published, 0.000709);
    EXPECT_NEAR(b.mass_fraction_published, 0.101, 0.001);
}

namespace {

Trajectory synthetic(double dt, double t_end, const std::function<double(double)> &f) {
    Trajectory tr;
    for (std::size_t k = 0; k < sample_count(t_end, dt); ++k) {
        Sample s;
        s.t = k * dt;
        s.gamma_s = f(s.t);
        tr.samples.push_back(s);
    }
    return tr;
}

}  // namespace

TEST(Settling, ZeroChannelSettlesAtLastCommand) {
    const auto traj = simulate_profile(max_torque_profile(), default_params(), 0.01, 80.0);
    Trajectory zero = traj;
    for (auto &s : zero.samples) s.omega = 0.0;
    EXPECT_NEAR(settling_time(zero, Channel::Omega, 0.05), 52.0, 1e-9);
}

TEST(Settling, PureEnvelope) {
    const auto tr = synthetic(0.01, 30.0, [](double t) { return std::exp(-0.3 * t); });
    EXPECT_NEAR(settling_time(tr, Channel::GammaS, 0.05), std::log(20.0) / 0.3, 0.01);
}

TEST(Settling, DecayingOscillationWithinHalfPeriodOfEnvelope) {
    const auto tr = synthetic(0.01, 30.0, [](double t) { return std::exp(-0.3 * t) * std::sin(2 * kPi * t); });
    const double env = std::log(20.0) / 0.3;
    const double ts = settling_time(tr, Channel::GammaS, 0.05);
    EXPECT_GE(ts, env - 0.5);
    EXPECT_LE(ts, env + 0.01);

    // Brute-force oracle: scan backwards for the last exceedance.
    double peak = 0.0;
    for (const auto &s : tr.samples) peak = std::max(peak, std::abs(s.gamma_s));
    double expect = 0.0;
    for (std::size_t i = tr.size(); i-- > 0;) {
        if (std::abs(tr.samples[i].gamma_s) > 0.05 * peak) {
            expect = tr.samples[i + 1].t;
            break;
        }
    }
    EXPECT_DOUBLE_EQ(ts, expect);
}

TEST(Settling, UndampedNeverSettles) {
    const auto tr = synthetic(0.01, 30.0, [](double t) { return std::sin(2 * kPi * t); });
    EXPECT_EQ(settling_time(tr, Channel::GammaS, 0.05), kInfinity);
    const auto tr2 = synthetic(0.01, 30.005, [](double t) { return std::sin(2 * kPi * t); });
    EXPECT_EQ(settling_time(tr2, Channel::GammaS, 0.05), kInfinity);
}

TEST(Settling, Errors) {
    EXPECT_THROW(settling_time(Trajectory{}, Channel::GammaS, 0.05), ValidationError);
    const auto tr = synthetic(0.01, 1.0, [](double) { return 0.0; });
    EXPECT_THROW(settling_time(tr, Channel::GammaS, 0.0), ValidationError);
    EXPECT_THROW(settling_time(tr, Channel::GammaS, 1.0), ValidationError);
}

TEST(TrajectoryCsv, HeaderAndPrecision) {
    const auto traj = simulate_profile(max_torque_profile(), default_params(), 0.01, 31.0);
    std::ostringstream os;
    write_csv(os, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,theta,omega,omega_dot,gamma_s,gamma_s_dot,gamma_rw");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, traj.size());
}
