#include "sloshlab/sensors.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace sloshlab;
using namespace sloshlab::sensors;

namespace {

double sample_std(const std::vector<double> &x) { return stats::stddev(x); }

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
    const double mx = stats::mean(x), my = stats::mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

double torque_for_psi(double psi, const PressureArraySpec &spec) {
    return psi * kPascalPerPsi * spec.moment_arm * spec.area();
}

}  // namespace

TEST(GyroNoise, EpsonExample) {
    EXPECT_NEAR(gyro_noise_sigma({0.0015, 2.7e-5, 0.01}), 0.015, 1e-6);
}

TEST(GyroNoise, ZeroAndBiasOnly) {
    EXPECT_EQ(gyro_noise_sigma({0.0, 0.0, 0.01}), 0.0);
    EXPECT_NEAR(gyro_noise_sigma({0.0, 3.0, 1.0}), std::sqrt(3.0), 1e-12);
}

TEST(GyroNoise, RejectsZeroDt) {
    EXPECT_THROW(gyro_noise_sigma({0.0015, 2.7e-5, 0.0}), ValidationError);
    EXPECT_THROW(gyro_noise_sigma({-1.0, 0.0, 0.01}), ValidationError);
}

TEST(GyroNoise, MonotoneInBothTerms) {
    double prev = -1.0;
    for (double sv = 0.0; sv < 0.01; sv += 0.001) {
        const double s = gyro_noise_sigma({sv, 1e-4, 0.01});
        EXPECT_GT(s, prev);
        prev = s;
    }
    prev = -1.0;
    for (double su = 0.0; su < 0.01; su += 0.001) {
        const double s = gyro_noise_sigma({1e-3, su, 0.01});
        EXPECT_GT(s, prev);
        prev = s;
    }
}

TEST(GyroNoise, WhiteTermDominatesAtSmallDt) {
    const double sv = 0.0015, su = 2.7e-5;
    for (double dt : {1e-3, 1e-2, 1e-1}) {
        ASSERT_LT(su * su * dt * dt / 3.0, 1e-4 * sv * sv);
        EXPECT_NEAR(gyro_noise_sigma({sv, su, dt}) / (sv / std::sqrt(dt)), 1.0, 0.01);
    }
}

TEST(SimulateGyro, ZeroNoiseIsIdentity) {
    std::vector<double> truth(1000);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = std::sin(0.01 * i) * 3.7;
    const auto out = simulate_gyro(truth, {0.0, 0.0, 0.01}, 5);
    EXPECT_EQ(out, truth);
}

TEST(SimulateGyro, FirstDifferenceStatistics) {
    const GyroSpec spec = default_gyro();
    const std::vector<double> truth(1'000'000, 0.0);
    const auto out = simulate_gyro(truth, spec, 42);
    std::vector<double> diff(out.size() - 1);
    for (std::size_t i = 1; i < out.size(); ++i) diff[i - 1] = out[i] - out[i - 1];
    const double expected = std::sqrt(2.0) * spec.sigma_v / std::sqrt(spec.dt);
    EXPECT_NEAR(sample_std(diff) / expected, 1.0, 0.02);
}

TEST(SimulateGyro, Deterministic) {
    const std::vector<double> truth(5000, 1.0);
    EXPECT_EQ(simulate_gyro(truth, default_gyro(), 9), simulate_gyro(truth, default_gyro(), 9));
    EXPECT_NE(simulate_gyro(truth, default_gyro(), 9), simulate_gyro(truth, default_gyro(), 10));
}

TEST(SimulateGyro, AveragingSlopeIsMinusHalf) {
    const GyroSpec spec{0.0015, 0.0, 0.01};
    const auto out = simulate_gyro(std::vector<double>(1'000'000, 0.0), spec, 17);
    std::vector<double> log_tau, log_sigma;
    for (std::size_t m : {1, 2, 5, 10, 20, 50, 100}) {
        std::vector<double> avg;
        for (std::size_t k = 0; k + m <= out.size(); k += m) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += out[k + j];
            avg.push_back(s / static_cast<double>(m));
        }
        log_tau.push_back(std::log(m * spec.dt));
        log_sigma.push_back(std::log(sample_std(avg)));
    }
    EXPECT_NEAR(fit_slope(log_tau, log_sigma), -0.5, 0.05);
}

TEST(Accel, TangentialFromAngularAcceleration) {
    const std::vector<double> wdot{0.0, 2.47e-3, -1.0};
    const auto a = simulate_accel(wdot, {0.1, 0.0}, 1);
    EXPECT_DOUBLE_EQ(a[1], 2.47e-4);
    EXPECT_DOUBLE_EQ(a[2], -0.1);
    const auto noisy = simulate_accel(std::vector<double>(100000, 0.0), {0.1, 1e-3}, 3);
    EXPECT_NEAR(sample_std(noisy), 1e-3, 2e-5);
}

TEST(MssCsv, HeaderAndRows) {
    MssSeries s;
    s.t = {0.0, 0.01};
    for (auto &c : s.omega_meas) c = {1.0, 2.0};
    for (auto &c : s.accel) c = {0.0, 0.5};
    std::ostringstream os;
    write_mss_csv(os, s);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,omega_meas_x,omega_meas_y,omega_meas_z,accel_x,accel_y,accel_z");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

// Reference slosh torques per excitation against the expected rate disturbances.
struct DetectRow {
    double gamma_s, omega_dot_s, omega_s;
};

TEST(Detectability, ReproducesTableWithinTenPercent) {
    const DetectRow rows[] = {{5.77e-3, 5.93, 0.296}, {1.44e-3, 1.47, 0.073}, {4.17e-3, 4.32, 0.216}, {7.56e-3, 7.77, 0.388}};
    for (const auto &r : rows) {
        const auto d = detectability(r.gamma_s, 0.0556, 0.05);
        EXPECT_NEAR(d.omega_dot_s / r.omega_dot_s, 1.0, 0.10) << r.gamma_s;
        EXPECT_NEAR(d.omega_s / r.omega_s, 1.0, 0.10) << r.gamma_s;
        EXPECT_EQ(d.omega_s, d.omega_dot_s * 0.05);
        EXPECT_GT(d.margin, 1.0);
    }
}

TEST(Detectability, MarginForSmallestDisturbance) {
    EXPECT_NEAR(0.073 / 0.015, 4.87, 0.005);
    const auto d = detectability(1.44e-3, 0.0556);
    EXPECT_EQ(d.margin, d.omega_s / d.sigma_omega);
    EXPECT_NEAR(d.margin, 4.87, 0.1 * 4.87);
}

TEST(Detectability, Homogeneous) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> g(1e-5, 1e-2);
    for (int i = 0; i < 100; ++i) {
        const double x = g(rng);
        const auto a = detectability(x, 0.0542);
        const auto b = detectability(2 * x, 0.0542);
        ASSERT_EQ(b.omega_dot_s, 2 * a.omega_dot_s);
        ASSERT_EQ(b.omega_s, 2 * a.omega_s);
    }
}

TEST(Detectability, RejectsNonPositive) {
    EXPECT_THROW(detectability(0.0, 0.05), ValidationError);
    EXPECT_THROW(detectability(1e-3, 0.0), ValidationError);
    EXPECT_THROW(detectability(1e-3, 0.05, 0.0), ValidationError);
}

TEST(Pressure, ZeroTorqueGivesZeroFrames) {
    const auto frames = simulate_pressure(std::vector<double>(1001, 0.0), 0.01, {}, emm::default_tank(), 1);
    ASSERT_EQ(frames.size(), 101u);
    for (const auto &f : frames) {
        for (auto v : f.samples) ASSERT_EQ(v, 0);
    }
}

TEST(Pressure, SubActivationIsSilent) {
    const PressureArraySpec spec;
    const double g = torque_for_psi(0.005, spec);
    EXPECT_NEAR(wall_pressure(g, spec), 0.005, 1e-12);
    for (double sign : {1.0, -1.0}) {
        const auto frames = simulate_pressure(std::vector<double>(200, sign * g), 0.01, spec, emm::default_tank(), 2);
        for (const auto &f : frames) {
            for (auto v : f.samples) ASSERT_EQ(v, 0);
        }
    }
}

TEST(Pressure, FullScaleSaturatesAt4095) {
    const PressureArraySpec spec;
    const auto frames = simulate_pressure(std::vector<double>(10, torque_for_psi(0.5, spec)), 0.01, spec,
                                          emm::default_tank(), 3);
    ASSERT_EQ(frames.size(), 1u);
    for (std::size_t j = 0; j < spec.pads_per_strip; ++j) EXPECT_EQ(frames[0].at(0, j), 4095);
    // opposite wall unloaded
    for (std::size_t j = 0; j < spec.pads_per_strip; ++j) EXPECT_EQ(frames[0].at(4, j), 0);
}

TEST(Pressure, NegativeTorqueLoadsOppositeWall) {
    const PressureArraySpec spec;
    const auto f = simulate_pressure(std::vector<double>(10, -torque_for_psi(0.3, spec)), 0.01, spec,
                                     emm::default_tank(), 3)[0];
    EXPECT_EQ(f.at(0, 0), 0);
    EXPECT_GT(f.at(4, 0), 0);
}

TEST(Pressure, SamplesStayInRange) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 2e-3);
    std::vector<double> g(5000);
    for (auto &x : g) x = n(rng);
    for (int bits : {4, 12, 16}) {
        PressureArraySpec spec;
        spec.resolution_bits = bits;
        for (const auto &f : simulate_pressure(g, 0.01, spec, emm::default_tank(), 4)) {
            for (auto v : f.samples) ASSERT_LE(v, spec.max_raw());
        }
    }
}

TEST(Pressure, ThresholdsInsideActivationInterval) {
    const PressureArraySpec spec;
    const auto th = pad_thresholds(spec, 99);
    ASSERT_EQ(th.size(), 128u);
    for (double t : th) {
        EXPECT_GE(t, 0.01);
        EXPECT_LE(t, 0.02);
    }
    EXPECT_EQ(th, pad_thresholds(spec, 99));
}

TEST(Pressure, ConfigurationErrors) {
    PressureArraySpec spec;
    spec.full_scale = 0.015;
    EXPECT_THROW(simulate_pressure(std::vector<double>(10, 0.0), 0.01, spec, emm::default_tank(), 1), ValidationError);
    spec = {};
    spec.frame_rate = 30.0;  // does not divide 100 Hz
    EXPECT_THROW(simulate_pressure(std::vector<double>(10, 0.0), 0.01, spec, emm::default_tank(), 1), ValidationError);
    spec = {};
    spec.resolution_bits = 17;
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = {};
    spec.n_strips = 0;
    EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Pressure, TableOrderOfMagnitude) {
    // Single-pad contact area puts the CFD torques in the same psi range as the published thresholds.
    const PressureArraySpec spec;
    const double x = wall_pressure(5.77e-3, spec);
    EXPECT_GT(x / 0.276, 0.5);
    EXPECT_LT(x / 0.276, 2.0);
}
