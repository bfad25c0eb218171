#include "sloshlab/narx.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sloshlab;
using namespace sloshlab::predictor;

namespace {

TrainHyper quick_hyper(int epochs = 60) {
    TrainHyper h;
    h.epochs = epochs;
    return h;
}

/// Small trained pair shared by the slower tests.
struct Trained {
    SloshDataset train, test;
    TrainResult narx, ffnn;
};

const Trained &trained() {
    static const Trained t = [] {
        Trained x;
        x.train = generate_dataset(default_grid(), emm::default_params(), 1);
        x.test = generate_dataset(default_grid(), emm::default_params(), 2);
        x.narx = train_narx(x.train, quick_hyper(), 3);
        x.ffnn = train_feedforward(x.train, quick_hyper(), 3);
        return x;
    }();
    return t;
}

}  // namespace

TEST(Dataset, GridCounts) {
    const auto ds = generate_dataset(default_grid(), emm::default_params(), 5);
    EXPECT_EQ(ds.runs.size(), 27u);
    GridSpec g = default_grid();
    g.runs_per_cell = 2;
    g.torques = {0.004};
    EXPECT_EQ(generate_dataset(g, emm::default_params(), 5).runs.size(), 18u);
}

TEST(Dataset, CausalZeroSloshBeforeFirstPulse) {
    const auto ds = generate_dataset(default_grid(), emm::default_params(), 5);
    for (const auto &r : ds.runs) {
        for (std::size_t k = 0; k * ds.sample_dt < r.meta.t_start - 1e-9; ++k) ASSERT_EQ(r.gamma_s[k], 0.0) << r.id;
        EXPECT_GT(stats::max_abs(r.gamma_s), 0.0);
    }
}

TEST(Dataset, RunsStayInsideTheirCells) {
    const auto g = default_grid();
    const auto ds = generate_dataset(g, emm::default_params(), 8);
    for (const auto &r : ds.runs) {
        EXPECT_GE(r.meta.torque, 0.002);
        EXPECT_LE(r.meta.torque, 0.006);
        EXPECT_GE(r.meta.t_dur, 5.0);
        EXPECT_LE(r.meta.t_dur, 25.0);
        EXPECT_GE(r.meta.t_dwell, 25.0);
        EXPECT_LE(r.meta.t_dwell, 40.0);
        EXPECT_FALSE(r.meta.out_of_range);
    }
    for (const auto &r : generate_dataset(scaled_grid(2.0), emm::default_params(), 8).runs) EXPECT_TRUE(r.meta.out_of_range);
}

TEST(Dataset, MaxBangCellPeakInCalibratedInterval) {
    RunMeta m;
    m.torque = 0.006;
    m.t_dur = 6;
    m.t_dwell = 10;
    m.t_start = 30;
    const auto r = simulate_run("cell", m, emm::default_params(), 60, 10, 0.01);
    const double peak = stats::max_abs(r.gamma_s);
    EXPECT_GE(peak, 1e-4);
    EXPECT_LE(peak, 1e-3);
    EXPECT_TRUE(r.meta.out_of_range);
}

TEST(Dataset, DeterministicAcrossThreadCounts) {
    const auto a = generate_dataset(default_grid(), emm::default_params(), 4, 1);
    const auto b = generate_dataset(default_grid(), emm::default_params(), 4, 4);
    EXPECT_EQ(a, b);
    const auto c = generate_dataset(default_grid(), emm::default_params(), 5, 1);
    EXPECT_NE(a.runs[0].meta, c.runs[0].meta);
}

TEST(Dataset, GridValidation) {
    GridSpec g;
    g.torques = {0.006};
    EXPECT_THROW(g.validate(), ValidationError);
    g = {};
    g.sample_rate = 30;
    EXPECT_THROW(g.validate(), ValidationError);
    g = {};
    g.runs_per_cell = 0;
    EXPECT_THROW(g.validate(), ValidationError);
}

TEST(AddNoise, VeryHighSnrIsNearIdentity) {
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.1 * i);
    const auto y = add_noise(x, 1e12, 1);
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(y[i] - x[i]));
    EXPECT_LT(d, 1e-9 * stats::rms(x));
}

TEST(AddNoise, EmpiricalSnr) {
    std::vector<double> x(100000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.05 * i) + 0.3;
    const auto y = add_noise(x, 16.5, 9);
    std::vector<double> n(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) n[i] = y[i] - x[i];
    const double snr = stats::rms(x) / stats::rms(n);
    EXPECT_GE(snr, 15.5);
    EXPECT_LE(snr, 17.5);
}

TEST(AddNoise, SeededAndDegenerate) {
    const std::vector<double> x{1.0, -2.0, 3.0};
    EXPECT_EQ(add_noise(x, 5.0, 3), add_noise(x, 5.0, 3));
    const std::vector<double> z(10, 0.0);
    EXPECT_EQ(add_noise(z, 5.0, 3), z);
    EXPECT_THROW(add_noise(x, 0.0, 3), ValidationError);
}

TEST(Normalizer, RoundTrip) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(3e-4, 1e-4);
    std::vector<double> xs(1000);
    for (auto &x : xs) x = n(rng);
    const auto norm = Normalizer::fit(xs, 1.0);
    for (double x : xs) ASSERT_NEAR(norm.denormalize(norm.normalize(x)), x, 1e-12 * std::max(1.0, std::abs(x)));
    const std::vector<double> c(5, 2.0);
    EXPECT_EQ(Normalizer::fit(c, 0.5).scale, 0.5);
}

TEST(Network, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 1.0);
    NarxModel m = init_model(ModelKind::Narx, 3, 4, 6, 77);
    for (auto &p : m.params) p += 0.1 * n(rng);
    DesignMatrix d;
    d.n_inputs = m.n_inputs();
    const std::size_t rows = 32;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < d.n_inputs; ++i) d.x.push_back(n(rng));
        d.y.push_back(n(rng));
    }
    std::vector<std::size_t> batch(rows);
    for (std::size_t i = 0; i < rows; ++i) batch[i] = i;
    std::vector<double> grad, dummy;
    loss_and_gradient(m, d, batch, grad);
    const double h = 1e-6;
    for (std::size_t p = 0; p < m.params.size(); ++p) {
        NarxModel a = m, b = m;
        a.params[p] += h;
        b.params[p] -= h;
        const double fd = (loss_and_gradient(a, d, batch, dummy) - loss_and_gradient(b, d, batch, dummy)) / (2 * h);
        ASSERT_NEAR(grad[p], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "param " << p;
        if (std::abs(fd) > 1e-3) {
            ASSERT_NEAR(grad[p] / fd, 1.0, 1e-5) << "param " << p;
        }
    }
}

TEST(Network, ZeroModelPredictsZero) {
    NarxModel m = init_model(ModelKind::Narx, 2, 2, 3, 1);
    std::fill(m.params.begin(), m.params.end(), 0.0);
    const std::vector<double> z(10, 0.0);
    EXPECT_EQ(predict(m, z, z, z), 0.0);
}

TEST(Network, WarmupReturnsZero) {
    const auto &m = trained().narx.model;
    const std::vector<double> few(m.warmup() - 1, 0.01);
    EXPECT_EQ(predict(m, few, few, few), 0.0);
}

TEST(Network, TranslationInvariant) {
    const auto &m = trained().narx.model;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    const std::size_t w = 12;
    std::vector<double> om(w), gr(w), y(w);
    for (std::size_t i = 0; i < w; ++i) {
        om[i] = 0.01 * n(rng);
        gr[i] = 0.002 * n(rng);
        y[i] = 1e-4 * n(rng);
    }
    const double direct = predict(m, om, gr, y);
    std::vector<double> om2(40, 0.3), gr2(40, -0.005), y2(40, 5e-3);
    std::copy(om.begin(), om.end(), om2.end() - w);
    std::copy(gr.begin(), gr.end(), gr2.end() - w);
    std::copy(y.begin(), y.end(), y2.end() - w);
    EXPECT_EQ(predict(m, om2, gr2, y2), direct);
}

TEST(Network, StreamMatchesOpenSeries) {
    const auto &t = trained();
    const auto &r = t.test.runs[3];
    const auto series = predict_run(t.narx.model, r, FeedbackMode::Open);
    NarxStream stream(t.narx.model);
    for (std::size_t k = 0; k < r.size(); ++k) ASSERT_EQ(stream.push(r.omega[k], r.gamma_rw[k]), series[k]) << k;
}

TEST(Training, ReportAndSelection) {
    const auto &t = trained();
    const auto &rep = t.narx.report;
    ASSERT_EQ(rep.history.size(), 60u);
    EXPECT_LE(rep.best_val_nrmse, rep.history.front().val_nrmse);
    EXPECT_EQ(rep.history[static_cast<std::size_t>(rep.best_epoch - 1)].val_nrmse, rep.best_val_nrmse);
    EXPECT_FALSE(rep.constant_target);
    EXPECT_EQ(rep.train_runs.size() + rep.validation_runs.size(), 27u);
    EXPECT_NO_THROW(t.narx.model.validate());
    EXPECT_EQ(t.ffnn.model.n_a, 0);
}

TEST(Training, Deterministic) {
    const auto ds = generate_dataset(default_grid(), emm::default_params(), 1);
    const auto a = train_narx(ds, quick_hyper(3), 21);
    const auto b = train_narx(ds, quick_hyper(3), 21);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.report.history, b.report.history);
    const auto c = train_narx(ds, quick_hyper(3), 22);
    EXPECT_NE(a.model.params, c.model.params);
}

TEST(Training, ConstantTargetFlaggedAndPredictsZero) {
    auto ds = generate_dataset(default_grid(), emm::default_params(), 1);
    for (auto &r : ds.runs) std::fill(r.gamma_s.begin(), r.gamma_s.end(), 0.0);
    const auto res = train_narx(ds, quick_hyper(5), 1);
    EXPECT_TRUE(res.report.constant_target);
    const auto y = predict_run(res.model, ds.runs[0], FeedbackMode::Open);
    EXPECT_LT(stats::max_abs(y), 1e-9);
}

TEST(Training, DivergenceReportsEpoch) {
    const auto ds = generate_dataset(default_grid(), emm::default_params(), 1);
    TrainHyper h = quick_hyper(50);
    h.learning_rate = 1e6;
    h.momentum = 0.99;
    try {
        train_narx(ds, h, 1);
        FAIL() << "expected divergence";
    } catch (const TrainingError &e) {
        EXPECT_GE(e.epoch(), 1u);
        EXPECT_LE(e.epoch(), 50u);
    }
}

TEST(Training, RejectsBadInputs) {
    const auto ds = generate_dataset(default_grid(), emm::default_params(), 1);
    TrainHyper h = quick_hyper(1);
    h.n_a = 0;
    EXPECT_THROW(train_narx(ds, h, 1), ValidationError);
    EXPECT_THROW(train_narx(SloshDataset{}, quick_hyper(1), 1), ValidationError);
}

TEST(Prediction, OpenModeNoBetterThanClosedOnTrainingData) {
    const auto &t = trained();
    std::vector<double> open, closed, truth;
    for (const auto &r : t.train.runs) {
        const auto o = predict_run(t.narx.model, r, FeedbackMode::Open);
        const auto c = predict_run(t.narx.model, r, FeedbackMode::Closed);
        open.insert(open.end(), o.begin(), o.end());
        closed.insert(closed.end(), c.begin(), c.end());
        truth.insert(truth.end(), r.gamma_s.begin(), r.gamma_s.end());
    }
    EXPECT_NE(open, closed);
    EXPECT_GE(stats::nrmse(open, truth).value, stats::nrmse(closed, truth).value);
}

TEST(Evaluation, HeldOutQualityAndNoiseOrdering) {
    const auto &t = trained();
    const std::vector<NamedModel> models{{"narx", &t.narx.model}, {"ffnn", &t.ffnn.model}};
    const std::vector<double> snrs{kInfinity, 16.5};
    const auto table = evaluate(models, t.test, snrs, 7);
    ASSERT_EQ(table.size(), 4u);
    EXPECT_EQ(table[0].model, "narx");
    EXPECT_LT(table[0].nrmse, 0.15);
    EXPECT_LE(table[0].nrmse, table[1].nrmse);
    EXPECT_GT(table[0].correlation, 0.9);
    EXPECT_EQ(evaluate(models, t.test, snrs, 7), table);
}

TEST(Evaluation, RejectsOverlappingRuns) {
    const auto &t = trained();
    const std::vector<NamedModel> models{{"narx", &t.narx.model}};
    const std::vector<double> snrs{kInfinity};
    EXPECT_THROW(evaluate(models, t.train, snrs, 7), ValidationError);
}
