// Slosh-torque prediction: dataset generation, NARX / feedforward networks, evaluation
#pragma once

#include "sloshlab/actuator.hpp"
#include "sloshlab/core.hpp"
#include "sloshlab/emm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sloshlab::predictor {

// =============================================================================
// Dataset
// =============================================================================

struct RunMeta {
    double torque = 0.0;
    double t_dur = 0.0;
    double t_dwell = 0.0;
    int sign = 1;
    double t_start = 0.0;
    bool out_of_range = false;
    std::uint64_t seed = 0;
    double snr = kInfinity;

    bool operator==(const RunMeta &) const = default;
};

/// One excitation run at the dataset rate. Ω in rad/s, torques in N·m;
/// gamma_rw is the delivered wheel torque.
struct SloshRun {
    std::string id;
    RunMeta meta;
    std::vector<double> omega;
    std::vector<double> gamma_rw;
    std::vector<double> gamma_s;

    std::size_t size() const { return gamma_s.size(); }
    bool operator==(const SloshRun &) const = default;
};

struct SloshDataset {
    double sample_dt = 0.1;
    std::vector<SloshRun> runs;

    std::size_t total_samples() const {
        std::size_t n = 0;
        for (const auto &r : runs) n += r.size();
        return n;
    }

    void validate() const {
        if (!(sample_dt > 0.0)) throw ValidationError("dataset: sample_dt must be > 0");
        std::set<std::string> ids;
        for (const auto &r : runs) {
            if (r.omega.size() != r.size() || r.gamma_rw.size() != r.size())
                throw ValidationError("dataset: run '" + r.id + "' has ragged channels");
            if (!all_finite(r.gamma_s) || !all_finite(r.omega) || !all_finite(r.gamma_rw))
                throw ValidationError("dataset: run '" + r.id + "' has non-finite samples");
            if (!ids.insert(r.id).second) throw ValidationError("dataset: duplicate run id '" + r.id + "'");
        }
    }

    bool operator==(const SloshDataset &) const = default;
};

/// Excitation grid: cell centres per axis plus a uniform jitter half-width.
struct GridSpec {
    std::vector<double> torques{0.002 + 0.004 / 6, 0.004, 0.006 - 0.004 / 6};
    std::vector<double> durations{5.0 + 20.0 / 6, 15.0, 25.0 - 20.0 / 6};
    std::vector<double> dwells{25.0 + 15.0 / 6, 32.5, 40.0 - 15.0 / 6};
    double torque_jitter = 0.004 / 6;
    double duration_jitter = 20.0 / 6;
    double dwell_jitter = 15.0 / 6;
    int runs_per_cell = 1;
    double t_start = 2.0;
    double t_tail = 30.0;
    double sample_rate = 10.0;
    double sim_dt = kDefaultDt;
    /// Additive noise on Ω for every run (infinite = clean).
    double snr = kInfinity;

    std::size_t cells() const { return torques.size() * durations.size() * dwells.size(); }

    void validate() const {
        if (torques.empty() || durations.empty() || dwells.empty()) throw ValidationError("grid: empty axis");
        if (runs_per_cell < 1) throw ValidationError("grid: runs_per_cell must be >= 1");
        if (!(sample_rate > 0.0) || !(sim_dt > 0.0)) throw ValidationError("grid: rates must be positive");
        const double ratio = 1.0 / (sim_dt * sample_rate);
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
            throw ValidationError("grid: sample rate must divide the simulation rate");
        if (torque_jitter < 0.0 || duration_jitter < 0.0 || dwell_jitter < 0.0)
            throw ValidationError("grid: jitter must be >= 0");
        for (double t : torques) {
            if (std::abs(t) + torque_jitter > kTorqueMax || t - torque_jitter < 0.0)
                throw ValidationError("grid: torque cell exceeds the wheel limit");
        }
        for (double d : durations) {
            if (!(d - duration_jitter > 0.0)) throw ValidationError("grid: durations must stay positive");
        }
        for (double d : dwells) {
            if (!(d - dwell_jitter > 0.0)) throw ValidationError("grid: dwells must stay positive");
        }
    }

    bool operator==(const GridSpec &) const = default;
};

/// Cells in the nominal training ranges (3 x 3 x 3, bin centres).
inline GridSpec default_grid() { return GridSpec{}; }

/// Same torques, durations and dwells scaled by `factor` (2 puts them outside the training ranges).
inline GridSpec scaled_grid(double factor, GridSpec g = default_grid()) {
    for (double &d : g.durations) d *= factor;
    for (double &d : g.dwells) d *= factor;
    g.duration_jitter *= factor;
    g.dwell_jitter *= factor;
    return g;
}

/// Additive white noise with std = rms(series) / snr.
inline std::vector<double> add_noise(std::span<const double> series, double snr, std::uint64_t seed) {
    if (!(snr > 0.0)) throw ValidationError("add_noise: snr must be > 0");
    std::vector<double> out(series.begin(), series.end());
    const double r = stats::rms(series);
    if (r == 0.0 || std::isinf(snr)) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, r / snr);
    for (double &x : out) x += n(rng);
    return out;
}

/// Single run for explicit profile parameters.
inline SloshRun simulate_run(const std::string &id, const RunMeta &meta, const emm::EmmParams &params,
                             double t_tail, double sample_rate, double sim_dt) {
    const auto profile = actuator::bang_stop_bang(meta.torque, meta.t_dur, meta.t_dwell, meta.t_start, meta.sign);
    const double t_end = profile.end_time() + t_tail;
    const auto traj = emm::simulate_profile(profile, params, sim_dt, t_end);
    const auto stride = static_cast<std::size_t>(std::llround(1.0 / (sim_dt * sample_rate)));
    SloshRun run;
    run.id = id;
    run.meta = meta;
    run.meta.out_of_range = profile.out_of_range;
    for (std::size_t k = 0; k < traj.size(); k += stride) {
        const auto &s = traj.samples[k];
        run.omega.push_back(s.omega);
        run.gamma_rw.push_back(s.gamma_rw);
        run.gamma_s.push_back(s.gamma_s);
    }
    if (!std::isinf(meta.snr)) run.omega = add_noise(run.omega, meta.snr, derive_seed(meta.seed, 0x6f6d));
    return run;
}

/// Open-loop excitation runs over the grid; one run per cell and repetition.
/// Cells are simulated in parallel; output order and content depend only on `seed`.
inline SloshDataset generate_dataset(const GridSpec &grid, const emm::EmmParams &params, std::uint64_t seed,
                                     unsigned jobs = default_jobs()) {
    grid.validate();
    params.validate();
    const std::size_t n_runs = grid.cells() * static_cast<std::size_t>(grid.runs_per_cell);
    SloshDataset ds;
    ds.sample_dt = 1.0 / grid.sample_rate;
    ds.runs.resize(n_runs);
    parallel_for(n_runs, jobs, [&](std::size_t i) {
        const std::size_t cell = i / static_cast<std::size_t>(grid.runs_per_cell);
        const std::size_t rep = i % static_cast<std::size_t>(grid.runs_per_cell);
        const std::size_t iw = cell % grid.dwells.size();
        const std::size_t id = (cell / grid.dwells.size()) % grid.durations.size();
        const std::size_t it = cell / (grid.dwells.size() * grid.durations.size());
        RunMeta m;
        m.seed = derive_seed(seed, cell, rep);
        std::mt19937_64 rng(m.seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        m.torque = grid.torques[it] + grid.torque_jitter * u(rng);
        m.t_dur = grid.durations[id] + grid.duration_jitter * u(rng);
        m.t_dwell = grid.dwells[iw] + grid.dwell_jitter * u(rng);
        m.sign = u(rng) < 0.0 ? -1 : 1;
        m.t_start = grid.t_start;
        m.snr = grid.snr;
        const std::string run_id = std::to_string(seed) + ":" + std::to_string(cell) + ":" + std::to_string(rep);
        ds.runs[i] = simulate_run(run_id, m, params, grid.t_tail, grid.sample_rate, grid.sim_dt);
    });
    return ds;
}

// =============================================================================
// Network
// =============================================================================

struct Normalizer {
    double mean = 0.0;
    double scale = 1.0;

    double normalize(double x) const { return (x - mean) / scale; }
    double denormalize(double z) const { return z * scale + mean; }

    static Normalizer fit(std::span<const double> xs, double fallback_scale) {
        Normalizer n;
        n.mean = stats::mean(xs);
        double s = 0.0;
        for (double x : xs) s += (x - n.mean) * (x - n.mean);
        const double sd = xs.empty() ? 0.0 : std::sqrt(s / static_cast<double>(xs.size()));
        n.scale = sd > 1e-12 * std::max(1.0, std::abs(n.mean)) ? sd : fallback_scale;
        return n;
    }

    bool operator==(const Normalizer &) const = default;
};

enum class ModelKind { Narx, Feedforward };

inline std::string to_string(ModelKind k) { return k == ModelKind::Narx ? "narx" : "feedforward"; }

inline ModelKind model_kind_from_string(const std::string &s) {
    if (s == "narx") return ModelKind::Narx;
    if (s == "feedforward") return ModelKind::Feedforward;
    throw ValidationError("unknown model kind '" + s + "'");
}

/// One-hidden-layer tanh network over tapped delays. Regressor for sample k:
///   [ŷ(k-1) … ŷ(k-n_a), Ω(k) … Ω(k-n_b+1), Γ_RW(k) … Γ_RW(k-n_b+1)], all normalised.
/// Parameters are flat: W1 (hidden x inputs, row-major), b1, w2, b2.
struct NarxModel {
    ModelKind kind = ModelKind::Narx;
    int n_a = 10;
    int n_b = 10;
    int hidden = 16;
    std::vector<double> params;
    Normalizer omega_norm;
    Normalizer gamma_rw_norm;
    Normalizer gamma_s_norm;
    std::vector<std::string> training_runs;

    std::size_t n_inputs() const { return static_cast<std::size_t>(n_a + 2 * n_b); }
    std::size_t n_params() const {
        const auto h = static_cast<std::size_t>(hidden);
        return h * n_inputs() + 2 * h + 1;
    }
    /// Samples of history needed before a prediction is made.
    std::size_t warmup() const { return static_cast<std::size_t>(std::max(n_a, n_b)); }

    void validate() const {
        if (n_a < 0 || n_b < 1 || hidden < 1) throw ValidationError("model: taps and hidden width must be >= 1");
        if (kind == ModelKind::Narx && n_a < 1) throw ValidationError("model: NARX needs at least one output tap");
        if (kind == ModelKind::Feedforward && n_a != 0) throw ValidationError("model: feedforward has no output taps");
        if (params.size() != n_params()) throw ValidationError("model: parameter count mismatch");
        if (!all_finite(params)) throw ValidationError("model: non-finite weights");
        for (const auto *n : {&omega_norm, &gamma_rw_norm, &gamma_s_norm}) {
            if (!(n->scale > 0.0) || !std::isfinite(n->mean)) throw ValidationError("model: bad normaliser");
        }
    }

    /// Network output (normalised units) for a normalised regressor.
    double forward(const double *x, double *hidden_out = nullptr) const {
        const std::size_t ni = n_inputs();
        const auto h = static_cast<std::size_t>(hidden);
        const double *w1 = params.data();
        const double *b1 = w1 + h * ni;
        const double *w2 = b1 + h;
        double out = w2[h];
        for (std::size_t j = 0; j < h; ++j) {
            const double *row = w1 + j * ni;
            double a = b1[j];
            for (std::size_t i = 0; i < ni; ++i) a += row[i] * x[i];
            const double z = std::tanh(a);
            if (hidden_out) hidden_out[j] = z;
            out += w2[j] * z;
        }
        return out;
    }

    bool operator==(const NarxModel &) const = default;
};

/// Fresh model with Glorot-uniform weights.
inline NarxModel init_model(ModelKind kind, int n_a, int n_b, int hidden, std::uint64_t seed) {
    NarxModel m;
    m.kind = kind;
    m.n_a = kind == ModelKind::Feedforward ? 0 : n_a;
    m.n_b = n_b;
    m.hidden = hidden;
    m.params.assign(m.n_params(), 0.0);
    std::mt19937_64 rng(seed);
    const std::size_t ni = m.n_inputs();
    const auto h = static_cast<std::size_t>(hidden);
    std::uniform_real_distribution<double> u1(-1.0, 1.0);
    const double l1 = std::sqrt(6.0 / static_cast<double>(ni + h));
    const double l2 = std::sqrt(6.0 / static_cast<double>(h + 1));
    for (std::size_t i = 0; i < h * ni; ++i) m.params[i] = l1 * u1(rng);
    for (std::size_t j = 0; j < h; ++j) m.params[h * ni + h + j] = l2 * u1(rng);
    return m;
}

/// Fill a normalised regressor from raw windows (most recent sample last).
/// `y_hist` holds raw past outputs ŷ(k-n_a) … ŷ(k-1).
inline void build_regressor(const NarxModel &m, std::span<const double> omega, std::span<const double> gamma_rw,
                            std::span<const double> y_hist, double *x) {
    std::size_t p = 0;
    for (int i = 1; i <= m.n_a; ++i) x[p++] = m.gamma_s_norm.normalize(y_hist[y_hist.size() - i]);
    for (int i = 0; i < m.n_b; ++i) x[p++] = m.omega_norm.normalize(omega[omega.size() - 1 - i]);
    for (int i = 0; i < m.n_b; ++i) x[p++] = m.gamma_rw_norm.normalize(gamma_rw[gamma_rw.size() - 1 - i]);
}

/// Predicted slosh torque [N·m] at the newest sample of the windows; 0 during warm-up.
inline double predict(const NarxModel &m, std::span<const double> omega, std::span<const double> gamma_rw,
                      std::span<const double> y_hist) {
    const std::size_t need = m.warmup();
    if (omega.size() < need || gamma_rw.size() < need || y_hist.size() < static_cast<std::size_t>(m.n_a))
        return 0.0;
    std::vector<double> x(m.n_inputs());
    build_regressor(m, omega, gamma_rw, y_hist, x.data());
    return m.gamma_s_norm.denormalize(m.forward(x.data()));
}

enum class FeedbackMode { Open, Closed };

inline std::string to_string(FeedbackMode f) { return f == FeedbackMode::Open ? "open" : "closed"; }

/// Predictions over a whole run. Open mode feeds back the model's own outputs;
/// closed mode feeds back the recorded targets. Warm-up samples predict 0.
inline std::vector<double> predict_series(const NarxModel &m, std::span<const double> omega,
                                          std::span<const double> gamma_rw, std::span<const double> targets,
                                          FeedbackMode mode) {
    const std::size_t n = omega.size();
    std::vector<double> y(n, 0.0);
    std::vector<double> x(m.n_inputs());
    const std::size_t w = m.warmup();
    for (std::size_t k = w; k < n; ++k) {
        const auto fb = mode == FeedbackMode::Open ? std::span<const double>(y).first(k) : targets.first(k);
        build_regressor(m, omega.first(k + 1), gamma_rw.first(k + 1), fb, x.data());
        y[k] = m.gamma_s_norm.denormalize(m.forward(x.data()));
    }
    return y;
}

inline std::vector<double> predict_run(const NarxModel &m, const SloshRun &r, FeedbackMode mode) {
    return predict_series(m, r.omega, r.gamma_rw, r.gamma_s, mode);
}

/// Streaming open-mode predictor for use inside a control loop.
class NarxStream {
public:
    explicit NarxStream(const NarxModel &model) : model_(&model), x_(model.n_inputs()) {}

    /// Push the newest (Ω, Γ_RW) sample; returns the prediction for that sample.
    double push(double omega, double gamma_rw) {
        const auto cap = model_->warmup() + 1;
        omega_.push_back(omega);
        gamma_.push_back(gamma_rw);
        if (omega_.size() > cap) {
            omega_.erase(omega_.begin());
            gamma_.erase(gamma_.begin());
        }
        double y = 0.0;
        if (count_ >= model_->warmup()) {
            build_regressor(*model_, omega_, gamma_, y_, x_.data());
            y = model_->gamma_s_norm.denormalize(model_->forward(x_.data()));
        }
        ++count_;
        y_.push_back(y);
        if (y_.size() > cap) y_.erase(y_.begin());
        return y;
    }

private:
    const NarxModel *model_;
    std::vector<double> x_;
    std::vector<double> omega_, gamma_, y_;
    std::size_t count_ = 0;
};

// =============================================================================
// Training
// =============================================================================

struct TrainHyper {
    int n_a = 10;
    int n_b = 10;
    int hidden = 16;
    int epochs = 500;
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 64;
    double validation_split = 0.2;
    /// Std of Gaussian noise added to the output taps during training, in
    /// normalised units; keeps the network from leaning on its own feedback.
    double feedback_noise = 0.05;

    void validate(ModelKind kind) const {
        if (kind == ModelKind::Narx && n_a < 1) throw ValidationError("train: n_a must be >= 1");
        if (n_b < 1 || hidden < 1) throw ValidationError("train: n_b and hidden must be >= 1");
        if (epochs < 1 || batch_size < 1) throw ValidationError("train: epochs and batch_size must be >= 1");
        if (!(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0)
            throw ValidationError("train: learning_rate > 0 and momentum in [0, 1) required");
        if (validation_split < 0.0 || validation_split >= 1.0)
            throw ValidationError("train: validation_split must be in [0, 1)");
        if (!(feedback_noise >= 0.0)) throw ValidationError("train: feedback_noise must be >= 0");
    }

    bool operator==(const TrainHyper &) const = default;
};

struct EpochStats {
    int epoch = 0;
    double train_nrmse = 0.0;
    double val_nrmse = 0.0;

    bool operator==(const EpochStats &) const = default;
};

struct TrainReport {
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_nrmse = 0.0;
    /// Target range below 1e-12: NRMSE values are raw RMSE.
    bool constant_target = false;
    std::vector<std::string> train_runs;
    std::vector<std::string> validation_runs;
};

struct TrainResult {
    NarxModel model;
    TrainReport report;
};

/// Teacher-forced design matrix (normalised) and targets.
struct DesignMatrix {
    std::size_t n_inputs = 0;
    std::vector<double> x;  // row-major
    std::vector<double> y;  // normalised targets
    std::vector<double> y_raw;

    std::size_t rows() const { return y.size(); }
    const double *row(std::size_t i) const { return x.data() + i * n_inputs; }
};

inline DesignMatrix design_matrix(const NarxModel &m, const SloshDataset &ds, std::span<const std::size_t> runs) {
    DesignMatrix d;
    d.n_inputs = m.n_inputs();
    std::vector<double> buf(d.n_inputs);
    for (std::size_t ri : runs) {
        const auto &r = ds.runs[ri];
        for (std::size_t k = m.warmup(); k < r.size(); ++k) {
            build_regressor(m, std::span(r.omega).first(k + 1), std::span(r.gamma_rw).first(k + 1),
                            std::span(r.gamma_s).first(k), buf.data());
            d.x.insert(d.x.end(), buf.begin(), buf.end());
            d.y.push_back(m.gamma_s_norm.normalize(r.gamma_s[k]));
            d.y_raw.push_back(r.gamma_s[k]);
        }
    }
    return d;
}

/// Mean of 0.5·e² over the given rows and its gradient with respect to model.params.
inline double loss_and_gradient(const NarxModel &m, const DesignMatrix &d, std::span<const std::size_t> rows,
                                std::vector<double> &grad) {
    const std::size_t ni = m.n_inputs();
    const auto h = static_cast<std::size_t>(m.hidden);
    grad.assign(m.n_params(), 0.0);
    double *g_w1 = grad.data();
    double *g_b1 = g_w1 + h * ni;
    double *g_w2 = g_b1 + h;
    const double *w2 = m.params.data() + h * ni + h;
    std::vector<double> z(h);
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r : rows) {
        const double *x = d.row(r);
        const double e = m.forward(x, z.data()) - d.y[r];
        loss += 0.5 * e * e * inv;
        const double de = e * inv;
        g_w2[h] += de;
        for (std::size_t j = 0; j < h; ++j) {
            g_w2[j] += de * z[j];
            const double da = de * w2[j] * (1.0 - z[j] * z[j]);
            g_b1[j] += da;
            double *gr = g_w1 + j * ni;
            for (std::size_t i = 0; i < ni; ++i) gr[i] += da * x[i];
        }
    }
    return loss;
}

/// One-step (teacher-forced) NRMSE in physical units.
inline double design_nrmse(const NarxModel &m, const DesignMatrix &d) {
    if (d.rows() == 0) return 0.0;
    std::vector<double> pred(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) pred[i] = m.gamma_s_norm.denormalize(m.forward(d.row(i)));
    return stats::nrmse(pred, d.y_raw).value;
}

inline TrainResult train_model(const SloshDataset &ds, ModelKind kind, const TrainHyper &hyper, std::uint64_t seed) {
    hyper.validate(kind);
    ds.validate();
    if (ds.runs.empty() || ds.total_samples() == 0) throw ValidationError("train: dataset is empty");

    // run-level split
    std::vector<std::size_t> order(ds.runs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::ceil(hyper.validation_split * static_cast<double>(order.size())));
    if (order.size() < 2) n_val = 0;
    n_val = std::min(n_val, order.size() - 1);
    std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    if (val_idx.empty()) val_idx = train_idx;

    NarxModel m = init_model(kind, hyper.n_a, hyper.n_b, hyper.hidden, derive_seed(seed, 2));
    {
        std::vector<double> om, gr, gs;
        for (std::size_t i : train_idx) {
            const auto &r = ds.runs[i];
            om.insert(om.end(), r.omega.begin(), r.omega.end());
            gr.insert(gr.end(), r.gamma_rw.begin(), r.gamma_rw.end());
            gs.insert(gs.end(), r.gamma_s.begin(), r.gamma_s.end());
        }
        m.omega_norm = Normalizer::fit(om, 1.0);
        m.gamma_rw_norm = Normalizer::fit(gr, 1.0);
        // a constant target keeps a tiny scale so the network output maps to ~0
        m.gamma_s_norm = Normalizer::fit(gs, 1e-12);
    }
    for (std::size_t i : train_idx) m.training_runs.push_back(ds.runs[i].id);

    const DesignMatrix train = design_matrix(m, ds, train_idx);
    const DesignMatrix val = design_matrix(m, ds, val_idx);
    if (train.rows() == 0) throw ValidationError("train: runs are shorter than the tap window");

    TrainReport rep;
    for (std::size_t i : train_idx) rep.train_runs.push_back(ds.runs[i].id);
    for (std::size_t i : val_idx) rep.validation_runs.push_back(ds.runs[i].id);
    {
        const auto [lo, hi] = std::minmax_element(train.y_raw.begin(), train.y_raw.end());
        rep.constant_target = *hi - *lo < 1e-12;
    }

    std::vector<std::size_t> rows(train.rows());
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> grad, velocity(m.n_params(), 0.0);
    NarxModel best = m;
    rep.best_val_nrmse = kInfinity;
    const auto batch = static_cast<std::size_t>(hyper.batch_size);

    DesignMatrix noisy = train;
    std::normal_distribution<double> fb_noise(0.0, 1.0);
    const bool inject = hyper.feedback_noise > 0.0 && m.n_a > 0;

    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        std::shuffle(rows.begin(), rows.end(), rng);
        if (inject) {
            for (std::size_t r = 0; r < noisy.rows(); ++r) {
                for (int i = 0; i < m.n_a; ++i) {
                    const std::size_t c = r * noisy.n_inputs + static_cast<std::size_t>(i);
                    noisy.x[c] = train.x[c] + hyper.feedback_noise * fb_noise(rng);
                }
            }
        }
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < rows.size(); b += batch) {
            const auto chunk = std::span<const std::size_t>(rows).subspan(b, std::min(batch, rows.size() - b));
            epoch_loss += loss_and_gradient(m, noisy, chunk, grad);
            for (std::size_t p = 0; p < m.params.size(); ++p) {
                velocity[p] = hyper.momentum * velocity[p] - hyper.learning_rate * grad[p];
                m.params[p] += velocity[p];
            }
        }
        if (!std::isfinite(epoch_loss) || !all_finite(m.params))
            throw TrainingError("training diverged (non-finite loss)", static_cast<std::size_t>(epoch));
        EpochStats st{epoch, design_nrmse(m, train), design_nrmse(m, val)};
        rep.history.push_back(st);
        if (st.val_nrmse < rep.best_val_nrmse) {
            rep.best_val_nrmse = st.val_nrmse;
            rep.best_epoch = epoch;
            best.params = m.params;
        }
    }
    best.training_runs = m.training_runs;
    return {best, rep};
}

inline TrainResult train_narx(const SloshDataset &ds, const TrainHyper &hyper, std::uint64_t seed) {
    return train_model(ds, ModelKind::Narx, hyper, seed);
}

/// Exogenous-only baseline with the same input taps and width.
inline TrainResult train_feedforward(const SloshDataset &ds, const TrainHyper &hyper, std::uint64_t seed) {
    TrainHyper h = hyper;
    h.n_a = 0;
    return train_model(ds, ModelKind::Feedforward, h, seed);
}

// =============================================================================
// Evaluation
// =============================================================================

struct NamedModel {
    std::string name;
    const NarxModel *model = nullptr;
};

struct EvalRow {
    std::string model;
    double snr = kInfinity;
    double nrmse = 0.0;
    double correlation = 0.0;
    bool degenerate = false;

    bool operator==(const EvalRow &) const = default;
};

inline void check_disjoint(const NarxModel &m, const SloshDataset &test) {
    const std::set<std::string> trained(m.training_runs.begin(), m.training_runs.end());
    for (const auto &r : test.runs) {
        if (trained.count(r.id)) throw ValidationError("evaluate: test run '" + r.id + "' was used for training");
    }
}

/// Score of one model on a dataset with noise at `snr` added to both inputs.
inline EvalRow score(const NamedModel &nm, const SloshDataset &test, double snr, std::uint64_t noise_seed,
                     FeedbackMode mode = FeedbackMode::Open) {
    std::vector<double> pred, truth;
    for (std::size_t i = 0; i < test.runs.size(); ++i) {
        const auto &r = test.runs[i];
        const auto om = add_noise(r.omega, snr, derive_seed(noise_seed, i, 1));
        const auto gr = add_noise(r.gamma_rw, snr, derive_seed(noise_seed, i, 2));
        const auto y = predict_series(*nm.model, om, gr, r.gamma_s, mode);
        const std::size_t w = nm.model->warmup();
        for (std::size_t k = w; k < r.size(); ++k) {
            pred.push_back(y[k]);
            truth.push_back(r.gamma_s[k]);
        }
    }
    const auto e = stats::nrmse(pred, truth);
    return {nm.name, snr, e.value, stats::pearson(pred, truth), e.degenerate};
}

/// Comparison table: every model at every SNR level, in argument order.
inline std::vector<EvalRow> evaluate(std::span<const NamedModel> models, const SloshDataset &test,
                                     std::span<const double> snrs, std::uint64_t noise_seed,
                                     FeedbackMode mode = FeedbackMode::Open) {
    test.validate();
    for (const auto &nm : models) {
        if (!nm.model) throw ValidationError("evaluate: null model");
        check_disjoint(*nm.model, test);
    }
    std::vector<EvalRow> table;
    for (const auto &nm : models) {
        for (double snr : snrs) table.push_back(score(nm, test, snr, noise_seed, mode));
    }
    return table;
}

}  // namespace sloshlab::predictor
