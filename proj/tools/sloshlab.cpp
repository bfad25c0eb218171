// sloshlab command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime failure.

#include "sloshlab/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace sloshlab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct SeedOption {
    std::uint64_t value = 1;
    CLI::Option *opt = nullptr;

    bool given() const { return opt->count() > 0; }
};

SeedOption &add_seed(CLI::App *sub, SeedOption &s) {
    s.opt = sub->add_option("--seed", s.value, "Random seed (default $SLOSHLAB_SEED or 1)")->envname("SLOSHLAB_SEED");
    return s;
}

void emit(const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
        io::write_text(path, text);
    }
}

predictor::NarxModel load_model(const std::string &path) { return io::decode_model(io::read_json(path), path); }

std::string fmt_time(double s) {
    if (std::isinf(s)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", s);
    return buf;
}

std::string fmt_g(double v, const char *spec = "%.6g") {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string config;
    bool dump_config = false;
    std::string controller;
    std::string excitation;
    std::string model;
    bool oracle = false;
    std::string out;
    SeedOption seed;
};

io::RunConfig effective_config(const SimulateArgs &a) {
    io::RunConfig c = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
    if (!a.controller.empty()) c.controller = a.controller;
    if (!a.excitation.empty()) c.maneuver.excitation = a.excitation;
    if (!a.model.empty()) c.model = a.model;
    if (a.oracle) c.oracle = true;
    if (!a.out.empty()) c.output_dir = a.out;
    if (a.seed.given()) c.seed = a.seed.value;
    c.validate();
    return c;
}

int run_simulate(const SimulateArgs &a) {
    const auto cfg = effective_config(a);
    if (a.dump_config) {
        std::cout << io::encode(cfg).dump(2) << "\n";
        return 0;
    }
    const auto kind = control::ControllerKind::parse(cfg.controller);
    std::optional<predictor::NarxModel> model;
    if (!cfg.model.empty()) model = load_model(cfg.model);
    control::Predictors pred{model ? &*model : nullptr, cfg.oracle};
    const auto rec = control::run_closed_loop(kind, cfg.maneuver, cfg.loop, cfg.seed, pred);

    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    std::ostringstream csv;
    io::write_record_csv(csv, rec);
    io::write_text((dir / "record.csv").string(), csv.str());
    std::ostringstream mss;
    sensors::write_mss_csv(mss, control::mss_series(rec));
    io::write_text((dir / "mss.csv").string(), mss.str());
    io::write_json((dir / "metrics.json").string(), io::encode_metrics(rec));
    io::write_json((dir / "config.json").string(), io::encode(cfg));

    std::printf("controller      %s\n", rec.controller.c_str());
    std::printf("excitation      %s\n", rec.excitation.c_str());
    std::printf("seed            %llu\n", static_cast<unsigned long long>(rec.seed));
    std::printf("settling time   %s s\n", fmt_time(rec.settling_time).c_str());
    std::printf("slosh settling  %s s\n", fmt_time(rec.slosh_settling_time).c_str());
    std::printf("peak |gamma_s|  %.4g N*m\n", rec.peak_gamma_s);
    std::printf("peak pressure   %.4g psi\n", rec.peak_pressure);
    std::printf("violations      %zu\n", rec.violations.total());
    if (rec.aborted) std::printf("aborted: recovery limit reached at t = %.2f s\n", rec.recovery_time);
    std::printf("wrote %s\n", dir.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
    double lo = 1e-4;
    double hi = 1e-3;
    double i_sat = emm::kInertiaCad;
    std::string out;
    SeedOption seed;
};

int run_calibrate(const CalibrateArgs &a) {
    const auto r = emm::calibrate_emm_detailed(a.lo, a.hi, emm::max_torque_profile(), emm::base_params(a.i_sat));
    emit(a.out, io::encode(r.params).dump(2) + "\n");
    std::fprintf(a.out.empty() ? stderr : stdout, "peak |gamma_s| %.4g N*m (target %.4g), scale %.6g, %d iterations\n",
                 r.peak, r.target, r.scale, r.iterations);
    return 0;
}

// ---------------------------------------------------------------------------
// budget

struct BudgetArgs {
    std::string mode = "as-published";
    std::int64_t camera = 76;
    std::int64_t sensor_only = 153;
    std::string json_out;
    SeedOption seed;
};

int run_budget(const BudgetArgs &a) {
    telemetry::BudgetConfig c;
    c.mode = telemetry::budget_mode_from_string(a.mode);
    if (a.camera < 0 || a.sensor_only < 0) throw ValidationError("experiment counts must be >= 0");
    const auto r = telemetry::budget_report(c, a.camera, a.sensor_only);
    std::cout << telemetry::render_budget(r);
    if (!a.json_out.empty()) io::write_json(a.json_out, io::encode(r));
    return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::vector<double> torques{5.77e-3, 1.44e-3, 4.17e-3, 7.56e-3};
    std::vector<std::string> labels{"x", "y", "z", "xyz"};
    double i_sat = 0.0556;
    double window = sensors::kDetectWindow;
    SeedOption seed;
};

int run_detect(DetectArgs a) {
    const auto gyro = sensors::default_gyro();
    std::printf("window %.4g s, inertia %.4g kg*m^2, gyro sigma %.6g deg/s\n\n", a.window, a.i_sat,
                sensors::gyro_noise_sigma(gyro));
    std::printf("%-8s %12s %14s %12s %10s\n", "case", "gamma_s", "omega_dot_s", "omega_s", "margin");
    std::printf("%-8s %12s %14s %12s %10s\n", "", "N*m", "deg/s^2", "deg/s", "");
    for (std::size_t i = 0; i < a.torques.size(); ++i) {
        const auto d = sensors::detectability(a.torques[i], a.i_sat, a.window, gyro);
        const std::string label = i < a.labels.size() ? a.labels[i] : std::to_string(i + 1);
        std::printf("%-8s %12.4g %14.9g %12.9g %10.3f\n", label.c_str(), a.torques[i], d.omega_dot_s, d.omega_s,
                    d.margin);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// frames

struct FramesArgs {
    std::string input;
    std::string output;
    std::size_t strips = 8;
    std::size_t pads = 16;
    std::size_t zero = 0;
    SeedOption seed;
};

std::vector<std::uint8_t> read_bytes(const std::string &path) {
    const auto s = io::read_text(path);
    return {s.begin(), s.end()};
}

/// One frame per line, samples separated by commas or whitespace.
std::vector<telemetry::PressureFrame> read_frames_csv(const std::string &text, std::size_t strips, std::size_t pads) {
    std::vector<telemetry::PressureFrame> frames;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char &ch : line) {
            if (ch == ',' || ch == ';') ch = ' ';
        }
        std::istringstream ls(line);
        std::vector<long long> v;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                v.push_back(std::stoll(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception &) {
                throw ValidationError("frames line " + std::to_string(lineno) + ": '" + tok + "' is not an integer");
            }
        }
        if (v.empty()) continue;
        telemetry::PressureFrame f(strips, pads);
        if (v.size() != f.samples.size())
            throw ValidationError("frames line " + std::to_string(lineno) + ": " + std::to_string(v.size()) +
                                  " samples, expected " + std::to_string(f.samples.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < 0 || v[i] >= telemetry::kSampleLimit)
                throw telemetry::FrameSampleError(i, static_cast<unsigned>(std::max<long long>(v[i], 0)));
            f.samples[i] = static_cast<std::uint16_t>(v[i]);
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

int run_frames_encode(const FramesArgs &a) {
    std::vector<telemetry::PressureFrame> frames;
    if (a.zero > 0) {
        frames.assign(a.zero, telemetry::PressureFrame(a.strips, a.pads));
    } else {
        if (a.input.empty()) throw ValidationError("frames encode needs --input or --zero");
        frames = read_frames_csv(io::read_text(a.input), a.strips, a.pads);
    }
    const auto bytes = telemetry::encode_stream(frames);
    if (a.output.empty()) throw ValidationError("frames encode needs --output");
    io::write_text(a.output, std::string(bytes.begin(), bytes.end()));
    std::printf("%zu frames, %zu bytes\n", frames.size(), bytes.size());
    return 0;
}

int run_frames_decode(const FramesArgs &a) {
    if (a.input.empty()) throw ValidationError("frames decode needs --input");
    const auto bytes = read_bytes(a.input);
    const auto frames = telemetry::decode_stream(bytes, a.strips, a.pads);
    std::ostringstream os;
    for (const auto &f : frames) {
        for (std::size_t i = 0; i < f.samples.size(); ++i) os << (i ? "," : "") << f.samples[i];
        os << "\n";
    }
    emit(a.output, os.str());
    if (!a.output.empty()) std::printf("%zu frames\n", frames.size());
    return 0;
}

// ---------------------------------------------------------------------------
// dataset / train / evaluate

struct DatasetArgs {
    std::string grid;
    std::string plant;
    double scale = 1.0;
    std::optional<double> snr;
    std::optional<int> runs_per_cell;
    std::string out = "dataset.json";
    SeedOption seed;
};

emm::EmmParams load_plant(const std::string &path) {
    auto p = emm::default_params();
    if (!path.empty()) io::decode(io::read_json(path), p, path);
    return p;
}

int run_dataset(const DatasetArgs &a) {
    predictor::GridSpec g;
    if (!a.grid.empty()) io::decode(io::read_json(a.grid), g, a.grid);
    if (a.scale != 1.0) g = predictor::scaled_grid(a.scale, g);
    if (a.snr) g.snr = *a.snr;
    if (a.runs_per_cell) g.runs_per_cell = *a.runs_per_cell;
    const auto ds = predictor::generate_dataset(g, load_plant(a.plant), a.seed.value, 1);
    io::write_json(a.out, io::encode(ds));
    std::printf("%zu runs, %zu samples -> %s\n", ds.runs.size(), ds.total_samples(), a.out.c_str());
    return 0;
}

struct TrainArgs {
    std::string dataset;
    std::string kind = "narx";
    std::string hyper;
    std::optional<int> epochs;
    std::string out = "model.json";
    std::string report;
    SeedOption seed;
};

int run_train(const TrainArgs &a) {
    const auto ds = io::decode_dataset(io::read_json(a.dataset), a.dataset);
    predictor::TrainHyper h;
    if (!a.hyper.empty()) io::decode(io::read_json(a.hyper), h, a.hyper);
    if (a.epochs) h.epochs = *a.epochs;
    const auto kind = predictor::model_kind_from_string(a.kind);
    const auto r = predictor::train_model(ds, kind, h, a.seed.value);
    io::write_json(a.out, io::encode(r.model));
    if (!a.report.empty()) io::write_json(a.report, io::encode(r.report));
    std::printf("%s: best validation NRMSE %.4f at epoch %d -> %s\n", a.kind.c_str(), r.report.best_val_nrmse,
                r.report.best_epoch, a.out.c_str());
    return 0;
}

struct EvaluateArgs {
    std::string dataset;
    std::vector<std::string> models;
    std::vector<double> snrs{kInfinity, 30.0, 20.0, 16.5, 10.0, 5.0};
    std::string feedback = "open";
    std::string json_out;
    SeedOption seed;
};

int run_evaluate(const EvaluateArgs &a) {
    const auto ds = io::decode_dataset(io::read_json(a.dataset), a.dataset);
    std::vector<std::pair<std::string, predictor::NarxModel>> loaded;
    for (const auto &spec : a.models) {
        // name=path or plain path
        const auto eq = spec.find('=');
        const std::string name = eq == std::string::npos ? fs::path(spec).stem().string() : spec.substr(0, eq);
        const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        loaded.emplace_back(name, load_model(path));
    }
    std::vector<predictor::NamedModel> named;
    for (const auto &[n, m] : loaded) named.push_back({n, &m});
    const auto mode = a.feedback == "closed" ? predictor::FeedbackMode::Closed
                      : a.feedback == "open" ? predictor::FeedbackMode::Open
                                             : throw ValidationError("--feedback must be open or closed");
    const auto rows = predictor::evaluate(named, ds, a.snrs, a.seed.value, mode);
    std::printf("%-16s %8s %10s %12s\n", "model", "snr", "nrmse", "correlation");
    for (const auto &r : rows) {
        std::printf("%-16s %8s %10.4f %12.4f%s\n", r.model.c_str(), fmt_g(r.snr, "%.4g").c_str(), r.nrmse,
                    r.correlation, r.degenerate ? "  (degenerate)" : "");
    }
    if (!a.json_out.empty()) io::write_json(a.json_out, io::encode(rows));
    return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
    std::string reference = "baseline";
    std::string candidate = "ml";
    std::string model;
    bool oracle = false;
    std::string config;
    std::string excitation = "x";
    std::string csv_out;
    SeedOption seed;
};

int run_compare(const CompareArgs &a) {
    const io::RunConfig cfg = a.config.empty() ? io::RunConfig{} : io::load_run_config(a.config);
    const auto ref = control::ControllerKind::parse(a.reference);
    const auto cand = control::ControllerKind::parse(a.candidate);
    std::optional<predictor::NarxModel> model;
    if (!a.model.empty()) model = load_model(a.model);
    const control::Predictors pred{model ? &*model : nullptr, a.oracle};
    const auto grid = control::comparison_grid(a.excitation);
    const auto cmp = control::compare_paired(ref, cand, grid, cfg.loop, a.seed.value, pred);

    std::ostringstream csv;
    csv << "torque,t_dur,t_dwell,seed,settling_" << cmp.reference << ",settling_" << cmp.candidate << ",ratio\n";
    std::printf("%8s %6s %6s %12s %12s %8s\n", "torque", "t_dur", "dwell", cmp.reference.c_str(), cmp.candidate.c_str(),
                "ratio");
    for (const auto &r : cmp.rows) {
        std::printf("%8.4f %6.1f %6.1f %12s %12s %8s\n", r.maneuver.torque, r.maneuver.t_dur, r.maneuver.t_dwell,
                    fmt_time(r.reference).c_str(), fmt_time(r.candidate).c_str(), fmt_g(r.ratio, "%.3f").c_str());
        csv << r.maneuver.torque << "," << r.maneuver.t_dur << "," << r.maneuver.t_dwell << "," << r.seed << ","
            << fmt_g(r.reference, "%.9g") << "," << fmt_g(r.candidate, "%.9g") << "," << fmt_g(r.ratio, "%.9g") << "\n";
    }
    std::printf("\nmedian ratio %s over %zu pairs", fmt_g(cmp.median_ratio, "%.4f").c_str(),
                cmp.rows.size() - cmp.undefined);
    if (cmp.undefined) std::printf(" (%zu pairs where neither settled)", cmp.undefined);
    std::printf("\n");
    if (!a.csv_out.empty()) io::write_text(a.csv_out, csv.str());
    return 0;
}

// ---------------------------------------------------------------------------
// plan / campaign

campaign::PlanConfig load_plan(const std::string &path, const SeedOption &seed) {
    auto c = path.empty() ? campaign::default_plan_config() : io::decode_plan_config(io::read_json(path), path);
    if (seed.given()) c.seed = seed.value;
    return c;
}

struct PlanArgs {
    std::string plan;
    bool dump_config = false;
    std::string out;
    SeedOption seed;
};

int run_plan(const PlanArgs &a) {
    const auto cfg = load_plan(a.plan, a.seed);
    if (a.dump_config) {
        std::cout << io::encode(cfg).dump(2) << "\n";
        return 0;
    }
    const auto plan = campaign::build_plan(cfg);
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_phase;
    std::size_t cams = 0;
    for (const auto &m : plan) {
        auto &[n, c] = per_phase[m.phase];
        ++n;
        c += m.camera;
        cams += m.camera;
    }
    std::printf("%-14s %6s %8s\n", "phase", "runs", "camera");
    for (const auto &[ph, nc] : per_phase) std::printf("%-14s %6zu %8zu\n", ph.c_str(), nc.first, nc.second);
    std::printf("%-14s %6zu %8zu\n", "total", plan.size(), cams);
    if (!a.out.empty()) io::write_json(a.out, io::encode_manifests(plan));
    return 0;
}

struct CampaignArgs {
    std::string plan;
    std::string model;
    std::string config;
    unsigned jobs = 1;
    std::string out;
    SeedOption seed;
};

int run_campaign_cmd(const CampaignArgs &a) {
    const auto plan = campaign::build_plan(load_plan(a.plan, a.seed));
    campaign::CampaignOptions opt;
    if (!a.config.empty()) {
        opt.loop = io::load_run_config(a.config).loop;
        opt.loop.recovery_enabled = true;
    }
    if (a.jobs < 1) throw ValidationError("--jobs must be >= 1");
    opt.jobs = a.jobs;
    std::optional<predictor::NarxModel> model;
    if (!a.model.empty()) model = load_model(a.model);
    opt.model = model ? &*model : nullptr;
    const auto rep = campaign::run_campaign(plan, opt);
    std::cout << campaign::render_report(rep);
    if (!a.out.empty()) io::write_json(a.out, io::encode(rep));
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Propellant-slosh attitude simulation laboratory"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");
    app.failure_message(CLI::FailureMessage::help);

    SimulateArgs sim;
    auto *s = app.add_subcommand("simulate", "One closed-loop run; writes CSV and JSON to the output directory");
    s->add_option("--config", sim.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
    s->add_flag("--dump-config", sim.dump_config, "Print the effective configuration and exit");
    s->add_option("--controller", sim.controller, "baseline | adaptive | ml | governor:<x> | combined:<x>");
    s->add_option("--excitation", sim.excitation, "Excited axes: x, y, z, xy, xz, yz, xyz");
    s->add_option("--model", sim.model, "Trained predictor for the ml controller");
    s->add_flag("--oracle", sim.oracle, "Compensate with the true slosh torque");
    s->add_option("--out", sim.out, "Output directory");
    add_seed(s, sim.seed);

    CalibrateArgs cal;
    auto *c = app.add_subcommand("calibrate", "Scale the slosh model so the max-torque maneuver peak lands in a band");
    c->add_option("--lo", cal.lo, "Lower bound on peak |gamma_s| [N*m]");
    c->add_option("--hi", cal.hi, "Upper bound on peak |gamma_s| [N*m]");
    c->add_option("--i-sat", cal.i_sat, "Satellite moment of inertia [kg*m^2]");
    c->add_option("--out", cal.out, "Write parameters here instead of standard output");
    add_seed(c, cal.seed);

    BudgetArgs bud;
    auto *b = app.add_subcommand("budget", "Telemetry data-rate and volume report");
    b->add_option("--mode", bud.mode, "as-published | derived")->check(CLI::IsMember({"as-published", "derived"}));
    b->add_option("--camera", bud.camera, "Experiments with camera");
    b->add_option("--sensor-only", bud.sensor_only, "Experiments without camera");
    b->add_option("--json", bud.json_out, "Also write the report as JSON");
    add_seed(b, bud.seed);

    DetectArgs det;
    auto *d = app.add_subcommand("detect", "Gyro detectability of slosh torques");
    d->add_option("--torque", det.torques, "Peak slosh torques [N*m]");
    d->add_option("--label", det.labels, "Row labels");
    d->add_option("--i-sat", det.i_sat, "Moment of inertia [kg*m^2]");
    d->add_option("--window", det.window, "Integration window [s]");
    add_seed(d, det.seed);

    FramesArgs fr;
    auto *f = app.add_subcommand("frames", "Pressure-array frame codec");
    f->require_subcommand(1);
    auto *fe = f->add_subcommand("encode", "CSV samples (one frame per line) to binary");
    fe->add_option("--input", fr.input, "CSV input");
    fe->add_option("--zero", fr.zero, "Encode this many all-zero frames instead of reading input");
    fe->add_option("--output", fr.output, "Binary output")->required();
    auto *fd = f->add_subcommand("decode", "Binary frames to CSV");
    fd->add_option("--input", fr.input, "Binary input")->required();
    fd->add_option("--output", fr.output, "CSV output (default standard output)");
    for (auto *sub : {fe, fd}) {
        sub->add_option("--strips", fr.strips, "Strips per frame");
        sub->add_option("--pads", fr.pads, "Pads per strip");
        add_seed(sub, fr.seed);
    }

    DatasetArgs ds;
    auto *dsc = app.add_subcommand("dataset", "Simulate the excitation grid into a training dataset");
    dsc->add_option("--grid", ds.grid, "Grid specification (JSON)");
    dsc->add_option("--plant", ds.plant, "Slosh model parameters (JSON, as written by calibrate)");
    dsc->add_option("--scale", ds.scale, "Scale durations and dwells (2 = outside the training range)");
    dsc->add_option("--snr", ds.snr, "Noise on the rate channel (signal-to-noise ratio)");
    dsc->add_option("--runs-per-cell", ds.runs_per_cell, "Repetitions per grid cell");
    dsc->add_option("--out", ds.out, "Output file");
    add_seed(dsc, ds.seed);

    TrainArgs tr;
    auto *t = app.add_subcommand("train", "Train a slosh-torque predictor");
    t->add_option("--dataset", tr.dataset, "Training dataset")->required();
    t->add_option("--kind", tr.kind, "narx | feedforward")->check(CLI::IsMember({"narx", "feedforward"}));
    t->add_option("--hyper", tr.hyper, "Hyperparameters (JSON)");
    t->add_option("--epochs", tr.epochs, "Training epochs");
    t->add_option("--out", tr.out, "Model output file");
    t->add_option("--report", tr.report, "Training history output (JSON)");
    add_seed(t, tr.seed);

    EvaluateArgs ev;
    auto *e = app.add_subcommand("evaluate", "NRMSE of predictors across noise levels");
    e->add_option("--dataset", ev.dataset, "Test dataset")->required();
    e->add_option("--model", ev.models, "Model file, optionally name=path (repeatable)")->required();
    e->add_option("--snr", ev.snrs, "Signal-to-noise ratios (inf = clean)");
    e->add_option("--feedback", ev.feedback, "open | closed")->check(CLI::IsMember({"open", "closed"}));
    e->add_option("--json", ev.json_out, "Also write the table as JSON");
    add_seed(e, ev.seed);

    CompareArgs cmp;
    auto *cm = app.add_subcommand("compare", "Paired settling-time table over the 27-maneuver grid");
    cm->add_option("--reference", cmp.reference, "Reference controller");
    cm->add_option("--candidate", cmp.candidate, "Candidate controller");
    cm->add_option("--model", cmp.model, "Trained predictor for ml controllers");
    cm->add_flag("--oracle", cmp.oracle, "Compensate with the true slosh torque");
    cm->add_option("--config", cmp.config, "Run configuration supplying loop settings");
    cm->add_option("--excitation", cmp.excitation, "Excited axes");
    cm->add_option("--csv", cmp.csv_out, "Also write the table as CSV");
    add_seed(cm, cmp.seed);

    PlanArgs pl;
    auto *p = app.add_subcommand("plan", "Expand the campaign plan into experiment manifests");
    p->add_option("--plan", pl.plan, "Plan configuration (JSON)");
    p->add_flag("--dump-config", pl.dump_config, "Print the plan configuration and exit");
    p->add_option("--out", pl.out, "Write manifests (JSON)");
    add_seed(p, pl.seed);

    CampaignArgs ca;
    auto *cg = app.add_subcommand("campaign", "Run every experiment in the plan");
    cg->add_option("--plan", ca.plan, "Plan configuration (JSON)");
    cg->add_option("--model", ca.model, "Trained predictor for ml phases");
    cg->add_option("--config", ca.config, "Run configuration supplying loop settings");
    cg->add_option("--jobs", ca.jobs, "Worker threads");
    cg->add_option("--out", ca.out, "Write the report (JSON)");
    add_seed(cg, ca.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (s->parsed()) return run_simulate(sim);
        if (c->parsed()) return run_calibrate(cal);
        if (b->parsed()) return run_budget(bud);
        if (d->parsed()) return run_detect(det);
        if (fe->parsed()) return run_frames_encode(fr);
        if (fd->parsed()) return run_frames_decode(fr);
        if (dsc->parsed()) return run_dataset(ds);
        if (t->parsed()) return run_train(tr);
        if (e->parsed()) return run_evaluate(ev);
        if (cm->parsed()) return run_compare(cmp);
        if (p->parsed()) return run_plan(pl);
        if (cg->parsed()) return run_campaign_cmd(ca);
    } catch (const ValidationError &err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
