// JSON and CSV formats: configs, models, datasets, plans, records, reports
#pragma once

#include "sloshlab/campaign.hpp"
#include "sloshlab/control.hpp"
#include "sloshlab/emm.hpp"
#include "sloshlab/narx.hpp"
#include "sloshlab/sensors.hpp"
#include "sloshlab/telemetry.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sloshlab::io {

using json = nlohmann::ordered_json;

inline constexpr int kModelVersion = 1;
inline constexpr int kDatasetVersion = 1;
inline constexpr int kConfigVersion = 1;
inline constexpr int kPlanVersion = 1;

// =============================================================================
// Strict object reading
// =============================================================================

/// JSON has no infinities; they are written as the strings "inf" / "-inf".
inline json number(double v) {
    if (std::isnan(v)) throw ValidationError("json: cannot encode NaN");
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

/// Reads one JSON object, remembering which keys were consumed so leftovers
/// can be rejected.
class Reader {
public:
    Reader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ValidationError(path_ + ": expected an object");
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    const json *find(const std::string &key) {
        const auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        used_.insert(key);
        return &*it;
    }

    const json &at(const std::string &key) {
        const json *v = find(key);
        if (!v) throw ValidationError(path_ + ": missing key '" + key + "'");
        return *v;
    }

    std::string path(const std::string &key) const { return path_ + "." + key; }

    template <typename T>
    void get(const std::string &key, T &out) {
        if (const json *v = find(key)) out = convert<T>(*v, path(key));
    }

    template <typename T>
    T req(const std::string &key) {
        return convert<T>(at(key), path(key));
    }

    /// Reject keys that nothing consumed.
    void done() const {
        for (const auto &[k, v] : j_.items()) {
            if (!used_.count(k)) throw ValidationError(path_ + ": unknown key '" + k + "'");
        }
    }

    template <typename T>
    static T convert(const json &v, const std::string &where) {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (v.is_string()) {
                    const auto s = v.get<std::string>();
                    if (s == "inf") return kInfinity;
                    if (s == "-inf") return -kInfinity;
                    throw ValidationError(where + ": expected a number");
                }
                if (!v.is_number()) throw ValidationError(where + ": expected a number");
                return v.get<double>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ValidationError(where + ": expected true/false");
                return v.get<bool>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ValidationError(where + ": expected an integer");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
                    if (v.get<std::int64_t>() < 0) throw ValidationError(where + ": expected a non-negative integer");
                }
                return v.get<T>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ValidationError(where + ": expected a string");
                return v.get<std::string>();
            } else {
                // vectors
                if (!v.is_array()) throw ValidationError(where + ": expected an array");
                T out;
                std::size_t i = 0;
                for (const auto &e : v) {
                    out.push_back(convert<typename T::value_type>(e, where + "[" + std::to_string(i++) + "]"));
                }
                return out;
            }
        } catch (const nlohmann::json::exception &e) {
            throw ValidationError(where + ": " + e.what());
        }
    }

private:
    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

inline json parse(const std::string &text, const std::string &what) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError(what + ": invalid JSON (" + std::string(e.what()) + ")");
    }
}

inline std::string read_text(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path + "'");
}

inline json read_json(const std::string &path) { return parse(read_text(path), path); }

inline void write_json(const std::string &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

inline void check_header(Reader &r, const char *format, int version) {
    const auto f = r.req<std::string>("format");
    if (f != format) throw ValidationError("expected a " + std::string(format) + " file, got '" + f + "'");
    const auto v = r.req<int>("version");
    if (v != version)
        throw ValidationError(std::string(format) + " version " + std::to_string(v) + " is not supported (expected " +
                              std::to_string(version) + ")");
}

// =============================================================================
// Plant, sensors, controller
// =============================================================================

inline json encode(const emm::EmmParams &p) {
    return {{"a_s", p.a_s}, {"b_s", p.b_s}, {"c_s", p.c_s}, {"k_s", p.k_s}, {"i_sat", p.i_sat}};
}

inline void decode(const json &j, emm::EmmParams &p, const std::string &path) {
    Reader r(j, path);
    r.get("a_s", p.a_s);
    r.get("b_s", p.b_s);
    r.get("c_s", p.c_s);
    r.get("k_s", p.k_s);
    r.get("i_sat", p.i_sat);
    r.done();
    p.validate();
}

inline json encode(const emm::TankGeometry &g) {
    return {{"diameter", g.diameter},         {"straight_length", g.straight_length},
            {"head_depth", g.head_depth},     {"total_length", g.total_length},
            {"fill_ratio", g.fill_ratio},     {"fluid_density", g.fluid_density},
            {"dish_parameter", g.dish_parameter}, {"knuckle_parameter", g.knuckle_parameter}};
}

inline void decode(const json &j, emm::TankGeometry &g, const std::string &path) {
    Reader r(j, path);
    r.get("diameter", g.diameter);
    r.get("straight_length", g.straight_length);
    r.get("head_depth", g.head_depth);
    r.get("total_length", g.total_length);
    r.get("fill_ratio", g.fill_ratio);
    r.get("fluid_density", g.fluid_density);
    r.get("dish_parameter", g.dish_parameter);
    r.get("knuckle_parameter", g.knuckle_parameter);
    r.done();
    g.validate();
}

inline json encode(const sensors::GyroSpec &g) {
    return {{"sigma_v", g.sigma_v}, {"sigma_u", g.sigma_u}, {"dt", g.dt}};
}

inline void decode(const json &j, sensors::GyroSpec &g, const std::string &path) {
    Reader r(j, path);
    r.get("sigma_v", g.sigma_v);
    r.get("sigma_u", g.sigma_u);
    r.get("dt", g.dt);
    r.done();
    g.validate();
}

inline json encode(const sensors::AccelSpec &a) { return {{"radius", a.radius}, {"noise_sigma", a.noise_sigma}}; }

inline void decode(const json &j, sensors::AccelSpec &a, const std::string &path) {
    Reader r(j, path);
    r.get("radius", a.radius);
    r.get("noise_sigma", a.noise_sigma);
    r.done();
    a.validate();
}

inline json encode(const sensors::PressureArraySpec &p) {
    return {{"n_strips", p.n_strips},         {"pads_per_strip", p.pads_per_strip}, {"pad_size", p.pad_size},
            {"resolution_bits", p.resolution_bits}, {"threshold_lo", p.threshold_lo}, {"threshold_hi", p.threshold_hi},
            {"frame_rate", p.frame_rate},     {"full_scale", p.full_scale},     {"moment_arm", p.moment_arm},
            {"contact_area", p.contact_area}};
}

inline void decode(const json &j, sensors::PressureArraySpec &p, const std::string &path) {
    Reader r(j, path);
    r.get("n_strips", p.n_strips);
    r.get("pads_per_strip", p.pads_per_strip);
    r.get("pad_size", p.pad_size);
    r.get("resolution_bits", p.resolution_bits);
    r.get("threshold_lo", p.threshold_lo);
    r.get("threshold_hi", p.threshold_hi);
    r.get("frame_rate", p.frame_rate);
    r.get("full_scale", p.full_scale);
    r.get("moment_arm", p.moment_arm);
    r.get("contact_area", p.contact_area);
    r.done();
    p.validate();
}

inline json encode(const control::PidGains &g) { return {{"k_p", g.k_p}, {"k_d", g.k_d}, {"k_i", g.k_i}}; }

inline void decode(const json &j, control::PidGains &g, const std::string &path) {
    Reader r(j, path);
    r.get("k_p", g.k_p);
    r.get("k_d", g.k_d);
    r.get("k_i", g.k_i);
    r.done();
    g.validate();
}

inline json encode(const control::GovernorConstraints &c) {
    return {{"torque_limit", number(c.torque_limit)},
            {"pressure_limit", number(c.pressure_limit)},
            {"rate_limit", number(c.rate_limit)},
            {"horizon", c.horizon},
            {"kappa_resolution", c.kappa_resolution},
            {"margin", c.margin}};
}

inline void decode(const json &j, control::GovernorConstraints &c, const std::string &path) {
    Reader r(j, path);
    r.get("torque_limit", c.torque_limit);
    r.get("pressure_limit", c.pressure_limit);
    r.get("rate_limit", c.rate_limit);
    r.get("horizon", c.horizon);
    r.get("kappa_resolution", c.kappa_resolution);
    r.get("margin", c.margin);
    r.done();
    c.validate();
}

inline json encode(const control::Maneuver &m) {
    json j{{"excitation", m.excitation}, {"torque", m.torque},   {"t_dur", m.t_dur},
           {"t_dwell", m.t_dwell},       {"t_start", m.t_start}, {"sign", m.sign},
           {"setpoint", m.setpoint}};
    if (m.angle) j["angle"] = *m.angle;
    return j;
}

inline void decode(const json &j, control::Maneuver &m, const std::string &path) {
    Reader r(j, path);
    r.get("excitation", m.excitation);
    r.get("torque", m.torque);
    r.get("t_dur", m.t_dur);
    r.get("t_dwell", m.t_dwell);
    r.get("t_start", m.t_start);
    r.get("sign", m.sign);
    r.get("setpoint", m.setpoint);
    if (const json *a = r.find("angle")) m.angle = Reader::convert<double>(*a, r.path("angle"));
    r.done();
    m.validate();
}

// =============================================================================
// Run configuration
// =============================================================================

/// Everything one closed-loop run needs. JSON sections mirror the members.
struct RunConfig {
    control::ClosedLoopConfig loop;
    emm::TankGeometry tank;
    std::string controller = "baseline";
    control::Maneuver maneuver;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    /// Trained predictor for the ml controller (empty = none).
    std::string model;
    /// Use perfect slosh knowledge instead of a model.
    bool oracle = false;

    void validate() const {
        loop.validate();
        tank.validate();
        control::ControllerKind::parse(controller);
        maneuver.validate();
    }

    bool operator==(const RunConfig &) const = default;
};

inline json encode(const RunConfig &c) {
    const auto &l = c.loop;
    return {
        {"version", kConfigVersion},
        {"plant", encode(l.plant)},
        {"tank", encode(c.tank)},
        {"actuator", {{"torque_max", l.torque_max}}},
        {"sensors",
         {{"noise", l.sensor_noise}, {"gyro", encode(l.gyro)}, {"accel", encode(l.accel)}, {"pressure", encode(l.pressure)}}},
        {"controller",
         {{"kind", c.controller},
          {"gains", encode(l.gains)},
          {"tdc", {{"delay_steps", l.tdc.delay_steps}, {"filter_tau", l.tdc.filter_tau}}},
          {"ml", {{"decimation", l.ml.decimation}}},
          {"governor", encode(l.governor)},
          {"recovery",
           {{"enabled", l.recovery_enabled}, {"omega_max", l.recovery.omega_max}, {"gamma_s_max", l.recovery.gamma_s_max}}},
          {"model", c.model},
          {"oracle", c.oracle}}},
        {"loop",
         {{"dt", l.dt}, {"t_tail", l.t_tail}, {"rate_band", l.rate_band}, {"slosh_band", l.slosh_band}, {"min_hold", l.min_hold}}},
        {"maneuver", encode(c.maneuver)},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
    };
}

inline void decode(const json &j, RunConfig &c, const std::string &path = "config") {
    Reader r(j, path);
    if (const json *v = r.find("version")) {
        const int ver = Reader::convert<int>(*v, r.path("version"));
        if (ver != kConfigVersion) throw ValidationError(path + ": config version " + std::to_string(ver) + " is not supported");
    }
    auto &l = c.loop;
    if (const json *v = r.find("plant")) decode(*v, l.plant, r.path("plant"));
    if (const json *v = r.find("tank")) decode(*v, c.tank, r.path("tank"));
    if (const json *v = r.find("actuator")) {
        Reader a(*v, r.path("actuator"));
        a.get("torque_max", l.torque_max);
        a.done();
    }
    if (const json *v = r.find("sensors")) {
        Reader s(*v, r.path("sensors"));
        s.get("noise", l.sensor_noise);
        if (const json *g = s.find("gyro")) decode(*g, l.gyro, s.path("gyro"));
        if (const json *a = s.find("accel")) decode(*a, l.accel, s.path("accel"));
        if (const json *p = s.find("pressure")) decode(*p, l.pressure, s.path("pressure"));
        s.done();
    }
    if (const json *v = r.find("controller")) {
        Reader k(*v, r.path("controller"));
        k.get("kind", c.controller);
        if (const json *g = k.find("gains")) decode(*g, l.gains, k.path("gains"));
        if (const json *t = k.find("tdc")) {
            Reader tr(*t, k.path("tdc"));
            tr.get("delay_steps", l.tdc.delay_steps);
            tr.get("filter_tau", l.tdc.filter_tau);
            tr.done();
        }
        if (const json *m = k.find("ml")) {
            Reader mr(*m, k.path("ml"));
            mr.get("decimation", l.ml.decimation);
            mr.done();
        }
        if (const json *g = k.find("governor")) decode(*g, l.governor, k.path("governor"));
        if (const json *rc = k.find("recovery")) {
            Reader rr(*rc, k.path("recovery"));
            rr.get("enabled", l.recovery_enabled);
            rr.get("omega_max", l.recovery.omega_max);
            rr.get("gamma_s_max", l.recovery.gamma_s_max);
            rr.done();
        }
        k.get("model", c.model);
        k.get("oracle", c.oracle);
        k.done();
    }
    if (const json *v = r.find("loop")) {
        Reader lr(*v, r.path("loop"));
        lr.get("dt", l.dt);
        lr.get("t_tail", l.t_tail);
        lr.get("rate_band", l.rate_band);
        lr.get("slosh_band", l.slosh_band);
        lr.get("min_hold", l.min_hold);
        lr.done();
    }
    if (const json *v = r.find("maneuver")) decode(*v, c.maneuver, r.path("maneuver"));
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    r.done();
    c.validate();
}

inline RunConfig load_run_config(const std::string &path) {
    RunConfig c;
    decode(read_json(path), c, path);
    return c;
}

// =============================================================================
// Models and datasets
// =============================================================================

inline json encode(const predictor::Normalizer &n) { return {{"mean", n.mean}, {"scale", n.scale}}; }

inline predictor::Normalizer decode_normalizer(const json &j, const std::string &path) {
    Reader r(j, path);
    predictor::Normalizer n;
    n.mean = r.req<double>("mean");
    n.scale = r.req<double>("scale");
    r.done();
    return n;
}

inline json encode(const predictor::NarxModel &m) {
    return {{"format", "sloshlab-model"},
            {"version", kModelVersion},
            {"kind", predictor::to_string(m.kind)},
            {"n_a", m.n_a},
            {"n_b", m.n_b},
            {"hidden", m.hidden},
            {"omega_norm", encode(m.omega_norm)},
            {"gamma_rw_norm", encode(m.gamma_rw_norm)},
            {"gamma_s_norm", encode(m.gamma_s_norm)},
            {"training_runs", m.training_runs},
            {"params", m.params}};
}

inline predictor::NarxModel decode_model(const json &j, const std::string &path = "model") {
    Reader r(j, path);
    check_header(r, "sloshlab-model", kModelVersion);
    predictor::NarxModel m;
    m.kind = predictor::model_kind_from_string(r.req<std::string>("kind"));
    m.n_a = r.req<int>("n_a");
    m.n_b = r.req<int>("n_b");
    m.hidden = r.req<int>("hidden");
    m.omega_norm = decode_normalizer(r.at("omega_norm"), r.path("omega_norm"));
    m.gamma_rw_norm = decode_normalizer(r.at("gamma_rw_norm"), r.path("gamma_rw_norm"));
    m.gamma_s_norm = decode_normalizer(r.at("gamma_s_norm"), r.path("gamma_s_norm"));
    r.get("training_runs", m.training_runs);
    m.params = r.req<std::vector<double>>("params");
    r.done();
    m.validate();
    return m;
}

inline json encode(const predictor::GridSpec &g) {
    return {{"torques", g.torques},
            {"durations", g.durations},
            {"dwells", g.dwells},
            {"torque_jitter", g.torque_jitter},
            {"duration_jitter", g.duration_jitter},
            {"dwell_jitter", g.dwell_jitter},
            {"runs_per_cell", g.runs_per_cell},
            {"t_start", g.t_start},
            {"t_tail", g.t_tail},
            {"sample_rate", g.sample_rate},
            {"sim_dt", g.sim_dt},
            {"snr", number(g.snr)}};
}

inline void decode(const json &j, predictor::GridSpec &g, const std::string &path) {
    Reader r(j, path);
    r.get("torques", g.torques);
    r.get("durations", g.durations);
    r.get("dwells", g.dwells);
    r.get("torque_jitter", g.torque_jitter);
    r.get("duration_jitter", g.duration_jitter);
    r.get("dwell_jitter", g.dwell_jitter);
    r.get("runs_per_cell", g.runs_per_cell);
    r.get("t_start", g.t_start);
    r.get("t_tail", g.t_tail);
    r.get("sample_rate", g.sample_rate);
    r.get("sim_dt", g.sim_dt);
    r.get("snr", g.snr);
    r.done();
    g.validate();
}

inline json encode(const predictor::TrainHyper &h) {
    return {{"n_a", h.n_a},
            {"n_b", h.n_b},
            {"hidden", h.hidden},
            {"epochs", h.epochs},
            {"learning_rate", h.learning_rate},
            {"momentum", h.momentum},
            {"batch_size", h.batch_size},
            {"validation_split", h.validation_split},
            {"feedback_noise", h.feedback_noise}};
}

inline void decode(const json &j, predictor::TrainHyper &h, const std::string &path) {
    Reader r(j, path);
    r.get("n_a", h.n_a);
    r.get("n_b", h.n_b);
    r.get("hidden", h.hidden);
    r.get("epochs", h.epochs);
    r.get("learning_rate", h.learning_rate);
    r.get("momentum", h.momentum);
    r.get("batch_size", h.batch_size);
    r.get("validation_split", h.validation_split);
    r.get("feedback_noise", h.feedback_noise);
    r.done();
}

inline json encode(const predictor::TrainReport &rep) {
    json hist = json::array();
    for (const auto &e : rep.history)
        hist.push_back({{"epoch", e.epoch}, {"train_nrmse", e.train_nrmse}, {"val_nrmse", e.val_nrmse}});
    return {{"best_epoch", rep.best_epoch},
            {"best_val_nrmse", rep.best_val_nrmse},
            {"constant_target", rep.constant_target},
            {"train_runs", rep.train_runs},
            {"validation_runs", rep.validation_runs},
            {"history", hist}};
}

inline json encode(const std::vector<predictor::EvalRow> &rows) {
    json arr = json::array();
    for (const auto &r : rows) {
        arr.push_back({{"model", r.model},
                       {"snr", number(r.snr)},
                       {"nrmse", r.nrmse},
                       {"correlation", r.correlation},
                       {"degenerate", r.degenerate}});
    }
    return arr;
}

inline json encode(const predictor::SloshDataset &ds) {
    json runs = json::array();
    for (const auto &run : ds.runs) {
        const auto &mt = run.meta;
        runs.push_back({{"id", run.id},
                        {"meta",
                         {{"torque", mt.torque},
                          {"t_dur", mt.t_dur},
                          {"t_dwell", mt.t_dwell},
                          {"sign", mt.sign},
                          {"t_start", mt.t_start},
                          {"out_of_range", mt.out_of_range},
                          {"seed", mt.seed},
                          {"snr", number(mt.snr)}}},
                        {"omega", run.omega},
                        {"gamma_rw", run.gamma_rw},
                        {"gamma_s", run.gamma_s}});
    }
    return {{"format", "sloshlab-dataset"}, {"version", kDatasetVersion}, {"sample_dt", ds.sample_dt}, {"runs", runs}};
}

inline predictor::SloshDataset decode_dataset(const json &j, const std::string &path = "dataset") {
    Reader r(j, path);
    check_header(r, "sloshlab-dataset", kDatasetVersion);
    predictor::SloshDataset ds;
    ds.sample_dt = r.req<double>("sample_dt");
    const json &runs = r.at("runs");
    if (!runs.is_array()) throw ValidationError(path + ".runs: expected an array");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string p = path + ".runs[" + std::to_string(i) + "]";
        Reader rr(runs[i], p);
        predictor::SloshRun run;
        run.id = rr.req<std::string>("id");
        Reader mr(rr.at("meta"), p + ".meta");
        auto &mt = run.meta;
        mt.torque = mr.req<double>("torque");
        mt.t_dur = mr.req<double>("t_dur");
        mt.t_dwell = mr.req<double>("t_dwell");
        mt.sign = mr.req<int>("sign");
        mt.t_start = mr.req<double>("t_start");
        mt.out_of_range = mr.req<bool>("out_of_range");
        mt.seed = mr.req<std::uint64_t>("seed");
        mt.snr = mr.req<double>("snr");
        mr.done();
        run.omega = rr.req<std::vector<double>>("omega");
        run.gamma_rw = rr.req<std::vector<double>>("gamma_rw");
        run.gamma_s = rr.req<std::vector<double>>("gamma_s");
        rr.done();
        ds.runs.push_back(std::move(run));
    }
    r.done();
    ds.validate();
    return ds;
}

// =============================================================================
// Experiment records
// =============================================================================

inline json encode_metrics(const control::ExperimentRecord &rec) {
    json axes = json::array();
    for (const auto &a : rec.axes) {
        axes.push_back({{"axis", std::string(actuator::to_string(a.axis))},
                        {"settling_time", number(a.settling_time)},
                        {"slosh_settling_time", number(a.slosh_settling_time)},
                        {"peak_gamma_s", a.traj.peak_abs(&emm::Sample::gamma_s)},
                        {"final_theta", a.traj.empty() ? 0.0 : a.traj.back().theta}});
    }
    return {{"record_version", rec.record_version},
            {"controller", rec.controller},
            {"excitation", rec.excitation},
            {"seed", rec.seed},
            {"t_ref", number(rec.t_ref)},
            {"settling_time", number(rec.settling_time)},
            {"slosh_settling_time", number(rec.slosh_settling_time)},
            {"peak_gamma_s", rec.peak_gamma_s},
            {"peak_pressure_psi", rec.peak_pressure},
            {"peak_commanded", rec.peak_commanded},
            {"violations", {{"torque", rec.violations.torque}, {"pressure", rec.violations.pressure}}},
            {"governor_recoveries", rec.governor_recoveries},
            {"recovery_triggered", rec.recovery_triggered},
            {"recovery_time", number(rec.recovery_time)},
            {"aborted", rec.aborted},
            {"axes", axes}};
}

/// Long-format series: one row per (axis, sample).
inline void write_record_csv(std::ostream &os, const control::ExperimentRecord &rec) {
    os << "axis,t,theta,omega,omega_dot,gamma_s,gamma_s_dot,gamma_rw,gamma_cmd,theta_ref,omega_ref,commanded,"
          "compensation,omega_meas_deg,accel\n";
    char buf[512];
    for (const auto &a : rec.axes) {
        const std::string ax(actuator::to_string(a.axis));
        for (std::size_t i = 0; i < a.traj.size(); ++i) {
            const auto &s = a.traj.samples[i];
            std::snprintf(buf, sizeof buf, "%s,%.9g,%.12g,%.12g,%.9g,%.9g,%.9g,%.9g,%.9g,%.12g,%.12g,%.9g,%.9g,%.9g,%.9g\n",
                          ax.c_str(), s.t, s.theta, s.omega, s.omega_dot, s.gamma_s, s.gamma_s_dot, s.gamma_rw,
                          s.gamma_cmd, a.theta_ref[i], a.omega_ref[i], a.commanded[i], a.compensation[i],
                          a.omega_meas[i], a.accel[i]);
            os << buf;
        }
    }
}

// =============================================================================
// Plans and campaign reports
// =============================================================================

inline json encode(const campaign::ProfileSpec &p) {
    return {{"torque", p.torque}, {"t_dur", p.t_dur}, {"t_dwell", p.t_dwell}, {"t_start", p.t_start}, {"sign", p.sign}};
}

inline campaign::ProfileSpec decode_profile(const json &j, const std::string &path) {
    Reader r(j, path);
    campaign::ProfileSpec p;
    r.get("torque", p.torque);
    r.get("t_dur", p.t_dur);
    r.get("t_dwell", p.t_dwell);
    r.get("t_start", p.t_start);
    r.get("sign", p.sign);
    r.done();
    return p;
}

inline json encode(const campaign::PlanConfig &c) {
    json phases = json::array();
    for (const auto &ph : c.phases) {
        json profiles = json::array();
        for (const auto &p : ph.profiles) profiles.push_back(encode(p));
        json jp{{"name", ph.name},
                {"controller", ph.controller.name()},
                {"mode", campaign::to_string(ph.mode)},
                {"profiles", profiles},
                {"excitations", ph.excitations}};
        if (ph.groups) jp["groups"] = *ph.groups;
        jp["trials"] = ph.trials;
        jp["camera_trials"] = ph.camera_trials;
        jp["minimum_success"] = ph.minimum_success;
        phases.push_back(jp);
    }
    json j{{"format", "sloshlab-plan"},
           {"version", kPlanVersion},
           {"seed", c.seed},
           {"commissioning", {{"enabled", c.commissioning}, {"profile", encode(c.commissioning_profile)}}}};
    if (c.expected_total) j["expected_total"] = *c.expected_total;
    if (c.expected_camera) j["expected_camera"] = *c.expected_camera;
    j["phases"] = phases;
    return j;
}

inline campaign::PlanConfig decode_plan_config(const json &j, const std::string &path = "plan") {
    Reader r(j, path);
    check_header(r, "sloshlab-plan", kPlanVersion);
    campaign::PlanConfig c;
    r.get("seed", c.seed);
    if (const json *v = r.find("commissioning")) {
        Reader cr(*v, r.path("commissioning"));
        cr.get("enabled", c.commissioning);
        if (const json *p = cr.find("profile")) c.commissioning_profile = decode_profile(*p, cr.path("profile"));
        cr.done();
    }
    if (const json *v = r.find("expected_total")) c.expected_total = Reader::convert<std::size_t>(*v, r.path("expected_total"));
    if (const json *v = r.find("expected_camera"))
        c.expected_camera = Reader::convert<std::size_t>(*v, r.path("expected_camera"));
    const json &phases = r.at("phases");
    if (!phases.is_array()) throw ValidationError(path + ".phases: expected an array");
    for (std::size_t i = 0; i < phases.size(); ++i) {
        const std::string p = path + ".phases[" + std::to_string(i) + "]";
        Reader pr(phases[i], p);
        campaign::PhaseSpec ph;
        ph.name = pr.req<std::string>("name");
        ph.controller = control::ControllerKind::parse(pr.req<std::string>("controller"));
        ph.mode = campaign::experiment_mode_from_string(pr.req<std::string>("mode"));
        const json &profiles = pr.at("profiles");
        if (!profiles.is_array()) throw ValidationError(p + ".profiles: expected an array");
        for (std::size_t k = 0; k < profiles.size(); ++k)
            ph.profiles.push_back(decode_profile(profiles[k], p + ".profiles[" + std::to_string(k) + "]"));
        ph.excitations = pr.req<std::vector<std::string>>("excitations");
        if (const json *g = pr.find("groups")) ph.groups = Reader::convert<std::size_t>(*g, pr.path("groups"));
        pr.get("trials", ph.trials);
        pr.get("camera_trials", ph.camera_trials);
        pr.get("minimum_success", ph.minimum_success);
        pr.done();
        c.phases.push_back(std::move(ph));
    }
    r.done();
    return c;
}

inline json encode(const campaign::ExperimentManifest &m) {
    return {{"id", m.id},
            {"phase", m.phase},
            {"controller", m.controller.name()},
            {"excitation", m.excitation},
            {"trial", m.trial},
            {"camera", m.camera},
            {"mode", campaign::to_string(m.mode)},
            {"profile", encode(m.profile)},
            {"profile_index", m.profile_index},
            {"seed", m.seed},
            {"minimum_success", m.minimum_success},
            {"commissioning", m.commissioning}};
}

inline json encode_manifests(const std::vector<campaign::ExperimentManifest> &plan) {
    json arr = json::array();
    for (const auto &m : plan) arr.push_back(encode(m));
    const auto cams = std::count_if(plan.begin(), plan.end(), [](const auto &m) { return m.camera; });
    return {{"format", "sloshlab-manifests"},
            {"version", kPlanVersion},
            {"count", plan.size()},
            {"camera", cams},
            {"sensor_only", static_cast<std::int64_t>(plan.size()) - cams},
            {"manifests", arr}};
}

inline json encode(const campaign::CampaignReport &rep) {
    json results = json::array();
    for (const auto &r : rep.results) {
        json jr{{"id", r.id},
                {"phase", r.phase},
                {"controller", r.controller},
                {"excitation", r.excitation},
                {"trial", r.trial},
                {"camera", r.camera},
                {"mode", campaign::to_string(r.mode)},
                {"status", campaign::to_string(r.status)},
                {"t_ref", number(r.t_ref)},
                {"settling_time", number(r.settling_time)},
                {"slosh_settling_time", number(r.slosh_settling_time)},
                {"peak_gamma_s", r.peak_gamma_s},
                {"peak_pressure_psi", r.peak_pressure},
                {"peak_commanded", r.peak_commanded},
                {"violations", {{"torque", r.torque_violations}, {"pressure", r.pressure_violations}}},
                {"recovery_triggered", r.recovery_triggered},
                {"recovery_time", number(r.recovery_time)},
                {"start_time", r.start_time},
                {"end_time", r.end_time}};
        if (!r.error.empty()) jr["error"] = r.error;
        results.push_back(jr);
    }
    json phases = json::array();
    for (const auto &s : rep.phases) {
        phases.push_back({{"phase", s.phase},
                          {"controller", s.controller},
                          {"runs", s.runs},
                          {"settled", s.settled},
                          {"aborted", s.aborted},
                          {"failed", s.failed},
                          {"median_settling_time", number(s.median_settling)},
                          {"median_slosh_settling_time", number(s.median_slosh_settling)},
                          {"violations", s.violations}});
    }
    json timeline = json::array();
    for (const auto &t : rep.timeline) {
        timeline.push_back({{"time", t.time},
                            {"id", t.id},
                            {"from", campaign::to_string(t.from)},
                            {"event", campaign::to_string(t.event)},
                            {"to", campaign::to_string(t.to)}});
    }
    json choice = json::object();
    for (const auto &[ex, a] : rep.combined_choice) choice[ex] = a;
    return {{"format", "sloshlab-campaign-report"},
            {"version", 1},
            {"experiments", rep.results.size()},
            {"camera", rep.camera_runs},
            {"sensor_only", rep.non_camera_runs},
            {"volume_bytes",
             {{"camera", rep.volume.camera}, {"sensor_only", rep.volume.no_camera}, {"total", rep.volume.total}}},
            {"volume_mb",
             {{"camera", telemetry::display_mb(rep.volume.camera)},
              {"sensor_only", telemetry::display_mb(rep.volume.no_camera)},
              {"total", telemetry::display_mb(rep.volume.total)}}},
            {"minimum_success_complete", rep.minimum_success_complete},
            {"recoveries", rep.recoveries},
            {"uploads", rep.uploads},
            {"duration_s", rep.duration},
            {"combined_choice", choice},
            {"phases", phases},
            {"results", results},
            {"timeline", timeline}};
}

// =============================================================================
// Budget
// =============================================================================

inline json encode(const telemetry::ExperimentVolume &v) {
    return {{"vss", telemetry::to_mb(v.vss)},     {"lss", telemetry::to_mb(v.lss)},
            {"mss", telemetry::to_mb(v.mss)},     {"soh", telemetry::to_mb(v.soh)},
            {"total", telemetry::to_mb(v.total)}, {"lss_published", telemetry::to_mb(v.lss_published)},
            {"lss_derived", telemetry::to_mb(v.lss_derived)}, {"lss_discrepancy", v.lss_discrepancy}};
}

inline json encode(const telemetry::BudgetReport &r) {
    return {{"mode", telemetry::to_string(r.config.mode)},
            {"mss_rate_bps", {{"timestamp", r.rate.timestamp_bps}, {"data", r.rate.data_bps}, {"total", r.rate.total_bps}}},
            {"frame_bytes", r.frame_size},
            {"experiment_mb", {{"camera", encode(r.with_camera)}, {"sensor_only", encode(r.without_camera)}}},
            {"campaign",
             {{"camera_runs", r.n_camera},
              {"sensor_only_runs", r.n_no_camera},
              {"camera_mb", telemetry::display_mb(r.campaign.camera)},
              {"sensor_only_mb", telemetry::display_mb(r.campaign.no_camera)},
              {"total_mb", telemetry::display_mb(r.campaign.total)}}}};
}

}  // namespace sloshlab::io
