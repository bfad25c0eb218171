// Experiment plan, operating-mode state machine and campaign runner
#pragma once

#include "sloshlab/control.hpp"
#include "sloshlab/core.hpp"
#include "sloshlab/telemetry.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sloshlab::campaign {

using control::Algorithm;
using control::ControllerKind;

// =============================================================================
// Operating modes
// =============================================================================

enum class OperatingMode { Idle, ExcitationObservation, ExcitationMitigation, Recovery, AlgorithmUpdate };

enum class Event {
    StartExcitation,
    ExcitationDone,
    FluidSettled,
    LimitExceeded,
    RecoveryDone,
    UploadRequested,
    UploadDone
};

inline constexpr std::array<OperatingMode, 5> kModes{OperatingMode::Idle, OperatingMode::ExcitationObservation,
                                                     OperatingMode::ExcitationMitigation, OperatingMode::Recovery,
                                                     OperatingMode::AlgorithmUpdate};
inline constexpr std::array<Event, 7> kEvents{Event::StartExcitation, Event::ExcitationDone, Event::FluidSettled,
                                              Event::LimitExceeded,   Event::RecoveryDone,   Event::UploadRequested,
                                              Event::UploadDone};

inline std::string to_string(OperatingMode m) {
    switch (m) {
    case OperatingMode::Idle: return "idle";
    case OperatingMode::ExcitationObservation: return "excitation_observation";
    case OperatingMode::ExcitationMitigation: return "excitation_mitigation";
    case OperatingMode::Recovery: return "recovery";
    case OperatingMode::AlgorithmUpdate: return "algorithm_update";
    }
    return "?";
}

inline std::string to_string(Event e) {
    switch (e) {
    case Event::StartExcitation: return "start_excitation";
    case Event::ExcitationDone: return "excitation_done";
    case Event::FluidSettled: return "fluid_settled";
    case Event::LimitExceeded: return "limit_exceeded";
    case Event::RecoveryDone: return "recovery_done";
    case Event::UploadRequested: return "upload_requested";
    case Event::UploadDone: return "upload_done";
    }
    return "?";
}

inline OperatingMode operating_mode_from_string(const std::string &s) {
    for (auto m : kModes) {
        if (to_string(m) == s) return m;
    }
    throw ValidationError("unknown operating mode '" + s + "'");
}

inline Event event_from_string(const std::string &s) {
    for (auto e : kEvents) {
        if (to_string(e) == s) return e;
    }
    throw ValidationError("unknown mode event '" + s + "'");
}

class IllegalTransitionError : public Error {
public:
    IllegalTransitionError(OperatingMode state, Event event)
        : Error("illegal transition: " + to_string(event) + " in state " + to_string(state)), state_(state),
          event_(event) {}
    OperatingMode state() const noexcept { return state_; }
    Event event() const noexcept { return event_; }

private:
    OperatingMode state_;
    Event event_;
};

/// Experiment branch: excite and watch, or excite and mitigate.
enum class ExperimentMode { Observation, Mitigation };

inline std::string to_string(ExperimentMode m) { return m == ExperimentMode::Observation ? "observation" : "mitigation"; }

inline ExperimentMode experiment_mode_from_string(const std::string &s) {
    if (s == "observation") return ExperimentMode::Observation;
    if (s == "mitigation") return ExperimentMode::Mitigation;
    throw ValidationError("unknown experiment mode '" + s + "'");
}

/// One transition of the operating-mode graph. `branch` picks the excitation
/// state entered from Idle. Excitation completion keeps the state (the fluid is
/// still being observed or mitigated until it settles).
inline OperatingMode step_mode(OperatingMode current, Event event, ExperimentMode branch = ExperimentMode::Observation) {
    if (event == Event::LimitExceeded) return OperatingMode::Recovery;
    switch (current) {
    case OperatingMode::Idle:
        if (event == Event::StartExcitation)
            return branch == ExperimentMode::Observation ? OperatingMode::ExcitationObservation
                                                         : OperatingMode::ExcitationMitigation;
        if (event == Event::UploadRequested) return OperatingMode::AlgorithmUpdate;
        break;
    case OperatingMode::ExcitationObservation:
    case OperatingMode::ExcitationMitigation:
        if (event == Event::ExcitationDone) return current;
        if (event == Event::FluidSettled) return OperatingMode::Idle;
        break;
    case OperatingMode::Recovery:
        if (event == Event::RecoveryDone) return OperatingMode::Idle;
        break;
    case OperatingMode::AlgorithmUpdate:
        if (event == Event::UploadDone) return OperatingMode::Idle;
        break;
    }
    throw IllegalTransitionError(current, event);
}

// =============================================================================
// Plan
// =============================================================================

/// Bang-stop-bang parameters shared by every excited axis.
struct ProfileSpec {
    double torque = 0.002;
    double t_dur = 5.0;
    double t_dwell = 25.0;
    double t_start = 2.0;
    int sign = 1;

    control::Maneuver maneuver(const std::string &excitation) const {
        control::Maneuver m;
        m.excitation = excitation;
        m.torque = torque;
        m.t_dur = t_dur;
        m.t_dwell = t_dwell;
        m.t_start = t_start;
        m.sign = sign;
        return m;
    }

    bool operator==(const ProfileSpec &) const = default;
};

/// One controller phase. Groups are (profile, excitation) pairs taken in
/// profile-major order from the cartesian product, truncated to `groups` when set.
struct PhaseSpec {
    std::string name;
    ControllerKind controller;
    ExperimentMode mode = ExperimentMode::Mitigation;
    std::vector<ProfileSpec> profiles;
    std::vector<std::string> excitations;
    std::optional<std::size_t> groups;
    int trials = 3;
    /// Trials (1-based) that record the camera.
    std::vector<int> camera_trials{1};
    bool minimum_success = false;

    std::size_t group_count() const {
        const std::size_t full = profiles.size() * excitations.size();
        return groups ? *groups : full;
    }

    bool operator==(const PhaseSpec &) const = default;
};

struct PlanConfig {
    std::uint64_t seed = 1;
    std::vector<PhaseSpec> phases;
    /// Single baseline observation run ahead of the phases (not a trial group).
    bool commissioning = false;
    ProfileSpec commissioning_profile;
    std::optional<std::size_t> expected_total;
    std::optional<std::size_t> expected_camera;

    bool operator==(const PlanConfig &) const = default;
};

/// Profile levels of the default plan: peak rate stays under the 16 deg/s slew cap.
inline std::vector<ProfileSpec> default_profiles() {
    return {{0.002, 5.0, 25.0, 2.0, 1}, {0.004, 3.0, 25.0, 2.0, 1}, {0.006, 2.5, 25.0, 2.0, 1}};
}

/// 229 manifests: 76 trial groups of 3 (camera on trial 1) plus one
/// commissioning run. Group counts per phase: A 21, B 14, C 14, D 14, E 13.
inline PlanConfig default_plan_config() {
    const std::vector<std::string> all(control::excitation_modes().begin(), control::excitation_modes().end());
    const auto p = default_profiles();
    PlanConfig c;
    c.seed = 1;
    c.commissioning = true;
    c.commissioning_profile = p[0];
    c.expected_total = 229;
    c.expected_camera = 76;
    c.phases = {
        {"A", ControllerKind::baseline(), ExperimentMode::Observation, p, all, std::nullopt, 3, {1}, true},
        {"B", ControllerKind::adaptive(), ExperimentMode::Mitigation, {p[0], p[2]}, all, std::nullopt, 3, {1}, false},
        {"C", ControllerKind::ml(), ExperimentMode::Mitigation, {p[0], p[2]}, all, std::nullopt, 3, {1}, false},
        {"D", ControllerKind::governed(Algorithm::Baseline), ExperimentMode::Mitigation, {p[0], p[2]}, all,
         std::nullopt, 3, {1}, false},
        {"E", ControllerKind::combined(), ExperimentMode::Mitigation, {p[0], p[2]}, all, std::size_t{13}, 3, {1}, false},
    };
    return c;
}

struct ExperimentManifest {
    std::string id;
    std::string phase;
    ControllerKind controller;
    std::string excitation;
    int trial = 1;
    bool camera = false;
    ExperimentMode mode = ExperimentMode::Observation;
    ProfileSpec profile;
    std::size_t profile_index = 0;
    std::uint64_t seed = 0;
    bool minimum_success = false;
    bool commissioning = false;

    bool operator==(const ExperimentManifest &) const = default;
};

inline void validate_phase(const PhaseSpec &ph) {
    if (ph.name.empty()) throw ValidationError("plan: phase needs a name");
    ph.controller.validate();
    if (ph.trials < 1 || ph.trials > 3) throw ValidationError("plan: phase " + ph.name + " trials must be 1-3");
    if (ph.profiles.empty() || ph.excitations.empty())
        throw ValidationError("plan: phase " + ph.name + " needs profiles and excitations");
    for (const auto &e : ph.excitations) control::excitation_axes(e);
    for (const auto &pr : ph.profiles) pr.maneuver("x").validate();
    const std::size_t full = ph.profiles.size() * ph.excitations.size();
    if (ph.groups && (*ph.groups == 0 || *ph.groups > full))
        throw ValidationError("plan: phase " + ph.name + " group count must be in [1, profiles x excitations]");
    for (int t : ph.camera_trials) {
        if (t < 1 || t > ph.trials) throw ValidationError("plan: phase " + ph.name + " camera trial out of range");
    }
    if (ph.mode == ExperimentMode::Observation && ph.controller != ControllerKind::baseline())
        throw ValidationError("plan: observation phases run the baseline controller");
}

inline std::string manifest_id(const std::string &phase, std::size_t group, const std::string &excitation,
                               std::size_t profile, int trial) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%02zu-%s-p%zu-t%d", phase.c_str(), group + 1, excitation.c_str(), profile + 1,
                  trial);
    return buf;
}

/// Ordered manifests: commissioning, then phases in order, groups in order,
/// trials innermost. Seeds are derived from the plan seed and the position.
inline std::vector<ExperimentManifest> build_plan(const PlanConfig &cfg) {
    std::vector<std::string> names;
    for (const auto &ph : cfg.phases) {
        validate_phase(ph);
        if (std::find(names.begin(), names.end(), ph.name) != names.end())
            throw ValidationError("plan: duplicate phase '" + ph.name + "'");
        names.push_back(ph.name);
    }
    std::vector<ExperimentManifest> out;
    if (cfg.commissioning) {
        cfg.commissioning_profile.maneuver("x").validate();
        ExperimentManifest m;
        m.id = "commissioning";
        m.phase = "commissioning";
        m.controller = ControllerKind::baseline();
        m.excitation = "x";
        m.profile = cfg.commissioning_profile;
        m.commissioning = true;
        out.push_back(m);
    }
    for (const auto &ph : cfg.phases) {
        for (std::size_t g = 0; g < ph.group_count(); ++g) {
            const std::size_t ip = g / ph.excitations.size();
            const std::string &ex = ph.excitations[g % ph.excitations.size()];
            for (int trial = 1; trial <= ph.trials; ++trial) {
                ExperimentManifest m;
                m.id = manifest_id(ph.name, g, ex, ip, trial);
                m.phase = ph.name;
                m.controller = ph.controller;
                m.excitation = ex;
                m.trial = trial;
                m.camera = std::find(ph.camera_trials.begin(), ph.camera_trials.end(), trial) != ph.camera_trials.end();
                m.mode = ph.mode;
                m.profile = ph.profiles[ip];
                m.profile_index = ip;
                m.minimum_success = ph.minimum_success;
                out.push_back(m);
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].seed = derive_seed(cfg.seed, i);
    const auto cams = static_cast<std::size_t>(std::count_if(out.begin(), out.end(), [](const auto &m) { return m.camera; }));
    if (cfg.expected_total && *cfg.expected_total != out.size())
        throw ValidationError("plan: " + std::to_string(out.size()) + " manifests, expected " +
                              std::to_string(*cfg.expected_total));
    if (cfg.expected_camera && *cfg.expected_camera != cams)
        throw ValidationError("plan: " + std::to_string(cams) + " camera manifests, expected " +
                              std::to_string(*cfg.expected_camera));
    return out;
}

// =============================================================================
// Runner
// =============================================================================

enum class Status { Ok, Aborted, Unsettled, Failed };

inline std::string to_string(Status s) {
    switch (s) {
    case Status::Ok: return "ok";
    case Status::Aborted: return "aborted";
    case Status::Unsettled: return "unsettled";
    case Status::Failed: return "failed";
    }
    return "?";
}

inline Status status_from_string(const std::string &s) {
    for (auto v : {Status::Ok, Status::Aborted, Status::Unsettled, Status::Failed}) {
        if (to_string(v) == s) return v;
    }
    throw ValidationError("unknown experiment status '" + s + "'");
}

struct ExperimentResult {
    std::string id;
    std::string phase;
    std::string controller;  // resolved name
    std::string excitation;
    int trial = 1;
    bool camera = false;
    ExperimentMode mode = ExperimentMode::Observation;
    Status status = Status::Ok;
    std::string error;
    double t_ref = 0.0;
    double duration = 0.0;  // simulated record length [s]
    double settling_time = 0.0;
    double slosh_settling_time = 0.0;
    double peak_gamma_s = 0.0;
    double peak_pressure = 0.0;
    double peak_commanded = 0.0;
    std::size_t torque_violations = 0;
    std::size_t pressure_violations = 0;
    bool recovery_triggered = false;
    double recovery_time = kInfinity;
    double start_time = 0.0;  // campaign clock [s]
    double end_time = 0.0;    // back in Idle

    bool operator==(const ExperimentResult &) const = default;
};

struct Transition {
    double time = 0.0;
    std::string id;  // manifest the event belongs to (empty for uploads)
    OperatingMode from = OperatingMode::Idle;
    Event event = Event::StartExcitation;
    OperatingMode to = OperatingMode::Idle;

    bool operator==(const Transition &) const = default;
};

struct ControllerSummary {
    std::string phase;
    std::string controller;
    std::size_t runs = 0;
    std::size_t settled = 0;
    std::size_t aborted = 0;
    std::size_t failed = 0;
    double median_settling = kInfinity;
    double median_slosh_settling = kInfinity;
    std::size_t violations = 0;

    bool operator==(const ControllerSummary &) const = default;
};

struct CampaignReport {
    std::vector<ExperimentResult> results;  // plan order
    std::vector<ControllerSummary> phases;
    std::vector<Transition> timeline;
    /// Inner algorithm chosen for the combined controller, per excitation class.
    std::map<std::string, std::string> combined_choice;
    std::size_t camera_runs = 0;
    std::size_t non_camera_runs = 0;
    telemetry::CampaignVolume volume;
    bool minimum_success_complete = false;
    std::size_t recoveries = 0;
    std::size_t uploads = 0;
    double duration = 0.0;  // campaign clock at the end [s]

    bool operator==(const CampaignReport &) const = default;
};

struct CampaignOptions {
    control::ClosedLoopConfig loop = [] {
        control::ClosedLoopConfig c;
        c.recovery_enabled = true;
        return c;
    }();
    telemetry::BudgetConfig budget;
    /// Trained predictor for ML controllers; null makes those runs fail.
    const predictor::NarxModel *model = nullptr;
    unsigned jobs = 1;
    double recovery_duration = 600.0;  // safe-mode hold after a limit event [s]
    double upload_duration = 900.0;    // algorithm upload between controllers [s]
};

namespace detail {

inline ExperimentResult run_one(const ExperimentManifest &m, const ControllerKind &kind, const CampaignOptions &opt) {
    ExperimentResult r;
    r.id = m.id;
    r.phase = m.phase;
    r.controller = kind.name();
    r.excitation = m.excitation;
    r.trial = m.trial;
    r.camera = m.camera;
    r.mode = m.mode;
    try {
        control::Predictors pred;
        pred.narx = opt.model;
        const auto rec = control::run_closed_loop(kind, m.profile.maneuver(m.excitation), opt.loop, m.seed, pred);
        r.t_ref = rec.t_ref;
        r.duration = rec.axes.front().traj.back().t;
        r.settling_time = rec.settling_time;
        r.slosh_settling_time = rec.slosh_settling_time;
        r.peak_gamma_s = rec.peak_gamma_s;
        r.peak_pressure = rec.peak_pressure;
        r.peak_commanded = rec.peak_commanded;
        r.torque_violations = rec.violations.torque;
        r.pressure_violations = rec.violations.pressure;
        r.recovery_triggered = rec.recovery_triggered;
        r.recovery_time = rec.recovery_time;
        if (rec.aborted) r.status = Status::Aborted;
        else if (std::isinf(rec.slosh_settling_time) || std::isinf(rec.t_ref)) r.status = Status::Unsettled;
    } catch (const Error &e) {
        r.status = Status::Failed;
        r.error = e.what();
    }
    return r;
}

inline double median_of(const std::vector<ExperimentResult> &rs, double ExperimentResult::*field) {
    std::vector<double> v;
    for (const auto &r : rs) {
        if (r.status != Status::Failed) v.push_back(r.*field);
    }
    return v.empty() ? kInfinity : stats::median(v);
}

}  // namespace detail

/// Lower median settling time of adaptive vs ML per excitation class (failed
/// runs excluded; a class with no data in either phase defaults to adaptive).
inline std::map<std::string, Algorithm> resolve_combined(const std::vector<ExperimentResult> &results) {
    std::map<std::string, std::array<std::vector<double>, 2>> by_class;
    for (const auto &r : results) {
        if (r.status == Status::Failed) continue;
        if (r.controller == "adaptive") by_class[r.excitation][0].push_back(r.settling_time);
        if (r.controller == "ml") by_class[r.excitation][1].push_back(r.settling_time);
    }
    std::map<std::string, Algorithm> out;
    for (const auto &ex : control::excitation_modes()) {
        const auto &v = by_class[ex];
        const double a = v[0].empty() ? kInfinity : stats::median(v[0]);
        const double b = v[1].empty() ? kInfinity : stats::median(v[1]);
        out[ex] = control::choose_combined(a, b);
    }
    return out;
}

/// Serial mode timeline over results in plan order. Each experiment starts
/// only once the previous one is back in Idle.
/// Fills start_time / end_time of every result.
inline std::vector<Transition> build_timeline(const std::vector<ExperimentManifest> &plan,
                                              std::vector<ExperimentResult> &results, const CampaignOptions &opt,
                                              std::size_t *uploads = nullptr) {
    if (plan.size() != results.size()) throw ValidationError("timeline: plan and results differ in length");
    std::vector<Transition> tl;
    OperatingMode mode = OperatingMode::Idle;
    double clock = 0.0;
    std::size_t n_uploads = 0;
    const auto fire = [&](const std::string &id, Event e, ExperimentMode branch = ExperimentMode::Observation) {
        const OperatingMode next = step_mode(mode, e, branch);
        tl.push_back({clock, id, mode, e, next});
        mode = next;
    };
    std::string loaded;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto &m = plan[i];
        auto &r = results[i];
        if (r.status == Status::Failed) {
            r.start_time = clock;
            r.end_time = clock;
            continue;
        }
        if (r.controller != loaded) {
            if (!loaded.empty() || r.controller != "baseline") {
                fire("", Event::UploadRequested);
                clock += opt.upload_duration;
                fire("", Event::UploadDone);
                ++n_uploads;
            }
            loaded = r.controller;
        }
        r.start_time = clock;
        fire(m.id, Event::StartExcitation, m.mode);
        const double t0 = clock;
        const double t_limit = r.status == Status::Aborted ? r.recovery_time : r.duration;
        if (r.t_ref <= t_limit) {
            clock = t0 + r.t_ref;
            fire(m.id, Event::ExcitationDone);
        }
        if (r.status == Status::Ok) {
            clock = t0 + r.t_ref + r.slosh_settling_time;
            fire(m.id, Event::FluidSettled);
        } else {
            // aborted, or the fluid never settled inside the record: safe mode
            clock = t0 + t_limit;
            fire(m.id, Event::LimitExceeded);
        }
        if (mode == OperatingMode::Recovery) {
            clock += opt.recovery_duration;
            fire(m.id, Event::RecoveryDone);
        }
        r.end_time = clock;
    }
    if (uploads) *uploads = n_uploads;
    return tl;
}

/// Run every manifest. Non-combined manifests run first (in parallel when
/// jobs > 1); combined manifests are resolved from those results and run
/// second. Results are merged by plan index, so the report does not depend on
/// the job count.
inline CampaignReport run_campaign(const std::vector<ExperimentManifest> &plan, const CampaignOptions &opt) {
    opt.loop.validate();
    opt.budget.validate();
    {
        std::vector<std::string> ids;
        for (const auto &m : plan) ids.push_back(m.id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw ValidationError("campaign: duplicate manifest id");
    }
    CampaignReport rep;
    rep.results.resize(plan.size());
    std::vector<std::size_t> first, second;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        (plan[i].controller.type == ControllerKind::Type::Combined && !plan[i].controller.inner ? second : first)
            .push_back(i);
    }
    const unsigned jobs = std::max(1u, opt.jobs);
    parallel_for(first.size(), jobs, [&](std::size_t k) {
        const auto &m = plan[first[k]];
        rep.results[first[k]] = detail::run_one(m, m.controller, opt);
    });
    if (!second.empty()) {
        std::vector<ExperimentResult> done;
        for (std::size_t i : first) done.push_back(rep.results[i]);
        const auto choice = resolve_combined(done);
        for (const auto &[ex, a] : choice) rep.combined_choice[ex] = control::to_string(a);
        parallel_for(second.size(), jobs, [&](std::size_t k) {
            const auto &m = plan[second[k]];
            rep.results[second[k]] = detail::run_one(m, ControllerKind::combined(choice.at(m.excitation)), opt);
        });
    }

    rep.timeline = build_timeline(plan, rep.results, opt, &rep.uploads);
    rep.duration = rep.timeline.empty() ? 0.0 : rep.timeline.back().time;

    for (const auto &m : plan) (m.camera ? rep.camera_runs : rep.non_camera_runs)++;
    rep.volume = telemetry::campaign_volume(static_cast<std::int64_t>(rep.camera_runs),
                                            static_cast<std::int64_t>(rep.non_camera_runs), opt.budget);
    for (const auto &r : rep.results) rep.recoveries += r.recovery_triggered ? 1 : 0;

    // per-phase summaries in first-appearance order
    std::vector<std::string> order;
    for (const auto &r : rep.results) {
        if (std::find(order.begin(), order.end(), r.phase) == order.end()) order.push_back(r.phase);
    }
    for (const auto &ph : order) {
        std::vector<ExperimentResult> rs;
        for (const auto &r : rep.results) {
            if (r.phase == ph) rs.push_back(r);
        }
        ControllerSummary s;
        s.phase = ph;
        for (std::size_t i = 0; i < plan.size(); ++i) {
            if (plan[i].phase == ph) {
                s.controller = plan[i].controller.name();
                break;
            }
        }
        s.runs = rs.size();
        for (const auto &r : rs) {
            s.settled += r.status == Status::Ok ? 1 : 0;
            s.aborted += r.status == Status::Aborted ? 1 : 0;
            s.failed += r.status == Status::Failed ? 1 : 0;
            s.violations += r.torque_violations + r.pressure_violations;
        }
        s.median_settling = detail::median_of(rs, &ExperimentResult::settling_time);
        s.median_slosh_settling = detail::median_of(rs, &ExperimentResult::slosh_settling_time);
        rep.phases.push_back(s);
    }

    bool any_min = false, min_ok = true;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (!plan[i].minimum_success) continue;
        any_min = true;
        if (rep.results[i].status == Status::Failed) min_ok = false;
    }
    rep.minimum_success_complete = any_min && min_ok;
    return rep;
}

inline std::string format_seconds(double s) {
    if (std::isinf(s)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", s);
    return buf;
}

/// Aligned text summary, one row per phase.
inline std::string render_report(const CampaignReport &rep) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-14s %-20s %5s %7s %7s %6s %10s %10s %10s\n", "phase", "controller", "runs",
                  "settled", "aborted", "failed", "med_settle", "med_slosh", "violations");
    os << buf;
    for (const auto &s : rep.phases) {
        std::snprintf(buf, sizeof buf, "%-14s %-20s %5zu %7zu %7zu %6zu %10s %10s %10zu\n", s.phase.c_str(),
                      s.controller.c_str(), s.runs, s.settled, s.aborted, s.failed, format_seconds(s.median_settling).c_str(),
                      format_seconds(s.median_slosh_settling).c_str(), s.violations);
        os << buf;
    }
    os << "\n";
    if (!rep.combined_choice.empty()) {
        os << "combined inner:";
        for (const auto &[ex, a] : rep.combined_choice) os << " " << ex << "=" << a;
        os << "\n";
    }
    std::snprintf(buf, sizeof buf, "experiments: %zu (camera %zu, sensor-only %zu)\n", rep.results.size(),
                  rep.camera_runs, rep.non_camera_runs);
    os << buf;
    os << "data volume: camera " << telemetry::display_mb(rep.volume.camera) << " MB, sensor-only "
       << telemetry::display_mb(rep.volume.no_camera) << " MB, total " << telemetry::display_mb(rep.volume.total)
       << " MB\n";
    std::snprintf(buf, sizeof buf, "recoveries: %zu  uploads: %zu  campaign time: %.1f h\n", rep.recoveries, rep.uploads,
                  rep.duration / 3600.0);
    os << buf;
    os << "minimum success: " << (rep.minimum_success_complete ? "complete" : "incomplete") << "\n";
    return os.str();
}

}  // namespace sloshlab::campaign
