// Pressure-frame codec and mission data budgets
#pragma once

#include "sloshlab/core.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace sloshlab::telemetry {

// =============================================================================
// Frame codec
// =============================================================================

inline constexpr std::uint8_t kFrameTerminator = 0xFF;
inline constexpr std::uint16_t kSampleLimit = 4096;  // 12-bit samples

/// One pressure-array frame; samples are strip-major.
struct PressureFrame {
    std::size_t n_strips = 8;
    std::size_t pads_per_strip = 16;
    std::vector<std::uint16_t> samples;
    /// Position in the stream. Not serialized.
    std::uint64_t sequence = 0;

    PressureFrame() : samples(n_strips * pads_per_strip, 0) {}
    PressureFrame(std::size_t strips, std::size_t pads)
        : n_strips(strips), pads_per_strip(pads), samples(strips * pads, 0) {}

    std::uint16_t &at(std::size_t strip, std::size_t pad) { return samples.at(strip * pads_per_strip + pad); }
    std::uint16_t at(std::size_t strip, std::size_t pad) const { return samples.at(strip * pads_per_strip + pad); }

    /// Equality over serialized content (sequence excluded).
    bool operator==(const PressureFrame &o) const {
        return n_strips == o.n_strips && pads_per_strip == o.pads_per_strip && samples == o.samples;
    }
};

inline std::size_t frame_bytes(std::size_t n_strips, std::size_t pads_per_strip) {
    return n_strips * pads_per_strip * 2 + 1;
}

class FrameError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class FrameLengthError : public FrameError {
public:
    FrameLengthError(std::size_t got, std::size_t expected)
        : FrameError("frame length " + std::to_string(got) + ", expected " + std::to_string(expected)) {}
};

class FrameTerminatorError : public FrameError {
public:
    explicit FrameTerminatorError(std::uint8_t got)
        : FrameError("frame terminator is " + std::to_string(got) + ", expected 255") {}
};

class FrameReservedBitsError : public FrameError {
public:
    explicit FrameReservedBitsError(std::size_t offset)
        : FrameError("nonzero reserved bits at byte " + std::to_string(offset)) {}
};

class FrameSampleError : public FrameError {
public:
    FrameSampleError(std::size_t index, unsigned value)
        : FrameError("sample " + std::to_string(index) + " = " + std::to_string(value) + " does not fit 12 bits") {}
};

inline std::vector<std::uint8_t> encode_frame(const PressureFrame &f) {
    if (f.samples.size() != f.n_strips * f.pads_per_strip)
        throw FrameError("frame sample count does not match its dimensions");
    std::vector<std::uint8_t> out;
    out.reserve(frame_bytes(f.n_strips, f.pads_per_strip));
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        const std::uint16_t v = f.samples[i];
        if (v >= kSampleLimit) throw FrameSampleError(i, v);
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    out.push_back(kFrameTerminator);
    return out;
}

inline PressureFrame decode_frame(std::span<const std::uint8_t> bytes, std::size_t n_strips = 8,
                                  std::size_t pads_per_strip = 16) {
    const std::size_t expected = frame_bytes(n_strips, pads_per_strip);
    if (bytes.size() != expected) throw FrameLengthError(bytes.size(), expected);
    if (bytes.back() != kFrameTerminator) throw FrameTerminatorError(bytes.back());
    PressureFrame f(n_strips, pads_per_strip);
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        const std::uint8_t hi = bytes[2 * i];
        if (hi & 0xF0) throw FrameReservedBitsError(2 * i);
        f.samples[i] = static_cast<std::uint16_t>((hi << 8) | bytes[2 * i + 1]);
    }
    return f;
}

/// Concatenated frames, all with the same dimensions.
inline std::vector<std::uint8_t> encode_stream(std::span<const PressureFrame> frames) {
    std::vector<std::uint8_t> out;
    for (const auto &f : frames) {
        const auto b = encode_frame(f);
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

inline std::vector<PressureFrame> decode_stream(std::span<const std::uint8_t> bytes, std::size_t n_strips = 8,
                                                std::size_t pads_per_strip = 16) {
    const std::size_t n = frame_bytes(n_strips, pads_per_strip);
    if (bytes.size() % n != 0) throw FrameLengthError(bytes.size() % n, n);
    std::vector<PressureFrame> out;
    for (std::size_t off = 0; off < bytes.size(); off += n) {
        out.push_back(decode_frame(bytes.subspan(off, n), n_strips, pads_per_strip));
        out.back().sequence = out.size() - 1;
    }
    return out;
}

// =============================================================================
// Data budgets
// =============================================================================

enum class BudgetMode { AsPublished, Derived };

inline std::string to_string(BudgetMode m) { return m == BudgetMode::AsPublished ? "as-published" : "derived"; }

inline BudgetMode budget_mode_from_string(const std::string &s) {
    if (s == "as-published" || s == "as_published") return BudgetMode::AsPublished;
    if (s == "derived") return BudgetMode::Derived;
    throw ValidationError("unknown budget mode '" + s + "'");
}

struct BudgetConfig {
    double timestamp_bits = 80;
    double mss_rate_hz = 100;
    double mss_channels = 6;
    double bits_per_sample = 64;
    double frame_rate_hz = 10;
    double experiment_duration_s = 500;
    double vss_mb = 104;
    double soh_mb = 7;
    double lss_mb_published = 12.85;
    std::size_t n_strips = 8;
    std::size_t pads_per_strip = 16;
    BudgetMode mode = BudgetMode::AsPublished;

    void validate() const {
        for (double v : {timestamp_bits, mss_rate_hz, mss_channels, bits_per_sample, frame_rate_hz,
                         experiment_duration_s, vss_mb, soh_mb, lss_mb_published}) {
            if (!std::isfinite(v) || v < 0.0) throw ValidationError("budget config values must be finite and >= 0");
        }
        if (n_strips == 0 || pads_per_strip == 0) throw ValidationError("budget config needs at least one pad");
    }

    bool operator==(const BudgetConfig &) const = default;
};

struct MssRate {
    double timestamp_bps = 0.0;
    double data_bps = 0.0;
    double total_bps = 0.0;
};

inline MssRate mss_rate(const BudgetConfig &c) {
    c.validate();
    MssRate r;
    r.timestamp_bps = c.timestamp_bits * c.mss_rate_hz;
    r.data_bps = c.mss_rate_hz * c.mss_channels * c.bits_per_sample;
    r.total_bps = r.timestamp_bps + r.data_bps;
    return r;
}

/// Volumes are carried in whole bytes so sums are exact; MB is decimal.
struct ExperimentVolume {
    std::int64_t vss = 0;
    std::int64_t lss = 0;
    std::int64_t mss = 0;
    std::int64_t soh = 0;
    std::int64_t total = 0;
    std::int64_t lss_published = 0;
    std::int64_t lss_derived = 0;
    /// Published and derived LSS figures disagree.
    bool lss_discrepancy = false;
};

inline constexpr double kBytesPerMb = 1e6;

inline double to_mb(std::int64_t bytes) { return static_cast<double>(bytes) / kBytesPerMb; }

inline std::int64_t mb_to_bytes(double mb) { return std::llround(mb * kBytesPerMb); }

inline ExperimentVolume experiment_volume(const BudgetConfig &c, bool camera) {
    c.validate();
    ExperimentVolume v;
    v.mss = std::llround(mss_rate(c).total_bps * c.experiment_duration_s / 8.0);
    v.lss_published = mb_to_bytes(c.lss_mb_published);
    v.lss_derived = std::llround(static_cast<double>(frame_bytes(c.n_strips, c.pads_per_strip)) * c.frame_rate_hz *
                                 c.experiment_duration_s);
    v.lss_discrepancy = v.lss_published != v.lss_derived;
    v.lss = c.mode == BudgetMode::AsPublished ? v.lss_published : v.lss_derived;
    v.vss = camera ? mb_to_bytes(c.vss_mb) : 0;
    v.soh = mb_to_bytes(c.soh_mb);
    v.total = v.vss + v.lss + v.mss + v.soh;
    return v;
}

struct CampaignVolume {
    std::int64_t camera = 0;
    std::int64_t no_camera = 0;
    std::int64_t total = 0;

    bool operator==(const CampaignVolume &) const = default;
};

inline CampaignVolume campaign_volume(std::int64_t n_camera, std::int64_t n_no_camera, const BudgetConfig &c) {
    if (n_camera < 0 || n_no_camera < 0) throw ValidationError("experiment counts must be >= 0");
    CampaignVolume v;
    v.camera = n_camera * experiment_volume(c, true).total;
    v.no_camera = n_no_camera * experiment_volume(c, false).total;
    v.total = v.camera + v.no_camera;
    return v;
}

/// Whole-MB display rounding (half away from zero).
inline std::int64_t display_mb(std::int64_t bytes) {
    return (bytes + static_cast<std::int64_t>(kBytesPerMb / 2)) / static_cast<std::int64_t>(kBytesPerMb);
}

struct BudgetReport {
    BudgetConfig config;
    MssRate rate;
    std::size_t frame_size = 0;
    ExperimentVolume with_camera;
    ExperimentVolume without_camera;
    std::int64_t n_camera = 76;
    std::int64_t n_no_camera = 153;
    CampaignVolume campaign;
};

inline BudgetReport budget_report(const BudgetConfig &c, std::int64_t n_camera = 76, std::int64_t n_no_camera = 153) {
    BudgetReport r;
    r.config = c;
    r.rate = mss_rate(c);
    r.frame_size = frame_bytes(c.n_strips, c.pads_per_strip);
    r.with_camera = experiment_volume(c, true);
    r.without_camera = experiment_volume(c, false);
    r.n_camera = n_camera;
    r.n_no_camera = n_no_camera;
    r.campaign = campaign_volume(n_camera, n_no_camera, c);
    return r;
}

/// Shortest decimal form of an MB value (e.g. 126.75, 2.9, 104).
inline std::string format_mb(std::int64_t bytes) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", to_mb(bytes));
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

inline std::string render_budget(const BudgetReport &r) {
    std::string out;
    char line[256];
    auto add = [&](const char *fmt, auto... args) {
        std::snprintf(line, sizeof line, fmt, args...);
        out += line;
    };
    add("mode: %s\n\n", to_string(r.config.mode).c_str());
    add("%-22s %12s\n", "MSS stream", "bits/s");
    add("%-22s %12.0f\n", "timestamp", r.rate.timestamp_bps);
    add("%-22s %12.0f\n", "data", r.rate.data_bps);
    add("%-22s %12.0f\n", "total", r.rate.total_bps);
    add("\n%-22s %12zu\n\n", "LSS frame bytes", r.frame_size);
    add("%-22s %8s %8s %8s %8s %10s\n", "per experiment (MB)", "VSS", "LSS", "MSS", "SoH", "total");
    for (const auto *v : {&r.with_camera, &r.without_camera}) {
        add("%-22s %8s %8s %8s %8s %10s\n", v == &r.with_camera ? "with camera" : "without camera",
            format_mb(v->vss).c_str(), format_mb(v->lss).c_str(), format_mb(v->mss).c_str(),
            format_mb(v->soh).c_str(), format_mb(v->total).c_str());
    }
    if (r.with_camera.lss_discrepancy) {
        add("note: LSS published %s MB, derived from frame size %s MB\n", format_mb(r.with_camera.lss_published).c_str(),
            format_mb(r.with_camera.lss_derived).c_str());
    }
    add("\n%-22s %12s %12s\n", "campaign", "experiments", "MB");
    add("%-22s %12lld %12lld\n", "with camera", static_cast<long long>(r.n_camera),
        static_cast<long long>(display_mb(r.campaign.camera)));
    add("%-22s %12lld %12lld\n", "without camera", static_cast<long long>(r.n_no_camera),
        static_cast<long long>(display_mb(r.campaign.no_camera)));
    add("%-22s %12lld %12lld\n", "all", static_cast<long long>(r.n_camera + r.n_no_camera),
        static_cast<long long>(display_mb(r.campaign.total)));
    return out;
}

}  // namespace sloshlab::telemetry
