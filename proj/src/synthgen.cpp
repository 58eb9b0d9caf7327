#include "sono/synthgen.hpp"

#include <algorithm>
#include <cmath>

namespace sono {

namespace {

constexpr uint64_t kStreamTrajectory = 0;
constexpr uint64_t kStreamSignature = 1;
constexpr uint64_t kStreamSpeckle = 2;

uint64_t substream(uint64_t seed, uint64_t k) {
    return splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * (k + 1)));
}

}  // namespace

const char* config_code(ConfigId id) {
    static const char* codes[] = {"C1", "C2", "C3", "C4",  "C5",  "C6",
                                  "C7", "C8", "C9", "C10", "C11", "Open"};
    return codes[static_cast<int>(id)];
}

const char* config_name(ConfigId id) {
    static const char* names[] = {"IndFlex",        "MidFlex",     "RinFlex",  "PinFlex",
                                  "IndPinch",       "IndMidPinch", "IndMidRinPinch",
                                  "AllPinch",       "MidRinPinch", "Fist",     "Hook",
                                  "Open"};
    return names[static_cast<int>(id)];
}

ConfigId config_from_code(const std::string& code) {
    for (int i = 0; i <= static_cast<int>(ConfigId::Open); ++i)
        if (code == config_code(static_cast<ConfigId>(i))) return static_cast<ConfigId>(i);
    throw ConfigError("unknown configuration code '" + code + "'");
}

HandConfiguration standard_configuration(ConfigId id) {
    constexpr double kFlex = 60.0;   // single-finger full flexion
    constexpr double kPinch = 45.0;  // fingertip-to-thumb contact
    constexpr double kFist = 90.0;
    constexpr double kHook = 3.0;    // residual MCP offset of the static hook

    HandConfiguration c;
    c.id = id;
    auto set = [&](std::initializer_list<Finger> fingers, double amp) {
        for (Finger f : fingers) c.involvement[static_cast<int>(f)] = amp;
    };
    using enum Finger;
    switch (id) {
        case ConfigId::C1: set({Index}, kFlex); break;
        case ConfigId::C2: set({Middle}, kFlex); break;
        case ConfigId::C3: set({Ring}, kFlex); break;
        case ConfigId::C4: set({Pinky}, kFlex); break;
        case ConfigId::C5: set({Index}, kPinch); break;
        case ConfigId::C6: set({Index, Middle}, kPinch); break;
        case ConfigId::C7: set({Index, Middle, Ring}, kPinch); break;
        case ConfigId::C8: set({Index, Middle, Ring, Pinky}, kPinch); break;
        case ConfigId::C9: set({Middle, Ring}, kPinch); break;
        case ConfigId::C10: set({Index, Middle, Ring, Pinky}, kFist); break;
        case ConfigId::C11:
            set({Index, Middle, Ring, Pinky}, kHook);
            c.mcp_frozen = true;
            break;
        case ConfigId::Open: break;
    }
    return c;
}

double speed_hz(Speed s) {
    switch (s) {
        case Speed::Slow: return 0.5;
        case Speed::Medium: return 1.0;
        case Speed::Fast: return 2.0;
    }
    return 1.0;
}

const char* speed_name(Speed s) {
    switch (s) {
        case Speed::Slow: return "slow";
        case Speed::Medium: return "medium";
        case Speed::Fast: return "fast";
    }
    return "?";
}

Speed speed_from_name(const std::string& name) {
    for (Speed s : {Speed::Slow, Speed::Medium, Speed::Fast})
        if (name == speed_name(s)) return s;
    throw ConfigError("unknown speed '" + name + "'");
}

double cycle_period_s(Speed s) {
    // The cue alternates rest/motion at speed_hz; a full rest->flex->rest
    // cycle spans two alternations.
    return 2.0 / speed_hz(s);
}

namespace {

uint64_t integral_count(double value, const char* what) {
    const double rounded = std::round(value);
    if (rounded < 1.0 || std::fabs(value - rounded) > 1e-6)
        throw ConfigError(std::string(what) + " must come out to a positive integer, got " +
                          format_double(value));
    return static_cast<uint64_t>(rounded);
}

}  // namespace

uint64_t SessionSpec::frame_count() const {
    return integral_count(duration_s * frame_rate_hz, "duration * frame_rate");
}

uint64_t SessionSpec::mocap_count() const {
    return integral_count(duration_s * kMocapRateHz, "duration * mocap rate");
}

void validate(const SessionSpec& spec) {
    std::string problems;
    auto flag = [&](const std::string& msg) {
        if (!problems.empty()) problems += "; ";
        problems += msg;
    };
    if (!(spec.duration_s > 0.0)) flag("duration must be positive");
    if (!(spec.frame_rate_hz > 0.0)) flag("frame rate must be positive");
    if (spec.image_height < 8) flag("image height must be at least 8");
    if (spec.image_width < 1) flag("image width must be at least 1");
    if (!(spec.noise_level >= 0.0 && spec.noise_level <= 1.0))
        flag("noise level must lie in [0, 1]");
    for (Finger f : kFingers) {
        const double a = spec.configuration.involvement[static_cast<int>(f)];
        if (!(a >= 0.0 && a <= kMaxFlexionDeg))
            flag(std::string("involvement for ") + finger_name(f) + " must lie in [0, 100]");
    }
    if (!problems.empty()) throw ConfigError("invalid session spec: " + problems);
    spec.frame_count();
    spec.mocap_count();
}

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

namespace {

// Continuous flexion curve shared by the 25 Hz frame clock and the 100 Hz
// mocap clock, with one jittered amplitude factor per cycle.
struct TrajectoryShape {
    double period_s = 0.0;
    bool frozen = false;
    std::array<double, kFingerCount> base_amp{};
    std::vector<double> cycle_factor;

    double flexion_at(Finger f, double t) const {
        const double amp0 = base_amp[static_cast<int>(f)];
        if (frozen) return amp0;
        size_t k = static_cast<size_t>(t / period_s);
        if (k >= cycle_factor.size()) k = cycle_factor.size() - 1;
        const double frac = (t - static_cast<double>(k) * period_s) / period_s;
        return amp0 * cycle_factor[k] * 0.5 * (1.0 - std::cos(2.0 * kPi * frac));
    }
};

TrajectoryShape make_shape(const SessionSpec& spec) {
    TrajectoryShape shape;
    shape.period_s = cycle_period_s(spec.speed);
    shape.frozen = spec.configuration.mcp_frozen;
    shape.base_amp = spec.configuration.involvement;
    const size_t n_cycles =
        static_cast<size_t>(std::ceil(spec.duration_s / shape.period_s - 1e-9));
    shape.cycle_factor.resize(std::max<size_t>(n_cycles, 1));
    Rng rng(substream(spec.seed, kStreamTrajectory));
    for (double& f : shape.cycle_factor) f = 1.0 + kCycleJitter * rng.uniform(-1.0, 1.0);
    return shape;
}

McpAngles angles_at(const TrajectoryShape& shape, double t) {
    McpAngles a;
    for (Finger f : kFingers) set_flexion(a, f, shape.flexion_at(f, t));
    return a;
}

}  // namespace

std::vector<McpAngles> trajectory(const SessionSpec& spec) {
    validate(spec);
    const TrajectoryShape shape = make_shape(spec);
    const uint64_t n = spec.frame_count();
    std::vector<McpAngles> out(n);
    for (uint64_t i = 0; i < n; ++i)
        out[i] = angles_at(shape, static_cast<double>(i) / spec.frame_rate_hz);
    return out;
}

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

namespace {

// Per-session acquisition signature: a static per-column intensity offset and
// a vertical probe offset, both fixed for the whole session.
struct SessionSignature {
    double probe_offset_px = 0.0;
    std::vector<double> column_offset;
};

SessionSignature make_signature(const SessionSpec& spec) {
    SessionSignature sig;
    Rng rng(substream(spec.seed, kStreamSignature));
    const double quadrant = spec.image_height / 4.0;
    sig.probe_offset_px = rng.uniform(-1.0, 1.0) * kProbeOffsetFrac * quadrant;
    sig.column_offset.resize(static_cast<size_t>(spec.image_width));
    for (double& c : sig.column_offset) c = rng.uniform01() * kSessionTextureAmp;
    return sig;
}

UltrasoundFrame render_frame(const McpAngles& angles, const SessionSpec& spec,
                             const SessionSignature& sig, Rng& noise_rng) {
    const int h = spec.image_height;
    const int w = spec.image_width;
    UltrasoundFrame frame;
    frame.height = h;
    frame.width = w;
    frame.pixels.assign(static_cast<size_t>(h) * w, 0.0f);

    const double quadrant = h / 4.0;

    // Row profile: background plus each finger's band inside its quadrant.
    std::vector<double> row_profile(static_cast<size_t>(h), kBackgroundLevel);
    for (Finger f : kFingers) {
        const int fi = static_cast<int>(f);
        const double flex = angles[f];
        const double center = band_center_row(spec, f, flex, sig.probe_offset_px);
        const double sigma = kBandSigmaFrac * quadrant *
                             (1.0 - kBandWidthMod + 2.0 * kBandWidthMod * flex / kMaxFlexionDeg);
        const int r0 = static_cast<int>(std::floor(fi * quadrant));
        const int r1 = std::min(h, static_cast<int>(std::floor((fi + 1) * quadrant)));
        for (int r = r0; r < r1; ++r) {
            const double d = (r - center) / sigma;
            row_profile[static_cast<size_t>(r)] += kBandAmplitude * std::exp(-0.5 * d * d);
        }
    }

    const bool noisy = spec.noise_level > 0.0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double v = row_profile[static_cast<size_t>(r)] + sig.column_offset[static_cast<size_t>(c)];
            if (noisy) v *= 1.0 + spec.noise_level * noise_rng.normal();
            frame.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return frame;
}

}  // namespace

double band_drift_px_per_degree(const SessionSpec& spec) {
    return kBandDriftFracPerDeg * (spec.image_height / 4.0);
}

double band_center_row(const SessionSpec& spec, Finger f, double flexion_deg,
                       double probe_offset_px) {
    const double quadrant = spec.image_height / 4.0;
    return static_cast<int>(f) * quadrant +
           (kBandRestFrac + kBandDriftFracPerDeg * flexion_deg) * quadrant + probe_offset_px;
}

UltrasoundFrame forward_model(const McpAngles& angles, const SessionSpec& spec,
                              Rng& noise_rng) {
    validate(spec);
    return render_frame(angles, spec, make_signature(spec), noise_rng);
}

// ---------------------------------------------------------------------------
// Session generation
// ---------------------------------------------------------------------------

namespace {

// Marker pose reproducing a given flexion. The metacarpal lies along +x; the
// phalanx markers are stored distal-first so the stored vectors are
// anti-parallel at full extension.
void pose_finger(MarkerFrame& fr, Finger f, double flexion_deg) {
    constexpr double kMetacarpalLen = 45.0;  // mm
    constexpr double kPhalanxLen = 32.0;
    constexpr double kJointGap = 3.0;
    constexpr double kFingerSpacing = 25.0;

    const double y = kFingerSpacing * static_cast<int>(f);
    const double th = rad_from_deg(flexion_deg);
    const Vec3 m1{0.0, y, 0.0};
    const Vec3 m2{kMetacarpalLen, y, 0.0};
    const Vec3 joint{kMetacarpalLen + kJointGap, y, 0.0};
    const Vec3 distal = joint + Vec3{std::cos(th), 0.0, -std::sin(th)} * kPhalanxLen;
    fr.at(f, Marker::M1) = m1;
    fr.at(f, Marker::M2) = m2;
    fr.at(f, Marker::P1) = distal;
    fr.at(f, Marker::P2) = joint;
}

}  // namespace

Session generate_session(const SessionSpec& spec) {
    validate(spec);
    Session session;
    session.spec = spec;

    const TrajectoryShape shape = make_shape(spec);
    const SessionSignature sig = make_signature(spec);
    const uint64_t n_frames = spec.frame_count();
    const uint64_t n_mocap = spec.mocap_count();

    session.angles.reserve(n_frames);
    session.triggers.reserve(n_frames);
    session.frames.reserve(n_frames);
    Rng speckle(substream(spec.seed, kStreamSpeckle));
    for (uint64_t i = 0; i < n_frames; ++i) {
        const double t = static_cast<double>(i) / spec.frame_rate_hz;
        const McpAngles a = angles_at(shape, t);
        session.angles.push_back(a);
        session.triggers.push_back({t, i});
        UltrasoundFrame frame = render_frame(a, spec, sig, speckle);
        frame.frame_index = i;
        session.frames.push_back(std::move(frame));
    }

    session.mocap.reserve(n_mocap);
    for (uint64_t j = 0; j < n_mocap; ++j) {
        const double t = static_cast<double>(j) / kMocapRateHz;
        MarkerFrame fr;
        fr.timestamp = t;
        for (Finger f : kFingers) pose_finger(fr, f, shape.flexion_at(f, t));
        session.mocap.push_back(fr);
    }
    return session;
}

}  // namespace sono
