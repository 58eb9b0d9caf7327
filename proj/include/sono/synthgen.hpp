#ifndef SONO_SYNTHGEN_HPP
#define SONO_SYNTHGEN_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sono/common.hpp"
#include "sono/kinematics.hpp"

namespace sono {

// ---------------------------------------------------------------------------
// Hand configurations. C1-C11 are the classified movement classes; Open is
// the shared rest posture.
// ---------------------------------------------------------------------------

enum class ConfigId : int {
    C1 = 0,   // IndFlex
    C2,       // MidFlex
    C3,       // RinFlex
    C4,       // PinFlex
    C5,       // IndPinch
    C6,       // IndMidPinch
    C7,       // IndMidRinPinch
    C8,       // AllPinch
    C9,       // MidRinPinch
    C10,      // Fist
    C11,      // Hook
    Open = 11
};

inline constexpr int kClassCount = 11;  // C1..C11; Open is the rest state

const char* config_code(ConfigId id);    // "C1".."C11", "Open"
const char* config_name(ConfigId id);    // "IndFlex".."Hook", "Open"
ConfigId config_from_code(const std::string& code);  // throws ConfigError

struct HandConfiguration {
    ConfigId id = ConfigId::Open;
    std::array<double, kFingerCount> involvement{};  // peak MCP flexion, degrees
    // Hook keeps the MCP static: the trajectory holds `involvement` as a
    // constant instead of cycling to it.
    bool mcp_frozen = false;
};

// Default involvement amplitudes: 60 for the single-finger flexes, 45 for the
// pinches, 90 for the fist, a 3-degree static hold for the hook.
HandConfiguration standard_configuration(ConfigId id);

// ---------------------------------------------------------------------------
// Session specification.
// ---------------------------------------------------------------------------

enum class Speed : int { Slow = 0, Medium = 1, Fast = 2 };

double speed_hz(Speed s);  // 0.5, 1, 2: rest/motion alternation rate
const char* speed_name(Speed s);
Speed speed_from_name(const std::string& name);  // throws ConfigError

inline constexpr double kMocapRateHz = 100.0;

struct SessionSpec {
    HandConfiguration configuration = standard_configuration(ConfigId::Open);
    Speed speed = Speed::Medium;
    double duration_s = 56.0;
    double frame_rate_hz = 25.0;
    int image_height = 636;
    int image_width = 256;
    uint64_t seed = 0;
    double noise_level = 0.1;  // speckle strength, [0, 1]

    /// duration * frame_rate; throws ConfigError when not an integer.
    uint64_t frame_count() const;
    uint64_t mocap_count() const;
};

void validate(const SessionSpec& spec);  // throws ConfigError

struct UltrasoundFrame {
    int height = 0;
    int width = 0;
    uint64_t frame_index = 0;
    std::vector<float> pixels;  // row-major, intensities in [0, 1]

    float at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
    float& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
};

struct Session {
    SessionSpec spec;
    std::vector<UltrasoundFrame> frames;
    std::vector<McpAngles> angles;       // one per frame, same clock as triggers
    std::vector<TriggerEvent> triggers;  // one per frame
    std::vector<MarkerFrame> mocap;      // raw marker stream at kMocapRateHz
};

// ---------------------------------------------------------------------------
// Trajectory. Each finger follows a raised-cosine rest->flex->rest cycle of
// period 2/speed_hz seconds with a seeded +/-5% per-cycle amplitude jitter.
// ---------------------------------------------------------------------------

inline constexpr double kCycleJitter = 0.05;

/// Full alternation period in seconds (one rest->flex->rest cycle).
double cycle_period_s(Speed s);

/// Per-frame ground-truth angles, sampled at i / frame_rate.
std::vector<McpAngles> trajectory(const SessionSpec& spec);

// ---------------------------------------------------------------------------
// Forward model. Renders one bright Gaussian band per finger inside that
// finger's horizontal quadrant of the image. The band's center row drifts
// linearly with flexion and its width modulates +/-20% across the flexion
// range. Two session-level signatures make frames from different acquisitions
// distinguishable the way probe placement does in practice: a static
// per-column intensity offset and a small vertical probe offset, both drawn
// once per session from the spec seed. Multiplicative speckle scaled by
// noise_level is drawn from the caller's RNG stream.
// ---------------------------------------------------------------------------

inline constexpr double kBandRestFrac = 0.25;         // rest center, fraction of quadrant
inline constexpr double kBandDriftFracPerDeg = 0.0055;  // center drift per degree
inline constexpr double kBandSigmaFrac = 0.07;        // base width, fraction of quadrant
inline constexpr double kBandWidthMod = 0.2;          // +/- width modulation across range
inline constexpr double kBandAmplitude = 0.8;
inline constexpr double kBackgroundLevel = 0.06;
inline constexpr double kSessionTextureAmp = 0.04;    // per-column signature amplitude
inline constexpr double kProbeOffsetFrac = 0.015;     // probe offset, fraction of quadrant

/// Band drift in pixels per degree of flexion at the spec's image height.
double band_drift_px_per_degree(const SessionSpec& spec);

/// Band center row (continuous) for a finger at the given flexion.
double band_center_row(const SessionSpec& spec, Finger f, double flexion_deg,
                       double probe_offset_px = 0.0);

UltrasoundFrame forward_model(const McpAngles& angles, const SessionSpec& spec,
                              Rng& noise_rng);

// ---------------------------------------------------------------------------
// Full session generation: trajectory + rendered frames + triggers + a 100 Hz
// synthetic marker stream posed so that the kinematics path reproduces the
// trajectory angles.
// ---------------------------------------------------------------------------

Session generate_session(const SessionSpec& spec);

}  // namespace sono

#endif
