#ifndef SONO_KINEMATICS_HPP
#define SONO_KINEMATICS_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sono/common.hpp"

namespace sono {

// Marker roles per finger. M1/M2 sit on the metacarpal (base, head); P1/P2 on
// the proximal phalanx with P1 at the distal head and P2 at the joint-side
// base, so the two stored vectors M1->M2 and P1->P2 are anti-parallel when the
// finger is fully extended.
enum class Marker : int { M1 = 0, M2 = 1, P1 = 2, P2 = 3 };

inline constexpr int kMarkerCount = 16;  // 4 fingers x 4 markers

inline constexpr int marker_slot(Finger f, Marker m) {
    return static_cast<int>(f) * 4 + static_cast<int>(m);
}

/// One motion-capture sample: 16 marker positions plus occlusion flags.
struct MarkerFrame {
    double timestamp = 0.0;  // seconds, strictly increasing within a stream
    std::array<Vec3, kMarkerCount> positions{};
    std::array<bool, kMarkerCount> occluded{};

    const Vec3& at(Finger f, Marker m) const { return positions[marker_slot(f, m)]; }
    Vec3& at(Finger f, Marker m) { return positions[marker_slot(f, m)]; }
    bool finger_visible(Finger f) const;
};

/// MCP flexion per finger, degrees. 0 = fully extended. Values are clamped to
/// [0, 100]; `saturated` marks fingers whose raw angle exceeded 100 before the
/// clamp. The display convention puts full extension at 180.
struct McpAngles {
    std::array<double, kFingerCount> flexion{};
    std::array<bool, kFingerCount> saturated{};

    double operator[](Finger f) const { return flexion[static_cast<int>(f)]; }
    double& operator[](Finger f) { return flexion[static_cast<int>(f)]; }

    double display(Finger f) const { return 180.0 + flexion[static_cast<int>(f)]; }
};

inline constexpr double kMaxFlexionDeg = 100.0;

/// Clamps a raw flexion angle into a McpAngles slot, flagging saturation.
void set_flexion(McpAngles& a, Finger f, double raw_deg);

/// One ultrasound frame-capture pulse on the shared clock.
struct TriggerEvent {
    double timestamp = 0.0;  // seconds
    uint64_t frame_index = 0;
};

struct TimedAngles {
    double timestamp = 0.0;
    McpAngles angles;
};

/// Raw MCP flexion from one metacarpal/phalanx marker quadruple, in degrees
/// within [0, 180]. Full extension (P1->P2 anti-parallel to M1->M2) gives 0.
/// Throws DegenerateVector when either segment has zero length; `finger`
/// only labels the error message.
double mcp_angle(const Vec3& m1, const Vec3& m2, const Vec3& p1, const Vec3& p2,
                 Finger finger = Finger::Index);

/// Interpolation window for occluded markers. Gaps longer than this cannot be
/// recovered and invalidate the stream.
inline constexpr int kMaxOcclusionGap = 5;

/// Angles for every frame of a marker stream. Occlusion gaps of at most
/// kMaxOcclusionGap frames are filled by linear interpolation on the angle
/// (edge gaps hold the nearest visible value); anything longer throws
/// UnrecoverableOcclusion. Empty or non-monotonic streams throw DataError.
std::vector<TimedAngles> angles_from_stream(std::span<const MarkerFrame> frames);

/// Resamples mocap-derived angles onto ultrasound frame times: each trigger
/// takes the angle sample with the nearest timestamp, ties resolved toward the
/// earlier sample. Triggers outside the mocap span throw OutOfRange.
std::vector<McpAngles> align_to_frames(std::span<const TriggerEvent> triggers,
                                       std::span<const TimedAngles> mocap);

// Columnar text format for marker streams (see FORMATS.md): one row per
// frame, timestamp first, then x y z for each of the 16 markers in
// (index, middle, ring, pinky) x (M1, M2, P1, P2) order, then 16 occlusion
// bits in the same order.
std::string marker_stream_to_text(std::span<const MarkerFrame> frames);
std::vector<MarkerFrame> marker_stream_from_text(const std::string& text);

}  // namespace sono

#endif
