#include "sono/kinematics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>

namespace sono {

bool MarkerFrame::finger_visible(Finger f) const {
    for (int m = 0; m < 4; ++m)
        if (occluded[static_cast<int>(f) * 4 + m]) return false;
    return true;
}

void set_flexion(McpAngles& a, Finger f, double raw_deg) {
    int i = static_cast<int>(f);
    if (raw_deg > kMaxFlexionDeg) {
        a.flexion[i] = kMaxFlexionDeg;
        a.saturated[i] = true;
    } else {
        a.flexion[i] = std::max(raw_deg, 0.0);
        a.saturated[i] = false;
    }
}

double mcp_angle(const Vec3& m1, const Vec3& m2, const Vec3& p1, const Vec3& p2,
                 Finger finger) {
    const Vec3 meta = m2 - m1;
    const Vec3 phal = p2 - p1;
    const double nm = norm(meta);
    const double np = norm(phal);
    if (!(is_finite(m1) && is_finite(m2) && is_finite(p1) && is_finite(p2)))
        throw DataError(std::string("non-finite marker position for ") + finger_name(finger));
    if (nm == 0.0 || np == 0.0)
        throw DegenerateVector(std::string("zero-length ") +
                               (nm == 0.0 ? "metacarpal" : "phalanx") + " segment for " +
                               finger_name(finger));

    double c = dot(meta, phal) / (nm * np);
    c = std::clamp(c, -1.0, 1.0);
    const double between = deg_from_rad(std::acos(c));  // [0, 180]
    return std::clamp(180.0 - between, 0.0, 180.0);
}

namespace {

// Raw per-finger angle series with occlusion gaps marked.
struct FingerSeries {
    std::vector<double> angle;
    std::vector<bool> valid;
};

void fill_gaps(FingerSeries& s, Finger finger) {
    const size_t n = s.valid.size();
    size_t first_valid = n, last_valid = n;
    for (size_t i = 0; i < n; ++i) {
        if (s.valid[i]) {
            if (first_valid == n) first_valid = i;
            last_valid = i;
        }
    }
    if (first_valid == n)
        throw UnrecoverableOcclusion(std::string("all frames occluded for ") +
                                     finger_name(finger));

    auto gap_error = [&](size_t len) {
        throw UnrecoverableOcclusion(std::string("occlusion gap of ") + std::to_string(len) +
                                     " frames for " + finger_name(finger) + " exceeds " +
                                     std::to_string(kMaxOcclusionGap));
    };

    // Leading and trailing gaps hold the nearest visible angle.
    if (first_valid > 0) {
        if (first_valid > static_cast<size_t>(kMaxOcclusionGap)) gap_error(first_valid);
        for (size_t i = 0; i < first_valid; ++i) s.angle[i] = s.angle[first_valid];
    }
    if (last_valid + 1 < n) {
        const size_t len = n - 1 - last_valid;
        if (len > static_cast<size_t>(kMaxOcclusionGap)) gap_error(len);
        for (size_t i = last_valid + 1; i < n; ++i) s.angle[i] = s.angle[last_valid];
    }

    // Interior gaps interpolate linearly between the bracketing frames.
    size_t i = first_valid;
    while (i <= last_valid) {
        if (s.valid[i]) {
            ++i;
            continue;
        }
        size_t j = i;
        while (!s.valid[j]) ++j;  // j <= last_valid by construction
        const size_t len = j - i;
        if (len > static_cast<size_t>(kMaxOcclusionGap)) gap_error(len);
        const double a0 = s.angle[i - 1];
        const double a1 = s.angle[j];
        for (size_t k = i; k < j; ++k) {
            const double t = static_cast<double>(k - (i - 1)) / static_cast<double>(j - (i - 1));
            s.angle[k] = a0 + (a1 - a0) * t;
        }
        i = j;
    }
}

}  // namespace

std::vector<TimedAngles> angles_from_stream(std::span<const MarkerFrame> frames) {
    if (frames.empty()) throw DataError("empty marker stream");
    for (size_t i = 1; i < frames.size(); ++i)
        if (!(frames[i].timestamp > frames[i - 1].timestamp))
            throw DataError("marker timestamps must strictly increase (frame " +
                            std::to_string(i) + ")");

    std::array<FingerSeries, kFingerCount> series;
    for (auto& s : series) {
        s.angle.assign(frames.size(), 0.0);
        s.valid.assign(frames.size(), false);
    }

    for (size_t i = 0; i < frames.size(); ++i) {
        const MarkerFrame& fr = frames[i];
        for (Finger f : kFingers) {
            if (!fr.finger_visible(f)) continue;
            auto& s = series[static_cast<int>(f)];
            s.angle[i] = mcp_angle(fr.at(f, Marker::M1), fr.at(f, Marker::M2),
                                   fr.at(f, Marker::P1), fr.at(f, Marker::P2), f);
            s.valid[i] = true;
        }
    }

    for (Finger f : kFingers) fill_gaps(series[static_cast<int>(f)], f);

    std::vector<TimedAngles> out(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) {
        out[i].timestamp = frames[i].timestamp;
        for (Finger f : kFingers)
            set_flexion(out[i].angles, f, series[static_cast<int>(f)].angle[i]);
    }
    return out;
}

std::vector<McpAngles> align_to_frames(std::span<const TriggerEvent> triggers,
                                       std::span<const TimedAngles> mocap) {
    if (triggers.empty()) throw DataError("no trigger events");
    if (mocap.empty()) throw DataError("no mocap samples");

    std::vector<McpAngles> out;
    out.reserve(triggers.size());
    for (const TriggerEvent& trig : triggers) {
        if (trig.timestamp < mocap.front().timestamp || trig.timestamp > mocap.back().timestamp)
            throw OutOfRange("trigger for frame " + std::to_string(trig.frame_index) +
                             " at t=" + format_double(trig.timestamp) +
                             " outside mocap span");
        // First sample with timestamp >= trigger; the nearest sample is that
        // one or its predecessor, ties going to the earlier.
        auto it = std::lower_bound(mocap.begin(), mocap.end(), trig.timestamp,
                                   [](const TimedAngles& s, double t) { return s.timestamp < t; });
        size_t hi = static_cast<size_t>(it - mocap.begin());
        size_t pick;
        if (hi == 0) {
            pick = 0;
        } else if (hi == mocap.size()) {
            pick = mocap.size() - 1;
        } else {
            const double d_lo = trig.timestamp - mocap[hi - 1].timestamp;
            const double d_hi = mocap[hi].timestamp - trig.timestamp;
            pick = (d_lo <= d_hi) ? hi - 1 : hi;
        }
        out.push_back(mocap[pick].angles);
    }
    return out;
}

std::string marker_stream_to_text(std::span<const MarkerFrame> frames) {
    std::string out;
    out += "# t";
    for (Finger f : kFingers)
        for (const char* m : {"M1", "M2", "P1", "P2"})
            for (const char* c : {"x", "y", "z"})
                out += std::string(" ") + finger_name(f) + "_" + m + "_" + c;
    for (Finger f : kFingers)
        for (const char* m : {"M1", "M2", "P1", "P2"})
            out += std::string(" occ_") + finger_name(f) + "_" + m;
    out += "\n";
    for (const MarkerFrame& fr : frames) {
        out += format_double(fr.timestamp);
        for (const Vec3& p : fr.positions) {
            out += " " + format_double(p.x);
            out += " " + format_double(p.y);
            out += " " + format_double(p.z);
        }
        for (bool occ : fr.occluded) out += occ ? " 1" : " 0";
        out += "\n";
    }
    return out;
}

std::vector<MarkerFrame> marker_stream_from_text(const std::string& text) {
    std::vector<MarkerFrame> frames;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        MarkerFrame fr;
        if (!(row >> fr.timestamp))
            throw FormatError("marker stream line " + std::to_string(line_no) + ": bad timestamp");
        for (Vec3& p : fr.positions)
            if (!(row >> p.x >> p.y >> p.z))
                throw FormatError("marker stream line " + std::to_string(line_no) +
                                  ": expected 48 coordinates");
        for (int i = 0; i < kMarkerCount; ++i) {
            int bit;
            if (!(row >> bit))
                throw FormatError("marker stream line " + std::to_string(line_no) +
                                  ": expected 16 occlusion bits");
            fr.occluded[i] = bit != 0;
        }
        frames.push_back(fr);
    }
    return frames;
}

}  // namespace sono
