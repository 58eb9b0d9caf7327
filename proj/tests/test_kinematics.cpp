#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sono/kinematics.hpp"

using namespace sono;

namespace {

// Marker quadruple for a chosen flexion, built directly from the angle
// convention: metacarpal along +x, phalanx vector rotated away from the
// anti-parallel rest direction by the flexion angle.
struct Quad {
    Vec3 m1, m2, p1, p2;
};

Quad quad_for(double flexion_deg) {
    const double th = rad_from_deg(flexion_deg);
    Quad q;
    q.m1 = {0.0, 0.0, 0.0};
    q.m2 = {1.0, 0.0, 0.0};
    q.p1 = {2.0, 0.0, 0.0};
    q.p2 = q.p1 + Vec3{-std::cos(th), -std::sin(th), 0.0};
    return q;
}

MarkerFrame frame_at(double t, double flexion_deg) {
    MarkerFrame fr;
    fr.timestamp = t;
    for (Finger f : kFingers) {
        const Quad q = quad_for(flexion_deg);
        const Vec3 shift{0.0, 10.0 * static_cast<int>(f), 0.0};
        fr.at(f, Marker::M1) = q.m1 + shift;
        fr.at(f, Marker::M2) = q.m2 + shift;
        fr.at(f, Marker::P1) = q.p1 + shift;
        fr.at(f, Marker::P2) = q.p2 + shift;
    }
    return fr;
}

Vec3 rotate(const Vec3& v, const Vec3& axis_unit, double angle_rad) {
    // Rodrigues rotation.
    const Vec3& k = axis_unit;
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    const Vec3 cross{k.y * v.z - k.z * v.y, k.z * v.x - k.x * v.z, k.x * v.y - k.y * v.x};
    const double kd = dot(k, v);
    return Vec3{v.x * c + cross.x * s + k.x * kd * (1 - c),
                v.y * c + cross.y * s + k.y * kd * (1 - c),
                v.z * c + cross.z * s + k.z * kd * (1 - c)};
}

}  // namespace

TEST_CASE("flexion from the four reference postures") {
    // Extension: anti-parallel vectors.
    CHECK(mcp_angle({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
    for (double deg : {30.0, 60.0, 90.0}) {
        const Quad q = quad_for(deg);
        const double flex = mcp_angle(q.m1, q.m2, q.p1, q.p2);
        CHECK(std::fabs(flex - deg) < 1e-9);
        McpAngles a;
        set_flexion(a, Finger::Index, flex);
        CHECK(std::fabs(a.display(Finger::Index) - (180.0 + deg)) < 1e-9);
    }
}

TEST_CASE("parallel vectors read as 180 and saturate the angle record") {
    const double flex = mcp_angle({0, 0, 0}, {1, 0, 0}, {0, 0, 0}, {1, 0, 0});
    CHECK(flex == doctest::Approx(180.0));
    McpAngles a;
    set_flexion(a, Finger::Ring, flex);
    CHECK(a[Finger::Ring] == 100.0);
    CHECK(a.saturated[static_cast<int>(Finger::Ring)]);
}

TEST_CASE("scale does not change the angle") {
    CHECK(mcp_angle({0, 0, 0}, {2, 0, 0}, {0, 5, 0}, {-2, 5, 0}) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("degenerate segments raise and name the finger") {
    CHECK_THROWS_AS(mcp_angle({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1, 0, 0}, Finger::Pinky),
                    DegenerateVector);
    try {
        mcp_angle({1, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1, 0, 0}, Finger::Pinky);
    } catch (const DegenerateVector& e) {
        CHECK(std::string(e.what()).find("pinky") != std::string::npos);
    }
}

TEST_CASE("angle is invariant under rigid motion and positive scaling") {
    Rng rng(20240811);
    for (int trial = 0; trial < 200; ++trial) {
        const double deg = rng.uniform(0.0, 180.0);
        Quad q = quad_for(deg);
        const double base = mcp_angle(q.m1, q.m2, q.p1, q.p2);

        Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
        const double n = norm(axis);
        axis = axis * (1.0 / (n > 0 ? n : 1.0));
        const double angle = rng.uniform(0.0, 2 * kPi);
        const Vec3 shift{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
        const double scale = rng.uniform(0.1, 10.0);

        auto xf = [&](const Vec3& v) { return rotate(v, axis, angle) * scale + shift; };
        const double moved = mcp_angle(xf(q.m1), xf(q.m2), xf(q.p1), xf(q.p2));
        CHECK(std::fabs(moved - base) < 1e-9);
    }
}

TEST_CASE("angle depends only on the difference vectors") {
    const Quad q = quad_for(42.0);
    const Vec3 c{3.0, -7.0, 11.0};
    CHECK(mcp_angle(q.m1 + c, q.m2 + c, q.p1, q.p2) ==
          doctest::Approx(mcp_angle(q.m1, q.m2, q.p1, q.p2)).epsilon(1e-12));
}

TEST_CASE("static extended stream produces zero flexion throughout") {
    std::vector<MarkerFrame> frames{frame_at(0.0, 0.0), frame_at(0.01, 0.0), frame_at(0.02, 0.0)};
    const auto out = angles_from_stream(frames);
    REQUIRE(out.size() == 3);
    for (const TimedAngles& ta : out)
        for (Finger f : kFingers) {
            CHECK(ta.angles[f] == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(ta.angles.display(f) - ta.angles[f] == 180.0);
        }
}

TEST_CASE("single occluded frame interpolates between its neighbors") {
    // Flexion ramp 0,10,20,30,40; the middle frame loses index P2. The
    // bracketing angles are 10 and 30, so the filled value is their midpoint.
    std::vector<MarkerFrame> frames;
    for (int i = 0; i < 5; ++i) frames.push_back(frame_at(0.01 * i, 10.0 * i));
    frames[2].occluded[marker_slot(Finger::Index, Marker::P2)] = true;

    const auto out = angles_from_stream(frames);
    REQUIRE(out.size() == 5);
    const double expected = (10.0 + 30.0) / 2.0;
    CHECK(std::fabs(out[2].angles[Finger::Index] - expected) < 1e-9);
    // Other fingers were visible and keep their measured angle.
    CHECK(std::fabs(out[2].angles[Finger::Middle] - 20.0) < 1e-9);
}

TEST_CASE("two-frame interior gap interpolates at thirds") {
    std::vector<MarkerFrame> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(frame_at(0.01 * i, 30.0 * i));
    frames[1].occluded[marker_slot(Finger::Middle, Marker::M1)] = true;
    frames[2].occluded[marker_slot(Finger::Middle, Marker::M1)] = true;

    const auto out = angles_from_stream(frames);
    CHECK(std::fabs(out[1].angles[Finger::Middle] - 30.0) < 1e-9);
    CHECK(std::fabs(out[2].angles[Finger::Middle] - 60.0) < 1e-9);
}

TEST_CASE("occlusion gaps beyond the window are unrecoverable") {
    std::vector<MarkerFrame> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(frame_at(0.01 * i, 5.0));
    for (int i = 2; i < 8; ++i)  // 6-frame gap
        frames[i].occluded[marker_slot(Finger::Pinky, Marker::P1)] = true;
    CHECK_THROWS_AS(angles_from_stream(frames), UnrecoverableOcclusion);
}

TEST_CASE("finger occluded everywhere is unrecoverable") {
    std::vector<MarkerFrame> frames;
    for (int i = 0; i < 3; ++i) {
        frames.push_back(frame_at(0.01 * i, 0.0));
        frames.back().occluded[marker_slot(Finger::Ring, Marker::M2)] = true;
    }
    CHECK_THROWS_AS(angles_from_stream(frames), UnrecoverableOcclusion);
}

TEST_CASE("empty or non-monotonic streams are rejected") {
    CHECK_THROWS_AS(angles_from_stream(std::vector<MarkerFrame>{}), DataError);
    std::vector<MarkerFrame> frames{frame_at(0.1, 0.0), frame_at(0.1, 0.0)};
    CHECK_THROWS_AS(angles_from_stream(frames), DataError);
}

namespace {

std::vector<TimedAngles> mocap_at(std::initializer_list<double> times) {
    std::vector<TimedAngles> out;
    double mark = 0.0;
    for (double t : times) {
        TimedAngles ta;
        ta.timestamp = t;
        ta.angles[Finger::Index] = mark;  // distinct value tags each sample
        mark += 1.0;
        out.push_back(ta);
    }
    return out;
}

}  // namespace

TEST_CASE("alignment picks exact matches") {
    const auto mocap = mocap_at({0.00, 0.01, 0.04});
    const std::vector<TriggerEvent> trig{{0.00, 0}, {0.04, 1}};
    const auto out = align_to_frames(trig, mocap);
    REQUIRE(out.size() == 2);
    CHECK(out[0][Finger::Index] == 0.0);
    CHECK(out[1][Finger::Index] == 2.0);
}

TEST_CASE("alignment picks the nearest sample") {
    const auto mocap = mocap_at({0.00, 0.03});
    const std::vector<TriggerEvent> trig{{0.02, 0}};
    const auto out = align_to_frames(trig, mocap);
    CHECK(out[0][Finger::Index] == 1.0);  // t=0.03 is nearest
}

TEST_CASE("alignment ties break toward the earlier sample") {
    const auto mocap = mocap_at({0.00, 0.03});
    const std::vector<TriggerEvent> trig{{0.015, 0}};
    const auto out = align_to_frames(trig, mocap);
    CHECK(out[0][Finger::Index] == 0.0);
}

TEST_CASE("triggers outside the mocap span are out of range") {
    const auto mocap = mocap_at({0.01, 0.02});
    CHECK_THROWS_AS(align_to_frames(std::vector<TriggerEvent>{{0.05, 7}}, mocap), OutOfRange);
    try {
        align_to_frames(std::vector<TriggerEvent>{{0.05, 7}}, mocap);
    } catch (const OutOfRange& e) {
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }
}

TEST_CASE("alignment output length always equals trigger count") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n_mocap = 2 + static_cast<size_t>(rng.uniform01() * 40);
        std::vector<TimedAngles> mocap(n_mocap);
        double t = 0.0;
        for (auto& ta : mocap) {
            t += rng.uniform(0.001, 0.05);
            ta.timestamp = t;
        }
        const size_t n_trig = 1 + static_cast<size_t>(rng.uniform01() * 30);
        std::vector<TriggerEvent> trig(n_trig);
        for (size_t i = 0; i < n_trig; ++i)
            trig[i] = {rng.uniform(mocap.front().timestamp, mocap.back().timestamp), i};
        CHECK(align_to_frames(trig, mocap).size() == n_trig);
    }
}

TEST_CASE("marker stream text round trip") {
    std::vector<MarkerFrame> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(frame_at(0.017 * i + 0.001, 13.7 * i));
    frames[1].occluded[5] = true;
    const std::string text = marker_stream_to_text(frames);
    const auto back = marker_stream_from_text(text);
    REQUIRE(back.size() == frames.size());
    CHECK(marker_stream_to_text(back) == text);
    CHECK(back[1].occluded[5]);
    CHECK(back[3].timestamp == frames[3].timestamp);
}
