#include "sono/session_io.hpp"

#include <filesystem>
#include <map>
#include <sstream>

#include "sono/kinematics.hpp"

namespace fs = std::filesystem;

namespace sono {

namespace {

std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(origin + " line " + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            const size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const std::string& origin) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(origin + ": missing key '" + key + "'");
    return it->second;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("bad numeric value '" + s + "' for " + what);
    }
}

}  // namespace

std::string angles_to_text(const std::vector<TriggerEvent>& triggers,
                           const std::vector<McpAngles>& angles) {
    std::string out = "# t index middle ring pinky sat_index sat_middle sat_ring sat_pinky\n";
    for (size_t i = 0; i < angles.size(); ++i) {
        out += format_double(i < triggers.size() ? triggers[i].timestamp : 0.0);
        for (double f : angles[i].flexion) out += " " + format_double(f);
        for (bool s : angles[i].saturated) out += s ? " 1" : " 0";
        out += "\n";
    }
    return out;
}

void save_session(const Session& session, const std::string& dir) {
    fs::create_directories(dir);
    const SessionSpec& spec = session.spec;

    std::string meta;
    meta += "format_version = 1\n";
    meta += std::string("configuration = ") + config_code(spec.configuration.id) + "\n";
    meta += std::string("speed = ") + speed_name(spec.speed) + "\n";
    meta += "seed = " + std::to_string(spec.seed) + "\n";
    meta += "duration_s = " + format_double(spec.duration_s) + "\n";
    meta += "frame_rate_hz = " + format_double(spec.frame_rate_hz) + "\n";
    meta += "image_height = " + std::to_string(spec.image_height) + "\n";
    meta += "image_width = " + std::to_string(spec.image_width) + "\n";
    meta += "noise_level = " + format_double(spec.noise_level) + "\n";
    meta += "mcp_frozen = " + std::to_string(spec.configuration.mcp_frozen ? 1 : 0) + "\n";
    for (Finger f : kFingers)
        meta += std::string("involvement_") + finger_name(f) + " = " +
                format_double(spec.configuration.involvement[static_cast<int>(f)]) + "\n";
    meta += "frame_count = " + std::to_string(session.frames.size()) + "\n";
    meta += "mocap_count = " + std::to_string(session.mocap.size()) + "\n";
    write_file((fs::path(dir) / "meta.txt").string(), meta);

    std::string blob;
    blob.reserve(session.frames.size() * (session.frames.empty()
                                              ? 0
                                              : session.frames.front().pixels.size() * 4));
    for (const UltrasoundFrame& fr : session.frames)
        for (float v : fr.pixels) put_f32(blob, v);
    write_file((fs::path(dir) / "frames.f32").string(), blob);

    write_file((fs::path(dir) / "angles.txt").string(),
               angles_to_text(session.triggers, session.angles));
    write_file((fs::path(dir) / "mocap.txt").string(), marker_stream_to_text(session.mocap));

    std::string trig = "# t frame_index\n";
    for (const TriggerEvent& t : session.triggers)
        trig += format_double(t.timestamp) + " " + std::to_string(t.frame_index) + "\n";
    write_file((fs::path(dir) / "triggers.txt").string(), trig);
}

Session load_session(const std::string& dir) {
    const std::string meta_path = (fs::path(dir) / "meta.txt").string();
    auto kv = parse_key_values(read_file(meta_path), meta_path);

    Session session;
    SessionSpec& spec = session.spec;
    spec.configuration.id = config_from_code(require(kv, "configuration", meta_path));
    spec.configuration.mcp_frozen = require(kv, "mcp_frozen", meta_path) == "1";
    for (Finger f : kFingers)
        spec.configuration.involvement[static_cast<int>(f)] = to_double(
            require(kv, std::string("involvement_") + finger_name(f), meta_path), "involvement");
    spec.speed = speed_from_name(require(kv, "speed", meta_path));
    spec.seed = static_cast<uint64_t>(std::stoull(require(kv, "seed", meta_path)));
    spec.duration_s = to_double(require(kv, "duration_s", meta_path), "duration_s");
    spec.frame_rate_hz = to_double(require(kv, "frame_rate_hz", meta_path), "frame_rate_hz");
    spec.image_height = static_cast<int>(to_double(require(kv, "image_height", meta_path), "dims"));
    spec.image_width = static_cast<int>(to_double(require(kv, "image_width", meta_path), "dims"));
    spec.noise_level = to_double(require(kv, "noise_level", meta_path), "noise_level");

    const size_t n_frames = static_cast<size_t>(std::stoull(require(kv, "frame_count", meta_path)));
    const size_t px = static_cast<size_t>(spec.image_height) * spec.image_width;

    const std::string frames_path = (fs::path(dir) / "frames.f32").string();
    const std::string blob = read_file(frames_path);
    if (blob.size() != n_frames * px * 4)
        throw FormatError(frames_path + ": " + std::to_string(blob.size()) +
                          " bytes, expected " + std::to_string(n_frames * px * 4));
    ByteReader br(blob, frames_path);
    session.frames.reserve(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
        UltrasoundFrame fr;
        fr.height = spec.image_height;
        fr.width = spec.image_width;
        fr.frame_index = i;
        fr.pixels.resize(px);
        for (float& v : fr.pixels) v = br.get_f32();
        session.frames.push_back(std::move(fr));
    }

    const std::string angles_path = (fs::path(dir) / "angles.txt").string();
    std::istringstream ain(read_file(angles_path));
    std::string line;
    while (std::getline(ain, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        double t = 0.0;
        McpAngles a;
        if (!(row >> t)) throw FormatError(angles_path + ": bad row");
        for (double& f : a.flexion)
            if (!(row >> f)) throw FormatError(angles_path + ": expected 4 flexion values");
        for (int i = 0; i < kFingerCount; ++i) {
            int bit = 0;
            if (!(row >> bit)) throw FormatError(angles_path + ": expected 4 saturation bits");
            a.saturated[static_cast<size_t>(i)] = bit != 0;
        }
        session.angles.push_back(a);
    }
    if (session.angles.size() != n_frames)
        throw FormatError(angles_path + ": " + std::to_string(session.angles.size()) +
                          " rows, expected " + std::to_string(n_frames));

    session.mocap = marker_stream_from_text(read_file((fs::path(dir) / "mocap.txt").string()));

    const std::string trig_path = (fs::path(dir) / "triggers.txt").string();
    std::istringstream tin(read_file(trig_path));
    while (std::getline(tin, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        TriggerEvent t;
        if (!(row >> t.timestamp >> t.frame_index)) throw FormatError(trig_path + ": bad row");
        session.triggers.push_back(t);
    }
    if (session.triggers.size() != n_frames)
        throw FormatError(trig_path + ": " + std::to_string(session.triggers.size()) +
                          " rows, expected " + std::to_string(n_frames));
    return session;
}

}  // namespace sono
