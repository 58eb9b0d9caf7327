#include "sono/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace sono {

double log_compress(double x, double dynamic_range) {
    return std::log1p(dynamic_range * x) / std::log1p(dynamic_range);
}

namespace {

void check_config(const UltrasoundFrame& frame, const PreprocessConfig& cfg) {
    if (frame.pixels.empty() || frame.height <= 0 || frame.width <= 0)
        throw DataError("empty frame");
    if (!(cfg.log_dynamic_range > 1.0))
        throw ConfigError("log dynamic range must be > 1");
    if (cfg.target_height <= 0 || cfg.target_width <= 0)
        throw ConfigError("preprocess target dims must be positive");
    if (frame.height % cfg.target_height != 0 || frame.width % cfg.target_width != 0)
        throw ConfigError("target dims " + std::to_string(cfg.target_height) + "x" +
                          std::to_string(cfg.target_width) + " do not divide frame dims " +
                          std::to_string(frame.height) + "x" + std::to_string(frame.width));
}

}  // namespace

UltrasoundFrame preprocess_frame(const UltrasoundFrame& frame, const PreprocessConfig& cfg) {
    check_config(frame, cfg);

    // Min-max normalize; a constant frame is defined to map to all zeros.
    float lo = frame.pixels[0], hi = frame.pixels[0];
    for (float v : frame.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = static_cast<double>(hi) - static_cast<double>(lo);

    const int bh = frame.height / cfg.target_height;
    const int bw = frame.width / cfg.target_width;
    const double inv_block = 1.0 / (static_cast<double>(bh) * bw);

    UltrasoundFrame out;
    out.height = cfg.target_height;
    out.width = cfg.target_width;
    out.frame_index = frame.frame_index;
    out.pixels.assign(static_cast<size_t>(cfg.target_height) * cfg.target_width, 0.0f);

    if (range == 0.0) return out;

    for (int ty = 0; ty < cfg.target_height; ++ty) {
        for (int tx = 0; tx < cfg.target_width; ++tx) {
            double sum = 0.0;
            for (int dy = 0; dy < bh; ++dy) {
                const int r = ty * bh + dy;
                for (int dx = 0; dx < bw; ++dx) {
                    const double x = (frame.at(r, tx * bw + dx) - lo) / range;
                    sum += log_compress(x, cfg.log_dynamic_range);
                }
            }
            out.at(ty, tx) = static_cast<float>(sum * inv_block);
        }
    }
    return out;
}

Session preprocess_session(const Session& session, const PreprocessConfig& cfg) {
    Session out;
    out.spec = session.spec;
    out.angles = session.angles;
    out.triggers = session.triggers;
    out.mocap = session.mocap;
    out.frames.reserve(session.frames.size());
    for (const UltrasoundFrame& fr : session.frames)
        out.frames.push_back(preprocess_frame(fr, cfg));
    return out;
}

std::vector<double> flatten(const UltrasoundFrame& frame) {
    return {frame.pixels.begin(), frame.pixels.end()};
}

}  // namespace sono
