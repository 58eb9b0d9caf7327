#ifndef SONO_PREPROCESS_HPP
#define SONO_PREPROCESS_HPP

#include "sono/synthgen.hpp"

namespace sono {

/// Frame conditioning applied before either model: per-frame min-max
/// normalization, log compression, then non-overlapping block mean-pooling
/// down to the target dims. Target dims must divide the source dims.
struct PreprocessConfig {
    double log_dynamic_range = 1000.0;  // compression ratio R; ~60 dB display range
    int target_height = 0;
    int target_width = 0;

    enum class NormalizeMode { PerFrameMinMax };
    NormalizeMode normalize_mode = NormalizeMode::PerFrameMinMax;
};

/// y = log(1 + R x) / log(1 + R); maps [0,1] onto [0,1], strictly monotone.
double log_compress(double x, double dynamic_range);

/// Normalize -> log-compress -> block mean-pool. A constant frame normalizes
/// to all zeros. Throws ConfigError when the target does not divide the
/// source dims or the dynamic range is not > 1.
UltrasoundFrame preprocess_frame(const UltrasoundFrame& frame, const PreprocessConfig& cfg);

/// Per-frame application; angles, triggers and mocap pass through untouched.
Session preprocess_session(const Session& session, const PreprocessConfig& cfg);

/// Row-major copy of a frame as doubles, the feature layout both models use.
std::vector<double> flatten(const UltrasoundFrame& frame);

}  // namespace sono

#endif
