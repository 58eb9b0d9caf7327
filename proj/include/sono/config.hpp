#ifndef SONO_CONFIG_HPP
#define SONO_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sono/cnn.hpp"
#include "sono/preprocess.hpp"
#include "sono/svc.hpp"
#include "sono/synthgen.hpp"

namespace sono {

/// One run's full recipe: the dataset grid, generator overrides, per-stage
/// preprocessing, and both trainers' hyperparameters. Parsed from a plain
/// key=value text file; every key can also be set programmatically. The
/// shipped defaults generate desk-scale 64x32 frames; the acquisition-scale
/// 636x256 geometry is a config override.
struct RunConfig {
    std::string out_dir = "out";

    // dataset grid
    std::vector<ConfigId> configurations = default_grid_configurations();
    std::vector<Speed> speeds = {Speed::Slow, Speed::Medium, Speed::Fast};
    std::vector<uint64_t> seeds = {1};

    // generator
    double duration_s = 56.0;
    double frame_rate_hz = 25.0;
    int image_height = 64;
    int image_width = 32;
    double noise_level = 0.1;

    // preprocessing per stage
    double log_dynamic_range = 1000.0;
    int svc_target_height = 32;
    int svc_target_width = 16;
    int cnn_target_height = 32;
    int cnn_target_width = 16;

    // svc trainer
    double svc_lambda = kDefaultSvcLambda;
    int svc_epochs = kDefaultSvcEpochs;
    uint64_t svc_seed = 42;
    double svc_test_split = 0.3;

    // cnn trainer
    int cnn_epochs = 50;
    double cnn_validation_split = 0.1;
    double cnn_test_split = 0.3;
    int cnn_batch_size = 16;
    uint64_t cnn_seed = 42;

    // combined demo
    ConfigId demo_configuration = ConfigId::C1;
    Speed demo_speed = Speed::Medium;
    uint64_t demo_frames = 100;

    static std::vector<ConfigId> default_grid_configurations();  // C1..C11

    TrainConfig cnn_train_config(uint64_t cell_seed) const;
    PreprocessConfig svc_preprocess() const;
    PreprocessConfig cnn_preprocess() const;
    SessionSpec session_spec(ConfigId configuration, Speed speed, uint64_t grid_seed) const;

    /// Validates everything at once; the ConfigError message lists every
    /// violation found.
    void validate() const;

    /// Canonical key=value rendering; reparsing reproduces the config.
    std::string to_text() const;
};

/// Session seed for one grid cell, derived from the grid seed and cell
/// coordinates so cells never share generator streams.
uint64_t cell_seed(uint64_t grid_seed, ConfigId configuration, Speed speed);

RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

}  // namespace sono

#endif
