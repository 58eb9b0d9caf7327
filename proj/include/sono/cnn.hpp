#ifndef SONO_CNN_HPP
#define SONO_CNN_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sono/kinematics.hpp"
#include "sono/synthgen.hpp"

namespace sono {

// ---------------------------------------------------------------------------
// Tensors: (channels, height, width) for feature maps, (length) for vectors.
// Data is row-major doubles.
// ---------------------------------------------------------------------------

struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    static Tensor chw(size_t c, size_t h, size_t w);
    static Tensor vec(size_t n);

    size_t size() const { return data.size(); }
    bool is_chw() const { return shape.size() == 3; }
    size_t channels() const { return shape[0]; }
    size_t height() const { return shape[1]; }
    size_t width() const { return shape[2]; }

    double at(size_t c, size_t y, size_t x) const {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
    double& at(size_t c, size_t y, size_t x) {
        return data[(c * shape[1] + y) * shape[2] + x];
    }
};

Tensor to_tensor(const UltrasoundFrame& frame);  // single-channel {1, h, w}

// ---------------------------------------------------------------------------
// Layers. Conv2D uses stride 1 and zero padding that preserves spatial dims
// (odd kernels only); MaxPool is 2x2 stride 2 with floor halving.
// ---------------------------------------------------------------------------

struct Conv2D {
    size_t in_channels = 0, out_channels = 0, kernel = 3;
    std::vector<double> weight;  // [out][in][ky][kx]
    std::vector<double> bias;    // [out]
};

struct ReLU {};
struct MaxPool {};
struct Flatten {};

struct Dense {
    size_t in = 0, out = 0;
    std::vector<double> weight;  // [out][in]
    std::vector<double> bias;    // [out]
};

using Layer = std::variant<Conv2D, ReLU, MaxPool, Flatten, Dense>;

struct CnnModel {
    std::vector<Layer> layers;

    /// Compact architecture string, e.g.
    /// "conv3x3:1>8|relu|pool2|...|dense:64>4"; the model file stores it and
    /// loading rebuilds the stack from it.
    std::string descriptor() const;

    /// Output shape for a given input shape; throws ShapeError on any
    /// incompatible pair along the stack.
    std::vector<size_t> output_shape(const std::vector<size_t>& input_shape) const;

    /// Flat views over every parameter blob, in layer order.
    std::vector<std::span<double>> param_blobs();
    std::vector<std::span<const double>> param_blobs() const;
    size_t param_count() const;
    std::vector<double> flatten_params() const;
    void set_params(std::span<const double> flat);
};

/// Stack from a descriptor string, parameters zeroed. Throws FormatError.
CnnModel model_from_descriptor(const std::string& descriptor);

/// The default regressor: conv3x3(1>8)-relu-pool, conv3x3(8>16)-relu-pool,
/// flatten, dense(>64)-relu, dense(64>4), He-uniform seeded init.
CnnModel make_micro_cnn(int input_height, int input_width, uint64_t seed);

/// Seeded He-style uniform init (bound sqrt(6 / fan_in)), biases zero.
void init_params(CnnModel& model, uint64_t seed);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct ForwardCache {
    std::string descriptor;       // of the model that produced the cache
    std::vector<Tensor> inputs;   // input seen by each layer
    Tensor output;
};

struct LayerGrads {
    std::vector<double> weight;
    std::vector<double> bias;
};

struct Gradients {
    std::vector<LayerGrads> layers;
    Tensor input;  // gradient with respect to the network input

    std::vector<double> flatten() const;  // aligned with CnnModel::flatten_params
};

struct ForwardResult {
    std::vector<double> output;
    ForwardCache cache;
};

ForwardResult forward(const CnnModel& model, const Tensor& input);

/// Reverse-mode gradients for every parameter given d(loss)/d(output).
/// The cache must come from a forward call on the same model; a descriptor
/// mismatch throws CacheError.
Gradients backward(const CnnModel& model, const ForwardCache& cache,
                   std::span<const double> grad_output);

struct MaeResult {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Mean absolute error and its subgradient (sign(0) := 0, scaled by 1/n).
MaeResult mae_loss(std::span<const double> pred, std::span<const double> target);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double decay = 1e-3 / 200.0;  // per-epoch: lr(e) = alpha / (1 + decay * e)
    uint64_t t = 0;
    std::vector<double> m, v;  // sized to the flat parameter vector on first use
};

double adam_lr(const AdamState& state, int epoch);

/// Canonical bias-corrected Adam update, in place on the flat parameters.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 50;
    double validation_split = 0.1;  // of the non-test samples, taken from their tail
    double test_split = 0.3;        // tail of the time-ordered sequence
    int batch_size = 16;
    uint64_t seed = 0;
};

struct SplitSizes {
    size_t train = 0, validation = 0, test = 0;
};

/// Time-ordered split arithmetic: test takes the tail, validation the tail of
/// the remainder. Throws ConfigError for splits outside (0,1) or summing
/// past 1.
SplitSizes split_sizes(size_t n, const TrainConfig& cfg);

struct TrainHistory {
    std::vector<double> train_mae;  // running mean over the epoch's batches
    std::vector<double> val_mae;    // end-of-epoch validation pass (NaN when empty)
    std::vector<double> lr;
};

struct CnnTrainResult {
    CnnModel model;
    TrainHistory history;
    SplitSizes split;
};

/// Trains the micro regressor on one session's preprocessed frames. Requires
/// at least 10 samples (DataError) and matching frame/angle counts
/// (ShapeError). Returns the final-epoch model.
CnnTrainResult train_cnn(const std::vector<UltrasoundFrame>& frames,
                         const std::vector<McpAngles>& angles, const TrainConfig& cfg);

/// Forward pass on one frame, outputs clamped into [0, 100] flexion.
McpAngles predict_angles(const CnnModel& model, const UltrasoundFrame& frame);

// Model file: "SONOCNN\0" magic, u32 version, descriptor string, then one
// f64 blob per parameter tensor in layer order (see FORMATS.md).
std::string serialize_cnn(const CnnModel& model);
CnnModel deserialize_cnn(const std::string& bytes, const std::string& origin);
void save_cnn(const CnnModel& model, const std::string& path);
CnnModel load_cnn(const std::string& path);

}  // namespace sono

#endif
