#ifndef SONO_SVC_HPP
#define SONO_SVC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sono/metrics.hpp"
#include "sono/synthgen.hpp"

namespace sono {

struct LabeledFeatures {
    std::vector<double> features;
    ConfigId label = ConfigId::Open;
    size_t order = 0;  // position in the original acquisition sequence
};

using FeatureDataset = std::vector<LabeledFeatures>;

/// One-vs-rest linear classifier. Class order fixes tie-breaking and the
/// model file layout.
struct SvcModel {
    std::vector<ConfigId> classes;
    std::vector<std::vector<double>> weights;  // one vector of length feature_dim per class
    std::vector<double> biases;
    size_t feature_dim = 0;
    double lambda = 1e-4;

    struct TrainMeta {
        uint64_t seed = 0;
        uint32_t epochs = 0;
        double split_fraction = 0.0;  // informational, set by the caller
    } train_meta;
};

struct SvcPrediction {
    ConfigId label = ConfigId::Open;
    std::vector<double> scores;  // per class, same order as model.classes
};

struct SvcTrainHistory {
    // Mean over classes of the per-class regularized hinge objective,
    // evaluated on the full training set. `best_so_far` is non-increasing.
    std::vector<double> objective;
    std::vector<double> best_so_far;
};

inline constexpr double kDefaultSvcLambda = 1e-4;
inline constexpr int kDefaultSvcEpochs = 20;

/// Trains one binary hinge-loss SVM per class with the 1/(lambda t) stochastic
/// subgradient schedule over seeded shuffles. Each class keeps its best
/// epoch-end iterate by full-data objective (the zero model is the initial
/// candidate), so the returned objective never exceeds the initial one.
/// Throws DegenerateLabels with fewer than two classes, ShapeError on
/// inconsistent feature dims.
SvcModel train_svc(const FeatureDataset& data, double lambda, int epochs, uint64_t seed,
                   SvcTrainHistory* history = nullptr);

/// Argmax of per-class scores w.x + b; ties resolve to the earlier class.
SvcPrediction predict_svc(const SvcModel& model, std::span<const double> features);

/// Regularized hinge objective of one class's hyperplane on a dataset.
double svc_objective(std::span<const double> w, double b, const FeatureDataset& data,
                     ConfigId positive_class, double lambda);

ConfusionMatrix confusion(const SvcModel& model, const FeatureDataset& test_set);

// Model file: "SONOSVC\0" magic, u32 version, then class list, dims,
// hyperparameters and per-class weight/bias blocks (see FORMATS.md).
std::string serialize_svc(const SvcModel& model);
SvcModel deserialize_svc(const std::string& bytes, const std::string& origin);
void save_svc(const SvcModel& model, const std::string& path);
SvcModel load_svc(const std::string& path);

}  // namespace sono

#endif
