#ifndef SONO_PIPELINE_HPP
#define SONO_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sono/cnn.hpp"
#include "sono/preprocess.hpp"
#include "sono/svc.hpp"

namespace sono {

/// Everything the streaming predictor needs: the classifier, one regressor
/// per class it can emit, and the preprocessing for each stage.
struct ModelBundle {
    SvcModel svc;
    std::map<ConfigId, CnnModel> cnn_by_configuration;
    PreprocessConfig svc_preprocess;
    PreprocessConfig cnn_preprocess;

    /// Regressor for a predicted class along with the key actually consulted.
    /// Throws BundleError when the class has no entry.
    std::pair<ConfigId, const CnnModel*> cnn_for(ConfigId id) const;

    /// Class-coverage invariant: every SVC class has a CNN. Throws BundleError.
    void check_coverage() const;
};

struct FrameResult {
    uint64_t frame_index = 0;
    ConfigId predicted_configuration = ConfigId::Open;
    ConfigId used_cnn_configuration = ConfigId::Open;  // dictionary key consulted
    McpAngles predicted_angles;
    std::optional<ConfigId> true_configuration;
    std::optional<McpAngles> true_angles;
    double svc_seconds = 0.0;
    double cnn_seconds = 0.0;
    double total_seconds = 0.0;
};

struct StageStats {
    double mean = 0.0, min = 0.0, max = 0.0;
};

struct PipelineSummary {
    uint64_t frames = 0;
    StageStats svc, cnn, total;
    double throughput_hz = 0.0;  // 1 / mean(total_seconds)
    std::optional<double> accuracy_percent;
    std::optional<std::array<double, kFingerCount>> rmse_per_finger;

    std::string to_key_values() const;
};

struct GroundTruth {
    std::vector<ConfigId> labels;      // one per frame
    std::vector<McpAngles> angles;     // one per frame
};

struct PipelineRun {
    std::vector<FrameResult> results;
    PipelineSummary summary;
};

/// Runs the two-stage predictor over raw frames: preprocess for the SVC,
/// classify, look the regressor up by the predicted class, preprocess for the
/// CNN, regress. Stateless across frames. An empty stream yields an empty
/// run with a zero-frame summary.
PipelineRun run_pipeline(const ModelBundle& bundle, std::span<const UltrasoundFrame> frames,
                         const GroundTruth* truth = nullptr);

/// One line-delimited record per frame (JSON objects, see FORMATS.md).
std::string results_to_jsonl(std::span<const FrameResult> results);

// Bundle directory: bundle.txt manifest, svc.model, cnn_<CODE>.model per
// class. load_bundle validates magic/version of every file and the coverage
// invariant; missing files raise IoError, bad files FormatError, coverage
// gaps BundleError, each naming the offender.
void save_bundle(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_bundle(const std::string& dir);

}  // namespace sono

#endif
