#ifndef SONO_COMMANDS_HPP
#define SONO_COMMANDS_HPP

#include <string>

#include "sono/config.hpp"
#include "sono/pipeline.hpp"
#include "sono/svc.hpp"

namespace sono {

// Output layout under cfg.out_dir:
//   run_config.resolved.txt          the config a command actually ran with
//   sessions/<seed>/<CODE>_<speed>/  serialized sessions plus manifest.txt
//   models/                          svc.model, cnn_<CODE>_<speed>_<seed>.model
//   bundle/                          demo bundle (svc + per-class CNNs)
//   reports/                         histories, metrics, demo records

std::string sessions_root(const RunConfig& cfg);
std::string session_dir(const RunConfig& cfg, ConfigId configuration, Speed speed, uint64_t seed);
std::string models_dir(const RunConfig& cfg);
std::string reports_dir(const RunConfig& cfg);
std::string bundle_dir(const RunConfig& cfg);
std::string svc_model_path(const RunConfig& cfg);
std::string cnn_model_path(const RunConfig& cfg, ConfigId configuration, Speed speed,
                           uint64_t seed);

/// Generates and serializes one session per grid cell plus a manifest.
void cmd_generate(const RunConfig& cfg);

/// Builds the combined shuffled-split feature dataset from the stored
/// sessions and trains the one-vs-rest SVC. Writes the model and a per-epoch
/// objective history.
void cmd_train_svc(const RunConfig& cfg);

/// Trains one CNN regressor per grid cell on the time-ordered split. Writes
/// one model and one history file per cell. Cells run on a small thread pool;
/// outputs are independent of scheduling.
void cmd_train_cnn(const RunConfig& cfg);

/// Evaluates the stored models: held-out SVC accuracy and confusion matrix,
/// per-cell held-out CNN RMSE with the aggregation report.
void cmd_eval(const RunConfig& cfg);

/// Runs the combined streaming predictor over the tail of a freshly
/// regenerated demo session, assembling (and persisting) the model bundle on
/// first use. Writes per-frame records and the latency summary.
void cmd_demo(const RunConfig& cfg, uint64_t n_frames);

// Shared dataset plumbing, used by train/eval and by the test suites.
struct SvcSplitData {
    FeatureDataset train;
    FeatureDataset test;
};

/// Loads every grid session, preprocesses and flattens the frames, then
/// applies the seeded shuffle and the test split. Identical inputs give
/// identical splits.
SvcSplitData build_svc_data(const RunConfig& cfg);

}  // namespace sono

#endif
