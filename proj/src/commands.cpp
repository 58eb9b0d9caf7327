#include "sono/commands.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>

#include "sono/metrics.hpp"
#include "sono/session_io.hpp"

namespace fs = std::filesystem;

namespace sono {

std::string sessions_root(const RunConfig& cfg) {
    return (fs::path(cfg.out_dir) / "sessions").string();
}

std::string session_dir(const RunConfig& cfg, ConfigId configuration, Speed speed,
                        uint64_t seed) {
    return (fs::path(sessions_root(cfg)) / std::to_string(seed) /
            (std::string(config_code(configuration)) + "_" + speed_name(speed)))
        .string();
}

std::string models_dir(const RunConfig& cfg) {
    return (fs::path(cfg.out_dir) / "models").string();
}

std::string reports_dir(const RunConfig& cfg) {
    return (fs::path(cfg.out_dir) / "reports").string();
}

std::string bundle_dir(const RunConfig& cfg) {
    return (fs::path(cfg.out_dir) / "bundle").string();
}

std::string svc_model_path(const RunConfig& cfg) {
    return (fs::path(models_dir(cfg)) / "svc.model").string();
}

std::string cnn_model_path(const RunConfig& cfg, ConfigId configuration, Speed speed,
                           uint64_t seed) {
    return (fs::path(models_dir(cfg)) / (std::string("cnn_") + config_code(configuration) + "_" +
                                         speed_name(speed) + "_" + std::to_string(seed) +
                                         ".model"))
        .string();
}

namespace {

struct GridCell {
    ConfigId configuration;
    Speed speed;
    uint64_t seed;
};

std::vector<GridCell> grid_cells(const RunConfig& cfg) {
    std::vector<GridCell> cells;
    for (uint64_t seed : cfg.seeds)
        for (ConfigId c : cfg.configurations)
            for (Speed s : cfg.speeds) cells.push_back({c, s, seed});
    return cells;
}

void write_resolved_config(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    write_file((fs::path(cfg.out_dir) / "run_config.resolved.txt").string(), cfg.to_text());
}

Session load_cell_session(const RunConfig& cfg, const GridCell& cell) {
    const std::string dir = session_dir(cfg, cell.configuration, cell.speed, cell.seed);
    if (!fs::exists(fs::path(dir) / "meta.txt"))
        throw DataError("missing session " + dir + " (run `generate` first)");
    return load_session(dir);
}

/// Runs fn(i) for i in [0, n) across a few worker threads, rethrowing the
/// first failure. Used where cells are independent.
void parallel_cells(size_t n, const std::function<void(size_t)>& fn) {
    const unsigned workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(n));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

void cmd_generate(const RunConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);

    std::string manifest = "# configuration speed seed cell_seed path\n";
    for (const GridCell& cell : grid_cells(cfg)) {
        const SessionSpec spec = cfg.session_spec(cell.configuration, cell.speed, cell.seed);
        const Session session = generate_session(spec);
        const std::string dir = session_dir(cfg, cell.configuration, cell.speed, cell.seed);
        save_session(session, dir);
        manifest += std::string(config_code(cell.configuration)) + " " + speed_name(cell.speed) +
                    " " + std::to_string(cell.seed) + " " + std::to_string(spec.seed) + " " + dir +
                    "\n";
    }
    fs::create_directories(sessions_root(cfg));
    write_file((fs::path(sessions_root(cfg)) / "manifest.txt").string(), manifest);
}

SvcSplitData build_svc_data(const RunConfig& cfg) {
    cfg.validate();
    const PreprocessConfig pre = cfg.svc_preprocess();

    FeatureDataset all;
    size_t order = 0;
    for (const GridCell& cell : grid_cells(cfg)) {
        const Session session = load_cell_session(cfg, cell);
        for (const UltrasoundFrame& fr : session.frames) {
            LabeledFeatures lf;
            lf.features = flatten(preprocess_frame(fr, pre));
            lf.label = cell.configuration;
            lf.order = order++;
            all.push_back(std::move(lf));
        }
    }
    if (all.empty()) throw DataError("svc dataset is empty");

    std::vector<size_t> idx(all.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(splitmix64(cfg.svc_seed ^ 0x5F117ULL));
    rng.shuffle(idx);

    const size_t n_test =
        static_cast<size_t>(std::llround(static_cast<double>(all.size()) * cfg.svc_test_split));
    if (n_test == 0 || n_test == all.size())
        throw DataError("svc test split leaves an empty partition");

    SvcSplitData data;
    data.train.reserve(all.size() - n_test);
    data.test.reserve(n_test);
    for (size_t i = 0; i < idx.size(); ++i) {
        if (i < idx.size() - n_test)
            data.train.push_back(std::move(all[idx[i]]));
        else
            data.test.push_back(std::move(all[idx[i]]));
    }
    return data;
}

void cmd_train_svc(const RunConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);

    SvcSplitData data = build_svc_data(cfg);
    SvcTrainHistory history;
    SvcModel model = train_svc(data.train, cfg.svc_lambda, cfg.svc_epochs, cfg.svc_seed, &history);
    model.train_meta.split_fraction = cfg.svc_test_split;

    fs::create_directories(models_dir(cfg));
    save_svc(model, svc_model_path(cfg));

    std::string hist = "# epoch objective best_so_far\n";
    for (size_t e = 0; e < history.objective.size(); ++e)
        hist += std::to_string(e) + " " + format_double(history.objective[e]) + " " +
                format_double(history.best_so_far[e]) + "\n";
    fs::create_directories(reports_dir(cfg));
    write_file((fs::path(reports_dir(cfg)) / "svc_history.txt").string(), hist);
}

void cmd_train_cnn(const RunConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    fs::create_directories(models_dir(cfg));
    fs::create_directories(reports_dir(cfg));

    const std::vector<GridCell> cells = grid_cells(cfg);
    const PreprocessConfig pre = cfg.cnn_preprocess();

    parallel_cells(cells.size(), [&](size_t i) {
        const GridCell& cell = cells[i];
        const Session session = load_cell_session(cfg, cell);

        std::vector<UltrasoundFrame> frames;
        frames.reserve(session.frames.size());
        for (const UltrasoundFrame& fr : session.frames) frames.push_back(preprocess_frame(fr, pre));

        const SessionSpec spec = cfg.session_spec(cell.configuration, cell.speed, cell.seed);
        CnnTrainResult result = train_cnn(frames, session.angles, cfg.cnn_train_config(spec.seed));
        save_cnn(result.model, cnn_model_path(cfg, cell.configuration, cell.speed, cell.seed));

        std::string hist = "# epoch train_mae val_mae lr\n";
        for (size_t e = 0; e < result.history.train_mae.size(); ++e)
            hist += std::to_string(e) + " " + format_double(result.history.train_mae[e]) + " " +
                    format_double(result.history.val_mae[e]) + " " +
                    format_double(result.history.lr[e]) + "\n";
        write_file((fs::path(reports_dir(cfg)) /
                    (std::string("cnn_history_") + config_code(cell.configuration) + "_" +
                     speed_name(cell.speed) + "_" + std::to_string(cell.seed) + ".txt"))
                       .string(),
                   hist);
    });
}

void cmd_eval(const RunConfig& cfg) {
    cfg.validate();
    write_resolved_config(cfg);
    fs::create_directories(reports_dir(cfg));

    // Classifier: same dataset assembly and split as training.
    {
        SvcSplitData data = build_svc_data(cfg);
        if (data.test.empty()) throw DataError("eval: empty svc test set");
        const SvcModel model = load_svc(svc_model_path(cfg));
        const ConfusionMatrix cm = confusion(model, data.test);

        std::vector<ConfigId> truth, predicted;
        for (const LabeledFeatures& s : data.test) truth.push_back(s.label);
        for (const LabeledFeatures& s : data.test)
            predicted.push_back(predict_svc(model, s.features).label);

        std::string acc;
        acc += "n_train = " + std::to_string(data.train.size()) + "\n";
        acc += "n_test = " + std::to_string(data.test.size()) + "\n";
        acc += "accuracy_percent = " + format_double(accuracy_percent(truth, predicted)) + "\n";
        write_file((fs::path(reports_dir(cfg)) / "svc_accuracy.txt").string(), acc);
        write_file((fs::path(reports_dir(cfg)) / "svc_confusion.csv").string(), cm.to_csv());
    }

    // Regressors: held-out tail of each cell.
    {
        const std::vector<GridCell> cells = grid_cells(cfg);
        const PreprocessConfig pre = cfg.cnn_preprocess();
        std::vector<RmseCell> rmse_cells(cells.size() * kFingerCount);

        parallel_cells(cells.size(), [&](size_t i) {
            const GridCell& cell = cells[i];
            const Session session = load_cell_session(cfg, cell);
            const CnnModel model =
                load_cnn(cnn_model_path(cfg, cell.configuration, cell.speed, cell.seed));

            TrainConfig tc = cfg.cnn_train_config(0);
            const SplitSizes split = split_sizes(session.frames.size(), tc);
            if (split.test == 0) throw DataError("eval: empty cnn test set");
            const size_t test_begin = session.frames.size() - split.test;

            std::array<std::vector<double>, kFingerCount> y, y_hat;
            for (size_t k = test_begin; k < session.frames.size(); ++k) {
                const McpAngles pred = predict_angles(model, preprocess_frame(session.frames[k], pre));
                for (Finger f : kFingers) {
                    y[static_cast<size_t>(f)].push_back(session.angles[k][f]);
                    y_hat[static_cast<size_t>(f)].push_back(pred[f]);
                }
            }
            for (Finger f : kFingers) {
                RmseCell rc;
                rc.configuration = cell.configuration;
                rc.speed = cell.speed;
                rc.seed = cell.seed;
                rc.finger = f;
                rc.rmse_deg = rmse(y[static_cast<size_t>(f)], y_hat[static_cast<size_t>(f)]);
                rmse_cells[i * kFingerCount + static_cast<size_t>(f)] = rc;
            }
        });

        const RmseReport report = aggregate_rmse(rmse_cells);
        write_file((fs::path(reports_dir(cfg)) / "rmse_report.txt").string(), report.to_table());
        write_file((fs::path(reports_dir(cfg)) / "rmse_report.kv").string(),
                   report.to_key_values());
    }
}

void cmd_demo(const RunConfig& cfg, uint64_t n_frames) {
    cfg.validate();
    write_resolved_config(cfg);
    fs::create_directories(reports_dir(cfg));

    const std::string bdir = bundle_dir(cfg);
    if (!fs::exists(fs::path(bdir) / "bundle.txt")) {
        // Assemble from the trained per-cell models at the demo speed.
        ModelBundle bundle;
        bundle.svc = load_svc(svc_model_path(cfg));
        bundle.svc_preprocess = cfg.svc_preprocess();
        bundle.cnn_preprocess = cfg.cnn_preprocess();
        for (ConfigId c : bundle.svc.classes) {
            const std::string path = cnn_model_path(cfg, c, cfg.demo_speed, cfg.seeds.front());
            if (!fs::exists(path))
                throw IoError(std::string("demo: missing CNN model ") + path + " for " +
                              config_code(c) + " (run `train-cnn` first)");
            bundle.cnn_by_configuration.emplace(c, load_cnn(path));
        }
        save_bundle(bundle, bdir);
    }
    const ModelBundle bundle = load_bundle(bdir);

    const SessionSpec spec =
        cfg.session_spec(cfg.demo_configuration, cfg.demo_speed, cfg.seeds.front());
    const Session session = generate_session(spec);
    if (n_frames > session.frames.size())
        throw DataError("demo: requested " + std::to_string(n_frames) + " frames, session has " +
                        std::to_string(session.frames.size()));

    // Tail of the session: the region the CNN's unshuffled split holds out.
    const size_t begin = session.frames.size() - static_cast<size_t>(n_frames);
    std::vector<UltrasoundFrame> frames(session.frames.begin() + static_cast<ptrdiff_t>(begin),
                                        session.frames.end());
    GroundTruth truth;
    truth.labels.assign(frames.size(), cfg.demo_configuration);
    truth.angles.assign(session.angles.begin() + static_cast<ptrdiff_t>(begin),
                        session.angles.end());

    const PipelineRun run = run_pipeline(bundle, frames, &truth);
    write_file((fs::path(reports_dir(cfg)) / "demo_results.jsonl").string(),
               results_to_jsonl(run.results));
    write_file((fs::path(reports_dir(cfg)) / "demo_summary.txt").string(),
               run.summary.to_key_values());
}

}  // namespace sono
