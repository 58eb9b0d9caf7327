#include "sono/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>

#include <json.hpp>

#include "sono/metrics.hpp"

namespace fs = std::filesystem;

namespace sono {

std::pair<ConfigId, const CnnModel*> ModelBundle::cnn_for(ConfigId id) const {
    auto it = cnn_by_configuration.find(id);
    if (it == cnn_by_configuration.end())
        throw BundleError(std::string("bundle has no CNN for configuration ") + config_code(id));
    return {it->first, &it->second};
}

void ModelBundle::check_coverage() const {
    for (ConfigId c : svc.classes)
        if (cnn_by_configuration.find(c) == cnn_by_configuration.end())
            throw BundleError(std::string("bundle coverage gap: configuration ") +
                              config_code(c) + " has no CNN model");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0,
                     std::chrono::steady_clock::time_point t1) {
    const double s = std::chrono::duration<double>(t1 - t0).count();
    return std::max(s, 1e-9);  // clock granularity floor keeps timings positive
}

StageStats stats_of(const std::vector<double>& xs) {
    StageStats st;
    if (xs.empty()) return st;
    st.min = st.max = xs[0];
    double sum = 0.0;
    for (double x : xs) {
        st.min = std::min(st.min, x);
        st.max = std::max(st.max, x);
        sum += x;
    }
    st.mean = sum / static_cast<double>(xs.size());
    return st;
}

}  // namespace

PipelineRun run_pipeline(const ModelBundle& bundle, std::span<const UltrasoundFrame> frames,
                         const GroundTruth* truth) {
    bundle.check_coverage();
    if (truth && (truth->labels.size() != frames.size() || truth->angles.size() != frames.size()))
        throw ShapeError("run_pipeline: ground truth length does not match frame count");

    PipelineRun run;
    run.results.reserve(frames.size());
    std::vector<double> svc_times, cnn_times, total_times;

    using clock = std::chrono::steady_clock;
    for (size_t i = 0; i < frames.size(); ++i) {
        const UltrasoundFrame& raw = frames[i];
        FrameResult res;
        res.frame_index = raw.frame_index;

        const auto frame_start = clock::now();

        const auto svc_start = clock::now();
        const UltrasoundFrame svc_in = preprocess_frame(raw, bundle.svc_preprocess);
        const SvcPrediction pred = predict_svc(bundle.svc, flatten(svc_in));
        const auto svc_end = clock::now();

        const auto cnn_start = clock::now();
        const auto [cnn_key, cnn_model] = bundle.cnn_for(pred.label);
        const UltrasoundFrame cnn_in = preprocess_frame(raw, bundle.cnn_preprocess);
        res.predicted_angles = predict_angles(*cnn_model, cnn_in);
        const auto cnn_end = clock::now();

        res.predicted_configuration = pred.label;
        res.used_cnn_configuration = cnn_key;
        res.svc_seconds = seconds_since(svc_start, svc_end);
        res.cnn_seconds = seconds_since(cnn_start, cnn_end);
        res.total_seconds = seconds_since(frame_start, clock::now());
        if (truth) {
            res.true_configuration = truth->labels[i];
            res.true_angles = truth->angles[i];
        }

        svc_times.push_back(res.svc_seconds);
        cnn_times.push_back(res.cnn_seconds);
        total_times.push_back(res.total_seconds);
        run.results.push_back(std::move(res));
    }

    run.summary.frames = frames.size();
    run.summary.svc = stats_of(svc_times);
    run.summary.cnn = stats_of(cnn_times);
    run.summary.total = stats_of(total_times);
    if (!total_times.empty()) run.summary.throughput_hz = 1.0 / run.summary.total.mean;

    if (truth && !frames.empty()) {
        std::vector<ConfigId> predicted;
        predicted.reserve(frames.size());
        for (const FrameResult& r : run.results) predicted.push_back(r.predicted_configuration);
        run.summary.accuracy_percent = accuracy_percent(truth->labels, predicted);

        std::array<double, kFingerCount> per_finger{};
        for (Finger f : kFingers) {
            std::vector<double> y, y_hat;
            y.reserve(frames.size());
            y_hat.reserve(frames.size());
            for (size_t i = 0; i < frames.size(); ++i) {
                y.push_back(truth->angles[i][f]);
                y_hat.push_back(run.results[i].predicted_angles[f]);
            }
            per_finger[static_cast<size_t>(f)] = rmse(y, y_hat);
        }
        run.summary.rmse_per_finger = per_finger;
    }
    return run;
}

std::string PipelineSummary::to_key_values() const {
    std::string out;
    out += "frames = " + std::to_string(frames) + "\n";
    auto stage = [&](const char* name, const StageStats& st) {
        out += std::string(name) + ".mean_s = " + format_double(st.mean) + "\n";
        out += std::string(name) + ".min_s = " + format_double(st.min) + "\n";
        out += std::string(name) + ".max_s = " + format_double(st.max) + "\n";
    };
    stage("svc", svc);
    stage("cnn", cnn);
    stage("total", total);
    out += "throughput_hz = " + format_double(throughput_hz) + "\n";
    if (accuracy_percent)
        out += "accuracy_percent = " + format_double(*accuracy_percent) + "\n";
    if (rmse_per_finger)
        for (Finger f : kFingers)
            out += std::string("rmse_deg.") + finger_name(f) + " = " +
                   format_double((*rmse_per_finger)[static_cast<size_t>(f)]) + "\n";
    return out;
}

std::string results_to_jsonl(std::span<const FrameResult> results) {
    std::string out;
    for (const FrameResult& r : results) {
        nlohmann::json j;
        j["frame"] = r.frame_index;
        j["predicted_configuration"] = config_code(r.predicted_configuration);
        j["used_cnn"] = config_code(r.used_cnn_configuration);
        j["predicted_flexion_deg"] = r.predicted_angles.flexion;
        if (r.true_configuration) j["true_configuration"] = config_code(*r.true_configuration);
        if (r.true_angles) j["true_flexion_deg"] = r.true_angles->flexion;
        j["svc_seconds"] = r.svc_seconds;
        j["cnn_seconds"] = r.cnn_seconds;
        j["total_seconds"] = r.total_seconds;
        out += j.dump();
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundle directory
// ---------------------------------------------------------------------------

namespace {
constexpr uint32_t kBundleVersion = 1;
}

void save_bundle(const ModelBundle& bundle, const std::string& dir) {
    bundle.check_coverage();
    fs::create_directories(dir);
    std::string manifest;
    manifest += "version = " + std::to_string(kBundleVersion) + "\n";
    manifest += "svc_file = svc.model\n";
    std::string classes;
    for (ConfigId c : bundle.svc.classes) {
        if (!classes.empty()) classes += ",";
        classes += config_code(c);
    }
    manifest += "classes = " + classes + "\n";
    manifest += "svc_pre_height = " + std::to_string(bundle.svc_preprocess.target_height) + "\n";
    manifest += "svc_pre_width = " + std::to_string(bundle.svc_preprocess.target_width) + "\n";
    manifest +=
        "svc_pre_log_range = " + format_double(bundle.svc_preprocess.log_dynamic_range) + "\n";
    manifest += "cnn_pre_height = " + std::to_string(bundle.cnn_preprocess.target_height) + "\n";
    manifest += "cnn_pre_width = " + std::to_string(bundle.cnn_preprocess.target_width) + "\n";
    manifest +=
        "cnn_pre_log_range = " + format_double(bundle.cnn_preprocess.log_dynamic_range) + "\n";
    for (const auto& [id, model] : bundle.cnn_by_configuration) {
        const std::string name = std::string("cnn_") + config_code(id) + ".model";
        manifest += std::string("cnn_file_") + config_code(id) + " = " + name + "\n";
        save_cnn(model, (fs::path(dir) / name).string());
    }
    save_svc(bundle.svc, (fs::path(dir) / "svc.model").string());
    write_file((fs::path(dir) / "bundle.txt").string(), manifest);
}

ModelBundle load_bundle(const std::string& dir) {
    const std::string manifest_path = (fs::path(dir) / "bundle.txt").string();
    if (!fs::exists(manifest_path)) throw IoError("missing bundle manifest " + manifest_path);

    std::map<std::string, std::string> kv;
    {
        std::istringstream in(read_file(manifest_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw FormatError(manifest_path + ": expected key=value, got '" + line + "'");
            auto trim = [](std::string s) {
                const size_t a = s.find_first_not_of(" \t\r");
                const size_t b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw FormatError(manifest_path + ": missing key '" + key + "'");
        return it->second;
    };
    if (need("version") != std::to_string(kBundleVersion))
        throw FormatError(manifest_path + ": bundle version " + need("version") + ", expected " +
                          std::to_string(kBundleVersion));

    ModelBundle bundle;
    bundle.svc_preprocess.target_height = std::stoi(need("svc_pre_height"));
    bundle.svc_preprocess.target_width = std::stoi(need("svc_pre_width"));
    bundle.svc_preprocess.log_dynamic_range = std::stod(need("svc_pre_log_range"));
    bundle.cnn_preprocess.target_height = std::stoi(need("cnn_pre_height"));
    bundle.cnn_preprocess.target_width = std::stoi(need("cnn_pre_width"));
    bundle.cnn_preprocess.log_dynamic_range = std::stod(need("cnn_pre_log_range"));

    const std::string svc_path = (fs::path(dir) / need("svc_file")).string();
    if (!fs::exists(svc_path)) throw IoError("bundle: missing SVC model file " + svc_path);
    bundle.svc = load_svc(svc_path);

    for (ConfigId c : bundle.svc.classes) {
        const std::string key = std::string("cnn_file_") + config_code(c);
        auto it = kv.find(key);
        if (it == kv.end())
            throw BundleError(std::string("bundle coverage gap: configuration ") +
                              config_code(c) + " is missing from the manifest");
        const std::string path = (fs::path(dir) / it->second).string();
        if (!fs::exists(path))
            throw IoError(std::string("bundle: missing CNN model file ") + path + " for " +
                          config_code(c));
        bundle.cnn_by_configuration.emplace(c, load_cnn(path));
    }
    bundle.check_coverage();
    return bundle;
}

}  // namespace sono
