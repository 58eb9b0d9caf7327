#include "sono/svc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sono {

namespace {

constexpr char kSvcMagic[8] = {'S', 'O', 'N', 'O', 'S', 'V', 'C', '\0'};
constexpr uint32_t kSvcVersion = 1;

double dot_features(std::span<const double> w, std::span<const double> x) {
    double s = 0.0;
    for (size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
}

void check_dataset(const FeatureDataset& data) {
    if (data.empty()) throw DataError("svc: empty training set");
    const size_t dim = data.front().features.size();
    if (dim == 0) throw ShapeError("svc: zero-length feature vectors");
    for (size_t i = 0; i < data.size(); ++i)
        if (data[i].features.size() != dim)
            throw ShapeError("svc: sample " + std::to_string(i) + " has dim " +
                             std::to_string(data[i].features.size()) + ", expected " +
                             std::to_string(dim));
}

}  // namespace

double svc_objective(std::span<const double> w, double b, const FeatureDataset& data,
                     ConfigId positive_class, double lambda) {
    double hinge = 0.0;
    for (const LabeledFeatures& s : data) {
        const double y = s.label == positive_class ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * (dot_features(w, s.features) + b));
    }
    double w2 = 0.0;
    for (double v : w) w2 += v * v;
    return 0.5 * lambda * w2 + hinge / static_cast<double>(data.size());
}

SvcModel train_svc(const FeatureDataset& data, double lambda, int epochs, uint64_t seed,
                   SvcTrainHistory* history) {
    check_dataset(data);
    if (!(lambda > 0.0)) throw ConfigError("svc: lambda must be positive");
    if (epochs < 1) throw ConfigError("svc: epochs must be >= 1");

    std::set<ConfigId> present;
    for (const LabeledFeatures& s : data) present.insert(s.label);
    if (present.size() < 2)
        throw DegenerateLabels("svc: training data holds " + std::to_string(present.size()) +
                               " class(es); need at least 2");

    SvcModel model;
    model.classes.assign(present.begin(), present.end());
    model.feature_dim = data.front().features.size();
    model.lambda = lambda;
    model.train_meta.seed = seed;
    model.train_meta.epochs = static_cast<uint32_t>(epochs);

    const size_t n = data.size();
    const size_t n_classes = model.classes.size();
    model.weights.assign(n_classes, std::vector<double>(model.feature_dim, 0.0));
    model.biases.assign(n_classes, 0.0);

    if (history) {
        history->objective.assign(static_cast<size_t>(epochs), 0.0);
        history->best_so_far.assign(static_cast<size_t>(epochs), 0.0);
    }

    for (size_t ci = 0; ci < n_classes; ++ci) {
        const ConfigId cls = model.classes[ci];
        // The bias rides along as one extra regularized coordinate against a
        // constant input of 1, which keeps the 1/(lambda t) schedule stable
        // from the first step. Candidate models are still ranked with the
        // plain objective (bias unregularized), and the zero model is the
        // initial candidate, so the returned objective never exceeds 1.
        std::vector<double> w(model.feature_dim, 0.0);
        double b = 0.0;

        std::vector<double> best_w = w;
        double best_b = b;
        double best_obj = svc_objective(w, b, data, cls, lambda);  // zero model, = 1

        std::vector<double> w_avg(model.feature_dim, 0.0);
        double b_avg = 0.0;

        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng(splitmix64(seed + 0x51C0ULL * (ci + 1)));

        auto consider = [&](const std::vector<double>& cw, double cb) {
            const double obj = svc_objective(cw, cb, data, cls, lambda);
            if (obj < best_obj) {
                best_obj = obj;
                best_w = cw;
                best_b = cb;
            }
            return obj;
        };

        uint64_t t = 0;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            rng.shuffle(order);
            std::fill(w_avg.begin(), w_avg.end(), 0.0);
            b_avg = 0.0;
            for (size_t i : order) {
                ++t;
                const double eta = 1.0 / (lambda * static_cast<double>(t));
                const LabeledFeatures& s = data[i];
                const double y = s.label == cls ? 1.0 : -1.0;
                const double margin = y * (dot_features(w, s.features) + b);
                const double shrink = 1.0 - eta * lambda;  // = 1 - 1/t
                for (double& v : w) v *= shrink;
                b *= shrink;
                if (margin < 1.0) {
                    const double step = eta * y;
                    for (size_t j = 0; j < w.size(); ++j) w[j] += step * s.features[j];
                    b += step;
                }
                for (size_t j = 0; j < w.size(); ++j) w_avg[j] += w[j];
                b_avg += b;
            }
            const double inv = 1.0 / static_cast<double>(n);
            for (double& v : w_avg) v *= inv;
            b_avg *= inv;

            const double obj = consider(w, b);
            consider(w_avg, b_avg);
            if (history) {
                history->objective[static_cast<size_t>(epoch)] += obj / static_cast<double>(n_classes);
                history->best_so_far[static_cast<size_t>(epoch)] +=
                    best_obj / static_cast<double>(n_classes);
            }
        }
        model.weights[ci] = std::move(best_w);
        model.biases[ci] = best_b;
    }
    return model;
}

SvcPrediction predict_svc(const SvcModel& model, std::span<const double> features) {
    if (features.size() != model.feature_dim)
        throw ShapeError("svc: feature length " + std::to_string(features.size()) +
                         ", model expects " + std::to_string(model.feature_dim));
    SvcPrediction pred;
    pred.scores.resize(model.classes.size());
    size_t best = 0;
    for (size_t ci = 0; ci < model.classes.size(); ++ci) {
        pred.scores[ci] = dot_features(model.weights[ci], features) + model.biases[ci];
        if (pred.scores[ci] > pred.scores[best]) best = ci;
    }
    pred.label = model.classes[best];
    return pred;
}

ConfusionMatrix confusion(const SvcModel& model, const FeatureDataset& test_set) {
    std::vector<ConfigId> truth, predicted;
    truth.reserve(test_set.size());
    predicted.reserve(test_set.size());
    for (const LabeledFeatures& s : test_set) {
        truth.push_back(s.label);
        predicted.push_back(predict_svc(model, s.features).label);
    }
    return confusion_matrix(truth, predicted, model.classes);
}

std::string serialize_svc(const SvcModel& model) {
    std::string out(kSvcMagic, sizeof(kSvcMagic));
    put_u32(out, kSvcVersion);
    put_u32(out, static_cast<uint32_t>(model.classes.size()));
    for (ConfigId c : model.classes) put_u32(out, static_cast<uint32_t>(c));
    put_u64(out, model.feature_dim);
    put_f64(out, model.lambda);
    put_u64(out, model.train_meta.seed);
    put_u32(out, model.train_meta.epochs);
    put_f64(out, model.train_meta.split_fraction);
    for (size_t ci = 0; ci < model.classes.size(); ++ci) {
        for (double v : model.weights[ci]) put_f64(out, v);
        put_f64(out, model.biases[ci]);
    }
    return out;
}

SvcModel deserialize_svc(const std::string& bytes, const std::string& origin) {
    ByteReader in(bytes, origin);
    if (in.get_bytes(sizeof(kSvcMagic)) != std::string(kSvcMagic, sizeof(kSvcMagic)))
        throw FormatError(origin + ": not an SVC model file (bad magic)");
    const uint32_t version = in.get_u32();
    if (version != kSvcVersion)
        throw FormatError(origin + ": SVC model version " + std::to_string(version) +
                          ", expected " + std::to_string(kSvcVersion));
    SvcModel model;
    const uint32_t n_classes = in.get_u32();
    if (n_classes == 0 || n_classes > 64) throw FormatError(origin + ": implausible class count");
    for (uint32_t i = 0; i < n_classes; ++i) {
        const uint32_t code = in.get_u32();
        if (code > static_cast<uint32_t>(ConfigId::Open))
            throw FormatError(origin + ": unknown class code " + std::to_string(code));
        model.classes.push_back(static_cast<ConfigId>(code));
    }
    model.feature_dim = in.get_u64();
    model.lambda = in.get_f64();
    model.train_meta.seed = in.get_u64();
    model.train_meta.epochs = in.get_u32();
    model.train_meta.split_fraction = in.get_f64();
    model.weights.assign(n_classes, std::vector<double>(model.feature_dim, 0.0));
    model.biases.assign(n_classes, 0.0);
    for (uint32_t ci = 0; ci < n_classes; ++ci) {
        for (double& v : model.weights[ci]) v = in.get_f64();
        model.biases[ci] = in.get_f64();
    }
    if (!in.exhausted())
        throw FormatError(origin + ": " + std::to_string(in.remaining()) +
                          " trailing bytes after model data");
    return model;
}

void save_svc(const SvcModel& model, const std::string& path) {
    write_file(path, serialize_svc(model));
}

SvcModel load_svc(const std::string& path) {
    return deserialize_svc(read_file(path), path);
}

}  // namespace sono
