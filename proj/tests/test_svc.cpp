#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sono/svc.hpp"

using namespace sono;

namespace {

LabeledFeatures sample(std::initializer_list<double> x, ConfigId label, size_t order = 0) {
    LabeledFeatures lf;
    lf.features.assign(x.begin(), x.end());
    lf.label = label;
    lf.order = order;
    return lf;
}

FeatureDataset separable_1d() {
    FeatureDataset data;
    for (int i = 0; i < 50; ++i) {
        data.push_back(sample({-1.0}, ConfigId::C1, data.size()));
        data.push_back(sample({+1.0}, ConfigId::C2, data.size()));
    }
    return data;
}

double train_accuracy(const SvcModel& model, const FeatureDataset& data) {
    size_t correct = 0;
    for (const LabeledFeatures& s : data)
        if (predict_svc(model, s.features).label == s.label) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("separable one-dimensional data trains to full accuracy") {
    const FeatureDataset data = separable_1d();
    const SvcModel model = train_svc(data, 1e-4, 20, 7);
    CHECK(train_accuracy(model, data) == 100.0);
    // A training point predicts its own label.
    CHECK(predict_svc(model, data[0].features).label == ConfigId::C1);
    CHECK(predict_svc(model, data[1].features).label == ConfigId::C2);
}

TEST_CASE("extreme regularization collapses the weights") {
    // Overlapping 1-D classes with an 80/20 imbalance: a usable separator
    // needs real weight mass, so a huge lambda forces the prediction toward
    // the majority class.
    FeatureDataset data;
    Rng rng(41);
    for (int i = 0; i < 80; ++i)
        data.push_back(sample({0.3 + rng.normal()}, ConfigId::C1, data.size()));
    for (int i = 0; i < 20; ++i)
        data.push_back(sample({-0.3 + rng.normal()}, ConfigId::C2, data.size()));

    const SvcModel small_lambda = train_svc(data, 1e-4, 20, 7);
    const SvcModel huge_lambda = train_svc(data, 1e6, 20, 7);

    auto weight_mass = [](const SvcModel& m) {
        double s = 0.0;
        for (const auto& w : m.weights)
            for (double v : w) s += std::fabs(v);
        return s;
    };
    CHECK(weight_mass(huge_lambda) < 1e-3);
    CHECK(weight_mass(huge_lambda) < 1e-3 * weight_mass(small_lambda));

    size_t majority = 0;
    for (const LabeledFeatures& s : data)
        if (predict_svc(huge_lambda, s.features).label == ConfigId::C1) ++majority;
    CHECK(majority >= 90);
    CHECK(train_accuracy(huge_lambda, data) <= train_accuracy(small_lambda, data));
}

TEST_CASE("zero model predicts the first class by tie-break") {
    SvcModel model;
    model.classes = {ConfigId::C3, ConfigId::C5, ConfigId::C9};
    model.feature_dim = 2;
    model.weights.assign(3, std::vector<double>(2, 0.0));
    model.biases.assign(3, 0.0);
    const auto pred = predict_svc(model, std::vector<double>{0.4, -0.2});
    CHECK(pred.label == ConfigId::C3);
    for (double s : pred.scores) CHECK(s == 0.0);
}

TEST_CASE("hand-built two-class model scores by dot product") {
    SvcModel model;
    model.classes = {ConfigId::C1, ConfigId::C2};
    model.feature_dim = 1;
    model.weights = {{+1.0}, {-1.0}};
    model.biases = {0.0, 0.0};
    const auto pred = predict_svc(model, std::vector<double>{0.7});
    CHECK(pred.scores[0] == doctest::Approx(0.7));
    CHECK(pred.scores[1] == doctest::Approx(-0.7));
    CHECK(pred.label == ConfigId::C1);
}

TEST_CASE("prediction argmax is invariant under positive scaling") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        SvcModel model;
        model.classes = {ConfigId::C1, ConfigId::C2, ConfigId::C4};
        model.feature_dim = 5;
        for (int c = 0; c < 3; ++c) {
            std::vector<double> w(5);
            for (double& v : w) v = rng.normal();
            model.weights.push_back(std::move(w));
            model.biases.push_back(rng.normal());
        }
        std::vector<double> x(5);
        for (double& v : x) v = rng.normal();
        const ConfigId base = predict_svc(model, x).label;

        const double scale = rng.uniform(0.01, 100.0);
        SvcModel scaled = model;
        for (auto& w : scaled.weights)
            for (double& v : w) v *= scale;
        for (double& b : scaled.biases) b *= scale;
        CHECK(predict_svc(scaled, x).label == base);
    }
}

TEST_CASE("same data and seed produce identical model bytes") {
    const FeatureDataset data = separable_1d();
    const SvcModel a = train_svc(data, 1e-4, 10, 99);
    const SvcModel b = train_svc(data, 1e-4, 10, 99);
    CHECK(serialize_svc(a) == serialize_svc(b));
    const SvcModel c = train_svc(data, 1e-4, 10, 100);
    CHECK(serialize_svc(a) != serialize_svc(c));
}

TEST_CASE("best-so-far objective never increases and ends at or below start") {
    FeatureDataset data;
    Rng rng(31);
    for (int i = 0; i < 60; ++i) {
        const int cls = i % 3;
        std::vector<double> x{rng.normal() + 2.0 * cls, rng.normal() - cls};
        LabeledFeatures lf;
        lf.features = x;
        lf.label = static_cast<ConfigId>(cls);
        lf.order = static_cast<size_t>(i);
        data.push_back(lf);
    }
    SvcTrainHistory history;
    const SvcModel model = train_svc(data, 1e-3, 15, 5, &history);
    REQUIRE(history.best_so_far.size() == 15);
    for (size_t e = 1; e < history.best_so_far.size(); ++e)
        CHECK(history.best_so_far[e] <= history.best_so_far[e - 1] + 1e-12);
    // Zero model scores objective 1 per class; the returned model cannot be
    // worse.
    double total = 0.0;
    for (size_t c = 0; c < model.classes.size(); ++c)
        total += svc_objective(model.weights[c], model.biases[c], data, model.classes[c],
                               model.lambda);
    CHECK(total / static_cast<double>(model.classes.size()) <= 1.0 + 1e-12);
}

TEST_CASE("coarse lattice search finds nothing clearly better") {
    // Three classes, nine samples, two features.
    FeatureDataset data;
    data.push_back(sample({0.0, 1.0}, ConfigId::C1, 0));
    data.push_back(sample({-0.3, 1.2}, ConfigId::C1, 1));
    data.push_back(sample({0.2, 0.8}, ConfigId::C1, 2));
    data.push_back(sample({1.0, -0.8}, ConfigId::C2, 3));
    data.push_back(sample({1.3, -1.0}, ConfigId::C2, 4));
    data.push_back(sample({0.9, -1.1}, ConfigId::C2, 5));
    data.push_back(sample({-1.0, -1.0}, ConfigId::C3, 6));
    data.push_back(sample({-1.2, -0.7}, ConfigId::C3, 7));
    data.push_back(sample({-0.8, -1.3}, ConfigId::C3, 8));

    const double lambda = 1e-2;
    const SvcModel model = train_svc(data, lambda, 200, 12);

    for (size_t ci = 0; ci < model.classes.size(); ++ci) {
        const double trained =
            svc_objective(model.weights[ci], model.biases[ci], data, model.classes[ci], lambda);
        double lattice_best = 1e18;
        for (double w1 = -3.0; w1 <= 3.0 + 1e-9; w1 += 0.25)
            for (double w2 = -3.0; w2 <= 3.0 + 1e-9; w2 += 0.25)
                for (double b = -2.0; b <= 2.0 + 1e-9; b += 0.25) {
                    const std::vector<double> w{w1, w2};
                    lattice_best = std::min(
                        lattice_best, svc_objective(w, b, data, model.classes[ci], lambda));
                }
        CHECK(lattice_best >= 0.95 * trained);
    }
}

TEST_CASE("label and shape validation") {
    FeatureDataset one_class;
    one_class.push_back(sample({1.0}, ConfigId::C1));
    one_class.push_back(sample({2.0}, ConfigId::C1));
    CHECK_THROWS_AS(train_svc(one_class, 1e-4, 5, 1), DegenerateLabels);

    FeatureDataset ragged;
    ragged.push_back(sample({1.0}, ConfigId::C1));
    ragged.push_back(sample({1.0, 2.0}, ConfigId::C2));
    CHECK_THROWS_AS(train_svc(ragged, 1e-4, 5, 1), ShapeError);

    const SvcModel model = train_svc(separable_1d(), 1e-4, 5, 1);
    CHECK_THROWS_AS(predict_svc(model, std::vector<double>{1.0, 2.0}), ShapeError);
    CHECK_THROWS_AS(train_svc(FeatureDataset{}, 1e-4, 5, 1), DataError);
}

TEST_CASE("confusion over a test set lines up with predictions") {
    const FeatureDataset data = separable_1d();
    const SvcModel model = train_svc(data, 1e-4, 20, 7);
    const ConfusionMatrix cm = confusion(model, data);
    CHECK(cm.total() == data.size());
    CHECK(cm.diagonal() == data.size());
}

TEST_CASE("model file round trip is exact, bad files are rejected") {
    const FeatureDataset data = separable_1d();
    SvcModel model = train_svc(data, 3e-4, 8, 21);
    model.train_meta.split_fraction = 0.3;

    const std::string path = "svc_roundtrip.model";
    save_svc(model, path);
    const SvcModel back = load_svc(path);
    CHECK(serialize_svc(back) == serialize_svc(model));
    CHECK(back.train_meta.seed == model.train_meta.seed);
    CHECK(back.train_meta.split_fraction == 0.3);
    // Bit-identical scores after the round trip.
    const auto p1 = predict_svc(model, data[0].features);
    const auto p2 = predict_svc(back, data[0].features);
    CHECK(p1.scores == p2.scores);

    std::string bytes = serialize_svc(model);
    bytes[0] = 'X';
    CHECK_THROWS_AS(deserialize_svc(bytes, "corrupt"), FormatError);
    const std::string truncated = serialize_svc(model).substr(0, 40);
    CHECK_THROWS_AS(deserialize_svc(truncated, "truncated"), FormatError);
    std::string trailing = serialize_svc(model) + "zz";
    CHECK_THROWS_AS(deserialize_svc(trailing, "trailing"), FormatError);
    CHECK_THROWS_AS(load_svc("does_not_exist.model"), IoError);
}
