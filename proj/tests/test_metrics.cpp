#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sono/metrics.hpp"

using namespace sono;

TEST_CASE("accuracy identities") {
    std::vector<ConfigId> truth{ConfigId::C1, ConfigId::C2, ConfigId::C3};
    CHECK(accuracy_percent(truth, truth) == 100.0);

    std::vector<ConfigId> wrong{ConfigId::C2, ConfigId::C3, ConfigId::C1};
    CHECK(accuracy_percent(truth, wrong) == 0.0);
}

TEST_CASE("seven of ten correct is seventy percent") {
    std::vector<ConfigId> truth(10, ConfigId::C1);
    std::vector<ConfigId> pred(10, ConfigId::C1);
    for (int i = 0; i < 3; ++i) pred[static_cast<size_t>(i)] = ConfigId::C2;
    CHECK(accuracy_percent(truth, pred) == doctest::Approx(70.0).epsilon(1e-12));
}

TEST_CASE("accuracy rejects empty and mismatched input") {
    std::vector<ConfigId> empty;
    CHECK_THROWS_AS(accuracy_percent(empty, empty), DataError);
    std::vector<ConfigId> one{ConfigId::C1};
    std::vector<ConfigId> two{ConfigId::C1, ConfigId::C2};
    CHECK_THROWS_AS(accuracy_percent(one, two), ShapeError);
}

TEST_CASE("rmse hand values") {
    const std::vector<double> z{0.0, 0.0}, p{3.0, 4.0};
    CHECK(std::fabs(rmse(z, p) - std::sqrt(12.5)) < 1e-12);
    CHECK(rmse(p, p) == 0.0);
    const std::vector<double> one{1.0}, zero{0.0};
    CHECK(rmse(one, zero) == 1.0);
    CHECK_THROWS_AS(rmse({}, {}), DataError);
    CHECK_THROWS_AS(rmse(one, p), ShapeError);
}

TEST_CASE("rmse is zero only for identical sequences and permutation-stable") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> y(16), y_hat(16);
        for (size_t i = 0; i < y.size(); ++i) {
            y[i] = rng.uniform(-10, 10);
            y_hat[i] = y[i] + rng.uniform(-1, 1);
        }
        const double base = rmse(y, y_hat);
        CHECK(base >= 0.0);
        if (y != y_hat) CHECK(base > 0.0);

        // Same permutation applied to both leaves the value unchanged.
        std::vector<size_t> perm(y.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        rng.shuffle(perm);
        std::vector<double> py(y.size()), py_hat(y.size());
        for (size_t i = 0; i < perm.size(); ++i) {
            py[i] = y[perm[i]];
            py_hat[i] = y_hat[perm[i]];
        }
        CHECK(rmse(py, py_hat) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("confusion matrix counts and diagonal identity") {
    const std::vector<ConfigId> classes{ConfigId::C1, ConfigId::C2, ConfigId::C3};
    std::vector<ConfigId> truth{ConfigId::C1, ConfigId::C1, ConfigId::C2, ConfigId::C3,
                                ConfigId::C3};
    std::vector<ConfigId> pred{ConfigId::C1, ConfigId::C2, ConfigId::C2, ConfigId::C3,
                               ConfigId::C1};
    const ConfusionMatrix cm = confusion_matrix(truth, pred, classes);
    CHECK(cm.total() == truth.size());
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[2][0] == 1);
    // Exact integer identity between the diagonal and accuracy.
    CHECK(cm.diagonal() == 3);
    CHECK(cm.accuracy_percent() == 100.0 * 3.0 / 5.0);
    CHECK(accuracy_percent(truth, pred) == cm.accuracy_percent());

    const std::string csv = cm.to_csv();
    CHECK(csv.find("C1") != std::string::npos);
    CHECK(csv.find(",1") != std::string::npos);
}

TEST_CASE("aggregation views and the grand mean") {
    std::vector<RmseCell> cells;
    RmseCell c;
    c.configuration = ConfigId::C1;
    c.speed = Speed::Slow;
    c.seed = 1;
    c.finger = Finger::Index;
    c.rmse_deg = 4.0;
    cells.push_back(c);

    // Single cell: the report equals the cell everywhere.
    RmseReport single = aggregate_rmse(cells);
    CHECK(single.grand_mean == 4.0);
    REQUIRE(single.per_configuration.size() == 1);
    CHECK(single.per_configuration[0].second == 4.0);
    REQUIRE(single.per_seed.size() == 1);
    CHECK(single.per_seed[0].second == 4.0);

    c.speed = Speed::Fast;
    c.rmse_deg = 6.0;
    cells.push_back(c);
    RmseReport two = aggregate_rmse(cells);
    CHECK(two.grand_mean == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(two.per_configuration[0].second == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("grand mean equals an independent recomputation") {
    Rng rng(17);
    std::vector<RmseCell> cells;
    double sum = 0.0;
    for (int cfg = 0; cfg < 11; ++cfg)
        for (int sp = 0; sp < 3; ++sp)
            for (int fi = 0; fi < 4; ++fi) {
                RmseCell c;
                c.configuration = static_cast<ConfigId>(cfg);
                c.speed = static_cast<Speed>(sp);
                c.seed = 1;
                c.finger = static_cast<Finger>(fi);
                c.rmse_deg = rng.uniform(0.0, 12.0);
                sum += c.rmse_deg;
                cells.push_back(c);
            }
    const RmseReport report = aggregate_rmse(cells);
    CHECK(std::fabs(report.grand_mean - sum / static_cast<double>(cells.size())) < 1e-12);

    // Per-configuration means recomputed independently.
    for (const auto& [cfg, mean] : report.per_configuration) {
        double s = 0.0;
        size_t n = 0;
        for (const RmseCell& c : cells)
            if (c.configuration == cfg) {
                s += c.rmse_deg;
                ++n;
            }
        CHECK(std::fabs(mean - s / static_cast<double>(n)) < 1e-12);
    }
    CHECK_THROWS_AS(aggregate_rmse(std::vector<RmseCell>{}), DataError);

    const std::string kvs = report.to_key_values();
    CHECK(kvs.find("rmse.grand_mean = ") != std::string::npos);
    CHECK(report.to_table().find("grand mean") != std::string::npos);
}
