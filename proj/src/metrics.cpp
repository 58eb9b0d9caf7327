#include "sono/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace sono {

uint64_t ConfusionMatrix::total() const {
    uint64_t n = 0;
    for (const auto& row : counts)
        for (uint64_t v : row) n += v;
    return n;
}

uint64_t ConfusionMatrix::diagonal() const {
    uint64_t n = 0;
    for (size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
    return n;
}

double ConfusionMatrix::accuracy_percent() const {
    const uint64_t n = total();
    if (n == 0) throw DataError("empty confusion matrix");
    return 100.0 * static_cast<double>(diagonal()) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
    std::string out = "true\\predicted";
    for (ConfigId c : classes) out += std::string(",") + config_code(c);
    out += "\n";
    for (size_t i = 0; i < classes.size(); ++i) {
        out += config_code(classes[i]);
        for (uint64_t v : counts[i]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

double accuracy_percent(std::span<const ConfigId> truth, std::span<const ConfigId> predicted) {
    if (truth.size() != predicted.size())
        throw ShapeError("accuracy: " + std::to_string(truth.size()) + " labels vs " +
                         std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw DataError("accuracy: empty input");
    size_t correct = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        if (truth[i] == predicted[i]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

double rmse(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size())
        throw ShapeError("rmse: " + std::to_string(y.size()) + " labels vs " +
                         std::to_string(y_hat.size()) + " predictions");
    if (y.empty()) throw DataError("rmse: empty input");
    double sum = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(y.size()));
}

ConfusionMatrix confusion_matrix(std::span<const ConfigId> truth,
                                 std::span<const ConfigId> predicted,
                                 std::span<const ConfigId> classes) {
    if (truth.size() != predicted.size()) throw ShapeError("confusion: length mismatch");
    ConfusionMatrix cm;
    cm.classes.assign(classes.begin(), classes.end());
    cm.counts.assign(classes.size(), std::vector<uint64_t>(classes.size(), 0));
    auto index_of = [&](ConfigId id) {
        for (size_t i = 0; i < cm.classes.size(); ++i)
            if (cm.classes[i] == id) return i;
        throw DataError(std::string("label ") + config_code(id) + " not in class set");
    };
    for (size_t i = 0; i < truth.size(); ++i)
        cm.counts[index_of(truth[i])][index_of(predicted[i])] += 1;
    return cm;
}

RmseReport aggregate_rmse(std::span<const RmseCell> cells) {
    if (cells.empty()) throw DataError("aggregate_rmse: no cells");
    RmseReport report;
    report.cells.assign(cells.begin(), cells.end());

    std::map<int, std::pair<double, size_t>> by_config;
    std::map<uint64_t, std::pair<double, size_t>> by_seed;
    double sum = 0.0;
    for (const RmseCell& c : cells) {
        if (!(c.rmse_deg >= 0.0)) throw DataError("aggregate_rmse: negative or NaN cell");
        auto& pc = by_config[static_cast<int>(c.configuration)];
        pc.first += c.rmse_deg;
        pc.second += 1;
        auto& ps = by_seed[c.seed];
        ps.first += c.rmse_deg;
        ps.second += 1;
        sum += c.rmse_deg;
    }
    for (const auto& [cfg, acc] : by_config)
        report.per_configuration.emplace_back(static_cast<ConfigId>(cfg),
                                              acc.first / static_cast<double>(acc.second));
    for (const auto& [seed, acc] : by_seed)
        report.per_seed.emplace_back(seed, acc.first / static_cast<double>(acc.second));
    report.grand_mean = sum / static_cast<double>(cells.size());
    return report;
}

std::string RmseReport::to_table() const {
    char buf[160];
    std::string out = "RMSE by configuration (deg, mean over speeds/seeds/fingers)\n";
    for (const auto& [cfg, v] : per_configuration) {
        std::snprintf(buf, sizeof(buf), "  %-5s %-15s %8.4f\n", config_code(cfg),
                      config_name(cfg), v);
        out += buf;
    }
    out += "RMSE by seed (deg, mean over configurations/speeds/fingers)\n";
    for (const auto& [seed, v] : per_seed) {
        std::snprintf(buf, sizeof(buf), "  seed %-12llu %8.4f\n",
                      static_cast<unsigned long long>(seed), v);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "grand mean: %.4f deg over %zu cells\n", grand_mean,
                  cells.size());
    out += buf;
    return out;
}

std::string RmseReport::to_key_values() const {
    std::string out;
    for (const RmseCell& c : cells)
        out += std::string("rmse.") + config_code(c.configuration) + "." +
               speed_name(c.speed) + ".seed" + std::to_string(c.seed) + "." +
               finger_name(c.finger) + " = " + format_double(c.rmse_deg) + "\n";
    for (const auto& [cfg, v] : per_configuration)
        out += std::string("rmse.mean.") + config_code(cfg) + " = " + format_double(v) + "\n";
    for (const auto& [seed, v] : per_seed)
        out += "rmse.mean.seed" + std::to_string(seed) + " = " + format_double(v) + "\n";
    out += "rmse.grand_mean = " + format_double(grand_mean) + "\n";
    return out;
}

}  // namespace sono
