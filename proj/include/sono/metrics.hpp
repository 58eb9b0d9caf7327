#ifndef SONO_METRICS_HPP
#define SONO_METRICS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sono/synthgen.hpp"

namespace sono {

struct ConfusionMatrix {
    std::vector<ConfigId> classes;            // row/column order
    std::vector<std::vector<uint64_t>> counts;  // counts[true][predicted]

    uint64_t total() const;
    uint64_t diagonal() const;
    double accuracy_percent() const;  // diagonal / total * 100
    std::string to_csv() const;
};

/// Overall correct-prediction rate, percent. Throws on length mismatch or
/// empty input.
double accuracy_percent(std::span<const ConfigId> truth, std::span<const ConfigId> predicted);

/// sqrt(mean((y - y_hat)^2)). Throws on length mismatch or empty input.
double rmse(std::span<const double> y, std::span<const double> y_hat);

ConfusionMatrix confusion_matrix(std::span<const ConfigId> truth,
                                 std::span<const ConfigId> predicted,
                                 std::span<const ConfigId> classes);

// ---------------------------------------------------------------------------
// RMSE aggregation. One cell per (configuration, speed, seed, finger); the
// report reduces cells to per-configuration means (across speeds, seeds and
// fingers), per-seed means, and the grand mean over every cell.
// ---------------------------------------------------------------------------

struct RmseCell {
    ConfigId configuration = ConfigId::Open;
    Speed speed = Speed::Medium;
    uint64_t seed = 0;
    Finger finger = Finger::Index;
    double rmse_deg = 0.0;
};

struct RmseReport {
    std::vector<RmseCell> cells;
    std::vector<std::pair<ConfigId, double>> per_configuration;
    std::vector<std::pair<uint64_t, double>> per_seed;
    double grand_mean = 0.0;

    std::string to_table() const;      // human-readable text tables
    std::string to_key_values() const; // machine-readable key=value lines
};

RmseReport aggregate_rmse(std::span<const RmseCell> cells);

}  // namespace sono

#endif
