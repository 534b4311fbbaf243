#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "har/errors.hpp"

namespace har {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::uint64_t> counts;  // classes x classes, row-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t c) : classes(c), counts(c * c, 0) {}

    std::uint64_t& at(std::size_t truth, std::size_t pred) {
        return counts[truth * classes + pred];
    }
    std::uint64_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * classes + pred];
    }
    std::uint64_t total() const;
    std::uint64_t support(std::size_t c) const;  // row sum: true count of class c
};

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& truth,
                                 const std::vector<std::size_t>& preds,
                                 std::size_t classes = 6);

// Per-class terms with an undefined denominator contribute 0.
double accuracy(const ConfusionMatrix& m);
double macro_precision(const ConfusionMatrix& m);
double macro_recall(const ConfusionMatrix& m);
// Support-weighted F1: sum_c 2*(n_c/N) * p_c*r_c / (p_c+r_c).
double weighted_f1(const ConfusionMatrix& m);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct MetricsReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double weighted_f1 = 0.0;
    std::vector<ClassMetrics> per_class;
    std::uint64_t total = 0;
};

MetricsReport compute_metrics(const ConfusionMatrix& m);

// Flat key=value block (machine-readable twin of the table).
std::string format_metrics_kv(const MetricsReport& r,
                              const std::vector<std::string>& class_names);
std::string format_metrics_table(const MetricsReport& r,
                                 const std::vector<std::string>& class_names);
std::string format_confusion_csv(const ConfusionMatrix& m,
                                 const std::vector<std::string>& class_names);

}  // namespace har
