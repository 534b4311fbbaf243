#include "har/metrics.hpp"

#include <cstdio>
#include <numeric>

namespace har {

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::support(std::size_t c) const {
    std::uint64_t n = 0;
    for (std::size_t p = 0; p < classes; ++p) n += at(c, p);
    return n;
}

ConfusionMatrix confusion_matrix(const std::vector<std::size_t>& truth,
                                 const std::vector<std::size_t>& preds,
                                 std::size_t classes) {
    if (truth.size() != preds.size())
        throw DimensionError("confusion_matrix: " + std::to_string(truth.size()) +
                             " labels vs " + std::to_string(preds.size()) + " predictions");
    ConfusionMatrix m(classes);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] >= classes || preds[k] >= classes)
            throw DimensionError("confusion_matrix: class index out of range at item " +
                                 std::to_string(k));
        ++m.at(truth[k], preds[k]);
    }
    return m;
}

namespace {

void require_nonempty(const ConfusionMatrix& m, const char* op) {
    if (m.classes == 0 || m.total() == 0)
        throw DimensionError(std::string(op) + ": empty confusion matrix");
}

double class_precision(const ConfusionMatrix& m, std::size_t c) {
    std::uint64_t tp = m.at(c, c), predicted = 0;
    for (std::size_t t = 0; t < m.classes; ++t) predicted += m.at(t, c);
    if (predicted == 0) return 0.0;
    return static_cast<double>(tp) / static_cast<double>(predicted);
}

double class_recall(const ConfusionMatrix& m, std::size_t c) {
    std::uint64_t tp = m.at(c, c), actual = m.support(c);
    if (actual == 0) return 0.0;
    return static_cast<double>(tp) / static_cast<double>(actual);
}

}  // namespace

double accuracy(const ConfusionMatrix& m) {
    require_nonempty(m, "accuracy");
    std::uint64_t correct = 0;
    for (std::size_t c = 0; c < m.classes; ++c) correct += m.at(c, c);
    return static_cast<double>(correct) / static_cast<double>(m.total());
}

double macro_precision(const ConfusionMatrix& m) {
    require_nonempty(m, "macro_precision");
    double sum = 0.0;
    for (std::size_t c = 0; c < m.classes; ++c) sum += class_precision(m, c);
    return sum / static_cast<double>(m.classes);
}

double macro_recall(const ConfusionMatrix& m) {
    require_nonempty(m, "macro_recall");
    double sum = 0.0;
    for (std::size_t c = 0; c < m.classes; ++c) sum += class_recall(m, c);
    return sum / static_cast<double>(m.classes);
}

double weighted_f1(const ConfusionMatrix& m) {
    require_nonempty(m, "weighted_f1");
    const double n_total = static_cast<double>(m.total());
    double sum = 0.0;
    for (std::size_t c = 0; c < m.classes; ++c) {
        double p = class_precision(m, c);
        double r = class_recall(m, c);
        if (p + r == 0.0) continue;
        double weight = static_cast<double>(m.support(c)) / n_total;
        sum += 2.0 * weight * (p * r) / (p + r);
    }
    return sum;
}

MetricsReport compute_metrics(const ConfusionMatrix& m) {
    MetricsReport r;
    r.accuracy = accuracy(m);
    r.macro_precision = macro_precision(m);
    r.macro_recall = macro_recall(m);
    r.weighted_f1 = weighted_f1(m);
    r.total = m.total();
    for (std::size_t c = 0; c < m.classes; ++c) {
        ClassMetrics cm;
        cm.precision = class_precision(m, c);
        cm.recall = class_recall(m, c);
        cm.support = m.support(c);
        cm.f1 = cm.precision + cm.recall > 0.0
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
        r.per_class.push_back(cm);
    }
    return r;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

}  // namespace

std::string format_metrics_kv(const MetricsReport& r,
                              const std::vector<std::string>& class_names) {
    std::string out;
    out += "total=" + std::to_string(r.total) + "\n";
    out += "accuracy=" + fmt(r.accuracy) + "\n";
    out += "macro_precision=" + fmt(r.macro_precision) + "\n";
    out += "macro_recall=" + fmt(r.macro_recall) + "\n";
    out += "weighted_f1=" + fmt(r.weighted_f1) + "\n";
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const std::string& name = class_names[c];
        out += name + "_precision=" + fmt(r.per_class[c].precision) + "\n";
        out += name + "_recall=" + fmt(r.per_class[c].recall) + "\n";
        out += name + "_f1=" + fmt(r.per_class[c].f1) + "\n";
        out += name + "_support=" + std::to_string(r.per_class[c].support) + "\n";
    }
    return out;
}

std::string format_metrics_table(const MetricsReport& r,
                                 const std::vector<std::string>& class_names) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-12s %10s %10s %10s %10s\n", "class", "precision",
                  "recall", "f1", "support");
    out += buf;
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const ClassMetrics& cm = r.per_class[c];
        std::snprintf(buf, sizeof(buf), "%-12s %10.4f %10.4f %10.4f %10llu\n",
                      class_names[c].c_str(), cm.precision, cm.recall, cm.f1,
                      static_cast<unsigned long long>(cm.support));
        out += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "\naccuracy=%.4f macro_precision=%.4f macro_recall=%.4f weighted_f1=%.4f "
                  "(n=%llu)\n",
                  r.accuracy, r.macro_precision, r.macro_recall, r.weighted_f1,
                  static_cast<unsigned long long>(r.total));
    out += buf;
    return out;
}

std::string format_confusion_csv(const ConfusionMatrix& m,
                                 const std::vector<std::string>& class_names) {
    std::string out = "true\\pred";
    for (std::size_t c = 0; c < m.classes; ++c) out += "," + class_names[c];
    out += "\n";
    for (std::size_t t = 0; t < m.classes; ++t) {
        out += class_names[t];
        for (std::size_t p = 0; p < m.classes; ++p)
            out += "," + std::to_string(m.at(t, p));
        out += "\n";
    }
    return out;
}

}  // namespace har
