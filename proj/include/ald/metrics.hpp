#pragma once

// Per-class precision / recall / F1 and the support-weighted average F1.

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace ald {

struct ClassMetrics {
    std::string label;
    int support = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    std::vector<std::vector<int>> confusion; // [true][predicted]
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    int total = 0;
};

// Zero-denominator convention: precision, recall and F1 fall back to 0.
inline MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                     const std::vector<std::string>& label_names) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("metrics: " + std::to_string(y_true.size()) + " truths vs " +
                                    std::to_string(y_pred.size()) + " predictions");
    if (y_true.empty()) throw std::invalid_argument("metrics: empty prediction set");
    const int n_classes = static_cast<int>(label_names.size());

    MetricsReport report;
    report.total = static_cast<int>(y_true.size());
    report.confusion.assign(n_classes, std::vector<int>(n_classes, 0));
    int correct = 0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes)
            throw std::invalid_argument("metrics: label index out of range at record " + std::to_string(i));
        ++report.confusion[y_true[i]][y_pred[i]];
        if (y_true[i] == y_pred[i]) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / report.total;

    for (int c = 0; c < n_classes; ++c) {
        ClassMetrics m;
        m.label = label_names[c];
        int tp = report.confusion[c][c], fp = 0, fn = 0;
        for (int o = 0; o < n_classes; ++o) {
            if (o == c) continue;
            fp += report.confusion[o][c];
            fn += report.confusion[c][o];
        }
        m.support = tp + fn;
        m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        report.weighted_f1 += m.f1 * m.support;
        report.per_class.push_back(std::move(m));
    }
    report.weighted_f1 /= report.total;
    return report;
}

inline std::string format_metrics(const MetricsReport& report) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %9s %9s %9s %9s\n", "class", "precision", "recall", "f1", "support");
    out += buf;
    for (const ClassMetrics& m : report.per_class) {
        std::snprintf(buf, sizeof buf, "%-16s %9.4f %9.4f %9.4f %9d\n", m.label.c_str(), m.precision, m.recall,
                      m.f1, m.support);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "accuracy %.4f  weighted_f1 %.4f  total %d\n", report.accuracy,
                  report.weighted_f1, report.total);
    out += buf;
    return out;
}

} // namespace ald
