#pragma once

// Confusion-matrix metrics and ROC/AUC.
// accuracy = (TP+TN)/(TP+FN+FP+TN), precision = TP/(TP+FP),
// recall = TP/(TP+FN), F1 = 2*precision*recall/(precision+recall).
// Undefined denominators surface as empty optionals, never as silent zeros.
// The ROC sweep groups tied scores into a single threshold step, which makes
// trapezoidal AUC equal the pairwise Mann-Whitney statistic.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meterae/linalg.hpp"

namespace meterae {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
};

struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> mse;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) at +inf threshold to (1,1)
    double auc = 0.0;
};

// Cross-tabulate predictions against truth; `true` marks the positive class.
inline ConfusionMatrix confusion(const std::vector<bool>& predicted,
                                 const std::vector<bool>& truth) {
    if (predicted.size() != truth.size())
        throw_dim("confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                  std::to_string(truth.size()) + " truth labels");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (truth[i])
            predicted[i] ? ++cm.tp : ++cm.fn;
        else
            predicted[i] ? ++cm.fp : ++cm.tn;
    }
    return cm;
}

inline Metrics metrics(const ConfusionMatrix& cm,
                       const std::vector<double>* errors = nullptr) {
    if (cm.total() == 0)
        throw std::invalid_argument("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp > 0)
        m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    if (cm.tp + cm.fn > 0)
        m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall > 0.0))
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    if (errors) {
        double total = 0.0;
        for (double e : *errors) total += e;
        m.mse = errors->empty() ? 0.0 : total / static_cast<double>(errors->size());
    }
    return m;
}

// Threshold sweep over distinct score values, higher score = more positive.
// Requires both classes present.
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<bool>& truth) {
    if (scores.size() != truth.size())
        throw_dim("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                  std::to_string(truth.size()) + " truth labels");
    std::uint64_t n_pos = 0, n_neg = 0;
    for (bool t : truth) (t ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: degenerate truth, only one class present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    RocCurve curve;
    curve.points.push_back(
        {0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::uint64_t tp = 0, fp = 0;
    double auc = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // Consume the whole group of tied scores as one threshold step.
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            truth[order[i]] ? ++tp : ++fp;
            ++i;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        auc += 0.5 * (fpr - prev_fpr) * (tpr + prev_tpr);
        curve.points.push_back({fpr, tpr, s});
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    curve.auc = auc;
    return curve;
}

}  // namespace meterae
