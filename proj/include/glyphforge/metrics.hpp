#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glyphforge/errors.hpp"

namespace glyphforge {

using ConfusionMatrix = std::vector<std::vector<std::uint64_t>>;

/// counts[t][p] = number of samples with truth t predicted as p.
inline ConfusionMatrix confusion_matrix(const std::vector<int>& truths,
                                        const std::vector<int>& predictions,
                                        std::size_t num_classes = 26) {
    if (truths.size() != predictions.size())
        throw DataError("confusion_matrix: " + std::to_string(truths.size()) + " truths vs " +
                        std::to_string(predictions.size()) + " predictions");
    if (truths.empty()) throw DataError("confusion_matrix: no samples");
    ConfusionMatrix counts(num_classes, std::vector<std::uint64_t>(num_classes, 0));
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i], p = predictions[i];
        if (t < 0 || static_cast<std::size_t>(t) >= num_classes)
            throw DataError("confusion_matrix: truth " + std::to_string(t) + " out of range");
        if (p < 0 || static_cast<std::size_t>(p) >= num_classes)
            throw DataError("confusion_matrix: prediction " + std::to_string(p) + " out of range");
        counts[t][p]++;
    }
    return counts;
}

struct ClassMetrics {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    std::uint64_t support = 0;          // truth count for the class
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    bool precision_defined = true;      // false when tp+fp == 0
    bool present = false;               // class appears in the truth set
};

/// Confusion matrix plus derived accuracy/precision/recall/F1. Macro values
/// average over classes present in the truth set; zero-denominator classes
/// contribute 0 and are flagged. Micro values pool TP/FP/FN counts, which
/// for single-label classification coincide with accuracy. Weighted values
/// average with support weights.
struct EvalReport {
    ConfusionMatrix confusion;
    std::vector<ClassMetrics> per_class;
    std::uint64_t total = 0;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double micro_precision = 0.0, micro_recall = 0.0, micro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

inline EvalReport report(const ConfusionMatrix& counts) {
    const std::size_t k = counts.size();
    for (const auto& row : counts)
        if (row.size() != k) throw DataError("report: confusion matrix is not square");

    EvalReport rep;
    rep.confusion = counts;
    std::uint64_t trace = 0;
    for (std::size_t t = 0; t < k; ++t)
        for (std::size_t p = 0; p < k; ++p) {
            rep.total += counts[t][p];
            if (t == p) trace += counts[t][p];
        }
    if (rep.total == 0) throw DataError("report: all-zero confusion matrix");
    rep.accuracy = static_cast<double>(trace) / static_cast<double>(rep.total);

    rep.per_class.resize(k);
    std::size_t present = 0;
    std::uint64_t present_support = 0;
    for (std::size_t c = 0; c < k; ++c) {
        ClassMetrics& m = rep.per_class[c];
        m.tp = counts[c][c];
        for (std::size_t t = 0; t < k; ++t)
            if (t != c) m.fp += counts[t][c];
        for (std::size_t p = 0; p < k; ++p)
            if (p != c) m.fn += counts[c][p];
        m.support = m.tp + m.fn;
        m.present = m.support > 0;
        if (m.tp + m.fp == 0) {
            m.precision_defined = false;
            m.precision = 0.0;
        } else {
            m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
        }
        m.recall = m.present ? static_cast<double>(m.tp) / static_cast<double>(m.support) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        if (m.present) {
            ++present;
            present_support += m.support;
            rep.macro_precision += m.precision;
            rep.macro_recall += m.recall;
            rep.macro_f1 += m.f1;
            rep.weighted_precision += m.precision * static_cast<double>(m.support);
            rep.weighted_recall += m.recall * static_cast<double>(m.support);
            rep.weighted_f1 += m.f1 * static_cast<double>(m.support);
        }
    }
    rep.macro_precision /= static_cast<double>(present);
    rep.macro_recall /= static_cast<double>(present);
    rep.macro_f1 /= static_cast<double>(present);
    rep.weighted_precision /= static_cast<double>(present_support);
    rep.weighted_recall /= static_cast<double>(present_support);
    rep.weighted_f1 /= static_cast<double>(present_support);

    // Pooled counts: TP = trace, FP = FN = total - trace.
    rep.micro_precision = rep.micro_recall = rep.accuracy;
    rep.micro_f1 = rep.accuracy;
    return rep;
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
        const auto& m = rep.per_class[c];
        per_class.push_back({{"class", std::string(1, static_cast<char>('a' + c))},
                             {"tp", m.tp},
                             {"fp", m.fp},
                             {"fn", m.fn},
                             {"support", m.support},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"precision_defined", m.precision_defined},
                             {"present", m.present}});
    }
    return nlohmann::json{
        {"total", rep.total},
        {"accuracy", rep.accuracy},
        {"confusion", rep.confusion},
        {"per_class", per_class},
        {"macro",
         {{"precision", rep.macro_precision}, {"recall", rep.macro_recall}, {"f1", rep.macro_f1}}},
        {"micro",
         {{"precision", rep.micro_precision}, {"recall", rep.micro_recall}, {"f1", rep.micro_f1}}},
        {"weighted",
         {{"precision", rep.weighted_precision},
          {"recall", rep.weighted_recall},
          {"f1", rep.weighted_f1}}}};
}

/// Human-readable table; percentages at 2 decimal places.
inline std::string render_report(const EvalReport& rep, const std::string& average = "macro") {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "class  precision  recall     f1         support\n";
    for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
        const auto& m = rep.per_class[c];
        if (!m.present && m.tp + m.fp == 0) continue;
        os << static_cast<char>('a' + c) << "      " << std::setw(9) << m.precision * 100.0 << "  "
           << std::setw(9) << m.recall * 100.0 << "  " << std::setw(9) << m.f1 * 100.0 << "  "
           << std::setw(7) << m.support << (m.precision_defined ? "" : "  (no predictions)")
           << "\n";
    }
    double p = rep.macro_precision, r = rep.macro_recall, f = rep.macro_f1;
    if (average == "weighted") {
        p = rep.weighted_precision;
        r = rep.weighted_recall;
        f = rep.weighted_f1;
    }
    os << average << " avg: precision " << p * 100.0 << "  recall " << r * 100.0 << "  f1 "
       << f * 100.0 << "\n";
    os << "accuracy: " << rep.accuracy * 100.0 << "% (" << rep.total << " samples)\n";
    return os.str();
}

} // namespace glyphforge
