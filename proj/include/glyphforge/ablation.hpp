#pragma once

#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "glyphforge/trainer.hpp"

namespace glyphforge {

struct AblationRow {
    std::string name;
    std::uint64_t params = 0;
    bool failed = false;
    std::string error;
    EvalReport test_report;
};

/// Trains every config on the same manifest and seed and evaluates each on
/// the test split. A failing run marks its row and the remaining configs
/// still produce theirs. Rows come back in config order.
inline std::vector<AblationRow> run_ablation(const std::vector<ModelConfig>& configs,
                                             const SplitManifest& manifest, std::uint64_t seed,
                                             const ImageLoader& loader = disk_loader(),
                                             std::ostream* progress = nullptr) {
    if (configs.empty()) throw ConfigError("ablation needs at least one config");
    std::vector<AblationRow> rows;
    for (const auto& base_cfg : configs) {
        AblationRow row;
        row.name = base_cfg.name;
        try {
            ModelConfig cfg = base_cfg;
            cfg.seed = seed;
            row.params = count_parameters(cfg);
            if (progress) *progress << "ablation: training '" << cfg.name << "'\n";
            auto result = train(cfg, manifest, loader, progress);
            row.test_report = evaluate(result.best, manifest, Split::test, loader);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
            if (progress) *progress << "ablation: '" << row.name << "' failed: " << e.what() << "\n";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Results CSV `config_name,params,accuracy,precision,recall,f1` with
/// macro-averaged percentages at two decimals; failed rows carry nan metrics.
inline void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write ablation results '" + path + "'");
    out << "config_name,params,accuracy,precision,recall,f1\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& row : rows) {
        out << row.name << ',' << row.params << ',';
        if (row.failed) {
            out << "nan,nan,nan,nan";
        } else {
            out << row.test_report.accuracy * 100.0 << ',' << row.test_report.macro_precision * 100.0
                << ',' << row.test_report.macro_recall * 100.0 << ','
                << row.test_report.macro_f1 * 100.0;
        }
        out << '\n';
    }
    if (!out) throw IoError("ablation write failed for '" + path + "'");
}

} // namespace glyphforge
