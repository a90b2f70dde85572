// glyphforge: handwritten-character recognition pipeline
// (preprocess -> augment -> split -> train -> evaluate -> predict, plus the
// ablation runner and the gradient-check harness).

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glyphforge/ablation.hpp"
#include "glyphforge/dataset.hpp"
#include "glyphforge/gradcheck.hpp"
#include "glyphforge/image_io.hpp"
#include "glyphforge/model_config.hpp"
#include "glyphforge/serialize.hpp"
#include "glyphforge/trainer.hpp"

namespace fs = std::filesystem;
using namespace glyphforge;

namespace {

struct PreprocessArgs {
    std::string in, out;
    double threshold = 0.5;
    std::size_t size = 224;
    std::string polarity = "dark";
};

int run_preprocess(const PreprocessArgs& args) {
    auto entries = scan_class_tree(args.in);
    // Warn on empty class directories; they are allowed.
    for (const auto& dir : fs::directory_iterator(args.in)) {
        if (!dir.is_directory()) continue;
        bool any = false;
        for (const auto& e : entries)
            if (fs::path(e.first).parent_path() == dir.path()) { any = true; break; }
        if (!any)
            std::cerr << "warning: class directory '" << dir.path().string() << "' has no images\n";
    }
    const bool dark_ink = args.polarity == "dark";
    std::size_t count = 0;
    for (const auto& [path, label] : entries) {
        auto px = decode_image(path);
        px = autocrop(px, static_cast<float>(args.threshold), dark_ink);
        px = resize_bilinear(px, args.size, args.size);
        const fs::path rel = fs::relative(path, args.in);
        fs::path dst = fs::path(args.out) / rel.parent_path() / (rel.stem().string() + ".png");
        fs::create_directories(dst.parent_path());
        encode_png(dst.string(), px);
        ++count;
    }
    std::cout << "processed " << count << " images into " << args.out << "\n";
    return 0;
}

struct MethodFlags {
    double count = 1.0;
    std::string range;
};

void apply_method_flags(AugmentMethod& method, const MethodFlags& flags) {
    method.count = flags.count;
    method.enabled = flags.count > 0.0;
    if (!flags.range.empty()) {
        const auto colon = flags.range.find(':');
        if (colon == std::string::npos)
            throw ConfigError("range must be LO:HI, got '" + flags.range + "'");
        method.lo = std::stod(flags.range.substr(0, colon));
        method.hi = std::stod(flags.range.substr(colon + 1));
    }
}

struct AugmentArgs {
    std::string in, out, provenance;
    std::uint64_t seed = 42;
    MethodFlags brightness, contrast, rotation, sharpness;
};

int run_augment(const AugmentArgs& args) {
    auto entries = scan_class_tree(args.in);
    std::vector<LabeledImage> originals;
    originals.reserve(entries.size());
    for (const auto& [path, label] : entries) {
        LabeledImage img;
        img.pixels = decode_image(path);
        img.label = label;
        img.path = fs::relative(path, args.in).generic_string();
        img.source = img.path;
        originals.push_back(std::move(img));
    }

    AugmentPlan plan;
    plan.seed = args.seed;
    apply_method_flags(plan.brightness, args.brightness);
    apply_method_flags(plan.contrast, args.contrast);
    apply_method_flags(plan.rotation, args.rotation);
    apply_method_flags(plan.sharpness, args.sharpness);

    auto expanded = augment_dataset(originals, plan);
    for (const auto& img : expanded) {
        fs::path dst = fs::path(args.out) / img.path;
        fs::create_directories(dst.parent_path());
        encode_png(dst.string(), img.pixels);
    }
    const std::string prov =
        args.provenance.empty() ? (fs::path(args.out) / "provenance.csv").string() : args.provenance;
    write_provenance(expanded, prov);
    std::cout << "augmented " << originals.size() << " originals into " << expanded.size()
              << " images (provenance: " << prov << ")\n";
    return 0;
}

struct SplitArgs {
    std::string in, out, provenance;
    std::string mode = "paper-faithful";
    std::string ratios = "0.8,0.1,0.1";
    std::uint64_t seed = 42;
};

int run_split(const SplitArgs& args) {
    SplitRatios ratios;
    if (std::sscanf(args.ratios.c_str(), "%lf,%lf,%lf", &ratios.train, &ratios.val, &ratios.test) != 3)
        throw ConfigError("ratios must be three comma-separated numbers, got '" + args.ratios + "'");
    const SplitMode mode =
        args.mode == "leakage-safe" ? SplitMode::leakage_safe : SplitMode::paper_faithful;

    std::vector<DatasetItem> items;
    if (!args.provenance.empty()) {
        for (auto& item : read_provenance(args.provenance)) {
            item.path = (fs::path(args.in) / item.path).generic_string();
            item.source = (fs::path(args.in) / item.source).generic_string();
            items.push_back(std::move(item));
        }
    } else {
        if (mode == SplitMode::leakage_safe)
            throw ConfigError("leakage-safe split needs --provenance to identify originals");
        for (const auto& [path, label] : scan_class_tree(args.in))
            items.push_back({path, label, path, "original"});
    }

    auto manifest = split_items(items, ratios, args.seed, mode);
    write_manifest(manifest, args.out);
    std::cout << "split " << items.size() << " images: train=" << manifest.in_split(Split::train).size()
              << " val=" << manifest.in_split(Split::val).size()
              << " test=" << manifest.in_split(Split::test).size() << " -> " << args.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string config, manifest, out, curve;
    std::uint64_t seed = 42;
    bool seed_given = false;
};

int run_train(const TrainArgs& args) {
    auto cfg = load_config(args.config);
    if (args.seed_given) cfg.seed = args.seed;
    auto manifest = read_manifest(args.manifest);
    auto result = train(cfg, manifest, disk_loader(), &std::cout);
    save_model(result.best, args.out);
    const std::string curve =
        args.curve.empty() ? (fs::path(args.out).replace_extension().string() + "_loss.csv")
                           : args.curve;
    emit_loss_curve(result.logs, curve);
    std::cout << "best epoch " << result.best_epoch << " val_acc " << result.best_val_accuracy
              << "; model -> " << args.out << ", curve -> " << curve << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string model, manifest, out;
    std::string split = "test";
    std::string average = "macro";
};

int run_evaluate(const EvaluateArgs& args) {
    auto artifact = load_model(args.model);
    auto manifest = read_manifest(args.manifest);
    Split split = Split::test;
    if (args.split == "train") split = Split::train;
    else if (args.split == "val") split = Split::val;
    else if (args.split != "test") throw ConfigError("--split must be train|val|test");
    auto rep = evaluate(artifact, manifest, split);
    std::cout << render_report(rep, args.average);
    if (!args.out.empty()) {
        std::ofstream json_out(args.out, std::ios::binary);
        if (!json_out) throw IoError("cannot write report '" + args.out + "'");
        json_out << report_to_json(rep).dump(2) << "\n";
        std::cout << "report -> " << args.out << "\n";
    }
    return 0;
}

struct PredictArgs {
    std::string image, model;
    double threshold = 0.5;
};

int run_predict(const PredictArgs& args) {
    auto artifact = load_model(args.model);
    auto px = decode_image(args.image);
    const std::size_t s = artifact.config.input_size;
    if (px.extent(0) != s || px.extent(1) != s) {
        px = autocrop(px, static_cast<float>(args.threshold));
        px = resize_bilinear(px, s, s);
    }
    for (const auto& [letter, prob] : predict(artifact, px, 5)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%c %.6f", letter, prob);
        std::cout << buf << "\n";
    }
    return 0;
}

struct AblateArgs {
    std::string configs, manifest, out;
    std::uint64_t seed = 42;
};

int run_ablate(const AblateArgs& args) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(args.configs))
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .json configs under '" + args.configs + "'");

    std::vector<ModelConfig> configs;
    for (const auto& f : files) configs.push_back(load_config(f));
    auto manifest = read_manifest(args.manifest);
    auto rows = run_ablation(configs, manifest, args.seed, disk_loader(), &std::cout);
    write_ablation_csv(rows, args.out);
    std::cout << "ablation results (" << rows.size() << " rows) -> " << args.out << "\n";
    return 0;
}

struct GradcheckArgs {
    std::string layer;
    std::uint64_t seed = 42;
};

int run_gradcheck(const GradcheckArgs& args) {
    auto reports = gradcheck::run(args.seed, args.layer);
    bool all_pass = true;
    for (const auto& rep : reports) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "layer=%-8s max_rel_err=%.3e threshold=%.0e worst_tensor=%zu worst_index=%zu %s",
                      rep.layer.c_str(), rep.max_rel_err, rep.threshold, rep.worst_tensor,
                      rep.worst_index, rep.pass ? "PASS" : "FAIL");
        std::cout << buf << "\n";
        all_pass = all_pass && rep.pass;
    }
    return all_pass ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"glyphforge: from-scratch CNN pipeline for handwritten a-z recognition"};
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "Autocrop and resize a class tree");
    pre_cmd->add_option("--in", pre.in, "Input directory (root/<letter>/*.png|jpg)")->required();
    pre_cmd->add_option("--out", pre.out, "Output directory (PNG mirror tree)")->required();
    pre_cmd->add_option("--threshold", pre.threshold, "Ink threshold in (0,1)")->capture_default_str();
    pre_cmd->add_option("--size", pre.size, "Output side length")->capture_default_str();
    pre_cmd->add_option("--polarity", pre.polarity, "Ink polarity: dark|light")
        ->check(CLI::IsMember({"dark", "light"}))
        ->capture_default_str();

    AugmentArgs aug;
    auto* aug_cmd = app.add_subcommand("augment", "Expand a class tree with the four augmentations");
    aug_cmd->add_option("--in", aug.in, "Input directory")->required();
    aug_cmd->add_option("--out", aug.out, "Output directory")->required();
    aug_cmd->add_option("--provenance", aug.provenance,
                        "Provenance CSV path (default <out>/provenance.csv)");
    aug_cmd->add_option("--seed", aug.seed, "Augmentation seed")->capture_default_str();
    aug_cmd->add_option("--brightness-count", aug.brightness.count, "Brightness copies per original")
        ->capture_default_str();
    aug_cmd->add_option("--brightness-range", aug.brightness.range, "Brightness factor range LO:HI");
    aug_cmd->add_option("--contrast-count", aug.contrast.count, "Contrast copies per original")
        ->capture_default_str();
    aug_cmd->add_option("--contrast-range", aug.contrast.range, "Contrast factor range LO:HI");
    aug_cmd->add_option("--rotation-count", aug.rotation.count, "Rotation copies per original")
        ->capture_default_str();
    aug_cmd->add_option("--rotation-range", aug.rotation.range, "Rotation degree range LO:HI");
    aug_cmd->add_option("--sharpness-count", aug.sharpness.count, "Sharpness copies per original")
        ->capture_default_str();
    aug_cmd->add_option("--sharpness-range", aug.sharpness.range, "Sharpness factor range LO:HI");

    SplitArgs spl;
    auto* spl_cmd = app.add_subcommand("split", "Write a train/val/test manifest CSV");
    spl_cmd->add_option("--in", spl.in, "Image directory")->required();
    spl_cmd->add_option("--out", spl.out, "Manifest CSV path")->required();
    spl_cmd->add_option("--provenance", spl.provenance, "Provenance CSV from augment");
    spl_cmd->add_option("--mode", spl.mode, "paper-faithful|leakage-safe")
        ->check(CLI::IsMember({"paper-faithful", "leakage-safe"}))
        ->capture_default_str();
    spl_cmd->add_option("--ratios", spl.ratios, "train,val,test ratios")->capture_default_str();
    spl_cmd->add_option("--seed", spl.seed, "Shuffle seed")->capture_default_str();

    TrainArgs trn;
    auto* trn_cmd = app.add_subcommand("train", "Train a config on a manifest");
    trn_cmd->add_option("--config", trn.config, "Model config JSON")->required();
    trn_cmd->add_option("--manifest", trn.manifest, "Manifest CSV")->required();
    trn_cmd->add_option("--out", trn.out, "Output model (.hiec)")->required();
    trn_cmd->add_option("--curve", trn.curve, "Loss-curve CSV (default <out>_loss.csv)");
    auto* trn_seed = trn_cmd->add_option("--seed", trn.seed, "Override the config seed");

    EvaluateArgs eva;
    auto* eva_cmd = app.add_subcommand("evaluate", "Score a model on a manifest split");
    eva_cmd->add_option("--model", eva.model, "Model file (.hiec)")->required();
    eva_cmd->add_option("--manifest", eva.manifest, "Manifest CSV")->required();
    eva_cmd->add_option("--split", eva.split, "train|val|test")->capture_default_str();
    eva_cmd->add_option("--out", eva.out, "Report JSON path");
    eva_cmd->add_option("--average", eva.average, "macro|weighted summary line")
        ->check(CLI::IsMember({"macro", "weighted"}))
        ->capture_default_str();

    PredictArgs prd;
    auto* prd_cmd = app.add_subcommand("predict", "Top-5 letters for one image");
    prd_cmd->add_option("--image", prd.image, "Image file")->required();
    prd_cmd->add_option("--model", prd.model, "Model file (.hiec)")->required();
    prd_cmd->add_option("--threshold", prd.threshold, "Autocrop ink threshold")->capture_default_str();

    AblateArgs abl;
    auto* abl_cmd = app.add_subcommand("ablate", "Train every config in a directory, emit results CSV");
    abl_cmd->add_option("--configs", abl.configs, "Directory of config JSON files")->required();
    abl_cmd->add_option("--manifest", abl.manifest, "Manifest CSV")->required();
    abl_cmd->add_option("--out", abl.out, "Results CSV path")->required();
    abl_cmd->add_option("--seed", abl.seed, "Seed shared by every row")->capture_default_str();

    GradcheckArgs grd;
    auto* grd_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer");
    grd_cmd->add_option("--layer", grd.layer,
                        "Only this layer (conv|dense|relu|maxpool|softmax|dropout|stack)");
    grd_cmd->add_option("--seed", grd.seed, "Instance seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (pre_cmd->parsed()) return run_preprocess(pre);
        if (aug_cmd->parsed()) return run_augment(aug);
        if (spl_cmd->parsed()) return run_split(spl);
        if (trn_cmd->parsed()) {
            trn.seed_given = trn_seed->count() > 0;
            return run_train(trn);
        }
        if (eva_cmd->parsed()) return run_evaluate(eva);
        if (prd_cmd->parsed()) return run_predict(prd);
        if (abl_cmd->parsed()) return run_ablate(abl);
        if (grd_cmd->parsed()) return run_gradcheck(grd);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
