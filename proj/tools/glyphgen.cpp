// glyphgen: writes a synthetic handwritten-style a-z dataset in the
// root/<letter>/ layout so the full pipeline can run without external data.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "glyphforge/image_io.hpp"
#include "glyphforge/synthetic.hpp"

namespace fs = std::filesystem;
using namespace glyphforge;

int main(int argc, char** argv) {
    CLI::App app{"glyphgen: synthetic handwritten-style character dataset"};
    std::string out;
    std::size_t per_class = 50;
    std::size_t size = 96;
    std::uint64_t seed = 42;
    GlyphStyle style;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--per-class", per_class, "Samples per letter")->capture_default_str();
    app.add_option("--size", size, "Image side length")->capture_default_str();
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();
    app.add_option("--noise", style.noise, "Pixel noise amplitude")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        auto corpus = synth_corpus(per_class, size, seed, style);
        for (const auto& img : corpus) {
            const char letter = static_cast<char>('a' + img.label);
            fs::path dir = fs::path(out) / std::string(1, letter);
            fs::create_directories(dir);
            // synth://<letter>/<i>.png -> <out>/<letter>/<letter><i>.png
            const std::string stem = fs::path(img.path).stem().string();
            encode_png((dir / (std::string(1, letter) + stem + ".png")).string(), img.pixels);
        }
        std::cout << "wrote " << corpus.size() << " images under " << out << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
