#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "storyboard/dataset.hpp"
#include "storyboard/frames.hpp"
#include "storyboard/image_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace testsupport {

using storyboard::Frame;
using storyboard::GrayImage;

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "sbtest-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& p) const { return path_ / p; }

private:
    fs::path path_;
};

inline std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937& rng) {
    std::uniform_int_distribution<int> d(0, 255);
    std::vector<std::uint8_t> v(n);
    for (auto& x : v) x = static_cast<std::uint8_t>(d(rng));
    return v;
}

inline Frame random_frame(int w, int h, std::mt19937& rng, std::size_t index = 0) {
    return Frame(w, h, random_bytes(static_cast<std::size_t>(w) * h * 3, rng), index);
}

inline GrayImage random_gray(int w, int h, std::mt19937& rng) {
    return GrayImage(w, h, random_bytes(static_cast<std::size_t>(w) * h, rng));
}

/// Smooth random content: a few overlapping rectangles, which gives Canny real edges.
inline GrayImage blocky_gray(int w, int h, std::mt19937& rng) {
    GrayImage g(w, h, std::uint8_t{30});
    std::uniform_int_distribution<int> dx(0, w - 1), dy(0, h - 1), dv(0, 255);
    for (int r = 0; r < 4; ++r) {
        int x0 = dx(rng), x1 = dx(rng), y0 = dy(rng), y1 = dy(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        const auto v = static_cast<std::uint8_t>(dv(rng));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) g.at(x, y) = v;
    }
    return g;
}

inline void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

inline std::string words(std::size_t n, const std::string& word = "word") {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + word;
    return s;
}

inline std::string triplet_name(int video, int keyframe) {
    return storyboard::dataset::TripletId{video, keyframe}.str();
}

inline fs::path video_dir(const fs::path& root, const std::string& subset, int video) {
    return root / subset / storyboard::dataset::video_dir_name(video);
}

/// One well-formed triplet.
inline void make_triplet(const fs::path& root, const std::string& subset, int video, int keyframe,
                         std::size_t appearance_words = 5, std::size_t motion_words = 3, int w = 16, int h = 9) {
    const fs::path v = video_dir(root, subset, video);
    const std::string id = triplet_name(video, keyframe);
    fs::create_directories(v / "sketch");
    storyboard::image_io::write_png(v / "sketch" / (id + ".png"), GrayImage(w, h, std::uint8_t{200}));
    write_text(v / "static_prompt" / (id + ".txt"), words(appearance_words, "look"));
    write_text(v / "story" / (id + ".txt"), words(motion_words, "move"));
}

/// Corpus with the published subset shape: 201 + 932 + 100 triplets in
/// 20 + 96 + 10 sequences (self: 19x10 + 1x11, anime: 28x9 + 68x10, ai: 10x10).
inline void make_published_corpus(const fs::path& root) {
    struct Block {
        const char* subset;
        int sequences;
        int size;
    };
    const Block blocks[] = {{"self", 19, 10}, {"self", 1, 11}, {"anime", 28, 9},
                            {"anime", 68, 10}, {"ai", 10, 10}};
    int video = 0;
    for (const Block& b : blocks)
        for (int s = 0; s < b.sequences; ++s, ++video)
            for (int k = 0; k < b.size; ++k) make_triplet(root, b.subset, video, k, 5, 3, 6, 4);
}

/// Writes an executable decoder stand-in: `<script> -i <input> <outdir>/%06d.png`.
/// <input> is a text file naming a directory of PNGs to copy; an input
/// containing "CORRUPT" makes it fail with a diagnostic on stderr.
inline fs::path write_fake_decoder(const fs::path& dir) {
    const fs::path script = dir / "fake_decoder.sh";
    write_text(script,
               "#!/bin/sh\n"
               "src=$(cat \"$2\")\n"
               "out=$(dirname \"$3\")\n"
               "if [ \"$src\" = CORRUPT ]; then echo 'corrupt stream' >&2; exit 3; fi\n"
               "i=1\n"
               "for f in \"$src\"/*.png; do cp \"$f\" \"$(printf \"%s/%06d.png\" \"$out\" $i)\"; i=$((i+1)); done\n");
    fs::permissions(script, fs::perms::owner_all);
    return script;
}

}  // namespace testsupport
