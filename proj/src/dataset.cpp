#include "storyboard/dataset.hpp"

#include "storyboard/error.hpp"
#include "storyboard/image_io.hpp"
#include "storyboard/prompt_types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <regex>
#include <set>
#include <sstream>

namespace storyboard::dataset {

using nlohmann::json;

namespace {

struct Modality {
    const char* dir;
    const char* extension;
    const char* label;
};

constexpr Modality kModalities[] = {
    {kSketchDir, ".png", "sketch"},
    {kAppearanceDir, ".txt", "appearance"},
    {kMotionDir, ".txt", "motion"},
};

constexpr std::string_view kSketchSuffix = "_sketch";

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string normalized_stem(const fs::path& file) {
    std::string stem = file.stem().string();
    if (ends_with(stem, kSketchSuffix)) stem.resize(stem.size() - kSketchSuffix.size());
    return stem;
}

std::vector<fs::path> list_files(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return out;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_regular_file()) out.push_back(e.path());
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<fs::path> list_dirs(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (e.is_directory()) out.push_back(e.path());
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string relative_to(const fs::path& p, const fs::path& root) {
    if (root.empty()) return p.generic_string();
    fs::path r = p.lexically_relative(root);
    if (r.empty() || *r.begin() == "..") return p.generic_string();
    return r.generic_string();
}

fs::path resolve(const fs::path& root, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || root.empty() ? path : root / path;
}

}  // namespace

std::optional<TripletId> TripletId::parse(const std::string& text) {
    static const std::regex pattern(R"(video_(\d{3})_keyframe_(\d{4}))");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) return std::nullopt;
    return TripletId{std::stoi(m[1].str()), std::stoi(m[2].str())};
}

std::string TripletId::str() const {
    if (video < 0 || video > 999 || keyframe < 0 || keyframe > 9999)
        throw InvalidArgument("triplet id out of range");
    char buf[32];
    std::snprintf(buf, sizeof buf, "video_%03d_keyframe_%04d", video, keyframe);
    return buf;
}

std::optional<int> parse_video_dir(const std::string& name) {
    static const std::regex pattern(R"(video_(\d{3}))");
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) return std::nullopt;
    return std::stoi(m[1].str());
}

std::string video_dir_name(int video) {
    if (video < 0 || video > 999) throw InvalidArgument("video ordinal out of range");
    char buf[16];
    std::snprintf(buf, sizeof buf, "video_%03d", video);
    return buf;
}

std::size_t DatasetManifest::triplet_count() const {
    std::size_t n = 0;
    for (const auto& [name, seqs] : subsets)
        for (const auto& s : seqs) n += s.triplets.size();
    return n;
}

std::size_t DatasetManifest::sequence_count() const {
    std::size_t n = 0;
    for (const auto& [name, seqs] : subsets) n += seqs.size();
    return n;
}

std::vector<std::string> candidate_ids(const fs::path& video_dir) {
    std::set<std::string> ids;
    for (const Modality& m : kModalities)
        for (const auto& f : list_files(video_dir / m.dir)) ids.insert(normalized_stem(f));
    return {ids.begin(), ids.end()};
}

std::vector<Violation> validate_triplet(const fs::path& video_dir, const std::string& id) {
    std::error_code ec;
    if (!fs::is_directory(video_dir, ec)) throw IoError("cannot read " + video_dir.string());

    auto parsed = TripletId::parse(id);
    if (!parsed) return {{video_dir / id, "bad-id", "'" + id + "' is not video_XXX_keyframe_XXXX"}};
    auto dir_video = parse_video_dir(video_dir.filename().string());
    if (dir_video && *dir_video != parsed->video)
        return {{video_dir / id, "id-mismatch",
                 id + " does not belong to " + video_dir.filename().string()}};

    std::vector<Violation> out;
    std::vector<std::pair<const Modality*, fs::path>> present;
    for (const Modality& m : kModalities) {
        std::vector<fs::path> matches;
        for (const auto& f : list_files(video_dir / m.dir))
            if (normalized_stem(f) == id) matches.push_back(f);
        if (matches.empty()) {
            out.push_back({video_dir / m.dir / (id + m.extension), "missing-modality",
                           std::string("no ") + m.label + " file"});
        } else if (matches.size() > 1) {
            out.push_back({video_dir / m.dir, "duplicate-modality",
                           std::to_string(matches.size()) + " " + m.label + " files for " + id});
        } else {
            present.emplace_back(&m, matches.front());
        }
    }
    for (const auto& [m, f] : present)
        if (f.extension() != m->extension)
            out.push_back({f, "name-mismatch", std::string("expected extension ") + m->extension});
    for (const auto& [m, f] : present) {
        if (m->dir == kSketchDir || f.extension() != m->extension) continue;
        if (blank(image_io::read_text(f))) out.push_back({f, "empty-text", std::string(m->label) + " text is empty"});
    }
    for (const auto& [m, f] : present) {
        if (m->dir != kSketchDir || f.extension() != m->extension) continue;
        try {
            auto info = image_io::read_png_info(f);
            if (info.channels != 1)
                out.push_back({f, "not-single-channel", std::to_string(info.channels) + " channels"});
        } catch (const IoError& e) {
            out.push_back({f, "not-single-channel", e.what()});
        }
    }
    for (const auto& [m, f] : present)
        if (ends_with(f.stem().string(), kSketchSuffix))
            out.push_back({f, "residual-suffix", "filename keeps the _sketch suffix"});
    return out;
}

namespace {

struct VideoResult {
    std::string subset;
    Sequence sequence;
    std::vector<Violation> violations;
};

VideoResult scan_video(const std::string& subset, const fs::path& video_dir) {
    VideoResult r;
    r.subset = subset;
    r.sequence.video = video_dir.filename().string();
    for (const auto& d : list_dirs(video_dir)) {
        const std::string name = d.filename().string();
        if (name != kSketchDir && name != kAppearanceDir && name != kMotionDir)
            r.violations.push_back({d, "extra-folder", "unexpected folder '" + name + "'"});
    }
    for (const auto& id : candidate_ids(video_dir)) {
        auto v = validate_triplet(video_dir, id);
        if (!v.empty()) {
            r.violations.insert(r.violations.end(), v.begin(), v.end());
            continue;
        }
        Triplet t;
        t.id = *TripletId::parse(id);
        for (const Modality& m : kModalities) {
            for (const auto& f : list_files(video_dir / m.dir)) {
                if (normalized_stem(f) != id) continue;
                if (m.dir == kSketchDir) t.sketch = f;
                else if (m.dir == kAppearanceDir) t.appearance = f;
                else t.motion = f;
            }
        }
        r.sequence.triplets.push_back(std::move(t));
    }
    std::sort(r.sequence.triplets.begin(), r.sequence.triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.id < b.id; });
    return r;
}

}  // namespace

DatasetManifest assemble_manifest(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw InvalidArgument("dataset root is not a directory: " + root.string());

    DatasetManifest m;
    m.root = root;
    std::vector<std::pair<std::string, fs::path>> videos;
    for (const auto& subset : list_dirs(root)) {
        const std::string name = subset.filename().string();
        m.subsets[name];
        for (const auto& v : list_dirs(subset)) {
            if (parse_video_dir(v.filename().string()))
                videos.emplace_back(name, v);
            else
                m.violations.push_back({v, "bad-video-dir", "'" + v.filename().string() + "' is not video_XXX"});
        }
    }

    std::vector<VideoResult> results(videos.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(videos.size()); ++i) {
        try {
            results[i] = scan_video(videos[i].first, videos[i].second);
        } catch (...) {
#pragma omp critical(dataset_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    // videos were enumerated in sorted order, so sequences stay sorted
    for (auto& r : results) {
        m.violations.insert(m.violations.end(), r.violations.begin(), r.violations.end());
        if (!r.sequence.triplets.empty()) m.subsets[r.subset].push_back(std::move(r.sequence));
    }
    std::sort(m.violations.begin(), m.violations.end(), [](const Violation& a, const Violation& b) {
        return std::tie(a.path, a.rule, a.detail) < std::tie(b.path, b.rule, b.detail);
    });
    return m;
}

double mean_2dp(std::size_t sum, std::size_t count) {
    if (count == 0) return 0.0;
    // round-half-up of 100*sum/count in integers, so the result is exact to 2 decimals
    const unsigned long long hundredths = (200ull * sum + count) / (2ull * count);
    return static_cast<double>(hundredths) / 100.0;
}

std::size_t lower_median(std::vector<std::size_t> values) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

DatasetStats compute_stats(const DatasetManifest& m) {
    DatasetStats s;
    std::vector<std::size_t> sizes;
    std::size_t appearance_words = 0;
    std::size_t motion_words = 0;
    for (const auto& [name, seqs] : m.subsets) {
        std::size_t n = 0;
        for (const auto& seq : seqs) {
            sizes.push_back(seq.triplets.size());
            n += seq.triplets.size();
            for (const auto& t : seq.triplets) {
                appearance_words += prompts::count_words(image_io::read_text(t.appearance));
                motion_words += prompts::count_words(image_io::read_text(t.motion));
                auto info = image_io::read_png_info(t.sketch);
                ++s.resolution_histogram[std::to_string(info.width) + "x" + std::to_string(info.height)];
            }
        }
        s.subset_triplets[name] = n;
        s.subset_sequences[name] = seqs.size();
        s.triplet_count += n;
        s.sequence_count += seqs.size();
    }
    s.mean_triplets_per_sequence = mean_2dp(s.triplet_count, s.sequence_count);
    s.median_triplets_per_sequence = lower_median(sizes);
    s.mean_appearance_words = mean_2dp(appearance_words, s.triplet_count);
    s.mean_motion_words = mean_2dp(motion_words, s.triplet_count);
    return s;
}

json to_json(const DatasetManifest& m) {
    json subsets = json::object();
    for (const auto& [name, seqs] : m.subsets) {
        json arr = json::array();
        for (const auto& seq : seqs) {
            json triplets = json::array();
            for (const auto& t : seq.triplets)
                triplets.push_back({{"id", t.id.str()},
                                    {"sketch", relative_to(t.sketch, m.root)},
                                    {"appearance", relative_to(t.appearance, m.root)},
                                    {"motion", relative_to(t.motion, m.root)}});
            arr.push_back({{"video", seq.video}, {"triplets", triplets}});
        }
        subsets[name] = arr;
    }
    json violations = json::array();
    for (const auto& v : m.violations)
        violations.push_back({{"path", relative_to(v.path, m.root)}, {"rule", v.rule}, {"detail", v.detail}});
    return {{"root", m.root.generic_string()}, {"subsets", subsets}, {"violations", violations}};
}

DatasetManifest manifest_from_json(const json& j) {
    try {
        DatasetManifest m;
        m.root = j.at("root").get<std::string>();
        for (const auto& [name, seqs] : j.at("subsets").items()) {
            auto& out = m.subsets[name];
            for (const auto& sj : seqs) {
                Sequence seq;
                seq.video = sj.at("video").get<std::string>();
                for (const auto& tj : sj.at("triplets")) {
                    auto id = TripletId::parse(tj.at("id").get<std::string>());
                    if (!id) throw InvalidArgument("manifest holds a malformed triplet id");
                    seq.triplets.push_back({*id, resolve(m.root, tj.at("sketch").get<std::string>()),
                                            resolve(m.root, tj.at("appearance").get<std::string>()),
                                            resolve(m.root, tj.at("motion").get<std::string>())});
                }
                out.push_back(std::move(seq));
            }
        }
        for (const auto& vj : j.value("violations", json::array()))
            m.violations.push_back({resolve(m.root, vj.at("path").get<std::string>()),
                                    vj.at("rule").get<std::string>(), vj.value("detail", "")});
        return m;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed manifest: ") + e.what());
    }
}

json to_json(const DatasetStats& s) {
    return {{"triplet_count", s.triplet_count},
            {"sequence_count", s.sequence_count},
            {"subset_triplets", s.subset_triplets},
            {"subset_sequences", s.subset_sequences},
            {"mean_triplets_per_sequence", s.mean_triplets_per_sequence},
            {"median_triplets_per_sequence", s.median_triplets_per_sequence},
            {"mean_appearance_words", s.mean_appearance_words},
            {"mean_motion_words", s.mean_motion_words},
            {"resolution_histogram", s.resolution_histogram}};
}

std::string stats_table(const DatasetStats& s) {
    std::ostringstream o;
    char buf[64];
    o << "subset                 sequences  triplets\n";
    for (const auto& [name, n] : s.subset_triplets) {
        std::snprintf(buf, sizeof buf, "%-22s %9zu %9zu\n", name.c_str(), s.subset_sequences.at(name), n);
        o << buf;
    }
    std::snprintf(buf, sizeof buf, "%-22s %9zu %9zu\n", "total", s.sequence_count, s.triplet_count);
    o << buf;
    std::snprintf(buf, sizeof buf, "%.2f", s.mean_triplets_per_sequence);
    o << "mean triplets/sequence   " << buf << "\n";
    o << "median triplets/sequence " << s.median_triplets_per_sequence << "\n";
    std::snprintf(buf, sizeof buf, "%.2f", s.mean_appearance_words);
    o << "mean appearance words    " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.2f", s.mean_motion_words);
    o << "mean motion words        " << buf << "\n";
    o << "sketch resolutions:\n";
    for (const auto& [res, n] : s.resolution_histogram) o << "  " << res << "  " << n << "\n";
    return o.str();
}

}  // namespace storyboard::dataset
