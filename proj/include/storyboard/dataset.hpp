#pragma once

// Sketch/appearance/motion triplet corpus:
//   <root>/<subset>/video_XXX/{sketch,static_prompt,story}/video_XXX_keyframe_XXXX.{png,txt,txt}

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace storyboard::dataset {

namespace fs = std::filesystem;

struct TripletId {
    int video = 0;     // 0..999
    int keyframe = 0;  // 0..9999

    /// Strict `video_XXX_keyframe_XXXX`; nullopt otherwise.
    static std::optional<TripletId> parse(const std::string& text);
    std::string str() const;

    friend auto operator<=>(const TripletId&, const TripletId&) = default;
};

/// Strict `video_XXX`.
std::optional<int> parse_video_dir(const std::string& name);
std::string video_dir_name(int video);

struct Triplet {
    TripletId id;
    fs::path sketch;
    fs::path appearance;
    fs::path motion;
};

struct Sequence {
    std::string video;
    std::vector<Triplet> triplets;  // ascending keyframe ordinal
};

struct Violation {
    fs::path path;
    std::string rule;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct DatasetManifest {
    fs::path root;
    std::map<std::string, std::vector<Sequence>> subsets;
    std::vector<Violation> violations;

    std::size_t triplet_count() const;
    std::size_t sequence_count() const;
};

struct DatasetStats {
    std::size_t triplet_count = 0;
    std::size_t sequence_count = 0;
    std::map<std::string, std::size_t> subset_triplets;
    std::map<std::string, std::size_t> subset_sequences;
    double mean_triplets_per_sequence = 0.0;
    std::size_t median_triplets_per_sequence = 0;
    double mean_appearance_words = 0.0;
    double mean_motion_words = 0.0;
    /// "WxH" of each sketch.
    std::map<std::string, std::size_t> resolution_histogram;
};

/// Modality folder names in check order.
inline constexpr const char* kSketchDir = "sketch";
inline constexpr const char* kAppearanceDir = "static_prompt";
inline constexpr const char* kMotionDir = "story";

/// Rules, in order: bad-id, id-mismatch, missing-modality / duplicate-modality,
/// name-mismatch, empty-text, not-single-channel, residual-suffix.
/// `video_dir` is the enclosing video_XXX folder. Throws IoError if unreadable.
std::vector<Violation> validate_triplet(const fs::path& video_dir, const std::string& id);

/// Ids implied by files in any modality folder of one video (suffix-stripped, sorted, unique).
std::vector<std::string> candidate_ids(const fs::path& video_dir);

/// Throws InvalidArgument if root is not a directory.
DatasetManifest assemble_manifest(const fs::path& root);

/// Reads prompt texts and sketch headers of every manifest triplet.
DatasetStats compute_stats(const DatasetManifest& m);

/// Exactly the arithmetic of compute_stats, on pre-counted inputs.
double mean_2dp(std::size_t sum, std::size_t count);
std::size_t lower_median(std::vector<std::size_t> values);

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetStats& s);
std::string stats_table(const DatasetStats& s);

}  // namespace storyboard::dataset
