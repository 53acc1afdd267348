#pragma once

// Per-shot job graphs (anchor keyframe, derivative keyframes, first-last-frame
// clips, concatenation) and whole-storyboard execution.

#include "storyboard/backends/capabilities.hpp"
#include "storyboard/backends/stage_config.hpp"
#include "storyboard/frames.hpp"
#include "storyboard/prompt_types.hpp"

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace storyboard::pipeline {

namespace fs = std::filesystem;

struct StoryboardShot {
    std::string id;
    GrayImage sketch{1, 1, std::uint8_t{0}};
    prompts::AppearancePrompt appearance;
    prompts::MotionPrompt motion;
    int n_stages = 1;
    /// Where the sketch was read from; used only for plan serialization.
    fs::path sketch_path;

    void validate() const;
};

enum class NodeKind { color_keyframe, derive_keyframe, clip, concat };

const char* to_string(NodeKind kind);

struct JobNode {
    std::size_t id = 0;
    NodeKind kind = NodeKind::color_keyframe;
    /// Stage i for derive and clip nodes; 0 otherwise.
    int stage = 0;
    std::vector<std::size_t> deps;
};

/// Node ids: 0 color, 1..n derive (stage i), n+1..2n clip (stage i), 2n+1 concat.
struct JobGraph {
    StoryboardShot shot;
    std::vector<prompts::StageAsset> assets;
    std::vector<JobNode> nodes;

    int n_stages() const noexcept { return shot.n_stages; }
    std::size_t color_node() const noexcept { return 0; }
    std::size_t derive_node(int stage) const noexcept { return static_cast<std::size_t>(stage); }
    std::size_t clip_node(int stage) const noexcept { return static_cast<std::size_t>(n_stages() + stage); }
    std::size_t concat_node() const noexcept { return static_cast<std::size_t>(2 * n_stages() + 1); }
    /// Keyframe node i: the color node for 0, derive node i otherwise.
    std::size_t keyframe_node(int i) const noexcept { return i == 0 ? color_node() : derive_node(i); }

    /// (dependency, dependent) pairs.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
    /// Kahn order, smallest ready id first. Throws InvalidArgument on a cycle.
    std::vector<std::size_t> topological_order() const;
};

/// Requires assets for stages exactly 1..n_stages (in any order).
JobGraph plan_shot(const StoryboardShot& shot, const std::vector<prompts::StageAsset>& assets);

/// Runs `run(node)` for every node once all its deps finished, with at most
/// `workers` calls in flight. After the first failure no new node starts; the
/// failure is rethrown once running nodes drain.
void run_dag(const std::vector<std::vector<std::size_t>>& deps, int workers,
             const std::function<void(std::size_t)>& run);

struct FrameProvenance {
    std::size_t shot = 0;   // board position
    int clip = 0;           // stage i, 1-based
    std::size_t local = 0;  // frame index inside the generated clip

    friend bool operator==(const FrameProvenance&, const FrameProvenance&) = default;
};

struct TraceEntry {
    std::size_t node = 0;
    NodeKind kind = NodeKind::color_keyframe;
    int stage = 0;
    /// Artifact keys of the node's inputs; derive nodes list their reference first.
    std::vector<std::string> inputs;
    std::string output;
    bool cached = false;
};

struct ShotVideo {
    FrameSequence frames;
    std::vector<FrameProvenance> provenance;
    /// Keyframe 0 is the colored anchor, keyframe i the stage-i derivative.
    std::vector<Frame> keyframes;
    /// One entry per executed node, ordered by node id.
    std::vector<TraceEntry> trace;
};

struct RunOptions {
    int workers = 2;
    /// Content-addressed node outputs; finished nodes are skipped on rerun.
    std::optional<fs::path> cache_dir;
    std::size_t shot_index = 0;
};

/// Throws ProviderError when a generation capability is missing; any backend
/// failure aborts the shot, leaving completed node outputs in the cache.
ShotVideo run_shot(const JobGraph& graph, const backends::ProviderSet& providers,
                   const backends::StageConfig& cfg, const RunOptions& options = {});

enum class FailurePolicy { abort_all, skip_and_report };

struct StoryboardOptions {
    int shot_workers = 1;
    int node_workers = 2;
    FailurePolicy policy = FailurePolicy::abort_all;
    std::optional<fs::path> cache_dir;
};

struct ShotFailure {
    std::size_t shot = 0;
    std::string error;
};

struct LongVideo {
    FrameSequence frames;
    std::vector<FrameProvenance> provenance;
    std::vector<ShotVideo> shots;  // board order; skipped shots omitted
    std::vector<ShotFailure> failures;
};

/// Concatenates shots in board order without dropping boundary frames.
LongVideo run_storyboard(const std::vector<JobGraph>& board, const backends::ProviderSet& providers,
                         const backends::StageConfig& cfg, const StoryboardOptions& options = {});

struct ExportOptions {
    /// "{fps}", "{frames}" and "{output}" are substituted.
    std::vector<std::string> encoder_command{"ffmpeg", "-y", "-framerate", "{fps}", "-i", "{frames}/%06d.png",
                                             "-pix_fmt", "yuv420p", "{output}"};
    std::string output_name = "video.mp4";
    bool run_encoder = false;
};

/// Writes <dir>/frames/%06d.png, <dir>/encode.json and <dir>/provenance.json.
/// Throws IoError when the directory cannot be written.
void export_video(const LongVideo& video, const fs::path& dir, double fps, const ExportOptions& options = {});

FailurePolicy parse_failure_policy(const std::string& name);

/// board.json: [{sketch_path, appearance_path, story_path, n_stages}], paths
/// relative to the board file.
struct BoardEntry {
    fs::path sketch_path;
    fs::path appearance_path;
    fs::path story_path;
    int n_stages = 1;
};
std::vector<BoardEntry> load_board(const fs::path& file);
StoryboardShot load_shot(const BoardEntry& entry, std::string id);

nlohmann::json plan_to_json(const std::vector<JobGraph>& plan);
/// Re-reads each sketch from its stored path.
std::vector<JobGraph> plan_from_json(const nlohmann::json& j);

}  // namespace storyboard::pipeline
