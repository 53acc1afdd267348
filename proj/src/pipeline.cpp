#include "storyboard/pipeline.hpp"

#include "storyboard/error.hpp"
#include "storyboard/hash.hpp"
#include "storyboard/image_io.hpp"
#include "storyboard/prompts.hpp"
#include "storyboard/subprocess.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace storyboard::pipeline {

using nlohmann::json;

void StoryboardShot::validate() const {
    if (n_stages < 1) throw InvalidArgument("n_stages must be >= 1");
    if (appearance.text.empty()) throw InvalidArgument("shot " + id + " has an empty appearance prompt");
}

const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::color_keyframe: return "color_keyframe";
        case NodeKind::derive_keyframe: return "derive_keyframe";
        case NodeKind::clip: return "clip";
        case NodeKind::concat: return "concat";
    }
    return "unknown";
}

std::vector<std::pair<std::size_t, std::size_t>> JobGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& n : nodes)
        for (std::size_t d : n.deps) out.emplace_back(d, n.id);
    return out;
}

std::vector<std::size_t> JobGraph::topological_order() const {
    std::vector<std::size_t> indegree(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> dependents(nodes.size());
    for (const auto& [from, to] : edges()) {
        if (from >= nodes.size() || to >= nodes.size()) throw InvalidArgument("edge references a missing node");
        ++indegree[to];
        dependents[from].push_back(to);
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (indegree[i] == 0) ready.insert(i);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        const std::size_t n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (std::size_t d : dependents[n])
            if (--indegree[d] == 0) ready.insert(d);
    }
    if (order.size() != nodes.size()) throw InvalidArgument("job graph has a cycle");
    return order;
}

JobGraph plan_shot(const StoryboardShot& shot, const std::vector<prompts::StageAsset>& assets) {
    shot.validate();
    const int n = shot.n_stages;
    if (static_cast<int>(assets.size()) != n)
        throw InvalidArgument("shot " + shot.id + " has " + std::to_string(assets.size()) + " stage assets for " +
                              std::to_string(n) + " stages");
    JobGraph g;
    g.shot = shot;
    g.assets = assets;
    std::sort(g.assets.begin(), g.assets.end(),
              [](const prompts::StageAsset& a, const prompts::StageAsset& b) { return a.stage < b.stage; });
    for (int i = 0; i < n; ++i)
        if (g.assets[i].stage != i + 1) throw InvalidArgument("stage assets are not contiguous from 1");

    g.nodes.push_back({0, NodeKind::color_keyframe, 0, {}});
    for (int i = 1; i <= n; ++i) g.nodes.push_back({g.derive_node(i), NodeKind::derive_keyframe, i, {g.color_node()}});
    for (int i = 1; i <= n; ++i)
        g.nodes.push_back({g.clip_node(i), NodeKind::clip, i, {g.keyframe_node(i - 1), g.derive_node(i)}});
    JobNode concat{g.concat_node(), NodeKind::concat, 0, {}};
    for (int i = 1; i <= n; ++i) concat.deps.push_back(g.clip_node(i));
    g.nodes.push_back(std::move(concat));
    return g;
}

void run_dag(const std::vector<std::vector<std::size_t>>& deps, int workers,
             const std::function<void(std::size_t)>& run) {
    if (workers < 1) throw InvalidArgument("worker count must be >= 1");
    const std::size_t n = deps.size();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> dependents(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d : deps[i]) {
            if (d >= n || d == i) throw InvalidArgument("invalid dependency");
            ++indegree[i];
            dependents[d].push_back(i);
        }
    }
    {
        // reject cycles before starting any work
        auto indeg = indegree;
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < n; ++i)
            if (indeg[i] == 0) stack.push_back(i);
        std::size_t seen = 0;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            ++seen;
            for (std::size_t d : dependents[v])
                if (--indeg[d] == 0) stack.push_back(d);
        }
        if (seen != n) throw InvalidArgument("dependency graph has a cycle");
    }
    if (n == 0) return;

    std::mutex mutex;
    std::condition_variable cv;
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.insert(i);
    std::size_t finished = 0;
    std::exception_ptr failure;

    auto worker = [&] {
        std::unique_lock lock(mutex);
        for (;;) {
            cv.wait(lock, [&] { return failure || finished == n || !ready.empty(); });
            if (failure || finished == n) return;
            const std::size_t node = *ready.begin();
            ready.erase(ready.begin());
            lock.unlock();
            std::exception_ptr error;
            try {
                run(node);
            } catch (...) {
                error = std::current_exception();
            }
            lock.lock();
            ++finished;
            if (error && !failure) failure = error;
            if (!failure)
                for (std::size_t d : dependents[node])
                    if (--indegree[d] == 0) ready.insert(d);
            cv.notify_all();
        }
    };
    const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> threads;
    for (std::size_t i = 1; i < count; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

class ArtifactCache {
public:
    explicit ArtifactCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {
        if (dir_) {
            std::error_code ec;
            fs::create_directories(*dir_, ec);
            if (ec) throw IoError("cannot create cache directory " + dir_->string() + ": " + ec.message());
        }
    }

    std::optional<Frame> load_frame(const std::string& key) const {
        if (!dir_) return std::nullopt;
        const fs::path p = *dir_ / (key + ".png");
        if (!fs::exists(p)) return std::nullopt;
        return image_io::decode_png_rgb(image_io::read_file(p));
    }

    void store_frame(const std::string& key, const Frame& f) const {
        if (!dir_) return;
        const fs::path tmp = *dir_ / (key + ".png.tmp");
        image_io::write_png(tmp, f);
        fs::rename(tmp, *dir_ / (key + ".png"));
    }

    std::optional<std::vector<Frame>> load_clip(const std::string& key) const {
        if (!dir_) return std::nullopt;
        const fs::path d = *dir_ / key;
        if (!fs::exists(d / "count")) return std::nullopt;
        const std::size_t count = std::stoul(image_io::read_text(d / "count"));
        std::vector<Frame> out;
        for (std::size_t j = 0; j < count; ++j)
            out.push_back(image_io::decode_png_rgb(image_io::read_file(d / frame_name(j))).with_index(j));
        return out;
    }

    void store_clip(const std::string& key, const std::vector<Frame>& frames) const {
        if (!dir_) return;
        const fs::path d = *dir_ / key;
        fs::create_directories(d);
        for (std::size_t j = 0; j < frames.size(); ++j) image_io::write_png(d / frame_name(j), frames[j]);
        // the count file marks the clip complete
        image_io::write_text(d / "count.tmp", std::to_string(frames.size()));
        fs::rename(d / "count.tmp", d / "count");
    }

private:
    static std::string frame_name(std::size_t j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%06zu.png", j);
        return buf;
    }

    std::optional<fs::path> dir_;
};

void hash_frame(Fnv64& h, int width, int height, std::span<const std::uint8_t> px) {
    h.update(static_cast<std::uint64_t>(width)).update(static_cast<std::uint64_t>(height)).update(px);
}

}  // namespace

ShotVideo run_shot(const JobGraph& graph, const backends::ProviderSet& providers,
                   const backends::StageConfig& cfg, const RunOptions& options) {
    cfg.validate();
    graph.topological_order();
    const int n = graph.n_stages();
    if (static_cast<int>(graph.nodes.size()) != 2 * n + 2) throw InvalidArgument("job graph does not match n_stages");
    auto& colorizer = backends::require(providers.colorizer, "color_sketch");
    auto& deriver = backends::require(providers.deriver, "derive_keyframe");
    auto& clips = backends::require(providers.clips, "generate_clip");
    const int clip_frames = cfg.video.frames_per_clip();
    const ArtifactCache cache(options.cache_dir);

    std::vector<std::optional<Frame>> keyframes(static_cast<std::size_t>(n) + 1);
    std::vector<std::optional<std::vector<Frame>>> clip_out(static_cast<std::size_t>(n) + 1);
    std::vector<std::string> keys(graph.nodes.size());
    std::vector<TraceEntry> trace(graph.nodes.size());

    auto run_node = [&](std::size_t id) {
        const JobNode& node = graph.nodes[id];
        TraceEntry& t = trace[id];
        t.node = id;
        t.kind = node.kind;
        t.stage = node.stage;
        Fnv64 h;
        h.update(std::string_view(to_string(node.kind)));
        switch (node.kind) {
            case NodeKind::color_keyframe: {
                hash_frame(h, graph.shot.sketch.width(), graph.shot.sketch.height(), graph.shot.sketch.values());
                h.update(graph.shot.appearance.text).update(json(cfg.coloring).dump());
                t.output = keys[id] = h.hex();
                if (auto hit = cache.load_frame(keys[id])) {
                    keyframes[0] = std::move(hit);
                    t.cached = true;
                } else {
                    keyframes[0] = colorizer.color_sketch(graph.shot.sketch, graph.shot.appearance.text, cfg.coloring);
                    cache.store_frame(keys[id], *keyframes[0]);
                }
                break;
            }
            case NodeKind::derive_keyframe: {
                const auto& conversion = graph.assets[node.stage - 1].conversion.text;
                t.inputs = {keys[graph.color_node()]};
                h.update(keys[graph.color_node()]).update(conversion).update(json(cfg.derivative).dump());
                t.output = keys[id] = h.hex();
                if (auto hit = cache.load_frame(keys[id])) {
                    keyframes[node.stage] = std::move(hit);
                    t.cached = true;
                } else {
                    // every derivative is conditioned on the same anchor
                    keyframes[node.stage] = deriver.derive_keyframe(*keyframes[0], conversion, cfg.derivative);
                    cache.store_frame(keys[id], *keyframes[node.stage]);
                }
                break;
            }
            case NodeKind::clip: {
                const auto& d = graph.assets[node.stage - 1].dynamic;
                const auto first = graph.keyframe_node(node.stage - 1);
                const auto last = graph.keyframe_node(node.stage);
                t.inputs = {keys[first], keys[last]};
                h.update(keys[first]).update(keys[last]);
                h.update(d.positive).update(d.action).update(d.face).update(d.body).update(d.style);
                h.update(static_cast<std::uint64_t>(clip_frames)).update(json(cfg.video).dump());
                t.output = keys[id] = h.hex();
                if (auto hit = cache.load_clip(keys[id])) {
                    clip_out[node.stage] = std::move(hit);
                    t.cached = true;
                } else {
                    auto frames = clips.generate_clip(*keyframes[node.stage - 1], *keyframes[node.stage], d,
                                                      clip_frames, cfg.video);
                    if (static_cast<int>(frames.size()) != clip_frames)
                        throw ProviderError("clip provider returned " + std::to_string(frames.size()) +
                                            " frames, expected " + std::to_string(clip_frames));
                    cache.store_clip(keys[id], frames);
                    clip_out[node.stage] = std::move(frames);
                }
                break;
            }
            case NodeKind::concat: {
                for (int i = 1; i <= n; ++i) {
                    t.inputs.push_back(keys[graph.clip_node(i)]);
                    h.update(keys[graph.clip_node(i)]);
                }
                t.output = keys[id] = h.hex();
                break;
            }
        }
    };

    std::vector<std::vector<std::size_t>> deps;
    for (const auto& node : graph.nodes) deps.push_back(node.deps);
    run_dag(deps, options.workers, run_node);

    ShotVideo shot;
    std::vector<Frame> frames;
    const double fps = cfg.video.fps;
    for (int i = 1; i <= n; ++i) {
        const auto& clip = *clip_out[i];
        // adjacent clips share a keyframe; keep it once
        for (std::size_t j = i == 1 ? 0 : 1; j < clip.size(); ++j) {
            const std::size_t idx = frames.size();
            frames.push_back(clip[j].with_index(idx, static_cast<double>(idx) / fps));
            shot.provenance.push_back({options.shot_index, i, j});
        }
    }
    shot.frames = FrameSequence(std::move(frames), fps);
    for (auto& k : keyframes) shot.keyframes.push_back(std::move(*k));
    shot.trace = std::move(trace);
    return shot;
}

LongVideo run_storyboard(const std::vector<JobGraph>& board, const backends::ProviderSet& providers,
                         const backends::StageConfig& cfg, const StoryboardOptions& options) {
    if (board.empty()) throw InvalidArgument("storyboard has no shots");
    if (options.shot_workers < 1 || options.node_workers < 1) throw InvalidArgument("worker counts must be >= 1");
    std::vector<std::optional<ShotVideo>> results(board.size());
    std::vector<std::optional<std::string>> errors(board.size());

    run_dag(std::vector<std::vector<std::size_t>>(board.size()), options.shot_workers, [&](std::size_t k) {
        RunOptions ro{options.node_workers, options.cache_dir, k};
        try {
            results[k] = run_shot(board[k], providers, cfg, ro);
        } catch (const std::exception& e) {
            if (options.policy == FailurePolicy::abort_all) throw;
            errors[k] = e.what();
            log_warning("shot " + std::to_string(k) + " (" + board[k].shot.id + ") skipped: " + e.what());
        }
    });

    LongVideo out;
    std::vector<Frame> frames;
    const double fps = cfg.video.fps;
    for (std::size_t k = 0; k < board.size(); ++k) {
        if (errors[k]) {
            out.failures.push_back({k, *errors[k]});
            continue;
        }
        ShotVideo& s = *results[k];
        for (std::size_t j = 0; j < s.frames.size(); ++j) {
            const std::size_t idx = frames.size();
            frames.push_back(s.frames[j].with_index(idx, static_cast<double>(idx) / fps));
            out.provenance.push_back(s.provenance[j]);
        }
        out.shots.push_back(std::move(s));
    }
    out.frames = FrameSequence(std::move(frames), fps);
    return out;
}

void export_video(const LongVideo& video, const fs::path& dir, double fps, const ExportOptions& options) {
    if (video.frames.empty()) throw InvalidArgument("cannot export an empty video");
    if (!(fps > 0)) throw InvalidArgument("fps must be positive");
    if (video.provenance.size() != video.frames.size()) throw InvalidArgument("provenance does not cover every frame");
    const fs::path frames_dir = dir / "frames";
    std::error_code ec;
    fs::create_directories(frames_dir, ec);
    if (ec) throw IoError("cannot create " + frames_dir.string() + ": " + ec.message());

    auto frame_name = [](std::size_t i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%06zu.png", i);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < video.frames.size(); ++i) image_io::write_png(frames_dir / frame_name(i), video.frames[i]);
    // drop frames left over from a longer earlier export
    for (std::size_t i = video.frames.size(); fs::exists(frames_dir / frame_name(i)); ++i)
        fs::remove(frames_dir / frame_name(i));

    std::ostringstream fps_text;
    fps_text << fps;
    std::vector<std::string> command;
    for (std::string arg : options.encoder_command) {
        for (const auto& [token, value] :
             {std::pair<std::string, std::string>{"{fps}", fps_text.str()},
              {"{frames}", frames_dir.string()},
              {"{output}", (dir / options.output_name).string()}}) {
            for (auto pos = arg.find(token); pos != std::string::npos; pos = arg.find(token, pos + value.size()))
                arg.replace(pos, token.size(), value);
        }
        command.push_back(std::move(arg));
    }
    image_io::write_text(dir / "encode.json", json({{"command", command},
                                                    {"fps", fps},
                                                    {"frame_count", video.frames.size()},
                                                    {"frames", "frames/%06d.png"},
                                                    {"output", options.output_name}})
                                                      .dump(2) + "\n");

    json prov = json::array();
    for (std::size_t i = 0; i < video.provenance.size(); ++i) {
        const auto& p = video.provenance[i];
        prov.push_back({{"frame", i}, {"shot", p.shot}, {"clip", p.clip}, {"local", p.local}});
    }
    image_io::write_text(dir / "provenance.json",
                         json({{"fps", fps}, {"boundary_rule", "first frame of clip i >= 2 dropped within a shot"},
                               {"frames", prov}})
                                 .dump(2) + "\n");

    if (options.run_encoder) {
        const ProcessResult r = run_process(command);
        if (r.exit_code != 0)
            throw SubprocessError("encoder exited with status " + std::to_string(r.exit_code), r.exit_code,
                                  r.stderr_text);
    }
}

FailurePolicy parse_failure_policy(const std::string& name) {
    if (name == "abort-all" || name == "abort_all") return FailurePolicy::abort_all;
    if (name == "skip-and-report" || name == "skip_and_report" || name == "skip") return FailurePolicy::skip_and_report;
    throw InvalidArgument("unknown failure policy '" + name + "'");
}

std::vector<BoardEntry> load_board(const fs::path& file) {
    const json j = json::parse(image_io::read_text(file), nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw InvalidArgument("board file must hold a JSON array: " + file.string());
    const fs::path base = file.parent_path();
    auto resolve = [&](const json& e, const char* key) {
        fs::path p(e.at(key).get<std::string>());
        return p.is_absolute() ? p : base / p;
    };
    std::vector<BoardEntry> out;
    try {
        for (const auto& e : j) {
            BoardEntry b{resolve(e, "sketch_path"), resolve(e, "appearance_path"), resolve(e, "story_path"),
                         e.value("n_stages", 1)};
            if (b.n_stages < 1) throw InvalidArgument("n_stages must be >= 1");
            out.push_back(std::move(b));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed board file: ") + e.what());
    }
    if (out.empty()) throw InvalidArgument("board file lists no shots");
    return out;
}

namespace {

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

StoryboardShot load_shot(const BoardEntry& entry, std::string id) {
    StoryboardShot s;
    s.id = std::move(id);
    s.sketch = image_io::read_gray_png(entry.sketch_path);
    s.sketch_path = entry.sketch_path;
    s.appearance = prompts::make_appearance(trimmed(image_io::read_text(entry.appearance_path)));
    s.motion = prompts::make_motion(trimmed(image_io::read_text(entry.story_path)));
    s.n_stages = entry.n_stages;
    s.validate();
    return s;
}

json plan_to_json(const std::vector<JobGraph>& plan) {
    json shots = json::array();
    for (const auto& g : plan) {
        json nodes = json::array();
        for (const auto& n : g.nodes)
            nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"stage", n.stage}, {"deps", n.deps}});
        shots.push_back({{"id", g.shot.id},
                         {"sketch_path", fs::absolute(g.shot.sketch_path).generic_string()},
                         {"appearance", g.shot.appearance.text},
                         {"motion", g.shot.motion.text},
                         {"motion_enhanced", g.shot.motion.enhanced},
                         {"n_stages", g.shot.n_stages},
                         {"stages", prompts::stages_to_json(g.shot.id, g.assets).at("stages")},
                         {"nodes", nodes}});
    }
    return {{"shots", shots}};
}

std::vector<JobGraph> plan_from_json(const json& j) {
    std::vector<JobGraph> out;
    try {
        for (const auto& s : j.at("shots")) {
            StoryboardShot shot;
            shot.id = s.at("id").get<std::string>();
            shot.sketch_path = s.at("sketch_path").get<std::string>();
            shot.sketch = image_io::read_gray_png(shot.sketch_path);
            shot.appearance = prompts::make_appearance(s.at("appearance").get<std::string>());
            shot.motion = prompts::make_motion(s.at("motion").get<std::string>(), s.value("motion_enhanced", false));
            shot.n_stages = s.at("n_stages").get<int>();
            out.push_back(plan_shot(shot, prompts::stages_from_json(s.at("stages"))));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed plan: ") + e.what());
    }
    return out;
}

}  // namespace storyboard::pipeline
