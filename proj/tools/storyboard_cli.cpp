// storyboard: command-line front end for segmentation, sketch extraction,
// dataset assembly, planning, generation and evaluation.

#include "storyboard/backends/mocks.hpp"
#include "storyboard/backends/registry.hpp"
#include "storyboard/dataset.hpp"
#include "storyboard/error.hpp"
#include "storyboard/frames.hpp"
#include "storyboard/image_io.hpp"
#include "storyboard/metrics.hpp"
#include "storyboard/pipeline.hpp"
#include "storyboard/prompts.hpp"
#include "storyboard/shotdetect.hpp"
#include "storyboard/sketch.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace storyboard;

namespace {

void write_json(const fs::path& out, const json& j) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    image_io::write_text(out, j.dump(2) + "\n");
}

json read_json(const fs::path& in) {
    json j = json::parse(image_io::read_text(in), nullptr, false);
    if (j.is_discarded()) throw InvalidArgument(in.string() + " is not valid JSON");
    return j;
}

backends::ProviderSet providers_from(const std::string& file) {
    return (file.empty() ? backends::ProviderRegistry::all_mock() : backends::ProviderRegistry::load(file)).connect();
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

struct SegmentArgs {
    std::string input, out, keyframes_dir, decoder, policy = "center";
    double threshold = 25.0;
    std::int64_t min_shot_len = 2;
    double fps = 0.0;
    int width = 600;
};

int cmd_segment(const SegmentArgs& a) {
    LoadOptions lo;
    if (a.fps > 0) lo.fps_hint = a.fps;
    if (!a.decoder.empty()) lo.decoder_command = split_words(a.decoder);
    const FrameSequence seq = load_frames(a.input, lo);
    shotdetect::ShotDetectConfig cfg;
    cfg.threshold = a.threshold;
    cfg.min_shot_len = a.min_shot_len;
    const auto seg = shotdetect::detect_shots(seq, cfg);
    const auto policy = shotdetect::parse_keyframe_policy(a.policy);

    json shots = json::array();
    for (std::size_t k = 0; k < seg.shots.size(); ++k) {
        const auto& s = seg.shots[k];
        const auto keys = shotdetect::select_keyframes(s, policy);
        shots.push_back({{"start", s.start}, {"end", s.end}, {"keyframes", keys}});
        if (!a.keyframes_dir.empty()) {
            fs::create_directories(a.keyframes_dir);
            for (auto idx : keys) {
                char name[64];
                std::snprintf(name, sizeof name, "shot_%03zu_frame_%06lld.png", k, static_cast<long long>(idx));
                image_io::write_png(fs::path(a.keyframes_dir) / name,
                                    resize_to_width(seq[static_cast<std::size_t>(idx)], a.width));
            }
        }
    }
    write_json(a.out, {{"shots", shots}, {"scores", seg.trace.scores}});
    std::cout << seg.shots.size() << " shots in " << seq.size() << " frames\n";
    return 0;
}

int cmd_sketchify(const std::string& in, const std::string& out, double epsilon, int erosion) {
    sketch::SketchConfig cfg;
    cfg.epsilon = epsilon;
    cfg.erosion_passes = erosion;
    cfg.validate();
    if (fs::is_directory(in)) {
        fs::create_directories(out);
        std::size_t n = 0;
        for (const auto& e : fs::directory_iterator(in)) {
            const auto ext = e.path().extension().string();
            if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
            const fs::path target = fs::path(out) / (e.path().stem().string() + ".png");
            image_io::write_png(target, sketch::sketchify(image_io::read_image(e.path()), cfg));
            ++n;
        }
        std::cout << n << " sketches written\n";
    } else {
        if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
        image_io::write_png(out, sketch::sketchify(image_io::read_image(in), cfg));
    }
    return 0;
}

void print_violations(const std::vector<dataset::Violation>& v, const fs::path& root) {
    for (const auto& x : v) {
        fs::path rel = x.path.lexically_relative(root);
        std::cout << x.rule << "\t" << (rel.empty() ? x.path : rel).generic_string() << "\t" << x.detail << "\n";
    }
}

int cmd_assemble(const std::string& root, const std::string& manifest) {
    const auto m = dataset::assemble_manifest(root);
    write_json(manifest, dataset::to_json(m));
    std::cout << m.triplet_count() << " triplets in " << m.sequence_count() << " sequences, " << m.violations.size()
              << " violations\n";
    return 0;
}

int cmd_validate(const std::string& root) {
    const auto m = dataset::assemble_manifest(root);
    print_violations(m.violations, root);
    std::cout << m.triplet_count() << " valid triplets, " << m.violations.size() << " violations\n";
    return m.violations.empty() ? 0 : 1;
}

int cmd_stats(const std::string& manifest, const std::string& format) {
    const auto stats = dataset::compute_stats(dataset::manifest_from_json(read_json(manifest)));
    if (format == "json")
        std::cout << dataset::to_json(stats).dump(2) << "\n";
    else
        std::cout << dataset::stats_table(stats);
    return 0;
}

struct EvaluateArgs {
    std::string video, sketch_path, appearance, story, events, providers, out, embeddings, decoder, segments;
    std::size_t samples = 16;
    double threshold = 0.3;
    double gamma = 0.02;
    int dilate = 0;
    double fps = 0.0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    LoadOptions lo;
    if (a.fps > 0) lo.fps_hint = a.fps;
    if (!a.decoder.empty()) lo.decoder_command = split_words(a.decoder);
    const FrameSequence video = load_frames(a.video, lo);
    backends::ProviderSet providers = providers_from(a.providers);
    if (!a.embeddings.empty()) providers.image_embedder = std::make_shared<metrics::PrecomputedImageEmbedder>(a.embeddings);

    std::optional<metrics::EventSpec> events;
    if (!a.events.empty()) {
        const json raw = read_json(a.events);
        events = metrics::event_spec_from_json(raw);
        if (!(raw.is_object() && raw.contains("match_threshold"))) events->match_threshold = a.threshold;
    }
    metrics::MetricWeights w;
    w.gamma = a.gamma;
    metrics::EvaluateOptions opt;
    opt.sample_count = a.samples;
    opt.dilate_radius = a.dilate;
    if (!a.segments.empty()) {
        std::string list = a.segments;
        for (char& c : list)
            if (c == ',') c = ' ';
        for (const auto& s : split_words(list)) opt.segment_starts.push_back(std::stoul(s));
    }
    const auto report = metrics::evaluate_shot(image_io::read_gray_png(a.sketch_path), video,
                                               trim(image_io::read_text(a.appearance)),
                                               trim(image_io::read_text(a.story)), events, providers, w, opt);
    const json j = metrics::to_json(report);
    if (a.out.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json(a.out, j);
    return 0;
}

struct PlanArgs {
    std::string storyboard, out, providers, stages_dir;
    bool enhance = false;
    int max_retries = 3;
};

int cmd_plan(const PlanArgs& a) {
    const auto board = pipeline::load_board(a.storyboard);
    auto providers = providers_from(a.providers);
    auto& text = backends::require(providers.text, "generate_text");
    prompts::SanitizePolicy policy;
    policy.max_retries = a.max_retries;
    std::vector<pipeline::JobGraph> plan;
    for (std::size_t k = 0; k < board.size(); ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "shot_%03zu", k);
        auto shot = pipeline::load_shot(board[k], id);
        if (a.enhance) shot.motion = prompts::enhance_story(shot.motion, text, policy);
        auto assets = prompts::decompose_stages(shot.motion, shot.n_stages, text, policy);
        if (!a.stages_dir.empty()) prompts::save_stage_assets(a.stages_dir, shot.id, assets);
        plan.push_back(pipeline::plan_shot(shot, assets));
    }
    write_json(a.out, pipeline::plan_to_json(plan));
    std::cout << plan.size() << " shots planned\n";
    return 0;
}

struct RunArgs {
    std::string plan, providers, config, out, cache, policy = "abort-all";
    int workers = 2;
    int shot_workers = 1;
    int clip_frames = 0;
    bool encode = false;
};

int cmd_run(const RunArgs& a) {
    const auto plan = pipeline::plan_from_json(read_json(a.plan));
    backends::StageConfig cfg;
    if (!a.config.empty()) cfg = read_json(a.config).get<backends::StageConfig>();
    if (a.clip_frames > 0) cfg.video.clip_frames = a.clip_frames;
    cfg.validate();
    pipeline::StoryboardOptions opt;
    opt.node_workers = a.workers;
    opt.shot_workers = a.shot_workers;
    opt.policy = pipeline::parse_failure_policy(a.policy);
    opt.cache_dir = a.cache.empty() ? fs::path(a.out) / "cache" : fs::path(a.cache);
    const auto video = pipeline::run_storyboard(plan, providers_from(a.providers), cfg, opt);
    for (const auto& f : video.failures) std::cerr << "shot " << f.shot << " failed: " << f.error << "\n";
    if (video.frames.empty()) throw Error("no shot produced frames");
    pipeline::ExportOptions eo;
    eo.run_encoder = a.encode;
    pipeline::export_video(video, a.out, cfg.video.fps, eo);
    std::cout << video.frames.size() << " frames from " << video.shots.size() << " shots written to " << a.out << "\n";
    return video.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sketch-driven storyboard toolkit"};
    app.require_subcommand(1);

    SegmentArgs seg;
    auto* segment = app.add_subcommand("segment", "Detect hard cuts and select keyframes");
    segment->add_option("--input", seg.input, "Frame directory or video file")->required();
    segment->add_option("--out", seg.out, "shots.json")->required();
    segment->add_option("--threshold", seg.threshold, "Content-difference threshold")->capture_default_str();
    segment->add_option("--min-shot-len", seg.min_shot_len, "Minimum shot length in frames")->capture_default_str();
    segment->add_option("--fps", seg.fps, "Frame rate of the input");
    segment->add_option("--decoder", seg.decoder, "Decoder argv template with {input} and {outdir}");
    segment->add_option("--keyframes", seg.keyframes_dir, "Directory for resized keyframes");
    segment->add_option("--policy", seg.policy, "center | center+endpoints")->capture_default_str();
    segment->add_option("--width", seg.width, "Keyframe width")->capture_default_str();

    std::string sk_in, sk_out;
    double epsilon = 1.0;
    int erosion = 1;
    auto* sketchify = app.add_subcommand("sketchify", "Convert a keyframe (or a directory) into a line sketch");
    sketchify->add_option("--in", sk_in)->required();
    sketchify->add_option("--out", sk_out)->required();
    sketchify->add_option("--epsilon", epsilon)->capture_default_str();
    sketchify->add_option("--erosion", erosion, "Erosion passes")->capture_default_str();

    std::string root, manifest, format = "table";
    auto* assemble = app.add_subcommand("assemble", "Collect valid triplets into a manifest");
    assemble->add_option("--root", root)->required();
    assemble->add_option("--manifest", manifest)->required();
    auto* validate = app.add_subcommand("validate", "List layout and naming violations");
    validate->add_option("--root", root)->required();
    auto* stats = app.add_subcommand("stats", "Corpus statistics of a manifest");
    stats->add_option("--manifest", manifest)->required();
    stats->add_option("--format", format)->check(CLI::IsMember({"json", "table"}))->capture_default_str();

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score one generated shot");
    evaluate->add_option("--video", ev.video)->required();
    evaluate->add_option("--sketch", ev.sketch_path)->required();
    evaluate->add_option("--appearance", ev.appearance)->required();
    evaluate->add_option("--story", ev.story)->required();
    evaluate->add_option("--events", ev.events, "events.json: [..] or {events, match_threshold}");
    evaluate->add_option("--providers", ev.providers, "providers.json (mocks when omitted)");
    evaluate->add_option("--out", ev.out, "report.json (stdout when omitted)");
    evaluate->add_option("--embeddings", ev.embeddings, "Directory of precomputed frame embeddings");
    evaluate->add_option("--samples", ev.samples)->capture_default_str();
    evaluate->add_option("--threshold", ev.threshold, "Event match threshold")->capture_default_str();
    evaluate->add_option("--gamma", ev.gamma, "Coverage threshold")->capture_default_str();
    evaluate->add_option("--dilate", ev.dilate, "Edge dilation radius")->capture_default_str();
    evaluate->add_option("--segments", ev.segments, "Comma-separated first frame of each event segment");
    evaluate->add_option("--fps", ev.fps);
    evaluate->add_option("--decoder", ev.decoder);

    PlanArgs pl;
    auto* plan = app.add_subcommand("plan", "Decompose every storyboard shot into stages");
    plan->add_option("--storyboard", pl.storyboard)->required();
    plan->add_option("--out", pl.out)->required();
    plan->add_option("--providers", pl.providers, "providers.json (mocks when omitted)");
    plan->add_option("--stages-dir", pl.stages_dir, "Also write <dir>/<shot_id>/stages.json");
    plan->add_flag("--enhance", pl.enhance, "Expand motion prompts before decomposition");
    plan->add_option("--max-retries", pl.max_retries)->capture_default_str();

    RunArgs rn;
    auto* run = app.add_subcommand("run", "Execute a plan and export the long video");
    run->add_option("--plan", rn.plan)->required();
    run->add_option("--out", rn.out)->required();
    run->add_option("--providers", rn.providers, "providers.json (mocks when omitted)");
    run->add_option("--config", rn.config, "Stage configuration JSON");
    run->add_option("--cache", rn.cache, "Artifact cache (default <out>/cache)");
    run->add_option("--workers", rn.workers, "Concurrent nodes per shot")->capture_default_str();
    run->add_option("--shot-workers", rn.shot_workers, "Concurrent shots")->capture_default_str();
    run->add_option("--policy", rn.policy, "abort-all | skip-and-report")->capture_default_str();
    run->add_option("--clip-frames", rn.clip_frames, "Frames per clip (overrides the config)");
    run->add_flag("--encode", rn.encode, "Invoke the encoder after writing frames");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*segment) return cmd_segment(seg);
        if (*sketchify) return cmd_sketchify(sk_in, sk_out, epsilon, erosion);
        if (*assemble) return cmd_assemble(root, manifest);
        if (*validate) return cmd_validate(root);
        if (*stats) return cmd_stats(manifest, format);
        if (*evaluate) return cmd_evaluate(ev);
        if (*plan) return cmd_plan(pl);
        if (*run) return cmd_run(rn);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
