#include "storyboard/metrics.hpp"

#include "storyboard/error.hpp"
#include "storyboard/image_io.hpp"
#include "storyboard/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>

namespace storyboard::metrics {

using nlohmann::json;

namespace {

bool unit_sum(double a, double b, double c) {
    return a >= 0 && b >= 0 && c >= 0 && std::abs(a + b + c - 1.0) <= 1e-9;
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

void MetricWeights::validate() const {
    if (!unit_sum(lambda, mu, nu)) throw InvalidArgument("lambda, mu, nu must be nonnegative and sum to 1");
    if (!unit_sum(alpha, beta, eta)) throw InvalidArgument("alpha, beta, eta must be nonnegative and sum to 1");
    if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
}

double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw InvalidArgument("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()));
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine similarity of a zero vector");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values()[i] * b.values()[i];
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

EdgeScores edge_f1(const sketch::EdgeMap& sketch_edges, const sketch::EdgeMap& generated_edges, int dilate_radius) {
    if (sketch_edges.width() != generated_edges.width() || sketch_edges.height() != generated_edges.height())
        throw InvalidArgument("edge maps differ in size");
    if (dilate_radius < 0) throw InvalidArgument("dilate_radius must be >= 0");
    std::vector<std::uint8_t> dilated(sketch_edges.bits().begin(), sketch_edges.bits().end());
    if (dilate_radius > 0)
        kernels::parallel::dilate_binary(sketch_edges.bits(), dilated, sketch_edges.width(), sketch_edges.height(),
                                         dilate_radius);
    const auto set_count = static_cast<std::size_t>(std::count_if(dilated.begin(), dilated.end(),
                                                                   [](std::uint8_t b) { return b != 0; }));
    const std::size_t generated = generated_edges.count();
    const auto both = static_cast<double>(kernels::parallel::count_both(dilated, generated_edges.bits()));
    EdgeScores s;
    s.precision = generated == 0 ? 0.0 : both / static_cast<double>(generated);
    s.recall = set_count == 0 ? 0.0 : both / static_cast<double>(set_count);
    // 2PR/(P+R) reduced to counts, which rounds once
    s.f1 = both == 0.0 ? 0.0 : 2.0 * both / static_cast<double>(generated + set_count);
    return s;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count) {
    if (n == 0) throw InvalidArgument("cannot sample an empty sequence");
    if (count == 0) throw InvalidArgument("sample count must be >= 1");
    std::vector<std::size_t> out;
    if (n <= count) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    if (count == 1) return {0};
    const std::size_t span = n - 1;
    const std::size_t steps = count - 1;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = (2 * k * span + steps) / (2 * steps);
        if (out.empty() || out.back() != i) out.push_back(i);
    }
    return out;
}

std::vector<Frame> sample_frames(const FrameSequence& seq, std::size_t count) {
    std::vector<Frame> out;
    for (std::size_t i : sample_indices(seq.size(), count)) out.push_back(seq[i]);
    return out;
}

double temporal_clip(const EmbeddingVector& anchor, std::span<const EmbeddingVector> samples) {
    if (samples.empty()) throw InvalidArgument("temporal similarity needs at least one sample");
    std::vector<double> sims;
    for (const auto& s : samples) sims.push_back(cosine_sim(anchor, s));
    return mean(sims);
}

double temporal_clip(const Frame& anchor, std::span<const Frame> samples, backends::ImageEmbedder& embed) {
    if (samples.empty()) throw InvalidArgument("temporal similarity needs at least one sample");
    std::vector<EmbeddingVector> e;
    for (const auto& f : samples) e.push_back(embed.embed_image(f));
    return temporal_clip(embed.embed_image(anchor), e);
}

double temporal_lpips(const Frame& anchor, std::span<const Frame> samples, backends::PerceptualMetric& perceptual) {
    if (samples.empty()) throw InvalidArgument("temporal distance needs at least one sample");
    std::vector<double> d;
    for (const auto& f : samples) d.push_back(perceptual.perceptual_distance(anchor, f));
    return mean(d);
}

double text_image_align(const EmbeddingVector& text, std::span<const EmbeddingVector> images) {
    if (images.empty()) throw InvalidArgument("text-image alignment needs at least one image");
    return temporal_clip(text, images);
}

double text_image_align(const std::string& text, std::span<const Frame> images,
                        backends::TextEmbedder& embed_text, backends::ImageEmbedder& embed_image) {
    if (images.empty()) throw InvalidArgument("text-image alignment needs at least one image");
    std::vector<EmbeddingVector> e;
    for (const auto& f : images) e.push_back(embed_image.embed_image(f));
    return text_image_align(embed_text.embed_text(text), e);
}

void EventSpec::validate() const {
    if (events.empty()) throw InvalidArgument("event spec needs at least one event");
    if (!std::isfinite(match_threshold)) throw InvalidArgument("match threshold must be finite");
}

EventMatchResult match_events(const std::vector<std::vector<double>>& table, std::span<const int> positions,
                              double threshold) {
    if (table.empty()) throw InvalidArgument("no events to match");
    EventMatchResult r;
    for (const auto& row : table) {
        if (row.empty() || row.size() != positions.size())
            throw InvalidArgument("similarity table row does not cover every segment");
        std::size_t best = 0;
        for (std::size_t j = 1; j < row.size(); ++j)
            if (row[j] > row[best]) best = j;
        r.best_scores.push_back(row[best]);
        r.matched.push_back(row[best] >= threshold);
        r.positions.push_back(positions[best]);
    }
    return r;
}

namespace {

EventMatchResult match_embedded(const std::vector<EmbeddingVector>& events,
                                const std::vector<std::vector<EmbeddingVector>>& segments,
                                std::span<const int> positions, double threshold) {
    std::vector<std::vector<double>> table;
    for (const auto& e : events) {
        std::vector<double> row;
        for (const auto& seg : segments) {
            if (seg.empty()) throw InvalidArgument("event segment has no frames");
            double best = -1.0;
            for (const auto& f : seg) best = std::max(best, cosine_sim(e, f));
            row.push_back(best);
        }
        table.push_back(std::move(row));
    }
    return match_events(table, positions, threshold);
}

}  // namespace

EventMatchResult match_events(const EventSpec& spec, std::span<const EventSegment> segments,
                              backends::TextEmbedder& embed_text, backends::ImageEmbedder& embed_image) {
    spec.validate();
    if (segments.empty()) throw InvalidArgument("no segments to match against");
    std::vector<EmbeddingVector> events;
    for (const auto& e : spec.events) events.push_back(embed_text.embed_text(e));
    std::vector<std::vector<EmbeddingVector>> segs;
    std::vector<int> positions;
    for (const auto& s : segments) {
        std::vector<EmbeddingVector> v;
        for (const auto& f : s.frames) v.push_back(embed_image.embed_image(f));
        segs.push_back(std::move(v));
        positions.push_back(s.position);
    }
    return match_embedded(events, segs, positions, spec.match_threshold);
}

EventScores event_scores(const EventMatchResult& match, const MetricWeights& w) {
    const std::size_t n = match.matched.size();
    if (n == 0 || match.best_scores.size() != n || match.positions.size() != n)
        throw InvalidArgument("malformed event match result");
    EventScores s;
    std::vector<int> matched_positions;
    double score_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (match.matched[i]) matched_positions.push_back(match.positions[i]);
        score_sum += match.best_scores[i];
    }
    s.r_s = static_cast<double>(matched_positions.size()) / static_cast<double>(n);
    s.r_c = score_sum / static_cast<double>(n);
    std::size_t ordered = 0;
    for (std::size_t k = 1; k < matched_positions.size(); ++k)
        if (matched_positions[k - 1] <= matched_positions[k]) ++ordered;
    const std::size_t pairs = matched_positions.size() < 2 ? 0 : matched_positions.size() - 1;
    s.r_o = pairs == 0 ? 1.0 : static_cast<double>(ordered) / static_cast<double>(pairs);
    s.order = ordered == pairs ? 1 : 0;
    s.completion = s.r_s;
    s.controllability = w.lambda * s.r_s + w.mu * s.r_o + w.nu * s.r_c;
    return s;
}

double dynamic_progression(std::span<const double> adjacent_sims, double first_last_sim, const MetricWeights& w) {
    if (adjacent_sims.empty()) throw InvalidArgument("dynamic progression needs at least two samples");
    double delta_sum = 0.0;
    std::size_t covered = 0;
    for (double sim : adjacent_sims) {
        const double delta = 1.0 - sim;
        delta_sum += delta;
        if (delta >= w.gamma) ++covered;
    }
    const auto n = static_cast<double>(adjacent_sims.size());
    return w.alpha * (delta_sum / n) + w.beta * (1.0 - first_last_sim) + w.eta * (static_cast<double>(covered) / n);
}

double dynamic_progression(std::span<const EmbeddingVector> samples, const MetricWeights& w) {
    if (samples.size() < 2) throw InvalidArgument("dynamic progression needs at least two samples");
    std::vector<double> adjacent;
    for (std::size_t t = 1; t < samples.size(); ++t) adjacent.push_back(cosine_sim(samples[t - 1], samples[t]));
    return dynamic_progression(adjacent, cosine_sim(samples.front(), samples.back()), w);
}

double dynamic_progression(std::span<const Frame> samples, backends::ImageEmbedder& embed, const MetricWeights& w) {
    if (samples.size() < 2) throw InvalidArgument("dynamic progression needs at least two samples");
    std::vector<EmbeddingVector> e;
    for (const auto& f : samples) e.push_back(embed.embed_image(f));
    return dynamic_progression(e, w);
}

std::vector<std::pair<std::string, const MetricSlot*>> MetricReport::slots() const {
    return {{"lpips_shot", &lpips_shot},
            {"clip_image_sim", &clip_image_sim},
            {"edge_f1", &edge_f1},
            {"temp_clip", &temp_clip},
            {"temp_lpips", &temp_lpips},
            {"static_align", &static_align},
            {"story_align", &story_align},
            {"event_completion", &event_completion},
            {"dynamic_controllability", &dynamic_controllability},
            {"event_order", &event_order},
            {"dynamic_progression", &dynamic_progression}};
}

void EvaluateOptions::validate() const {
    if (sample_count == 0) throw InvalidArgument("sample_count must be >= 1");
    if (dilate_radius < 0) throw InvalidArgument("dilate_radius must be >= 0");
    for (std::size_t i = 1; i < segment_starts.size(); ++i)
        if (segment_starts[i] <= segment_starts[i - 1])
            throw InvalidArgument("segment starts must be strictly increasing");
}

namespace {

template <typename Fn>
void fill(MetricSlot& slot, Fn&& fn) {
    try {
        slot.value = fn();
    } catch (const std::exception& e) {
        slot.error = e.what();
    }
}

}  // namespace

MetricReport evaluate_shot(const GrayImage& sketch, const FrameSequence& video, const std::string& appearance_text,
                           const std::string& motion_text, const std::optional<EventSpec>& events,
                           const backends::ProviderSet& providers, const MetricWeights& w,
                           const EvaluateOptions& options) {
    if (video.empty()) throw InvalidArgument("cannot evaluate an empty video");
    w.validate();
    options.validate();
    if (events) events->validate();
    if (!options.segment_starts.empty() && options.segment_starts.back() >= video.size())
        throw InvalidArgument("segment start beyond the end of the video");

    const Frame& anchor = video[0];
    const GrayImage shot_sketch = sketch.width() == anchor.width() && sketch.height() == anchor.height()
                                      ? sketch
                                      : resize(sketch, anchor.width(), anchor.height());
    const auto indices = sample_indices(video.size(), options.sample_count);

    // Embeddings are shared by several metrics; a failed embedding is retried
    // (and fails again) per metric so each slot carries its own error.
    std::vector<std::optional<EmbeddingVector>> cache(video.size());
    auto frame_embedding = [&](std::size_t i) -> const EmbeddingVector& {
        if (!cache[i]) cache[i] = backends::require(providers.image_embedder, "embed_image").embed_image(video[i]);
        return *cache[i];
    };
    auto sample_embeddings = [&] {
        std::vector<EmbeddingVector> out;
        for (std::size_t i : indices) out.push_back(frame_embedding(i));
        return out;
    };
    auto text_embedding = [&](const std::string& t) {
        return backends::require(providers.text_embedder, "embed_text").embed_text(t);
    };

    MetricReport r;
    fill(r.lpips_shot, [&] {
        return backends::require(providers.perceptual, "perceptual_distance")
            .perceptual_distance(to_rgb(shot_sketch), anchor);
    });
    fill(r.clip_image_sim, [&] {
        auto& embed = backends::require(providers.image_embedder, "embed_image");
        return cosine_sim(embed.embed_sketch(shot_sketch), frame_embedding(0));
    });
    fill(r.edge_f1, [&] {
        return edge_f1(sketch::canny_edges(shot_sketch, options.canny),
                       sketch::canny_edges(to_grayscale(anchor), options.canny), options.dilate_radius)
            .f1;
    });
    fill(r.temp_clip, [&] { return temporal_clip(frame_embedding(0), sample_embeddings()); });
    fill(r.temp_lpips, [&] {
        auto& perceptual = backends::require(providers.perceptual, "perceptual_distance");
        std::vector<double> d;
        for (std::size_t i : indices) d.push_back(perceptual.perceptual_distance(anchor, video[i]));
        return mean(d);
    });
    fill(r.static_align, [&] {
        const EmbeddingVector first[] = {frame_embedding(0)};
        return text_image_align(text_embedding(appearance_text), first);
    });
    fill(r.story_align, [&] { return text_image_align(text_embedding(motion_text), sample_embeddings()); });

    if (!events) {
        for (MetricSlot* s : {&r.event_completion, &r.dynamic_controllability, &r.event_order})
            s->error = "no events supplied";
    } else {
        std::optional<EventScores> scores;
        std::string failure;
        try {
            std::vector<EmbeddingVector> event_vectors;
            for (const auto& e : events->events) event_vectors.push_back(text_embedding(e));
            std::vector<std::vector<EmbeddingVector>> segments;
            std::vector<int> positions;
            if (options.segment_starts.empty()) {
                const std::size_t n = events->events.size();
                const std::size_t m = indices.size();
                for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t begin = j * m / n;
                    const std::size_t end = std::max((j + 1) * m / n, begin + 1);
                    std::vector<EmbeddingVector> seg;
                    for (std::size_t k = begin; k < end; ++k) seg.push_back(frame_embedding(indices[k]));
                    segments.push_back(std::move(seg));
                    positions.push_back(static_cast<int>(j) + 1);
                }
            } else {
                const auto& starts = options.segment_starts;
                for (std::size_t j = 0; j < starts.size(); ++j) {
                    const std::size_t begin = starts[j];
                    const std::size_t end = j + 1 < starts.size() ? starts[j + 1] : video.size();
                    std::vector<EmbeddingVector> seg;
                    for (std::size_t i : indices)
                        if (i >= begin && i < end) seg.push_back(frame_embedding(i));
                    if (seg.empty()) seg.push_back(frame_embedding(begin + (end - begin) / 2));
                    segments.push_back(std::move(seg));
                    positions.push_back(static_cast<int>(j) + 1);
                }
            }
            scores = event_scores(match_embedded(event_vectors, segments, positions, events->match_threshold), w);
        } catch (const std::exception& e) {
            failure = e.what();
        }
        if (scores) {
            r.event_completion.value = scores->completion;
            r.dynamic_controllability.value = scores->controllability;
            r.event_order.value = scores->order;
        } else {
            for (MetricSlot* s : {&r.event_completion, &r.dynamic_controllability, &r.event_order}) s->error = failure;
        }
    }
    fill(r.dynamic_progression, [&] { return dynamic_progression(sample_embeddings(), w); });
    return r;
}

PrecomputedImageEmbedder::PrecomputedImageEmbedder(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) throw IoError("embedding directory not found: " + dir_.string());
}

EmbeddingVector PrecomputedImageEmbedder::load(const std::filesystem::path& file) const {
    const json j = json::parse(image_io::read_text(file), nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw InvalidArgument(file.string() + " must hold a JSON array");
    std::vector<double> values;
    for (const auto& v : j) {
        if (!v.is_number()) throw InvalidArgument(file.string() + " holds a non-numeric entry");
        values.push_back(v.get<double>());
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector PrecomputedImageEmbedder::embed_image(const Frame& image) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06zu.json", image.index());
    return load(dir_ / name);
}

EmbeddingVector PrecomputedImageEmbedder::embed_sketch(const GrayImage&) { return load(dir_ / "sketch.json"); }

json to_json(const MetricReport& r) {
    json out = json::object();
    json errors = json::object();
    for (const auto& [name, slot] : r.slots()) {
        out[name] = slot->value ? json(*slot->value) : json(nullptr);
        if (!slot->ok()) errors[name] = slot->error;
    }
    out["errors"] = errors;
    return out;
}

EventSpec event_spec_from_json(const json& j) {
    try {
        EventSpec s;
        if (j.is_array()) {
            s.events = j.get<std::vector<std::string>>();
        } else {
            s.events = j.at("events").get<std::vector<std::string>>();
            s.match_threshold = j.value("match_threshold", s.match_threshold);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed event spec: ") + e.what());
    }
}

}  // namespace storyboard::metrics
