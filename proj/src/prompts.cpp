#include "storyboard/prompts.hpp"

#include "storyboard/error.hpp"
#include "storyboard/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace storyboard::prompts {

using nlohmann::json;

namespace defaults {
const char* const positive =
    "same character design, same face, same outfit, stable body proportions, stable scene structure, "
    "fixed camera, consistent framing, temporally coherent rendering";
const char* const face = "the character keeps a consistent, natural facial expression";
const char* const body = "the character moves smoothly with stable body proportions";
const char* const style =
    "clean outlines, stable colors, low flicker, temporally stable character appearance, "
    "stable background, consistent 2D animation rendering";
}  // namespace defaults

namespace {

std::string trim(const std::string& s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    auto b = std::find_if(s.begin(), s.end(), not_space);
    auto e = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return b < e ? std::string(b, e) : std::string();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string join_nonempty(std::initializer_list<const std::string*> parts) {
    std::string out;
    for (const std::string* p : parts) {
        std::string t = trim(*p);
        if (t.empty()) continue;
        if (!out.empty()) out += ", ";
        out += t;
    }
    return out;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

}  // namespace

std::size_t count_words(const std::string& text) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

AppearancePrompt make_appearance(std::string text) {
    AppearancePrompt p;
    p.word_count = count_words(text);
    p.text = std::move(text);
    return p;
}

MotionPrompt make_motion(std::string text, bool enhanced) {
    MotionPrompt p;
    p.word_count = count_words(text);
    p.text = std::move(text);
    p.enhanced = enhanced;
    return p;
}

std::vector<std::string> SanitizePolicy::default_banned_terms() {
    return {"dust", "smoke", "debris", "explosion", "particle effects", "weather effects", "falling leaves"};
}

std::pair<AppearancePrompt, MotionPrompt> compose_prompts(const RecognitionResult& r,
                                                          const std::string& composition_hint) {
    if (trim(r.subject).empty() && trim(r.style).empty() && trim(r.scene).empty() && trim(r.action).empty())
        throw InvalidArgument("empty recognition");
    return {make_appearance(join_nonempty({&r.subject, &r.style, &r.scene, &composition_hint})),
            make_motion(join_nonempty({&r.subject, &r.scene, &r.action}))};
}

SanitizeResult sanitize(const std::string& text, const SanitizePolicy& policy) {
    SanitizeResult out;
    const std::string haystack = lower(text);
    for (const auto& term : policy.banned_terms) {
        const std::string needle = lower(term);
        if (needle.empty()) continue;
        if (haystack.find(needle) != std::string::npos &&
            std::find(out.violations.begin(), out.violations.end(), needle) == out.violations.end())
            out.violations.push_back(needle);
    }
    out.clean = out.violations.empty();
    return out;
}

std::string scrub(const std::string& text, const SanitizePolicy& policy) {
    std::vector<std::string> kept;
    std::string clause;
    auto flush = [&](char terminator) {
        std::string t = trim(clause);
        clause.clear();
        if (t.empty() || !sanitize(t, policy).clean) return;
        if (terminator) t += terminator;
        kept.push_back(std::move(t));
    };
    for (char c : text) {
        if (c == ',' || c == '.' || c == ';') {
            flush(c);
        } else {
            clause += c;
        }
    }
    flush('\0');
    std::string out = join(kept, " ");
    // a dropped final clause can leave a dangling comma
    while (!out.empty() && (out.back() == ',' || out.back() == ';')) out.pop_back();
    return out;
}

RecognitionResult recognize(const Frame& keyframe, backends::ImageDescriber& describer) {
    RecognitionResult r;
    r.subject = trim(describer.describe_image(
        keyframe, "Describe the main subject: character identity, appearance and clothing."));
    r.style = trim(describer.describe_image(
        keyframe, "Describe the visual style: animation style, rendering style and visual idiom."));
    r.scene = trim(describer.describe_image(
        keyframe, "Describe the scene: background, environment and camera composition."));
    r.action = trim(describer.describe_image(
        keyframe, "Describe the action: pose, motion, expression and current action state."));
    return r;
}

std::string enhancement_instruction() {
    return "Rewrite the motion description below into a more detailed local action narrative. "
           "Stay inside the same shot, with the same subject and the same scene. Keep every existing "
           "scene element, improve motion continuity and temporal order, and do not introduce new "
           "characters, unrelated objects, new environments or environmental effects. "
           "Answer with the rewritten description only.";
}

std::string decomposition_instruction(int n_stages) {
    std::ostringstream s;
    s << "Generate exactly " << n_stages
      << " sequential keyframes with temporally continuous actions while preserving the same "
         "character identity and scene structure. Respond with a JSON array of "
      << n_stages
      << " objects with the keys \"stage\" (1-based integer), \"conversion\" (one discrete action "
         "state for keyframe editing), \"positive\", \"action\", \"face\", \"body\" and \"style\" "
         "(the clip prompt components).";
    return s.str();
}

MotionPrompt enhance_story(const MotionPrompt& m, backends::TextGenerator& provider,
                           const SanitizePolicy& policy) {
    if (policy.max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
    backends::TextRequest request{enhancement_instruction(), m.text, std::nullopt};
    std::vector<std::string> last_violations;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        std::string text = trim(provider.generate_text(request));
        SanitizeResult audit = sanitize(text, policy);
        if (text.empty()) audit = {false, {"<empty response>"}};
        if (audit.clean) return make_motion(std::move(text), true);
        last_violations = audit.violations;
        request.system = enhancement_instruction() +
                         " The previous answer was rejected because it mentioned: " +
                         join(audit.violations, ", ") + ". Do not mention these.";
    }
    log_warning("story enhancement rejected after " + std::to_string(policy.max_retries + 1) +
                " attempts (" + join(last_violations, ", ") + "); keeping the original motion prompt");
    MotionPrompt original = m;
    original.enhanced = false;
    original.word_count = count_words(original.text);
    return original;
}

std::vector<StageAsset> parse_stage_response(const std::string& text) {
    const auto open = text.find_first_of("[{");
    const auto close = text.find_last_of("]}");
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw ProtocolError("stage response contains no JSON");
    json doc = json::parse(text.begin() + static_cast<std::ptrdiff_t>(open),
                           text.begin() + static_cast<std::ptrdiff_t>(close) + 1, nullptr, false);
    if (doc.is_discarded()) throw ProtocolError("stage response is not valid JSON");
    if (doc.is_object() && doc.contains("stages")) doc = doc["stages"];
    if (!doc.is_array()) throw ProtocolError("stage response must be a JSON array");

    auto field = [](const json& o, const char* key) -> std::string {
        if (!o.contains(key) || o[key].is_null()) return {};
        if (!o[key].is_string()) throw ProtocolError(std::string("stage field '") + key + "' is not a string");
        return trim(o[key].get<std::string>());
    };

    std::vector<StageAsset> assets;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& o = doc[i];
        if (!o.is_object()) throw ProtocolError("stage entry is not an object");
        StageAsset a;
        if (o.contains("stage")) {
            if (!o["stage"].is_number_integer()) throw ProtocolError("stage index is not an integer");
            a.stage = o["stage"].get<int>();
        } else {
            a.stage = static_cast<int>(i) + 1;
        }
        a.conversion = {a.stage, field(o, "conversion")};
        if (a.conversion.text.empty()) throw ProtocolError("stage " + std::to_string(a.stage) + " has no conversion prompt");
        a.dynamic = {field(o, "positive"), field(o, "action"), field(o, "face"), field(o, "body"), field(o, "style")};
        assets.push_back(std::move(a));
    }
    std::sort(assets.begin(), assets.end(), [](const StageAsset& x, const StageAsset& y) { return x.stage < y.stage; });
    for (std::size_t i = 0; i < assets.size(); ++i)
        if (assets[i].stage != static_cast<int>(i) + 1)
            throw ProtocolError("stage indices are not contiguous from 1");
    return assets;
}

namespace {

void complete_asset(StageAsset& a, const SanitizePolicy& policy) {
    a.conversion.text = scrub(a.conversion.text, policy);
    if (a.conversion.text.empty()) throw ProtocolError("conversion prompt empty after sanitization");
    struct Slot {
        std::string* value;
        const char* name;
        std::string fallback;
    };
    Slot slots[] = {{&a.dynamic.positive, "positive", defaults::positive},
                    {&a.dynamic.action, "action", a.conversion.text},
                    {&a.dynamic.face, "face", defaults::face},
                    {&a.dynamic.body, "body", defaults::body},
                    {&a.dynamic.style, "style", defaults::style}};
    for (Slot& s : slots) {
        *s.value = scrub(*s.value, policy);
        if (s.value->empty()) {
            *s.value = s.fallback;
            a.filled.emplace_back(s.name);
        }
    }
}

}  // namespace

std::vector<StageAsset> decompose_stages(const MotionPrompt& m, int n_stages,
                                         backends::TextGenerator& provider,
                                         const SanitizePolicy& policy) {
    if (n_stages < 1) throw InvalidArgument("n_stages must be >= 1");
    if (policy.max_retries < 0) throw InvalidArgument("max_retries must be >= 0");
    const backends::TextRequest request{decomposition_instruction(n_stages), m.text, n_stages};
    std::string last_error;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        try {
            auto assets = parse_stage_response(provider.generate_text(request));
            if (static_cast<int>(assets.size()) != n_stages)
                throw ProtocolError("expected " + std::to_string(n_stages) + " stages, got " +
                                    std::to_string(assets.size()));
            for (auto& a : assets) complete_asset(a, policy);
            return assets;
        } catch (const TransportError&) {
            throw;
        } catch (const ProtocolError& e) {
            last_error = e.what();
        }
    }
    throw ProtocolError("stage decomposition failed after " + std::to_string(policy.max_retries + 1) +
                        " attempts: " + last_error);
}

json stages_to_json(const std::string& shot_id, const std::vector<StageAsset>& assets) {
    json stages = json::array();
    for (const auto& a : assets) {
        stages.push_back({{"stage", a.stage},
                          {"conversion", a.conversion.text},
                          {"positive", a.dynamic.positive},
                          {"action", a.dynamic.action},
                          {"face", a.dynamic.face},
                          {"body", a.dynamic.body},
                          {"style", a.dynamic.style},
                          {"filled", a.filled}});
    }
    return {{"shot_id", shot_id}, {"stages", stages}};
}

std::vector<StageAsset> stages_from_json(const json& j) {
    const json& arr = j.is_object() ? j.at("stages") : j;
    std::vector<StageAsset> out;
    for (const auto& o : arr) {
        StageAsset a;
        a.stage = o.at("stage").get<int>();
        a.conversion = {a.stage, o.at("conversion").get<std::string>()};
        a.dynamic = {o.value("positive", ""), o.value("action", ""), o.value("face", ""),
                     o.value("body", ""), o.value("style", "")};
        a.filled = o.value("filled", std::vector<std::string>{});
        out.push_back(std::move(a));
    }
    return out;
}

void save_stage_assets(const std::filesystem::path& dir, const std::string& shot_id,
                       const std::vector<StageAsset>& assets) {
    std::filesystem::create_directories(dir / shot_id);
    image_io::write_text(dir / shot_id / "stages.json", stages_to_json(shot_id, assets).dump(2) + "\n");
}

std::vector<StageAsset> load_stage_assets(const std::filesystem::path& file) {
    return stages_from_json(json::parse(image_io::read_text(file)));
}

}  // namespace storyboard::prompts
