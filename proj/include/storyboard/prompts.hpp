#pragma once

#include "storyboard/backends/capabilities.hpp"
#include "storyboard/prompt_types.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace storyboard::prompts {

struct SanitizePolicy {
    std::vector<std::string> banned_terms = default_banned_terms();
    int max_retries = 3;

    static std::vector<std::string> default_banned_terms();
};

struct SanitizeResult {
    bool clean = true;
    std::vector<std::string> violations;
};

/// Appearance = subject, style, scene, composition; motion = subject, scene,
/// action. Comma-joined, empty parts skipped.
std::pair<AppearancePrompt, MotionPrompt> compose_prompts(const RecognitionResult& r,
                                                          const std::string& composition_hint);

/// Case-insensitive substring audit; each matched term listed once, in policy order.
SanitizeResult sanitize(const std::string& text, const SanitizePolicy& policy);

/// Drops comma/period-delimited clauses that contain a banned term.
std::string scrub(const std::string& text, const SanitizePolicy& policy);

/// Issues the four recognition sub-queries against a vision-language provider.
RecognitionResult recognize(const Frame& keyframe, backends::ImageDescriber& describer);

/// Expands a motion prompt under scene-lock constraints with banned-word
/// auditing. Falls back to the original prompt (enhanced=false) when every
/// attempt is rejected; provider transport errors propagate.
MotionPrompt enhance_story(const MotionPrompt& m, backends::TextGenerator& provider,
                           const SanitizePolicy& policy = {});

/// Requests (conversion, dynamic) pairs for stages 1..n_stages.
std::vector<StageAsset> decompose_stages(const MotionPrompt& m, int n_stages,
                                         backends::TextGenerator& provider,
                                         const SanitizePolicy& policy = {});

/// Parses a provider's stage payload; throws ProtocolError when malformed.
std::vector<StageAsset> parse_stage_response(const std::string& text);

std::string enhancement_instruction();
std::string decomposition_instruction(int n_stages);

namespace defaults {
extern const char* const positive;
extern const char* const face;
extern const char* const body;
extern const char* const style;
}  // namespace defaults

nlohmann::json stages_to_json(const std::string& shot_id, const std::vector<StageAsset>& assets);
std::vector<StageAsset> stages_from_json(const nlohmann::json& j);

/// Writes <dir>/<shot_id>/stages.json.
void save_stage_assets(const std::filesystem::path& dir, const std::string& shot_id,
                       const std::vector<StageAsset>& assets);
std::vector<StageAsset> load_stage_assets(const std::filesystem::path& file);

}  // namespace storyboard::prompts
