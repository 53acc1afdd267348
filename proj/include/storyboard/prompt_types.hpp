#pragma once

#include <string>
#include <vector>

namespace storyboard::prompts {

/// Four independent recognition answers for one keyframe.
struct RecognitionResult {
    std::string subject;
    std::string style;
    std::string scene;
    std::string action;
};

struct AppearancePrompt {
    std::string text;
    std::size_t word_count = 0;
};

struct MotionPrompt {
    std::string text;
    bool enhanced = false;
    std::size_t word_count = 0;
};

/// Discrete action state used to derive one keyframe from the anchor.
struct ConversionPrompt {
    int stage = 0;
    std::string text;
};

/// Five-part conditioning for one first-last-frame clip.
struct StructuredDynamicPrompt {
    std::string positive;
    std::string action;
    std::string face;
    std::string body;
    std::string style;

    friend bool operator==(const StructuredDynamicPrompt&, const StructuredDynamicPrompt&) = default;
};

struct StageAsset {
    int stage = 0;
    ConversionPrompt conversion;
    StructuredDynamicPrompt dynamic;
    /// Names of dynamic components replaced by module defaults.
    std::vector<std::string> filled;
};

/// Maximal runs of non-whitespace.
std::size_t count_words(const std::string& text);

AppearancePrompt make_appearance(std::string text);
MotionPrompt make_motion(std::string text, bool enhanced = false);

}  // namespace storyboard::prompts
