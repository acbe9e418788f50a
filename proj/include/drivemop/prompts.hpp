#pragma once

#include "drivemop/assembly.hpp"
#include "drivemop/dataset.hpp"
#include "drivemop/router.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace drivemop {

enum class SectionKind { RolePlay, CoordinateRules, ReasoningGuide, FewShot, OutputFormat };

std::string_view section_kind_name(SectionKind kind);

struct PromptSection {
    SectionKind kind;
    std::string text;
};

inline constexpr int kMinFewshot = 2;
inline constexpr int kMaxFewshot = 5;

// One expert prompt template, parsed from prompts/<prompt_id>.txt.
struct PromptTemplate {
    std::string prompt_id;
    std::vector<PromptSection> sections;
    std::string text;          // sections joined in file order
    std::string content_hash;  // fnv1a-64 hex of `text`
    int fewshot_examples = 0;
};

class PromptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Loads and validates all seven templates once; read-only afterwards.
class PromptRegistry {
public:
    static PromptRegistry load_dir(const std::filesystem::path& dir);

    const PromptTemplate& get(QuestionCategory kind) const;
    std::size_t size() const { return templates_.size(); }
    // prompt_id -> content hash, frozen into run_config.json
    std::map<std::string, std::string> hashes() const;

private:
    std::map<QuestionCategory, PromptTemplate> templates_;
};

// Parses one asset file; exposed for tests.
PromptTemplate parse_template_file(const std::filesystem::path& path);
void validate_template(const PromptTemplate& tpl, QuestionCategory kind);

std::string fnv1a_hex(std::string_view data);

// Message parts: either text or an image raster with its caption. The caption
// is emitted as an adjacent text part at encode time so the model sees it.
struct TextPart {
    std::string text;
};
struct ImagePart {
    Image image;  // caption travels inside the Image
};
using ChatPart = std::variant<TextPart, ImagePart>;

enum class TurnRole { System, User, Assistant };

struct ChatTurn {
    TurnRole role;
    std::vector<ChatPart> parts;
};

struct RenderOptions {
    bool inject_grounding_hints = false;  // default off
};

// System-role plans: [System(template), User(images..., question)].
// User-role plans: one User turn [template, images..., question].
// Image order equals payload order; the question is appended verbatim.
std::vector<ChatTurn> render_messages(const PromptTemplate& tpl, const TaskPlan& plan,
                                      const Sample& sample, const VisualPayload& payload,
                                      const RenderOptions& options = {});

}  // namespace drivemop
