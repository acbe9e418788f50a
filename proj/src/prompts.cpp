#include "drivemop/prompts.hpp"

#include "drivemop/spatial.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace drivemop {

std::string_view section_kind_name(SectionKind kind) {
    switch (kind) {
        case SectionKind::RolePlay: return "RolePlay";
        case SectionKind::CoordinateRules: return "CoordinateRules";
        case SectionKind::ReasoningGuide: return "ReasoningGuide";
        case SectionKind::FewShot: return "FewShot";
        case SectionKind::OutputFormat: return "OutputFormat";
    }
    return "RolePlay";
}

namespace {

std::optional<SectionKind> parse_section_kind(std::string_view name) {
    for (SectionKind kind : {SectionKind::RolePlay, SectionKind::CoordinateRules,
                             SectionKind::ReasoningGuide, SectionKind::FewShot,
                             SectionKind::OutputFormat}) {
        if (name == section_kind_name(kind)) return kind;
    }
    return std::nullopt;
}

std::string trim_copy(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

int count_fewshot_examples(const PromptTemplate& tpl) {
    int count = 0;
    for (const PromptSection& section : tpl.sections) {
        if (section.kind != SectionKind::FewShot) continue;
        std::istringstream lines(section.text);
        std::string line;
        while (std::getline(lines, line)) {
            if (trim_copy(line).rfind("Question:", 0) == 0) ++count;
        }
    }
    return count;
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << hash;
    return os.str();
}

PromptTemplate parse_template_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PromptError("cannot open prompt template " + path.string());

    PromptTemplate tpl;
    tpl.prompt_id = path.stem().string();

    static constexpr std::string_view kMarker = "## SECTION:";
    std::optional<SectionKind> current;
    std::string body;
    auto flush = [&]() {
        if (!current) return;
        tpl.sections.push_back({*current, trim_copy(body)});
        body.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind(kMarker, 0) == 0) {
            flush();
            const std::string name = trim_copy(line.substr(kMarker.size()));
            current = parse_section_kind(name);
            if (!current) {
                throw PromptError(path.string() + ": unknown section kind \"" + name + "\"");
            }
            continue;
        }
        if (!current) continue;  // header comments before the first marker
        body += line;
        body += '\n';
    }
    flush();

    if (tpl.sections.empty()) {
        throw PromptError(path.string() + ": no sections found");
    }

    std::string text;
    for (const PromptSection& section : tpl.sections) {
        if (!text.empty()) text += "\n\n";
        text += section.text;
    }
    tpl.text = std::move(text);
    tpl.content_hash = fnv1a_hex(tpl.text);
    tpl.fewshot_examples = count_fewshot_examples(tpl);
    return tpl;
}

void validate_template(const PromptTemplate& tpl, QuestionCategory kind) {
    auto has_section = [&](SectionKind k) {
        return std::any_of(tpl.sections.begin(), tpl.sections.end(),
                           [&](const PromptSection& s) { return s.kind == k; });
    };
    if (!has_section(SectionKind::RolePlay)) {
        throw PromptError(tpl.prompt_id + ": missing RolePlay section");
    }
    if (!has_section(SectionKind::CoordinateRules)) {
        throw PromptError(tpl.prompt_id + ": missing CoordinateRules section");
    }
    if (has_section(SectionKind::FewShot)) {
        if (tpl.fewshot_examples < kMinFewshot || tpl.fewshot_examples > kMaxFewshot) {
            throw PromptError(tpl.prompt_id + ": " + std::to_string(tpl.fewshot_examples) +
                              " few-shot examples, expected " + std::to_string(kMinFewshot) +
                              ".." + std::to_string(kMaxFewshot));
        }
    }
    if (kind == QuestionCategory::PredictionMCQ) {
        if (tpl.text.find("Branch A") == std::string::npos ||
            tpl.text.find("Branch B") == std::string::npos) {
            throw PromptError(tpl.prompt_id + ": prediction template lacks the dual-branch block");
        }
    }
    if (references_objects(kind)) {
        for (const char* step : {"static properties", "dynamic state", "Synthesize", "Self-check"}) {
            if (tpl.text.find(step) == std::string::npos) {
                throw PromptError(tpl.prompt_id + ": object template lacks reasoning step \"" +
                                  std::string(step) + "\"");
            }
        }
    }
}

PromptRegistry PromptRegistry::load_dir(const std::filesystem::path& dir) {
    PromptRegistry registry;
    for (QuestionCategory kind : kAllCategories) {
        const std::string prompt_id = plan(kind).prompt_id;
        const std::filesystem::path path = dir / (prompt_id + ".txt");
        PromptTemplate tpl = parse_template_file(path);
        validate_template(tpl, kind);
        registry.templates_.emplace(kind, std::move(tpl));
    }
    return registry;
}

const PromptTemplate& PromptRegistry::get(QuestionCategory kind) const {
    auto it = templates_.find(kind);
    if (it == templates_.end()) {
        throw PromptError("no template registered for " + std::string(category_name(kind)));
    }
    return it->second;
}

std::map<std::string, std::string> PromptRegistry::hashes() const {
    std::map<std::string, std::string> out;
    for (const auto& [kind, tpl] : templates_) out[tpl.prompt_id] = tpl.content_hash;
    return out;
}

std::vector<ChatTurn> render_messages(const PromptTemplate& tpl, const TaskPlan& plan,
                                      const Sample& sample, const VisualPayload& payload,
                                      const RenderOptions& options) {
    // every kind in the plan table sends visual evidence
    if (payload.items.empty()) {
        throw PromptError(sample.sample_id + ": empty visual payload for " +
                          std::string(category_name(plan.kind)));
    }

    std::vector<ChatPart> user_parts;
    if (plan.prompt_role == PromptRole::User) {
        user_parts.push_back(TextPart{tpl.text});
    }
    for (const Image& item : payload.items) {
        user_parts.push_back(ImagePart{item});
    }
    user_parts.push_back(TextPart{sample.question});
    if (options.inject_grounding_hints) {
        std::string hints;
        for (const ObjectRef& ref : parse_object_refs(sample.question)) {
            if (!hints.empty()) hints += ' ';
            hints += grounding_hint(ref);
        }
        if (!hints.empty()) user_parts.push_back(TextPart{hints});
    }

    std::vector<ChatTurn> turns;
    if (plan.prompt_role == PromptRole::System) {
        turns.push_back({TurnRole::System, {TextPart{tpl.text}}});
    }
    turns.push_back({TurnRole::User, std::move(user_parts)});
    return turns;
}

}  // namespace drivemop
