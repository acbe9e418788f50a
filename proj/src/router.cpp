#include "drivemop/router.hpp"

#include <sstream>
#include <stdexcept>

namespace drivemop {

void check_decoding(const DecodingParams& params) {
    if (params.temperature < 0.0 || params.temperature > 2.0) {
        throw std::invalid_argument("temperature " + std::to_string(params.temperature) +
                                    " outside [0, 2]");
    }
    if (params.top_p <= 0.0 || params.top_p > 1.0) {
        throw std::invalid_argument("top_p " + std::to_string(params.top_p) + " outside (0, 1]");
    }
}

ClassificationError::ClassificationError(const std::string& category_raw)
    : std::runtime_error("unknown question category \"" + category_raw + "\""),
      raw_(category_raw) {}

QuestionCategory classify(const Sample& sample) {
    const CategoryAlias alias = resolve_category(sample.category_raw);
    if (alias.exact) return *alias.exact;
    if (alias.ambiguous) {
        const bool has_refs = !parse_object_refs(sample.question).empty();
        if (*alias.ambiguous == VqaFamily::Perception) {
            return has_refs ? QuestionCategory::PerceptionVQAObject
                            : QuestionCategory::PerceptionVQAScene;
        }
        return has_refs ? QuestionCategory::PlanningVQAObject
                        : QuestionCategory::PlanningVQAScene;
    }
    throw ClassificationError(sample.category_raw);
}

namespace {

constexpr DecodingParams kPrecise{0.2, 0.2};   // MCQ and object-level answers
constexpr DecodingParams kCreative{1.5, 0.9};  // scene-level descriptions

}  // namespace

TaskPlan plan(QuestionCategory kind) {
    switch (kind) {
        case QuestionCategory::PerceptionMCQ:
            return {kind, "perception_mcq", HistoryMode::Grid, ViewPolicy::AllSix,
                    kPrecise, PromptRole::System, false, false, false};
        case QuestionCategory::PerceptionVQAObject:
            return {kind, "perception_vqa_object", HistoryMode::Referenced,
                    ViewPolicy::ReferencedOnly, kPrecise, PromptRole::System, true, true, false};
        case QuestionCategory::PerceptionVQAScene:
            return {kind, "perception_vqa_scene", HistoryMode::Grid, ViewPolicy::AllSix,
                    kCreative, PromptRole::System, false, false, false};
        case QuestionCategory::PredictionMCQ:
            return {kind, "prediction_mcq", HistoryMode::FrontOnly, ViewPolicy::AllSix,
                    kPrecise, PromptRole::System, false, false, false};
        case QuestionCategory::PlanningVQAObject:
            return {kind, "planning_vqa_object", HistoryMode::Referenced,
                    ViewPolicy::ReferencedOnly, kPrecise, PromptRole::User, true, true, false};
        case QuestionCategory::PlanningVQAScene:
            return {kind, "planning_vqa_scene", HistoryMode::Grid, ViewPolicy::AllSix,
                    kCreative, PromptRole::System, false, false, false};
        case QuestionCategory::CorruptionMCQ:
            return {kind, "corruption_mcq", HistoryMode::NoHistory, ViewPolicy::AllSix,
                    kPrecise, PromptRole::System, false, false, true};
    }
    throw std::logic_error("unreachable: invalid QuestionCategory");
}

std::string_view history_mode_name(HistoryMode mode) {
    switch (mode) {
        case HistoryMode::NoHistory: return "no-history";
        case HistoryMode::Grid: return "grid";
        case HistoryMode::FrontOnly: return "front-only";
        case HistoryMode::Referenced: return "referenced";
    }
    return "no-history";
}

std::string_view view_policy_name(ViewPolicy policy) {
    return policy == ViewPolicy::AllSix ? "all-six" : "referenced-only";
}

std::string_view prompt_role_name(PromptRole role) {
    return role == PromptRole::System ? "system" : "user";
}

std::string explain_plan(QuestionCategory kind) {
    const TaskPlan p = plan(kind);
    std::ostringstream os;
    os << category_name(kind) << ":\n"
       << "  prompt:        " << p.prompt_id << "\n"
       << "  history mode:  " << history_mode_name(p.history) << "\n"
       << "  views:         " << view_policy_name(p.view_policy) << "\n"
       << "  decoding:      temperature=" << p.decoding.temperature
       << ", top_p=" << p.decoding.top_p << "\n"
       << "  prompt role:   " << prompt_role_name(p.prompt_role) << "\n"
       << "  marker:        " << (p.use_marker ? "yes" : "no") << "\n"
       << "  crop:          " << (p.use_crop ? "yes" : "no") << "\n"
       << "  reference img: " << (p.prepend_reference_image ? "yes" : "no") << "\n";
    return os.str();
}

}  // namespace drivemop
