#pragma once

#include "drivemop/dataset.hpp"

#include <stdexcept>
#include <string>

namespace drivemop {

// Which historical-frame images accompany the current frame.
enum class HistoryMode { NoHistory, Grid, FrontOnly, Referenced };

enum class ViewPolicy { AllSix, ReferencedOnly };
enum class PromptRole { System, User };

struct DecodingParams {
    double temperature = 0.2;  // [0, 2]
    double top_p = 0.2;        // (0, 1]

    bool operator==(const DecodingParams&) const = default;
};

// Throws std::invalid_argument when either parameter is out of range.
void check_decoding(const DecodingParams& params);

// The complete per-task processing plan the router emits.
struct TaskPlan {
    QuestionCategory kind;
    std::string prompt_id;
    HistoryMode history;
    ViewPolicy view_policy;
    DecodingParams decoding;
    PromptRole prompt_role;
    bool use_marker = false;
    bool use_crop = false;
    bool prepend_reference_image = false;
};

class ClassificationError : public std::runtime_error {
public:
    explicit ClassificationError(const std::string& category_raw);
    const std::string& category_raw() const { return raw_; }

private:
    std::string raw_;
};

// Resolves category_raw through the alias table; ambiguous VQA strings pick
// Object when the question carries at least one object reference, Scene
// otherwise. Unknown strings and malformed references throw.
QuestionCategory classify(const Sample& sample);

// Fixed table, one plan per kind. Total and pure.
TaskPlan plan(QuestionCategory kind);

std::string_view history_mode_name(HistoryMode mode);
std::string_view view_policy_name(ViewPolicy policy);
std::string_view prompt_role_name(PromptRole role);

// Human-readable plan-table entry for `drive-mop plan --explain`.
std::string explain_plan(QuestionCategory kind);

}  // namespace drivemop
