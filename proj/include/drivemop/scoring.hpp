#pragma once

#include "drivemop/dataset.hpp"
#include "drivemop/runner.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drivemop {

// Letter after the last "Answer:" marker when it is one of the options;
// otherwise the last standalone option letter anywhere in the text; otherwise
// nothing (scored as incorrect).
std::optional<char> extract_choice(const std::string& text, const std::vector<char>& options);

// Substring after the last "Final Answer:" marker, trimmed; the whole text
// when the marker is absent.
std::string extract_final_answer(const std::string& text);

// Exact half-up percentage at 2 decimals, computed in integer arithmetic.
double mcq_accuracy_pct(int correct, int n);
double round2_half_up(double v);
std::string format2(double v);

struct CategoryScore {
    QuestionCategory kind;
    std::optional<int> n;            // sample count; absent for table fixtures
    std::optional<int> correct;      // null for non-MCQ kinds
    std::optional<double> accuracy;  // percentage, already rounded
};

class ScoringError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Per-kind tallies over a completed store. MCQ kinds compare the extracted
// choice against gold; non-MCQ kinds report n with null correct. A scored MCQ
// record without a gold label throws.
std::vector<CategoryScore> score_mcq(const std::vector<ResultRecord>& records,
                                     const std::map<std::string, char>& gold);

struct RunReport {
    std::string label;
    std::vector<CategoryScore> rows;
    std::optional<double> macro_avg;     // mean of category accuracies
    std::optional<double> weighted_avg;  // sample-count weighted; absent without counts
};

RunReport aggregate(std::vector<CategoryScore> rows, std::string label = "run");

enum class ReportFormat { Markdown, Csv };

// Column order mirrors the ablation tables:
// P-MCQ, P-Obj, P-Scene, Pred-MCQ, Plan-Scene, Plan-Obj, Corr-MCQ, Avg, Delta.
inline constexpr std::array<QuestionCategory, 7> kReportColumns = {
    QuestionCategory::PerceptionMCQ,      QuestionCategory::PerceptionVQAObject,
    QuestionCategory::PerceptionVQAScene, QuestionCategory::PredictionMCQ,
    QuestionCategory::PlanningVQAScene,   QuestionCategory::PlanningVQAObject,
    QuestionCategory::CorruptionMCQ,
};

// One line per report; the Avg cell is the weighted average when counts exist,
// the macro average otherwise; Delta is the row-over-row Avg difference.
std::string render_report(const std::vector<RunReport>& reports, ReportFormat format);
std::string render_report(const RunReport& report, ReportFormat format);

std::map<std::string, char> load_gold(const std::filesystem::path& path);

}  // namespace drivemop
