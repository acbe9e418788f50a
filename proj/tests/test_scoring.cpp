#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "drivemop/scoring.hpp"
#include "test_support.hpp"

#include <random>

using namespace drivemop;

namespace {

const std::vector<char> kAtoD = {'A', 'B', 'C', 'D'};

ResultRecord mcq_record(const std::string& id, QuestionCategory kind, const std::string& raw) {
    ResultRecord record;
    record.sample_id = id;
    record.kind = kind;
    record.raw_text = raw;
    record.status = RecordStatus::Ok;
    record.answer = "x";
    record.attempts = 1;
    return record;
}

}  // namespace

TEST_CASE("extract_choice: marker path") {
    CHECK(extract_choice("step one... step two... Answer: B", kAtoD) == 'B');
    CHECK(extract_choice("Answer: A\nAnswer: D", kAtoD) == 'D');  // last marker wins
    CHECK(extract_choice("Answer: (C)", kAtoD) == 'C');
    CHECK(extract_choice("Final Answer: B", kAtoD) == 'B');
}

TEST_CASE("extract_choice: standalone fallback") {
    CHECK(extract_choice("The answer is (C).", kAtoD) == 'C');
    CHECK(extract_choice("Options A and B fail; D looks right", kAtoD) == 'D');
    CHECK(extract_choice("b", kAtoD) == 'B');
}

TEST_CASE("extract_choice: none") {
    CHECK_FALSE(extract_choice("I cannot tell.", kAtoD));
    CHECK_FALSE(extract_choice("", kAtoD));
    CHECK_FALSE(extract_choice("Answer: Z with nothing usable", kAtoD));
}

TEST_CASE("extract_final_answer") {
    const std::string fig_style =
        "Reasoning: Object in CAM_BACK_RIGHT => behind & right of ego. Crop: dark sedan in "
        "parking area. Temporal check: position vs. fence unchanged across T=0/T-1/T-2 => "
        "parked. Self-check: BACK constraint satisfied.\n"
        "Final Answer: The object is a dark-colored sedan confirmed parked behind the ego "
        "vehicle.";
    CHECK(extract_final_answer(fig_style) ==
          "The object is a dark-colored sedan confirmed parked behind the ego vehicle.");
    CHECK(extract_final_answer("no marker here") == "no marker here");
    CHECK(extract_final_answer("Final Answer: first\nmore\nFinal Answer: second") == "second");
}

TEST_CASE("mcq accuracy: exact half-up at two decimals") {
    CHECK(mcq_accuracy_pct(4, 4) == doctest::Approx(100.00));
    CHECK(mcq_accuracy_pct(2, 3) == doctest::Approx(66.67));
    CHECK(mcq_accuracy_pct(1, 3) == doctest::Approx(33.33));
    CHECK(mcq_accuracy_pct(0, 7) == doctest::Approx(0.0));
    // exact .005 boundary: 100*1/800 = 0.125 -> 0.13
    CHECK(mcq_accuracy_pct(1, 800) == doctest::Approx(0.13));
    CHECK_THROWS_AS(mcq_accuracy_pct(1, 0), ScoringError);
    CHECK_THROWS_AS(mcq_accuracy_pct(5, 4), ScoringError);
}

TEST_CASE("rounding property at .005 boundaries") {
    // denominators divisible by 8 land exactly on thousandths; independent
    // integer oracle: round half-up on the third decimal
    for (int correct = 1; correct <= 800; correct += 7) {
        const long long thousandths = 100000LL * correct / 800;  // exact, 800 | 100000*c
        long long hundredths = thousandths / 10;
        if (thousandths % 10 >= 5) hundredths += 1;
        CHECK(mcq_accuracy_pct(correct, 800) ==
              doctest::Approx(static_cast<double>(hundredths) / 100.0));
    }
}

TEST_CASE("score_mcq: counts per kind, none counted incorrect") {
    std::map<std::string, char> gold = {{"a", 'B'}, {"b", 'B'}, {"c", 'B'}, {"d", 'A'}};
    std::vector<ResultRecord> records;
    records.push_back(mcq_record("a", QuestionCategory::PerceptionMCQ, "Answer: B"));
    records.push_back(mcq_record("b", QuestionCategory::PerceptionMCQ, "I cannot tell."));
    records.push_back(mcq_record("c", QuestionCategory::PerceptionMCQ, "The answer is (B)."));
    records.push_back(mcq_record("d", QuestionCategory::PredictionMCQ, "Answer: C"));
    records.push_back(mcq_record("e", QuestionCategory::PlanningVQAScene, "Final Answer: stay"));

    const auto scores = score_mcq(records, gold);
    REQUIRE(scores.size() == 3);

    CHECK(scores[0].kind == QuestionCategory::PerceptionMCQ);
    CHECK(scores[0].n == 3);
    CHECK(scores[0].correct == 2);
    CHECK(scores[0].accuracy == doctest::Approx(66.67));

    CHECK(scores[1].kind == QuestionCategory::PredictionMCQ);
    CHECK(scores[1].correct == 0);
    CHECK(scores[1].accuracy == doctest::Approx(0.0));

    CHECK(scores[2].kind == QuestionCategory::PlanningVQAScene);
    CHECK(scores[2].n == 1);
    CHECK_FALSE(scores[2].correct);
    CHECK_FALSE(scores[2].accuracy);
}

TEST_CASE("score_mcq: missing gold for a scored record throws") {
    std::vector<ResultRecord> records;
    records.push_back(mcq_record("a", QuestionCategory::PerceptionMCQ, "Answer: B"));
    CHECK_THROWS_AS(score_mcq(records, {}), ScoringError);
}

TEST_CASE("score_mcq agrees with a brute-force recount") {
    std::mt19937 rng(1234);
    std::uniform_int_distribution<int> kind_dist(0, 6);
    std::uniform_int_distribution<int> letter_dist(0, 3);
    std::uniform_int_distribution<int> style_dist(0, 3);

    std::vector<ResultRecord> records;
    std::map<std::string, char> gold;
    std::map<QuestionCategory, std::pair<int, int>> oracle;  // n, correct

    for (int i = 0; i < 1000; ++i) {
        const QuestionCategory kind = kAllCategories[static_cast<std::size_t>(kind_dist(rng))];
        const char letter = static_cast<char>('A' + letter_dist(rng));
        const std::string id = "r" + std::to_string(i);
        std::string raw;
        std::optional<char> effective;
        switch (style_dist(rng)) {
            case 0:
                raw = std::string("Answer: ") + letter;
                effective = letter;
                break;
            case 1:
                raw = std::string("the best option is (") + letter + ").";
                effective = letter;
                break;
            case 2:
                raw = "no letter to be found";
                effective = std::nullopt;
                break;
            default:
                raw = std::string("Answer: ") + letter + "\nwait, no.\nAnswer: " +
                      static_cast<char>('A' + letter_dist(rng));
                effective = extract_choice(raw, kAtoD);  // last marker decides
                break;
        }
        records.push_back(mcq_record(id, kind, raw));
        const char g = static_cast<char>('A' + letter_dist(rng));
        gold[id] = g;

        auto& [n, correct] = oracle[kind];
        n += 1;
        if (is_mcq(kind) && effective && *effective == g) correct += 1;
    }

    const auto scores = score_mcq(records, gold);
    for (const CategoryScore& score : scores) {
        const auto& [n, correct] = oracle.at(score.kind);
        CHECK(score.n == n);
        if (is_mcq(score.kind)) {
            CHECK(score.correct == correct);
            // independent recount of the percentage
            const long long hundredths = (20000LL * correct + n) / (2LL * n);
            CHECK(score.accuracy == doctest::Approx(static_cast<double>(hundredths) / 100.0));
        } else {
            CHECK_FALSE(score.correct);
        }
    }
}

namespace {

std::vector<CategoryScore> fixed_rows(const std::array<double, 7>& values,
                                      std::optional<int> count) {
    std::vector<CategoryScore> rows;
    for (std::size_t i = 0; i < 7; ++i) {
        CategoryScore row;
        row.kind = kReportColumns[i];
        row.n = count;
        row.accuracy = values[i];
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("aggregate: equal counts make macro and weighted coincide") {
    // final ablation row, column order P-MCQ, P-Obj, P-Scene, Pred-MCQ,
    // Plan-Scene, Plan-Obj, Corr-MCQ
    const std::array<double, 7> final_row = {100.00, 49.97, 64.51, 95.47, 64.20, 53.10, 100.00};
    const RunReport report = aggregate(fixed_rows(final_row, 100), "final");
    REQUIRE(report.macro_avg);
    REQUIRE(report.weighted_avg);
    CHECK(*report.macro_avg == doctest::Approx(75.32).epsilon(0.0001));
    CHECK(*report.weighted_avg == doctest::Approx(75.32).epsilon(0.0001));
}

TEST_CASE("aggregate: single category") {
    std::vector<CategoryScore> rows;
    CategoryScore row;
    row.kind = QuestionCategory::PerceptionMCQ;
    row.n = 10;
    row.correct = 7;
    row.accuracy = 70.0;
    rows.push_back(row);
    const RunReport report = aggregate(rows, "one");
    CHECK(*report.macro_avg == doctest::Approx(70.0));
    CHECK(*report.weighted_avg == doctest::Approx(70.0));
}

TEST_CASE("aggregate: a missing count disables the weighted average") {
    const std::array<double, 7> values = {100.00, 49.97, 64.51, 95.47, 64.20, 53.10, 100.00};
    auto rows = fixed_rows(values, 100);
    rows[2].n.reset();
    const RunReport report = aggregate(rows, "partial");
    CHECK(report.macro_avg);
    CHECK_FALSE(report.weighted_avg);
}

TEST_CASE("aggregate: weighting uses the counts") {
    std::vector<CategoryScore> rows(2);
    rows[0].kind = QuestionCategory::PerceptionMCQ;
    rows[0].n = 90;
    rows[0].accuracy = 100.0;
    rows[1].kind = QuestionCategory::PredictionMCQ;
    rows[1].n = 10;
    rows[1].accuracy = 0.0;
    const RunReport report = aggregate(rows, "w");
    CHECK(*report.macro_avg == doctest::Approx(50.0));
    CHECK(*report.weighted_avg == doctest::Approx(90.0));
}

TEST_CASE("render_report: ablation-table column order and two decimals") {
    const std::array<double, 7> baseline = {93.88, 37.95, 62.20, 67.48, 61.93, 48.00, 97.12};
    const RunReport report = aggregate(fixed_rows(baseline, std::nullopt), "baseline");
    const std::string markdown = render_report(report, ReportFormat::Markdown);

    CHECK(markdown.find("| Configuration | P-MCQ | P-Obj | P-Scene | Pred-MCQ | Plan-Scene | "
                        "Plan-Obj | Corr-MCQ | Avg | Δ |") != std::string::npos);
    CHECK(markdown.find("| baseline | 93.88 | 37.95 | 62.20 | 67.48 | 61.93 | 48.00 | 97.12 |") !=
          std::string::npos);
    // headline falls back to the macro average when counts are unknown
    CHECK(markdown.find("66.94") != std::string::npos);
}

TEST_CASE("render_report: csv emits header plus one line per report") {
    const std::array<double, 7> values = {1, 2, 3, 4, 5, 6, 7};
    const RunReport a = aggregate(fixed_rows(values, 10), "a");
    const RunReport b = aggregate(fixed_rows(values, 10), "b");
    const std::string csv = render_report({a, b}, ReportFormat::Csv);
    const std::size_t lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 3);  // header + 2 rows
    CHECK(csv.rfind("Configuration,P-MCQ,", 0) == 0);
    CHECK(csv.find("a,1.00,2.00,") != std::string::npos);
}

TEST_CASE("render_report: delta of identical consecutive rows is +0.00") {
    const std::array<double, 7> values = {50, 50, 50, 50, 50, 50, 50};
    const RunReport a = aggregate(fixed_rows(values, 10), "first");
    const RunReport b = aggregate(fixed_rows(values, 10), "second");
    const std::string markdown = render_report({a, b}, ReportFormat::Markdown);
    CHECK(markdown.find("+0.00") != std::string::npos);
    // first row has no baseline
    CHECK(markdown.find("| first | 50.00") != std::string::npos);
}

TEST_CASE("render_report is byte-stable") {
    const std::array<double, 7> values = {93.88, 37.95, 62.20, 67.48, 61.93, 48.00, 97.12};
    const RunReport report = aggregate(fixed_rows(values, 100), "r");
    CHECK(render_report(report, ReportFormat::Markdown) ==
          render_report(report, ReportFormat::Markdown));
    CHECK(render_report(report, ReportFormat::Csv) == render_report(report, ReportFormat::Csv));
}

TEST_CASE("load_gold") {
    testsup::TempDir tmp;
    const auto path = tmp.path() / "gold.json";
    std::ofstream(path) << R"({"s1": "B", "s2": "a"})";
    const auto gold = load_gold(path);
    CHECK(gold.at("s1") == 'B');
    CHECK(gold.at("s2") == 'A');

    std::ofstream(tmp.path() / "bad.json") << R"({"s1": "BB"})";
    CHECK_THROWS_AS(load_gold(tmp.path() / "bad.json"), ScoringError);
    CHECK_THROWS_AS(load_gold(tmp.path() / "missing.json"), ScoringError);
}
