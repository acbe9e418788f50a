#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "drivemop/router.hpp"

#include <set>

using namespace drivemop;

namespace {

Sample sample_of(const std::string& category, const std::string& question) {
    Sample s;
    s.sample_id = "t";
    s.category_raw = category;
    s.question = question;
    for (CameraView view : kCanonicalViews) s.frames[0][view] = "x.png";
    return s;
}

}  // namespace

TEST_CASE("classify: exact category strings") {
    CHECK(classify(sample_of("Prediction-MCQs", "q")) == QuestionCategory::PredictionMCQ);
    CHECK(classify(sample_of("Perception-MCQs", "q")) == QuestionCategory::PerceptionMCQ);
    CHECK(classify(sample_of("Corruption-MCQs", "q")) == QuestionCategory::CorruptionMCQ);
    CHECK(classify(sample_of("Perception-VQA-Object", "no refs here")) ==
          QuestionCategory::PerceptionVQAObject);
}

TEST_CASE("classify: ambiguous VQA resolved by object references") {
    CHECK(classify(sample_of("Planning-VQA", "Check <c4,CAM_FRONT,800,450> now")) ==
          QuestionCategory::PlanningVQAObject);
    CHECK(classify(sample_of("Planning-VQA", "Is the scene safe?")) ==
          QuestionCategory::PlanningVQAScene);
    CHECK(classify(sample_of("Perception-VQA", "What is <c1,CAM_BACK,5,5>?")) ==
          QuestionCategory::PerceptionVQAObject);
    CHECK(classify(sample_of("Perception-VQA", "Describe the scene")) ==
          QuestionCategory::PerceptionVQAScene);
}

TEST_CASE("classify: unknown category fails loudly") {
    try {
        classify(sample_of("Weather-Check", "q"));
        FAIL("expected ClassificationError");
    } catch (const ClassificationError& e) {
        CHECK(e.category_raw() == "Weather-Check");
    }
}

TEST_CASE("classify is deterministic") {
    const Sample s = sample_of("Planning-VQA", "See <c4,CAM_FRONT,800,450>");
    for (int i = 0; i < 10; ++i) CHECK(classify(s) == QuestionCategory::PlanningVQAObject);
}

TEST_CASE("plan table, all seven kinds") {
    const DecodingParams precise{0.2, 0.2};
    const DecodingParams creative{1.5, 0.9};

    const TaskPlan p_mcq = plan(QuestionCategory::PerceptionMCQ);
    CHECK(p_mcq.history == HistoryMode::Grid);
    CHECK(p_mcq.view_policy == ViewPolicy::AllSix);
    CHECK(p_mcq.decoding == precise);
    CHECK(p_mcq.prompt_role == PromptRole::System);
    CHECK_FALSE(p_mcq.use_marker);
    CHECK_FALSE(p_mcq.use_crop);
    CHECK_FALSE(p_mcq.prepend_reference_image);

    const TaskPlan p_obj = plan(QuestionCategory::PerceptionVQAObject);
    CHECK(p_obj.history == HistoryMode::Referenced);
    CHECK(p_obj.view_policy == ViewPolicy::ReferencedOnly);
    CHECK(p_obj.decoding == precise);
    CHECK(p_obj.prompt_role == PromptRole::System);
    CHECK(p_obj.use_marker);
    CHECK(p_obj.use_crop);
    CHECK_FALSE(p_obj.prepend_reference_image);

    const TaskPlan p_scene = plan(QuestionCategory::PerceptionVQAScene);
    CHECK(p_scene.history == HistoryMode::Grid);
    CHECK(p_scene.view_policy == ViewPolicy::AllSix);
    CHECK(p_scene.decoding == creative);
    CHECK(p_scene.prompt_role == PromptRole::System);
    CHECK_FALSE(p_scene.use_marker);
    CHECK_FALSE(p_scene.use_crop);

    const TaskPlan pred = plan(QuestionCategory::PredictionMCQ);
    CHECK(pred.history == HistoryMode::FrontOnly);
    CHECK(pred.view_policy == ViewPolicy::AllSix);
    CHECK(pred.decoding == precise);
    CHECK(pred.prompt_role == PromptRole::System);

    const TaskPlan plan_obj = plan(QuestionCategory::PlanningVQAObject);
    CHECK(plan_obj.history == HistoryMode::Referenced);
    CHECK(plan_obj.view_policy == ViewPolicy::ReferencedOnly);
    CHECK(plan_obj.decoding == precise);
    CHECK(plan_obj.prompt_role == PromptRole::User);
    CHECK(plan_obj.use_marker);
    CHECK(plan_obj.use_crop);

    const TaskPlan plan_scene = plan(QuestionCategory::PlanningVQAScene);
    CHECK(plan_scene.history == HistoryMode::Grid);
    CHECK(plan_scene.view_policy == ViewPolicy::AllSix);
    CHECK(plan_scene.decoding == creative);
    CHECK(plan_scene.prompt_role == PromptRole::System);

    const TaskPlan corr = plan(QuestionCategory::CorruptionMCQ);
    CHECK(corr.history == HistoryMode::NoHistory);
    CHECK(corr.view_policy == ViewPolicy::AllSix);
    CHECK(corr.decoding == precise);
    CHECK(corr.prompt_role == PromptRole::System);
    CHECK(corr.prepend_reference_image);
}

TEST_CASE("plan invariants hold for every kind") {
    std::set<std::string> prompt_ids;
    for (QuestionCategory kind : kAllCategories) {
        const TaskPlan p = plan(kind);
        CHECK(p.kind == kind);
        CHECK(p.prepend_reference_image == (kind == QuestionCategory::CorruptionMCQ));
        if (kind == QuestionCategory::CorruptionMCQ) CHECK(p.history == HistoryMode::NoHistory);
        CHECK((p.prompt_role == PromptRole::User) ==
              (kind == QuestionCategory::PlanningVQAObject));
        CHECK(p.use_crop == references_objects(kind));
        CHECK(p.use_marker == references_objects(kind));
        CHECK_NOTHROW(check_decoding(p.decoding));
        prompt_ids.insert(p.prompt_id);
    }
    CHECK(prompt_ids.size() == 7);
}

TEST_CASE("decoding params validation") {
    CHECK_THROWS_AS(check_decoding({-0.1, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(check_decoding({2.1, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(check_decoding({0.5, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(check_decoding({0.5, 1.1}), std::invalid_argument);
    CHECK_NOTHROW(check_decoding({0.0, 1.0}));
    CHECK_NOTHROW(check_decoding({2.0, 0.001}));
}

TEST_CASE("explain_plan mentions the load-bearing facts") {
    const std::string text = explain_plan(QuestionCategory::PlanningVQAObject);
    CHECK(text.find("referenced") != std::string::npos);
    CHECK(text.find("user") != std::string::npos);
    CHECK(text.find("0.2") != std::string::npos);
}
