#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace drivemop {

// The six-camera rig. Canonical order is the declaration order and is used
// everywhere views are enumerated or sorted.
enum class CameraView {
    Front,
    FrontRight,
    FrontLeft,
    Back,
    BackRight,
    BackLeft,
};

inline constexpr std::array<CameraView, 6> kCanonicalViews = {
    CameraView::Front,     CameraView::FrontRight, CameraView::FrontLeft,
    CameraView::Back,      CameraView::BackRight,  CameraView::BackLeft,
};

std::string_view view_name(CameraView view);        // "FRONT", "BACK_RIGHT", ...
std::string cam_key(CameraView view);               // "CAM_FRONT", ...
// Accepts both bare names and CAM_-prefixed names.
std::optional<CameraView> parse_view(std::string_view name);

// Pixel frame every camera produces; coordinates in object references are
// validated against it at parse time.
inline constexpr int kFrameWidth = 1600;
inline constexpr int kFrameHeight = 900;

// Inline object reference of the form <c{id},{CAM_VIEW},{x},{y}>.
struct ObjectRef {
    int ref_id = 0;
    CameraView view = CameraView::Front;
    int x = 0;
    int y = 0;

    bool operator==(const ObjectRef&) const = default;
};

std::string format_object_ref(const ObjectRef& ref);

// Thrown when a token matches the reference shape but names an unknown camera,
// carries out-of-frame coordinates, or a non-positive id.
class MalformedReference : public std::runtime_error {
public:
    MalformedReference(std::string token, const std::string& reason);
    const std::string& token() const { return token_; }

private:
    std::string token_;
};

// All well-formed references in left-to-right order; throws MalformedReference
// on the first token that matches the shape but violates the invariants.
std::vector<ObjectRef> parse_object_refs(const std::string& text);

// Total variant: malformed tokens are collected instead of thrown.
struct RefScan {
    std::vector<ObjectRef> refs;
    std::vector<std::string> malformed;  // offending substrings
};
RefScan scan_object_refs(const std::string& text);

enum class QuestionCategory {
    PerceptionMCQ,
    PerceptionVQAObject,
    PerceptionVQAScene,
    PredictionMCQ,
    PlanningVQAObject,
    PlanningVQAScene,
    CorruptionMCQ,
};

inline constexpr std::array<QuestionCategory, 7> kAllCategories = {
    QuestionCategory::PerceptionMCQ,     QuestionCategory::PerceptionVQAObject,
    QuestionCategory::PerceptionVQAScene, QuestionCategory::PredictionMCQ,
    QuestionCategory::PlanningVQAObject, QuestionCategory::PlanningVQAScene,
    QuestionCategory::CorruptionMCQ,
};

std::string_view category_name(QuestionCategory kind);   // "Perception-MCQs", ...
std::string_view category_short(QuestionCategory kind);  // "P-MCQ", ... (report columns)
bool is_mcq(QuestionCategory kind);
bool references_objects(QuestionCategory kind);  // Perception/Planning-VQA-Object

// Category strings are resolved through a normalizing alias table: lowercase,
// strip everything but [a-z0-9]. "Perception-VQA" / "Planning-VQA" are legal
// but ambiguous between Object and Scene until the question is scanned for
// object references; classify() in router.hpp finishes the job.
enum class VqaFamily { Perception, Planning };
struct CategoryAlias {
    std::optional<QuestionCategory> exact;
    std::optional<VqaFamily> ambiguous;
    bool unknown() const { return !exact && !ambiguous; }
};
CategoryAlias resolve_category(std::string_view raw);

// One benchmark question. frames maps timestep offset (0, -1, -2) to the six
// per-camera image paths; timestep 0 must be complete.
struct Sample {
    std::string sample_id;
    std::string category_raw;
    std::string question;
    std::map<int, std::map<CameraView, std::string>> frames;
    std::optional<std::string> gold_answer;
    int index = -1;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Loads the JSON array dataset (see README for the schema); samples come back
// in file order with index 0..n-1. Structural problems throw DatasetError
// naming the record ordinal and the missing piece.
std::vector<Sample> load_dataset(const std::filesystem::path& path);

struct ValidationIssue {
    std::string sample_id;
    std::string message;
};

// Empty result iff all Sample invariants hold and every parsed reference's view
// exists in the timestep-0 frames. Issues are data, not failures.
std::vector<ValidationIssue> validate_sample(const Sample& sample);

}  // namespace drivemop
