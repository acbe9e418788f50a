#include "drivemop/dataset.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace drivemop {

namespace {

const std::regex kRefPattern{R"(<c(\d+),([A-Z_]+),(\d+),(\d+)>)"};

std::string normalize_category(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

std::string_view view_name(CameraView view) {
    switch (view) {
        case CameraView::Front: return "FRONT";
        case CameraView::FrontRight: return "FRONT_RIGHT";
        case CameraView::FrontLeft: return "FRONT_LEFT";
        case CameraView::Back: return "BACK";
        case CameraView::BackRight: return "BACK_RIGHT";
        case CameraView::BackLeft: return "BACK_LEFT";
    }
    return "FRONT";
}

std::string cam_key(CameraView view) {
    return "CAM_" + std::string(view_name(view));
}

std::optional<CameraView> parse_view(std::string_view name) {
    if (name.rfind("CAM_", 0) == 0) name.remove_prefix(4);
    for (CameraView view : kCanonicalViews) {
        if (name == view_name(view)) return view;
    }
    return std::nullopt;
}

std::string format_object_ref(const ObjectRef& ref) {
    std::ostringstream os;
    os << "<c" << ref.ref_id << ',' << cam_key(ref.view) << ',' << ref.x << ',' << ref.y << '>';
    return os.str();
}

MalformedReference::MalformedReference(std::string token, const std::string& reason)
    : std::runtime_error("malformed object reference " + token + ": " + reason),
      token_(std::move(token)) {}

namespace {

// Shared scanner; `sink` decides whether a malformed token throws or is
// collected.
template <typename RefSink, typename BadSink>
void scan_refs(const std::string& text, RefSink&& on_ref, BadSink&& on_bad) {
    auto begin = std::sregex_iterator(text.begin(), text.end(), kRefPattern);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        const std::string token = m.str(0);
        long id = 0;
        long x = 0;
        long y = 0;
        try {
            id = std::stol(m.str(1));
            x = std::stol(m.str(3));
            y = std::stol(m.str(4));
        } catch (const std::exception&) {
            on_bad(token, "numeric field out of range");
            continue;
        }
        if (id < 1) {
            on_bad(token, "object id must be positive");
            continue;
        }
        auto view = parse_view(m.str(2));
        if (!view) {
            on_bad(token, "unknown camera name " + m.str(2));
            continue;
        }
        if (x < 0 || x >= kFrameWidth || y < 0 || y >= kFrameHeight) {
            on_bad(token, "coordinates outside the 1600x900 frame");
            continue;
        }
        on_ref(ObjectRef{static_cast<int>(id), *view, static_cast<int>(x), static_cast<int>(y)});
    }
}

}  // namespace

std::vector<ObjectRef> parse_object_refs(const std::string& text) {
    std::vector<ObjectRef> refs;
    scan_refs(
        text, [&](ObjectRef ref) { refs.push_back(ref); },
        [](const std::string& token, const std::string& reason) -> void {
            throw MalformedReference(token, reason);
        });
    return refs;
}

RefScan scan_object_refs(const std::string& text) {
    RefScan scan;
    scan_refs(
        text, [&](ObjectRef ref) { scan.refs.push_back(ref); },
        [&](const std::string& token, const std::string&) { scan.malformed.push_back(token); });
    return scan;
}

std::string_view category_name(QuestionCategory kind) {
    switch (kind) {
        case QuestionCategory::PerceptionMCQ: return "Perception-MCQs";
        case QuestionCategory::PerceptionVQAObject: return "Perception-VQA-Object";
        case QuestionCategory::PerceptionVQAScene: return "Perception-VQA-Scene";
        case QuestionCategory::PredictionMCQ: return "Prediction-MCQs";
        case QuestionCategory::PlanningVQAObject: return "Planning-VQA-Object";
        case QuestionCategory::PlanningVQAScene: return "Planning-VQA-Scene";
        case QuestionCategory::CorruptionMCQ: return "Corruption-MCQs";
    }
    return "Perception-MCQs";
}

std::string_view category_short(QuestionCategory kind) {
    switch (kind) {
        case QuestionCategory::PerceptionMCQ: return "P-MCQ";
        case QuestionCategory::PerceptionVQAObject: return "P-Obj";
        case QuestionCategory::PerceptionVQAScene: return "P-Scene";
        case QuestionCategory::PredictionMCQ: return "Pred-MCQ";
        case QuestionCategory::PlanningVQAObject: return "Plan-Obj";
        case QuestionCategory::PlanningVQAScene: return "Plan-Scene";
        case QuestionCategory::CorruptionMCQ: return "Corr-MCQ";
    }
    return "P-MCQ";
}

bool is_mcq(QuestionCategory kind) {
    return kind == QuestionCategory::PerceptionMCQ || kind == QuestionCategory::PredictionMCQ ||
           kind == QuestionCategory::CorruptionMCQ;
}

bool references_objects(QuestionCategory kind) {
    return kind == QuestionCategory::PerceptionVQAObject ||
           kind == QuestionCategory::PlanningVQAObject;
}

CategoryAlias resolve_category(std::string_view raw) {
    const std::string key = normalize_category(raw);
    // Alias table: canonical challenge strings plus singular/compact variants.
    static const std::map<std::string, QuestionCategory> kExact = {
        {"perceptionmcqs", QuestionCategory::PerceptionMCQ},
        {"perceptionmcq", QuestionCategory::PerceptionMCQ},
        {"perceptionvqaobject", QuestionCategory::PerceptionVQAObject},
        {"perceptionvqascene", QuestionCategory::PerceptionVQAScene},
        {"predictionmcqs", QuestionCategory::PredictionMCQ},
        {"predictionmcq", QuestionCategory::PredictionMCQ},
        {"planningvqaobject", QuestionCategory::PlanningVQAObject},
        {"planningvqascene", QuestionCategory::PlanningVQAScene},
        {"corruptionmcqs", QuestionCategory::CorruptionMCQ},
        {"corruptionmcq", QuestionCategory::CorruptionMCQ},
    };
    CategoryAlias alias;
    if (auto it = kExact.find(key); it != kExact.end()) {
        alias.exact = it->second;
        return alias;
    }
    if (key == "perceptionvqa" || key == "perceptionvqas") {
        alias.ambiguous = VqaFamily::Perception;
    } else if (key == "planningvqa" || key == "planningvqas") {
        alias.ambiguous = VqaFamily::Planning;
    }
    return alias;
}

namespace {

std::map<CameraView, std::string> parse_frame_views(const nlohmann::json& node, int ordinal,
                                                    const std::string& timestep_key) {
    std::map<CameraView, std::string> views;
    if (!node.is_object()) {
        throw DatasetError("dataset record " + std::to_string(ordinal) + ": frames[\"" +
                           timestep_key + "\"] is not an object");
    }
    for (CameraView view : kCanonicalViews) {
        const std::string key = cam_key(view);
        if (!node.contains(key)) {
            throw DatasetError("dataset record " + std::to_string(ordinal) +
                               ": missing frames[\"" + timestep_key + "\"][\"" + key + "\"]");
        }
        std::string path = node.at(key).get<std::string>();
        if (path.empty()) {
            throw DatasetError("dataset record " + std::to_string(ordinal) + ": empty path for " +
                               key + " at timestep " + timestep_key);
        }
        views[view] = std::move(path);
    }
    return views;
}

}  // namespace

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("invalid JSON in " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw DatasetError("dataset root must be a JSON array");

    std::vector<Sample> samples;
    samples.reserve(doc.size());
    int ordinal = 0;
    for (const auto& node : doc) {
        Sample sample;
        sample.index = ordinal;
        try {
            sample.sample_id = node.at("sample_id").get<std::string>();
            sample.category_raw = node.at("category").get<std::string>();
            sample.question = node.at("question").get<std::string>();
            if (node.contains("gold") && !node.at("gold").is_null()) {
                sample.gold_answer = node.at("gold").get<std::string>();
            }
            const auto& frames = node.at("frames");
            if (!frames.contains("0")) {
                throw DatasetError("dataset record " + std::to_string(ordinal) +
                                   ": missing frames[\"0\"]");
            }
            sample.frames[0] = parse_frame_views(frames.at("0"), ordinal, "0");
            for (int t : {-1, -2}) {
                const std::string key = std::to_string(t);
                if (frames.contains(key)) {
                    sample.frames[t] = parse_frame_views(frames.at(key), ordinal, key);
                }
            }
        } catch (const DatasetError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError("dataset record " + std::to_string(ordinal) + ": " + e.what());
        }
        samples.push_back(std::move(sample));
        ++ordinal;
    }
    return samples;
}

std::vector<ValidationIssue> validate_sample(const Sample& sample) {
    std::vector<ValidationIssue> issues;
    auto add = [&](const std::string& message) {
        issues.push_back({sample.sample_id, message});
    };

    std::set<CameraView> missing_t0;
    auto t0 = sample.frames.find(0);
    if (t0 == sample.frames.end()) {
        add("timestep 0 is missing");
        missing_t0.insert(kCanonicalViews.begin(), kCanonicalViews.end());
    } else {
        for (CameraView view : kCanonicalViews) {
            if (!t0->second.count(view)) {
                add("timestep 0 lacks " + cam_key(view));
                missing_t0.insert(view);
            }
        }
    }
    for (const auto& [timestep, views] : sample.frames) {
        if (timestep != 0 && timestep != -1 && timestep != -2) {
            add("unexpected timestep " + std::to_string(timestep));
        }
        if (timestep != 0) {
            for (CameraView view : kCanonicalViews) {
                if (!views.count(view)) {
                    add("timestep " + std::to_string(timestep) + " lacks " + cam_key(view));
                }
            }
        }
        for (const auto& [view, path] : views) {
            if (path.empty()) {
                add("empty path for " + cam_key(view) + " at timestep " + std::to_string(timestep));
            }
        }
    }

    RefScan scan = scan_object_refs(sample.question);
    for (const std::string& token : scan.malformed) {
        add("malformed object reference " + token);
    }
    // a view already reported missing above is the same violation
    std::set<CameraView> reported;
    for (const ObjectRef& ref : scan.refs) {
        if (missing_t0.count(ref.view) || reported.count(ref.view)) continue;
        if (t0 != sample.frames.end() && !t0->second.count(ref.view)) {
            add("question references " + cam_key(ref.view) + " but timestep 0 lacks that view");
            reported.insert(ref.view);
        }
    }
    return issues;
}

}  // namespace drivemop
