#pragma once

#include "drivemop/client.hpp"
#include "drivemop/dataset.hpp"
#include "drivemop/prompts.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace drivemop {

enum class RecordStatus { Ok, TransportError, ClassificationError, AssemblyError };

std::string_view status_name(RecordStatus status);
std::optional<RecordStatus> parse_status(std::string_view name);

// Per-sample checkpoint unit, one JSON file each.
struct ResultRecord {
    std::string sample_id;
    std::optional<QuestionCategory> kind;  // absent when classification failed
    int index = -1;
    std::string answer;
    std::string raw_text;
    RecordStatus status = RecordStatus::Ok;
    int attempts = 0;
    std::string started_at;   // ISO-8601 UTC
    std::string finished_at;
    std::string prompt_hash;
    std::string error;  // failure detail, empty for Ok
};

nlohmann::json record_to_json(const ResultRecord& record);
ResultRecord record_from_json(const nlohmann::json& j);

// Thrown by test write hooks to emulate dying mid-write; never recorded as a
// sample failure.
struct SimulatedCrash {};

// records/<sample_id>.json under the run directory; every write goes through
// temp file + flush + atomic rename.
class RecordStore {
public:
    enum class WritePhase { AfterTempWrite, BeforeRename, AfterRename };
    using WriteHook = std::function<void(WritePhase, const std::string& sample_id)>;

    explicit RecordStore(std::filesystem::path run_dir);

    const std::filesystem::path& run_dir() const { return run_dir_; }
    std::filesystem::path records_dir() const { return run_dir_ / "records"; }
    std::filesystem::path record_path(const std::string& sample_id) const;

    void write(const ResultRecord& record);
    std::optional<ResultRecord> read(const std::string& sample_id) const;
    std::vector<ResultRecord> read_all() const;

    struct ResumeIndex {
        std::set<std::string> ok;      // completed, skipped on resume
        std::set<std::string> failed;  // recorded, pending when retrying
        std::vector<std::string> warnings;
    };
    // Deletes leftover temp files; quarantines unparseable record files
    // (renamed aside with a warning, then treated as pending).
    ResumeIndex scan();

    WriteHook write_hook;  // test seam

private:
    std::filesystem::path run_dir_;
};

// Pending ids for a resume: Ok records are kept; with only_failed, pending is
// restricted to ids that already have a failed record.
std::set<std::string> resume_pending(const RecordStore::ResumeIndex& index,
                                     const std::vector<Sample>& dataset, bool only_failed);

struct RunFilter {
    std::optional<std::set<QuestionCategory>> kinds;
    std::optional<std::pair<int, int>> index_range;  // [lo, hi)
    bool only_failed = false;

    bool empty() const { return !kinds && !index_range && !only_failed; }
    // True when the filter names an explicit subset; such samples are
    // re-processed even if already completed (selective update).
    bool selective() const { return kinds.has_value() || index_range.has_value(); }
    bool matches(const Sample& sample, QuestionCategory kind_hint) const;

    bool operator==(const RunFilter&) const = default;
};

// CLI flag forms. parse throws std::invalid_argument on unknown types or bad
// ranges; to_flags emits the canonical spelling (sorted canonical type names,
// "lo:hi"), so parse(to_flags(f)) == f.
struct FilterFlags {
    std::optional<std::string> types;  // comma list
    std::optional<std::string> range;  // "lo:hi"
    bool only_failed = false;

    bool operator==(const FilterFlags&) const = default;
};
RunFilter parse_filter_flags(const FilterFlags& flags);
FilterFlags filter_to_flags(const RunFilter& filter);

struct RunConfig {
    BackendConfig backend;
    std::filesystem::path image_root = ".";
    std::filesystem::path prompts_dir = "prompts";
    std::filesystem::path reference_image;
    std::filesystem::path dump_payload_dir;  // empty = off
    int workers = 8;
    int max_tokens_mcq = 256;
    int max_tokens_vqa = 1024;
    int transmit_max_side = 0;
    bool inject_grounding_hints = false;
    std::optional<bool> marker_override;  // overrides plan.use_marker when set
    std::string mcq_options = "ABCD";
    bool mock = false;
};

struct RunSummary {
    int matched = 0;    // samples selected by the filter
    int processed = 0;  // records written this run
    int skipped = 0;    // already complete
    std::map<RecordStatus, int> by_status;
    std::map<QuestionCategory, int> by_kind;
    bool aborted = false;  // a simulated crash or store failure stopped the run
    std::string abort_reason;

    int failed() const;
};

// Fans pending samples out to `workers` threads; each worker owns its sample
// end-to-end and persists exactly one record for it.
RunSummary run(const RunConfig& config, const std::vector<Sample>& dataset,
               const RunFilter& filter, ChatBackend& backend, const PromptRegistry& prompts,
               RecordStore& store);

// records -> [{"sample_id":..., "answer":...}] in dataset (index) order.
nlohmann::json merge_records(const std::vector<ResultRecord>& records);

std::string now_utc_iso8601();

}  // namespace drivemop
