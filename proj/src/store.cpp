#include "drivemop/runner.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <fstream>

namespace drivemop {

std::string_view status_name(RecordStatus status) {
    switch (status) {
        case RecordStatus::Ok: return "ok";
        case RecordStatus::TransportError: return "transport_error";
        case RecordStatus::ClassificationError: return "classification_error";
        case RecordStatus::AssemblyError: return "assembly_error";
    }
    return "ok";
}

std::optional<RecordStatus> parse_status(std::string_view name) {
    for (RecordStatus status : {RecordStatus::Ok, RecordStatus::TransportError,
                                RecordStatus::ClassificationError, RecordStatus::AssemblyError}) {
        if (name == status_name(status)) return status;
    }
    return std::nullopt;
}

nlohmann::json record_to_json(const ResultRecord& record) {
    nlohmann::json j{{"sample_id", record.sample_id},
                     {"index", record.index},
                     {"answer", record.answer},
                     {"raw_text", record.raw_text},
                     {"status", std::string(status_name(record.status))},
                     {"attempts", record.attempts},
                     {"started_at", record.started_at},
                     {"finished_at", record.finished_at},
                     {"prompt_hash", record.prompt_hash},
                     {"error", record.error}};
    if (record.kind) {
        j["kind"] = std::string(category_name(*record.kind));
    } else {
        j["kind"] = nullptr;
    }
    return j;
}

ResultRecord record_from_json(const nlohmann::json& j) {
    ResultRecord record;
    record.sample_id = j.at("sample_id").get<std::string>();
    record.index = j.value("index", -1);
    record.answer = j.value("answer", "");
    record.raw_text = j.value("raw_text", "");
    const std::string status = j.at("status").get<std::string>();
    auto parsed = parse_status(status);
    if (!parsed) throw std::runtime_error("unknown record status \"" + status + "\"");
    record.status = *parsed;
    record.attempts = j.value("attempts", 0);
    record.started_at = j.value("started_at", "");
    record.finished_at = j.value("finished_at", "");
    record.prompt_hash = j.value("prompt_hash", "");
    record.error = j.value("error", "");
    if (j.contains("kind") && !j.at("kind").is_null()) {
        const auto alias = resolve_category(j.at("kind").get<std::string>());
        if (!alias.exact) {
            throw std::runtime_error("unknown record kind " + j.at("kind").dump());
        }
        record.kind = *alias.exact;
    }
    return record;
}

RecordStore::RecordStore(std::filesystem::path run_dir) : run_dir_(std::move(run_dir)) {
    std::filesystem::create_directories(records_dir());
}

std::filesystem::path RecordStore::record_path(const std::string& sample_id) const {
    if (sample_id.empty() || sample_id.find('/') != std::string::npos ||
        sample_id.find('\\') != std::string::npos || sample_id == "." || sample_id == "..") {
        throw std::invalid_argument("sample_id \"" + sample_id + "\" is not filename-safe");
    }
    return records_dir() / (sample_id + ".json");
}

namespace {

struct FdGuard {
    int fd = -1;
    ~FdGuard() {
        if (fd >= 0) ::close(fd);
    }
    void release() { fd = -1; }
};

std::atomic<std::uint64_t> g_write_counter{0};

}  // namespace

void RecordStore::write(const ResultRecord& record) {
    const std::filesystem::path final_path = record_path(record.sample_id);
    const std::filesystem::path tmp_path =
        records_dir() / (record.sample_id + ".json.tmp-" + std::to_string(::getpid()) + "-" +
                         std::to_string(g_write_counter.fetch_add(1)));

    const std::string payload = record_to_json(record).dump(2);

    FdGuard guard;
    guard.fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (guard.fd < 0) {
        throw std::runtime_error("cannot create " + tmp_path.string());
    }
    std::size_t written = 0;
    while (written < payload.size()) {
        const ssize_t n =
            ::write(guard.fd, payload.data() + written, payload.size() - written);
        if (n < 0) {
            ::unlink(tmp_path.c_str());
            throw std::runtime_error("write failed for " + tmp_path.string());
        }
        written += static_cast<std::size_t>(n);
    }
    if (write_hook) write_hook(WritePhase::AfterTempWrite, record.sample_id);
    if (::fsync(guard.fd) != 0) {
        ::unlink(tmp_path.c_str());
        throw std::runtime_error("fsync failed for " + tmp_path.string());
    }
    ::close(guard.fd);
    guard.release();

    if (write_hook) write_hook(WritePhase::BeforeRename, record.sample_id);
    if (::rename(tmp_path.c_str(), final_path.c_str()) != 0) {
        ::unlink(tmp_path.c_str());
        throw std::runtime_error("rename failed for " + final_path.string());
    }
    if (write_hook) write_hook(WritePhase::AfterRename, record.sample_id);
}

std::optional<ResultRecord> RecordStore::read(const std::string& sample_id) const {
    const std::filesystem::path path = record_path(sample_id);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    nlohmann::json j;
    try {
        in >> j;
        return record_from_json(j);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::vector<ResultRecord> RecordStore::read_all() const {
    std::vector<ResultRecord> records;
    if (!std::filesystem::exists(records_dir())) return records;
    for (const auto& entry : std::filesystem::directory_iterator(records_dir())) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        nlohmann::json j;
        try {
            in >> j;
            records.push_back(record_from_json(j));
        } catch (const std::exception&) {
            // scan() handles quarantine; readers just skip
        }
    }
    std::sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
        if (a.index != b.index) return a.index < b.index;
        return a.sample_id < b.sample_id;
    });
    return records;
}

RecordStore::ResumeIndex RecordStore::scan() {
    ResumeIndex index;
    std::filesystem::create_directories(records_dir());
    std::vector<std::filesystem::path> to_delete;
    std::vector<std::filesystem::path> to_quarantine;
    for (const auto& entry : std::filesystem::directory_iterator(records_dir())) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.find(".json.tmp") != std::string::npos) {
            to_delete.push_back(entry.path());
            continue;
        }
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        nlohmann::json j;
        try {
            in >> j;
            const ResultRecord record = record_from_json(j);
            if (record.status == RecordStatus::Ok) {
                index.ok.insert(record.sample_id);
            } else {
                index.failed.insert(record.sample_id);
            }
        } catch (const std::exception& e) {
            to_quarantine.push_back(entry.path());
            index.warnings.push_back("quarantined unreadable record " + name + ": " + e.what());
        }
    }
    for (const auto& path : to_delete) {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        index.warnings.push_back("removed stale temp file " + path.filename().string());
    }
    for (const auto& path : to_quarantine) {
        std::error_code ec;
        std::filesystem::rename(path, path.string() + ".quarantined", ec);
    }
    return index;
}

std::set<std::string> resume_pending(const RecordStore::ResumeIndex& index,
                                     const std::vector<Sample>& dataset, bool only_failed) {
    std::set<std::string> pending;
    for (const Sample& sample : dataset) {
        if (only_failed) {
            if (index.failed.count(sample.sample_id)) pending.insert(sample.sample_id);
        } else if (!index.ok.count(sample.sample_id)) {
            pending.insert(sample.sample_id);
        }
    }
    return pending;
}

nlohmann::json merge_records(const std::vector<ResultRecord>& records) {
    std::vector<const ResultRecord*> sorted;
    sorted.reserve(records.size());
    for (const ResultRecord& r : records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const ResultRecord* a, const ResultRecord* b) {
        if (a->index != b->index) return a->index < b->index;
        return a->sample_id < b->sample_id;
    });
    nlohmann::json out = nlohmann::json::array();
    for (const ResultRecord* r : sorted) {
        out.push_back({{"sample_id", r->sample_id}, {"answer", r->answer}});
    }
    return out;
}

std::string now_utc_iso8601() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace drivemop
