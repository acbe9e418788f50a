#include "drivemop/runner.hpp"

#include "drivemop/assembly.hpp"
#include "drivemop/router.hpp"
#include "drivemop/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <thread>

namespace drivemop {

int RunSummary::failed() const {
    int n = 0;
    for (const auto& [status, count] : by_status) {
        if (status != RecordStatus::Ok) n += count;
    }
    return n;
}

bool RunFilter::matches(const Sample& sample, QuestionCategory kind_hint) const {
    if (index_range) {
        if (sample.index < index_range->first || sample.index >= index_range->second) return false;
    }
    if (kinds && !kinds->count(kind_hint)) return false;
    return true;
}

RunFilter parse_filter_flags(const FilterFlags& flags) {
    RunFilter filter;
    filter.only_failed = flags.only_failed;
    if (flags.types) {
        std::set<QuestionCategory> kinds;
        const std::string& list = *flags.types;
        std::size_t start = 0;
        while (start <= list.size()) {
            const std::size_t comma = list.find(',', start);
            const std::string token = list.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!token.empty()) {
                const CategoryAlias alias = resolve_category(token);
                if (alias.exact) {
                    kinds.insert(*alias.exact);
                } else if (alias.ambiguous) {
                    // a family name covers both its variants
                    if (*alias.ambiguous == VqaFamily::Perception) {
                        kinds.insert(QuestionCategory::PerceptionVQAObject);
                        kinds.insert(QuestionCategory::PerceptionVQAScene);
                    } else {
                        kinds.insert(QuestionCategory::PlanningVQAObject);
                        kinds.insert(QuestionCategory::PlanningVQAScene);
                    }
                } else {
                    throw std::invalid_argument("unknown question type \"" + token + "\"");
                }
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (kinds.empty()) throw std::invalid_argument("--types given but empty");
        filter.kinds = std::move(kinds);
    }
    if (flags.range) {
        const std::string& text = *flags.range;
        const std::size_t colon = text.find(':');
        bool ok = colon != std::string::npos;
        int lo = 0;
        int hi = 0;
        if (ok) {
            try {
                lo = std::stoi(text.substr(0, colon));
                hi = std::stoi(text.substr(colon + 1));
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok || lo < 0 || hi < lo) {
            throw std::invalid_argument("range must be lo:hi with 0 <= lo <= hi, got \"" + text +
                                        "\"");
        }
        filter.index_range = {lo, hi};
    }
    return filter;
}

FilterFlags filter_to_flags(const RunFilter& filter) {
    FilterFlags flags;
    flags.only_failed = filter.only_failed;
    if (filter.kinds) {
        std::string list;
        for (QuestionCategory kind : kAllCategories) {  // canonical order
            if (!filter.kinds->count(kind)) continue;
            if (!list.empty()) list += ',';
            list += category_name(kind);
        }
        flags.types = list;
    }
    if (filter.index_range) {
        flags.range = std::to_string(filter.index_range->first) + ":" +
                      std::to_string(filter.index_range->second);
    }
    return flags;
}

namespace {

std::string trim_copy(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

std::string extract_answer(QuestionCategory kind, const std::string& raw,
                           const std::string& mcq_options) {
    if (is_mcq(kind)) {
        std::vector<char> options(mcq_options.begin(), mcq_options.end());
        if (auto letter = extract_choice(raw, options)) return std::string(1, *letter);
    }
    return trim_copy(extract_final_answer(raw));
}

struct WorkerShared {
    const RunConfig& cfg;
    const std::vector<Sample>& dataset;
    ChatBackend& backend;
    const PromptRegistry& prompts;
    RecordStore& store;
    const std::vector<std::size_t>& work;  // indices into dataset

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};

    std::mutex mu;
    RunSummary summary;
    std::string abort_reason;
};

void process_sample(WorkerShared& shared, const Sample& sample) {
    const RunConfig& cfg = shared.cfg;

    ResultRecord record;
    record.sample_id = sample.sample_id;
    record.index = sample.index;
    record.started_at = now_utc_iso8601();

    QuestionCategory kind{};
    bool classified = false;
    try {
        kind = classify(sample);
        classified = true;
        record.kind = kind;
    } catch (const std::exception& e) {
        record.status = RecordStatus::ClassificationError;
        record.error = e.what();
    }

    if (classified) {
        TaskPlan task = plan(kind);
        if (cfg.marker_override) task.use_marker = *cfg.marker_override;
        const PromptTemplate& tpl = shared.prompts.get(kind);
        record.prompt_hash = tpl.content_hash;
        try {
            AssemblyContext actx;
            actx.image_root = cfg.image_root;
            actx.reference_image = cfg.reference_image;
            actx.transmit_max_side = cfg.transmit_max_side;
            VisualPayload payload = assemble_payload(task, sample, actx);
            if (!cfg.dump_payload_dir.empty()) {
                dump_payload(payload, sample.sample_id, cfg.dump_payload_dir);
            }

            RenderOptions opts;
            opts.inject_grounding_hints = cfg.inject_grounding_hints;
            ChatRequest request;
            request.model = cfg.backend.model;
            request.turns = render_messages(tpl, task, sample, payload, opts);
            request.decoding = task.decoding;
            request.max_tokens = is_mcq(kind) ? cfg.max_tokens_mcq : cfg.max_tokens_vqa;
            request.request_tag = sample.sample_id;

            try {
                ChatResponse response = send_chat(cfg.backend, shared.backend, request);
                record.attempts = response.attempts;
                record.raw_text = response.text;
                record.answer = extract_answer(kind, response.text, cfg.mcq_options);
                if (record.answer.empty()) record.answer = trim_copy(response.text);
                if (record.answer.empty()) {
                    record.status = RecordStatus::TransportError;
                    record.error = "empty completion text";
                } else {
                    record.status = RecordStatus::Ok;
                }
            } catch (const ClientError& e) {
                record.status = RecordStatus::TransportError;
                record.attempts = std::max(1, e.attempts);
                record.error = e.what();
            }
        } catch (const std::exception& e) {
            // assembly, decoding or rendering problems; images stay untouched
            record.status = RecordStatus::AssemblyError;
            record.error = e.what();
        }
    }

    record.finished_at = now_utc_iso8601();
    shared.store.write(record);

    std::lock_guard lock(shared.mu);
    shared.summary.processed += 1;
    shared.summary.by_status[record.status] += 1;
    if (record.kind) shared.summary.by_kind[*record.kind] += 1;
}

void worker_loop(WorkerShared& shared) {
    while (!shared.abort.load(std::memory_order_relaxed)) {
        const std::size_t i = shared.next.fetch_add(1);
        if (i >= shared.work.size()) return;
        const Sample& sample = shared.dataset[shared.work[i]];
        try {
            process_sample(shared, sample);
        } catch (const SimulatedCrash&) {
            shared.abort.store(true);
            std::lock_guard lock(shared.mu);
            if (shared.abort_reason.empty()) shared.abort_reason = "simulated crash";
        } catch (const std::exception& e) {
            // store failure: nothing can be persisted, stop the run
            shared.abort.store(true);
            std::lock_guard lock(shared.mu);
            if (shared.abort_reason.empty()) shared.abort_reason = e.what();
        }
    }
}

nlohmann::json config_to_json(const RunConfig& cfg, const PromptRegistry& prompts) {
    nlohmann::json j{{"endpoint", cfg.backend.endpoint_url},
                     {"model", cfg.backend.model},
                     {"api_key_env", cfg.backend.api_key_env},
                     {"timeout_ms", cfg.backend.timeout.count()},
                     {"max_retries", cfg.backend.max_retries},
                     {"backoff_ms", cfg.backend.backoff_base.count()},
                     {"image_root", cfg.image_root.string()},
                     {"prompts_dir", cfg.prompts_dir.string()},
                     {"reference_image", cfg.reference_image.string()},
                     {"workers", cfg.workers},
                     {"max_tokens_mcq", cfg.max_tokens_mcq},
                     {"max_tokens_vqa", cfg.max_tokens_vqa},
                     {"transmit_max_side", cfg.transmit_max_side},
                     {"inject_grounding_hints", cfg.inject_grounding_hints},
                     {"mcq_options", cfg.mcq_options},
                     {"mock", cfg.mock},
                     {"prompt_hashes", prompts.hashes()}};
    if (cfg.marker_override) {
        j["marker_override"] = *cfg.marker_override;
    } else {
        j["marker_override"] = nullptr;
    }
    return j;
}

}  // namespace

RunSummary run(const RunConfig& config, const std::vector<Sample>& dataset,
               const RunFilter& filter, ChatBackend& backend, const PromptRegistry& prompts,
               RecordStore& store) {
    if (config.workers < 1) throw std::invalid_argument("worker count must be >= 1");
    if (config.mcq_options.empty()) throw std::invalid_argument("mcq_options must be non-empty");

    const RecordStore::ResumeIndex index = store.scan();

    RunSummary summary;
    std::vector<std::size_t> work;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& sample = dataset[i];
        if (filter.kinds || filter.index_range) {
            // category filters need a kind; unclassifiable samples can only
            // match the unfiltered run, where the failure gets recorded
            QuestionCategory kind_hint{};
            bool have_kind = true;
            try {
                kind_hint = classify(sample);
            } catch (const std::exception&) {
                have_kind = false;
            }
            if (filter.index_range &&
                (sample.index < filter.index_range->first ||
                 sample.index >= filter.index_range->second)) {
                continue;
            }
            if (filter.kinds && (!have_kind || !filter.kinds->count(kind_hint))) continue;
        }
        summary.matched += 1;

        bool pending;
        if (filter.only_failed) {
            pending = index.failed.count(sample.sample_id) > 0;
        } else if (filter.selective()) {
            pending = true;  // explicit subset: rewrite even completed records
        } else {
            pending = index.ok.count(sample.sample_id) == 0;
        }
        if (pending) {
            work.push_back(i);
        } else {
            summary.skipped += 1;
        }
    }

    {
        std::ofstream out(store.run_dir() / "run_config.json");
        out << config_to_json(config, prompts).dump(2) << "\n";
    }

    WorkerShared shared{config, dataset, backend, prompts, store, work};
    const int workers =
        std::min(config.workers, static_cast<int>(std::max<std::size_t>(work.size(), 1)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back(worker_loop, std::ref(shared));
    }
    for (std::thread& t : pool) t.join();

    shared.summary.matched = summary.matched;
    shared.summary.skipped = summary.skipped;
    shared.summary.aborted = shared.abort.load();
    shared.summary.abort_reason = shared.abort_reason;

    if (!shared.summary.aborted) {
        nlohmann::json by_status = nlohmann::json::object();
        for (const auto& [status, count] : shared.summary.by_status) {
            by_status[std::string(status_name(status))] = count;
        }
        nlohmann::json by_kind = nlohmann::json::object();
        for (const auto& [kind, count] : shared.summary.by_kind) {
            by_kind[std::string(category_name(kind))] = count;
        }
        std::ofstream out(store.run_dir() / "summary.json");
        out << nlohmann::json{{"matched", shared.summary.matched},
                              {"processed", shared.summary.processed},
                              {"skipped", shared.summary.skipped},
                              {"by_status", std::move(by_status)},
                              {"by_kind", std::move(by_kind)}}
                   .dump(2)
            << "\n";
    }
    return shared.summary;
}

}  // namespace drivemop
