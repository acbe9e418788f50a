#include "drivemop/assembly.hpp"
#include "drivemop/client.hpp"
#include "drivemop/dataset.hpp"
#include "drivemop/prompts.hpp"
#include "drivemop/router.hpp"
#include "drivemop/runner.hpp"
#include "drivemop/scoring.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>

namespace {

using namespace drivemop;

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

void print_summary_line(const nlohmann::json& j) {
    std::cout << j.dump() << "\n";
}

// flags > config file > built-in defaults
struct RunFlags {
    std::string dataset;
    std::string config_path;
    std::optional<std::string> images;
    std::optional<std::string> out;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<int> workers;
    std::optional<std::string> types;
    std::optional<std::string> range;
    bool only_failed = false;
    bool mock = false;
    std::optional<std::string> dump_payload;
    std::optional<std::string> reference_image;
    std::optional<std::string> prompts_dir;
};

RunConfig build_run_config(const RunFlags& flags) {
    RunConfig cfg;
    cfg.backend.model = "Qwen2.5-VL-72B-Instruct";

    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw std::runtime_error("cannot open config file " + flags.config_path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("invalid JSON in config file: " + std::string(e.what()));
        }
        cfg.backend.endpoint_url = doc.value("endpoint", cfg.backend.endpoint_url);
        cfg.backend.model = doc.value("model", cfg.backend.model);
        cfg.backend.api_key_env = doc.value("api_key_env", cfg.backend.api_key_env);
        cfg.backend.timeout = std::chrono::milliseconds(
            doc.value("timeout_ms", static_cast<long long>(cfg.backend.timeout.count())));
        cfg.backend.max_retries = doc.value("max_retries", cfg.backend.max_retries);
        cfg.backend.backoff_base = std::chrono::milliseconds(
            doc.value("backoff_ms", static_cast<long long>(cfg.backend.backoff_base.count())));
        cfg.image_root = doc.value("images", cfg.image_root.string());
        cfg.prompts_dir = doc.value("prompts_dir", cfg.prompts_dir.string());
        cfg.reference_image = doc.value("reference_image", cfg.reference_image.string());
        cfg.workers = doc.value("workers", cfg.workers);
        cfg.max_tokens_mcq = doc.value("max_tokens_mcq", cfg.max_tokens_mcq);
        cfg.max_tokens_vqa = doc.value("max_tokens_vqa", cfg.max_tokens_vqa);
        cfg.transmit_max_side = doc.value("transmit_max_side", cfg.transmit_max_side);
        cfg.inject_grounding_hints =
            doc.value("inject_grounding_hints", cfg.inject_grounding_hints);
        cfg.mcq_options = doc.value("mcq_options", cfg.mcq_options);
        if (doc.contains("marker_override") && !doc["marker_override"].is_null()) {
            cfg.marker_override = doc["marker_override"].get<bool>();
        }
    }

    if (flags.images) cfg.image_root = *flags.images;
    if (flags.endpoint) cfg.backend.endpoint_url = *flags.endpoint;
    if (flags.model) cfg.backend.model = *flags.model;
    if (flags.workers) cfg.workers = *flags.workers;
    if (flags.dump_payload) cfg.dump_payload_dir = *flags.dump_payload;
    if (flags.reference_image) cfg.reference_image = *flags.reference_image;
    if (flags.prompts_dir) cfg.prompts_dir = *flags.prompts_dir;
    cfg.mock = flags.mock;
    return cfg;
}

int cmd_run(const RunFlags& flags) {
    RunConfig cfg = build_run_config(flags);
    if (!flags.out) throw std::runtime_error("--out is required");
    if (!cfg.mock && cfg.backend.endpoint_url.empty()) {
        throw std::runtime_error("--endpoint is required unless --mock is set");
    }

    FilterFlags filter_flags;
    filter_flags.types = flags.types;
    filter_flags.range = flags.range;
    filter_flags.only_failed = flags.only_failed;
    const RunFilter filter = parse_filter_flags(filter_flags);

    const std::vector<Sample> dataset = load_dataset(flags.dataset);
    const PromptRegistry prompts = PromptRegistry::load_dir(cfg.prompts_dir);
    RecordStore store(*flags.out);

    MockBackend mock;
    std::unique_ptr<HttpBackend> http;
    ChatBackend* backend = &mock;
    if (!cfg.mock) {
        http = std::make_unique<HttpBackend>(cfg.backend);
        backend = http.get();
    }

    const RunSummary summary = run(cfg, dataset, filter, *backend, prompts, store);

    nlohmann::json by_status = nlohmann::json::object();
    for (const auto& [status, count] : summary.by_status) {
        by_status[std::string(status_name(status))] = count;
    }
    print_summary_line({{"verb", "run"},
                        {"matched", summary.matched},
                        {"processed", summary.processed},
                        {"skipped", summary.skipped},
                        {"failed", summary.failed()},
                        {"aborted", summary.aborted},
                        {"by_status", by_status}});
    if (summary.aborted) {
        std::cerr << "run aborted: " << summary.abort_reason << "\n";
        return kExitPartial;
    }
    return summary.failed() == 0 ? kExitOk : kExitPartial;
}

int cmd_plan(const std::string& explain) {
    if (!explain.empty()) {
        const CategoryAlias alias = resolve_category(explain);
        if (!alias.exact) {
            throw std::runtime_error("unknown or ambiguous category \"" + explain + "\"");
        }
        std::cout << explain_plan(*alias.exact);
        print_summary_line({{"verb", "plan"}, {"explained", category_name(*alias.exact)}});
        return kExitOk;
    }
    for (QuestionCategory kind : kAllCategories) std::cout << explain_plan(kind) << "\n";
    print_summary_line({{"verb", "plan"}, {"explained", "all"}});
    return kExitOk;
}

int cmd_merge(const std::string& run_dir, const std::string& output) {
    RecordStore store(run_dir);
    const std::vector<ResultRecord> records = store.read_all();
    const nlohmann::json merged = merge_records(records);
    std::ofstream out(output);
    if (!out) throw std::runtime_error("cannot open " + output + " for writing");
    out << merged.dump(2) << "\n";
    print_summary_line({{"verb", "merge"}, {"records", records.size()}, {"output", output}});
    return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& gold_path,
               const std::string& baseline_dir, const std::string& format_name) {
    const ReportFormat format =
        format_name == "csv" ? ReportFormat::Csv : ReportFormat::Markdown;

    const std::map<std::string, char> gold = load_gold(gold_path);
    std::vector<RunReport> reports;
    if (!baseline_dir.empty()) {
        RecordStore baseline(baseline_dir);
        reports.push_back(aggregate(score_mcq(baseline.read_all(), gold),
                                    std::filesystem::path(baseline_dir).filename().string()));
    }
    RecordStore store(run_dir);
    reports.push_back(aggregate(score_mcq(store.read_all(), gold),
                                std::filesystem::path(run_dir).filename().string()));

    std::cout << render_report(reports, format);

    const RunReport& current = reports.back();
    nlohmann::json j{{"verb", "report"}, {"rows", current.rows.size()}};
    j["macro_avg"] = current.macro_avg ? nlohmann::json(*current.macro_avg) : nlohmann::json();
    j["weighted_avg"] =
        current.weighted_avg ? nlohmann::json(*current.weighted_avg) : nlohmann::json();
    print_summary_line(j);
    return kExitOk;
}

int cmd_validate(const std::string& dataset_path) {
    const std::vector<Sample> dataset = load_dataset(dataset_path);
    int issue_count = 0;
    for (const Sample& sample : dataset) {
        for (const ValidationIssue& issue : validate_sample(sample)) {
            std::cout << sample.sample_id << ": " << issue.message << "\n";
            ++issue_count;
        }
    }
    print_summary_line(
        {{"verb", "validate"}, {"samples", dataset.size()}, {"issues", issue_count}});
    return issue_count == 0 ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drive-mop: routed multi-view driving VQA evaluation pipeline"};
    app.require_subcommand(1);

    RunFlags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "execute or resume a batch run");
    run_cmd->add_option("--dataset", run_flags.dataset, "dataset JSON file")->required();
    run_cmd->add_option("--images", run_flags.images, "image root directory");
    run_cmd->add_option("--out", run_flags.out, "run directory (store)")->required();
    run_cmd->add_option("--endpoint", run_flags.endpoint, "chat-completions endpoint URL");
    run_cmd->add_option("--model", run_flags.model, "model name");
    run_cmd->add_option("--workers", run_flags.workers, "parallel workers");
    run_cmd->add_option("--types", run_flags.types, "comma list of question types to (re)process");
    run_cmd->add_option("--range", run_flags.range, "index range lo:hi to (re)process");
    run_cmd->add_flag("--only-failed", run_flags.only_failed, "re-process only failed samples");
    run_cmd->add_flag("--mock", run_flags.mock, "offline deterministic backend");
    run_cmd->add_option("--dump-payload", run_flags.dump_payload,
                        "write assembled payload images to this directory");
    run_cmd->add_option("--reference-image", run_flags.reference_image,
                        "clean reference image for corruption questions");
    run_cmd->add_option("--prompts", run_flags.prompts_dir, "prompt template directory");
    run_cmd->add_option("--config", run_flags.config_path, "JSON config file");

    std::string explain;
    CLI::App* plan_cmd = app.add_subcommand("plan", "print the routing plan table");
    plan_cmd->add_option("--explain", explain, "category to explain");

    std::string merge_dir;
    std::string merge_out = "results.json";
    CLI::App* merge_cmd = app.add_subcommand("merge", "export a run directory to one results file");
    merge_cmd->add_option("run_dir", merge_dir, "run directory")->required();
    merge_cmd->add_option("-o,--output", merge_out, "output file");

    std::string report_dir;
    std::string gold_path;
    std::string baseline_dir;
    std::string format_name = "markdown";
    CLI::App* report_cmd = app.add_subcommand("report", "score a run and render the table");
    report_cmd->add_option("run_dir", report_dir, "run directory")->required();
    report_cmd->add_option("--gold", gold_path, "gold answers JSON")->required();
    report_cmd->add_option("--baseline", baseline_dir, "baseline run directory");
    report_cmd->add_option("--format", format_name, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));

    std::string validate_dataset;
    CLI::App* validate_cmd = app.add_subcommand("validate", "check a dataset file");
    validate_cmd->add_option("--dataset", validate_dataset, "dataset JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_flags);
        if (plan_cmd->parsed()) return cmd_plan(explain);
        if (merge_cmd->parsed()) return cmd_merge(merge_dir, merge_out);
        if (report_cmd->parsed()) return cmd_report(report_dir, gold_path, baseline_dir, format_name);
        if (validate_cmd->parsed()) return cmd_validate(validate_dataset);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
