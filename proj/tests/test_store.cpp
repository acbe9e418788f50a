#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "drivemop/runner.hpp"
#include "test_support.hpp"

#include <fstream>
#include <thread>

using namespace drivemop;

namespace {

ResultRecord make_record(const std::string& id, RecordStatus status = RecordStatus::Ok,
                         int index = 0) {
    ResultRecord record;
    record.sample_id = id;
    record.kind = QuestionCategory::PerceptionMCQ;
    record.index = index;
    record.answer = status == RecordStatus::Ok ? "A" : "";
    record.raw_text = "Answer: A";
    record.status = status;
    record.attempts = 1;
    record.started_at = "2025-01-01T00:00:00Z";
    record.finished_at = "2025-01-01T00:00:01Z";
    record.prompt_hash = "deadbeef";
    if (status != RecordStatus::Ok) record.error = "boom";
    return record;
}

}  // namespace

TEST_CASE("record json round trip") {
    const ResultRecord record = make_record("s1", RecordStatus::TransportError, 4);
    const ResultRecord back = record_from_json(record_to_json(record));
    CHECK(back.sample_id == record.sample_id);
    CHECK(back.kind == record.kind);
    CHECK(back.index == 4);
    CHECK(back.status == RecordStatus::TransportError);
    CHECK(back.attempts == 1);
    CHECK(back.error == "boom");

    ResultRecord unclassified = make_record("s2", RecordStatus::ClassificationError);
    unclassified.kind.reset();
    const ResultRecord back2 = record_from_json(record_to_json(unclassified));
    CHECK_FALSE(back2.kind);
}

TEST_CASE("write then read, rewrite replaces wholesale") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    store.write(make_record("s1"));
    auto loaded = store.read("s1");
    REQUIRE(loaded);
    CHECK(loaded->answer == "A");

    ResultRecord updated = make_record("s1");
    updated.answer = "B";
    store.write(updated);
    CHECK(store.read("s1")->answer == "B");

    int files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(store.records_dir())) {
        (void)entry;
        ++files;
    }
    CHECK(files == 1);
}

TEST_CASE("unsafe sample ids are rejected") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    CHECK_THROWS_AS(store.record_path("a/b"), std::invalid_argument);
    CHECK_THROWS_AS(store.record_path(".."), std::invalid_argument);
    CHECK_THROWS_AS(store.record_path(""), std::invalid_argument);
}

TEST_CASE("simulated crash between flush and rename leaves no record") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    store.write_hook = [](RecordStore::WritePhase phase, const std::string&) {
        if (phase == RecordStore::WritePhase::BeforeRename) throw SimulatedCrash{};
    };
    CHECK_THROWS_AS(store.write(make_record("s1")), SimulatedCrash);
    store.write_hook = nullptr;

    CHECK_FALSE(store.read("s1"));
    const auto index = store.scan();  // cleans the leftover temp
    CHECK(index.ok.empty());
    CHECK(index.failed.empty());
    CHECK_FALSE(index.warnings.empty());
    for (const auto& entry : std::filesystem::directory_iterator(store.records_dir())) {
        FAIL("records dir should be empty, found ", entry.path().string());
    }

    // the store still works afterwards
    store.write(make_record("s1"));
    CHECK(store.read("s1"));
}

TEST_CASE("crash after rename keeps the durable record") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    store.write_hook = [](RecordStore::WritePhase phase, const std::string&) {
        if (phase == RecordStore::WritePhase::AfterRename) throw SimulatedCrash{};
    };
    CHECK_THROWS_AS(store.write(make_record("s1")), SimulatedCrash);
    store.write_hook = nullptr;
    REQUIRE(store.read("s1"));
    CHECK(store.scan().ok.count("s1") == 1);
}

TEST_CASE("scan ignores and deletes stray temp files") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    store.write(make_record("s1"));
    std::ofstream(store.records_dir() / "s9.json.tmp-123-0") << "{partial";

    const auto index = store.scan();
    CHECK(index.ok == std::set<std::string>{"s1"});
    CHECK_FALSE(std::filesystem::exists(store.records_dir() / "s9.json.tmp-123-0"));
}

TEST_CASE("scan quarantines corrupt record files") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    store.write(make_record("s1"));
    std::ofstream(store.records_dir() / "s2.json") << "{broken json";

    const auto index = store.scan();
    CHECK(index.ok == std::set<std::string>{"s1"});
    CHECK(index.failed.empty());
    CHECK_FALSE(index.warnings.empty());
    CHECK_FALSE(std::filesystem::exists(store.records_dir() / "s2.json"));
    CHECK(std::filesystem::exists(store.records_dir() / "s2.json.quarantined"));

    // quarantined files are invisible to later scans
    const auto again = store.scan();
    CHECK(again.ok == std::set<std::string>{"s1"});
    CHECK(again.warnings.empty());
}

TEST_CASE("resume_pending") {
    std::vector<Sample> dataset;
    for (int i = 0; i < 5; ++i) {
        Sample s;
        s.sample_id = "s" + std::to_string(i);
        s.index = i;
        dataset.push_back(s);
    }
    RecordStore::ResumeIndex index;
    index.ok = {"s0", "s1", "s2"};
    index.failed = {"s3"};

    CHECK(resume_pending(index, dataset, /*only_failed=*/true) == std::set<std::string>{"s3"});
    CHECK(resume_pending(index, dataset, /*only_failed=*/false) ==
          std::set<std::string>{"s3", "s4"});
}

TEST_CASE("a thousand concurrent writers produce a thousand valid files") {
    testsup::TempDir tmp;
    RecordStore store(tmp.path() / "run");
    constexpr int kWriters = 8;
    constexpr int kPerWriter = 125;
    std::vector<std::thread> threads;
    for (int w = 0; w < kWriters; ++w) {
        threads.emplace_back([&store, w] {
            for (int i = 0; i < kPerWriter; ++i) {
                store.write(make_record("w" + std::to_string(w) + "_" + std::to_string(i),
                                        RecordStatus::Ok, w * kPerWriter + i));
            }
        });
    }
    for (auto& t : threads) t.join();

    const auto records = store.read_all();
    CHECK(records.size() == kWriters * kPerWriter);
    const auto index = store.scan();
    CHECK(index.ok.size() == kWriters * kPerWriter);
    CHECK(index.warnings.empty());
}

TEST_CASE("merge_records orders by dataset index") {
    std::vector<ResultRecord> records;
    records.push_back(make_record("b", RecordStatus::Ok, 2));
    records.push_back(make_record("c", RecordStatus::Ok, 0));
    records.push_back(make_record("a", RecordStatus::Ok, 1));
    const nlohmann::json merged = merge_records(records);
    REQUIRE(merged.size() == 3);
    CHECK(merged[0].at("sample_id") == "c");
    CHECK(merged[1].at("sample_id") == "a");
    CHECK(merged[2].at("sample_id") == "b");
    CHECK(merged[0].contains("answer"));
}

TEST_CASE("filter flags round trip") {
    RunFilter filter;
    filter.kinds = {QuestionCategory::PredictionMCQ, QuestionCategory::CorruptionMCQ};
    filter.index_range = {{100, 200}};
    filter.only_failed = true;

    const FilterFlags flags = filter_to_flags(filter);
    CHECK(flags.types == "Prediction-MCQs,Corruption-MCQs");
    CHECK(flags.range == "100:200");
    CHECK(flags.only_failed);
    CHECK(parse_filter_flags(flags) == filter);

    CHECK(filter_to_flags(parse_filter_flags(flags)) == flags);

    const RunFilter empty_filter = parse_filter_flags(FilterFlags{});
    CHECK(empty_filter.empty());
    CHECK(filter_to_flags(empty_filter) == FilterFlags{});
}

TEST_CASE("filter flags reject junk") {
    CHECK_THROWS_AS(parse_filter_flags({std::string("Weather-Check"), std::nullopt, false}),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_filter_flags({std::nullopt, std::string("5"), false}),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_filter_flags({std::nullopt, std::string("9:2"), false}),
                    std::invalid_argument);
}

TEST_CASE("family alias in --types expands to both variants") {
    const RunFilter filter =
        parse_filter_flags({std::string("Planning-VQA"), std::nullopt, false});
    REQUIRE(filter.kinds);
    CHECK(filter.kinds->count(QuestionCategory::PlanningVQAObject) == 1);
    CHECK(filter.kinds->count(QuestionCategory::PlanningVQAScene) == 1);
}
