#include "drivemop/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace drivemop {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

char upper(char c) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

std::string trim_copy(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

}  // namespace

std::optional<char> extract_choice(const std::string& text, const std::vector<char>& options) {
    if (options.empty()) return std::nullopt;
    auto in_options = [&](char c) {
        return std::find(options.begin(), options.end(), upper(c)) != options.end();
    };

    static constexpr std::string_view kMarker = "Answer:";
    const std::size_t marker = text.rfind(kMarker);
    if (marker != std::string::npos) {
        std::size_t i = marker + kMarker.size();
        while (i < text.size() &&
               (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == '(' ||
                text[i] == '[' || text[i] == '*' || text[i] == '"' || text[i] == '\'')) {
            ++i;
        }
        if (i < text.size() && in_options(text[i])) {
            const bool standalone = i + 1 >= text.size() || !is_word_char(text[i + 1]);
            if (standalone) return upper(text[i]);
        }
    }

    // fallback: last standalone option letter anywhere in the text
    std::optional<char> last;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!in_options(text[i])) continue;
        const bool left_ok = i == 0 || !is_word_char(text[i - 1]);
        const bool right_ok = i + 1 >= text.size() || !is_word_char(text[i + 1]);
        if (left_ok && right_ok) last = upper(text[i]);
    }
    return last;
}

std::string extract_final_answer(const std::string& text) {
    static constexpr std::string_view kMarker = "Final Answer:";
    const std::size_t marker = text.rfind(kMarker);
    if (marker == std::string::npos) return text;
    return trim_copy(text.substr(marker + kMarker.size()));
}

double mcq_accuracy_pct(int correct, int n) {
    if (n <= 0) throw ScoringError("accuracy over zero samples");
    if (correct < 0 || correct > n) throw ScoringError("correct count outside [0, n]");
    // half-up at 2 decimals, exact in integers: round(10000*correct/n)
    const long long hundredths = (20000LL * correct + n) / (2LL * n);
    return static_cast<double>(hundredths) / 100.0;
}

double round2_half_up(double v) {
    return std::floor(v * 100.0 + 0.5) / 100.0;
}

std::string format2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", round2_half_up(v));
    return buf;
}

std::vector<CategoryScore> score_mcq(const std::vector<ResultRecord>& records,
                                     const std::map<std::string, char>& gold) {
    std::map<QuestionCategory, std::pair<int, int>> tallies;  // kind -> (n, correct)
    for (const ResultRecord& record : records) {
        if (!record.kind) continue;  // unclassifiable, not attributable to a category
        auto& [n, correct] = tallies[*record.kind];
        n += 1;
        if (!is_mcq(*record.kind)) continue;
        auto it = gold.find(record.sample_id);
        if (it == gold.end()) {
            throw ScoringError("no gold label for scored record " + record.sample_id);
        }
        static const std::vector<char> kLetters = {'A', 'B', 'C', 'D', 'E', 'F'};
        const auto extracted = extract_choice(record.raw_text, kLetters);
        if (extracted && *extracted == upper(it->second)) correct += 1;
    }

    std::vector<CategoryScore> scores;
    for (QuestionCategory kind : kAllCategories) {
        auto it = tallies.find(kind);
        if (it == tallies.end()) continue;
        CategoryScore score;
        score.kind = kind;
        score.n = it->second.first;
        if (is_mcq(kind)) {
            score.correct = it->second.second;
            score.accuracy = mcq_accuracy_pct(it->second.second, it->second.first);
        }
        scores.push_back(score);
    }
    return scores;
}

RunReport aggregate(std::vector<CategoryScore> rows, std::string label) {
    if (rows.empty()) throw ScoringError("aggregate over zero categories");
    RunReport report;
    report.label = std::move(label);

    double macro_sum = 0.0;
    int macro_n = 0;
    double weighted_sum = 0.0;
    long long weight = 0;
    bool weights_complete = true;
    for (const CategoryScore& row : rows) {
        if (!row.accuracy) continue;
        macro_sum += *row.accuracy;
        macro_n += 1;
        if (row.n && *row.n > 0) {
            weighted_sum += *row.accuracy * *row.n;
            weight += *row.n;
        } else {
            weights_complete = false;
        }
    }
    if (macro_n > 0) report.macro_avg = round2_half_up(macro_sum / macro_n);
    if (weights_complete && weight > 0) {
        report.weighted_avg = round2_half_up(weighted_sum / static_cast<double>(weight));
    }
    report.rows = std::move(rows);
    return report;
}

namespace {

std::optional<double> headline_avg(const RunReport& report) {
    return report.weighted_avg ? report.weighted_avg : report.macro_avg;
}

std::string cell(const std::optional<double>& v) {
    return v ? format2(*v) : "--";
}

}  // namespace

std::string render_report(const std::vector<RunReport>& reports, ReportFormat format) {
    const char* delta_header = format == ReportFormat::Markdown ? "Δ" : "Delta";
    std::vector<std::string> header = {"Configuration"};
    for (QuestionCategory kind : kReportColumns) header.emplace_back(category_short(kind));
    header.emplace_back("Avg");
    header.emplace_back(delta_header);

    std::vector<std::vector<std::string>> table;
    std::optional<double> previous_avg;
    for (const RunReport& report : reports) {
        std::vector<std::string> line = {report.label};
        for (QuestionCategory kind : kReportColumns) {
            std::optional<double> acc;
            for (const CategoryScore& row : report.rows) {
                if (row.kind == kind) acc = row.accuracy;
            }
            line.push_back(cell(acc));
        }
        const std::optional<double> avg = headline_avg(report);
        line.push_back(cell(avg));
        if (avg && previous_avg) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%+.2f", round2_half_up(*avg - *previous_avg));
            line.emplace_back(buf);
        } else {
            line.emplace_back("--");
        }
        previous_avg = avg;
        table.push_back(std::move(line));
    }

    std::ostringstream os;
    if (format == ReportFormat::Csv) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) os << ',';
            os << header[i];
        }
        os << '\n';
        for (const auto& line : table) {
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (i) os << ',';
                os << line[i];
            }
            os << '\n';
        }
        return os.str();
    }

    os << "|";
    for (const std::string& h : header) os << ' ' << h << " |";
    os << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) os << "---|";
    os << "\n";
    for (const auto& line : table) {
        os << "|";
        for (const std::string& c : line) os << ' ' << c << " |";
        os << "\n";
    }
    return os.str();
}

std::string render_report(const RunReport& report, ReportFormat format) {
    return render_report(std::vector<RunReport>{report}, format);
}

std::map<std::string, char> load_gold(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScoringError("cannot open gold file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ScoringError("invalid JSON in " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ScoringError("gold file must be a JSON object");
    std::map<std::string, char> gold;
    for (const auto& [key, value] : doc.items()) {
        const std::string letter = value.get<std::string>();
        if (letter.size() != 1) {
            throw ScoringError("gold label for " + key + " is not a single letter");
        }
        gold[key] = upper(letter[0]);
    }
    return gold;
}

}  // namespace drivemop
