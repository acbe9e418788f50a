#include "drivemop/client.hpp"

#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

namespace drivemop {

ClientError::ClientError(const std::string& message, std::string request_tag)
    : std::runtime_error(message + " [request " + request_tag + "]"), tag_(std::move(request_tag)) {}

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
    static constexpr char kAlphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= size; i += 3) {
        const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    if (i + 1 == size) {
        const std::uint32_t v = data[i] << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == size) {
        const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

EncodedImagePart encode_image(const Image& image) {
    const std::vector<std::uint8_t> png = encode_png(image);
    EncodedImagePart part;
    part.caption = image.caption;
    part.data_url = "data:image/png;base64," + base64_encode(png.data(), png.size());
    return part;
}

namespace {

std::string role_name(TurnRole role) {
    switch (role) {
        case TurnRole::System: return "system";
        case TurnRole::User: return "user";
        case TurnRole::Assistant: return "assistant";
    }
    return "user";
}

}  // namespace

nlohmann::json build_request_body(const ChatRequest& request) {
    check_decoding(request.decoding);
    nlohmann::json messages = nlohmann::json::array();
    for (const ChatTurn& turn : request.turns) {
        nlohmann::json content = nlohmann::json::array();
        for (const ChatPart& part : turn.parts) {
            if (const auto* text = std::get_if<TextPart>(&part)) {
                content.push_back({{"type", "text"}, {"text", text->text}});
            } else {
                const auto& image = std::get<ImagePart>(part).image;
                EncodedImagePart encoded = encode_image(image);
                // caption first so the model sees the label next to its image
                content.push_back({{"type", "text"}, {"text", encoded.caption}});
                content.push_back(
                    {{"type", "image_url"}, {"image_url", {{"url", encoded.data_url}}}});
            }
        }
        messages.push_back({{"role", role_name(turn.role)}, {"content", std::move(content)}});
    }
    return nlohmann::json{{"model", request.model},
                          {"messages", std::move(messages)},
                          {"temperature", request.decoding.temperature},
                          {"top_p", request.decoding.top_p},
                          {"max_tokens", request.max_tokens}};
}

HttpBackend::HttpBackend(BackendConfig config) : cfg_(std::move(config)) {
    if (cfg_.timeout.count() <= 0) throw std::invalid_argument("backend timeout must be positive");
    if (cfg_.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path_prefix;
};

SplitUrl split_endpoint(const std::string& url, const std::string& tag) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw RequestError("endpoint URL \"" + url + "\" lacks a scheme", tag);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

}  // namespace

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    const SplitUrl url = split_endpoint(cfg_.endpoint_url, request.request_tag);

    httplib::Client client(url.base);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    const std::string body = build_request_body(request).dump();
    const auto t0 = std::chrono::steady_clock::now();
    httplib::Result result =
        client.Post(url.path_prefix + "/chat/completions", headers, body, "application/json");
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - t0);

    if (!result) {
        throw TransportError("connection failed: " + httplib::to_string(result.error()),
                             request.request_tag);
    }
    if (result->status == 429 || result->status >= 500) {
        throw TransportError("HTTP " + std::to_string(result->status), request.request_tag);
    }
    if (result->status != 200) {
        throw RequestError("HTTP " + std::to_string(result->status) + ": " + result->body,
                           request.request_tag);
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what(),
                            request.request_tag);
    }

    ChatResponse response;
    response.latency = latency;
    try {
        const auto& choice = doc.at("choices").at(0);
        const auto& message = choice.at("message");
        if (message.at("content").is_string()) {
            response.text = message.at("content").get<std::string>();
        } else {
            throw ProtocolError("message content is not a string", request.request_tag);
        }
        response.finish_reason = choice.value("finish_reason", "");
        if (doc.contains("usage")) {
            response.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
            response.usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("unexpected response shape: ") + e.what(),
                            request.request_tag);
    }
    if (response.text.empty() && (response.finish_reason.empty() || response.finish_reason == "stop")) {
        throw ProtocolError("empty completion text on normal stop", request.request_tag);
    }
    return response;
}

int CapturedRequest::system_turns() const {
    int n = 0;
    for (TurnRole role : roles) {
        if (role == TurnRole::System) ++n;
    }
    return n;
}

MockBackend::MockBackend(std::map<std::string, Rule> script) : script_(std::move(script)) {}

void MockBackend::script(const std::string& sample_id, std::string text, int fail_times) {
    std::lock_guard lock(mu_);
    script_[sample_id] = Rule{std::move(text), fail_times};
}

void MockBackend::fail(const std::string& sample_id, int fail_times) {
    std::lock_guard lock(mu_);
    script_[sample_id].fail_times = fail_times;
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mu_);
    CapturedRequest seen;
    seen.request_tag = request.request_tag;
    seen.model = request.model;
    seen.decoding = request.decoding;
    seen.max_tokens = request.max_tokens;
    for (const ChatTurn& turn : request.turns) {
        seen.roles.push_back(turn.role);
        for (const ChatPart& part : turn.parts) {
            if (std::holds_alternative<ImagePart>(part)) {
                ++seen.image_parts;
            } else {
                ++seen.text_parts;
            }
        }
    }
    captured_.push_back(std::move(seen));

    auto it = script_.find(request.request_tag);
    if (it != script_.end() && failures_served_[request.request_tag] < it->second.fail_times) {
        ++failures_served_[request.request_tag];
        throw TransportError("injected failure", request.request_tag);
    }
    ChatResponse response;
    response.text = (it != script_.end() && it->second.text) ? *it->second.text : kFallbackText;
    response.finish_reason = "stop";
    response.latency = std::chrono::milliseconds(0);
    return response;
}

std::vector<CapturedRequest> MockBackend::captured() const {
    std::lock_guard lock(mu_);
    return captured_;
}

ChatResponse send_chat(const BackendConfig& config, ChatBackend& backend,
                       const ChatRequest& request) {
    std::mt19937_64 rng(config.jitter_seed != 0 ? config.jitter_seed : std::random_device{}());
    const int max_attempts = std::max(0, config.max_retries) + 1;
    for (int attempt = 1;; ++attempt) {
        try {
            ChatResponse response = backend.complete(request);
            response.attempts = attempt;
            return response;
        } catch (TransportError& e) {
            if (attempt >= max_attempts) {
                e.attempts = attempt;
                throw;
            }
            // exponential backoff, full jitter
            const auto ceiling = config.backoff_base.count() * (1LL << (attempt - 1));
            if (ceiling > 0) {
                std::uniform_int_distribution<long long> jitter(0, ceiling);
                std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
            }
        } catch (ClientError& e) {
            e.attempts = attempt;
            throw;
        }
    }
}

}  // namespace drivemop
