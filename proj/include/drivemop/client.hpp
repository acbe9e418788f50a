#pragma once

#include "drivemop/image.hpp"
#include "drivemop/prompts.hpp"
#include "drivemop/router.hpp"

#include "json.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drivemop {

struct ChatRequest {
    std::string model;
    std::vector<ChatTurn> turns;
    DecodingParams decoding;
    int max_tokens = 1024;
    std::string request_tag;  // sample_id
};

struct ChatUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    std::string finish_reason;
    ChatUsage usage;
    std::chrono::milliseconds latency{0};
    int attempts = 1;  // backend calls made, filled by send_chat
};

struct BackendConfig {
    std::string endpoint_url;
    std::string model;
    std::string api_key_env = "DRIVE_MOP_API_KEY";
    std::chrono::milliseconds timeout{120000};
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    unsigned jitter_seed = 0;  // 0 = nondeterministic
};

// All client failures carry the request tag so the runner can attribute them.
class ClientError : public std::runtime_error {
public:
    ClientError(const std::string& message, std::string request_tag);
    const std::string& request_tag() const { return tag_; }
    int attempts = 0;

private:
    std::string tag_;
};

class TransportError : public ClientError {  // timeouts, connection loss, 429, 5xx
public:
    using ClientError::ClientError;
};
class RequestError : public ClientError {  // non-retryable 4xx
public:
    using ClientError::ClientError;
};
class ProtocolError : public ClientError {  // malformed response body
public:
    using ClientError::ClientError;
};

// Base64 data-URL image part plus the caption text part that precedes it.
struct EncodedImagePart {
    std::string caption;
    std::string data_url;  // "data:image/png;base64,..."
};
EncodedImagePart encode_image(const Image& image);

std::string base64_encode(const std::uint8_t* data, std::size_t size);

// Wire body for POST /chat/completions; pure, so tests can pin every field.
nlohmann::json build_request_body(const ChatRequest& request);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Talks to any OpenAI-compatible endpoint. One HTTP exchange per complete();
// retries live in send_chat.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig config);
    ChatResponse complete(const ChatRequest& request) override;

private:
    BackendConfig cfg_;
};

// What a backend saw for one request, without the image payload bytes.
struct CapturedRequest {
    std::string request_tag;
    std::string model;
    DecodingParams decoding;
    int max_tokens = 0;
    std::vector<TurnRole> roles;  // one per turn
    std::size_t image_parts = 0;
    std::size_t text_parts = 0;

    int system_turns() const;
};

// Deterministic offline backend. Unscripted ids answer "Answer: A"; an id can
// be scripted with text and/or N leading transport failures.
class MockBackend : public ChatBackend {
public:
    struct Rule {
        std::optional<std::string> text;
        int fail_times = 0;
    };

    MockBackend() = default;
    explicit MockBackend(std::map<std::string, Rule> script);

    void script(const std::string& sample_id, std::string text, int fail_times = 0);
    void fail(const std::string& sample_id, int fail_times);

    ChatResponse complete(const ChatRequest& request) override;

    // Requests seen so far, for wire-fidelity assertions.
    std::vector<CapturedRequest> captured() const;

    static constexpr const char* kFallbackText = "Answer: A";

private:
    mutable std::mutex mu_;
    std::map<std::string, Rule> script_;
    std::map<std::string, int> failures_served_;
    std::vector<CapturedRequest> captured_;
};

// Retry loop around any backend: up to max_retries retries after the first
// attempt, exponential backoff with full jitter, only TransportError retried.
ChatResponse send_chat(const BackendConfig& config, ChatBackend& backend,
                       const ChatRequest& request);

}  // namespace drivemop
