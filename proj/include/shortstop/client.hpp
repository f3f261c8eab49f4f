#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "shortstop/domain.hpp"
#include "shortstop/errors.hpp"

namespace shortstop {

struct CompletionRequest {
    std::string model_id;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 1.0;
    std::optional<int64_t> seed;
    std::optional<int> max_tokens;
};

enum class EventKind { delta, usage, done, error };

// One increment of a completion stream. tokens_so_far is nondecreasing within
// a stream; exactly one terminal done/error event is emitted per stream.
struct StreamEvent {
    EventKind kind = EventKind::delta;
    std::optional<std::string> text_delta;
    std::optional<int64_t> tokens_so_far;
    std::optional<std::string> finish_reason;
};

struct EmbeddingVector {
    std::vector<double> values;
    int d() const { return static_cast<int>(values.size()); }
};

// Cooperative cancellation shared between the race controller and a stream's
// worker thread. Requesting twice is the same as once.
class CancelToken {
public:
    CancelToken() : flag_(std::make_shared<std::atomic<bool>>(false)) {}
    void request_cancel() { flag_->store(true, std::memory_order_relaxed); }
    bool cancelled() const { return flag_->load(std::memory_order_relaxed); }

private:
    std::shared_ptr<std::atomic<bool>> flag_;
};

// Final accounting for one stream. Transport failures are reported here (with
// the partial text preserved for trace audit) rather than thrown, so a race
// can fold errored streams into its record without unwinding.
struct StreamResult {
    Finish finish = Finish::errored;
    std::string cot_text;    // reasoning channel, or the full content when the
                             // endpoint has no separate reasoning stream
    std::string answer_text; // content channel (what grading reads)
    int64_t gen_tokens = 0;
    int64_t finish_tick = 0; // tokens_so_far at termination
    std::optional<Errc> error;
    std::string error_message;
};

using EventCallback = std::function<void(const StreamEvent&)>;

// OpenAI-compatible streaming chat client.
//
// Wire format: POST {base_url}/v1/chat/completions with stream:true; the
// response is server-sent events ("data: {json}" lines ending in
// "data: [DONE]"). When the endpoint does not stream usage counts,
// tokens_so_far counts delta events; a final usage object overrides the
// total. Credentials come from the API_KEY environment variable.
class ChatClient {
public:
    ChatClient(std::string base_url, std::string api_key = api_key_from_env());

    // Blocks until the stream terminates. Events are delivered on the calling
    // thread. Cancellation (from any thread) terminates the stream within a
    // bounded number of further events and marks the result cancelled.
    StreamResult stream_completion(const CompletionRequest& request,
                                   const EventCallback& on_event,
                                   const CancelToken& cancel) const;

    // True when the endpoint answers HTTP at all (any status code): a cheap
    // pre-flight so a benchmark fails fast instead of erroring per problem.
    bool reachable() const;

    static std::string api_key_from_env();

private:
    std::string base_url_;
    std::string api_key_;
};

// Incremental server-sent-events splitter: feed raw body chunks, get the
// payload of each complete "data:" line. Returns false once "[DONE]" is seen.
class SseLineParser {
public:
    // on_data is invoked per data payload; feed returns false after [DONE].
    bool feed(std::string_view chunk, const std::function<void(std::string_view)>& on_data);
    bool done() const { return done_; }

private:
    std::string buffer_;
    bool done_ = false;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    // One vector per input text, same order, common dimension.
    // Throws EmptyInput / HttpStatus / DimensionMismatch / ConnectFailed.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
};

// POST {base_url}/v1/embeddings with {model, input:[...]}.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(std::string base_url, std::string model_id,
                 std::string api_key = ChatClient::api_key_from_env());
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

private:
    std::string base_url_;
    std::string model_id_;
    std::string api_key_;
};

// Deterministic offline embedder: each word hashes to a pseudo-random
// direction in R^32 and a text embeds to the normalized sum (a hashed
// bag of words). Cosine distance between two chunks then tracks the fraction
// of differing words, which is exactly what the divergence analyses need from
// an embedding; a single hash of the whole chunk would make any one-word
// difference look like total divergence.
class FakeEmbedder : public Embedder {
public:
    static constexpr int kDim = 32;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
    static EmbeddingVector embed_one(std::string_view text);
};

} // namespace shortstop
