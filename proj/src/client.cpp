#include "shortstop/client.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "shortstop/rng.hpp"

namespace shortstop {

namespace {

// Splits "http://host:port/prefix" into client target and path prefix.
struct ParsedUrl {
    std::string host_port; // scheme://host:port, what httplib::Client takes
    std::string prefix;    // path prefix, possibly empty
};

ParsedUrl parse_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    size_t path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

httplib::Headers auth_headers(const std::string& api_key) {
    httplib::Headers h;
    if (!api_key.empty()) h.emplace("Authorization", "Bearer " + api_key);
    return h;
}

} // namespace

ChatClient::ChatClient(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

std::string ChatClient::api_key_from_env() {
    const char* v = std::getenv("API_KEY");
    return v ? v : "";
}

bool ChatClient::reachable() const {
    ParsedUrl url = parse_base_url(base_url_);
    httplib::Client cli(url.host_port);
    cli.set_connection_timeout(3, 0);
    cli.set_read_timeout(5, 0);
    auto res = cli.Get(url.prefix + "/v1/models", auth_headers(api_key_));
    return res != nullptr;
}

bool SseLineParser::feed(std::string_view chunk,
                         const std::function<void(std::string_view)>& on_data) {
    if (done_) return false;
    buffer_.append(chunk);
    size_t start = 0;
    while (true) {
        size_t nl = buffer_.find('\n', start);
        if (nl == std::string::npos) break;
        std::string_view line(buffer_.data() + start, nl - start);
        start = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.starts_with("data:")) continue; // other SSE fields / comments
        line.remove_prefix(5);
        if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line == "[DONE]") {
            done_ = true;
            break;
        }
        if (!line.empty()) on_data(line);
    }
    buffer_.erase(0, start);
    return !done_;
}

StreamResult ChatClient::stream_completion(const CompletionRequest& request,
                                           const EventCallback& on_event,
                                           const CancelToken& cancel) const {
    nlohmann::json body = {
        {"model", request.model_id},
        {"messages",
         {{{"role", "system"}, {"content", request.system_prompt}},
          {{"role", "user"}, {"content", request.user_prompt}}}},
        {"temperature", request.temperature},
        {"stream", true},
    };
    if (request.seed) body["seed"] = *request.seed;
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;

    ParsedUrl url = parse_base_url(base_url_);
    httplib::Client cli(url.host_port);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(300, 0);
    cli.set_write_timeout(30, 0);

    StreamResult result;
    std::string reasoning_text;
    std::string content_text;
    int64_t delta_count = 0;
    std::optional<int64_t> usage_tokens;
    std::optional<std::string> finish_reason;
    bool malformed = false;
    std::string malformed_message;
    SseLineParser parser;

    auto tokens_now = [&]() { return usage_tokens.value_or(delta_count); };

    auto handle_data = [&](std::string_view payload) {
        if (malformed) return;
        nlohmann::json j = nlohmann::json::parse(payload, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            malformed = true;
            malformed_message = "unparseable stream event";
            return;
        }
        if (j.contains("usage") && j["usage"].is_object()) {
            const auto& u = j["usage"];
            if (u.contains("completion_tokens"))
                usage_tokens = u["completion_tokens"].get<int64_t>();
            StreamEvent ev;
            ev.kind = EventKind::usage;
            ev.tokens_so_far = tokens_now();
            on_event(ev);
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            return;
        const auto& choice = j["choices"][0];
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
            finish_reason = choice["finish_reason"].get<std::string>();
        if (!choice.contains("delta") || !choice["delta"].is_object()) return;
        const auto& delta = choice["delta"];
        std::string piece;
        if (delta.contains("reasoning_content") && delta["reasoning_content"].is_string()) {
            std::string r = delta["reasoning_content"].get<std::string>();
            reasoning_text += r;
            piece += r;
        }
        if (delta.contains("content") && delta["content"].is_string()) {
            std::string c = delta["content"].get<std::string>();
            content_text += c;
            piece += c;
        }
        if (piece.empty()) return;
        ++delta_count;
        StreamEvent ev;
        ev.kind = EventKind::delta;
        ev.text_delta = std::move(piece);
        ev.tokens_so_far = tokens_now();
        on_event(ev);
    };

    auto receiver = [&](const char* data, size_t len, uint64_t /*offset*/,
                        uint64_t /*total*/) {
        if (cancel.cancelled()) return false;
        parser.feed(std::string_view(data, len), handle_data);
        if (malformed) return false;
        return !parser.done();
    };

    httplib::Request req;
    req.method = "POST";
    req.path = url.prefix + "/v1/chat/completions";
    req.headers = auth_headers(api_key_);
    req.headers.emplace("Accept", "text/event-stream");
    req.headers.emplace("Content-Type", "application/json");
    req.body = body.dump();
    req.content_receiver = receiver;
    auto res = cli.send(req);

    auto fill_texts = [&] {
        if (!reasoning_text.empty()) {
            result.cot_text = reasoning_text;
            result.answer_text = content_text;
        } else {
            // No separate reasoning channel: the content is both the chain of
            // thought (for text analyses) and the answer (for extraction).
            result.cot_text = content_text;
            result.answer_text = content_text;
        }
        result.gen_tokens = tokens_now();
        result.finish_tick = tokens_now();
    };

    auto terminal = [&](EventKind kind, const std::string& reason) {
        StreamEvent ev;
        ev.kind = kind;
        ev.tokens_so_far = tokens_now();
        if (!reason.empty()) ev.finish_reason = reason;
        on_event(ev);
    };

    if (cancel.cancelled()) {
        fill_texts();
        result.finish = Finish::cancelled;
        terminal(EventKind::done, "cancelled");
        return result;
    }
    if (malformed) {
        fill_texts();
        result.finish = Finish::errored;
        result.error = Errc::MalformedEvent;
        result.error_message = malformed_message;
        terminal(EventKind::error, "malformed");
        return result;
    }
    // [DONE] means the stream finished no matter what the transport reports
    // afterwards: our receiver stops reading at that point, which the HTTP
    // layer surfaces as a cancelled transfer.
    if (parser.done()) {
        fill_texts();
        result.finish = Finish::completed;
        terminal(EventKind::done, finish_reason.value_or("stop"));
        return result;
    }
    if (res && res->status != 200) {
        fill_texts();
        result.finish = Finish::errored;
        result.error = Errc::HttpStatus;
        result.error_message = "HTTP " + std::to_string(res->status);
        terminal(EventKind::error, "http_status");
        return result;
    }
    fill_texts();
    result.finish = Finish::errored;
    if (delta_count > 0) {
        // produced events, then the body ended or dropped without [DONE]
        result.error = Errc::Disconnected;
        result.error_message =
            "stream ended without [DONE] after " + std::to_string(result.gen_tokens) +
            " tokens";
    } else if (!res) {
        result.error = Errc::ConnectFailed;
        result.error_message = httplib::to_string(res.error());
    } else {
        result.error = Errc::Disconnected;
        result.error_message = "empty event stream";
    }
    terminal(EventKind::error, "transport");
    return result;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model_id, std::string api_key)
    : base_url_(std::move(base_url)),
      model_id_(std::move(model_id)),
      api_key_(std::move(api_key)) {}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) raise(Errc::EmptyInput, "embed_batch on empty list");
    for (const auto& t : texts)
        if (t.empty()) raise(Errc::EmptyInput, "embed_batch with empty text");

    nlohmann::json body = {{"model", model_id_}, {"input", texts}};
    ParsedUrl url = parse_base_url(base_url_);
    httplib::Client cli(url.host_port);
    cli.set_connection_timeout(10, 0);
    cli.set_read_timeout(120, 0);
    auto res = cli.Post(url.prefix + "/v1/embeddings", auth_headers(api_key_), body.dump(),
                        "application/json");
    if (!res) raise(Errc::ConnectFailed, httplib::to_string(res.error()));
    if (res->status != 200) raise(Errc::HttpStatus, "HTTP " + std::to_string(res->status));

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array())
        raise(Errc::MalformedEvent, "embeddings response is not {data:[...]}");

    std::vector<EmbeddingVector> out(texts.size());
    std::vector<bool> seen(texts.size(), false);
    for (const auto& item : j["data"]) {
        size_t idx = item.at("index").get<size_t>();
        if (idx >= out.size())
            raise(Errc::MalformedEvent, "embedding index out of range");
        out[idx].values = item.at("embedding").get<std::vector<double>>();
        seen[idx] = true;
    }
    for (size_t i = 0; i < out.size(); ++i) {
        if (!seen[i]) raise(Errc::MalformedEvent, "missing embedding for input " + std::to_string(i));
        if (out[i].d() != out[0].d())
            raise(Errc::DimensionMismatch,
                  "dimension " + std::to_string(out[i].d()) + " vs " + std::to_string(out[0].d()));
        for (double v : out[i].values)
            if (!std::isfinite(v)) raise(Errc::MalformedEvent, "non-finite embedding value");
    }
    return out;
}

EmbeddingVector FakeEmbedder::embed_one(std::string_view text) {
    constexpr uint64_t kWordSeed = 0x5eedbed5eedbed01ULL;
    std::array<double, kDim> acc{};
    auto add_word = [&](std::string_view w) {
        uint64_t h = hash_str(kWordSeed, w);
        for (int j = 0; j < kDim; ++j) {
            uint64_t hj = splitmix64(h + static_cast<uint64_t>(j));
            // signed fraction in [-1, 1)
            acc[j] += static_cast<double>(static_cast<int64_t>(hj)) * 0x1.0p-63;
        }
    };
    auto words = split_words(text);
    if (words.empty()) {
        add_word(text); // degenerate input: hash the raw bytes as one token
    } else {
        for (auto w : words) add_word(w);
    }
    double norm_sq = 0;
    for (double v : acc) norm_sq += v * v;
    EmbeddingVector out;
    out.values.assign(acc.begin(), acc.end());
    if (norm_sq > 0) {
        double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : out.values) v *= inv;
    } else {
        out.values[0] = 1.0; // all-cancelling sum; pick a fixed direction
    }
    return out;
}

std::vector<EmbeddingVector> FakeEmbedder::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) raise(Errc::EmptyInput, "embed_batch on empty list");
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.empty()) raise(Errc::EmptyInput, "embed_batch with empty text");
        out.push_back(embed_one(t));
    }
    return out;
}

} // namespace shortstop
