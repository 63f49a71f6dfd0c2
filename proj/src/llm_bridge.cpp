#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "lexquad/llm_bridge.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <ostream>
#include <regex>
#include <sstream>
#include <thread>

#include "lexquad/errors.hpp"
#include "lexquad/io.hpp"
#include "lexquad/sampling.hpp"

namespace lexquad {

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::ZeroShot:
            return "zero-shot";
        case PromptKind::FewShot:
            return "few-shot";
        case PromptKind::HandCraftedCoT:
            return "cot";
    }
    return "zero-shot";
}

PromptKind parse_prompt_kind(std::string_view token) {
    for (auto k : {PromptKind::ZeroShot, PromptKind::FewShot, PromptKind::HandCraftedCoT}) {
        if (token == to_string(k)) {
            return k;
        }
    }
    throw UsageError("unknown prompt kind '" + std::string(token) + "' (expected zero-shot, few-shot or cot)");
}

std::vector<CotExemplar> load_cot_exemplars(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<CotExemplar> out;
    for_each_jsonl(in, [&](std::size_t line, const Json& rec) {
        CotExemplar ex;
        ex.statute_1 = require_string(rec, "statute_1", line);
        ex.context_1 = optional_string(rec, "context_1", line);
        ex.hypothesis_1 = require_string(rec, "hypothesis_1", line);
        ex.statute_2 = require_string(rec, "statute_2", line);
        ex.context_2 = optional_string(rec, "context_2", line);
        ex.hypothesis_2 = require_string(rec, "hypothesis_2", line);
        ex.reasoning = require_string(rec, "reasoning", line);
        const auto answer = require_string(rec, "answer", line);
        if (answer == "yes") {
            ex.answer = AnalogyLabel::Analogy;
        } else if (answer == "no") {
            ex.answer = AnalogyLabel::NotAnalogy;
        } else {
            throw ParseError(line, "answer must be \"yes\" or \"no\", got '" + answer + "'");
        }
        out.push_back(std::move(ex));
    });
    if (out.size() != kCotExemplarCount) {
        throw DataError(path.string() + ": expected " + std::to_string(kCotExemplarCount) +
                        " chain-of-thought exemplars, found " + std::to_string(out.size()));
    }
    return out;
}

namespace {

struct BlockTexts {
    std::string_view statute_1, context_1, hypothesis_1;
    std::string_view statute_2, context_2, hypothesis_2;
};

void render_case(std::ostream& out, int n, std::string_view context, std::string_view hypothesis) {
    out << "Case " << n << ": ";
    if (!context.empty()) {
        out << "Premise: " << context << ' ';
    }
    out << "Hypothesis " << n << ": " << hypothesis << '\n';
}

void render_block(std::ostream& out, const BlockTexts& t) {
    out << "Statute 1: " << t.statute_1 << '\n';
    render_case(out, 1, t.context_1, t.hypothesis_1);
    out << "Statute 2: " << t.statute_2 << '\n';
    render_case(out, 2, t.context_2, t.hypothesis_2);
    out << kAnalogyQuestion << '\n';
}

BlockTexts texts_of(const Corpus& corpus, const QuadRef& q) {
    const auto& c1 = corpus.get_case(q.first.case_id);
    const auto& c2 = corpus.get_case(q.second.case_id);
    return {corpus.statute(q.first.statute_id).text, c1.context, c1.hypothesis,
            corpus.statute(q.second.statute_id).text, c2.context, c2.hypothesis};
}

bool shares_case(const QuadRef& a, const QuadRef& b) {
    for (const auto* x : {&a.first.case_id, &a.second.case_id}) {
        if (*x == b.first.case_id || *x == b.second.case_id) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::string build_prompt(const PromptSpec& spec, const QuadRef& quad, const Corpus& corpus) {
    std::ostringstream out;
    switch (spec.kind) {
        case PromptKind::ZeroShot:
            break;
        case PromptKind::FewShot:
            if (spec.exemplars.empty()) {
                throw UsageError("few-shot prompt without exemplars");
            }
            for (const auto& ex : spec.exemplars) {
                if (shares_case(ex, quad)) {
                    throw UsageError("exemplar " + ex.quad_id() + " shares a case with " + quad.quad_id());
                }
                render_block(out, texts_of(corpus, ex));
                out << "A: " << (ex.label == AnalogyLabel::Analogy ? "Yes" : "No") << "\n\n";
            }
            break;
        case PromptKind::HandCraftedCoT:
            if (spec.cot.size() != kCotExemplarCount) {
                throw UsageError("chain-of-thought prompt needs exactly " + std::to_string(kCotExemplarCount) +
                                 " exemplars, got " + std::to_string(spec.cot.size()));
            }
            for (const auto& ex : spec.cot) {
                render_block(out, {ex.statute_1, ex.context_1, ex.hypothesis_1, ex.statute_2, ex.context_2,
                                   ex.hypothesis_2});
                out << "A: " << ex.reasoning << " Therefore, the answer is "
                    << (ex.answer == AnalogyLabel::Analogy ? "yes" : "no") << ".\n\n";
            }
            break;
    }
    render_block(out, texts_of(corpus, quad));
    out << "A:";
    if (spec.zero_cot) {
        out << ' ' << kZeroCotTrigger;
    }
    return out.str();
}

std::vector<Quadruple> select_exemplars(std::span<const Quadruple> pool, std::size_t n, std::uint64_t seed,
                                        const QuadRef* avoid) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (avoid == nullptr || !shares_case(pool[i], *avoid)) {
            eligible.push_back(i);
        }
    }
    if (n > eligible.size()) {
        throw UsageError("asked for " + std::to_string(n) + " exemplars but only " +
                         std::to_string(eligible.size()) + " are eligible");
    }
    std::vector<Quadruple> out;
    for (auto idx : sample_without_replacement(eligible.size(), n, seed)) {
        out.push_back(pool[eligible[idx]]);
    }
    return out;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Yes:
            return "yes";
        case Verdict::No:
            return "no";
        case Verdict::Abstain:
            return "abstain";
    }
    return "abstain";
}

namespace {

Verdict verdict_of(std::string word) {
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
    return word == "yes" ? Verdict::Yes : Verdict::No;
}

std::optional<Verdict> last_match(const std::string& text, const std::regex& re) {
    std::optional<Verdict> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        found = verdict_of((*it)[1].str());
    }
    return found;
}

}  // namespace

ParsedVerdict parse_verdict(std::string_view raw) {
    static const std::regex answer_is(R"(the\s+answer\s+is\s*[:"'*]*\s*(yes|no)\b)", std::regex::icase);
    static const std::regex word(R"(\b(yes|no)\b)", std::regex::icase);

    ParsedVerdict out{Verdict::Abstain, std::string(raw)};
    if (auto v = last_match(out.raw, answer_is)) {
        out.verdict = *v;
        return out;
    }
    std::size_t i = 0;
    while (i < raw.size() && (std::isspace(static_cast<unsigned char>(raw[i])) ||
                              std::ispunct(static_cast<unsigned char>(raw[i])))) {
        ++i;
    }
    std::size_t j = i;
    while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) {
        ++j;
    }
    std::string lead(raw.substr(i, j - i));
    std::transform(lead.begin(), lead.end(), lead.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lead == "yes" || lead == "no") {
        out.verdict = verdict_of(lead);
        return out;
    }
    if (auto v = last_match(out.raw, word)) {
        out.verdict = *v;
    }
    return out;
}

std::optional<AnalogyLabel> to_analogy_label(Verdict v) {
    switch (v) {
        case Verdict::Yes:
            return AnalogyLabel::Analogy;
        case Verdict::No:
            return AnalogyLabel::NotAnalogy;
        case Verdict::Abstain:
            return std::nullopt;
    }
    return std::nullopt;
}

namespace {

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw UsageError("endpoint URL '" + url + "' is not of the form http(s)://host[:port]/path");
    }
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

}  // namespace

void check_config(const LlmEndpointConfig& config) {
    split_url(config.base_url);
    if (config.model.empty()) {
        throw UsageError("model name is empty");
    }
    if (!(config.temperature >= 0.0)) {
        throw UsageError("temperature must be non-negative");
    }
    if (config.max_tokens <= 0) {
        throw UsageError("max_tokens must be positive");
    }
    if (config.retry.max_attempts <= 0) {
        throw UsageError("max_attempts must be positive");
    }
    if (config.api_key_env.empty()) {
        throw UsageError("api_key_env is empty");
    }
}

void RequestLog::write(std::string_view event, int attempt, int status, std::string_view body) {
    if (out_ == nullptr) {
        return;
    }
    std::string text(body);
    if (!secret_.empty()) {
        constexpr std::string_view kMask = "[redacted]";
        for (auto pos = text.find(secret_); pos != std::string::npos; pos = text.find(secret_, pos + kMask.size())) {
            text.replace(pos, secret_.size(), kMask);
        }
    }
    OrderedJson rec;
    rec["ts"] = utc_timestamp();
    rec["event"] = event;
    rec["attempt"] = attempt;
    rec["status"] = status;
    rec["body"] = std::move(text);
    const std::lock_guard lock(mu_);
    *out_ << rec.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
    out_->flush();
}

std::string extract_completion(std::string_view body) {
    const auto doc = Json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ExternalError("LLM response is not a JSON object");
    }
    if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
        const auto& c = doc["choices"][0];
        if (c.contains("text") && c["text"].is_string()) {
            return c["text"].get<std::string>();
        }
        if (c.contains("message") && c["message"].is_object() && c["message"].contains("content") &&
            c["message"]["content"].is_string()) {
            return c["message"]["content"].get<std::string>();
        }
    }
    for (const char* field : {"text", "completion"}) {
        if (doc.contains(field) && doc[field].is_string()) {
            return doc[field].get<std::string>();
        }
    }
    throw ExternalError("LLM response carries no completion text");
}

std::string query_llm(const LlmEndpointConfig& config, std::string_view prompt, RequestLog* log) {
    check_config(config);
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw UsageError("environment variable " + config.api_key_env + " is not set");
    }
    if (log != nullptr) {
        log->set_secret(key);
    }
    const auto url = split_url(config.base_url);

    OrderedJson req;
    req["model"] = config.model;
    req["prompt"] = prompt;
    req["temperature"] = config.temperature;
    req["max_tokens"] = config.max_tokens;
    const auto payload = req.dump();

    httplib::Client client(url.origin);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    client.set_write_timeout(config.timeout);
    const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    std::string last_failure;
    for (int attempt = 1; attempt <= config.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(config.retry.backoff_base * (1LL << (attempt - 2)));
        }
        if (log != nullptr) {
            log->write("request", attempt, 0, payload);
        }
        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            if (log != nullptr) {
                log->write("error", attempt, 0, last_failure);
            }
            continue;
        }
        if (log != nullptr) {
            log->write("response", attempt, res->status, res->body);
        }
        if (res->status == 429) {
            last_failure = "HTTP 429 (rate limited)";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw ExternalError("LLM endpoint returned HTTP " + std::to_string(res->status));
        }
        return extract_completion(res->body);
    }
    throw ExternalError("LLM endpoint failed after " + std::to_string(config.retry.max_attempts) +
                        " attempts: " + last_failure);
}

TokenBucket::TokenBucket(double rate, double burst)
    : rate_(rate), burst_(std::max(burst, 1.0)), tokens_(burst_), last_(std::chrono::steady_clock::now()) {
    if (!(rate > 0.0)) {
        throw UsageError("token bucket rate must be positive");
    }
}

void TokenBucket::acquire() {
    for (;;) {
        std::chrono::duration<double> wait{};
        {
            const std::lock_guard lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        }
        std::this_thread::sleep_for(wait);
    }
}

std::vector<LlmOutcome> run_llm_jobs(const LlmEndpointConfig& config, std::span<const LlmJob> jobs,
                                     std::size_t max_in_flight, double requests_per_second, RequestLog* log) {
    if (max_in_flight == 0) {
        throw UsageError("max_in_flight must be positive");
    }
    check_config(config);
    std::optional<TokenBucket> bucket;
    if (requests_per_second > 0.0) {
        bucket.emplace(requests_per_second, 1.0);
    }
    std::vector<LlmOutcome> out(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mu;

    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= jobs.size() || failed) {
                return;
            }
            try {
                if (bucket) {
                    bucket->acquire();
                }
                const auto text = query_llm(config, jobs[i].prompt, log);
                out[i] = {jobs[i].quad_id, parse_verdict(text)};
            } catch (...) {
                const std::lock_guard lock(err_mu);
                if (!failed.exchange(true)) {
                    first_error = std::current_exception();
                }
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(max_in_flight, jobs.size()); ++t) {
            pool.emplace_back(worker);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return out;
}

}  // namespace lexquad
