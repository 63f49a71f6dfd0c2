#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexquad/corpus.hpp"
#include "lexquad/quadgen.hpp"

namespace lexquad {

inline constexpr std::string_view kAnalogyQuestion = "Question: Is Statute 1 to Case 1 as Statute 2 is to Case 2?";
inline constexpr std::string_view kZeroCotTrigger = "Let's think step by step";

enum class PromptKind { ZeroShot, FewShot, HandCraftedCoT };

std::string_view to_string(PromptKind kind);
/// "zero-shot" / "few-shot" / "cot"
PromptKind parse_prompt_kind(std::string_view token);

/// One bundled chain-of-thought demonstration with its own texts.
struct CotExemplar {
    std::string statute_1;
    std::string context_1;
    std::string hypothesis_1;
    std::string statute_2;
    std::string context_2;
    std::string hypothesis_2;
    std::string reasoning;
    AnalogyLabel answer = AnalogyLabel::NotAnalogy;
};

inline constexpr std::size_t kCotExemplarCount = 6;

/// Loads the line-delimited exemplar file; it must hold exactly six rows.
std::vector<CotExemplar> load_cot_exemplars(const std::filesystem::path& path);

struct PromptSpec {
    PromptKind kind = PromptKind::ZeroShot;
    /// Appends the zero-shot chain-of-thought trigger after the final "A:".
    bool zero_cot = false;
    /// Labeled training quadruples shown before the test block (FewShot).
    std::vector<Quadruple> exemplars;
    /// Demonstrations for HandCraftedCoT.
    std::vector<CotExemplar> cot;
};

/// Renders the prompt for `quad`. Each demonstration is a block of
///   Statute 1: ... / Case 1: Premise: ... Hypothesis 1: ... /
///   Statute 2: ... / Case 2: Premise: ... Hypothesis 2: ... /
///   Question: ... / A: Yes|No
/// separated by blank lines; the test block ends with "A:" (or
/// "A: Let's think step by step" when zero_cot is set).
/// Throws UsageError when exemplars are missing or share a case with `quad`,
/// DataError when ids do not resolve.
std::string build_prompt(const PromptSpec& spec, const QuadRef& quad, const Corpus& corpus);

/// Seeded choice of `n` labeled quadruples that share no case with `avoid`.
std::vector<Quadruple> select_exemplars(std::span<const Quadruple> pool, std::size_t n, std::uint64_t seed,
                                        const QuadRef* avoid = nullptr);

enum class Verdict { Yes, No, Abstain };

std::string_view to_string(Verdict v);

struct ParsedVerdict {
    Verdict verdict = Verdict::Abstain;
    std::string raw;
};

/// Case-insensitive, first rule that fires:
///  1. the last "the answer is yes|no";
///  2. a leading "yes"/"no" after whitespace and punctuation;
///  3. the last standalone "yes"/"no" word.
/// Anything else is an abstention. Never throws.
ParsedVerdict parse_verdict(std::string_view raw);

/// Yes -> Analogy, No -> NotAnalogy, Abstain -> nullopt.
std::optional<AnalogyLabel> to_analogy_label(Verdict v);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{500};
};

struct LlmEndpointConfig {
    /// Full endpoint URL, e.g. http://127.0.0.1:8080/v1/completions
    std::string base_url;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 256;
    std::string api_key_env = "LLM_API_KEY";
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
};

/// Throws UsageError for negative temperature, non-positive attempts or
/// tokens, or an unparsable URL.
void check_config(const LlmEndpointConfig& config);

/// Thread-safe line-delimited request/response log. The API key is never
/// written.
class RequestLog {
public:
    explicit RequestLog(std::ostream* out, std::string secret = {}) : out_(out), secret_(std::move(secret)) {}
    void write(std::string_view event, int attempt, int status, std::string_view body);
    void set_secret(std::string secret) { secret_ = std::move(secret); }

private:
    std::ostream* out_;
    std::string secret_;
    std::mutex mu_;
};

/// POSTs {model, prompt, temperature, max_tokens} and returns the completion
/// text. Transport failures and HTTP 429 are retried with exponential
/// backoff (base * 2^(attempt-1)). Throws UsageError when the key variable
/// is unset (before any network traffic) and ExternalError on exhausted
/// retries or a terminal non-2xx status.
std::string query_llm(const LlmEndpointConfig& config, std::string_view prompt, RequestLog* log = nullptr);

/// Extracts the completion text from the common response shapes:
/// {choices:[{text}]}, {choices:[{message:{content}}]}, {text}, {completion}.
std::string extract_completion(std::string_view body);

/// Token bucket: `rate` tokens per second, capacity `burst`.
class TokenBucket {
public:
    TokenBucket(double rate, double burst);
    void acquire();

private:
    double rate_;
    double burst_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

struct LlmJob {
    std::string quad_id;
    std::string prompt;
};

struct LlmOutcome {
    std::string quad_id;
    ParsedVerdict parsed;
};

/// Runs every job with at most `max_in_flight` concurrent requests, paced by
/// `requests_per_second` (<= 0 disables pacing). Results keep job order.
std::vector<LlmOutcome> run_llm_jobs(const LlmEndpointConfig& config, std::span<const LlmJob> jobs,
                                     std::size_t max_in_flight, double requests_per_second,
                                     RequestLog* log = nullptr);

}  // namespace lexquad
