#pragma once

// HTTP adapters for hosted predictors and scorers, plus an HTTP fetcher for
// source archives. Request building and response parsing are separate
// functions so they can be tested without a network.

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "liftbench/corpus.hpp"
#include "liftbench/gateway.hpp"

namespace liftbench {

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POST when body is non-empty, GET otherwise. Throws RetryableFailure on
/// transport errors.
using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

HttpTransport make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(300));

/// 2xx passes; 429 and 5xx throw RetryableFailure; anything else ProviderError.
void check_http_status(const HttpResponse& resp, const std::string& what);

/// Reads an API key from the environment. Throws ProviderError when unset.
std::string credential_from_env(const std::string& variable);

// OpenAI Responses API.
Json openai_responses_request(const std::string& prompt, const PredictorSetting& setting);
PredictorResponse parse_openai_responses(const Json& body);

class OpenAIResponsesPredictor : public PredictorBackend {
 public:
  OpenAIResponsesPredictor(std::string base_url, std::string api_key, HttpTransport transport);
  PredictorResponse generate(const std::string& prompt, const PredictorSetting& setting) override;

 private:
  std::string base_url_, api_key_;
  HttpTransport transport_;
};

// Anthropic Messages API. Hidden reasoning is not reported separately, so
// hidden_reasoning_tokens stays empty.
struct AnthropicOptions {
  long max_tokens = 32000;
  long thinking_budget_low = 2048;
  long thinking_budget_medium = 8192;
  long thinking_budget_high = 24576;
};

Json anthropic_messages_request(const std::string& prompt, const PredictorSetting& setting,
                                const AnthropicOptions& options = {});
PredictorResponse parse_anthropic_messages(const Json& body);

class AnthropicMessagesPredictor : public PredictorBackend {
 public:
  AnthropicMessagesPredictor(std::string base_url, std::string api_key, HttpTransport transport,
                             AnthropicOptions options = {});
  PredictorResponse generate(const std::string& prompt, const PredictorSetting& setting) override;

 private:
  std::string base_url_, api_key_;
  HttpTransport transport_;
  AnthropicOptions options_;
};

// OpenAI-compatible /completions with echo, as served by open-weight hosts.
Json completions_echo_request(const std::string& text, const std::string& model);
/// Keeps only the tokens covering `text`; anything generated past it is dropped.
std::vector<WireToken> parse_completions_echo(const Json& body, const std::string& text);

class CompletionsEchoScorer : public ScorerBackend {
 public:
  CompletionsEchoScorer(std::string base_url, std::string api_key, HttpTransport transport);
  std::vector<WireToken> echo_logprobs(const std::string& text, const std::string& model) override;

 private:
  std::string base_url_, api_key_;
  HttpTransport transport_;
};

/// Fetcher that GETs a URL with retries on transient failures.
Fetcher make_http_fetcher(HttpTransport transport, RetryPolicy retry = {});

}  // namespace liftbench
