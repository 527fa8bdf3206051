#include "liftbench/providers.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include "liftbench/errors.hpp"

namespace liftbench {

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string snippet(const std::string& body) { return body.size() > 300 ? body.substr(0, 300) + "..." : body; }

Json parse_body(const HttpResponse& resp, const std::string& what) {
  try {
    return Json::parse(resp.body);
  } catch (const Json::parse_error& e) {
    throw ProviderError(what + ": response is not JSON: " + snippet(resp.body));
  }
}

long elapsed_ms(std::chrono::steady_clock::time_point start) {
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace

HttpTransport make_http_transport(std::chrono::seconds timeout) {
  return [timeout](const HttpRequest& req) {
    const auto [host, path] = split_url(req.url);
    httplib::Client cli(host);
    cli.set_connection_timeout(std::chrono::seconds(30));
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(std::chrono::seconds(60));
    cli.set_follow_location(true);
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    auto res = req.body.empty() ? cli.Get(path, headers) : cli.Post(path, headers, req.body, "application/json");
    if (!res) throw RetryableFailure("transport error: " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
  };
}

void check_http_status(const HttpResponse& resp, const std::string& what) {
  if (resp.status >= 200 && resp.status < 300) return;
  const std::string msg = fmt::format("{}: HTTP {}: {}", what, resp.status, snippet(resp.body));
  if (resp.status == 429 || resp.status >= 500) throw RetryableFailure(msg);
  throw ProviderError(msg);
}

std::string credential_from_env(const std::string& variable) {
  const char* v = std::getenv(variable.c_str());
  if (v == nullptr || *v == '\0') throw ProviderError("credential " + variable + " is not set");
  return v;
}

Json openai_responses_request(const std::string& prompt, const PredictorSetting& setting) {
  Json req{{"model", setting.model_id},
           {"input", prompt},
           {"reasoning", {{"effort", std::string(effort_name(setting.reasoning_effort))}}}};
  // reasoning models reject any temperature other than the default
  if (setting.temperature != 1.0) req["temperature"] = setting.temperature;
  return req;
}

PredictorResponse parse_openai_responses(const Json& body) {
  PredictorResponse out;
  for (const auto& item : body.value("output", Json::array())) {
    if (item.value("type", "") != "message") continue;
    for (const auto& part : item.value("content", Json::array())) {
      if (part.value("type", "") == "output_text") out.text += part.value("text", "");
    }
  }
  if (body.contains("usage") && body["usage"].is_object()) {
    const auto& u = body["usage"];
    long reasoning = 0;
    if (u.contains("output_tokens_details") && u["output_tokens_details"].is_object()) {
      reasoning = u["output_tokens_details"].value("reasoning_tokens", 0L);
    }
    out.hidden_reasoning_tokens = reasoning;
    if (u.contains("output_tokens")) out.visible_tokens = u["output_tokens"].get<long>() - reasoning;
  }
  return out;
}

OpenAIResponsesPredictor::OpenAIResponsesPredictor(std::string base_url, std::string api_key,
                                                   HttpTransport transport)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), transport_(std::move(transport)) {}

PredictorResponse OpenAIResponsesPredictor::generate(const std::string& prompt, const PredictorSetting& setting) {
  const auto start = std::chrono::steady_clock::now();
  const HttpResponse resp = transport_({base_url_ + "/responses",
                                        {{"Authorization", "Bearer " + api_key_}},
                                        openai_responses_request(prompt, setting).dump()});
  check_http_status(resp, "openai " + setting.model_id);
  auto out = parse_openai_responses(parse_body(resp, "openai"));
  out.latency_ms = elapsed_ms(start);
  return out;
}

Json anthropic_messages_request(const std::string& prompt, const PredictorSetting& setting,
                                const AnthropicOptions& options) {
  Json req{{"model", setting.model_id},
           {"max_tokens", options.max_tokens},
           {"messages", Json::array({{{"role", "user"}, {"content", prompt}}})}};
  long budget = 0;
  switch (setting.reasoning_effort) {
    case ReasoningEffort::None: break;
    case ReasoningEffort::Low: budget = options.thinking_budget_low; break;
    case ReasoningEffort::Medium: budget = options.thinking_budget_medium; break;
    case ReasoningEffort::High: budget = options.thinking_budget_high; break;
  }
  if (budget > 0) req["thinking"] = {{"type", "enabled"}, {"budget_tokens", budget}};
  if (setting.temperature != 1.0) req["temperature"] = setting.temperature;
  return req;
}

PredictorResponse parse_anthropic_messages(const Json& body) {
  PredictorResponse out;
  for (const auto& block : body.value("content", Json::array())) {
    if (block.value("type", "") == "text") out.text += block.value("text", "");
  }
  if (body.contains("usage") && body["usage"].is_object() && body["usage"].contains("output_tokens")) {
    out.visible_tokens = body["usage"]["output_tokens"].get<long>();
  }
  return out;
}

AnthropicMessagesPredictor::AnthropicMessagesPredictor(std::string base_url, std::string api_key,
                                                       HttpTransport transport, AnthropicOptions options)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      transport_(std::move(transport)),
      options_(options) {}

PredictorResponse AnthropicMessagesPredictor::generate(const std::string& prompt, const PredictorSetting& setting) {
  const auto start = std::chrono::steady_clock::now();
  const HttpResponse resp =
      transport_({base_url_ + "/messages",
                  {{"x-api-key", api_key_}, {"anthropic-version", "2023-06-01"}},
                  anthropic_messages_request(prompt, setting, options_).dump()});
  check_http_status(resp, "anthropic " + setting.model_id);
  auto out = parse_anthropic_messages(parse_body(resp, "anthropic"));
  out.latency_ms = elapsed_ms(start);
  return out;
}

Json completions_echo_request(const std::string& text, const std::string& model) {
  return Json{{"model", model}, {"prompt", text}, {"max_tokens", 1},   {"echo", true},
              {"logprobs", 1},  {"temperature", 0}};
}

std::vector<WireToken> parse_completions_echo(const Json& body, const std::string& text) {
  const auto& choices = body.at("choices");
  if (choices.empty()) throw ProviderError("completions response has no choices");
  const auto& lp = choices.at(0).at("logprobs");
  const auto& tokens = lp.at("tokens");
  const auto& logprobs = lp.at("token_logprobs");
  if (tokens.size() != logprobs.size()) throw AlignmentError("tokens and token_logprobs differ in length");
  std::vector<WireToken> out;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < tokens.size() && covered < text.size(); ++i) {
    WireToken t{tokens[i].get<std::string>(), std::nullopt};
    if (!logprobs[i].is_null()) t.logprob = logprobs[i].get<double>();
    covered += t.text.size();
    out.push_back(std::move(t));
  }
  return out;
}

CompletionsEchoScorer::CompletionsEchoScorer(std::string base_url, std::string api_key, HttpTransport transport)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), transport_(std::move(transport)) {}

std::vector<WireToken> CompletionsEchoScorer::echo_logprobs(const std::string& text, const std::string& model) {
  const HttpResponse resp = transport_({base_url_ + "/completions",
                                        {{"Authorization", "Bearer " + api_key_}},
                                        completions_echo_request(text, model).dump()});
  check_http_status(resp, "completions " + model);
  return parse_completions_echo(parse_body(resp, "completions"), text);
}

Fetcher make_http_fetcher(HttpTransport transport, RetryPolicy retry) {
  return [transport = std::move(transport), retry](const std::string& url) {
    std::string last;
    for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
      try {
        const HttpResponse resp = transport({url, {}, ""});
        check_http_status(resp, "fetch " + url);
        return resp.body;
      } catch (const RetryableFailure& e) {
        last = e.what();
      }
      if (attempt < retry.max_attempts) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
            retry.base_delay.count() * std::pow(retry.multiplier, attempt - 1)));
      }
    }
    throw ProviderError(fmt::format("fetch {} failed after {} attempts: {}", url, retry.max_attempts, last));
  };
}

}  // namespace liftbench
