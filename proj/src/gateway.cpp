#include "liftbench/gateway.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <thread>

#include "liftbench/errors.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

std::string_view effort_name(ReasoningEffort e) {
  switch (e) {
    case ReasoningEffort::None: return "none";
    case ReasoningEffort::Low: return "low";
    case ReasoningEffort::Medium: return "medium";
    case ReasoningEffort::High: return "high";
  }
  return "none";
}

ReasoningEffort parse_effort(std::string_view s) {
  if (s == "none" || s.empty()) return ReasoningEffort::None;
  if (s == "low") return ReasoningEffort::Low;
  if (s == "medium") return ReasoningEffort::Medium;
  if (s == "high") return ReasoningEffort::High;
  throw ConfigError("unknown reasoning effort '" + std::string(s) + "'");
}

std::string PredictorSetting::label() const {
  return provider_id + "/" + model_id + ":" + std::string(effort_name(reasoning_effort));
}

PredictorSetting PredictorSetting::parse(std::string_view spec) {
  PredictorSetting s;
  const auto colon = spec.rfind(':');
  std::string_view id = spec;
  if (colon != std::string_view::npos && spec.find('/') < colon) {
    id = spec.substr(0, colon);
    s.reasoning_effort = parse_effort(spec.substr(colon + 1));
  }
  auto [provider, model] = split_model_id(id);
  s.provider_id = std::move(provider);
  s.model_id = std::move(model);
  return s;
}

std::pair<std::string, std::string> split_model_id(std::string_view id) {
  const auto slash = id.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == id.size()) {
    throw ConfigError("expected provider/model, got '" + std::string(id) + "'");
  }
  return {std::string(id.substr(0, slash)), std::string(id.substr(slash + 1))};
}

Json to_json(const PredictorSetting& s) {
  return Json{{"provider_id", s.provider_id},
              {"model_id", s.model_id},
              {"reasoning_effort", std::string(effort_name(s.reasoning_effort))},
              {"temperature", s.temperature},
              {"max_forecast_chars", s.max_forecast_chars}};
}

PredictorSetting predictor_setting_from_json(const Json& j) {
  PredictorSetting s;
  s.provider_id = j.at("provider_id").get<std::string>();
  s.model_id = j.at("model_id").get<std::string>();
  s.reasoning_effort = parse_effort(j.value("reasoning_effort", "none"));
  s.temperature = j.value("temperature", 1.0);
  s.max_forecast_chars = j.value("max_forecast_chars", std::size_t{0});
  return s;
}

namespace {

Json optional_json(const std::optional<long>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<long> optional_long(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<long>();
}

}  // namespace

Json to_json(const Forecast& f) {
  return Json{{"cut_id", f.cut_id},
              {"setting", to_json(f.setting)},
              {"setting_label", f.setting.label()},
              {"sample", f.sample},
              {"z_raw", f.z_raw},
              {"z_truncated", f.z_truncated},
              {"hidden_reasoning_tokens", optional_json(f.hidden_reasoning_tokens)},
              {"visible_tokens", optional_json(f.visible_tokens)},
              {"latency_ms", f.latency_ms}};
}

Forecast forecast_from_json(const Json& j) {
  Forecast f;
  f.cut_id = j.at("cut_id").get<std::string>();
  f.setting = predictor_setting_from_json(j.at("setting"));
  f.sample = j.value("sample", 0);
  f.z_raw = j.at("z_raw").get<std::string>();
  f.z_truncated = j.at("z_truncated").get<std::string>();
  f.hidden_reasoning_tokens = optional_long(j, "hidden_reasoning_tokens");
  f.visible_tokens = optional_long(j, "visible_tokens");
  f.latency_ms = j.value("latency_ms", 0L);
  return f;
}

std::vector<double> ScoreRecord::target_lambdas() const {
  std::vector<double> out;
  out.reserve(target_token_indices.size());
  for (auto i : target_token_indices) out.push_back(tokens.at(i).logprob);
  return out;
}

Json to_json(const ScoreRecord& r) {
  Json toks = Json::array();
  for (const auto& t : r.tokens) toks.push_back(Json::array({t.begin, t.end, t.logprob}));
  return Json{{"cut_id", r.cut_id},
              {"paper_id", r.paper_id},
              {"condition", r.condition},
              {"scorer_id", r.scorer_id},
              {"prompt_char_len", r.prompt_char_len},
              {"tokens", std::move(toks)},
              {"target_token_indices", r.target_token_indices},
              {"straddle_flag", r.straddle_flag}};
}

ScoreRecord score_record_from_json(const Json& j) {
  ScoreRecord r;
  r.cut_id = j.at("cut_id").get<std::string>();
  r.paper_id = j.value("paper_id", "");
  r.condition = j.at("condition").get<std::string>();
  r.scorer_id = j.at("scorer_id").get<std::string>();
  r.prompt_char_len = j.at("prompt_char_len").get<std::size_t>();
  for (const auto& t : j.at("tokens")) {
    r.tokens.push_back({t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>(), t.at(2).get<double>()});
  }
  r.target_token_indices = j.at("target_token_indices").get<std::vector<std::size_t>>();
  r.straddle_flag = j.at("straddle_flag").get<bool>();
  return r;
}

std::vector<TokenSpan> spans_from_wire(std::span<const WireToken> tokens, std::string_view text) {
  std::vector<TokenSpan> spans;
  spans.reserve(tokens.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.text.empty()) throw AlignmentError("empty token at index " + std::to_string(i));
    if (text.compare(pos, t.text.size(), t.text) != 0) {
      throw AlignmentError("token " + std::to_string(i) + " does not match text at offset " + std::to_string(pos));
    }
    double lp = 0.0;
    if (t.logprob) {
      lp = *t.logprob;
    } else if (i != 0) {
      throw AlignmentError("missing logprob for token " + std::to_string(i));
    }
    spans.push_back({pos, pos + t.text.size(), lp});
    pos += t.text.size();
  }
  if (pos != text.size()) {
    throw AlignmentError("tokens cover " + std::to_string(pos) + " of " + std::to_string(text.size()) + " characters");
  }
  return spans;
}

TargetAlignment align_target_tokens(std::span<const TokenSpan> tokens, std::size_t prompt_char_len) {
  TargetAlignment out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].end <= prompt_char_len) continue;
    if (out.indices.empty() && tokens[i].begin < prompt_char_len) out.straddle = true;
    out.indices.push_back(i);
  }
  return out;
}

void SpendMeter::charge(double units) {
  std::lock_guard lock(mu_);
  if (spent_ + units > cap_) {
    throw BudgetExceeded(fmt::format("spend {:.4f} + {:.4f} would exceed cap {:.4f}", spent_, units, cap_));
  }
  spent_ += units;
}

double SpendMeter::spent() const {
  std::lock_guard lock(mu_);
  return spent_;
}

ModelGateway::ModelGateway(std::shared_ptr<ResponseCache> cache, std::shared_ptr<SpendMeter> spend, RetryPolicy retry)
    : cache_(std::move(cache)), spend_(std::move(spend)), retry_(retry) {
  if (!cache_) cache_ = std::make_shared<ResponseCache>();
  if (!spend_) spend_ = std::make_shared<SpendMeter>();
}

void ModelGateway::register_predictor(const std::string& provider_id, std::shared_ptr<PredictorBackend> backend,
                                      ProviderLimits limits) {
  std::lock_guard lock(providers_mu_);
  auto& p = providers_[provider_id];
  if (!p) p = std::make_unique<Provider>();
  p->predictor = std::move(backend);
  p->limits = limits;
  p->slots = std::make_unique<std::counting_semaphore<1024>>(std::max(1, limits.max_in_flight));
}

void ModelGateway::register_scorer(const std::string& provider_id, std::shared_ptr<ScorerBackend> backend,
                                   ProviderLimits limits) {
  std::lock_guard lock(providers_mu_);
  auto& p = providers_[provider_id];
  if (!p) p = std::make_unique<Provider>();
  p->scorer = std::move(backend);
  p->limits = limits;
  p->slots = std::make_unique<std::counting_semaphore<1024>>(std::max(1, limits.max_in_flight));
}

ModelGateway::Provider& ModelGateway::provider(const std::string& id) {
  std::lock_guard lock(providers_mu_);
  const auto it = providers_.find(id);
  if (it == providers_.end()) throw ProviderError("no backend registered for provider '" + id + "'");
  return *it->second;
}

template <class F>
auto ModelGateway::call_with_retry(Provider& p, const std::string& what, F&& f) -> decltype(f()) {
  std::string last_error;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    spend_->charge(p.limits.cost_per_call);
    p.slots->acquire();
    try {
      ++network_calls_;
      auto result = f();
      p.slots->release();
      return result;
    } catch (const RetryableFailure& e) {
      p.slots->release();
      last_error = e.what();
    } catch (...) {
      p.slots->release();
      throw;
    }
    if (attempt < retry_.max_attempts) {
      ++retries_;
      const auto delay = std::chrono::duration<double, std::milli>(retry_.base_delay.count() *
                                                                   std::pow(retry_.multiplier, attempt - 1));
      spdlog::warn("{}: attempt {} failed ({}), retrying in {:.0f} ms", what, attempt, last_error, delay.count());
      std::this_thread::sleep_for(delay);
    }
  }
  throw ProviderError(fmt::format("{} failed after {} attempts: {}", what, retry_.max_attempts, last_error));
}

Forecast ModelGateway::generate_forecast(const std::string& prompt, const PredictorSetting& setting,
                                         std::size_t budget, const std::string& cut_id, int sample) {
  const Json material{{"prompt", prompt}, {"setting", to_json(setting)}, {"sample", sample}};
  const std::string key = cache_key("forecast", material);

  Json payload;
  if (auto hit = cache_->get(key)) {
    ++cache_hits_;
    payload = std::move(*hit);
  } else {
    auto& p = provider(setting.provider_id);
    if (!p.predictor) throw ProviderError("provider '" + setting.provider_id + "' has no predictor");
    const PredictorResponse resp =
        call_with_retry(p, "forecast " + cut_id, [&] { return p.predictor->generate(prompt, setting); });
    payload = Json{{"text", resp.text},
                   {"hidden_reasoning_tokens", optional_json(resp.hidden_reasoning_tokens)},
                   {"visible_tokens", optional_json(resp.visible_tokens)},
                   {"latency_ms", resp.latency_ms}};
    cache_->put(key, "forecast", sha256_hex(prompt), payload);
  }

  Forecast f;
  f.cut_id = cut_id;
  f.setting = setting;
  f.sample = sample;
  f.z_raw = payload.at("text").get<std::string>();
  std::size_t limit = budget;
  if (setting.max_forecast_chars != 0) limit = std::min(limit, setting.max_forecast_chars);
  f.z_truncated = std::string(head_within(f.z_raw, limit));
  f.hidden_reasoning_tokens = optional_long(payload, "hidden_reasoning_tokens");
  f.visible_tokens = optional_long(payload, "visible_tokens");
  f.latency_ms = payload.value("latency_ms", 0L);
  return f;
}

ScoreRecord ModelGateway::score_target(const ScoredPrompt& sp, const std::string& scorer_id,
                                       const std::string& cut_id, const std::string& condition) {
  if (sp.target_text.empty()) throw EmptyTarget("cut " + cut_id + " has an empty target");
  const std::string text = sp.prompt_text + sp.target_text;
  const Json material{{"prompt", sp.prompt_text}, {"target", sp.target_text}, {"scorer_id", scorer_id}};
  const std::string key = cache_key("score", material);

  std::vector<WireToken> wire;
  if (auto hit = cache_->get(key)) {
    ++cache_hits_;
    for (const auto& t : hit->at("tokens")) {
      WireToken w{t.at(0).get<std::string>(), std::nullopt};
      if (!t.at(1).is_null()) w.logprob = t.at(1).get<double>();
      wire.push_back(std::move(w));
    }
  } else {
    const auto [provider_id, model] = split_model_id(scorer_id);
    auto& p = provider(provider_id);
    if (!p.scorer) throw ProviderError("provider '" + provider_id + "' has no scorer");
    wire = call_with_retry(p, "score " + cut_id + " " + condition,
                           [&] { return p.scorer->echo_logprobs(text, model); });
    Json toks = Json::array();
    for (const auto& w : wire) toks.push_back(Json::array({w.text, w.logprob ? Json(*w.logprob) : Json(nullptr)}));
    cache_->put(key, "score", sha256_hex(text), Json{{"tokens", std::move(toks)}});
  }

  ScoreRecord r;
  r.cut_id = cut_id;
  r.condition = condition;
  r.scorer_id = scorer_id;
  r.prompt_char_len = sp.prompt_char_len;
  r.tokens = spans_from_wire(wire, text);
  const auto al = align_target_tokens(r.tokens, sp.prompt_char_len);
  if (al.indices.empty()) throw AlignmentError("no target tokens for cut " + cut_id);
  r.target_token_indices = al.indices;
  r.straddle_flag = al.straddle;
  return r;
}

GatewayStats ModelGateway::stats() const {
  return {network_calls_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace liftbench
