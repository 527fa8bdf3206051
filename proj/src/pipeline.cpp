#include "liftbench/pipeline.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "liftbench/errors.hpp"
#include "liftbench/providers.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

namespace fs = std::filesystem;

namespace {

// Runs f(0..n-1) on up to `workers` threads. f reports per-item failures
// itself; anything it throws stops the pool and is rethrown here.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

std::string now_iso() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                   std::chrono::system_clock::now())));
}

std::string num(double v) {
  std::string s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<Json> read_stage_file(const RunConfig& cfg, const std::string& name) {
  const std::string path = cfg.output_path(name);
  if (!fs::exists(path)) throw MissingInput(path + " not found; run the previous stage first");
  return read_jsonl(path);
}

void write_records(const RunConfig& cfg, const std::string& name, std::vector<Json> records) {
  for (auto& r : records) r["run_id"] = cfg.run_id;
  write_file(cfg.output_path(name), to_jsonl(records));
}

std::string control_label(CutMode mode) { return mode == CutMode::Equation ? "same_budget" : "prose_context"; }

bool is_forecast_label(const std::string& label) {
  return label.starts_with("forecast:") || label.starts_with("prose_forecast:");
}

struct ParsedForecastLabel {
  std::string family;  // everything but the effort, sample suffix kept
  ReasoningEffort effort = ReasoningEffort::None;
};

std::optional<ParsedForecastLabel> parse_forecast_label(const std::string& label) {
  if (!is_forecast_label(label)) return std::nullopt;
  std::string base = label;
  std::string sample;
  if (const auto hash = base.rfind('#'); hash != std::string::npos) {
    sample = base.substr(hash);
    base.resize(hash);
  }
  const auto colon = base.rfind(':');
  try {
    return ParsedForecastLabel{base.substr(0, colon) + sample, parse_effort(base.substr(colon + 1))};
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

struct CutScores {
  std::string paper_id;
  std::vector<double> lambdas;
};

using LabelScores = std::map<std::string, std::map<std::string, CutScores>>;  // label -> cut -> scores

std::vector<CutValue> cut_values(const std::map<std::string, CutScores>& cuts, MetricKind metric,
                                 std::optional<std::size_t> window, const std::set<std::string>& keep) {
  std::vector<CutValue> out;
  for (const auto& [cut_id, cs] : cuts) {
    if (!keep.contains(cut_id)) continue;
    const TokenLogLikelihoods lams(cs.lambdas);
    const double v = window ? window_score(lams, *window, metric) : score(lams, metric);
    out.push_back({cut_id, cs.paper_id, v});
  }
  return out;
}

std::pair<std::string, std::string> split_contrast(const std::string& contrast) {
  const auto bar = contrast.find('|');
  return {contrast.substr(0, bar), contrast.substr(bar + 1)};
}

// Per-cut lhs - rhs over the cuts both sides scored.
std::pair<std::vector<CutValue>, std::vector<CutValue>> paired_values(const LabelScores& by_label,
                                                                      const std::string& contrast, MetricKind metric,
                                                                      std::optional<std::size_t> window,
                                                                      const std::set<std::string>& keep) {
  const auto [lhs, rhs] = split_contrast(contrast);
  const auto& l = by_label.at(lhs);
  const auto& r = by_label.at(rhs);
  std::set<std::string> both;
  for (const auto& [cut_id, _] : l) {
    if (r.contains(cut_id) && keep.contains(cut_id)) both.insert(cut_id);
  }
  return {cut_values(l, metric, window, both), cut_values(r, metric, window, both)};
}

}  // namespace

std::string forecast_condition_label(CutMode mode, const Forecast& f, int repeats) {
  std::string label = (mode == CutMode::Equation ? "forecast:" : "prose_forecast:") + f.setting.label();
  if (repeats > 1) label += "#" + std::to_string(f.sample);
  return label;
}

std::vector<std::string> default_contrasts(const std::vector<std::string>& labels, CutMode mode) {
  const std::set<std::string> have(labels.begin(), labels.end());
  const std::string control = control_label(mode);
  std::vector<std::string> out;
  if (have.contains(control)) {
    for (const auto& l : labels) {
      if (l != control) out.push_back(l + "|" + control);
    }
  }
  if (mode == CutMode::Equation && have.contains("empty")) {
    for (const auto& l : labels) {
      if (l != "empty") out.push_back(l + "|empty");
    }
  }
  if (mode == CutMode::Equation && have.contains("true_suffix")) {
    for (const auto& l : labels) {
      if (is_forecast_label(l)) out.push_back("true_suffix|" + l);
    }
  }
  std::map<std::string, std::vector<std::pair<ReasoningEffort, std::string>>> families;
  for (const auto& l : labels) {
    if (auto p = parse_forecast_label(l)) families[p->family].emplace_back(p->effort, l);
  }
  for (auto& [_, members] : families) {
    std::sort(members.begin(), members.end());
    for (std::size_t i = 1; i < members.size(); ++i) out.push_back(members[i].second + "|" + members[i - 1].second);
  }
  return out;
}

MetricKind headline_metric(const RunConfig& config) {
  const auto clip2 = MetricKind::clip_ll(2.0);
  if (std::find(config.metrics.begin(), config.metrics.end(), clip2) != config.metrics.end()) return clip2;
  if (config.metrics.empty()) throw ConfigError("no metrics configured");
  return config.metrics.front();
}

AnalysisOutput analyze_scores(const std::vector<ScoreRecord>& scores, const std::vector<Forecast>& forecasts,
                              const RunConfig& config) {
  std::map<std::string, LabelScores> by_scorer;
  std::map<std::string, std::set<std::string>> straddled;
  for (const auto& rec : scores) {
    by_scorer[rec.scorer_id][rec.condition][rec.cut_id] = {rec.paper_id, rec.target_lambdas()};
    if (rec.straddle_flag) straddled[rec.scorer_id].insert(rec.cut_id);
  }

  std::optional<std::set<std::string>> manifest_cuts;
  if (config.cut_manifest) {
    manifest_cuts.emplace();
    const std::string text = read_file(config.resolve(*config.cut_manifest));
    std::size_t start = 0;
    while (start < text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) manifest_cuts->insert(line);
      start = end + 1;
    }
  }

  std::map<std::pair<std::string, std::string>, const Forecast*> forecast_by;
  for (const auto& f : forecasts) forecast_by[{forecast_condition_label(config.mode, f, config.repeats), f.cut_id}] = &f;

  const MetricKind headline = headline_metric(config);
  const std::string control = control_label(config.mode);
  std::vector<std::optional<std::size_t>> windows{std::nullopt};
  for (auto w : config.windows) windows.emplace_back(w);

  AnalysisOutput out;
  for (const auto& [scorer, by_label] : by_scorer) {
    out.straddled_cuts[scorer] = straddled[scorer].size();

    std::set<std::string> all_cuts;
    for (const auto& [_, cuts] : by_label) {
      for (const auto& [cut_id, __] : cuts) {
        if (manifest_cuts && !manifest_cuts->contains(cut_id)) continue;
        if (config.exclude_straddled && straddled[scorer].contains(cut_id)) continue;
        all_cuts.insert(cut_id);
      }
    }

    std::vector<std::string> labels;
    for (const auto& [label, _] : by_label) labels.push_back(label);
    std::vector<std::string> contrasts;
    for (const auto& c : config.contrasts.empty() ? default_contrasts(labels, config.mode) : config.contrasts) {
      const auto [lhs, rhs] = split_contrast(c);
      if (!by_label.contains(lhs) || !by_label.contains(rhs)) {
        spdlog::warn("contrast {} skipped for scorer {}: condition not scored", c, scorer);
        continue;
      }
      contrasts.push_back(c);
    }

    std::vector<std::pair<std::string, std::set<std::string>>> subsets{{"all", all_cuts}};
    if (config.subset_baseline) {
      const std::string& base = *config.subset_baseline;
      const auto [lhs, rhs] = split_contrast(base);
      if (base.find('|') == std::string::npos || !by_label.contains(lhs) || !by_label.contains(rhs)) {
        spdlog::warn("subset baseline {} not available for scorer {}", base, scorer);
      } else {
        const auto [l, r] = paired_values(by_label, base, headline, std::nullopt, all_cuts);
        const auto diffs = paired_differences(l, r);
        const auto ids = subset_by_baseline_quantile(diffs, config.subset_quantile);
        subsets.emplace_back(fmt::format("lowest{}:{}", config.subset_quantile, base),
                             std::set<std::string>(ids.begin(), ids.end()));
      }
    }

    for (const auto& [subset_name, keep] : subsets) {
      auto emit = [&](const std::string& contrast, MetricKind metric, std::optional<std::size_t> window) {
        AggregateRow row;
        row.scorer = scorer;
        row.contrast = contrast;
        row.metric = metric.name();
        row.window = window;
        row.subset = subset_name;
        try {
          if (contrast.find('|') == std::string::npos) {
            const auto vals = cut_values(by_label.at(contrast), metric, window, keep);
            row.agg = aggregate_lifts(contrast, vals);
            row.agg.frac_positive.reset();
          } else {
            const auto [l, r] = paired_values(by_label, contrast, metric, window, keep);
            row.agg = paired_contrast(contrast, l, r);
            if (row.agg.clustered_se > 0.0) row.significant = significance_flag(row.agg, config.alpha);
          }
        } catch (const TooFewClusters& e) {
          spdlog::warn("{} / {} skipped: {}", scorer, contrast, e.what());
          return;
        }
        out.aggregates.push_back(std::move(row));
      };
      for (const auto& label : labels) {
        for (const auto& m : config.metrics) {
          for (const auto& w : windows) emit(label, m, w);
        }
      }
      for (const auto& c : contrasts) {
        for (const auto& m : config.metrics) {
          for (const auto& w : windows) emit(c, m, w);
        }
      }
    }

    for (const auto& c : contrasts) {
      const auto [lhs, rhs] = split_contrast(c);
      if (rhs != control || !(is_forecast_label(lhs) || lhs == "true_suffix")) continue;
      const auto [l, r] = paired_values(by_label, c, headline, std::nullopt, all_cuts);
      if (l.empty()) continue;
      const auto diffs = paired_differences(l, r);
      std::vector<double> xs;
      for (const auto& d : diffs) xs.push_back(d.value);
      for (const auto& p : ecdf(xs)) out.ecdf.push_back({scorer, c, headline.name(), p.x, p.f});
      out.medians.push_back({scorer, c, headline.name(), median(xs), xs.size()});

      if (!is_forecast_label(lhs)) continue;
      ReasoningRow rr{scorer, lhs.substr(lhs.find(':') + 1), headline.name(), 0.0, std::nullopt, std::nullopt,
                      diffs.size()};
      double lift_sum = 0.0, hidden_sum = 0.0, visible_sum = 0.0;
      bool hidden_known = true, visible_known = true;
      for (const auto& d : diffs) {
        lift_sum += d.value;
        const auto it = forecast_by.find({lhs, d.cut_id});
        const Forecast* f = it == forecast_by.end() ? nullptr : it->second;
        if (f && f->hidden_reasoning_tokens) hidden_sum += static_cast<double>(*f->hidden_reasoning_tokens);
        else hidden_known = false;
        if (f && f->visible_tokens) visible_sum += static_cast<double>(*f->visible_tokens);
        else visible_known = false;
      }
      const auto n = static_cast<double>(diffs.size());
      rr.mean_lift = lift_sum / n;
      if (hidden_known) rr.mean_hidden_tokens = hidden_sum / n;
      if (visible_known) rr.mean_visible_tokens = visible_sum / n;
      out.reasoning.push_back(rr);
    }
  }
  return out;
}

std::string aggregates_csv(const std::string& run_id, const std::vector<AggregateRow>& rows) {
  std::string out = "run_id,scorer,subset,contrast,metric,window,mean,se,n_cuts,n_papers,frac_positive,significant\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(run_id), csv_field(r.scorer),
                       csv_field(r.subset), csv_field(r.contrast), r.metric,
                       r.window ? std::to_string(*r.window) : "all", num(r.agg.mean), num(r.agg.clustered_se),
                       r.agg.n_cuts, r.agg.n_papers, r.agg.frac_positive ? num(*r.agg.frac_positive) : "",
                       r.significant ? (*r.significant ? "true" : "false") : "");
  }
  return out;
}

std::string ecdf_csv(const std::string& run_id, const std::vector<EcdfRow>& rows) {
  std::string out = "run_id,scorer,contrast,metric,x,ecdf\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", csv_field(run_id), csv_field(r.scorer), csv_field(r.contrast), r.metric,
                       num(r.x), num(r.f));
  }
  return out;
}

std::string medians_csv(const std::string& run_id, const std::vector<MedianRow>& rows) {
  std::string out = "run_id,scorer,contrast,metric,median,n_cuts\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", csv_field(run_id), csv_field(r.scorer), csv_field(r.contrast), r.metric,
                       num(r.median), r.n_cuts);
  }
  return out;
}

std::string reasoning_csv(const std::string& run_id, const std::vector<ReasoningRow>& rows) {
  std::string out = "run_id,scorer,setting,metric,mean_lift,mean_hidden_tokens,mean_visible_tokens,n_cuts\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(run_id), csv_field(r.scorer), csv_field(r.setting),
                       r.metric, num(r.mean_lift), r.mean_hidden_tokens ? num(*r.mean_hidden_tokens) : "",
                       r.mean_visible_tokens ? num(*r.mean_visible_tokens) : "", r.n_cuts);
  }
  return out;
}

Pipeline::Pipeline(RunConfig config) : cfg_(std::move(config)) {
  fs::create_directories(cfg_.resolve(cfg_.output_dir));
}

ModelGateway& Pipeline::gateway() {
  if (!gateway_) {
    const std::string cache_path = cfg_.resolve(cfg_.cache_path);
    if (const auto parent = fs::path(cache_path).parent_path(); !parent.empty()) fs::create_directories(parent);
    cache_ = std::make_shared<ResponseCache>(cache_path);
    spend_ = std::make_shared<SpendMeter>(cfg_.max_spend);
    gateway_ = std::make_unique<ModelGateway>(cache_, spend_, cfg_.retry);
    mock_predictor_ = std::make_shared<MockPredictor>();
  }
  return *gateway_;
}

void Pipeline::ensure_provider(const std::string& id) {
  auto& gw = gateway();
  if (registered_.contains(id)) return;
  const auto it = cfg_.providers.find(id);
  if (it == cfg_.providers.end()) throw ConfigError("unknown provider '" + id + "'");
  const ProviderConfig& pc = it->second;
  const ProviderLimits limits{pc.max_in_flight, pc.cost_per_call};
  if (pc.kind == "mock") {
    CharNgramModel model;
    if (!pc.training_dir.empty()) model = train_mock_scorer(cfg_.resolve(pc.training_dir));
    gw.register_predictor(id, mock_predictor_, limits);
    gw.register_scorer(id, std::make_shared<MockNgramScorer>(std::move(model)), limits);
  } else {
    if (cfg_.offline) throw ConfigError("provider '" + id + "' needs the network but the run is offline");
    const std::string key = credential_from_env(pc.api_key_env);
    auto transport = make_http_transport();
    if (pc.kind == "openai_responses") {
      gw.register_predictor(id, std::make_shared<OpenAIResponsesPredictor>(pc.base_url, key, transport), limits);
    } else if (pc.kind == "anthropic_messages") {
      gw.register_predictor(id, std::make_shared<AnthropicMessagesPredictor>(pc.base_url, key, transport), limits);
    } else if (pc.kind == "completions_echo") {
      gw.register_scorer(id, std::make_shared<CompletionsEchoScorer>(pc.base_url, key, transport), limits);
    } else {
      throw ConfigError("provider '" + id + "' has unknown kind '" + pc.kind + "'");
    }
  }
  registered_.insert(id);
}

void Pipeline::record_stage(const std::string& stage, const Json& summary) {
  const std::string path = cfg_.output_path("manifest.json");
  Json m = Json::object();
  if (fs::exists(path)) {
    m = Json::parse(read_file(path));
    if (m.value("run_id", "") != cfg_.run_id) m = Json::object();
  }
  m["run_id"] = cfg_.run_id;
  m["config_digest"] = cfg_.config_digest;
  m["mode"] = std::string(cut_mode_name(cfg_.mode));
  m["seed"] = cfg_.seed;
  Json preds = Json::array();
  for (const auto& p : cfg_.predictors) preds.push_back(to_json(p));
  m["predictors"] = preds;
  m["scorers"] = cfg_.scorers;
  m["stage_timestamps"][stage] = now_iso();
  m["stages"][stage] = summary;
  if (gateway_) {
    const auto st = gateway_->stats();
    const double spent = spend_->spent();
    // spend only ever grows within a run
    const double before = m.contains("spend") ? m["spend"].value("spent", 0.0) : 0.0;
    m["spend"]["spent"] = std::max(spent, before);
    m["spend"]["cap"] = std::isfinite(cfg_.max_spend) ? Json(cfg_.max_spend) : Json(nullptr);
    m["gateway"][stage] = {{"network_calls", st.network_calls}, {"cache_hits", st.cache_hits}, {"retries", st.retries}};
  }
  write_file(path, m.dump(2) + "\n");
}

std::size_t Pipeline::ingest() {
  std::vector<std::string> files;
  for (const auto& in : cfg_.inputs) {
    const std::string p = cfg_.resolve(in);
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }

  Diagnostics diag;
  std::vector<PaperSource> papers;
  std::vector<Json> errors;
  std::set<std::string> ids;
  auto accept = [&](const std::string& source, const std::string& id, const std::string& bytes) {
    try {
      if (ids.contains(id)) throw CorruptArchive("duplicate paper id " + id);
      PaperSource paper = load_archive(std::span<const char>(bytes.data(), bytes.size()), id, source, &diag);
      if (auto why = filter_rejection(paper, cfg_.filters)) {
        diag.add(id, 0, "filtered-" + *why);
        return;
      }
      ids.insert(id);
      papers.push_back(std::move(paper));
    } catch (const Error& e) {
      spdlog::warn("ingest {}: {}", source, e.what());
      errors.push_back({{"source", source}, {"paper_id", id}, {"error", e.what()}});
    }
  };

  for (const auto& f : files) {
    std::string bytes;
    try {
      bytes = read_file(f);
    } catch (const Error& e) {
      errors.push_back({{"source", f}, {"paper_id", paper_id_from_path(f)}, {"error", e.what()}});
      continue;
    }
    accept(f, paper_id_from_path(f), bytes);
  }
  for (const auto& url : cfg_.urls) {
    const std::string name = url.substr(0, url.find('?'));
    const std::string id = paper_id_from_path(name);
    try {
      if (!fetcher_) {
        if (cfg_.offline) throw ProviderError("fetching " + url + " needs the network but the run is offline");
        fetcher_ = make_http_fetcher(make_http_transport(), cfg_.retry);
      }
      accept(url, id, fetcher_(url));
    } catch (const Error& e) {
      errors.push_back({{"source", url}, {"paper_id", id}, {"error", e.what()}});
    }
  }

  write_corpus_jsonl(cfg_.output_path("corpus.jsonl"), papers, cfg_.run_id);
  write_records(cfg_, "ingest_errors.jsonl", errors);
  std::vector<Json> diags;
  for (const auto& d : diag.entries()) {
    diags.push_back({{"paper_id", d.paper_id}, {"offset", d.offset}, {"reason", d.reason}, {"detail", d.detail}});
  }
  write_records(cfg_, "ingest_diagnostics.jsonl", diags);

  std::size_t chars = 0;
  Json per_paper = Json::object();
  for (const auto& p : papers) {
    chars += p.char_count();
    per_paper[p.paper_id] = p.char_count();
  }
  record_stage("ingest", {{"papers", papers.size()}, {"errors", errors.size()}, {"total_chars", chars},
                          {"chars_per_paper", per_paper}, {"corpus_digest", sha256_hex(read_file(cfg_.output_path("corpus.jsonl")))}});
  return papers.size();
}

std::size_t Pipeline::cut() {
  const auto papers = read_corpus_jsonl(cfg_.output_path("corpus.jsonl"));
  Diagnostics diag;
  std::vector<Json> records;
  std::vector<std::pair<std::string, std::size_t>> per_paper;
  for (const auto& paper : papers) {
    std::size_t n = 0;
    if (cfg_.mode == CutMode::Equation) {
      for (const auto& c : extract_equation_cuts(paper, cfg_.equation, cfg_.seed, &diag)) {
        records.push_back(to_json(c));
        ++n;
      }
    } else {
      for (const auto& c : extract_prose_cuts(paper, cfg_.prose, cfg_.seed, &diag)) {
        records.push_back(to_json(c));
        ++n;
      }
    }
    per_paper.emplace_back(paper.paper_id, n);
  }
  const std::size_t total = records.size();
  write_records(cfg_, "cuts.jsonl", std::move(records));
  write_file(cfg_.output_path("extraction_report.tsv"), extraction_report(per_paper, diag));
  Json tally = Json::object();
  for (const auto& [reason, count] : diag.tally()) tally[reason] = count;
  record_stage("cut", {{"cuts", total}, {"rejections", tally}});
  return total;
}

namespace {

struct LoadedCuts {
  std::vector<EquationCut> equation;
  std::vector<ProseCut> prose;
};

LoadedCuts load_cuts(const RunConfig& cfg) {
  LoadedCuts out;
  for (const auto& j : read_stage_file(cfg, "cuts.jsonl")) {
    const std::string kind = j.value("kind", "");
    if (kind != cut_mode_name(cfg.mode)) {
      throw ConfigError("cuts.jsonl holds " + kind + " cuts but the run mode is " +
                        std::string(cut_mode_name(cfg.mode)));
    }
    if (cfg.mode == CutMode::Equation) out.equation.push_back(equation_cut_from_json(j));
    else out.prose.push_back(prose_cut_from_json(j));
  }
  return out;
}

}  // namespace

std::size_t Pipeline::forecast() {
  if (cfg_.predictors.empty()) throw ConfigError("no predictors configured");
  const LoadedCuts cuts = load_cuts(cfg_);
  for (const auto& s : cfg_.predictors) ensure_provider(s.provider_id);
  auto& gw = gateway();

  struct Task {
    std::string cut_id, paper_id, prompt;
    std::size_t budget;
    const PredictorSetting* setting;
    int sample;
  };
  std::vector<Task> tasks;
  auto add_tasks = [&](const std::string& cut_id, const std::string& paper_id, const std::string& prompt,
                       const std::string& answer, std::size_t budget) {
    mock_predictor_->add_answer(prompt, answer);
    for (const auto& s : cfg_.predictors) {
      for (int k = 0; k < cfg_.repeats; ++k) tasks.push_back({cut_id, paper_id, prompt, budget, &s, k});
    }
  };
  for (const auto& c : cuts.equation) add_tasks(c.cut_id, c.paper_id, build_predictor_prompt_equation(c), c.suffix_y, c.budget_b);
  for (const auto& c : cuts.prose) {
    add_tasks(c.cut_id, c.paper_id, build_predictor_prompt_prose(c, cfg_.scaffold), c.target_y,
              cfg_.scaffold.prose_forecast_budget);
  }

  std::vector<std::optional<Forecast>> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  parallel_for(tasks.size(), cfg_.workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    try {
      results[i] = gw.generate_forecast(t.prompt, *t.setting, t.budget, t.cut_id, t.sample);
    } catch (const ProviderError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<Json> records, errors;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (results[i]) {
      Json j = to_json(*results[i]);
      j["paper_id"] = tasks[i].paper_id;
      records.push_back(std::move(j));
    } else {
      errors.push_back({{"cut_id", tasks[i].cut_id}, {"setting", tasks[i].setting->label()},
                        {"sample", tasks[i].sample}, {"status", "error"}, {"error", failures[i]}});
    }
  }
  const std::size_t ok = records.size();
  write_records(cfg_, "forecasts.jsonl", std::move(records));
  write_records(cfg_, "forecast_errors.jsonl", errors);
  record_stage("forecast", {{"forecasts", ok}, {"errors", errors.size()}});
  return ok;
}

std::size_t Pipeline::score() {
  if (cfg_.scorers.empty()) throw ConfigError("no scorers configured");
  const LoadedCuts cuts = load_cuts(cfg_);
  std::map<std::string, std::vector<Forecast>> forecasts;
  const bool wants_forecasts = std::any_of(cfg_.conditions.begin(), cfg_.conditions.end(), [](const std::string& c) {
    return c == "forecast" || c == "prose_forecast";
  });
  if (wants_forecasts) {
    for (const auto& j : read_stage_file(cfg_, "forecasts.jsonl")) {
      auto f = forecast_from_json(j);
      forecasts[f.cut_id].push_back(std::move(f));
    }
  }
  for (const auto& s : cfg_.scorers) ensure_provider(split_model_id(s).first);
  auto& gw = gateway();

  struct Task {
    std::string cut_id, paper_id, label, scorer;
    ScoredPrompt prompt;
  };
  std::vector<Task> tasks;
  std::vector<Json> errors;
  auto conditions_for = [&](const std::string& cut_id) {
    std::vector<ScoringCondition> out;
    for (const auto& name : cfg_.conditions) {
      const auto kind = *condition_kind_from_name(name);
      switch (kind) {
        case ConditionKind::EmptyScaffold: out.push_back(ScoringCondition::empty_scaffold()); break;
        case ConditionKind::SameBudgetContext: out.push_back(ScoringCondition::same_budget()); break;
        case ConditionKind::TripleBudgetContext: out.push_back(ScoringCondition::triple_budget()); break;
        case ConditionKind::ProseContextControl: out.push_back(ScoringCondition::prose_context(cfg_.prose.pre_long)); break;
        case ConditionKind::TrueSuffixScaffold: break;  // needs the cut, added by the caller
        case ConditionKind::ForecastScaffold:
        case ConditionKind::ProseForecastScaffold: {
          const auto it = forecasts.find(cut_id);
          if (it == forecasts.end()) break;
          for (const auto& f : it->second) {
            std::string setting = f.setting.label();
            if (cfg_.repeats > 1) setting += "#" + std::to_string(f.sample);
            out.push_back(kind == ConditionKind::ForecastScaffold ? ScoringCondition::forecast(f.z_truncated, setting)
                                                                  : ScoringCondition::prose_forecast(f.z_truncated, setting));
          }
          break;
        }
      }
    }
    return out;
  };
  auto add = [&](const std::string& cut_id, const std::string& paper_id, const ScoringCondition& cond, auto&& build) {
    try {
      const ScoredPrompt sp = build(cond);
      for (const auto& s : cfg_.scorers) tasks.push_back({cut_id, paper_id, cond.label, s, sp});
    } catch (const Error& e) {
      errors.push_back({{"cut_id", cut_id}, {"condition", cond.label}, {"status", "error"}, {"error", e.what()}});
    }
  };
  const bool true_suffix =
      std::find(cfg_.conditions.begin(), cfg_.conditions.end(), "true_suffix") != cfg_.conditions.end();
  for (const auto& c : cuts.equation) {
    auto build = [&](const ScoringCondition& cond) { return build_scorer_prompt_equation(c, cond, cfg_.scaffold); };
    auto conds = conditions_for(c.cut_id);
    if (true_suffix) conds.push_back(ScoringCondition::true_suffix(c.suffix_y));
    for (const auto& cond : conds) add(c.cut_id, c.paper_id, cond, build);
  }
  for (const auto& c : cuts.prose) {
    auto build = [&](const ScoringCondition& cond) { return build_scorer_prompt_prose(c, cond, cfg_.scaffold); };
    for (const auto& cond : conditions_for(c.cut_id)) add(c.cut_id, c.paper_id, cond, build);
  }

  std::vector<std::optional<ScoreRecord>> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  parallel_for(tasks.size(), cfg_.workers, [&](std::size_t i) {
    const auto& t = tasks[i];
    try {
      auto rec = gw.score_target(t.prompt, t.scorer, t.cut_id, t.label);
      rec.paper_id = t.paper_id;
      results[i] = std::move(rec);
    } catch (const ProviderError& e) {
      failures[i] = e.what();
    } catch (const AlignmentError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<Json> records;
  std::size_t straddled = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (results[i]) {
      straddled += results[i]->straddle_flag ? 1 : 0;
      records.push_back(to_json(*results[i]));
    } else {
      errors.push_back({{"cut_id", tasks[i].cut_id}, {"condition", tasks[i].label}, {"scorer", tasks[i].scorer},
                        {"status", "error"}, {"error", failures[i]}});
    }
  }
  const std::size_t ok = records.size();
  write_records(cfg_, "scores.jsonl", std::move(records));
  write_records(cfg_, "score_errors.jsonl", errors);
  record_stage("score", {{"scores", ok}, {"errors", errors.size()}, {"straddled_records", straddled}});
  return ok;
}

namespace {

AnalysisOutput run_analysis(const RunConfig& cfg) {
  std::vector<ScoreRecord> scores;
  for (const auto& j : read_stage_file(cfg, "scores.jsonl")) scores.push_back(score_record_from_json(j));
  std::vector<Forecast> forecasts;
  if (fs::exists(cfg.output_path("forecasts.jsonl"))) {
    for (const auto& j : read_jsonl(cfg.output_path("forecasts.jsonl"))) forecasts.push_back(forecast_from_json(j));
  }
  return analyze_scores(scores, forecasts, cfg);
}

}  // namespace

AnalysisOutput Pipeline::analyze() {
  auto out = run_analysis(cfg_);
  write_file(cfg_.output_path("aggregates.csv"), aggregates_csv(cfg_.run_id, out.aggregates));
  write_file(cfg_.output_path("ecdf.csv"), ecdf_csv(cfg_.run_id, out.ecdf));
  write_file(cfg_.output_path("medians.csv"), medians_csv(cfg_.run_id, out.medians));
  write_file(cfg_.output_path("reasoning.csv"), reasoning_csv(cfg_.run_id, out.reasoning));
  Json straddled = Json::object();
  for (const auto& [scorer, n] : out.straddled_cuts) straddled[scorer] = n;
  record_stage("analyze", {{"aggregate_rows", out.aggregates.size()},
                           {"straddled_cuts", straddled},
                           {"exclude_straddled", cfg_.exclude_straddled}});
  return out;
}

void Pipeline::report() {
  const auto out = run_analysis(cfg_);
  const MetricKind headline = headline_metric(cfg_);
  std::string md = fmt::format("# Likelihood-lift report\n\nRun `{}` (config digest `{}`), {} mode, seed {}.\n\n",
                               cfg_.run_id, cfg_.config_digest.substr(0, 16), cut_mode_name(cfg_.mode), cfg_.seed);
  const std::string manifest_path = cfg_.output_path("manifest.json");
  if (fs::exists(manifest_path)) {
    const Json m = Json::parse(read_file(manifest_path));
    if (m.contains("stages") && m["stages"].contains("ingest")) {
      md += fmt::format("Corpus: {} papers, {} characters.\n", m["stages"]["ingest"].value("papers", 0),
                        m["stages"]["ingest"].value("total_chars", 0));
    }
    if (m.contains("stages") && m["stages"].contains("cut")) {
      md += fmt::format("Cuts: {}.\n", m["stages"]["cut"].value("cuts", 0));
    }
    if (m.contains("spend")) md += fmt::format("Spend: {}.\n", m["spend"].value("spent", 0.0));
    md += "\n";
  }
  for (const auto& [scorer, n] : out.straddled_cuts) {
    md += fmt::format("Scorer `{}`: {} cuts with a boundary-straddling token{}.\n", scorer, n,
                      cfg_.exclude_straddled ? " (excluded)" : "");
  }
  md += fmt::format("\n## {} by condition and contrast\n\n", headline.name());
  md += "| Scorer | Subset | Contrast | Window | Mean | SE | Cuts | Papers | Frac. positive | Significant |\n";
  md += "|---|---|---|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : out.aggregates) {
    if (r.metric != headline.name()) continue;
    md += fmt::format("| {} | {} | {} | {} | {:.3f} | {:.3f} | {} | {} | {} | {} |\n", r.scorer, r.subset, r.contrast,
                      r.window ? std::to_string(*r.window) : "all", r.agg.mean, r.agg.clustered_se, r.agg.n_cuts,
                      r.agg.n_papers, r.agg.frac_positive ? fmt::format("{:.3f}", *r.agg.frac_positive) : "",
                      r.significant ? (*r.significant ? "yes" : "no") : "");
  }
  if (!out.medians.empty()) {
    md += "\n## Medians of per-cut lift\n\n| Scorer | Contrast | Median | Cuts |\n|---|---|---:|---:|\n";
    for (const auto& r : out.medians) {
      md += fmt::format("| {} | {} | {:.3f} | {} |\n", r.scorer, r.contrast, r.median, r.n_cuts);
    }
  }
  if (!out.reasoning.empty()) {
    md += "\n## Lift and reasoning tokens\n\n| Scorer | Setting | Mean lift | Hidden tokens | Visible tokens |\n";
    md += "|---|---|---:|---:|---:|\n";
    for (const auto& r : out.reasoning) {
      md += fmt::format("| {} | {} | {:.3f} | {} | {} |\n", r.scorer, r.setting, r.mean_lift,
                        r.mean_hidden_tokens ? fmt::format("{:.0f}", *r.mean_hidden_tokens) : "n/a",
                        r.mean_visible_tokens ? fmt::format("{:.0f}", *r.mean_visible_tokens) : "n/a");
    }
  }
  write_file(cfg_.output_path("report.md"), md);
  record_stage("report", {{"rows", out.aggregates.size()}});
}

ProbeReport Pipeline::probe_toy(const std::string& scorer_id) {
  ensure_provider(split_model_id(scorer_id).first);
  auto report = run_toy_probe(gateway(), scorer_id);
  write_file(cfg_.output_path("probe_report.md"), report.markdown());
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"case", r.case_name},
                    {"condition", std::string(probe_condition_name(r.condition))},
                    {"raw", r.raw},
                    {"clip_ll_2", r.clip2},
                    {"vs_empty", r.vs_empty},
                    {"recovery_probability", r.recovery_probability}});
  }
  write_file(cfg_.output_path("probe_report.json"),
             Json{{"run_id", cfg_.run_id}, {"scorer", scorer_id}, {"rows", rows}}.dump(2) + "\n");
  record_stage("probe-toy", {{"scorer", scorer_id}});
  return report;
}

}  // namespace liftbench
