#pragma once

// Stage-file pipeline: ingest -> cut -> forecast -> score -> analyze ->
// report. Each stage reads the previous stage's JSON-lines file from the
// output directory and writes its own, so any stage can be rerun alone.
// Provider responses are pinned by the gateway cache, which makes reruns
// reproduce byte-identical artifacts.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "liftbench/analysis.hpp"
#include "liftbench/config.hpp"
#include "liftbench/gateway.hpp"
#include "liftbench/mock_models.hpp"
#include "liftbench/probe.hpp"

namespace liftbench {

struct AggregateRow {
  std::string scorer;
  std::string contrast;  // "lhs|rhs", or a single condition for absolute scores
  std::string metric;
  std::optional<std::size_t> window;
  std::string subset = "all";
  LiftAggregate agg;
  std::optional<bool> significant;
};

struct EcdfRow {
  std::string scorer;
  std::string contrast;
  std::string metric;
  double x = 0.0;
  double f = 0.0;
};

struct MedianRow {
  std::string scorer;
  std::string contrast;
  std::string metric;
  double median = 0.0;
  std::size_t n_cuts = 0;
};

struct ReasoningRow {
  std::string scorer;
  std::string setting;
  std::string metric;
  double mean_lift = 0.0;
  std::optional<double> mean_hidden_tokens;
  std::optional<double> mean_visible_tokens;
  std::size_t n_cuts = 0;
};

struct AnalysisOutput {
  std::vector<AggregateRow> aggregates;
  std::vector<EcdfRow> ecdf;
  std::vector<MedianRow> medians;
  std::vector<ReasoningRow> reasoning;
  /// scorer -> number of cuts with a boundary-straddling token in any condition
  std::map<std::string, std::size_t> straddled_cuts;
};

/// Condition label for a forecast: "forecast:<setting>" (or
/// "prose_forecast:..."), with "#<sample>" appended when repeats > 1.
std::string forecast_condition_label(CutMode mode, const Forecast& f, int repeats);

/// Default contrasts over the condition labels present: every condition
/// against the main control and against the empty scaffold, the true suffix
/// against each forecast, and adjacent reasoning efforts of the same model.
std::vector<std::string> default_contrasts(const std::vector<std::string>& labels, CutMode mode);

/// The metric used for ECDFs, medians and reasoning diagnostics.
MetricKind headline_metric(const RunConfig& config);

AnalysisOutput analyze_scores(const std::vector<ScoreRecord>& scores, const std::vector<Forecast>& forecasts,
                              const RunConfig& config);

std::string aggregates_csv(const std::string& run_id, const std::vector<AggregateRow>& rows);
std::string ecdf_csv(const std::string& run_id, const std::vector<EcdfRow>& rows);
std::string medians_csv(const std::string& run_id, const std::vector<MedianRow>& rows);
std::string reasoning_csv(const std::string& run_id, const std::vector<ReasoningRow>& rows);

class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  const RunConfig& config() const { return cfg_; }

  /// Replaces the URL fetcher (default: HTTP, refused when offline).
  void set_fetcher(Fetcher fetcher) { fetcher_ = std::move(fetcher); }

  /// The gateway with every configured provider registered. Built on first use.
  ModelGateway& gateway();

  std::size_t ingest();
  std::size_t cut();
  std::size_t forecast();
  std::size_t score();
  AnalysisOutput analyze();
  void report();
  ProbeReport probe_toy(const std::string& scorer_id);

 private:
  void record_stage(const std::string& stage, const Json& summary);
  /// Registers a configured provider with the gateway on first use.
  void ensure_provider(const std::string& id);

  RunConfig cfg_;
  Fetcher fetcher_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<SpendMeter> spend_;
  std::unique_ptr<ModelGateway> gateway_;
  std::shared_ptr<MockPredictor> mock_predictor_;
  std::set<std::string> registered_;
};

}  // namespace liftbench
