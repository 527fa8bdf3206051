#pragma once

// Deterministic offline stand-ins for the hosted models.
//
// The scorer is a byte-level n-gram model: static counts from a training
// corpus plus a cache of the text seen so far in the request, so material
// copied from earlier in the prompt becomes cheap to predict. Orders are
// interpolated Witten-Bell style down to an additively smoothed unigram.

#include <array>
#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "liftbench/gateway.hpp"

namespace liftbench {

/// Splits text into mock tokens. Control words (backslash + letters) are one
/// token, letter runs are cut into pieces of at most four, digits and
/// newlines stand alone, spaces group up to four, and anything else is one
/// code point per token.
std::vector<std::string_view> mock_tokenize(std::string_view text);

struct NgramConfig {
  int max_history = 6;       // longest conditioning context, in bytes
  double unigram_alpha = 0.5;
  double cache_weight = 2.0;  // weight of in-request counts relative to static ones
};

class CharNgramModel {
 public:
  explicit CharNgramModel(NgramConfig config = {});

  void train(std::string_view text);
  /// Natural-log probability of every byte of `text` given what precedes
  /// it in `text`, with the in-request cache updated as it goes.
  std::vector<double> byte_logprobs(std::string_view text) const;

  const NgramConfig& config() const { return config_; }

 private:
  struct Context {
    double total = 0.0;
    std::uint32_t types = 0;
  };
  struct Counts {
    std::unordered_map<std::uint64_t, double> pairs;
    std::unordered_map<std::uint64_t, Context> contexts;
    std::array<double, 256> unigram{};
    double unigram_total = 0.0;
  };

  void add(Counts& counts, std::string_view text, std::size_t pos, double weight, const Counts* base) const;

  NgramConfig config_;
  Counts static_;
};

/// Scorer backend over CharNgramModel and mock_tokenize. The model name is
/// ignored; one trained model serves every request.
class MockNgramScorer : public ScorerBackend {
 public:
  explicit MockNgramScorer(CharNgramModel model) : model_(std::move(model)) {}
  std::vector<WireToken> echo_logprobs(const std::string& text, const std::string& model) override;

 private:
  CharNgramModel model_;
};

/// Trains on every regular file under `dir` in lexicographic path order.
CharNgramModel train_mock_scorer(const std::string& dir, NgramConfig config = {});

/// Predictor backend driven by an answer key. The model id picks the
/// behaviour: "oracle" returns the stored answer, "noise" a seeded shuffle of
/// its whitespace-separated pieces, "empty" nothing. Unknown prompts are a ProviderError for
/// oracle and noise.
class MockPredictor : public PredictorBackend {
 public:
  void add_answer(const std::string& prompt, std::string answer);
  PredictorResponse generate(const std::string& prompt, const PredictorSetting& setting) override;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::string> answers_;  // prompt digest -> answer
};

}  // namespace liftbench
