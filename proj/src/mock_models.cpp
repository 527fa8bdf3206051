#include "liftbench/mock_models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <mutex>

#include "liftbench/errors.hpp"
#include "liftbench/text.hpp"

namespace liftbench {

namespace {

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::size_t code_point_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;
}

// Context key: order in the top byte, history bytes below, low byte free for
// the predicted byte.
std::uint64_t context_key(std::string_view text, std::size_t pos, int order) {
  std::uint64_t key = static_cast<std::uint64_t>(order) << 56;
  for (int i = 1; i <= order; ++i) {
    key |= static_cast<std::uint64_t>(static_cast<unsigned char>(text[pos - i])) << (8 * i);
  }
  return key;
}

// Runs of non-space characters, each with the whitespace that follows it.
std::vector<std::string_view> whitespace_pieces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<std::string_view> mock_tokenize(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    std::size_t j = i + 1;
    if (c == '\\' && j < n && is_letter(text[j])) {
      while (j < n && is_letter(text[j])) ++j;
    } else if (is_letter(c)) {
      while (j < n && is_letter(text[j]) && j - i < 4) ++j;
    } else if (c == ' ') {
      while (j < n && text[j] == ' ' && j - i < 4) ++j;
    } else if (static_cast<unsigned char>(c) >= 0x80) {
      j = std::min(n, i + code_point_length(static_cast<unsigned char>(c)));
    }
    out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

CharNgramModel::CharNgramModel(NgramConfig config) : config_(config) {
  if (config_.max_history < 0 || config_.max_history > 6) throw ConfigError("max_history must be in [0, 6]");
}

void CharNgramModel::add(Counts& counts, std::string_view text, std::size_t pos, double weight,
                         const Counts* base) const {
  const auto c = static_cast<unsigned char>(text[pos]);
  counts.unigram[c] += weight;
  counts.unigram_total += weight;
  const int top = static_cast<int>(std::min<std::size_t>(config_.max_history, pos));
  for (int k = 1; k <= top; ++k) {
    const std::uint64_t ck = context_key(text, pos, k);
    const std::uint64_t pk = ck | c;
    auto [it, fresh] = counts.pairs.try_emplace(pk, 0.0);
    it->second += weight;
    auto& ctx = counts.contexts[ck];
    ctx.total += weight;
    if (fresh && (base == nullptr || !base->pairs.contains(pk))) ++ctx.types;
  }
}

void CharNgramModel::train(std::string_view text) {
  for (std::size_t pos = 0; pos < text.size(); ++pos) add(static_, text, pos, 1.0, nullptr);
}

std::vector<double> CharNgramModel::byte_logprobs(std::string_view text) const {
  Counts seen;
  const double w = config_.cache_weight;
  const double alpha = config_.unigram_alpha;
  std::vector<double> out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    const auto c = static_cast<unsigned char>(text[pos]);
    double p = (static_.unigram[c] + w * seen.unigram[c] + alpha) /
               (static_.unigram_total + w * seen.unigram_total + 256.0 * alpha);
    const int top = static_cast<int>(std::min<std::size_t>(config_.max_history, pos));
    for (int k = 1; k <= top; ++k) {
      const std::uint64_t ck = context_key(text, pos, k);
      double total = 0.0;
      double types = 0.0;
      if (auto it = static_.contexts.find(ck); it != static_.contexts.end()) {
        total += it->second.total;
        types += it->second.types;
      }
      if (auto it = seen.contexts.find(ck); it != seen.contexts.end()) {
        total += it->second.total;
        types += it->second.types;
      }
      // a longer context cannot have been seen if this one was not
      if (total == 0.0) break;
      double pair = 0.0;
      const std::uint64_t pk = ck | c;
      if (auto it = static_.pairs.find(pk); it != static_.pairs.end()) pair += it->second;
      if (auto it = seen.pairs.find(pk); it != seen.pairs.end()) pair += it->second;
      p = (pair + types * p) / (total + types);
    }
    out.push_back(std::log(p));
    add(seen, text, pos, w, &static_);
  }
  return out;
}

std::vector<WireToken> MockNgramScorer::echo_logprobs(const std::string& text, const std::string& /*model*/) {
  const auto lps = model_.byte_logprobs(text);
  std::vector<WireToken> out;
  std::size_t pos = 0;
  for (const auto tok : mock_tokenize(text)) {
    double lp = 0.0;
    for (std::size_t i = 0; i < tok.size(); ++i) lp += lps[pos + i];
    out.push_back({std::string(tok), pos == 0 ? std::nullopt : std::optional<double>(lp)});
    pos += tok.size();
  }
  return out;
}

CharNgramModel train_mock_scorer(const std::string& dir, NgramConfig config) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw MissingInput("training directory " + dir + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  CharNgramModel model(config);
  for (const auto& f : files) model.train(read_file(f.string()));
  return model;
}

void MockPredictor::add_answer(const std::string& prompt, std::string answer) {
  std::unique_lock lock(mu_);
  answers_[sha256_hex(prompt)] = std::move(answer);
}

PredictorResponse MockPredictor::generate(const std::string& prompt, const PredictorSetting& setting) {
  PredictorResponse resp;
  resp.hidden_reasoning_tokens = 256L * static_cast<long>(setting.reasoning_effort);
  if (setting.model_id == "empty") {
    resp.visible_tokens = 0;
    return resp;
  }
  if (setting.model_id != "oracle" && setting.model_id != "noise") {
    throw ProviderError("unknown mock predictor '" + setting.model_id + "'");
  }
  std::string answer;
  {
    std::shared_lock lock(mu_);
    const auto it = answers_.find(sha256_hex(prompt));
    if (it == answers_.end()) throw ProviderError("mock predictor has no answer for this prompt");
    answer = it->second;
  }
  if (setting.model_id == "noise") {
    auto pieces = whitespace_pieces(answer);
    SeededRng rng(fnv1a64(prompt));
    for (std::size_t i = pieces.size(); i > 1; --i) std::swap(pieces[i - 1], pieces[rng.below(i)]);
    std::string shuffled;
    for (const auto p : pieces) shuffled += p;
    answer = std::move(shuffled);
  }
  resp.visible_tokens = static_cast<long>(mock_tokenize(answer).size());
  resp.text = std::move(answer);
  return resp;
}

}  // namespace liftbench
