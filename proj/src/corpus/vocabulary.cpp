#include "boocap/corpus/vocabulary.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "boocap/error.hpp"

namespace boocap::corpus {

namespace {
const char* const kSpecials[Vocabulary::kNumSpecials] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary::Vocabulary(std::vector<std::string> words, int threshold) : threshold_(threshold) {
  tokens_.reserve(words.size() + kNumSpecials);
  for (const char* s : kSpecials) tokens_.emplace_back(s);
  for (auto& w : words) tokens_.push_back(std::move(w));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::lookup(int index) const {
  if (index < 0 || index >= size()) {
    throw ValidationError("token index " + std::to_string(index) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

std::vector<int> Vocabulary::encode(const metrics::TokenSeq& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(kBos);
  for (const auto& t : tokens) ids.push_back(index(t));
  ids.push_back(kEos);
  return ids;
}

std::vector<int> Vocabulary::encode(std::string_view caption) const {
  return encode(metrics::tokenize(caption));
}

metrics::TokenSeq Vocabulary::decode(const std::vector<int>& ids) const {
  metrics::TokenSeq out;
  for (int id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(lookup(id));
  }
  return out;
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["threshold"] = threshold_;
  j["tokens"] = std::vector<std::string>(tokens_.begin() + kNumSpecials, tokens_.end());
  return j.dump();
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
    return Vocabulary(j.at("tokens").get<std::vector<std::string>>(), j.at("threshold").get<int>());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed vocabulary: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed vocabulary: ") + e.what());
  }
}

Vocabulary build_vocabulary(const CaptionSet& captions, const std::vector<ImageId>& train_ids,
                            int threshold) {
  if (threshold < 1) throw ConfigError("vocabulary threshold must be >= 1");
  std::map<std::string, long> counts;
  std::size_t n_captions = 0;
  for (ImageId id : train_ids) {
    auto it = captions.find(id);
    if (it == captions.end()) continue;
    for (const auto& c : it->second) {
      ++n_captions;
      for (auto& t : metrics::tokenize(c)) ++counts[t];
    }
  }
  if (n_captions == 0) throw ValidationError("no training captions to build a vocabulary from");

  std::vector<std::pair<std::string, long>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= threshold) kept.emplace_back(tok, n);
  }
  // `counts` is already lexicographic, so a stable sort on count finishes the order.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [tok, n] : kept) {
    if (std::find(std::begin(kSpecials), std::end(kSpecials), tok) != std::end(kSpecials)) continue;
    words.push_back(tok);
  }
  return Vocabulary(std::move(words), threshold);
}

}  // namespace boocap::corpus
