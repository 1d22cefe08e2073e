#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "boocap/corpus/corpus.hpp"
#include "boocap/metrics/tokenizer.hpp"

namespace boocap::corpus {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary() = default;
  /// `words` excludes the specials; they are prepended at indices 0-3.
  Vocabulary(std::vector<std::string> words, int threshold);

  int size() const { return static_cast<int>(tokens_.size()); }
  int threshold() const { return threshold_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int index(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& lookup(int index) const;

  /// BOS + token ids + EOS.
  std::vector<int> encode(const metrics::TokenSeq& tokens) const;
  std::vector<int> encode(std::string_view caption) const;
  /// Stops at EOS; skips PAD and BOS.
  metrics::TokenSeq decode(const std::vector<int>& ids) const;

  std::string to_json() const;
  static Vocabulary from_json(std::string_view json);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && threshold_ == other.threshold_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int threshold_ = 1;
};

/// Counts tokens of the training captions only; keeps those with count >=
/// threshold, ordered by descending count then lexicographically.
Vocabulary build_vocabulary(const CaptionSet& captions, const std::vector<ImageId>& train_ids,
                            int threshold);

}  // namespace boocap::corpus
