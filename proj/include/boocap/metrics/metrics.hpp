#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "boocap/corpus/corpus.hpp"
#include "boocap/metrics/tokenizer.hpp"

namespace boocap::metrics {

using corpus::ImageId;

inline constexpr int kMaxN = 4;

/// n-gram key: tokens joined by a single space (tokens never contain whitespace).
using NGram = std::string;

/// n-gram counts for n = 1..4 of one token sequence.
struct NGramProfile {
  std::array<std::map<NGram, int>, kMaxN> counts;
  int length = 0;

  static NGramProfile of(const TokenSeq& tokens);
  /// Number of n-gram slots, max(length - n + 1, 0).
  int slots(int n) const { return std::max(length - n + 1, 0); }
};

/// Document frequencies over a reference corpus; one document per image.
class IdfTable {
 public:
  IdfTable() = default;
  explicit IdfTable(const std::map<ImageId, std::vector<TokenSeq>>& references);

  /// log(N / max(df, 1)).
  double idf(int n, const NGram& gram) const;
  std::size_t documents() const { return documents_; }

 private:
  std::array<std::map<NGram, int>, kMaxN> df_;
  std::size_t documents_ = 0;
};

enum class CiderVariant { cider, cider_d };
std::string_view to_string(CiderVariant v);
CiderVariant parse_cider_variant(std::string_view text);

/// B1..B4 for one candidate.
std::array<double, kMaxN> bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& refs);
double rouge_l(const TokenSeq& candidate, const std::vector<TokenSeq>& refs);
/// One image against its references under a prepared idf table.
double cider_image(const TokenSeq& candidate, const std::vector<TokenSeq>& refs, const IdfTable& idf,
                   CiderVariant variant);

struct CiderResult {
  std::map<ImageId, double> per_image;
  double mean = 0;
};

/// idf comes from `refs`. Throws ValidationError for an image without references
/// or without a candidate.
CiderResult cider(const std::map<ImageId, TokenSeq>& candidates,
                  const std::map<ImageId, std::vector<TokenSeq>>& refs, CiderVariant variant);

/// Sums clipped matches and lengths over all images before combining.
std::array<double, kMaxN> corpus_bleu(const std::map<ImageId, TokenSeq>& candidates,
                                      const std::map<ImageId, std::vector<TokenSeq>>& refs);

struct ImageScores {
  ImageId image_id = 0;
  std::array<double, kMaxN> bleu{};
  double rouge_l = 0;
  double cider = 0;
};

struct EvalReport {
  CiderVariant variant = CiderVariant::cider_d;
  std::vector<ImageScores> images;  // ascending image id
  std::array<double, kMaxN> mean_bleu{};
  std::array<double, kMaxN> corpus_bleu{};
  double mean_rouge_l = 0;
  double mean_cider = 0;

  std::size_t count() const { return images.size(); }
  std::string to_json() const;
  /// `image_id,b1,b2,b3,b4,rouge_l,cider`
  std::string to_csv() const;
};

/// Tokenizes and scores `generated` for `ids`; idf comes from the references of
/// those ids. Throws ValidationError for an empty id set or missing captions.
EvalReport evaluate(const std::map<ImageId, std::string>& generated, const corpus::CaptionSet& references,
                    const std::vector<ImageId>& ids, CiderVariant variant = CiderVariant::cider_d);

/// Token-level form. When `idf` is null it is built from the references of `ids`.
EvalReport evaluate_tokens(const std::map<ImageId, TokenSeq>& generated,
                           const std::map<ImageId, std::vector<TokenSeq>>& references,
                           const std::vector<ImageId>& ids, CiderVariant variant = CiderVariant::cider_d,
                           const IdfTable* idf = nullptr);

}  // namespace boocap::metrics
