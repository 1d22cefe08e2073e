#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boocap/corpus/corpus.hpp"
#include "boocap/metrics/tokenizer.hpp"

namespace boocap::analysis {

/// Category name -> match terms (tokenized). Every category carries at least its
/// own label and the label's head noun (last token).
class Lexicon {
 public:
  /// Lines `category<TAB>term1,term2,...`; blank lines and lines starting with '#'
  /// are skipped.
  static Lexicon parse(std::string_view text);
  /// Labels and head nouns only.
  static Lexicon from_categories(const corpus::CategoryTable& categories);

  /// Adds label and head noun for every category (idempotent).
  void cover(const corpus::CategoryTable& categories);
  void add(const std::string& category, std::string_view term);
  const std::vector<metrics::TokenSeq>& terms(const std::string& category) const;
  bool has(const std::string& category) const { return terms_.contains(category); }

 private:
  std::map<std::string, std::vector<metrics::TokenSeq>> terms_;
};

/// True iff a term of the category occurs as a contiguous token span.
bool match_category_mention(const metrics::TokenSeq& tokens, const std::string& category, const Lexicon& lexicon);

/// Per split: images containing c / sum over categories of images containing c'.
/// All zeros when no image has any instance.
std::vector<double> category_distribution(const std::vector<const corpus::Scene*>& scenes,
                                          const corpus::CategoryTable& categories);

struct CategoryStat {
  int category_id = 0;
  std::string name;
  long depicted = 0;            // f(v_c): training images containing c
  long depicted_mentioned = 0;  // f(t_c, v_c)
  std::optional<double> p_mention;  // p(t_c | v_c); empty when never depicted
};

struct CategoryStats {
  std::vector<CategoryStat> rows;  // category table order
  std::map<std::string, std::vector<double>> docfreq;  // split name -> per-category distribution

  /// `category_id,name,f_v,f_tv,p_t_given_v,<docfreq_split...>`
  std::string to_csv() const;
};

CategoryStats compute_category_stats(const std::vector<const corpus::Scene*>& train_scenes,
                                     const corpus::CaptionSet& captions, const corpus::CategoryTable& categories,
                                     const Lexicon& lexicon);

}  // namespace boocap::analysis
