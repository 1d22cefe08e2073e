#include "boocap/analysis/stats.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "boocap/error.hpp"

namespace boocap::analysis {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lex;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError("lexicon line " + std::to_string(line_no) + ": expected category<TAB>terms");
    }
    const std::string category(trim(line.substr(0, tab)));
    if (category.empty()) throw ParseError("lexicon line " + std::to_string(line_no) + ": empty category");
    lex.terms_[category];
    auto terms = line.substr(tab + 1);
    while (!terms.empty()) {
      const auto comma = terms.find(',');
      const auto term = trim(terms.substr(0, comma));
      if (!term.empty()) lex.add(category, term);
      terms = comma == std::string_view::npos ? std::string_view{} : terms.substr(comma + 1);
    }
  }
  return lex;
}

Lexicon Lexicon::from_categories(const corpus::CategoryTable& categories) {
  Lexicon lex;
  lex.cover(categories);
  return lex;
}

void Lexicon::add(const std::string& category, std::string_view term) {
  auto tokens = metrics::tokenize(term);
  if (tokens.empty()) return;
  auto& list = terms_[category];
  if (std::find(list.begin(), list.end(), tokens) == list.end()) list.push_back(std::move(tokens));
}

void Lexicon::cover(const corpus::CategoryTable& categories) {
  for (const auto& c : categories.entries()) {
    add(c.name, c.name);
    const auto tokens = metrics::tokenize(c.name);
    if (tokens.size() > 1) add(c.name, tokens.back());
  }
}

const std::vector<metrics::TokenSeq>& Lexicon::terms(const std::string& category) const {
  static const std::vector<metrics::TokenSeq> kNone;
  auto it = terms_.find(category);
  return it == terms_.end() ? kNone : it->second;
}

bool match_category_mention(const metrics::TokenSeq& tokens, const std::string& category, const Lexicon& lexicon) {
  for (const auto& term : lexicon.terms(category)) {
    if (term.size() > tokens.size()) continue;
    if (std::search(tokens.begin(), tokens.end(), term.begin(), term.end()) != tokens.end()) return true;
  }
  return false;
}

std::vector<double> category_distribution(const std::vector<const corpus::Scene*>& scenes,
                                          const corpus::CategoryTable& categories) {
  std::vector<double> counts(categories.size(), 0.0);
  for (const auto* s : scenes) {
    std::set<std::size_t> present;
    for (const auto& inst : s->instances) present.insert(categories.position_of(inst.category_id));
    for (auto p : present) counts[p] += 1;
  }
  double total = 0;
  for (double c : counts) total += c;
  if (total > 0) {
    for (double& c : counts) c /= total;
  }
  return counts;
}

CategoryStats compute_category_stats(const std::vector<const corpus::Scene*>& train_scenes,
                                     const corpus::CaptionSet& captions, const corpus::CategoryTable& categories,
                                     const Lexicon& lexicon) {
  CategoryStats out;
  for (const auto& c : categories.entries()) out.rows.push_back({c.id, c.name, 0, 0, std::nullopt});
  for (const auto* s : train_scenes) {
    std::set<std::size_t> present;
    for (const auto& inst : s->instances) present.insert(categories.position_of(inst.category_id));
    if (present.empty()) continue;
    std::vector<metrics::TokenSeq> toks;
    if (auto it = captions.find(s->image_id); it != captions.end()) {
      for (const auto& cap : it->second) toks.push_back(metrics::tokenize(cap));
    }
    for (auto p : present) {
      auto& row = out.rows[p];
      ++row.depicted;
      const bool mentioned = std::any_of(toks.begin(), toks.end(), [&](const metrics::TokenSeq& t) {
        return match_category_mention(t, row.name, lexicon);
      });
      if (mentioned) ++row.depicted_mentioned;
    }
  }
  for (auto& row : out.rows) {
    if (row.depicted > 0) row.p_mention = static_cast<double>(row.depicted_mentioned) / static_cast<double>(row.depicted);
  }
  return out;
}

std::string CategoryStats::to_csv() const {
  std::ostringstream os;
  os << "category_id,name,f_v,f_tv,p_t_given_v";
  for (const auto& [split, _] : docfreq) os << ",docfreq_" << split;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << r.category_id << ',' << r.name << ',' << r.depicted << ',' << r.depicted_mentioned << ',';
    if (r.p_mention) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.p_mention);
      os << buf;
    }
    for (const auto& [split, dist] : docfreq) {
      std::snprintf(buf, sizeof buf, "%.17g", i < dist.size() ? dist[i] : 0.0);
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace boocap::analysis
