#include "boocap/corpus/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "boocap/error.hpp"
#include "boocap/rng.hpp"

namespace boocap::corpus {

SyntheticSpec SyntheticSpec::defaults() {
  SyntheticSpec s;
  s.categories = {
      {"bus", 0.30, 2},   {"horse", 0.19, 2}, {"person", 0.12, 3}, {"dog", 0.075, 3},
      {"bench", 0.045, 4}, {"bird", 0.028, 4}, {"cup", 0.017, 5},  {"spoon", 0.010, 5},
  };
  s.templates = {
      "{count} {subject} in the picture .",
      "{count} {size} {subject} in the picture .",
      "{count} {size} {subject} with {others} other objects .",
      "{count} {size} {subject} with {others} other objects nearby .",
      "{count} {size} {subject} next to {count2} {second} .|{count} {size} {subject} on its own .",
  };
  return s;
}

std::string count_word(std::size_t n) {
  switch (n) {
    case 0: return "no";
    case 1: return "one";
    case 2: return "two";
    case 3: return "three";
    default: return "several";
  }
}

namespace {

struct CategorySummary {
  int category_id = 0;
  std::size_t count = 0;
  double max_area = 0;  // normalized
};

/// Present categories, largest instance first (ties: ascending category id).
std::vector<CategorySummary> summarize(const Scene& scene) {
  std::map<int, CategorySummary> by_id;
  const double image_area = static_cast<double>(scene.width) * scene.height;
  for (const auto& inst : scene.instances) {
    auto& s = by_id[inst.category_id];
    s.category_id = inst.category_id;
    ++s.count;
    s.max_area = std::max(s.max_area, inst.segment_area / image_area);
  }
  std::vector<CategorySummary> out;
  for (auto& [id, s] : by_id) out.push_back(s);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.max_area > b.max_area; });
  return out;
}

void replace_all(std::string& s, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string render_caption(const std::string& tmpl, const Scene& scene,
                           const CategoryTable& categories, double big_threshold) {
  const auto summary = summarize(scene);
  if (summary.empty()) return "an empty picture .";
  std::string text = tmpl;
  const auto bar = tmpl.find('|');
  if (bar != std::string::npos) {
    text = summary.size() > 1 ? tmpl.substr(0, bar) : tmpl.substr(bar + 1);
  }
  const auto& subj = summary[0];
  replace_all(text, "{count}", count_word(subj.count));
  replace_all(text, "{size}", subj.max_area >= big_threshold ? "big" : "small");
  replace_all(text, "{subject}", categories[categories.position_of(subj.category_id)].name);
  replace_all(text, "{others}", count_word(summary.size() - 1));
  if (summary.size() > 1) {
    const auto& second = summary[1];
    replace_all(text, "{count2}", count_word(second.count));
    replace_all(text, "{second}", categories[categories.position_of(second.category_id)].name);
  }
  return text;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.categories.empty()) throw ConfigError("synthetic spec has no categories");
  if (spec.max_instances < 1) throw ConfigError("max_instances must be >= 1");
  if (spec.image_width <= 0 || spec.image_height <= 0) throw ConfigError("image size must be positive");
  if (spec.templates.empty()) throw ConfigError("synthetic spec has no caption templates");

  std::vector<Category> cats;
  for (std::size_t i = 0; i < spec.categories.size(); ++i) {
    cats.push_back({static_cast<int>(i + 1), spec.categories[i].name});
  }
  SyntheticCorpus out;
  out.categories = CategoryTable(std::move(cats));

  Rng rng(derive_seed(seed, "synthetic"));
  const double W = spec.image_width;
  const double H = spec.image_height;
  for (std::size_t n = 0; n < spec.scene_count; ++n) {
    Scene scene;
    scene.image_id = spec.first_image_id + static_cast<ImageId>(n);
    scene.width = spec.image_width;
    scene.height = spec.image_height;

    auto remaining = static_cast<int>(rng.range(1, spec.max_instances));
    std::vector<std::size_t> order(spec.categories.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t k = 0; k < order.size() && remaining > 0; ++k) {
      const auto& sc = spec.categories[order[k]];
      const int group = std::min(remaining, static_cast<int>(rng.range(1, std::max(1, sc.max_group))));
      remaining -= group;
      for (int g = 0; g < group; ++g) {
        const double area =
            std::clamp(sc.size_scale * std::exp(spec.size_spread * rng.normal()), 0.002, 0.9);
        const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        const double wn = std::min(1.0, std::sqrt(area * aspect));
        const double hn = std::min(1.0, area / wn);
        const double w = wn * W;
        const double h = hn * H;
        const double x = rng.uniform() * (W - w);
        const double y = rng.uniform() * (H - h);
        const double fill = rng.uniform(0.5, 1.0);
        scene.instances.push_back({static_cast<int>(order[k] + 1), {x, y, w, h}, fill * w * h, 1.0});
      }
    }
    std::stable_sort(scene.instances.begin(), scene.instances.end(),
                     [](const auto& a, const auto& b) { return a.category_id < b.category_id; });

    auto& caps = out.captions[scene.image_id];
    for (const auto& t : spec.templates) {
      caps.push_back(render_caption(t, scene, out.categories, spec.big_threshold));
    }
    out.scenes.push_back(std::move(scene));
  }
  return out;
}

}  // namespace boocap::corpus
