#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "boocap/corpus/corpus.hpp"

namespace boocap::corpus {

struct SyntheticCategory {
  std::string name;
  /// Typical segment area as a fraction of the image.
  double size_scale = 0.05;
  /// Instances per appearance are drawn from [1, max_group].
  int max_group = 3;
};

/// Caption templates use the placeholders
///   {count}   count word of the subject category (one/two/three/several)
///   {size}    big/small for the subject's largest instance
///   {subject} category holding the largest instance
///   {second}  category holding the largest instance among the other categories
///   {count2}  count word of {second}
///   {others}  number of other categories present (no/one/two/three/several)
/// A template may carry a fallback after '|' used when the scene has no {second}.
struct SyntheticSpec {
  std::vector<SyntheticCategory> categories;
  std::size_t scene_count = 500;
  int max_instances = 8;
  int image_width = 640;
  int image_height = 480;
  /// Normalized area at or above which the size word is "big".
  double big_threshold = 0.12;
  /// Log-normal spread of instance areas around the category scale.
  double size_spread = 0.7;
  ImageId first_image_id = 1;
  std::vector<std::string> templates;

  /// Eight categories with well separated size scales and five templates.
  static SyntheticSpec defaults();
};

struct SyntheticCorpus {
  CategoryTable categories;
  std::vector<Scene> scenes;
  CaptionSet captions;
};

/// Pure function of (spec, seed).
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Renders one template against a scene; exposed for tests and for the lexicon.
std::string render_caption(const std::string& tmpl, const Scene& scene,
                           const CategoryTable& categories, double big_threshold);

std::string count_word(std::size_t n);

}  // namespace boocap::corpus
