#pragma once

#include <memory>
#include <random>
#include <string>

#include "boocap/corpus/corpus.hpp"

namespace oracle {

inline std::shared_ptr<const boocap::corpus::CategoryTable> table_of(int n) {
  std::vector<boocap::corpus::Category> cats;
  for (int i = 0; i < n; ++i) cats.push_back({3 * i + 2, "c" + std::to_string(i)});
  return std::make_shared<const boocap::corpus::CategoryTable>(std::move(cats));
}

/// Random scene over `cats` with 0..max_instances instances, boxes inside the image.
inline boocap::corpus::Scene random_scene(std::mt19937_64& gen, const boocap::corpus::CategoryTable& cats,
                                          boocap::corpus::ImageId id, int max_instances = 16) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  boocap::corpus::Scene s;
  s.image_id = id;
  s.width = 20 + static_cast<int>(gen() % 600);
  s.height = 20 + static_cast<int>(gen() % 600);
  const int k = static_cast<int>(gen() % static_cast<unsigned>(max_instances + 1));
  for (int i = 0; i < k; ++i) {
    boocap::corpus::ObjectInstance inst;
    // skew towards few categories so truncation and ties occur
    const auto pos = static_cast<std::size_t>(gen() % 3 == 0 ? gen() % cats.size() : gen() % std::min<std::size_t>(3, cats.size()));
    inst.category_id = cats[pos].id;
    const double w = std::max(1.0, std::floor(u(gen) * s.width));
    const double h = std::max(1.0, std::floor(u(gen) * s.height));
    inst.bbox = {std::floor(u(gen) * (s.width - w)), std::floor(u(gen) * (s.height - h)), w, h};
    // sometimes duplicate areas to exercise tie-breaks
    inst.segment_area = gen() % 4 == 0 ? w * h : std::floor(u(gen) * w * h);
    s.instances.push_back(inst);
  }
  return s;
}

}  // namespace oracle
