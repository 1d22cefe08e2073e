#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace boocap::corpus {

using ImageId = std::int64_t;

struct Category {
  int id = 0;
  std::string name;

  bool operator==(const Category&) const = default;
};

/// Ordered category list. Positions are 0-based and stable; every artifact that
/// depends on the order serializes the table alongside itself.
class CategoryTable {
 public:
  CategoryTable() = default;
  /// Keeps the given order. Throws ValidationError on duplicate ids or names.
  explicit CategoryTable(std::vector<Category> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Category& operator[](std::size_t pos) const { return entries_[pos]; }
  const std::vector<Category>& entries() const { return entries_; }

  std::optional<std::size_t> find_id(int id) const;
  std::optional<std::size_t> find_name(std::string_view name) const;
  /// Throws ValidationError naming the id when absent.
  std::size_t position_of(int id) const;

  bool operator==(const CategoryTable& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Category> entries_;
  std::unordered_map<int, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// Top-left origin, pixels.
struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool operator==(const BBox&) const = default;
};

struct ObjectInstance {
  int category_id = 0;
  BBox bbox;
  double segment_area = 0;  // pixels^2, 0 <= a <= w*h
  double confidence = 1.0;  // 1.0 for ground truth

  bool operator==(const ObjectInstance&) const = default;
};

struct Scene {
  ImageId image_id = 0;
  int width = 0;
  int height = 0;
  std::vector<ObjectInstance> instances;

  bool operator==(const Scene&) const = default;
};

/// image id -> reference captions, stored verbatim.
using CaptionSet = std::map<ImageId, std::vector<std::string>>;

struct InstancesFile {
  CategoryTable categories;
  std::vector<Scene> scenes;
};

/// COCO-style instances JSON. Categories are ordered by ascending id, scenes follow
/// the `images` order and annotations are attached in input order. Boxes are
/// clamped to the image; `iscrowd` flags are ignored.
InstancesFile parse_instances(std::string_view json);

/// Detector output (list of {image_id, category_id, bbox, score}). Image sizes come
/// from `images` (usually the ground-truth scenes); every listed image yields a
/// Scene, possibly empty. Missing segmentation area falls back to w*h.
std::vector<Scene> parse_detections(std::string_view json, double conf_threshold,
                                    const CategoryTable& categories,
                                    const std::vector<Scene>& images);

/// COCO-style captions JSON. Image ids are validated against `known_images` when
/// given, otherwise against the file's own `images` array if it has one.
CaptionSet parse_captions(std::string_view json, const std::set<ImageId>* known_images = nullptr);

std::string write_instances(const CategoryTable& categories, const std::vector<Scene>& scenes);
std::string write_captions(const CaptionSet& captions);
std::string write_detections(const std::vector<Scene>& scenes);

struct Splits {
  std::vector<ImageId> train;
  std::vector<ImageId> val;
  std::vector<ImageId> test;

  bool operator==(const Splits&) const = default;
};

/// Deterministic seeded partition; each part is returned in ascending id order.
Splits make_splits(std::vector<ImageId> image_ids, std::size_t val_size, std::size_t test_size,
                   std::uint64_t seed);

/// Three lines `train:`, `val:`, `test:` each followed by comma-separated ids.
Splits parse_split_file(std::string_view text);
std::string write_split_file(const Splits& splits);
/// Throws ValidationError if the parts overlap or (when `corpus` is given) do not
/// cover it exactly.
void validate_splits(const Splits& splits, const std::vector<ImageId>* corpus = nullptr);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace boocap::corpus
