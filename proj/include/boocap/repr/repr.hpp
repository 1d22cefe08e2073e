#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boocap/corpus/corpus.hpp"

namespace boocap::repr {

using corpus::CategoryTable;
using corpus::ImageId;
using corpus::ObjectInstance;
using corpus::Scene;

enum class ReprKind { frequency, normalized, binarized, pooled_size, pooled_distance, concat, spatial, ablated };
enum class Pooling { min, max, mean };
enum class SpatialFeature : std::uint8_t { x = 0, y = 1, w = 2, h = 3, a = 4 };

std::string_view to_string(ReprKind kind);
std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view text);
/// "xywha" style; any subset, always kept in x,y,w,h,a order.
std::vector<SpatialFeature> parse_features(std::string_view text);
std::string features_to_string(const std::vector<SpatialFeature>& features);

struct ReprSchema;
using SchemaPtr = std::shared_ptr<const ReprSchema>;

/// Layout descriptor of a representation vector.
struct ReprSchema {
  ReprKind kind = ReprKind::frequency;
  std::shared_ptr<const CategoryTable> categories;
  Pooling pooling = Pooling::max;                 // pooled kinds
  int max_instances = 10;                         // spatial
  std::vector<SpatialFeature> features;           // spatial
  std::vector<SchemaPtr> children;                // concat parts, or the ablated base
  int removed_category = 0;                       // ablated

  /// Category id and stable identity of one coordinate. Keys survive ablation
  /// unchanged, so parameters tied to a coordinate can follow it.
  struct Coordinate {
    int category_id = 0;
    std::string key;
  };

  std::size_t dim() const;
  std::vector<Coordinate> coordinates() const;
  bool has_category(int category_id) const;
  /// Table of the underlying base schema(s).
  const CategoryTable& category_table() const;

  std::string to_json() const;
  static SchemaPtr from_json(std::string_view json);
};

bool same_layout(const ReprSchema& a, const ReprSchema& b);

SchemaPtr frequency_schema(std::shared_ptr<const CategoryTable> categories);
SchemaPtr pooled_schema(ReprKind kind, std::shared_ptr<const CategoryTable> categories, Pooling pooling);
SchemaPtr spatial_schema(std::shared_ptr<const CategoryTable> categories,
                         std::vector<SpatialFeature> features, int max_instances = 10);
SchemaPtr concat_schema(std::vector<SchemaPtr> parts);
/// Throws ValidationError if the category is not (or no longer) in the schema.
SchemaPtr ablated_schema(SchemaPtr base, int category_id);

struct ReprVector {
  ImageId image_id = 0;
  std::vector<double> values;
  SchemaPtr schema;
};

struct SpatialTuple {
  double x = 0, y = 0, w = 0, h = 0, a = 0;
};

// --- builders -------------------------------------------------------------

ReprVector frequency_vector(const Scene& scene, const SchemaPtr& schema);
ReprVector frequency_vector(const Scene& scene, const CategoryTable& categories);
ReprVector normalize(const ReprVector& freq);
ReprVector binarize(const ReprVector& freq);
ReprVector pooled_size_vector(const Scene& scene, const SchemaPtr& schema);
ReprVector pooled_size_vector(const Scene& scene, const CategoryTable& categories, Pooling pooling);
ReprVector pooled_distance_vector(const Scene& scene, const SchemaPtr& schema);
ReprVector pooled_distance_vector(const Scene& scene, const CategoryTable& categories, Pooling pooling);
ReprVector concat(const std::vector<ReprVector>& parts);
ReprVector concat(const std::vector<ReprVector>& parts, const SchemaPtr& schema);

SpatialTuple spatial_tuple(const ObjectInstance& instance, int image_width, int image_height);
ReprVector spatial_vector(const Scene& scene, const SchemaPtr& schema);
ReprVector spatial_vector(const Scene& scene, const CategoryTable& categories,
                          const std::vector<SpatialFeature>& features, int max_instances = 10);

/// Deletes the category's coordinates (not zeroing them).
ReprVector ablate_category(const ReprVector& v, int category_id);
ReprVector ablate_category(const ReprVector& v, const SchemaPtr& ablated);

/// Normalized segment area and normalized centre distance of one instance.
double normalized_size(const ObjectInstance& inst, const Scene& scene);
double normalized_distance(const ObjectInstance& inst, const Scene& scene);

// --- information removal ----------------------------------------------------

enum class MaskHeuristic { random, most_frequent, largest, closest };
std::string_view to_string(MaskHeuristic h);
MaskHeuristic parse_heuristic(std::string_view text);

/// Either a fraction of the categories present in the image, or exactly one.
struct Retention {
  double fraction = 1.0;
  bool one = false;

  static Retention keep_fraction(double f) { return {f, false}; }
  static Retention keep_one() { return {1.0, true}; }
  std::string label() const;
};

/// Present categories of `scene` in heuristic order (most important first).
std::vector<int> rank_categories(const Scene& scene, MaskHeuristic heuristic, std::uint64_t seed);

/// Keeps the top ceil(fraction * #present) categories (or exactly one) of a
/// frequency vector and zeroes the rest. `random` shuffles with a substream of
/// (seed, image id); the other heuristics ignore the seed.
ReprVector mask_vector(const Scene& scene, const ReprVector& freq, MaskHeuristic heuristic,
                       Retention retention, std::uint64_t seed);

// --- representation specs -------------------------------------------------------

/// Parsed form of strings like "frequency", "size:max", "frequency+distance:min",
/// "spatial:wh@10". Ablations delete categories after building.
class ReprSpec {
 public:
  static ReprSpec parse(std::string_view text);

  /// Builds the schema for a category table once; reuse it for every scene.
  SchemaPtr schema(std::shared_ptr<const CategoryTable> categories,
                   const std::vector<int>& ablate = {}) const;
  ReprVector build(const Scene& scene, const SchemaPtr& schema) const;

  const std::string& text() const { return text_; }

 private:
  struct Part {
    ReprKind kind = ReprKind::frequency;
    Pooling pooling = Pooling::max;
    std::vector<SpatialFeature> features;
    int max_instances = 10;
  };
  std::vector<Part> parts_;
  std::string text_;
};

/// `image_id,<coordinate keys...>` header, then one row per vector.
std::string to_csv(const std::vector<ReprVector>& vectors);

}  // namespace boocap::repr
