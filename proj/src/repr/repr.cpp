#include "boocap/repr/repr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "boocap/error.hpp"
#include "boocap/rng.hpp"

namespace boocap::repr {

using nlohmann::json;

std::string_view to_string(ReprKind kind) {
  switch (kind) {
    case ReprKind::frequency: return "frequency";
    case ReprKind::normalized: return "normalized";
    case ReprKind::binarized: return "binarized";
    case ReprKind::pooled_size: return "size";
    case ReprKind::pooled_distance: return "distance";
    case ReprKind::concat: return "concat";
    case ReprKind::spatial: return "spatial";
    case ReprKind::ablated: return "ablated";
  }
  return "?";
}

namespace {

ReprKind parse_kind(std::string_view s) {
  for (auto k : {ReprKind::frequency, ReprKind::normalized, ReprKind::binarized, ReprKind::pooled_size,
                 ReprKind::pooled_distance, ReprKind::concat, ReprKind::spatial, ReprKind::ablated}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown representation kind '" + std::string(s) + "'");
}

std::string coordinate_prefix(const ReprSchema& s) {
  std::string p(to_string(s.kind));
  if (s.kind == ReprKind::pooled_size || s.kind == ReprKind::pooled_distance) {
    p += "_";
    p += to_string(s.pooling);
  }
  return p;
}

std::size_t compute_dim(const ReprSchema& s) {
  switch (s.kind) {
    case ReprKind::concat: {
      std::size_t d = 0;
      for (const auto& c : s.children) d += c->dim();
      return d;
    }
    case ReprKind::spatial:
      return s.categories->size() * static_cast<std::size_t>(s.max_instances) * s.features.size();
    case ReprKind::ablated:
      return s.coordinates().size();
    default:
      return s.categories->size();
  }
}

}  // namespace

std::string_view to_string(Pooling p) {
  switch (p) {
    case Pooling::min: return "min";
    case Pooling::max: return "max";
    case Pooling::mean: return "mean";
  }
  return "?";
}

Pooling parse_pooling(std::string_view t) {
  if (t == "min") return Pooling::min;
  if (t == "max") return Pooling::max;
  if (t == "mean") return Pooling::mean;
  throw ConfigError("unknown pooling '" + std::string(t) + "'");
}

std::vector<SpatialFeature> parse_features(std::string_view text) {
  bool on[5] = {false, false, false, false, false};
  for (char c : text) {
    switch (c) {
      case 'x': on[0] = true; break;
      case 'y': on[1] = true; break;
      case 'w': on[2] = true; break;
      case 'h': on[3] = true; break;
      case 'a': on[4] = true; break;
      case ',': case ' ': break;
      default: throw ConfigError(std::string("unknown spatial feature '") + c + "'");
    }
  }
  std::vector<SpatialFeature> out;
  for (int i = 0; i < 5; ++i) {
    if (on[i]) out.push_back(static_cast<SpatialFeature>(i));
  }
  if (out.empty()) throw ConfigError("empty spatial feature set");
  return out;
}

std::string features_to_string(const std::vector<SpatialFeature>& features) {
  static const char names[] = "xywha";
  std::string s;
  for (auto f : features) s.push_back(names[static_cast<int>(f)]);
  return s;
}

// --- schema ------------------------------------------------------------------

std::size_t ReprSchema::dim() const { return compute_dim(*this); }

std::vector<ReprSchema::Coordinate> ReprSchema::coordinates() const {
  std::vector<Coordinate> out;
  switch (kind) {
    case ReprKind::concat:
      for (std::size_t i = 0; i < children.size(); ++i) {
        for (auto& c : children[i]->coordinates()) {
          out.push_back({c.category_id, std::to_string(i) + ":" + c.key});
        }
      }
      break;
    case ReprKind::ablated:
      for (auto& c : children.at(0)->coordinates()) {
        if (c.category_id != removed_category) out.push_back(std::move(c));
      }
      break;
    case ReprKind::spatial: {
      const auto fs = features_to_string(features);
      for (const auto& cat : categories->entries()) {
        for (int slot = 0; slot < max_instances; ++slot) {
          for (char f : fs) {
            out.push_back({cat.id, "spatial#" + std::to_string(cat.id) + "/" + std::to_string(slot) + "/" + f});
          }
        }
      }
      break;
    }
    default: {
      const auto prefix = coordinate_prefix(*this);
      for (const auto& cat : categories->entries()) {
        out.push_back({cat.id, prefix + "#" + std::to_string(cat.id)});
      }
    }
  }
  return out;
}

bool ReprSchema::has_category(int category_id) const {
  switch (kind) {
    case ReprKind::concat:
      return std::any_of(children.begin(), children.end(),
                         [&](const SchemaPtr& c) { return c->has_category(category_id); });
    case ReprKind::ablated:
      return category_id != removed_category && children.at(0)->has_category(category_id);
    default:
      return categories->find_id(category_id).has_value();
  }
}

const CategoryTable& ReprSchema::category_table() const {
  if (categories) return *categories;
  return children.at(0)->category_table();
}

namespace {

json schema_to_json(const ReprSchema& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  if (s.kind == ReprKind::concat || s.kind == ReprKind::ablated) {
    json kids = json::array();
    for (const auto& c : s.children) kids.push_back(schema_to_json(*c));
    j["children"] = kids;
    if (s.kind == ReprKind::ablated) j["removed_category"] = s.removed_category;
    return j;
  }
  json cats = json::array();
  for (const auto& c : s.categories->entries()) cats.push_back({{"id", c.id}, {"name", c.name}});
  j["categories"] = cats;
  if (s.kind == ReprKind::pooled_size || s.kind == ReprKind::pooled_distance) {
    j["pooling"] = std::string(to_string(s.pooling));
  }
  if (s.kind == ReprKind::spatial) {
    j["features"] = features_to_string(s.features);
    j["max_instances"] = s.max_instances;
  }
  return j;
}

SchemaPtr schema_from_json(const json& j, std::map<std::string, std::shared_ptr<const CategoryTable>>& tables) {
  auto s = std::make_shared<ReprSchema>();
  s->kind = parse_kind(j.at("kind").get<std::string>());
  if (s->kind == ReprKind::concat || s->kind == ReprKind::ablated) {
    for (const auto& c : j.at("children")) s->children.push_back(schema_from_json(c, tables));
    if (s->kind == ReprKind::ablated) {
      if (s->children.size() != 1) throw ParseError("ablated schema needs exactly one child");
      s->removed_category = j.at("removed_category").get<int>();
    }
    return s;
  }
  const auto cats_text = j.at("categories").dump();
  auto& table = tables[cats_text];
  if (!table) {
    std::vector<corpus::Category> cats;
    for (const auto& c : j.at("categories")) cats.push_back({c.at("id").get<int>(), c.at("name").get<std::string>()});
    table = std::make_shared<const CategoryTable>(std::move(cats));
  }
  s->categories = table;
  if (j.contains("pooling")) s->pooling = parse_pooling(j.at("pooling").get<std::string>());
  if (s->kind == ReprKind::spatial) {
    s->features = parse_features(j.at("features").get<std::string>());
    s->max_instances = j.at("max_instances").get<int>();
  }
  return s;
}

}  // namespace

std::string ReprSchema::to_json() const { return schema_to_json(*this).dump(); }

SchemaPtr ReprSchema::from_json(std::string_view text) {
  try {
    std::map<std::string, std::shared_ptr<const CategoryTable>> tables;
    return schema_from_json(json::parse(text.begin(), text.end()), tables);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed schema: ") + e.what(), e.byte);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed schema: ") + e.what());
  }
}

bool same_layout(const ReprSchema& a, const ReprSchema& b) { return a.to_json() == b.to_json(); }

SchemaPtr frequency_schema(std::shared_ptr<const CategoryTable> categories) {
  auto s = std::make_shared<ReprSchema>();
  s->kind = ReprKind::frequency;
  s->categories = std::move(categories);
  return s;
}

namespace {

SchemaPtr derived_schema(const ReprSchema& base, ReprKind kind) {
  auto s = std::make_shared<ReprSchema>(base);
  s->kind = kind;
  return s;
}

std::shared_ptr<const CategoryTable> share(const CategoryTable& t) {
  return std::make_shared<const CategoryTable>(t);
}

}  // namespace

SchemaPtr pooled_schema(ReprKind kind, std::shared_ptr<const CategoryTable> categories, Pooling pooling) {
  if (kind != ReprKind::pooled_size && kind != ReprKind::pooled_distance) {
    throw ConfigError("pooled_schema needs a pooled kind");
  }
  auto s = std::make_shared<ReprSchema>();
  s->kind = kind;
  s->categories = std::move(categories);
  s->pooling = pooling;
  return s;
}

SchemaPtr spatial_schema(std::shared_ptr<const CategoryTable> categories, std::vector<SpatialFeature> features,
                         int max_instances) {
  if (max_instances < 1) throw ConfigError("max_instances must be >= 1");
  if (features.empty()) throw ConfigError("empty spatial feature set");
  auto s = std::make_shared<ReprSchema>();
  s->kind = ReprKind::spatial;
  s->categories = std::move(categories);
  s->features = std::move(features);
  s->max_instances = max_instances;
  return s;
}

SchemaPtr concat_schema(std::vector<SchemaPtr> parts) {
  if (parts.empty()) throw ConfigError("concat needs at least one part");
  for (const auto& p : parts) {
    if (!(p->category_table() == parts[0]->category_table())) {
      throw ValidationError("concat parts use different category tables");
    }
  }
  auto s = std::make_shared<ReprSchema>();
  s->kind = ReprKind::concat;
  s->children = std::move(parts);
  return s;
}

SchemaPtr ablated_schema(SchemaPtr base, int category_id) {
  if (!base->has_category(category_id)) {
    throw ValidationError("category " + std::to_string(category_id) + " is not in the representation");
  }
  auto s = std::make_shared<ReprSchema>();
  s->kind = ReprKind::ablated;
  s->children = {std::move(base)};
  s->removed_category = category_id;
  return s;
}

// --- builders -----------------------------------------------------------------

double normalized_size(const ObjectInstance& inst, const Scene& scene) {
  return inst.segment_area / (static_cast<double>(scene.width) * scene.height);
}

double normalized_distance(const ObjectInstance& inst, const Scene& scene) {
  const double cx = inst.bbox.x + inst.bbox.w / 2.0;
  const double cy = inst.bbox.y + inst.bbox.h / 2.0;
  const double dx = cx - scene.width / 2.0;
  const double dy = cy - scene.height / 2.0;
  const double diag = std::hypot(static_cast<double>(scene.width), static_cast<double>(scene.height));
  return std::hypot(dx, dy) / diag;
}

namespace {

void require_kind(const ReprVector& v, ReprKind kind, const char* op) {
  if (!v.schema || v.schema->kind != kind) {
    throw ValidationError(std::string(op) + " expects a " + std::string(to_string(kind)) + " vector");
  }
}

ReprVector count_into(const Scene& scene, const SchemaPtr& schema) {
  ReprVector v{scene.image_id, std::vector<double>(schema->categories->size(), 0.0), schema};
  for (const auto& inst : scene.instances) {
    v.values[schema->categories->position_of(inst.category_id)] += 1.0;
  }
  return v;
}

template <class Stat>
ReprVector pool_into(const Scene& scene, const SchemaPtr& schema, Stat stat) {
  const auto& cats = *schema->categories;
  std::vector<double> acc(cats.size(), 0.0);
  std::vector<int> n(cats.size(), 0);
  for (const auto& inst : scene.instances) {
    const auto pos = cats.position_of(inst.category_id);
    const double value = stat(inst);
    if (n[pos] == 0) {
      acc[pos] = value;
    } else {
      switch (schema->pooling) {
        case Pooling::min: acc[pos] = std::min(acc[pos], value); break;
        case Pooling::max: acc[pos] = std::max(acc[pos], value); break;
        case Pooling::mean: acc[pos] += value; break;
      }
    }
    ++n[pos];
  }
  if (schema->pooling == Pooling::mean) {
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if (n[i] > 0) acc[i] /= n[i];
    }
  }
  return ReprVector{scene.image_id, std::move(acc), schema};
}

}  // namespace

ReprVector frequency_vector(const Scene& scene, const SchemaPtr& schema) {
  if (schema->kind != ReprKind::frequency) throw ValidationError("frequency_vector needs a frequency schema");
  return count_into(scene, schema);
}

ReprVector frequency_vector(const Scene& scene, const CategoryTable& categories) {
  return count_into(scene, frequency_schema(share(categories)));
}

ReprVector normalize(const ReprVector& freq) {
  require_kind(freq, ReprKind::frequency, "normalize");
  ReprVector out{freq.image_id, freq.values, derived_schema(*freq.schema, ReprKind::normalized)};
  double sum = 0;
  for (double x : out.values) sum += x;
  if (sum > 0) {
    for (double& x : out.values) x /= sum;
  }
  return out;
}

ReprVector binarize(const ReprVector& freq) {
  require_kind(freq, ReprKind::frequency, "binarize");
  ReprVector out{freq.image_id, freq.values, derived_schema(*freq.schema, ReprKind::binarized)};
  for (double& x : out.values) x = x >= 1.0 ? 1.0 : 0.0;
  return out;
}

ReprVector pooled_size_vector(const Scene& scene, const SchemaPtr& schema) {
  if (schema->kind != ReprKind::pooled_size) throw ValidationError("pooled_size_vector needs a size schema");
  return pool_into(scene, schema, [&](const ObjectInstance& i) { return normalized_size(i, scene); });
}

ReprVector pooled_size_vector(const Scene& scene, const CategoryTable& categories, Pooling pooling) {
  return pooled_size_vector(scene, pooled_schema(ReprKind::pooled_size, share(categories), pooling));
}

ReprVector pooled_distance_vector(const Scene& scene, const SchemaPtr& schema) {
  if (schema->kind != ReprKind::pooled_distance) {
    throw ValidationError("pooled_distance_vector needs a distance schema");
  }
  return pool_into(scene, schema, [&](const ObjectInstance& i) { return normalized_distance(i, scene); });
}

ReprVector pooled_distance_vector(const Scene& scene, const CategoryTable& categories, Pooling pooling) {
  return pooled_distance_vector(scene, pooled_schema(ReprKind::pooled_distance, share(categories), pooling));
}

ReprVector concat(const std::vector<ReprVector>& parts, const SchemaPtr& schema) {
  if (parts.empty()) throw ConfigError("concat needs at least one part");
  ReprVector out{parts[0].image_id, {}, schema};
  for (const auto& p : parts) {
    if (p.image_id != out.image_id) throw ValidationError("concat parts come from different images");
    out.values.insert(out.values.end(), p.values.begin(), p.values.end());
  }
  if (out.values.size() != schema->dim()) throw ValidationError("concat parts do not match the schema");
  return out;
}

ReprVector concat(const std::vector<ReprVector>& parts) {
  std::vector<SchemaPtr> schemas;
  for (const auto& p : parts) schemas.push_back(p.schema);
  return concat(parts, concat_schema(std::move(schemas)));
}

SpatialTuple spatial_tuple(const ObjectInstance& inst, int W, int H) {
  if (!(inst.bbox.w > 0) || !(inst.bbox.h > 0)) throw ValidationError("zero-area bounding box");
  const double w = inst.bbox.w / W;
  const double h = inst.bbox.h / H;
  // rounding can put a one ulp above w*h when the segment fills its box
  const double a = std::min(inst.segment_area / (static_cast<double>(W) * H), w * h);
  return SpatialTuple{(inst.bbox.x + inst.bbox.w / 2.0) / W, (inst.bbox.y + inst.bbox.h / 2.0) / H, w, h, a};
}

ReprVector spatial_vector(const Scene& scene, const SchemaPtr& schema) {
  if (schema->kind != ReprKind::spatial) throw ValidationError("spatial_vector needs a spatial schema");
  const auto& cats = *schema->categories;
  const std::size_t nf = schema->features.size();
  const auto slots = static_cast<std::size_t>(schema->max_instances);
  std::vector<std::vector<const ObjectInstance*>> per_cat(cats.size());
  for (const auto& inst : scene.instances) per_cat[cats.position_of(inst.category_id)].push_back(&inst);

  ReprVector v{scene.image_id, std::vector<double>(schema->dim(), 0.0), schema};
  for (std::size_t c = 0; c < cats.size(); ++c) {
    std::vector<SpatialTuple> tuples;
    for (const auto* inst : per_cat[c]) tuples.push_back(spatial_tuple(*inst, scene.width, scene.height));
    // order by the normalized area actually stored, input order on ties
    std::stable_sort(tuples.begin(), tuples.end(), [](const SpatialTuple& a, const SpatialTuple& b) { return a.a > b.a; });
    for (std::size_t s = 0; s < std::min(slots, tuples.size()); ++s) {
      const auto& t = tuples[s];
      const double all[5] = {t.x, t.y, t.w, t.h, t.a};
      for (std::size_t f = 0; f < nf; ++f) {
        v.values[(c * slots + s) * nf + f] = all[static_cast<int>(schema->features[f])];
      }
    }
  }
  return v;
}

ReprVector spatial_vector(const Scene& scene, const CategoryTable& categories,
                          const std::vector<SpatialFeature>& features, int max_instances) {
  return spatial_vector(scene, spatial_schema(share(categories), features, max_instances));
}

ReprVector ablate_category(const ReprVector& v, const SchemaPtr& ablated) {
  if (ablated->kind != ReprKind::ablated || !same_layout(*ablated->children.at(0), *v.schema)) {
    throw ValidationError("ablated schema does not derive from the vector's schema");
  }
  const auto coords = v.schema->coordinates();
  ReprVector out{v.image_id, {}, ablated};
  out.values.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].category_id != ablated->removed_category) out.values.push_back(v.values[i]);
  }
  return out;
}

ReprVector ablate_category(const ReprVector& v, int category_id) {
  return ablate_category(v, ablated_schema(v.schema, category_id));
}

// --- masking ---------------------------------------------------------------------

std::string_view to_string(MaskHeuristic h) {
  switch (h) {
    case MaskHeuristic::random: return "random";
    case MaskHeuristic::most_frequent: return "frequency";
    case MaskHeuristic::largest: return "size";
    case MaskHeuristic::closest: return "distance";
  }
  return "?";
}

MaskHeuristic parse_heuristic(std::string_view t) {
  if (t == "random") return MaskHeuristic::random;
  if (t == "frequency" || t == "most_frequent") return MaskHeuristic::most_frequent;
  if (t == "size" || t == "largest") return MaskHeuristic::largest;
  if (t == "distance" || t == "closest") return MaskHeuristic::closest;
  throw ConfigError("unknown mask heuristic '" + std::string(t) + "'");
}

std::string Retention::label() const {
  if (one) return "one";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", fraction);
  return buf;
}

std::vector<int> rank_categories(const Scene& scene, MaskHeuristic heuristic, std::uint64_t seed) {
  struct Stat {
    int id;
    int count = 0;
    double max_size = 0;
    double min_dist = std::numeric_limits<double>::infinity();
  };
  std::map<int, Stat> by_id;
  for (const auto& inst : scene.instances) {
    auto [it, fresh] = by_id.try_emplace(inst.category_id, Stat{inst.category_id});
    auto& s = it->second;
    ++s.count;
    s.max_size = std::max(s.max_size, normalized_size(inst, scene));
    s.min_dist = std::min(s.min_dist, normalized_distance(inst, scene));
  }
  std::vector<Stat> stats;
  for (auto& [id, s] : by_id) stats.push_back(s);  // ascending id
  switch (heuristic) {
    case MaskHeuristic::random: {
      Rng rng(derive_seed(seed, "mask-random", static_cast<std::uint64_t>(scene.image_id)));
      rng.shuffle(stats);
      break;
    }
    case MaskHeuristic::most_frequent:
      std::stable_sort(stats.begin(), stats.end(), [](const Stat& a, const Stat& b) { return a.count > b.count; });
      break;
    case MaskHeuristic::largest:
      std::stable_sort(stats.begin(), stats.end(),
                       [](const Stat& a, const Stat& b) { return a.max_size > b.max_size; });
      break;
    case MaskHeuristic::closest:
      std::stable_sort(stats.begin(), stats.end(),
                       [](const Stat& a, const Stat& b) { return a.min_dist < b.min_dist; });
      break;
  }
  std::vector<int> ids;
  for (const auto& s : stats) ids.push_back(s.id);
  return ids;
}

ReprVector mask_vector(const Scene& scene, const ReprVector& freq, MaskHeuristic heuristic,
                       Retention retention, std::uint64_t seed) {
  require_kind(freq, ReprKind::frequency, "mask_vector");
  if (!retention.one && !(retention.fraction > 0.0 && retention.fraction <= 1.0)) {
    throw ConfigError("retain fraction must lie in (0, 1]");
  }
  ReprVector out = freq;
  const auto ranked = rank_categories(scene, heuristic, seed);
  if (ranked.empty()) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
    return out;
  }
  std::size_t keep = 1;
  if (!retention.one) {
    // The epsilon keeps 0.7 * 10 from rounding up to 8.
    const double want = retention.fraction * static_cast<double>(ranked.size()) - 1e-9;
    keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(want)));
  }
  std::vector<bool> kept(out.values.size(), false);
  const auto& cats = *freq.schema->categories;
  for (std::size_t i = 0; i < std::min(keep, ranked.size()); ++i) kept[cats.position_of(ranked[i])] = true;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!kept[i]) out.values[i] = 0.0;
  }
  return out;
}

// --- specs -------------------------------------------------------------------------

ReprSpec ReprSpec::parse(std::string_view text) {
  ReprSpec spec;
  spec.text_ = std::string(text);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto plus = text.find('+', pos);
    if (plus == std::string_view::npos) plus = text.size();
    std::string_view item = text.substr(pos, plus - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw ConfigError("empty representation part in '" + spec.text_ + "'");
    Part part;
    std::string_view head = item;
    std::string_view arg;
    if (auto colon = item.find(':'); colon != std::string_view::npos) {
      head = item.substr(0, colon);
      arg = item.substr(colon + 1);
    }
    if (head == "frequency" || head == "normalized" || head == "binarized") {
      if (!arg.empty()) throw ConfigError("'" + std::string(head) + "' takes no argument");
      part.kind = parse_kind(head);
    } else if (head == "size") {
      part.kind = ReprKind::pooled_size;
      part.pooling = arg.empty() ? Pooling::max : parse_pooling(arg);
    } else if (head == "distance") {
      part.kind = ReprKind::pooled_distance;
      part.pooling = arg.empty() ? Pooling::min : parse_pooling(arg);
    } else if (head == "spatial") {
      part.kind = ReprKind::spatial;
      std::string_view feats = arg.empty() ? std::string_view("xywha") : arg;
      if (auto at = feats.find('@'); at != std::string_view::npos) {
        part.max_instances = std::stoi(std::string(feats.substr(at + 1)));
        feats = feats.substr(0, at);
        if (feats.empty()) feats = "xywha";
      }
      part.features = parse_features(feats);
    } else {
      throw ConfigError("unknown representation '" + std::string(item) + "'");
    }
    spec.parts_.push_back(std::move(part));
    pos = plus + 1;
  }
  return spec;
}

SchemaPtr ReprSpec::schema(std::shared_ptr<const CategoryTable> categories, const std::vector<int>& ablate) const {
  std::vector<SchemaPtr> parts;
  for (const auto& p : parts_) {
    switch (p.kind) {
      case ReprKind::frequency:
      case ReprKind::normalized:
      case ReprKind::binarized: {
        auto s = std::make_shared<ReprSchema>();
        s->kind = p.kind;
        s->categories = categories;
        parts.push_back(s);
        break;
      }
      case ReprKind::pooled_size:
      case ReprKind::pooled_distance:
        parts.push_back(pooled_schema(p.kind, categories, p.pooling));
        break;
      case ReprKind::spatial:
        parts.push_back(spatial_schema(categories, p.features, p.max_instances));
        break;
      default:
        break;
    }
  }
  SchemaPtr s = parts.size() == 1 ? parts[0] : concat_schema(std::move(parts));
  for (int id : ablate) s = ablated_schema(s, id);
  return s;
}

namespace {

ReprVector build_from(const Scene& scene, const SchemaPtr& schema) {
  switch (schema->kind) {
    case ReprKind::frequency:
      return count_into(scene, schema);
    case ReprKind::normalized: {
      auto v = normalize(count_into(scene, frequency_schema(schema->categories)));
      v.schema = schema;
      return v;
    }
    case ReprKind::binarized: {
      auto v = binarize(count_into(scene, frequency_schema(schema->categories)));
      v.schema = schema;
      return v;
    }
    case ReprKind::pooled_size:
      return pooled_size_vector(scene, schema);
    case ReprKind::pooled_distance:
      return pooled_distance_vector(scene, schema);
    case ReprKind::spatial:
      return spatial_vector(scene, schema);
    case ReprKind::concat: {
      std::vector<ReprVector> parts;
      for (const auto& c : schema->children) parts.push_back(build_from(scene, c));
      return concat(parts, schema);
    }
    case ReprKind::ablated:
      return ablate_category(build_from(scene, schema->children.at(0)), schema);
  }
  throw ConfigError("unsupported schema");
}

}  // namespace

ReprVector ReprSpec::build(const Scene& scene, const SchemaPtr& schema) const { return build_from(scene, schema); }

std::string to_csv(const std::vector<ReprVector>& vectors) {
  std::ostringstream out;
  if (vectors.empty()) return "image_id\n";
  out << "image_id";
  for (const auto& c : vectors[0].schema->coordinates()) out << ',' << c.key;
  out << '\n';
  char buf[40];
  for (const auto& v : vectors) {
    out << v.image_id;
    for (double x : v.values) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace boocap::repr
