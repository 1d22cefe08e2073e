#include "boocap/corpus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "boocap/error.hpp"
#include "boocap/metrics/tokenizer.hpp"
#include "boocap/rng.hpp"

namespace boocap::corpus {

using nlohmann::json;

CategoryTable::CategoryTable(std::vector<Category> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& c = entries_[i];
    if (!by_id_.emplace(c.id, i).second) {
      throw ValidationError("duplicate category id " + std::to_string(c.id));
    }
    if (!by_name_.emplace(c.name, i).second) {
      throw ValidationError("duplicate category name '" + c.name + "'");
    }
  }
}

std::optional<std::size_t> CategoryTable::find_id(int id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> CategoryTable::find_name(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t CategoryTable::position_of(int id) const {
  if (auto pos = find_id(id)) return *pos;
  throw ValidationError("unknown category " + std::to_string(id));
}

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
  }
}

const json& require(const json& obj, const char* key, const char* context) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(std::string(context) + " record is missing '" + key + "'");
  }
  return obj.at(key);
}

template <class T>
T get_as(const json& value, const char* key, const char* context) {
  try {
    return require(value, key, context).get<T>();
  } catch (const json::type_error&) {
    throw ValidationError(std::string(context) + " field '" + key + "' has the wrong type");
  }
}

BBox read_bbox(const json& record, const char* context) {
  const auto& b = require(record, "bbox", context);
  if (!b.is_array() || b.size() != 4) {
    throw ValidationError(std::string(context) + " bbox must be [x,y,w,h]");
  }
  for (const auto& v : b) {
    if (!v.is_number()) throw ValidationError(std::string(context) + " bbox must be numeric");
  }
  return BBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
}

/// Clamps the box to the image and the area to the clamped box.
ObjectInstance make_instance(int category_id, BBox box, double area, double confidence,
                             const Scene& scene) {
  if (!(box.w > 0) || !(box.h > 0)) {
    throw ValidationError("non-positive bbox size on image " + std::to_string(scene.image_id));
  }
  const double x0 = std::clamp(box.x, 0.0, static_cast<double>(scene.width));
  const double y0 = std::clamp(box.y, 0.0, static_cast<double>(scene.height));
  const double x1 = std::clamp(box.x + box.w, 0.0, static_cast<double>(scene.width));
  const double y1 = std::clamp(box.y + box.h, 0.0, static_cast<double>(scene.height));
  BBox clamped{x0, y0, x1 - x0, y1 - y0};
  if (!(clamped.w > 0) || !(clamped.h > 0)) {
    throw ValidationError("bbox outside image " + std::to_string(scene.image_id));
  }
  if (clamped != box) area = std::min(area, clamped.w * clamped.h);
  area = std::clamp(area, 0.0, clamped.w * clamped.h);
  return ObjectInstance{category_id, clamped, area, confidence};
}

CategoryTable read_categories(const json& root) {
  std::vector<Category> cats;
  for (const auto& c : require(root, "categories", "instances")) {
    cats.push_back({get_as<int>(c, "id", "category"), get_as<std::string>(c, "name", "category")});
  }
  std::stable_sort(cats.begin(), cats.end(),
                   [](const Category& a, const Category& b) { return a.id < b.id; });
  return CategoryTable(std::move(cats));
}

std::vector<Scene> read_images(const json& root) {
  std::vector<Scene> scenes;
  std::set<ImageId> seen;
  for (const auto& img : require(root, "images", "instances")) {
    Scene s;
    s.image_id = get_as<ImageId>(img, "id", "image");
    s.width = get_as<int>(img, "width", "image");
    s.height = get_as<int>(img, "height", "image");
    if (s.width <= 0 || s.height <= 0) {
      throw ValidationError("image " + std::to_string(s.image_id) + " has non-positive size");
    }
    if (!seen.insert(s.image_id).second) {
      throw ValidationError("duplicate image " + std::to_string(s.image_id));
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::unordered_map<ImageId, std::size_t> index_scenes(const std::vector<Scene>& scenes) {
  std::unordered_map<ImageId, std::size_t> idx;
  for (std::size_t i = 0; i < scenes.size(); ++i) idx.emplace(scenes[i].image_id, i);
  return idx;
}

json bbox_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

InstancesFile parse_instances(std::string_view text) {
  const json root = parse_json(text);
  if (!root.is_object()) throw ValidationError("instances file must be a JSON object");
  InstancesFile out;
  out.categories = read_categories(root);
  out.scenes = read_images(root);
  const auto idx = index_scenes(out.scenes);
  for (const auto& ann : require(root, "annotations", "instances")) {
    const auto image_id = get_as<ImageId>(ann, "image_id", "annotation");
    const auto category_id = get_as<int>(ann, "category_id", "annotation");
    auto it = idx.find(image_id);
    if (it == idx.end()) throw ValidationError("unknown image " + std::to_string(image_id));
    out.categories.position_of(category_id);
    auto& scene = out.scenes[it->second];
    const BBox box = read_bbox(ann, "annotation");
    const double area = ann.contains("area") ? get_as<double>(ann, "area", "annotation") : box.w * box.h;
    scene.instances.push_back(make_instance(category_id, box, area, 1.0, scene));
  }
  return out;
}

std::vector<Scene> parse_detections(std::string_view text, double conf_threshold,
                                    const CategoryTable& categories,
                                    const std::vector<Scene>& images) {
  if (!(conf_threshold >= 0.0 && conf_threshold <= 1.0)) {
    throw ConfigError("conf_threshold must lie in [0,1]");
  }
  const json root = parse_json(text);
  if (!root.is_array()) throw ValidationError("detections file must be a JSON array");
  std::vector<Scene> scenes;
  scenes.reserve(images.size());
  for (const auto& img : images) scenes.push_back(Scene{img.image_id, img.width, img.height, {}});
  const auto idx = index_scenes(scenes);
  for (const auto& det : root) {
    const auto image_id = get_as<ImageId>(det, "image_id", "detection");
    const auto category_id = get_as<int>(det, "category_id", "detection");
    const auto score = get_as<double>(det, "score", "detection");
    auto it = idx.find(image_id);
    if (it == idx.end()) throw ValidationError("unknown image " + std::to_string(image_id));
    categories.position_of(category_id);
    if (score < conf_threshold) continue;
    auto& scene = scenes[it->second];
    const BBox box = read_bbox(det, "detection");
    const double area = det.contains("area") ? get_as<double>(det, "area", "detection") : box.w * box.h;
    scene.instances.push_back(make_instance(category_id, box, area, score, scene));
  }
  return scenes;
}

CaptionSet parse_captions(std::string_view text, const std::set<ImageId>* known_images) {
  const json root = parse_json(text);
  if (!root.is_object()) throw ValidationError("captions file must be a JSON object");
  std::set<ImageId> own;
  if (!known_images && root.contains("images")) {
    for (const auto& img : root.at("images")) own.insert(get_as<ImageId>(img, "id", "image"));
    known_images = &own;
  }
  CaptionSet out;
  for (const auto& ann : require(root, "annotations", "captions")) {
    const auto image_id = get_as<ImageId>(ann, "image_id", "caption");
    if (known_images && !known_images->contains(image_id)) {
      throw ValidationError("unknown image " + std::to_string(image_id));
    }
    auto caption = get_as<std::string>(ann, "caption", "caption");
    if (metrics::tokenize(caption).empty()) {
      throw ValidationError("empty caption for image " + std::to_string(image_id));
    }
    out[image_id].push_back(std::move(caption));
  }
  return out;
}

std::string write_instances(const CategoryTable& categories, const std::vector<Scene>& scenes) {
  json images = json::array();
  json annotations = json::array();
  json cats = json::array();
  std::int64_t ann_id = 1;
  for (const auto& s : scenes) {
    images.push_back({{"id", s.image_id}, {"width", s.width}, {"height", s.height}});
    for (const auto& inst : s.instances) {
      annotations.push_back({{"id", ann_id++},
                             {"image_id", s.image_id},
                             {"category_id", inst.category_id},
                             {"bbox", bbox_json(inst.bbox)},
                             {"area", inst.segment_area}});
    }
  }
  for (const auto& c : categories.entries()) cats.push_back({{"id", c.id}, {"name", c.name}});
  json root = {{"images", images}, {"annotations", annotations}, {"categories", cats}};
  return root.dump() + "\n";
}

std::string write_captions(const CaptionSet& captions) {
  json annotations = json::array();
  std::int64_t ann_id = 1;
  for (const auto& [id, caps] : captions) {
    for (const auto& c : caps) {
      annotations.push_back({{"id", ann_id++}, {"image_id", id}, {"caption", c}});
    }
  }
  return json{{"annotations", annotations}}.dump() + "\n";
}

std::string write_detections(const std::vector<Scene>& scenes) {
  json dets = json::array();
  for (const auto& s : scenes) {
    for (const auto& inst : s.instances) {
      dets.push_back({{"image_id", s.image_id},
                      {"category_id", inst.category_id},
                      {"bbox", bbox_json(inst.bbox)},
                      {"area", inst.segment_area},
                      {"score", inst.confidence}});
    }
  }
  return dets.dump() + "\n";
}

Splits make_splits(std::vector<ImageId> image_ids, std::size_t val_size, std::size_t test_size,
                   std::uint64_t seed) {
  if (val_size + test_size >= image_ids.size()) {
    throw ConfigError("val_size + test_size (" + std::to_string(val_size + test_size) +
                      ") must be smaller than the corpus (" + std::to_string(image_ids.size()) + ")");
  }
  std::sort(image_ids.begin(), image_ids.end());
  if (std::adjacent_find(image_ids.begin(), image_ids.end()) != image_ids.end()) {
    throw ValidationError("duplicate image id in split input");
  }
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(image_ids);
  Splits s;
  s.val.assign(image_ids.begin(), image_ids.begin() + static_cast<std::ptrdiff_t>(val_size));
  s.test.assign(image_ids.begin() + static_cast<std::ptrdiff_t>(val_size),
                image_ids.begin() + static_cast<std::ptrdiff_t>(val_size + test_size));
  s.train.assign(image_ids.begin() + static_cast<std::ptrdiff_t>(val_size + test_size), image_ids.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

std::vector<ImageId> parse_id_list(std::string_view body, std::size_t line_offset) {
  std::vector<ImageId> ids;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    if (comma == std::string_view::npos) comma = body.size();
    std::string_view item = body.substr(pos, comma - pos);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    if (!item.empty()) {
      ImageId v = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size()) {
        throw ParseError("bad image id '" + std::string(item) + "' in split file",
                         line_offset + static_cast<std::size_t>(item.data() - body.data()));
      }
      ids.push_back(v);
    } else if (comma != body.size()) {
      throw ParseError("empty id in split file", line_offset + pos);
    }
    pos = comma + 1;
  }
  return ids;
}

}  // namespace

Splits parse_split_file(std::string_view text) {
  Splits s;
  bool seen[3] = {false, false, false};
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t nl = text.find('\n', offset);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(offset, nl - offset);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_offset = offset;
    offset = nl + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("split line without ':'", line_offset);
    std::string_view key = line.substr(0, colon);
    while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
    int slot = key == "train" ? 0 : key == "val" ? 1 : key == "test" ? 2 : -1;
    if (slot < 0) throw ParseError("unknown split '" + std::string(key) + "'", line_offset);
    if (seen[slot]) throw ParseError("split '" + std::string(key) + "' listed twice", line_offset);
    seen[slot] = true;
    auto ids = parse_id_list(line.substr(colon + 1), line_offset + colon + 1);
    (slot == 0 ? s.train : slot == 1 ? s.val : s.test) = std::move(ids);
  }
  if (!seen[0] || !seen[1] || !seen[2]) {
    throw ParseError("split file must list train:, val: and test:", text.size());
  }
  validate_splits(s);
  return s;
}

std::string write_split_file(const Splits& splits) {
  std::ostringstream out;
  auto line = [&](const char* name, const std::vector<ImageId>& ids) {
    out << name << ':';
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << '\n';
  };
  line("train", splits.train);
  line("val", splits.val);
  line("test", splits.test);
  return out.str();
}

void validate_splits(const Splits& splits, const std::vector<ImageId>* corpus) {
  std::set<ImageId> all;
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    for (ImageId id : *part) {
      if (!all.insert(id).second) {
        throw ValidationError("image " + std::to_string(id) + " appears in more than one split");
      }
    }
  }
  if (corpus) {
    std::set<ImageId> expected(corpus->begin(), corpus->end());
    if (expected != all) throw ValidationError("splits do not cover the corpus exactly");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("failed writing " + path);
}

}  // namespace boocap::corpus
