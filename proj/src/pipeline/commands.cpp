#include "boocap/pipeline/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "boocap/analysis/knn.hpp"
#include "boocap/analysis/plot.hpp"
#include "boocap/analysis/sweeps.hpp"
#include "boocap/captioner/checkpoint.hpp"
#include "boocap/corpus/synthetic.hpp"
#include "boocap/error.hpp"
#include "boocap/pipeline/artifacts.hpp"

namespace boocap::pipeline {

namespace {

using analysis::Experiment;
using corpus::ImageId;
using nlohmann::json;

struct Ctx {
  const Config& cfg;
  const Invocation& inv;
  ArtifactStore& store;
  std::ostream& log;
  std::uint64_t seed;
  int jobs;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// --- settings -----------------------------------------------------------------------

metrics::CiderVariant cider_variant(const Config& cfg) {
  try {
    return metrics::parse_cider_variant(cfg.get("eval.cider"));
  } catch (const Error& e) {
    throw ConfigError(std::string("eval.cider: ") + e.what());
  }
}

captioner::HyperParams hyperparams(const Config& cfg, std::uint64_t seed) {
  captioner::HyperParams hp;
  hp.embed_dim = static_cast<int>(cfg.get_int("train.embed_dim"));
  hp.hidden_dim = static_cast<int>(cfg.get_int("train.hidden_dim"));
  hp.layers = static_cast<int>(cfg.get_int("train.layers"));
  hp.max_epochs = static_cast<int>(cfg.get_int("train.max_epochs"));
  hp.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  hp.dropout = cfg.get_double("train.dropout");
  hp.learning_rate = cfg.get_double("train.learning_rate");
  hp.vocab_threshold = static_cast<int>(cfg.get_int("train.vocab_threshold"));
  hp.beta1 = cfg.get_double("train.beta1");
  hp.beta2 = cfg.get_double("train.beta2");
  hp.adam_eps = cfg.get_double("train.adam_eps");
  hp.clip_norm = cfg.get_double("train.clip_norm");
  hp.init_scale = cfg.get_double("train.init_scale");
  hp.max_decode_len = static_cast<int>(cfg.get_int("train.max_decode_len"));
  hp.chunk_size = static_cast<int>(cfg.get_int("train.chunk_size"));
  try {
    hp.conditioning = captioner::parse_conditioning(cfg.get("train.conditioning"));
    hp.selection_metric = metrics::parse_cider_variant(cfg.get("train.selection"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  hp.seed = seed;
  hp.validate();
  return hp;
}

analysis::TrainSettings train_settings(const Ctx& c) {
  analysis::TrainSettings s;
  s.hp = hyperparams(c.cfg, c.seed);
  const auto& mode = c.cfg.get("train.mode");
  if (mode == "grid") {
    s.mode = analysis::TrainMode::grid;
  } else if (mode != "fixed") {
    throw ConfigError("train.mode must be fixed or grid, got '" + mode + "'");
  }
  s.grid.batch_sizes.clear();
  s.grid.dropouts.clear();
  s.grid.learning_rates.clear();
  for (const auto& v : c.cfg.get_list("train.grid_batch_sizes")) s.grid.batch_sizes.push_back(std::atoi(v.c_str()));
  for (const auto& v : c.cfg.get_list("train.grid_dropouts")) s.grid.dropouts.push_back(std::atof(v.c_str()));
  for (const auto& v : c.cfg.get_list("train.grid_learning_rates")) s.grid.learning_rates.push_back(std::atof(v.c_str()));
  if (s.mode == analysis::TrainMode::grid) {
    for (const auto& hp : s.grid.expand(s.hp)) hp.validate();
  }
  s.jobs = c.jobs;
  return s;
}

repr::ReprSpec repr_spec(const Ctx& c) {
  auto it = c.inv.options.find("kind");
  const auto text = it != c.inv.options.end() && !it->second.empty() ? it->second : c.cfg.get("repr.spec");
  try {
    return repr::ReprSpec::parse(text);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("representation spec '" + text + "': " + e.what());
  }
}

// --- corpus ---------------------------------------------------------------------------

struct RawCorpus {
  corpus::CategoryTable categories;
  std::vector<corpus::Scene> scenes;
  corpus::CaptionSet captions;
  corpus::Splits splits;
};

bool from_files(const Config& cfg) {
  const auto& src = cfg.get("corpus.source");
  if (src == "files") return true;
  if (src == "synthetic") return false;
  if (src != "auto") throw ConfigError("corpus.source must be auto, synthetic or files, got '" + src + "'");
  return cfg.is_set("paths.instances");
}

std::vector<ImageId> ids_of(const std::vector<corpus::Scene>& scenes) {
  std::vector<ImageId> ids;
  for (const auto& s : scenes) ids.push_back(s.image_id);
  return ids;
}

std::vector<corpus::Scene> detections_for(const Ctx& c, const corpus::CategoryTable& cats,
                                          const std::vector<corpus::Scene>& gt) {
  const auto& path = c.cfg.get("paths.detections");
  if (path.empty()) throw ConfigError("paths.detections is not set");
  c.store.add_input(path);
  return corpus::parse_detections(corpus::read_file(path), c.cfg.get_double("corpus.conf_threshold"), cats, gt);
}

RawCorpus load_raw(const Ctx& c) {
  RawCorpus r;
  if (from_files(c.cfg)) {
    for (const auto* key : {"paths.instances", "paths.captions"}) {
      if (!c.cfg.is_set(key)) throw ConfigError(std::string(key) + " is required for a file corpus");
      c.store.add_input(c.cfg.get(key));
    }
    auto inst = corpus::parse_instances(corpus::read_file(c.cfg.get("paths.instances")));
    const auto ids = ids_of(inst.scenes);
    const std::set<ImageId> known(ids.begin(), ids.end());
    r.captions = corpus::parse_captions(corpus::read_file(c.cfg.get("paths.captions")), &known);
    r.categories = std::move(inst.categories);
    r.scenes = std::move(inst.scenes);
    if (c.cfg.is_set("paths.splits")) {
      c.store.add_input(c.cfg.get("paths.splits"));
      r.splits = corpus::parse_split_file(corpus::read_file(c.cfg.get("paths.splits")));
    } else {
      r.splits = corpus::make_splits(ids, static_cast<std::size_t>(c.cfg.get_int("corpus.val_size")),
                                     static_cast<std::size_t>(c.cfg.get_int("corpus.test_size")), c.seed);
    }
  } else {
    c.store.require("synth");
    auto inst = corpus::parse_instances(corpus::read_file(c.store.path("corpus/instances.json").string()));
    r.categories = std::move(inst.categories);
    r.scenes = std::move(inst.scenes);
    r.captions = corpus::parse_captions(corpus::read_file(c.store.path("corpus/captions.json").string()));
    r.splits = corpus::parse_split_file(corpus::read_file(c.store.path("corpus/splits.txt").string()));
  }
  if (c.cfg.get_bool("corpus.use_detections")) r.scenes = detections_for(c, r.categories, r.scenes);
  return r;
}

Experiment load_experiment(const Ctx& c) {
  auto r = load_raw(c);
  return Experiment::make(std::move(r.categories), std::move(r.scenes), std::move(r.captions), std::move(r.splits),
                          static_cast<int>(c.cfg.get_int("train.vocab_threshold")));
}

const std::vector<ImageId>& split_ids(const Experiment& ex, const std::string& split) {
  if (split == "train") return ex.splits.train;
  if (split == "val") return ex.splits.val;
  if (split == "test") return ex.splits.test;
  throw ConfigError("unknown split '" + split + "' (train, val or test)");
}

// --- representation and model artifacts ------------------------------------------------

struct LoadedReprs {
  repr::SchemaPtr schema;
  captioner::ReprMap reprs;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

LoadedReprs load_reprs(const Ctx& c, const Experiment& ex) {
  c.store.require("repr");
  LoadedReprs out;
  out.schema = repr::ReprSchema::from_json(corpus::read_file(c.store.path("schema.json").string()));
  if (!(out.schema->category_table() == *ex.categories)) {
    throw ValidationError("representation categories differ from the corpus; rerun `repr`");
  }
  std::istringstream in(corpus::read_file(c.store.path("reprs.csv").string()));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  const auto coords = out.schema->coordinates();
  if (header.size() != coords.size() + 1 || header[0] != "image_id") {
    throw ValidationError("reprs.csv header does not match schema.json");
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (header[i + 1] != coords[i].key) throw ValidationError("reprs.csv column " + header[i + 1] + " is not in the schema");
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw ValidationError("reprs.csv row " + std::to_string(row) + ": wrong width");
    auto v = std::make_shared<std::vector<double>>();
    v->reserve(coords.size());
    for (std::size_t i = 1; i < cells.size(); ++i) {
      char* end = nullptr;
      v->push_back(std::strtod(cells[i].c_str(), &end));
      if (*end != '\0') throw ValidationError("reprs.csv row " + std::to_string(row) + ": bad number '" + cells[i] + "'");
    }
    out.reprs.emplace(std::strtoll(cells[0].c_str(), nullptr, 10), std::move(v));
  }
  return out;
}

captioner::Checkpoint load_model(const Ctx& c) {
  c.store.require("train");
  return captioner::load_checkpoint(c.store.path("model.ckpt").string());
}

// --- commands --------------------------------------------------------------------------

void cmd_synth(Ctx& c) {
  auto spec = corpus::SyntheticSpec::defaults();
  spec.scene_count = static_cast<std::size_t>(c.cfg.get_int("corpus.scenes"));
  const auto syn = corpus::generate_synthetic(spec, c.seed);
  const auto splits = corpus::make_splits(ids_of(syn.scenes), static_cast<std::size_t>(c.cfg.get_int("corpus.val_size")),
                                          static_cast<std::size_t>(c.cfg.get_int("corpus.test_size")), c.seed);
  c.store.write("corpus/instances.json", corpus::write_instances(syn.categories, syn.scenes));
  c.store.write("corpus/captions.json", corpus::write_captions(syn.captions));
  c.store.write("corpus/splits.txt", corpus::write_split_file(splits));
  c.log << "synth: " << syn.scenes.size() << " scenes, " << splits.train.size() << "/" << splits.val.size() << "/"
        << splits.test.size() << " train/val/test\n";
}

void cmd_repr(Ctx& c) {
  const auto ex = load_experiment(c);
  const auto spec = repr_spec(c);
  const auto schema = spec.schema(ex.categories);
  std::vector<repr::ReprVector> vecs;
  for (const auto& s : ex.scenes) vecs.push_back(spec.build(s, schema));
  c.store.add_param("spec", spec.text());
  c.store.write("schema.json", schema->to_json());
  c.store.write("reprs.csv", repr::to_csv(vecs));
  c.log << "repr: " << spec.text() << ", " << schema->dim() << " dims, " << vecs.size() << " images\n";
}

void cmd_train(Ctx& c) {
  const auto ex = load_experiment(c);
  const auto r = load_reprs(c, ex);
  auto settings = train_settings(c);
  settings.on_epoch = [&](const captioner::EpochRecord& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d train_loss %.4f val_loss %.4f val_cider %.4f\n", e.epoch, e.train_loss,
                  e.val_loss, e.val_cider);
    c.log << buf << std::flush;
  };
  const auto data = captioner::make_examples(r.reprs, ex.captions, ex.splits.train, ex.vocab);
  const auto val = captioner::make_validation(r.reprs, ex.captions, ex.splits.val, ex.vocab);
  captioner::Checkpoint ck;
  if (settings.mode == analysis::TrainMode::grid) {
    auto g = captioner::train_grid(data, settings.hp, settings.grid, val, ex.vocab, r.schema, {c.jobs, settings.on_epoch});
    std::string csv = "batch_size,dropout,learning_rate,best_epoch,val_cider,selected\n";
    for (std::size_t i = 0; i < g.runs.size(); ++i) {
      const auto& run = g.runs[i];
      csv += std::to_string(run.hp.batch_size) + "," + fmt(run.hp.dropout) + "," + fmt(run.hp.learning_rate) + "," +
             std::to_string(run.best_epoch) + "," + (std::isnan(run.val_cider) ? "" : fmt(run.val_cider)) + "," +
             (i == g.best_index ? "1" : "0") + "\n";
    }
    c.store.write("grid.csv", csv);
    ck = std::move(g.best);
  } else {
    ck = captioner::train(data, settings.hp, val, ex.vocab, r.schema, {c.jobs, settings.on_epoch});
  }
  c.store.write("model.ckpt", captioner::serialize_checkpoint(ck));
  c.store.write("train_log.csv", ck.log.to_csv());
  c.log << "train: best epoch " << ck.log.best_epoch << " of " << ck.hp.max_epochs << ", vocabulary " << ck.vocab.size()
        << "\n";
}

void cmd_caption(Ctx& c) {
  const auto ck = load_model(c);
  const auto ex = load_experiment(c);
  const auto r = load_reprs(c, ex);
  if (!repr::same_layout(*r.schema, *ck.schema)) throw ValidationError("model and representations disagree; rerun `train`");
  const auto& split = c.cfg.get("caption.split");
  const auto& ids = split_ids(ex, split);
  const auto caps = analysis::caption_images(ck, r.reprs, ids, c.jobs);
  json out = json::array();
  for (const auto& [id, toks] : caps) out.push_back({{"image_id", id}, {"caption", metrics::join_tokens(toks)}});
  c.store.add_param("split", split);
  c.store.write("captions.json", out.dump(1) + "\n");
  c.log << "caption: " << caps.size() << " " << split << " images\n";
}

void cmd_eval(Ctx& c) {
  c.store.require("caption");
  const auto ex = load_experiment(c);
  std::map<ImageId, std::string> generated;
  try {
    for (const auto& e : json::parse(corpus::read_file(c.store.path("captions.json").string()))) {
      generated[e.at("image_id").get<ImageId>()] = e.at("caption").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("captions.json: ") + e.what());
  }
  std::vector<ImageId> ids;
  for (const auto& [id, _] : generated) ids.push_back(id);
  const auto report = metrics::evaluate(generated, ex.captions, ids, cider_variant(c.cfg));
  c.store.write("eval.json", report.to_json());
  c.store.write("eval.csv", report.to_csv());
  char buf[200];
  std::snprintf(buf, sizeof buf, "eval: %zu images  B4 %.3f  ROUGE-L %.3f  %s %.3f\n", report.count(),
                report.mean_bleu[3], report.mean_rouge_l, std::string(metrics::to_string(report.variant)).c_str(),
                report.mean_cider);
  c.log << buf;
}

void cmd_knn(Ctx& c) {
  const auto ck = load_model(c);
  const auto ex = load_experiment(c);
  const auto r = load_reprs(c, ex);
  const auto& mode = c.cfg.get("knn.references");
  analysis::KnnReferences refs;
  if (mode == "generated") {
    refs = analysis::KnnReferences::generated;
  } else if (mode == "ground_truth") {
    refs = analysis::KnnReferences::ground_truth;
  } else {
    throw ConfigError("knn.references must be generated or ground_truth, got '" + mode + "'");
  }
  const auto report =
      analysis::knn_report(ex, ck, r.reprs, static_cast<int>(c.cfg.get_int("knn.k")), refs, cider_variant(c.cfg), c.jobs);
  c.store.write("knn.csv", report.to_csv());
  c.store.write("knn.md", report.to_markdown());
  c.log << report.to_markdown();
}

analysis::Lexicon load_lexicon(const Ctx& c, const corpus::CategoryTable& cats) {
  analysis::Lexicon lex;
  if (c.cfg.is_set("paths.lexicon")) {
    c.store.add_input(c.cfg.get("paths.lexicon"));
    lex = analysis::Lexicon::parse(corpus::read_file(c.cfg.get("paths.lexicon")));
  }
  lex.cover(cats);
  return lex;
}

std::vector<const corpus::Scene*> scenes_of(const Experiment& ex, const std::vector<ImageId>& ids) {
  std::vector<const corpus::Scene*> out;
  for (auto id : ids) out.push_back(&ex.scene(id));
  return out;
}

std::vector<std::string> category_labels(const corpus::CategoryTable& cats) {
  std::vector<std::string> out;
  for (const auto& cat : cats.entries()) out.push_back(cat.name);
  return out;
}

void cmd_stats(Ctx& c) {
  const auto ex = load_experiment(c);
  const auto lex = load_lexicon(c, *ex.categories);
  auto stats = analysis::compute_category_stats(scenes_of(ex, ex.splits.train), ex.captions, *ex.categories, lex);
  std::vector<analysis::Series> series;
  for (const auto& [name, ids] : {std::pair{"train", &ex.splits.train}, {"val", &ex.splits.val}, {"test", &ex.splits.test}}) {
    stats.docfreq[name] = analysis::category_distribution(scenes_of(ex, *ids), *ex.categories);
    series.push_back({name, stats.docfreq[name]});
  }
  c.store.write("category_stats.csv", stats.to_csv());
  c.store.write("docfreq.svg",
                analysis::bar_chart_svg("Category document frequency per split", category_labels(*ex.categories), series));
  c.log << "stats: " << stats.rows.size() << " categories\n";
}

std::vector<int> ablation_categories(const Ctx& c, const corpus::CategoryTable& cats) {
  std::vector<int> out;
  for (const auto& item : c.cfg.get_list("ablate.categories")) {
    if (auto pos = cats.find_name(item)) {
      out.push_back(cats[*pos].id);
      continue;
    }
    char* end = nullptr;
    const long id = std::strtol(item.c_str(), &end, 10);
    if (*end != '\0' || !cats.find_id(static_cast<int>(id))) {
      throw ConfigError("ablate.categories: unknown category '" + item + "'");
    }
    out.push_back(static_cast<int>(id));
  }
  return out;
}

void cmd_ablate(Ctx& c) {
  const auto ex = load_experiment(c);
  const auto spec = repr_spec(c);
  const auto settings = train_settings(c);
  const auto variant = cider_variant(c.cfg);
  const auto cats = ablation_categories(c, *ex.categories);
  auto base_settings = settings;
  base_settings.jobs = c.jobs;
  const double base = analysis::baseline_cider(ex, spec, base_settings, variant);
  c.log << "ablate: baseline " << fmt3(base) << "\n" << std::flush;
  const auto report = analysis::ablation_sweep(ex, spec, settings, base, variant, cats, [&](const analysis::AblationRow& r) {
    c.log << "ablate: " << r.name << " " << fmt3(r.cider) << " (" << fmt3(r.delta) << ")\n" << std::flush;
  });
  std::vector<std::string> labels;
  std::vector<double> deltas;
  for (const auto& r : report.rows) {
    labels.push_back(r.name);
    deltas.push_back(r.delta);
  }
  c.store.add_param("spec", spec.text());
  c.store.add_param("baseline_cider", fmt(base));
  c.store.write("ablation.csv", report.to_csv());
  c.store.write("ablation.svg", analysis::bar_chart_svg("CIDEr change when a category is removed", labels,
                                                        {{"delta CIDEr", deltas}}));
}

double parse_number(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ValidationError(where + ": bad number '" + s + "'");
  return v;
}

void cmd_correlate(Ctx& c) {
  const auto am = c.store.require("ablate");
  c.store.require("stats");
  analysis::AblationReport report;
  bool have_base = false;
  for (const auto& [k, v] : am.params) {
    if (k == "baseline_cider") {
      report.baseline_cider = parse_number(v, "ablate manifest");
      have_base = true;
    }
  }
  if (!have_base) throw ValidationError("ablate manifest has no baseline; rerun `ablate`");
  {
    std::istringstream in(corpus::read_file(c.store.path("ablation.csv").string()));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto cells = split_csv_line(line);
      if (cells.size() != 4) throw ValidationError("ablation.csv: malformed row '" + line + "'");
      report.rows.push_back({static_cast<int>(parse_number(cells[0], "ablation.csv")), cells[1],
                             parse_number(cells[2], "ablation.csv"), parse_number(cells[3], "ablation.csv")});
    }
  }
  analysis::CategoryStats stats;
  {
    std::istringstream in(corpus::read_file(c.store.path("category_stats.csv").string()));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto cells = split_csv_line(line);
      if (cells.size() < 5) throw ValidationError("category_stats.csv: malformed row '" + line + "'");
      analysis::CategoryStat s;
      s.category_id = static_cast<int>(parse_number(cells[0], "category_stats.csv"));
      s.name = cells[1];
      s.depicted = static_cast<long>(parse_number(cells[2], "category_stats.csv"));
      s.depicted_mentioned = static_cast<long>(parse_number(cells[3], "category_stats.csv"));
      if (!cells[4].empty()) s.p_mention = parse_number(cells[4], "category_stats.csv");
      stats.rows.push_back(s);
    }
  }
  const auto rows = analysis::correlate_ablation(report, stats);
  c.store.write("correlation.csv", analysis::correlation_csv(rows));
  c.store.write("correlation.md", analysis::correlation_markdown(rows));
  c.log << analysis::correlation_markdown(rows);
}

void cmd_mask_sweep(Ctx& c) {
  const auto ck = load_model(c);
  const auto ex = load_experiment(c);
  std::vector<repr::MaskHeuristic> heuristics;
  for (const auto& h : c.cfg.get_list("mask.heuristics")) {
    try {
      heuristics.push_back(repr::parse_heuristic(h));
    } catch (const Error& e) {
      throw ConfigError(std::string("mask.heuristics: ") + e.what());
    }
  }
  std::vector<repr::Retention> retentions;
  for (const auto& r : c.cfg.get_list("mask.retentions")) {
    if (r == "one") {
      retentions.push_back(repr::Retention::keep_one());
      continue;
    }
    char* end = nullptr;
    const double f = std::strtod(r.c_str(), &end);
    if (*end != '\0' || !(f > 0 && f <= 1)) throw ConfigError("mask.retentions: '" + r + "' is not in (0, 1] or 'one'");
    retentions.push_back(repr::Retention::keep_fraction(f));
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : c.cfg.get_list("mask.seeds")) seeds.push_back(std::strtoull(s.c_str(), nullptr, 10));
  if (seeds.empty()) seeds.push_back(c.seed);
  if (heuristics.empty() || retentions.empty()) throw ConfigError("mask sweep needs heuristics and retentions");
  const auto rows = analysis::mask_sweep(ex, ck, heuristics, retentions, seeds, cider_variant(c.cfg), c.jobs);

  std::vector<std::string> labels;
  for (const auto& r : retentions) labels.push_back(r.label());
  std::vector<analysis::Series> series;
  for (auto h : heuristics) {
    analysis::Series s{std::string(repr::to_string(h)), std::vector<double>(retentions.size(), 0.0)};
    for (const auto& row : rows) {
      if (row.heuristic != h) continue;
      for (std::size_t i = 0; i < retentions.size(); ++i) {
        if (row.retention.label() == retentions[i].label()) s.values[i] += row.cider / static_cast<double>(seeds.size());
      }
    }
    series.push_back(std::move(s));
  }
  c.store.write("mask_sweep.csv", analysis::mask_sweep_csv(rows));
  c.store.write("mask_sweep.svg", analysis::line_chart_svg("CIDEr by retained categories", labels, series));
  c.log << "mask-sweep: " << rows.size() << " rows\n";
}

struct Table1Row {
  const char* label;
  const char* spec;
};

const std::vector<Table1Row>& table1_rows() {
  static const std::vector<Table1Row> rows{
      {"Frequency", "frequency"},
      {"Normalized", "normalized"},
      {"Binarized", "binarized"},
      {"Obj min distance", "distance:min"},
      {"Obj max size", "size:max"},
      {"Obj max size + Obj min distance", "size:max+distance:min"},
      {"Frequency + Obj min distance", "frequency+distance:min"},
      {"Frequency + Obj max size", "frequency+size:max"},
      {"All three features", "frequency+size:max+distance:min"},
  };
  return rows;
}

void cmd_table1(Ctx& c) {
  auto raw = load_raw(c);
  std::optional<Experiment> detect;
  if (c.cfg.is_set("paths.detections") && !c.cfg.get_bool("corpus.use_detections")) {
    auto scenes = detections_for(c, raw.categories, raw.scenes);
    detect = Experiment::make(raw.categories, std::move(scenes), raw.captions, raw.splits,
                              static_cast<int>(c.cfg.get_int("train.vocab_threshold")));
  }
  const auto ex = Experiment::make(std::move(raw.categories), std::move(raw.scenes), std::move(raw.captions),
                                   std::move(raw.splits), static_cast<int>(c.cfg.get_int("train.vocab_threshold")));
  const auto settings = train_settings(c);
  const auto variant = cider_variant(c.cfg);

  auto score = [&](const Experiment& e, const repr::ReprSpec& spec) {
    const auto schema = spec.schema(e.categories);
    const auto reprs = analysis::build_reprs(e, spec, schema);
    const auto ck = analysis::train_model(e, reprs, schema, settings);
    return analysis::evaluate_captions(e, analysis::caption_images(ck, reprs, e.splits.test, c.jobs), e.splits.test, variant);
  };

  std::string md = "| Representation | B1 | B2 | B3 | B4 | ROUGE-L | CIDEr |";
  std::string csv = "representation,spec,b1,b2,b3,b4,rouge_l,cider";
  if (detect) {
    md += " CIDEr (detect) |";
    csv += ",cider_detect";
  }
  md += detect ? "\n|---|---|---|---|---|---|---|---|\n" : "\n|---|---|---|---|---|---|---|\n";
  csv += "\n";
  for (const auto& row : table1_rows()) {
    const auto spec = repr::ReprSpec::parse(row.spec);
    const auto r = score(ex, spec);
    md += std::string("| ") + row.label;
    csv += std::string(row.label) + "," + row.spec;
    for (double v : {r.mean_bleu[0], r.mean_bleu[1], r.mean_bleu[2], r.mean_bleu[3], r.mean_rouge_l, r.mean_cider}) {
      md += " | " + fmt3(v);
      csv += "," + fmt(v);
    }
    if (detect) {
      const double d = score(*detect, spec).mean_cider;
      md += " | " + fmt3(d);
      csv += "," + fmt(d);
    }
    md += " |\n";
    csv += "\n";
    c.log << "table1: " << row.label << " " << fmt3(r.mean_cider) << "\n" << std::flush;
  }
  c.store.write("table1.md", md);
  c.store.write("table1.csv", csv);
  c.log << md;
}

using Handler = void (*)(Ctx&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"synth", cmd_synth},   {"repr", cmd_repr},       {"train", cmd_train},         {"caption", cmd_caption},
      {"eval", cmd_eval},     {"knn", cmd_knn},         {"stats", cmd_stats},         {"ablate", cmd_ablate},
      {"mask-sweep", cmd_mask_sweep}, {"correlate", cmd_correlate}, {"table1", cmd_table1},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth", "repr",   "train",      "caption",   "eval",  "knn",
                                              "stats", "ablate", "mask-sweep", "correlate", "table1"};
  return names;
}

namespace {

// Reads every typed setting once so a bad value fails before any work starts.
void validate_config(const Ctx& c) {
  train_settings(c);
  cider_variant(c.cfg);
  repr_spec(c);
  from_files(c.cfg);
  c.cfg.get_bool("corpus.use_detections");
  c.cfg.get_double("corpus.conf_threshold");
  for (const auto* key : {"corpus.scenes", "corpus.val_size", "corpus.test_size", "knn.k"}) {
    if (c.cfg.get_int(key) < 0) throw ConfigError(std::string(key) + " must not be negative");
  }
  split_ids(Experiment{}, c.cfg.get("caption.split"));
  for (const auto& s : c.cfg.get_list("mask.seeds")) {
    if (s.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("mask.seeds: '" + s + "' is not a seed");
  }
}

}  // namespace

void run_command(const Invocation& inv, std::ostream& log) {
  auto it = handlers().find(inv.command);
  if (it == handlers().end()) throw ConfigError("unknown command '" + inv.command + "'");
  const auto& cfg = inv.config;
  cfg.check_paths();
  const auto seed = cfg.get_u64("run.seed");
  const auto jobs = cfg.get_int("run.jobs");
  if (jobs < 1) throw ConfigError("run.jobs must be at least 1");
  ArtifactStore store(cfg.get("paths.out"), cfg.hash(), seed, inv.force, log);
  Ctx ctx{cfg, inv, store, log, seed, static_cast<int>(jobs)};
  validate_config(ctx);
  store.begin(inv.command);
  it->second(ctx);
  store.commit();
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 3;
  return 1;
}

}  // namespace boocap::pipeline
