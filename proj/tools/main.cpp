// boocap: command-line driver for the captioning experiments.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "boocap/error.hpp"
#include "boocap/pipeline/commands.hpp"

using namespace boocap;

namespace {

// `--section.key=value` arguments are config overrides; everything else goes to CLI11.
bool is_override(const std::string& arg) {
  if (arg.rfind("--", 0) != 0) return false;
  const auto eq = arg.find('=');
  const auto dot = arg.find('.');
  return eq != std::string::npos && dot != std::string::npos && dot < eq;
}

const std::map<std::string, std::string> kHelp{
    {"synth", "generate the synthetic corpus"},
    {"repr", "build representation vectors"},
    {"train", "train the caption generator"},
    {"caption", "caption the configured split"},
    {"eval", "score generated captions"},
    {"knn", "nearest-neighbour analysis of test images"},
    {"stats", "category frequency and mention statistics"},
    {"ablate", "retrain with each category removed"},
    {"mask-sweep", "evaluate on partially masked representations"},
    {"correlate", "correlate ablation drops with category statistics"},
    {"table1", "compare every representation"},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args;
  std::vector<std::pair<std::string, std::string>> overrides;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (is_override(a)) {
      const auto eq = a.find('=');
      overrides.emplace_back(a.substr(2, eq - 2), a.substr(eq + 1));
    } else {
      args.push_back(std::move(a));
    }
  }

  CLI::App app{"Bag-of-objects image captioning experiments"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::string seed, jobs;
  bool force = false;
  std::string kind;
  for (const auto& name : pipeline::command_names()) {
    auto* sub = app.add_subcommand(name, kHelp.count(name) ? kHelp.at(name) : "");
    sub->add_option("--config", config_path, "key=value config file");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", jobs, "worker threads");
    sub->add_flag("--force", force, "silence config-mismatch warnings");
    if (name == "repr" || name == "ablate") sub->add_option("--kind", kind, "representation spec, e.g. frequency+size:max");
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    pipeline::Invocation inv;
    inv.command = app.get_subcommands().front()->get_name();
    inv.config = config_path.empty() ? pipeline::Config() : pipeline::Config::load(config_path);
    for (const auto& [k, v] : overrides) inv.config.set(k, v);
    if (!seed.empty()) inv.config.set("run.seed", seed);
    if (!jobs.empty()) inv.config.set("run.jobs", jobs);
    if (!out.empty()) inv.config.set("paths.out", out);
    inv.force = force;
    if (!kind.empty()) inv.options["kind"] = kind;
    pipeline::run_command(inv, std::cerr);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::exit_code(e);
  }
}
