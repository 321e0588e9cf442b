// sonarcount: synthetic sonar scene generation and multitask count training.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sonarcount/sonarcount.hpp"

namespace fs = std::filesystem;
using namespace sonarcount;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_out = true) {
  cmd->add_option("--config", o.config, "Experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override dataset.root_seed");
  cmd->add_option("--workers", o.workers, "Worker threads (output is identical for any value)")
      ->check(CLI::PositiveNumber);
  auto* out = cmd->add_option("--out", o.out, "Output directory");
  if (needs_out) out->required();
  cmd->add_option("--set", o.overrides, "Override a config key: section.key=value");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  for (const auto& ov : o.overrides) apply_override(c, ov);
  if (o.seed) c.root_seed = *o.seed;
  c.sync();
  if (auto err = c.validate(); !err.empty()) throw ConfigError("invalid config: " + err);
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing output " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Records the command and the fully resolved configuration.
void write_run_log(const fs::path& dir, const std::string& command, const ExperimentConfig& c,
                   const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::ostringstream log;
  log << "# sonarcount " << command << "\n";
  for (const auto& [k, v] : extra) log << "# " << k << " = " << v << "\n";
  log << config_to_text(c);
  write_text(dir / "run.log", log.str());
}

std::string bank_path(const ExperimentConfig& c, const std::string& flag) {
  const std::string p = flag.empty() ? c.bank : flag;
  if (p.empty()) throw ConfigError("no sprite bank given (set dataset.bank or pass --bank)");
  if (!fs::exists(fs::path(p) / "bank.json")) throw ConfigError("sprite bank not found: " + p);
  return p;
}

void check_dataset_dir(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.jsonl")) throw ConfigError("no manifest.jsonl in dataset " + dir);
}

// ---------------------------------------------------------------------------

int cmd_synth_sources(const std::string& out, std::uint64_t seed, const synthetic::SourceSpec& spec) {
  auto sources = synthetic::make_sources(spec, seed);
  const auto ann = synthetic::write_sources(sources, out);
  int fish = 0, dolphins = 0;
  for (const auto& s : sources) {
    for (const auto& a : s.annotations) (a.species == Species::fish ? fish : dolphins)++;
  }
  std::cout << "wrote " << sources.size() << " annotated source images (" << fish << " fish, " << dolphins
            << " dolphins) and " << ann.string() << "\n";
  return 0;
}

int cmd_extract(const std::string& annotations, const std::string& images, const std::string& out) {
  auto sources = load_annotations(annotations, images);
  SpriteBank bank = build_bank(sources, images);
  if (sources.empty()) std::cerr << "warning: annotation file is empty; writing an empty bank\n";
  save_bank(bank, out);
  load_bank(out);
  std::cout << "bank: " << bank.fish.size() << " fish sprites, " << bank.dolphins.size() << " dolphin sprites, "
            << bank.backgrounds.size() << " backgrounds -> " << out << "\n";
  return 0;
}

int cmd_generate(const CommonOptions& o, const std::string& bank_flag) {
  auto cfg = resolve_config(o);
  const auto bank_dir = bank_path(cfg, bank_flag);
  SpriteBank bank = load_bank(bank_dir);
  if (cfg.n_images > 0) check_bank(bank);

  auto m = generate_dataset(bank, cfg.n_images, cfg.root_seed, cfg.scene, o.out, o.workers);
  write_run_log(o.out, "generate", cfg, {{"bank", bank_dir}});
  if (load_manifest(fs::path(o.out) / "manifest.jsonl").size() != cfg.n_images) {
    throw std::runtime_error("manifest verification failed");
  }

  std::vector<int> fish_hist(static_cast<std::size_t>(cfg.scene.max_fish) + 1);
  std::vector<int> dolphin_hist(static_cast<std::size_t>(cfg.scene.max_dolphin) + 1);
  for (const auto& r : m.records) {
    fish_hist[static_cast<std::size_t>(r.fish_count)]++;
    dolphin_hist[static_cast<std::size_t>(r.dolphin_count)]++;
  }
  std::cout << "generated " << m.size() << " scenes, root seed " << cfg.root_seed << " -> " << o.out << "\n";
  std::cout << "fish count histogram:";
  for (std::size_t k = 0; k < fish_hist.size(); ++k) std::cout << " " << k << ":" << fish_hist[k];
  std::cout << "\ndolphin count histogram:";
  for (std::size_t k = 0; k < dolphin_hist.size(); ++k) std::cout << " " << k << ":" << dolphin_hist[k];
  std::cout << "\n";
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& dataset) {
  auto cfg = resolve_config(o);
  check_dataset_dir(dataset);
  const auto manifest = load_manifest(fs::path(dataset) / "manifest.jsonl");
  if (manifest.config.max_fish != cfg.scene.max_fish || manifest.config.max_dolphin != cfg.scene.max_dolphin) {
    throw ConfigError("dataset count ranges differ from the config's dataset.max_fish / max_dolphin");
  }
  const auto [train_m, val_m] = split_dataset(manifest, cfg.train_fraction);
  if (train_m.records.empty() || val_m.records.empty()) throw ConfigError("empty training or validation split");
  const int size = cfg.training.arch.input_size;
  const auto train_set = LabeledSet::from_manifest(train_m, dataset, size);
  const auto val_set = LabeledSet::from_manifest(val_m, dataset, size);

  fs::create_directories(o.out);
  write_run_log(o.out, "train", cfg, {{"dataset", dataset}});
  auto result = train<float>(train_set, val_set, cfg.training, [](const EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << "  train " << e.train_loss << "  val " << e.val_loss << "\n";
  });
  const auto ckpt = fs::path(o.out) / "checkpoint.bin";
  save_checkpoint(result.model, ckpt);
  write_text(fs::path(o.out) / "history.csv", result.history.to_csv());
  if (!(load_checkpoint(ckpt) == result.model)) throw std::runtime_error("checkpoint verification failed");
  std::cout << "trained " << cfg.training.epochs << " epochs on " << train_set.count() << " images; best epoch "
            << result.history.best_epoch << " -> " << ckpt.string() << "\n";
  return 0;
}

void write_eval(const fs::path& out, const RepeatedReport& rep) {
  write_text(out / "eval_residuals.csv", residuals_csv(rep.mean));
  nlohmann::json summary = summary_json(rep.mean);
  summary["runs"] = nlohmann::json::array();
  for (const auto& r : rep.runs) summary["runs"].push_back(summary_json(r));
  write_text(out / "eval_summary.json", summary.dump(2) + "\n");
  if (nlohmann::json::parse(read_text(out / "eval_summary.json")).is_discarded()) throw std::runtime_error("unreadable eval_summary.json");
}

int cmd_evaluate(const CommonOptions& o, const std::string& dataset, const std::string& checkpoint,
                 const std::string& bank_flag) {
  auto cfg = resolve_config(o);
  check_dataset_dir(dataset);
  const auto manifest = load_manifest(fs::path(dataset) / "manifest.jsonl");
  if (manifest.records.empty()) throw ConfigError("empty test set");
  std::optional<SpriteBank> bank;
  std::optional<CensusModel<float>> model;
  if (cfg.repeats == 1) {
    if (checkpoint.empty()) throw ConfigError("--checkpoint is required when eval.repeats = 1");
    model = load_checkpoint(checkpoint);
  } else {
    bank = load_bank(bank_path(cfg, bank_flag));
  }
  const int size = model ? model->architecture().input_size : cfg.training.arch.input_size;
  const auto test = LabeledSet::from_manifest(manifest, dataset, size);

  fs::create_directories(o.out);
  write_run_log(o.out, "evaluate", cfg, {{"dataset", dataset}, {"checkpoint", checkpoint}});
  RepeatedReport rep;
  if (model) {
    rep = average_reports({evaluate(*model, test)});
  } else {
    rep = evaluate_repeated(
        [&](int r, std::uint64_t seed) {
          std::cerr << "repeat " << r + 1 << "/" << cfg.repeats << "\n";
          return run_cycle(*bank, cfg.scene, cfg.training, cfg.n_images, cfg.train_fraction, test, seed, o.workers)
              .report;
        },
        cfg.repeats, cfg.root_seed);
  }
  write_eval(o.out, rep);
  std::cout << "mean count error over " << rep.mean.n_images << " images, " << rep.mean.n_repeats
            << " repeat(s): fish " << rep.mean.fish.mae << " (rounded " << rep.mean.fish.mae_rounded << "), dolphin "
            << rep.mean.dolphin.mae << " (rounded " << rep.mean.dolphin.mae_rounded << ")\n";
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& bank_flag) {
  auto cfg = resolve_config(o);
  if (cfg.budgets.empty()) throw ConfigError("eval.budgets is empty");
  SpriteBank bank = load_bank(bank_path(cfg, bank_flag));
  check_bank(bank);

  const auto scenes = simulate_scenes(bank, cfg.test_images, cfg.test_seed, cfg.scene, o.workers);
  const auto test = LabeledSet::from_scenes(scenes, cfg.training.arch.input_size);
  fs::create_directories(o.out);
  write_run_log(o.out, "sweep", cfg);
  auto result = sweep(bank, cfg.scene, cfg.training, cfg.budgets, cfg.train_fraction, test, cfg.root_seed, o.workers,
                      [](const SweepPoint& p) {
                        std::cerr << "budget " << p.budget << ": fish " << p.fish.mae << ", dolphin " << p.dolphin.mae
                                  << "\n";
                      });
  const fs::path out = o.out;
  write_text(out / "sweep.csv", sweep_csv(result));
  write_text(out / "sweep.json", sweep_json(result).dump(2) + "\n");
  write_text(out / "sweep_fish.svg", sweep_svg(result, Species::fish));
  write_text(out / "sweep_dolphin.svg", sweep_svg(result, Species::dolphin));
  if (nlohmann::json::parse(read_text(out / "sweep.json")).is_discarded()) throw std::runtime_error("unreadable sweep.json");
  for (const auto& p : result.points) {
    std::cout << p.budget << " images: fish " << p.fish.mae << ", dolphin " << p.dolphin.mae << "\n";
  }
  if (result.fish_fit) {
    std::cout << "log fit R^2: fish " << result.fish_fit->r_squared << ", dolphin " << result.dolphin_fit->r_squared
              << "\n";
  } else {
    std::cout << "log fit: not enough budgets\n";
  }
  return 0;
}

int cmd_table(const std::string& summary_regression, const std::string& summary_classification) {
  auto rows = reference_table();
  if (!summary_regression.empty() && !summary_classification.empty()) {
    const auto reg = nlohmann::json::parse(read_text(summary_regression));
    const auto cls = nlohmann::json::parse(read_text(summary_classification));
    rows.insert(rows.begin() + 4, TableRow{"Fish", "CensusNet (desk)", reg.at("fish").at("mae").get<double>(),
                                           cls.at("fish").at("mae").get<double>()});
    rows.push_back({"Dolphin", "CensusNet (desk)", reg.at("dolphin").at("mae").get<double>(),
                    cls.at("dolphin").at("mae").get<double>()});
  }
  std::cout << render_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic side-scan sonar scenes and multitask fish/dolphin counting"};
  app.require_subcommand(1);

  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synthetic::SourceSpec spec;
  auto* synth = app.add_subcommand("synth-sources", "Write stand-in annotated sonar source images");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--images", spec.images, "Number of source images")->check(CLI::PositiveNumber);
  synth->add_option("--fish", spec.fish, "Total fish across all images")->check(CLI::NonNegativeNumber);
  synth->add_option("--dolphins", spec.dolphins, "Total dolphins across all images")->check(CLI::NonNegativeNumber);
  synth->add_option("--size", spec.width, "Image width and height")->check(CLI::PositiveNumber);

  std::string ann, images, extract_out;
  auto* extract = app.add_subcommand("extract", "Cut annotated objects into a sprite bank and empty backgrounds");
  extract->add_option("--annotations", ann, "Annotation JSON Lines file")->required()->check(CLI::ExistingFile);
  extract->add_option("--images", images, "Directory holding the annotated images")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--out", extract_out, "Bank output directory")->required();

  CommonOptions gen_o, train_o, eval_o, sweep_o;
  std::string gen_bank, train_data, eval_data, eval_ckpt, eval_bank, sweep_bank;
  auto* gen = app.add_subcommand("generate", "Simulate a labelled scene dataset");
  add_common(gen, gen_o);
  gen->add_option("--bank", gen_bank, "Sprite bank directory (overrides dataset.bank)");

  auto* tr = app.add_subcommand("train", "Train the counter on a generated dataset");
  add_common(tr, train_o);
  tr->add_option("--dataset", train_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);

  auto* ev = app.add_subcommand("evaluate", "Mean count error on a test dataset");
  add_common(ev, eval_o);
  ev->add_option("--dataset", eval_data, "Test dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--checkpoint", eval_ckpt, "Model checkpoint (single run)")->check(CLI::ExistingFile);
  ev->add_option("--bank", eval_bank, "Sprite bank for repeated simulate/train/evaluate cycles");

  auto* sw = app.add_subcommand("sweep", "Error versus synthetic-data budget with logarithmic fits");
  add_common(sw, sweep_o);
  sw->add_option("--bank", sweep_bank, "Sprite bank directory (overrides dataset.bank)");

  std::string table_reg, table_cls;
  auto* table = app.add_subcommand("table", "Print the regression vs classification comparison table");
  table->add_option("--regression", table_reg, "eval_summary.json of a regression run")->check(CLI::ExistingFile);
  table->add_option("--classification", table_cls, "eval_summary.json of a classification run")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    spec.height = spec.width;
    if (*synth) return cmd_synth_sources(synth_out, synth_seed, spec);
    if (*extract) return cmd_extract(ann, images, extract_out);
    if (*gen) return cmd_generate(gen_o, gen_bank);
    if (*tr) return cmd_train(train_o, train_data);
    if (*ev) return cmd_evaluate(eval_o, eval_data, eval_ckpt, eval_bank);
    if (*sw) return cmd_sweep(sweep_o, sweep_bank);
    if (*table) return cmd_table(table_reg, table_cls);
  } catch (const GenerationError& e) {
    std::cerr << "error: generation failed at scene " << e.scene_id() << ": " << e.what() << "\n";
    return 3;
  } catch (const SweepError& e) {
    std::cerr << "error: sweep failed at budget " << e.budget() << ": " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
