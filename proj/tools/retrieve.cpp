// SPDX-License-Identifier: Apache-2.0
// Command-line entry point: corpus, dataset, training, planning and benchmark.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "retrieve/bench.hpp"
#include "retrieve/config.hpp"
#include "retrieve/oracle.hpp"
#include "retrieve/rng.hpp"
#include "retrieve/version.hpp"

using namespace retrieve;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

/// RETRIEVE_LOG_LEVEL=debug adds diagnostics on stderr.
bool debug_enabled() {
  const char* v = std::getenv("RETRIEVE_LOG_LEVEL");
  return v != nullptr && std::string(v) == "debug";
}

RunConfig load(const Globals& g) { return g.config_path.empty() ? default_config() : load_config(g.config_path); }

std::string require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw CLI::RequiredError(std::string("--out (") + what + ")");
  return g.out;
}

SceneState pick_scene(const std::string& path, std::size_t index) {
  auto corpus = read_corpus(path);
  if (index >= corpus.size()) {
    throw std::out_of_range("scene index " + std::to_string(index) + " outside corpus of " +
                            std::to_string(corpus.size()));
  }
  return corpus[index];
}

char region_glyph(const SceneState& s, const Region& r) {
  if (region_occupied(r, s)) return '#';
  return r.observed ? 'o' : '.';
}

void print_regions(const SceneState& s) {
  const auto cols = static_cast<std::size_t>(s.spec.dx / s.spec.cell);
  if (cols == 0) return;
  // Back row first so the opening sits at the bottom.
  for (std::size_t row = s.regions.size() / cols; row-- > 0;) {
    std::string line;
    for (std::size_t c = 0; c < cols; ++c) line += region_glyph(s, s.regions[row * cols + c]);
    std::printf("  %s\n", line.c_str());
  }
  std::printf("  observed %zu of %zu regions ('#' occupied, 'o' observed, '.' unobserved)\n", s.observed_count(),
              s.regions.size());
}

struct ModelFiles {
  std::string osnet;
  std::string rpnet;

  void add(CLI::App* app) {
    app->add_option("--osnet", osnet, "OSNet weight file");
    app->add_option("--rpnet", rpnet, "RPNet weight file");
  }
};

struct LoadedModels {
  std::optional<nn::Network> osnet;
  std::optional<nn::Network> rpnet;

  Models view() const { return {osnet ? &*osnet : nullptr, rpnet ? &*rpnet : nullptr}; }
};

LoadedModels load_models(const ModelFiles& f, const RunConfig& cfg, const std::vector<PlannerKind>& planners) {
  bool want_os = false;
  bool want_rp = false;
  for (auto k : planners) {
    want_os |= k == PlannerKind::neural || k == PlannerKind::osnet_only;
    want_rp |= k == PlannerKind::neural || k == PlannerKind::rpnet_only;
  }
  if (want_os && f.osnet.empty()) throw std::invalid_argument("the selected planners need --osnet");
  if (want_rp && f.rpnet.empty()) throw std::invalid_argument("the selected planners need --rpnet");
  LoadedModels m;
  if (want_os) m.osnet = nn::load_params(f.osnet, cfg.training.osnet);
  if (want_rp) m.rpnet = nn::load_params(f.rpnet, cfg.training.rpnet);
  return m;
}

std::vector<PlannerKind> parse_planners(const std::vector<std::string>& names) {
  std::vector<PlannerKind> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.insert(out.end(), std::begin(kAllPlanners), std::end(kAllPlanners));
    } else {
      out.push_back(planner_from_string(n));
    }
  }
  return out;
}

void print_result(const PlanResult& r) {
  for (std::size_t i = 0; i < r.actions.size(); ++i) {
    const auto& a = r.actions[i];
    std::printf("step %zu: move object %d from (%.3f, %.3f) to region %zu at (%.3f, %.3f)%s\n", i + 1, a.object,
                a.source.x(), a.source.y(), a.region, a.destination.x(), a.destination.y(),
                a.region_observed ? "" : " [unobserved]");
  }
  if (r.success) {
    std::printf("retrieve target: path of %zu waypoints, length %.3f m\n", r.retrieval->waypoints.size(),
                path_length(*r.retrieval));
    std::printf("success after %d rearrangement(s), decision time %.4f s, workspace distance %.3f m\n",
                r.objects_rearranged(), r.decision_time, r.workspace_distance);
  } else {
    std::printf("failure (%s) after %d rearrangement(s)\n", r.failure_reason.c_str(), r.objects_rearranged());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target retrieval from confined shelves by rearrangement planning"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "configuration file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "base seed; overrides the config value the subcommand uses");
  app.add_option("--out", g.out, "output path");

  // gen-scenes
  auto* gen = app.add_subcommand("gen-scenes", "generate a scene corpus");
  int gen_count = 100;
  bool gen_standard = false;
  gen->add_option("--count", gen_count, "number of scenes")->check(CLI::PositiveNumber);
  gen->add_flag("--standard", gen_standard, "cap reachable scenes at bench.max_reachable_fraction");

  // observe
  auto* obs = app.add_subcommand("observe", "show which regions the viewpoints observe");
  std::string obs_scene;
  std::size_t obs_index = 0;
  obs->add_option("--scene", obs_scene, "corpus file")->required()->check(CLI::ExistingFile);
  obs->add_option("--index", obs_index, "scene index in the corpus");

  // gen-dataset
  auto* gds = app.add_subcommand("gen-dataset", "oracle-labelled samples");
  std::string gds_corpus;
  int gds_count = -1;
  gds->add_option("--corpus", gds_corpus, "corpus file; otherwise scenes come from dataset.seed")
      ->check(CLI::ExistingFile);
  gds->add_option("--count", gds_count, "scene seeds to try when no corpus is given")->check(CLI::PositiveNumber);

  // train
  auto* trn = app.add_subcommand("train", "train osnet or rpnet");
  std::string trn_net;
  std::string trn_data;
  std::string trn_heldout;
  int trn_epochs = 0;
  trn->add_option("net", trn_net, "osnet | rpnet")->required()->check(CLI::IsMember({"osnet", "rpnet"}));
  trn->add_option("--dataset", trn_data, "training samples")->required()->check(CLI::ExistingFile);
  trn->add_option("--heldout", trn_heldout, "held-out samples for evaluation")->check(CLI::ExistingFile);
  trn->add_option("--epochs", trn_epochs, "override the configured epoch count")->check(CLI::PositiveNumber);

  // plan
  auto* pln = app.add_subcommand("plan", "plan one scene and print the step log");
  std::string pln_scene;
  std::size_t pln_index = 0;
  std::string pln_planner = "neural";
  ModelFiles pln_models;
  pln->add_option("--scene", pln_scene, "corpus file")->required()->check(CLI::ExistingFile);
  pln->add_option("--index", pln_index, "scene index in the corpus");
  pln->add_option("--planner", pln_planner, "neural | random | local | osnet_only | rpnet_only");
  pln_models.add(pln);

  // bench
  auto* bch = app.add_subcommand("bench", "run planners over a corpus and write a report");
  std::string bch_corpus;
  std::vector<std::string> bch_planners;
  std::string bch_format = "csv";
  std::string bch_log;
  std::string bch_manifest;
  int bch_workers = 1;
  ModelFiles bch_models;
  bch->add_option("--corpus", bch_corpus, "corpus file")->check(CLI::ExistingFile);
  bch->add_option("--planners", bch_planners, "planner names or 'all' (default: config)")->delimiter(',');
  bch->add_option("--format", bch_format, "csv | table")->check(CLI::IsMember({"csv", "table"}));
  bch->add_option("--log", bch_log, "per-episode log (.jsonl)");
  bch->add_option("--rerun", bch_manifest, "rerun a recorded manifest instead")->check(CLI::ExistingFile);
  bch->add_option("--workers", bch_workers, "worker threads")->check(CLI::PositiveNumber);
  bch_models.add(bch);

  // gradcheck
  auto* gck = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  std::string gck_net = "osnet";
  int gck_count = 50;
  double gck_h = 1e-5;
  double gck_tol = 1e-4;
  gck->add_option("--net", gck_net, "osnet | rpnet")->check(CLI::IsMember({"osnet", "rpnet"}));
  gck->add_option("--count", gck_count, "parameters to probe")->check(CLI::PositiveNumber);
  gck->add_option("--step", gck_h, "finite-difference step")->check(CLI::PositiveNumber);
  gck->add_option("--tolerance", gck_tol, "largest accepted relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    RunConfig cfg = load(g);

    if (gen->parsed()) {
      const std::string out = require_out(g, "corpus file");
      std::vector<SceneState> corpus;
      if (gen_standard) {
        cfg.bench.corpus_size = gen_count;
        if (g.seed) cfg.bench.corpus_seed = *g.seed;
        corpus = standard_corpus(cfg);
      } else {
        // Consecutive seeds; a seed the generator rejects is replaced by the next one.
        for (std::uint64_t s = g.seed.value_or(0); static_cast<int>(corpus.size()) < gen_count; ++s) {
          try {
            corpus.push_back(generate_scene(cfg.scene, s));
          } catch (const GenerationError& e) {
            if (debug_enabled()) std::cerr << "seed " << s << ": " << e.what() << "\n";
          }
        }
      }
      write_corpus(out, corpus);
      std::printf("wrote %zu scenes to %s\n", corpus.size(), out.c_str());
    } else if (obs->parsed()) {
      const SceneState s = pick_scene(obs_scene, obs_index);
      const auto vps = default_viewpoints(s.spec, cfg.visibility);
      const SceneState seen = observe(s, vps, cfg.visibility.ray_count);
      std::printf("scene %zu: %zu objects, %zu viewpoints\n", obs_index, s.objects.size(), vps.size());
      print_regions(seen);
      if (!g.out.empty()) write_corpus(g.out, {seen});
    } else if (gds->parsed()) {
      const std::string out = require_out(g, "dataset file");
      if (g.seed) cfg.dataset.seed = *g.seed;
      const auto corpus = gds_corpus.empty()
                              ? seeded_corpus(cfg.scene, cfg.dataset.seed, gds_count > 0 ? gds_count : cfg.dataset.scenes)
                              : read_corpus(gds_corpus);
      DatasetStats stats;
      const auto samples = generate_dataset(corpus, cfg.dataset_config(cfg.dataset.seed), &stats);
      write_dataset(out, samples,
                    {cfg.oracle.homotopy_paths, cfg.oracle.step_limit, cfg.dataset.seed, kVersion, samples.size()});
      std::printf("wrote %zu samples from %zu scenes to %s (initially reachable %d, no blockers %d, no free region %d)\n",
                  samples.size(), corpus.size(), out.c_str(), stats.initially_reachable, stats.skipped_no_blockers,
                  stats.skipped_no_free_region);
    } else if (trn->parsed()) {
      const std::string out = require_out(g, "weight file");
      const nn::NetKind kind = nn::net_kind_from_string(trn_net);
      auto& tc = kind == nn::NetKind::osnet ? cfg.training.osnet_train : cfg.training.rpnet_train;
      if (g.seed) tc.seed = *g.seed;
      if (trn_epochs > 0) tc.epochs = trn_epochs;
      const auto samples = read_dataset(trn_data);
      const auto res = train_network(kind, samples, cfg);
      for (const auto& e : res.log) {
        std::printf("epoch %3d  train_mse %.6f  validation_mse %.6f\n", e.epoch, e.train_mse, e.validation_mse);
      }
      std::printf("best epoch %d (%zu train, %zu validation samples)\n", res.best_epoch, res.train_count,
                  res.validation_count);
      if (!trn_heldout.empty()) {
        const auto held = read_dataset(trn_heldout);
        std::printf("held-out mse %.6f over %zu samples\n", nn::evaluate_mse(res.net, nn::make_examples(kind, held)),
                    held.size());
        if (kind == nn::NetKind::osnet) std::printf("held-out top-1 %.4f\n", nn::top1_agreement(res.net, held));
      }
      nn::save_params(out, res.net);
      std::printf("wrote %s\n", out.c_str());
    } else if (pln->parsed()) {
      const PlannerKind kind = planner_from_string(pln_planner);
      const SceneState s = pick_scene(pln_scene, pln_index);
      const LoadedModels models = load_models(pln_models, cfg, {kind});
      const std::uint64_t seed = g.seed.value_or(episode_seed(cfg.bench.seed, pln_index));
      std::printf("scene %zu, planner %s, seed %llu\n", pln_index, to_string(kind).c_str(),
                  static_cast<unsigned long long>(seed));
      print_result(plan(kind, s, models.view(), cfg.planner_config(), seed));
    } else if (bch->parsed()) {
      const std::string out = require_out(g, "report file");
      const ReportFormat format = bch_format == "csv" ? ReportFormat::csv : ReportFormat::table;
      BenchResult res;
      RunManifest manifest;
      if (!bch_manifest.empty()) {
        std::ifstream in(bch_manifest);
        std::stringstream ss;
        ss << in.rdbuf();
        manifest = manifest_from_string(ss.str());
        res = rerun(manifest, bch_workers);
      } else {
        if (bch_corpus.empty()) throw CLI::RequiredError("--corpus");
        if (g.seed) cfg.bench.seed = *g.seed;
        if (!bch_planners.empty()) cfg.bench.planners = parse_planners(bch_planners);
        const auto corpus = read_corpus(bch_corpus);
        const LoadedModels models = load_models(bch_models, cfg, cfg.bench.planners);
        auto model_path = [](const std::optional<nn::Network>& n, const std::string& p) {
          return n ? std::optional<std::string>(p) : std::nullopt;
        };
        manifest = make_manifest(bch_corpus, cfg, cfg.bench.planners, corpus.size(),
                                 model_path(models.osnet, bch_models.osnet), model_path(models.rpnet, bch_models.rpnet));
        res = run_benchmark(corpus, cfg.bench.planners, models.view(), cfg, bch_workers);
      }
      emit_report(out, res.rows, manifest, format);
      if (!bch_log.empty()) {
        std::ofstream log(bch_log);
        if (!log) throw std::runtime_error("cannot write " + bch_log);
        log << episodes_to_jsonl(res.episodes);
      }
      std::cout << format_report(res.rows, ReportFormat::table);
      std::printf("wrote %s and %s.manifest.json\n", out.c_str(), out.c_str());
    } else if (gck->parsed()) {
      const nn::NetKind kind = nn::net_kind_from_string(gck_net);
      const std::uint64_t seed = g.seed.value_or(0);
      nn::Network net = make_network(kind == nn::NetKind::osnet ? cfg.training.osnet : cfg.training.rpnet, seed);
      // Any scene with at least one non-target object; targets are random in [0, 1].
      SceneState s;
      for (std::uint64_t k = seed;; ++k) {
        try {
          s = generate_scene(cfg.scene, k);
        } catch (const GenerationError&) {
          continue;
        }
        if (!s.non_target_ids().empty()) break;
      }
      Rng rng(derive_seed(seed, {0x9c}));
      nn::Example ex;
      ex.x = kind == nn::NetKind::osnet ? nn::encode_inputs(s) : nn::encode_inputs(s, s.non_target_ids().front());
      const auto n = kind == nn::NetKind::osnet ? ex.x.others.rows() : ex.x.regions.rows();
      ex.target.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) ex.target(i, 0) = rng.uniform(0, 1);
      const auto rep = nn::gradcheck(net, ex, gck_count, gck_h, derive_seed(seed, {0x9d}));
      for (const auto& e : rep.entries) {
        std::printf("%-24s (%3ld,%3ld)  analytic % .6e  numeric % .6e  rel %.2e\n", e.name.c_str(),
                    static_cast<long>(e.row), static_cast<long>(e.col), e.analytic, e.numeric, e.relative_error);
      }
      std::printf("max relative error %.3e over %d parameters, %d kink-straddling draws redrawn (tolerance %.1e)\n", rep.max_relative_error, gck_count, rep.kink_skips,
                  gck_tol);
      return rep.max_relative_error <= gck_tol ? 0 : 1;
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
