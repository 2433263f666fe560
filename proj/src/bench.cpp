// SPDX-License-Identifier: Apache-2.0
#include "retrieve/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "retrieve/json_io.hpp"
#include "retrieve/rng.hpp"
#include "retrieve/version.hpp"

namespace retrieve {

using nlohmann::json;

std::vector<SceneState> standard_corpus(const RunConfig& cfg, std::vector<std::uint64_t>* seeds) {
  const auto quota = static_cast<int>(std::floor(cfg.bench.max_reachable_fraction * cfg.bench.corpus_size));
  std::vector<SceneState> corpus;
  int reachable_count = 0;
  for (std::uint64_t seed = cfg.bench.corpus_seed; static_cast<int>(corpus.size()) < cfg.bench.corpus_size; ++seed) {
    SceneState s;
    try {
      s = generate_scene(cfg.scene, seed);
    } catch (const GenerationError&) {
      continue;
    }
    const bool r = reachable(s, {}, cfg.motion.budget, seed, cfg.motion).has_value();
    if (r && reachable_count >= quota) continue;
    reachable_count += r ? 1 : 0;
    corpus.push_back(std::move(s));
    if (seeds != nullptr) seeds->push_back(seed);
  }
  return corpus;
}

std::vector<SceneState> seeded_corpus(const GenConfig& cfg, std::uint64_t seed, int count) {
  std::vector<SceneState> out;
  for (int i = 0; i < count; ++i) {
    try {
      out.push_back(generate_scene(cfg, seed + static_cast<std::uint64_t>(i)));
    } catch (const GenerationError&) {
    }
  }
  return out;
}

nn::TrainResult train_network(nn::NetKind kind, const std::vector<EpisodeSample>& samples, const RunConfig& cfg) {
  const bool os = kind == nn::NetKind::osnet;
  std::vector<EpisodeSample> used = samples;
  const auto cap = static_cast<std::size_t>(cfg.training.rpnet_max_samples);
  if (!os && cap > 0 && used.size() > cap) used.resize(cap);
  return nn::train(os ? cfg.training.osnet : cfg.training.rpnet, nn::make_examples(kind, used),
                   os ? cfg.training.osnet_train : cfg.training.rpnet_train);
}

std::uint64_t episode_seed(std::uint64_t bench_seed, std::size_t scene) { return derive_seed(bench_seed, {0xbe, scene}); }

BenchResult run_benchmark(const std::vector<SceneState>& corpus, const std::vector<PlannerKind>& planners,
                          const Models& models, const RunConfig& cfg, int workers) {
  for (auto k : planners) {
    if (!needs_models(k)) continue;
    const bool os = k != PlannerKind::rpnet_only;
    const bool rp = k != PlannerKind::osnet_only;
    if ((os && models.osnet == nullptr) || (rp && models.rpnet == nullptr)) {
      throw std::invalid_argument("planner " + to_string(k) + " needs a model that was not supplied");
    }
  }
  const PlannerConfig pc = cfg.planner_config();
  BenchResult res;
  res.episodes.resize(corpus.size() * planners.size());

  auto run_scene = [&](std::size_t i) {
    const std::uint64_t seed = episode_seed(cfg.bench.seed, i);
    for (std::size_t j = 0; j < planners.size(); ++j) {
      res.episodes[i * planners.size() + j] = {i, planners[j], seed, plan(planners[j], corpus[i], models, pc, seed)};
    }
  };

  const auto n = static_cast<std::size_t>(std::max(1, workers));
  if (n == 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) run_scene(i);
  } else {
    // Strided assignment; every slot is written by exactly one thread.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(n);
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < corpus.size(); i += n) run_scene(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  res.rows = aggregate(res.episodes, planners);
  return res;
}

namespace {

std::pair<Scalar, Scalar> mean_std(const std::vector<Scalar>& xs) {
  const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
  if (xs.empty()) return {nan, nan};
  Scalar sum = 0;
  for (Scalar x : xs) sum += x;
  const Scalar mean = sum / static_cast<Scalar>(xs.size());
  if (xs.size() < 2) return {mean, 0};
  Scalar ss = 0;
  for (Scalar x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<Scalar>(xs.size() - 1))};
}

std::string fmt6(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<Scalar> row_values(const MetricsRow& r) {
  return {r.success_rate_pct,     r.objects_rearranged_mean, r.objects_rearranged_std, r.planning_time_mean_s,
          r.planning_time_std_s,  r.distance_mean_m,         r.distance_std_m};
}

json path_json(const Path& p) {
  json a = json::array();
  for (const auto& q : p.waypoints) a.push_back({q.x(), q.y()});
  return a;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<MetricsRow> aggregate(const std::vector<EpisodeRecord>& episodes, const std::vector<PlannerKind>& planners) {
  std::vector<MetricsRow> rows;
  for (auto k : planners) {
    std::vector<Scalar> objects, times, dists;
    int total = 0;
    for (const auto& e : episodes) {
      if (e.planner != k) continue;
      ++total;
      if (!e.result.success) continue;
      objects.push_back(e.result.objects_rearranged());
      times.push_back(e.result.decision_time);
      dists.push_back(e.result.workspace_distance);
    }
    MetricsRow r;
    r.planner = k;
    r.success_rate_pct = total == 0 ? 0 : 100.0 * static_cast<Scalar>(objects.size()) / total;
    std::tie(r.objects_rearranged_mean, r.objects_rearranged_std) = mean_std(objects);
    std::tie(r.planning_time_mean_s, r.planning_time_std_s) = mean_std(times);
    std::tie(r.distance_mean_m, r.distance_std_m) = mean_std(dists);
    rows.push_back(r);
  }
  return rows;
}

std::string format_report(const std::vector<MetricsRow>& rows, ReportFormat format) {
  std::vector<std::vector<std::string>> cells;
  cells.emplace_back(std::begin(kReportColumns), std::end(kReportColumns));
  for (const auto& r : rows) {
    std::vector<std::string> line{to_string(r.planner)};
    for (Scalar v : row_values(r)) line.push_back(fmt6(v));
    cells.push_back(std::move(line));
  }
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) out << (c ? "," : "") << line[c];
      out << '\n';
    }
    return out.str();
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << (c ? "  " : "") << (c ? std::right : std::left) << std::setw(static_cast<int>(width[c])) << line[c];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<MetricsRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<MetricsRow> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != std::size(kReportColumns)) {
      throw ParseError("report line " + std::to_string(lineno) + ": expected " +
                       std::to_string(std::size(kReportColumns)) + " columns");
    }
    if (lineno == 1) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] != kReportColumns[c]) throw ParseError("report header: unexpected column '" + cells[c] + "'");
      }
      continue;
    }
    MetricsRow r;
    try {
      r.planner = planner_from_string(cells[0]);
      Scalar* fields[] = {&r.success_rate_pct,    &r.objects_rearranged_mean, &r.objects_rearranged_std,
                          &r.planning_time_mean_s, &r.planning_time_std_s,  &r.distance_mean_m,
                          &r.distance_std_m};
      for (std::size_t c = 1; c < cells.size(); ++c) *fields[c - 1] = std::stod(cells[c]);
    } catch (const std::exception& e) {
      throw ParseError("report line " + std::to_string(lineno) + ": " + e.what());
    }
    rows.push_back(r);
  }
  return rows;
}

std::string episodes_to_jsonl(const std::vector<EpisodeRecord>& episodes, bool include_timing) {
  std::string out;
  for (const auto& e : episodes) {
    json j{{"scene", e.scene},
           {"planner", to_string(e.planner)},
           {"seed", e.seed},
           {"success", e.result.success},
           {"objects_rearranged", e.result.objects_rearranged()},
           {"workspace_distance", e.result.workspace_distance},
           {"failure_reason", e.result.failure_reason}};
    if (include_timing) j["decision_time"] = e.result.decision_time;
    json acts = json::array();
    for (const auto& a : e.result.actions) {
      acts.push_back({{"object", a.object},
                      {"region", a.region},
                      {"destination", {a.destination.x(), a.destination.y(), a.destination.z()}},
                      {"region_observed", a.region_observed},
                      {"region_occupied", a.region_occupied},
                      {"pick", path_json(a.pick)},
                      {"place", path_json(a.place)}});
    }
    j["actions"] = std::move(acts);
    j["retrieval"] = e.result.retrieval ? path_json(*e.result.retrieval) : json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::string& path) { return fnv1a_hex(read_file(path)); }

std::string manifest_to_string(const RunManifest& m) {
  json planners = json::array();
  for (auto k : m.planners) planners.push_back(to_string(k));
  auto model = [](const std::optional<ModelRef>& r) {
    return r ? json{{"path", r->path}, {"hash", r->hash}} : json(nullptr);
  };
  json j{{"version", m.version},
         {"corpus", {{"path", m.corpus_path}, {"hash", m.corpus_hash}}},
         {"config", parse_json(m.config, "manifest config")},
         {"bench_seed", m.bench_seed},
         {"episode_seeds", m.episode_seeds},
         {"planners", planners},
         {"models", {{"osnet", model(m.osnet)}, {"rpnet", model(m.rpnet)}}}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_string(const std::string& text) {
  const json j = parse_json(text, "manifest");
  const FieldReader f("manifest");
  RunManifest m;
  const auto& version = f.member(j, "version");
  if (!version.is_string()) f.fail("version", "expected a string");
  m.version = version.get<std::string>();
  const auto& corpus = f.object(j, "corpus");
  const auto& cpath = f.member(corpus, "path", "corpus.");
  const auto& chash = f.member(corpus, "hash", "corpus.");
  if (!cpath.is_string() || !chash.is_string()) f.fail("corpus", "path and hash must be strings");
  m.corpus_path = cpath.get<std::string>();
  m.corpus_hash = chash.get<std::string>();
  m.config = f.object(j, "config").dump();
  const auto& seed = f.member(j, "bench_seed");
  if (!seed.is_number_unsigned()) f.fail("bench_seed", "expected a non-negative integer");
  m.bench_seed = seed.get<std::uint64_t>();
  for (const auto& s : f.array(j, "episode_seeds")) {
    if (!s.is_number_unsigned()) f.fail("episode_seeds", "expected non-negative integers");
    m.episode_seeds.push_back(s.get<std::uint64_t>());
  }
  for (const auto& p : f.array(j, "planners")) {
    if (!p.is_string()) f.fail("planners", "expected planner names");
    try {
      m.planners.push_back(planner_from_string(p.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      f.fail("planners", e.what());
    }
  }
  const auto& models = f.object(j, "models");
  auto model = [&](const char* key) -> std::optional<ModelRef> {
    const auto& r = f.member(models, key, "models.");
    if (r.is_null()) return std::nullopt;
    const std::string prefix = std::string("models.") + key + ".";
    const auto& p = f.member(r, "path", prefix);
    const auto& h = f.member(r, "hash", prefix);
    if (!p.is_string() || !h.is_string()) f.fail(prefix, "path and hash must be strings");
    return ModelRef{p.get<std::string>(), h.get<std::string>()};
  };
  m.osnet = model("osnet");
  m.rpnet = model("rpnet");
  return m;
}

void emit_report(const std::string& path, const std::vector<MetricsRow>& rows, const RunManifest& manifest,
                 ReportFormat format) {
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report " + path);
    out << format_report(rows, format);
  }
  std::ofstream man(path + ".manifest.json");
  if (!man) throw std::runtime_error("cannot write manifest for " + path);
  man << manifest_to_string(manifest);
}

RunManifest make_manifest(const std::string& corpus_path, const RunConfig& cfg, const std::vector<PlannerKind>& planners,
                          std::size_t corpus_size, const std::optional<std::string>& osnet_path,
                          const std::optional<std::string>& rpnet_path) {
  RunManifest m;
  m.version = kVersion;
  m.corpus_path = corpus_path;
  m.corpus_hash = file_hash(corpus_path);
  m.config = config_to_string(cfg);
  m.bench_seed = cfg.bench.seed;
  for (std::size_t i = 0; i < corpus_size; ++i) m.episode_seeds.push_back(episode_seed(cfg.bench.seed, i));
  m.planners = planners;
  if (osnet_path) m.osnet = ModelRef{*osnet_path, file_hash(*osnet_path)};
  if (rpnet_path) m.rpnet = ModelRef{*rpnet_path, file_hash(*rpnet_path)};
  return m;
}

LoadedRun load_run(const RunManifest& m) {
  auto check = [](const std::string& path, const std::string& expected) {
    const std::string got = file_hash(path);
    if (got != expected) throw std::runtime_error(path + ": hash " + got + " differs from manifest " + expected);
  };
  LoadedRun run;
  check(m.corpus_path, m.corpus_hash);
  run.corpus = read_corpus(m.corpus_path);
  run.config = config_from_string(m.config, default_config());
  if (run.config.bench.seed != m.bench_seed) throw std::runtime_error("manifest bench seed differs from its config");
  if (m.episode_seeds.size() != run.corpus.size()) throw std::runtime_error("manifest seed count differs from corpus size");
  for (std::size_t i = 0; i < m.episode_seeds.size(); ++i) {
    if (m.episode_seeds[i] != episode_seed(m.bench_seed, i)) throw std::runtime_error("manifest episode seed mismatch");
  }
  if (m.osnet) {
    check(m.osnet->path, m.osnet->hash);
    run.osnet = nn::load_params(m.osnet->path, run.config.training.osnet);
  }
  if (m.rpnet) {
    check(m.rpnet->path, m.rpnet->hash);
    run.rpnet = nn::load_params(m.rpnet->path, run.config.training.rpnet);
  }
  return run;
}

BenchResult rerun(const RunManifest& m, int workers) {
  const LoadedRun run = load_run(m);
  return run_benchmark(run.corpus, m.planners, run.models(), run.config, workers);
}

}  // namespace retrieve
