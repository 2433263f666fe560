// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "retrieve/oracle.hpp"
#include "support.hpp"

using namespace retrieve;
using retrieve::testing::corridor_scene;
using retrieve::testing::make_scene;
using retrieve::testing::single_blocker_scene;
using retrieve::testing::swept_hits;

namespace {

std::size_t region_at(const SceneState& s, Scalar x, Scalar y) {
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    if ((s.regions[i].center2() - Vec2{x, y}).norm() < 1e-9) return i;
  }
  FAIL("no region centred at the requested point");
  return 0;
}

SceneState all_observed(SceneState s) {
  for (auto& r : s.regions) r.observed = true;
  return s;
}

}  // namespace

TEST_CASE("homotopy paths are valid, deterministic and never shorter than the straight line") {
  const SceneState s = single_blocker_scene(3);
  const MotionConfig mcfg;
  const auto seeds = homotopy_seeds(17, 20);
  const auto paths = homotopy_paths(s, 20, seeds, mcfg);
  REQUIRE(paths.size() == 20);
  const Config start = entry_config(s.spec, mcfg);
  const Config goal = grasp_config(s.grasp);
  const ObstacleSet walls = walls_only(s, RobotShape::disc(s.gripper_radius), mcfg);
  for (const auto& p : paths) {
    CHECK(p.waypoints.front() == start);
    CHECK(p.waypoints.back() == goal);
    CHECK(path_length(p) >= (goal - start).norm() - 1e-12);
    CHECK(path_valid(p, walls, mcfg.resolution));
  }
  const auto again = homotopy_paths(s, 20, seeds, mcfg);
  for (std::size_t k = 0; k < paths.size(); ++k) CHECK(again[k].waypoints == paths[k].waypoints);

  // Distinct seeds give distinct waypoint lists.
  int distinct = 0;
  for (std::size_t k = 1; k < paths.size(); ++k) distinct += paths[k].waypoints != paths[0].waypoints ? 1 : 0;
  CHECK(distinct > 0);

  CHECK_THROWS_AS(homotopy_paths(s, 0, seeds, mcfg), std::invalid_argument);
  CHECK_THROWS_AS(homotopy_paths(s, 21, seeds, mcfg), std::invalid_argument);
}

TEST_CASE("one homotopy path is plan then smooth with the same seed") {
  const SceneState s = corridor_scene();
  const MotionConfig mcfg;
  const std::uint64_t seed = 12345;
  const auto one = homotopy_paths(s, 1, {seed}, mcfg);
  const ObstacleSet walls = walls_only(s, RobotShape::disc(s.gripper_radius), mcfg);
  const auto raw = rrt_connect(entry_config(s.spec, mcfg), grasp_config(s.grasp), walls, mcfg.budget, seed,
                               mcfg.step_size, mcfg.resolution);
  REQUIRE(raw);
  CHECK(one.front().waypoints == smooth(*raw, walls, mcfg.smooth_iterations, seed, mcfg.resolution).waypoints);
}

TEST_CASE("blocking counts single out the corridor plug") {
  const SceneState s = corridor_scene();
  const auto paths = homotopy_paths(s, 20, homotopy_seeds(5, 20));
  const auto table = blocking_count_table(s, paths);
  REQUIRE(table.size() == 3);
  CHECK(table[0] == std::pair<ObjectId, int>{1, 0});
  CHECK(table[1] == std::pair<ObjectId, int>{2, 0});
  CHECK(table[2] == std::pair<ObjectId, int>{3, 20});
  const auto d = blocking_counts(s, paths);
  REQUIRE(d);
  CHECK(d->probability(3) == 1.0);
  CHECK(d->argmax() == 3);
  CHECK(d->argmax_set() == std::vector<ObjectId>{3});
}

TEST_CASE("blocking counts agree with a swept-disc oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SceneState s = single_blocker_scene(seed);
    const auto paths = homotopy_paths(s, 20, homotopy_seeds(seed, 20));
    for (const auto& [id, count] : blocking_count_table(s, paths)) {
      int brute = 0;
      for (const auto& p : paths) brute += swept_hits(p, footprint(*s.find(id)), s.gripper_radius) ? 1 : 0;
      CHECK(count == brute);
      // Corner objects never touch an entry-to-target route.
      if (id >= 2) CHECK(count == 0);
    }
  }
}

TEST_CASE("blocking distribution invariants") {
  const SceneState s = single_blocker_scene(9);
  const auto paths = homotopy_paths(s, 20, homotopy_seeds(9, 20));
  const auto d = blocking_counts(s, paths);
  REQUIRE(d);
  Scalar sum = 0;
  for (const auto& [id, p] : d->probs) {
    CHECK(p >= 0);
    CHECK(p <= 1);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d->probs.size() == s.objects.size() - 1);

  SUBCASE("object order does not matter") {
    SceneState reversed = s;
    std::reverse(reversed.objects.begin(), reversed.objects.end());
    const auto r = blocking_counts(reversed, paths);
    REQUIRE(r);
    CHECK(r->probs == d->probs);
  }
  SUBCASE("duplicating every path leaves the distribution unchanged") {
    auto doubled = paths;
    doubled.insert(doubled.end(), paths.begin(), paths.end());
    const auto r = blocking_counts(s, doubled);
    REQUIRE(r);
    CHECK(r->probs == d->probs);
  }
}

TEST_CASE("no blocker yields no distribution") {
  const SceneState s = make_scene({{0.28, 0.6}, {0.06, 0.06}}, {{{0.05, 0.8}, {0.06, 0.06}}});
  const auto paths = homotopy_paths(s, 5, homotopy_seeds(1, 5));
  CHECK_FALSE(blocking_counts(s, paths));
  CHECK_THROWS_AS(blocking_counts(s, {}), std::invalid_argument);
}

TEST_CASE("region costs") {
  // Object 1 sits well off the entry-to-target line.
  const SceneState s = all_observed(make_scene({{0.5, 0.76}, {0.06, 0.06}},
                                               {{{0.04, 0.28}, {0.06, 0.06}}, {{0.44, 0.12}, {0.06, 0.06}}}));
  const auto paths = homotopy_paths(s, 20, homotopy_seeds(2, 20));
  const RegionCosts c = region_costs(s, 1, paths);
  REQUIRE(c.costs.size() == s.regions.size());
  for (Scalar v : c.costs) {
    CHECK(v >= 0);
    CHECK(v <= 1);
  }

  SUBCASE("own cell is free of charge") { CHECK(c.costs[region_at(s, 0.04, 0.28)] == 0.0); }
  SUBCASE("distance term is centre distance over the floor diagonal") {
    const Scalar diag = std::sqrt(0.56 * 0.56 + 0.86 * 0.86);
    CHECK(c.costs[region_at(s, 0.2, 0.12)] == doctest::Approx(std::hypot(0.16, 0.16) / diag).epsilon(1e-12));
    CHECK(c.argmin() == region_at(s, 0.04, 0.28));
  }
  SUBCASE("occupied alone is enough for the maximum") {
    CHECK(c.costs[region_at(s, 0.44, 0.12)] == 1.0);
    CHECK(c.costs[region_at(s, 0.52, 0.76)] == 1.0);
  }
  SUBCASE("unobserved alone is enough for the maximum") {
    SceneState hidden = s;
    const std::size_t i = region_at(s, 0.2, 0.12);
    hidden.regions[i].observed = false;
    CHECK(region_costs(hidden, 1, paths).costs[i] == 1.0);
  }
  SUBCASE("blocking alone is enough for the maximum") {
    const std::size_t i = region_at(s, 0.36, 0.36);
    REQUIRE(swept_hits(paths.front(), footprint_at(*s.find(1), s.regions[i].center2()), s.gripper_radius));
    CHECK_FALSE(region_occupied(s.regions[i], s, ObjectId{1}));
    CHECK(c.costs[i] == 1.0);
  }
  SUBCASE("a footprint that does not fit alone is enough for the maximum") {
    SceneState tall = s;
    tall.find(1)->dims.y() = 0.14;
    const std::size_t i = region_at(s, 0.04, 0.04);
    REQUIRE_FALSE(placement_free(tall, *tall.find(1), tall.regions[i].center2()));
    REQUIRE_FALSE(region_occupied(tall.regions[i], tall, ObjectId{1}));
    REQUIRE(tall.regions[i].observed);
    REQUIRE(std::none_of(paths.begin(), paths.end(), [&](const Path& p) {
      return swept_hits(p, footprint_at(*tall.find(1), tall.regions[i].center2()), tall.gripper_radius);
    }));
    CHECK(c.costs[i] < 1.0);
    CHECK(region_costs(tall, 1, paths).costs[i] == 1.0);
  }
  SUBCASE("distance cost saturates below the maximum") {
    OracleConfig cfg;
    cfg.distance_cost_cap = 0.1;
    const RegionCosts capped = region_costs(s, 1, paths, cfg);
    CHECK(capped.costs[region_at(s, 0.2, 0.12)] == 0.1);
  }
  CHECK_THROWS_AS(region_costs(s, 0, paths), std::invalid_argument);
  CHECK_THROWS_AS(region_costs(s, 9, paths), std::invalid_argument);
}

TEST_CASE("dataset rollout") {
  DatasetConfig cfg;
  cfg.seed = 4;

  SUBCASE("a reachable scene emits nothing") {
    const SceneState open = make_scene({{0.28, 0.6}, {0.06, 0.06}}, {{{0.05, 0.8}, {0.06, 0.06}}});
    DatasetStats st;
    CHECK(generate_dataset({open}, cfg, &st).empty());
    CHECK(st.scenes == 1);
    CHECK(st.initially_reachable == 1);
    CHECK(st.samples == 0);
  }

  SUBCASE("the corridor scene takes one oracle action") {
    DatasetStats st;
    const auto samples = generate_dataset({corridor_scene()}, cfg, &st);
    REQUIRE(samples.size() == 1);
    CHECK(st.samples == 1);
    const EpisodeSample& e = samples.front();
    CHECK(e.selected == 3);
    CHECK(e.osnet_label.probability(3) == 1.0);
    CHECK(std::any_of(e.rpnet_label.costs.begin(), e.rpnet_label.costs.end(), [](Scalar v) { return v < 1.0; }));
    // Labels reflect the observed scene.
    CHECK(e.scene.observed_count() > 0);
    CHECK(e.scene.observed_count() < e.scene.regions.size());
  }

  SUBCASE("every sample on generated scenes has a usable region") {
    GenConfig g;
    g.m_min = 8;
    g.m_max = 14;
    g.side_min = 0.06;
    std::vector<SceneState> corpus;
    for (std::uint64_t seed = 0; corpus.size() < 12; ++seed) {
      try {
        corpus.push_back(generate_scene(g, seed));
      } catch (const GenerationError&) {
      }
    }
    DatasetStats st;
    const auto samples = generate_dataset(corpus, cfg, &st);
    CHECK(st.scenes == 12);
    CHECK(st.samples == static_cast<int>(samples.size()));
    for (const auto& e : samples) {
      CHECK(e.rpnet_label.costs.size() == e.scene.regions.size());
      CHECK(*std::min_element(e.rpnet_label.costs.begin(), e.rpnet_label.costs.end()) < 1.0);
      CHECK(e.osnet_label.probability(e.selected) == e.osnet_label.probability(e.osnet_label.argmax()));
    }
    CHECK(generate_dataset(corpus, cfg).size() == samples.size());
  }
}

TEST_CASE("samples round-trip through the dataset file") {
  DatasetConfig cfg;
  const auto samples = generate_dataset({corridor_scene(), single_blocker_scene(1)}, cfg);
  REQUIRE_FALSE(samples.empty());
  for (const auto& e : samples) {
    const EpisodeSample back = deserialize_sample(serialize_sample(e));
    CHECK(back.scene == e.scene);
    CHECK(back.osnet_label.probs == e.osnet_label.probs);
    CHECK(back.selected == e.selected);
    CHECK(back.rpnet_label.costs == e.rpnet_label.costs);
  }
  const std::string path = "oracle_roundtrip.jsonl";
  write_dataset(path, samples, {});
  const auto back = read_dataset(path);
  CHECK(back.size() == samples.size());
  std::remove(path.c_str());
  std::remove((path + ".meta.json").c_str());

  std::string bad = serialize_sample(samples.front());
  bad.replace(bad.find("\"rpnet_label\":["), 15, "\"rpnet_label\":[0.5,");
  CHECK_THROWS_AS(deserialize_sample(bad, 3), ParseError);
}
