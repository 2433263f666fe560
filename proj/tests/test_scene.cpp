// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "retrieve/rng.hpp"
#include "retrieve/scene.hpp"
#include "support.hpp"

using namespace retrieve;
using retrieve::testing::Box;
using retrieve::testing::make_scene;

namespace {

// Positive-area intersection computed from the interval overlaps directly.
bool rects_intersect(const Rect2& a, const Rect2& b) {
  const Scalar w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const Scalar h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return w > 1e-12 && h > 1e-12;
}

}  // namespace

TEST_CASE("default cabinet has the real shelf dimensions") {
  const SceneState s = generate_scene(GenConfig{}, 7);
  CHECK(s.spec.dx == 0.56);
  CHECK(s.spec.dy == 0.86);
  CHECK(s.spec.dz == 0.50);
}

TEST_CASE("generation is a pure function of config and seed") {
  GenConfig g;
  for (std::uint64_t seed : {0ull, 3ull, 99ull}) CHECK(generate_scene(g, seed) == generate_scene(g, seed));
  CHECK_FALSE(generate_scene(g, 1) == generate_scene(g, 2));
}

TEST_CASE("generated scenes keep footprints disjoint and inside the walls") {
  GenConfig dense;
  dense.m_min = 8;
  dense.m_max = 14;
  dense.side_min = 0.06;
  for (const GenConfig& g : {GenConfig{}, dense}) {
    int made = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      SceneState s;
      try {
        s = generate_scene(g, seed);
      } catch (const GenerationError&) {
        continue;
      }
      ++made;
      int targets = 0;
      for (std::size_t i = 0; i < s.objects.size(); ++i) {
        const Rect2 a = footprint(s.objects[i]);
        CHECK(a.x_min >= 0);
        CHECK(a.x_max <= s.spec.dx);
        CHECK(a.y_min >= 0);
        CHECK(a.y_max <= s.spec.dy);
        CHECK(s.objects[i].center.z() == doctest::Approx(0.5 * s.objects[i].dims.z()));
        targets += s.objects[i].is_target ? 1 : 0;
        for (std::size_t j = i + 1; j < s.objects.size(); ++j) CHECK_FALSE(rects_intersect(a, footprint(s.objects[j])));
      }
      CHECK(targets == 1);
      CHECK(s.grasp.position == s.target().center);
      CHECK(s.grasp.yaw >= -3.141592653589793);
      CHECK(s.grasp.yaw < 3.141592653589793);
      const auto m = static_cast<int>(s.objects.size()) - 1;
      CHECK(m >= g.m_min);
      CHECK(m <= g.m_max);
    }
    CHECK(made >= 90);
  }
}

TEST_CASE("footprint arithmetic") {
  const ObjectState o{1, Vec3{0.30, 0.40, 0.10}, Vec3{0.10, 0.20, 0.20}, false};
  const Rect2 r = footprint(o);
  CHECK(r.x_min == doctest::Approx(0.25));
  CHECK(r.x_max == doctest::Approx(0.35));
  CHECK(r.y_min == doctest::Approx(0.30));
  CHECK(r.y_max == doctest::Approx(0.50));

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const ObjectState q{i, Vec3{rng.uniform(0, 1), rng.uniform(0, 1), 0.1},
                        Vec3{rng.uniform(0.01, 0.2), rng.uniform(0.01, 0.2), 0.2}, false};
    CHECK(footprint(q).area() == doctest::Approx(q.dims.x() * q.dims.y()).epsilon(1e-12));
  }
}

TEST_CASE("region grid drops truncated cells") {
  SceneSpec spec;
  const auto grid = region_grid(spec);
  CHECK(grid.size() == 70);
  std::set<std::pair<Scalar, Scalar>> centres;
  for (const auto& r : grid) {
    CHECK_FALSE(r.observed);
    CHECK(r.center.z() == 0);
    CHECK(r.center.x() > 0);
    CHECK(r.center.x() < spec.dx);
    CHECK(r.center.y() > 0);
    CHECK(r.center.y() < spec.dy);
    const Rect2 cell = region_cell(spec, r);
    CHECK(cell.x_max <= spec.dx + 1e-12);
    CHECK(cell.y_max <= spec.dy + 1e-12);
    centres.insert({r.center.x(), r.center.y()});
  }
  CHECK(centres.size() == grid.size());
  // Row-major: x varies fastest.
  CHECK(grid[1].center.y() == grid[0].center.y());
  CHECK(grid[7].center.y() > grid[0].center.y());
  // Cells tile without overlap.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      CHECK_FALSE(rects_intersect(region_cell(spec, grid[i]), region_cell(spec, grid[j])));
    }
  }

  SceneSpec one;
  one.dx = one.dy = one.cell = 0.5;
  one.opening_min = 0.1;
  one.opening_max = 0.4;
  CHECK(region_grid(one).size() == 1);
}

TEST_CASE("region occupancy") {
  SceneState s = make_scene({{0.28, 0.7}, {0.06, 0.06}}, {{{0.12, 0.12}, {0.16, 0.16}}});
  const auto& under = *std::find_if(s.regions.begin(), s.regions.end(), [](const Region& r) {
    return std::abs(r.center.x() - 0.12) < 1e-9 && std::abs(r.center.y() - 0.12) < 1e-9;
  });
  CHECK(region_occupied(under, s));
  CHECK_FALSE(region_occupied(under, s, ObjectId{1}));

  SceneState empty = s;
  empty.objects.clear();
  for (const auto& r : empty.regions) CHECK_FALSE(region_occupied(r, empty));

  SUBCASE("matches a brute-force intersection oracle and ignores list order") {
    GenConfig g;
    Rng rng(5);
    int pairs = 0;
    for (std::uint64_t seed = 0; pairs < 1000; ++seed) {
      SceneState sc;
      try {
        sc = generate_scene(g, seed);
      } catch (const GenerationError&) {
        continue;
      }
      SceneState shuffled = sc;
      rng.shuffle(shuffled.objects);
      for (int k = 0; k < 20; ++k, ++pairs) {
        const Region& r = sc.regions[rng.index(sc.regions.size())];
        bool expected = false;
        for (const auto& o : sc.objects) expected |= rects_intersect(region_cell(sc.spec, r), footprint(o));
        CHECK(region_occupied(r, sc) == expected);
        CHECK(region_occupied(r, shuffled) == expected);
      }
    }
  }
}

TEST_CASE("scene records round-trip bit-exactly") {
  GenConfig g;
  std::vector<SceneState> corpus;
  for (std::uint64_t seed = 0; corpus.size() < 100; ++seed) {
    try {
      corpus.push_back(generate_scene(g, seed));
    } catch (const GenerationError&) {
    }
  }
  // Flags and awkward decimals must survive too.
  corpus[0].regions[3].observed = true;
  corpus[0].objects[0].center.x() = std::nextafter(corpus[0].objects[0].center.x(), 0.0);
  for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(deserialize_scene(serialize_scene(corpus[i])) == corpus[i]);

  const std::string path = "scene_roundtrip_corpus.jsonl";
  write_corpus(path, corpus);
  const auto back = read_corpus(path);
  REQUIRE(back.size() == corpus.size());
  int diffs = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) diffs += back[i] == corpus[i] ? 0 : 1;
  CHECK(diffs == 0);
  std::remove(path.c_str());
}

TEST_CASE("malformed scene records raise parse errors with context") {
  const std::string rec = serialize_scene(generate_scene(GenConfig{}, 0));
  CHECK_THROWS_AS(deserialize_scene(rec.substr(0, rec.size() / 2), 4), ParseError);
  try {
    deserialize_scene(rec.substr(0, rec.size() / 2), 4);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find('4') != std::string::npos);
  }
  std::string missing = rec;
  missing.replace(missing.find("\"gripper_radius\""), 16, "\"gripper_radiux\"");
  CHECK_THROWS_AS(deserialize_scene(missing), ParseError);
}

TEST_CASE("scene validation rejects broken invariants") {
  SceneState s = make_scene({{0.28, 0.7}, {0.06, 0.06}}, {{{0.2, 0.2}, {0.1, 0.1}}});
  SceneState overlap = s;
  overlap.objects[1].center.head<2>() = Vec2{0.28, 0.68};
  CHECK_THROWS_AS(overlap.validate(), std::invalid_argument);
  SceneState zero = s;
  zero.objects[1].dims.x() = 0;
  CHECK_THROWS_AS(zero.validate(), std::invalid_argument);
  SceneState two_targets = s;
  two_targets.objects[1].is_target = true;
  CHECK_THROWS_AS(two_targets.validate(), std::invalid_argument);
  SceneState outside = s;
  outside.objects[1].center.x() = 0.54;
  CHECK_THROWS_AS(outside.validate(), std::invalid_argument);
}
