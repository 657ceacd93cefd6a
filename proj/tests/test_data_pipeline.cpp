#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pacc/data.hpp"

using namespace pacc;

namespace {

// A constant-condition car-following trajectory sampled at 10 Hz.
Trajectory flat_trajectory(const std::string& id, double seconds, double speed, double distance,
                           double t0 = 0.0) {
  Trajectory tr{id, {}};
  int n = static_cast<int>(std::lround(seconds / kSamplePeriodS));
  for (int i = 0; i < n; ++i) {
    RawSample s;
    s.timestamp_s = t0 + i * kSamplePeriodS;
    s.ego_speed_mps = speed;
    s.ego_accel_mps2 = 0.0;
    s.rel_distance_m = distance;
    s.rel_speed_mps = 0.0;
    tr.samples.push_back(s);
  }
  return tr;
}

std::filesystem::path temp_csv(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("load_trajectories ingests a tiny file verbatim") {
  auto path = temp_csv("pacc_tiny.csv",
                       "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n"
                       "d1,0.0,30.0,0.1,40.0,0.5\n"
                       "d1,0.1,30.01,0.1,40.05,0.5\n");
  auto trajectories = load_trajectories(path.string());
  REQUIRE(trajectories.size() == 1);
  CHECK(trajectories[0].driver_id == "d1");
  REQUIRE(trajectories[0].samples.size() == 2);
  CHECK(trajectories[0].samples[1].ego_speed_mps == Catch::Approx(30.01));
  CHECK(trajectories[0].samples[1].rel_distance_m.value() == Catch::Approx(40.05));
}

TEST_CASE("load_trajectories rejects out-of-order timestamps naming the row") {
  auto path = temp_csv("pacc_shuffled.csv",
                       "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n"
                       "d1,0.2,30.0,0.0,40.0,0.0\n"
                       "d1,0.1,30.0,0.0,40.0,0.0\n");
  CHECK_THROWS_WITH(load_trajectories(path.string()),
                    Catch::Matchers::ContainsSubstring("row 3") &&
                        Catch::Matchers::ContainsSubstring("out-of-order"));
}

TEST_CASE("load_trajectories partitions by driver id") {
  auto path = temp_csv("pacc_two_drivers.csv",
                       "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n"
                       "a,0.0,30.0,0.0,40.0,0.0\n"
                       "b,0.0,25.0,0.0,30.0,0.0\n"
                       "a,0.1,30.0,0.0,40.0,0.0\n");
  auto trajectories = load_trajectories(path.string());
  REQUIRE(trajectories.size() == 2);
  CHECK(trajectories[0].driver_id == "a");
  CHECK(trajectories[0].samples.size() == 2);
  CHECK(trajectories[1].driver_id == "b");
}

TEST_CASE("load_trajectories reports malformed rows and handles empty input") {
  auto bad = temp_csv("pacc_bad.csv",
                      "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n"
                      "d1,0.0,not_a_number,0.0,40.0,0.0\n");
  CHECK_THROWS_WITH(load_trajectories(bad.string()), Catch::Matchers::ContainsSubstring("row 2"));

  auto empty = temp_csv("pacc_empty.csv",
                        "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n");
  CHECK(load_trajectories(empty.string()).empty());
}

TEST_CASE("load_trajectories splits on time gaps and missing-lead rows become gaps") {
  auto path = temp_csv("pacc_gap.csv",
                       "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n"
                       "d1,0.0,30.0,0.0,40.0,0.0\n"
                       "d1,0.1,30.0,0.0,,\n"
                       "d1,5.0,30.0,0.0,41.0,0.0\n");
  auto trajectories = load_trajectories(path.string());
  REQUIRE(trajectories.size() == 2);  // the 4.9 s jump starts a new block
  CHECK_FALSE(trajectories[0].samples[1].has_lead());
}

TEST_CASE("extract_events keeps a 40 s compliant segment whole") {
  auto events = extract_events(flat_trajectory("d", 40.0, 25.0, 50.0));
  REQUIRE(events.size() == 1);
  CHECK(events[0].samples.size() == 400);
  CHECK(events[0].duration_s() == Catch::Approx(40.0));
}

TEST_CASE("extract_events drops a 29 s segment") {
  CHECK(extract_events(flat_trajectory("d", 29.0, 25.0, 50.0)).empty());
}

TEST_CASE("extract_events splits at a distance violation") {
  // 70 s, but distance is 130 m at t = 35 s: both halves survive (35 s, 34.9 s)
  auto tr = flat_trajectory("d", 70.0, 25.0, 50.0);
  tr.samples[350].rel_distance_m = 130.0;
  auto events = extract_events(tr);
  REQUIRE(events.size() == 2);
  CHECK(events[0].samples.size() == 350);
  CHECK(events[1].samples.size() == 349);

  // same violation at t = 10 s: only the 59.9 s tail survives
  auto tr2 = flat_trajectory("d", 70.0, 25.0, 50.0);
  tr2.samples[100].rel_distance_m = 130.0;
  auto events2 = extract_events(tr2);
  REQUIRE(events2.size() == 1);
  CHECK(events2[0].samples.size() == 599);
}

TEST_CASE("extract_events splits at speed violations and missing lead") {
  auto tr = flat_trajectory("d", 70.0, 25.0, 50.0);
  tr.samples[349].ego_speed_mps = 17.0;  // below the car-following band
  auto events = extract_events(tr);
  REQUIRE(events.size() == 2);

  auto tr2 = flat_trajectory("d", 70.0, 25.0, 50.0);
  tr2.samples[349].rel_distance_m.reset();
  CHECK(extract_events(tr2).size() == 2);
}

TEST_CASE("extract_events output satisfies all criteria at every sample") {
  auto tr = flat_trajectory("d", 95.0, 25.0, 50.0);
  tr.samples[100].ego_speed_mps = 50.0;
  tr.samples[500].rel_distance_m = 125.0;
  auto events = extract_events(tr);
  REQUIRE_FALSE(events.empty());
  double previous_end = -1.0;
  for (const auto& e : events) {
    CHECK(e.duration_s() >= kMinEventDurationS);
    CHECK(e.samples.front().timestamp_s > previous_end);  // pairwise disjoint in time
    previous_end = e.samples.back().timestamp_s;
    for (const auto& s : e.samples) {
      REQUIRE(s.has_lead());
      CHECK(*s.rel_distance_m < kMaxLeadDistanceM);
      CHECK(s.ego_speed_mps >= kMinEgoSpeedMps);
      CHECK(s.ego_speed_mps <= kMaxEgoSpeedMps);
    }
  }
}

TEST_CASE("aggregate emits one point per full 3 s window") {
  auto tr = flat_trajectory("d", 30.0, 30.0, 40.0);
  CarFollowingEvent e{"d", tr.samples};
  auto points = aggregate(e);
  REQUIRE(points.size() == 10);
  for (const auto& p : points) {
    CHECK(p.speed_mps == Catch::Approx(30.0));
    CHECK(p.distance_m == Catch::Approx(40.0));
    CHECK(p.accel_mps2 == Catch::Approx(0.0));
  }

  CarFollowingEvent e32{"d", flat_trajectory("d", 32.0, 30.0, 40.0).samples};
  CHECK(aggregate(e32).size() == 10);  // 2 s remainder dropped
}

TEST_CASE("aggregate window means match a brute-force recomputation") {
  Trajectory tr{"d", {}};
  for (int i = 0; i < 300; ++i) {
    RawSample s;
    s.timestamp_s = i * kSamplePeriodS;
    s.ego_speed_mps = 25.0 + 0.01 * i;
    s.ego_accel_mps2 = 0.1 * ((i % 7) - 3);
    s.rel_distance_m = 40.0 + 0.05 * i;
    tr.samples.push_back(s);
  }
  CarFollowingEvent e{"d", tr.samples};
  auto points = aggregate(e);
  REQUIRE(points.size() == tr.samples.size() / kSamplesPerWindow);
  for (std::size_t w = 0; w < points.size(); ++w) {
    double v = 0.0, d = 0.0, a = 0.0;
    for (int i = 0; i < kSamplesPerWindow; ++i) {
      const auto& s = tr.samples[w * kSamplesPerWindow + i];
      v += s.ego_speed_mps;
      d += *s.rel_distance_m;
      a += s.ego_accel_mps2;
    }
    CHECK(points[w].speed_mps == Catch::Approx(v / kSamplesPerWindow).epsilon(1e-12));
    CHECK(points[w].distance_m == Catch::Approx(d / kSamplesPerWindow).epsilon(1e-12));
    CHECK(points[w].accel_mps2 == Catch::Approx(a / kSamplesPerWindow).margin(1e-12));
  }
}

TEST_CASE("discretize_state fixes the published feature indexing") {
  CHECK(discretize_state(30.0, 30.0) == 11);  // feature 12
  CHECK(discretize_state(18.0, 0.0) == 0);
  CHECK(discretize_state(43.0, 120.0) == 24);  // top edges inclusive
  CHECK_THROWS_AS(discretize_state(17.9, 50.0), std::out_of_range);
  CHECK_THROWS_AS(discretize_state(30.0, 121.0), std::out_of_range);
}

TEST_CASE("discretize_state is total and surjective over a grid sweep") {
  std::set<int> seen;
  for (double v = 18.0; v <= 43.0; v += 0.5)
    for (double d = 0.0; d <= 120.0; d += 2.0) seen.insert(discretize_state(v, d));
  CHECK(seen.size() == 25);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 24);
}

TEST_CASE("cell centers round-trip through discretize_state") {
  for (int s = 0; s < 25; ++s) {
    auto [v, d] = state_cell_center(s);
    CHECK(discretize_state(v, d) == s);
  }
}

TEST_CASE("classify_action uses right-inclusive thresholds") {
  CHECK(classify_action(-2.0) == 0);
  CHECK(classify_action(-1.46) == 0);
  CHECK(classify_action(-1.4599) == 1);
  CHECK(classify_action(-0.18) == 1);
  CHECK(classify_action(0.0) == 2);
  CHECK(classify_action(0.18) == 2);
  CHECK(classify_action(0.19) == 3);
  CHECK(classify_action(1.46) == 3);
  CHECK(classify_action(1.461) == 4);
  CHECK_THROWS_AS(classify_action(std::nan("")), std::invalid_argument);
}

TEST_CASE("classify_action partitions the real line") {
  // exactly one class per accel; adjacent classes meet with no overlap
  double probes[] = {-5.0, -1.47, -1.46, -1.45, -0.19, -0.18, -0.17, 0.17, 0.18,
                     0.19, 1.45,  1.46,  1.47,  5.0};
  int prev = -1;
  for (double a : probes) {
    int cls = classify_action(a);
    CHECK(cls >= 0);
    CHECK(cls <= 4);
    CHECK(cls >= prev);  // classes are monotone in accel
    prev = cls;
  }
}

TEST_CASE("synthesize_driver concentrates near the preferred cell") {
  DriverProfile profile{11, 1.0, 5.0, 0.5};
  auto events = synthesize_driver(profile, 5, 42);
  REQUIRE(events.size() == 5);

  int in_neighborhood = 0, total = 0;
  for (const auto& e : events) {
    CHECK(e.duration_s() >= kMinEventDurationS);
    for (const auto& s : e.samples) {
      REQUIRE(s.has_lead());
      CHECK(*s.rel_distance_m > 0.0);
      CHECK(*s.rel_distance_m < kMaxLeadDistanceM);
      CHECK(s.ego_speed_mps >= kMinEgoSpeedMps);
      CHECK(s.ego_speed_mps <= kMaxEgoSpeedMps);
    }
    for (const auto& p : aggregate(e)) {
      int state = discretize_state(p.speed_mps, p.distance_m);
      int sb = state / 5, db = state % 5;
      if (std::abs(sb - 2) <= 1 && std::abs(db - 1) <= 1) ++in_neighborhood;
      ++total;
    }
  }
  REQUIRE(total > 0);
  CHECK(static_cast<double>(in_neighborhood) / total >= 0.6);
}

TEST_CASE("synthesize_driver rejects bad profiles and is deterministic") {
  CHECK_THROWS_AS(synthesize_driver({11, 0.0, 5.0, 0.5}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_driver({11, 1.0, -1.0, 0.5}, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_driver({11, 1.0, 5.0, 0.5}, 0, 1), std::invalid_argument);

  DriverProfile profile{7, 1.5, 6.0, 0.8};
  auto a = synthesize_driver(profile, 3, 9001);
  auto b = synthesize_driver(profile, 3, 9001);
  REQUIRE(a.size() == b.size());
  for (std::size_t e = 0; e < a.size(); ++e) {
    REQUIRE(a[e].samples.size() == b[e].samples.size());
    for (std::size_t i = 0; i < a[e].samples.size(); ++i) {
      CHECK(a[e].samples[i].timestamp_s == b[e].samples[i].timestamp_s);
      CHECK(a[e].samples[i].ego_speed_mps == b[e].samples[i].ego_speed_mps);
      CHECK(a[e].samples[i].ego_accel_mps2 == b[e].samples[i].ego_accel_mps2);
      CHECK(a[e].samples[i].rel_distance_m.value() == b[e].samples[i].rel_distance_m.value());
    }
  }
}

TEST_CASE("synthesized events survive extraction unchanged") {
  DriverProfile profile{11, 1.2, 6.0, 0.6};
  auto events = synthesize_driver(profile, 3, 7);
  for (const auto& e : events) {
    Trajectory tr{"d", e.samples};
    auto extracted = extract_events(tr);
    REQUIRE(extracted.size() == 1);
    CHECK(extracted[0].samples.size() == e.samples.size());
  }
}
