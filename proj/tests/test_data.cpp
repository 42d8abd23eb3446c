#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "sigpred/data.hpp"

using namespace sigpred;

namespace {

std::vector<TrajectoryRecord> straight_track(int ped_id, int n, const Vec2& start,
                                             const Vec2& step, long frame0 = 0) {
  std::vector<TrajectoryRecord> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(TrajectoryRecord{frame0 + i, ped_id, start + static_cast<double>(i) * step});
  }
  return out;
}

std::ostringstream null_sink;

}  // namespace

TEST_CASE("parse_trajectories direct parse") {
  std::istringstream in("10 3 1.50 -2.25\n");
  const auto recs = parse_trajectories(in, "mem");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].frame_id == 10);
  CHECK(recs[0].ped_id == 3);
  CHECK(recs[0].position.x() == doctest::Approx(1.5));
  CHECK(recs[0].position.y() == doctest::Approx(-2.25));
}

TEST_CASE("parse_trajectories empty file and comments") {
  std::istringstream empty("");
  CHECK(parse_trajectories(empty, "mem").empty());

  std::istringstream comments("# header\n\n  # indented comment\n1 1 0 0\n");
  CHECK(parse_trajectories(comments, "mem").size() == 1);
}

TEST_CASE("parse_trajectories reports the bad line") {
  std::istringstream in("1 1 0 0\n10 3 abc 1\n");
  CHECK_THROWS_WITH_AS(parse_trajectories(in, "mem"), doctest::Contains("mem:2"),
                       DataError);
}

TEST_CASE("parse/serialize round trip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-10.0, 10.0);
  std::ostringstream os;
  os.precision(17);
  std::vector<TrajectoryRecord> original;
  for (int i = 0; i < 40; ++i) {
    TrajectoryRecord r{i / 4, i % 4 + 1, Vec2(uni(rng), uni(rng))};
    original.push_back(r);
    os << r.frame_id << "\t " << r.ped_id << " " << r.position.x() << " "
       << r.position.y() << "\n";
  }
  std::istringstream is(os.str());
  const auto parsed = parse_trajectories(is, "mem");
  REQUIRE(parsed.size() == original.size());
  for (size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].frame_id == original[i].frame_id);
    CHECK(parsed[i].ped_id == original[i].ped_id);
    CHECK((parsed[i].position - original[i].position).norm() < 1e-9);
  }
}

TEST_CASE("resample: identity when already on the grid") {
  const auto recs = straight_track(1, 10, Vec2(0, 0), Vec2(0.26, 0.1));
  const auto series = resample(recs, 0.2, 0.2, null_sink);
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].positions.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK((series[0].positions[static_cast<size_t>(i)] -
           recs[static_cast<size_t>(i)].position)
              .norm() < 1e-12);
  }
}

TEST_CASE("resample: midpoint interpolation") {
  std::vector<TrajectoryRecord> recs = {{0, 1, Vec2(0, 0)}, {1, 1, Vec2(0.4, 0)}};
  const auto series = resample(recs, 0.4, 0.2, null_sink);
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].positions.size() == 3);
  CHECK(series[0].positions[1].x() == doctest::Approx(0.2));
  CHECK(series[0].positions[1].y() == doctest::Approx(0.0));
}

TEST_CASE("resample: linear across a frame gap") {
  // Frames 0, 1, 3 (frame 2 missing) at 0.2 s per frame.
  std::vector<TrajectoryRecord> recs = {
      {0, 1, Vec2(0, 0)}, {1, 1, Vec2(1, 0)}, {3, 1, Vec2(3, 0)}};
  const auto series = resample(recs, 0.2, 0.2, null_sink);
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].positions.size() == 4);
  CHECK(series[0].positions[2].x() == doctest::Approx(2.0));
}

TEST_CASE("resample: single-frame pedestrian is skipped with a report") {
  std::ostringstream report;
  std::vector<TrajectoryRecord> recs = {{0, 7, Vec2(0, 0)}, {0, 1, Vec2(0, 0)},
                                        {1, 1, Vec2(0.2, 0)}};
  const auto series = resample(recs, 0.2, 0.2, report);
  CHECK(series.size() == 1);
  CHECK(report.str().find("skipped ped 7") != std::string::npos);
}

TEST_CASE("resample is idempotent on gridded data") {
  const auto recs = straight_track(2, 20, Vec2(1, 1), Vec2(0.2, -0.06));
  const auto once = resample(recs, 0.2, 0.2, null_sink);
  std::vector<TrajectoryRecord> regenerated;
  for (size_t i = 0; i < once[0].positions.size(); ++i) {
    regenerated.push_back(TrajectoryRecord{once[0].start_step + static_cast<long>(i),
                                           2, once[0].positions[i]});
  }
  const auto twice = resample(regenerated, 0.2, 0.2, null_sink);
  REQUIRE(twice[0].positions.size() == once[0].positions.size());
  for (size_t i = 0; i < once[0].positions.size(); ++i) {
    CHECK((twice[0].positions[i] - once[0].positions[i]).norm() < 1e-12);
  }
}

TEST_CASE("build_windows counting") {
  auto make_series = [](int n) {
    PedSeries s;
    s.ped_id = 1;
    s.start_step = 0;
    for (int i = 0; i < n; ++i) s.positions.push_back(Vec2(0.25 * i, 0));
    return std::vector<PedSeries>{s};
  };
  CHECK(build_windows(make_series(32), 8, 24).size() == 1);
  CHECK(build_windows(make_series(31), 8, 24).empty());
  CHECK(build_windows(make_series(40), 8, 24).size() == 9);
  CHECK(build_windows(make_series(40), 8, 24, 4).size() == 3);
}

TEST_CASE("build_windows: exact v1 on linear data, arithmetic timestamps") {
  PedSeries s;
  s.ped_id = 4;
  s.start_step = 5;
  for (int i = 0; i < 32; ++i) s.positions.push_back(Vec2(0.2 * i, 0));  // 1 m/s +x
  const auto windows = build_windows({s}, 8, 24);
  REQUIRE(windows.size() == 1);
  const auto& w = windows[0];
  CHECK((w.v1 - Vec2(1, 0)).norm() < 1e-9);
  CHECK(w.observed.size() == 8);
  CHECK(w.future.size() == 24);

  double prev = w.observed[0].t - 0.2;
  for (const auto& o : w.observed) {
    CHECK(o.t == doctest::Approx(prev + 0.2));
    prev = o.t;
  }
  for (const auto& f : w.future) {
    CHECK(f.t == doctest::Approx(prev + 0.2));
    prev = f.t;
  }
}

TEST_CASE("build_windows collects co-present neighbors") {
  PedSeries a;
  a.ped_id = 1;
  a.start_step = 0;
  for (int i = 0; i < 32; ++i) a.positions.push_back(Vec2(0.2 * i, 0));
  PedSeries b = a;
  b.ped_id = 2;
  for (auto& p : b.positions) p.y() += 1.0;
  PedSeries c;  // appears too late to cover the observed span
  c.ped_id = 3;
  c.start_step = 4;
  for (int i = 0; i < 32; ++i) c.positions.push_back(Vec2(0, 0.2 * i));

  const auto windows = build_windows({a, b, c}, 8, 24);
  const auto& first = windows[0];
  CHECK(first.ped_id == 1);
  REQUIRE(first.neighbors_observed.size() == 1);
  CHECK(first.neighbors_observed[0].ped_id == 2);
  CHECK(first.neighbors_observed[0].observed.size() == 8);
}

TEST_CASE("gt_covariance zero on perfectly linear futures") {
  PedSeries s;
  s.ped_id = 1;
  s.start_step = 0;
  for (int i = 0; i < 32; ++i) s.positions.push_back(Vec2(0.3 * i, -0.1 * i));
  const auto windows = build_windows({s}, 8, 24);
  for (int h = 1; h <= 24; ++h) {
    const CovTarget t = gt_covariance(windows[0], h);
    CHECK(t.scale == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("gt_covariance hand example") {
  // x1 = (0,0), v1 = (1,0), H = 2 s, xH = (1,1): deviation (1,-1), scale 2.
  PredictionWindow w;
  for (int i = 0; i < 8; ++i) {
    w.observed.push_back(
        TimedState{0.2 * i, AgentState(Vec2(0.2 * (i - 7), 0), Vec2(1, 0), 0, 0)});
  }
  w.v1 = Vec2(1, 0);
  for (int i = 1; i <= 10; ++i) {
    w.future.push_back(TimedPos{1.4 + 0.2 * i, Vec2(0.1 * i, 0.1 * i)});
  }
  const CovTarget t = gt_covariance(w, 10);  // H = 2 s, xH = (1, 1)
  CHECK(t.horizon == doctest::Approx(2.0));
  CHECK(t.scale == doctest::Approx(2.0));
  CHECK(t.sigma_bar()(0, 0) == doctest::Approx(2.0));
  CHECK(t.sigma_bar()(0, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(gt_covariance(w, 0), std::invalid_argument);
  CHECK_THROWS_AS(gt_covariance(w, 11), std::invalid_argument);
}

TEST_CASE("gt_covariance properties: isotropic, PSD, quadratic in deviation") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    PredictionWindow w;
    const Vec2 x1(uni(rng), uni(rng));
    const Vec2 v1(uni(rng), uni(rng));
    const Vec2 dev(uni(rng), uni(rng));
    w.observed.push_back(TimedState{0.0, AgentState(x1, v1, 0, 0)});
    w.v1 = v1;
    const int h = 1 + static_cast<int>(std::abs(uni(rng)) * 5);
    for (int i = 1; i <= h; ++i) {
      w.future.push_back(TimedPos{0.2 * i, Vec2(0, 0)});
    }
    const double horizon = 0.2 * h;
    w.future.back().position = x1 + horizon * v1 - dev;

    const CovTarget t = gt_covariance(w, h);
    CHECK(t.scale >= 0.0);
    CHECK(t.sigma_bar()(0, 0) == doctest::Approx(t.sigma_bar()(1, 1)));
    CHECK(t.sigma_bar()(0, 1) == 0.0);
    CHECK(t.scale == doctest::Approx(dev.squaredNorm()));

    // Doubling the deviation quadruples the scale.
    PredictionWindow w2 = w;
    w2.future.back().position = x1 + horizon * v1 - 2.0 * dev;
    CHECK(gt_covariance(w2, h).scale == doctest::Approx(4.0 * t.scale));
  }
}

TEST_CASE("build_covnet_dataset sample count and teacher forcing") {
  PedSeries s;
  s.ped_id = 1;
  s.start_step = 0;
  for (int i = 0; i < 32; ++i) {
    s.positions.push_back(Vec2(0.22 * i, 0.03 * i * i * 0.01));
  }
  const auto windows = build_windows({s}, 8, 24);
  REQUIRE(windows.size() == 1);
  const HsfmParams params;
  const auto dataset = build_covnet_dataset(windows, params);
  CHECK(dataset.size() == 24);

  // Incoming variance inputs follow the target sequence shifted by one.
  CHECK(dataset[0].first.v[4] == doctest::Approx(0.0));
  CHECK(dataset[0].first.v[5] == doctest::Approx(0.0));
  for (size_t h = 1; h < dataset.size(); ++h) {
    CHECK(dataset[h].first.v[4] == doctest::Approx(dataset[h - 1].second.x()));
  }

  // Deterministic ordering across runs.
  const auto again = build_covnet_dataset(windows, params);
  for (size_t i = 0; i < dataset.size(); ++i) {
    CHECK(dataset[i].first.v == again[i].first.v);
    CHECK(dataset[i].second == again[i].second);
  }
}

TEST_CASE("build_covnet_dataset: linear futures give zero targets") {
  PedSeries s;
  s.ped_id = 1;
  s.start_step = 0;
  for (int i = 0; i < 32; ++i) s.positions.push_back(Vec2(0.2 * i, 0.1 * i));
  const auto dataset = build_covnet_dataset(build_windows({s}, 8, 24), HsfmParams{});
  for (const auto& [in, target] : dataset) {
    CHECK(target.x() == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(target.y() == doctest::Approx(0.0).epsilon(1e-10));
  }
}
