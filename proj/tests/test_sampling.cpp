#include "brainscore/sampling.hpp"

#include <doctest.h>

#include <random>

using namespace brainscore;

namespace {

// 20 volumes at TR = 2 s; row i holds the value i in every parcel (plus the
// parcel index / 100 so rows are distinguishable per column).
ParcellatedScan ramp_scan(Index n_timepoints = 20, Index n_parcels = 3, double tr = 2.0) {
  ParcellatedScan scan;
  scan.subject_id = "sub-01";
  scan.tr_seconds = tr;
  scan.bold.resize(n_timepoints, n_parcels);
  for (Index i = 0; i < n_timepoints; ++i) {
    for (Index p = 0; p < n_parcels; ++p) scan.bold(i, p) = static_cast<float>(i) + p / 100.0f;
  }
  return scan;
}

StimulusEvent worked_event() {
  return {"sc-1", "ex-1", 4.0, 8.0, std::array<double, 4>{2, 4, 6, 8}};
}

std::vector<Index> rows_of(const std::vector<std::vector<Index>>& v) {
  std::vector<Index> flat;
  for (const auto& g : v) flat.insert(flat.end(), g.begin(), g.end());
  return flat;
}

}  // namespace

TEST_CASE("volume_index: hand cases") {
  CHECK(volume_index(18.0, 2.0, 20) == 8);
  CHECK(volume_index(0.1, 2.0, 20) == 0);
  CHECK(volume_index(99.0, 2.0, 20) == 19);
  CHECK(volume_index(17.9, 2.0, 20) == 8);
  CHECK(volume_index(18.1, 2.0, 20) == 9);
  // 0.3 / 0.1 is 2.9999999999999996 in binary; still an exact edge.
  CHECK(volume_index(0.3, 0.1, 20) == 2);
  CHECK_THROWS_AS(volume_index(1.0, 0.0, 20), InputError);
  CHECK_THROWS_AS(volume_index(1.0, -2.0, 20), InputError);
}

TEST_CASE("sample_event: worked example with lag 6 s") {
  const auto scan = ramp_scan();
  const auto ev = worked_event();
  const double lag = 6.0;

  CHECK(rows_of(sample_volumes(scan, ev, {Strategy::Last, lag})) == std::vector<Index>{8});
  CHECK(rows_of(sample_volumes(scan, ev, {Strategy::Middle, lag})) == std::vector<Index>{6});
  CHECK(rows_of(sample_volumes(scan, ev, {Strategy::Avg, lag})) == std::vector<Index>{5, 6, 7, 8});
  const auto sentences = sample_volumes(scan, ev, {Strategy::Sentences, lag});
  REQUIRE(sentences.size() == 4);
  CHECK(rows_of(sentences) == std::vector<Index>{5, 6, 7, 8});

  const auto avg = sample_event(scan, ev, {Strategy::Avg, lag});
  REQUIRE(avg.size() == 1);
  // mean of rows 5..8 = 6.5 (+ parcel offset)
  CHECK(avg[0](0) == doctest::Approx(6.5).epsilon(1e-12));
  CHECK(avg[0](2) == doctest::Approx(6.52).epsilon(1e-6));
  const auto last = sample_event(scan, ev, {Strategy::Last, lag});
  CHECK(last[0] == scan.bold.row(8).transpose().cast<double>());
}

TEST_CASE("sample_event: error paths") {
  const auto scan = ramp_scan();
  auto ev = worked_event();
  ev.sentence_ends_s.reset();
  CHECK_THROWS_WITH_AS(sample_event(scan, ev, {Strategy::Sentences, 6.0}),
                       doctest::Contains("sentence_ends_s"), InputError);
  // Window pushed entirely past the last volume.
  CHECK_THROWS_WITH_AS(sample_event(scan, worked_event(), {Strategy::Avg, 40.0}),
                       doctest::Contains("AVG window"), InputError);
  CHECK_THROWS_AS(sample_event(scan, worked_event(), {Strategy::Last, -1.0}), InputError);
}

TEST_CASE("parse_strategy accepts only the uppercase tokens") {
  CHECK(parse_strategy("AVG") == Strategy::Avg);
  CHECK(parse_strategy("LAST") == Strategy::Last);
  CHECK(parse_strategy("MIDDLE") == Strategy::Middle);
  CHECK(parse_strategy("SENTENCES") == Strategy::Sentences);
  CHECK_THROWS_AS(parse_strategy("last"), InputError);
  for (auto s : {Strategy::Avg, Strategy::Last, Strategy::Middle, Strategy::Sentences}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
}

TEST_CASE("property: targets are exact rows or exact row means, and sampling is pure") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParcellatedScan scan;
  scan.tr_seconds = 1.5;
  scan.bold.resize(60, 5);
  std::normal_distribution<float> g;
  for (Index i = 0; i < scan.bold.size(); ++i) scan.bold.data()[i] = g(rng);

  for (int trial = 0; trial < 200; ++trial) {
    const double duration = 0.5 + 10 * u(rng);
    StimulusEvent ev{"s", "e", u(rng) * (90 - duration), duration, std::nullopt};
    ev.sentence_ends_s = std::array<double, 4>{0.2 * duration, 0.4 * duration, 0.7 * duration, duration};
    for (auto strategy : {Strategy::Avg, Strategy::Last, Strategy::Middle, Strategy::Sentences}) {
      const SamplingSpec spec{strategy, 4 * u(rng)};
      std::vector<std::vector<Index>> volumes;
      try {
        volumes = sample_volumes(scan, ev, spec);
      } catch (const InputError&) {
        continue;  // window past the scan end
      }
      const auto a = sample_event(scan, ev, spec);
      const auto b = sample_event(scan, ev, spec);
      REQUIRE(a.size() == volumes.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK((a[k].array() == b[k].array()).all());
        Vector expected = Vector::Zero(5);
        for (Index r : volumes[k]) {
          CHECK(r >= 0);
          CHECK(r < scan.n_timepoints());
          expected += scan.bold.row(r).transpose().cast<double>();
        }
        expected /= static_cast<double>(volumes[k].size());
        CHECK((a[k].array() == expected.array()).all());
      }
    }
  }
}

TEST_CASE("property: a window inside one acquisition interval gives AVG = LAST = MIDDLE") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto scan = ramp_scan(40, 2, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Index volume = 3 + static_cast<Index>(rng() % 20);
    const double lag = 2.0 * static_cast<double>(rng() % 4);
    const double offset = u(rng) * 1.0;                      // start within the volume
    const double duration = (2.0 - offset) * (0.05 + 0.95 * u(rng));  // end within it too
    StimulusEvent ev{"s", "e", volume * 2.0 - lag + offset, duration, std::nullopt};
    if (ev.onset_s < 0) continue;
    const auto avg = rows_of(sample_volumes(scan, ev, {Strategy::Avg, lag}));
    const auto last = rows_of(sample_volumes(scan, ev, {Strategy::Last, lag}));
    const auto mid = rows_of(sample_volumes(scan, ev, {Strategy::Middle, lag}));
    CHECK(avg.size() == 1);
    CHECK(avg == last);
    CHECK(last == mid);
  }
}

TEST_CASE("build_design: shapes, ordering and id checks") {
  const auto scan = ramp_scan(60, 16, 2.0);
  ActivationBundle bundle;
  bundle.model_id = "m";
  bundle.example_ids = {"e0", "e1", "e2", "unused"};
  FloatMatrix acts(4, 8);
  for (Index i = 0; i < acts.size(); ++i) acts.data()[i] = static_cast<float>(i);
  bundle.layers.push_back({0, acts});

  std::vector<StimulusEvent> events;
  for (int e = 0; e < 3; ++e) {
    events.push_back({"sc" + std::to_string(e), "e" + std::to_string(2 - e), 4.0 + 20.0 * e, 8.0,
                      std::array<double, 4>{2, 4, 6, 8}});
  }

  const auto last = build_design(bundle, 0, scan, events, {Strategy::Last, 6.0});
  CHECK(last.x.rows() == 3);
  CHECK(last.x.cols() == 8);
  CHECK(last.y.rows() == 3);
  CHECK(last.y.cols() == 16);
  // Row order follows events; activations are joined by example id, not position.
  CHECK(last.row_ids[0].example_id == "e2");
  CHECK(last.x.row(0) == acts.row(2).cast<double>());
  CHECK(last.x.row(2) == acts.row(0).cast<double>());

  const auto sentences = build_design(bundle, 0, scan, events, {Strategy::Sentences, 6.0});
  CHECK(sentences.x.rows() == 12);
  CHECK(sentences.y.rows() == 12);
  CHECK(sentences.y.cols() == 16);
  for (int i = 0; i < 12; ++i) {
    CHECK(sentences.row_ids[static_cast<std::size_t>(i)].sub_index == i % 4);
    CHECK(sentences.row_ids[static_cast<std::size_t>(i)].scenario_id == "sc" + std::to_string(i / 4));
  }

  auto bad = events;
  bad[1].example_id = "missing";
  CHECK_THROWS_WITH_AS(build_design(bundle, 0, scan, bad, {Strategy::Last, 6.0}),
                       doctest::Contains("not found"), InputError);
  CHECK_THROWS_AS(build_design(bundle, 3, scan, events, {Strategy::Last, 6.0}), InputError);
}
