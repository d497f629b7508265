#include "seer/change_detectors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "seer/error.hpp"

namespace seer {
namespace {

// Straight transcription of the textbook recurrences, kept independent of the
// production code (no shared helpers). Returns alarm positions.
std::vector<std::size_t> pht_oracle(const std::vector<double>& xs, double delta, double lambda,
                                    double alpha) {
  std::vector<std::size_t> alarms;
  double weight = 0, mean = 0, m = 0, mmin = 0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    weight = alpha * weight + 1;
    mean = mean + (xs[t] - mean) / weight;
    m = m + xs[t] - mean - delta;
    mmin = std::min(mmin, m);
    if (m - mmin >= lambda) {
      alarms.push_back(t);
      weight = mean = m = mmin = 0;
    }
  }
  return alarms;
}

std::vector<std::size_t> ddm_oracle(const std::vector<int>& errs) {
  std::vector<std::size_t> alarms;
  double n = 0, k = 0, pmin = 1e300, smin = 1e300;
  for (std::size_t t = 0; t < errs.size(); ++t) {
    n += 1;
    k += errs[t];
    const double p = k / n;
    const double s = std::sqrt(p * (1 - p) / n);
    if (n < 30) continue;
    if (p + s < pmin + smin) {
      pmin = p;
      smin = s;
    }
    if (p + s > pmin + 3 * smin) {
      alarms.push_back(t);
      n = k = 0;
      pmin = smin = 1e300;
    }
  }
  return alarms;
}

std::vector<std::size_t> run_pht(const std::vector<double>& xs, PageHinkleyParams p) {
  PageHinkley d(p);
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (d.update(xs[t], t)) out.push_back(t);
  }
  return out;
}

TEST(PageHinkleyTest, StepIncreaseAlarmsQuickly) {
  std::vector<double> xs(3000, 0.0);
  xs.resize(4000, 1.0);
  PageHinkley d({0.005, 50.0, 1.0});
  std::optional<Alarm> first;
  for (std::size_t t = 0; t < xs.size() && !first; ++t) first = d.update(xs[t], t);
  ASSERT_TRUE(first);
  EXPECT_GE(first->index, 3000u);
  EXPECT_LE(first->index, 3120u);
  EXPECT_GE(first->statistic, 50.0);
}

TEST(PageHinkleyTest, ConstantInputNeverAlarms) {
  PageHinkley d;
  for (std::size_t t = 0; t < 20000; ++t) EXPECT_FALSE(d.update(0.3, t));
}

TEST(PageHinkleyTest, MatchesOracleOnRandomStreams) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::bernoulli_distribution low(0.1), high(0.4);
    std::vector<double> xs;
    for (int t = 0; t < 2000; ++t) xs.push_back(low(rng) ? 1.0 : 0.0);
    for (int t = 0; t < 2000; ++t) xs.push_back(high(rng) ? 1.0 : 0.0);
    for (PageHinkleyParams p : {PageHinkleyParams{}, PageHinkleyParams{0.01, 20.0, 0.999}}) {
      EXPECT_EQ(run_pht(xs, p), pht_oracle(xs, p.delta, p.lambda, p.alpha));
    }
  }
}

TEST(PageHinkleyTest, AlphaOneIsArithmeticMean) {
  PageHinkley d({0.0, 1e9, 1.0});
  const std::vector<double> xs{1, 2, 3, 4, 10};
  for (double x : xs) d.update(x);
  EXPECT_DOUBLE_EQ(d.mean(), 4.0);
}

TEST(PageHinkleyTest, ResetRestoresFreshState) {
  PageHinkley d;
  for (int t = 0; t < 100; ++t) d.update(t % 3 == 0 ? 1.0 : 0.0);
  d.reset();
  EXPECT_EQ(d, PageHinkley());
}

TEST(PageHinkleyTest, AlarmResetsState) {
  PageHinkley d({0.0, 5.0, 1.0});
  for (int t = 0; t < 50; ++t) d.update(0.0);
  std::optional<Alarm> a;
  int t = 0;
  while (!a) a = d.update(1.0, ++t);
  EXPECT_EQ(d.count(), 0u);
  EXPECT_EQ(d.statistic(), 0.0);
}

TEST(PageHinkleyTest, RejectsNonFinite) {
  PageHinkley d;
  EXPECT_THROW(d.update(std::nan("")), InvalidArgument);
}

TEST(DdmTest, NoSignalDuringWarmup) {
  Ddm d;
  for (int t = 0; t < 29; ++t) EXPECT_EQ(d.update(true), DriftLevel::stable);
}

TEST(DdmTest, ErrorRateMatchesBatchCount) {
  Ddm d;
  std::mt19937_64 rng(3);
  std::bernoulli_distribution e(0.2);
  std::size_t errors = 0;
  for (int t = 1; t <= 25; ++t) {
    const bool err = e(rng);
    errors += err;
    d.update(err);
    EXPECT_NEAR(d.error_rate(), static_cast<double>(errors) / t, 1e-12);
  }
}

TEST(DdmTest, DetectsJumpFromOnePercentToHalf) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution low(0.01), high(0.5);
  Ddm d;
  for (int t = 0; t < 5000; ++t) d.update(low(rng));
  int steps = 0;
  DriftLevel level = DriftLevel::stable;
  while (level != DriftLevel::alarm && steps < 1000) {
    level = d.update(high(rng));
    ++steps;
  }
  EXPECT_EQ(level, DriftLevel::alarm);
  EXPECT_LE(steps, 200);
}

TEST(DdmTest, WarningPrecedesAlarm) {
  std::vector<int> errs(300, 0);
  for (int t = 0; t < 300; t += 10) errs[t] = 1;
  Ddm d;
  for (int e : errs) d.update(e);
  bool warned = false;
  DriftLevel level = DriftLevel::stable;
  while (level != DriftLevel::alarm) {
    level = d.update(true);
    warned |= level == DriftLevel::warning;
  }
  EXPECT_TRUE(warned);
}

TEST(DdmTest, MatchesOracleAndResetsOnAlarm) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> errs;
    std::bernoulli_distribution a(0.05), b(0.35);
    for (int t = 0; t < 1500; ++t) errs.push_back(a(rng));
    for (int t = 0; t < 1500; ++t) errs.push_back(b(rng));
    Ddm d;
    std::vector<std::size_t> got;
    for (std::size_t t = 0; t < errs.size(); ++t) {
      if (d.update(errs[t]) == DriftLevel::alarm) {
        got.push_back(t);
        EXPECT_EQ(d.count(), 0u);
      }
    }
    EXPECT_EQ(got, ddm_oracle(errs));
  }
}

TEST(ChangeDetectorTest, DispatchesAndValidatesDdmInput) {
  DetectorConfig cfg;
  cfg.kind = DetectorKind::ddm;
  ChangeDetector d(cfg);
  EXPECT_EQ(d.kind(), DetectorKind::ddm);
  EXPECT_THROW(d.update(0.5, 0), InvalidArgument);
  EXPECT_NO_THROW(d.update(1.0, 1));
}

TEST(ChangeDetectorTest, IdenticalInputsGiveIdenticalAlarms) {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution e(0.3);
  std::vector<double> xs;
  for (int t = 0; t < 5000; ++t) xs.push_back(t > 2500 ? 1.0 : e(rng));
  for (DetectorKind kind : {DetectorKind::page_hinkley, DetectorKind::ddm}) {
    DetectorConfig cfg;
    cfg.kind = kind;
    ChangeDetector a(cfg), b(cfg);
    for (std::size_t t = 0; t < xs.size(); ++t) EXPECT_EQ(a.update(xs[t], t), b.update(xs[t], t));
  }
}

TEST(ChangeDetectorTest, KindNamesRoundTrip) {
  for (DetectorKind k : {DetectorKind::page_hinkley, DetectorKind::ddm}) {
    EXPECT_EQ(parse_detector_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_detector_kind("adwin"), std::nullopt);
}

}  // namespace
}  // namespace seer
