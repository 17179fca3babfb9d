#include <gtest/gtest.h>

#include <random>

#include "eegemo/errors.hpp"
#include "eegemo/labeling.hpp"
#include "oracles.hpp"

using namespace eegemo;

TEST(Median, OddEven) {
  EXPECT_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
  EXPECT_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median(std::vector<double>{}), SizeError);
}

TEST(Median, AgainstOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto v = oracle::random_signal(5 + seed, seed, 3.0);
    EXPECT_DOUBLE_EQ(median(v), oracle::median(v));
  }
}

TEST(MedianSplit, TiesArePositive) {
  const std::vector<double> v = {1, 5, 5, 5, 9};
  EXPECT_EQ(median_split(v), (std::vector<bool>{false, true, true, true, true}));
}

TEST(MedianSplit, BalancedForDistinctValues) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(1.0, 9.0);
  for (std::size_t n : {40u, 41u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    const auto s = median_split(v);
    const auto pos = static_cast<std::size_t>(std::count(s.begin(), s.end(), true));
    EXPECT_EQ(pos, (n + 1) / 2);
  }
}

TEST(ThresholdSplit, Fixed) {
  const std::vector<double> v = {4.9, 5.0, 5.1};
  EXPECT_EQ(threshold_split(v, 5.0), (std::vector<bool>{false, true, true}));
}

TEST(Quadrants, Names) {
  EXPECT_EQ(quadrant_of(true, true), Quadrant::HAHV);
  EXPECT_EQ(quadrant_of(false, true), Quadrant::HALV);
  EXPECT_EQ(quadrant_of(true, false), Quadrant::LAHV);
  EXPECT_EQ(quadrant_of(false, false), Quadrant::LALV);
  for (Quadrant q : {Quadrant::HAHV, Quadrant::HALV, Quadrant::LAHV, Quadrant::LALV}) {
    EXPECT_EQ(parse_quadrant(quadrant_name(q)), q);
  }
  EXPECT_THROW(parse_quadrant("XX"), ValidationError);
}

TEST(MakeLabels, QuadrantFollowsFlags) {
  Ratings r;
  r.valence = {8, 2, 7, 3};
  r.arousal = {8, 8, 2, 2};
  const LabelSet l = make_labels(r);
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0].quadrant, Quadrant::HAHV);
  EXPECT_EQ(l[1].quadrant, Quadrant::HALV);
  EXPECT_EQ(l[2].quadrant, Quadrant::LAHV);
  EXPECT_EQ(l[3].quadrant, Quadrant::LALV);
}

TEST(MakeLabels, PooledVersusPerSubject) {
  Ratings a, b;
  a.valence = {1, 2, 3, 4};
  a.arousal = {1, 2, 3, 4};
  b.valence = {6, 7, 8, 9};
  b.arousal = {6, 7, 8, 9};
  const std::vector<Ratings> subjects = {a, b};
  const auto pooled = make_labels(subjects, MedianScope::Pooled);
  const auto per = make_labels(subjects, MedianScope::PerSubject);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_FALSE(pooled[0][t].valence_positive);
    EXPECT_TRUE(pooled[1][t].valence_positive);
    EXPECT_EQ(per[0][t].valence_positive, t >= 2);
    EXPECT_EQ(per[1][t].arousal_positive, t >= 2);
  }
}

TEST(LabelsCsv, RoundTrip) {
  Ratings r;
  r.valence = {8, 2, 7, 3, 5};
  r.arousal = {8, 8, 2, 2, 5};
  const LabelSet l = make_labels(r);
  const std::string csv = format_labels_csv(l);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial,valence_positive,arousal_positive,quadrant");
  EXPECT_EQ(parse_labels_csv(csv), l);
}

TEST(LabelsCsv, Errors) {
  const std::string h = "trial,valence_positive,arousal_positive,quadrant\n";
  EXPECT_THROW(parse_labels_csv(h + "0,1,1,LALV\n"), ValidationError);
  EXPECT_THROW(parse_labels_csv(h + "0,2,1,HAHV\n"), ValidationError);
  EXPECT_THROW(parse_labels_csv(h + "1,1,1,HAHV\n"), ValidationError);
  EXPECT_THROW(parse_labels_csv(h + "0,1,1\n"), ValidationError);
  EXPECT_NO_THROW(parse_labels_csv(h + "0,1,0,LAHV\n"));
}
