#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "mdlcl/rng.h"
#include "mdlcl/snapshot.h"
#include "mdlcl/strategy.h"

using namespace mdlcl;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitIsPureAndKeyed) {
  const Rng parent(7);
  const auto before = parent.state();
  Rng x = parent.split("a"), y = parent.split("a"), z = parent.split("b"), w = parent.split(1);
  EXPECT_EQ(parent.state(), before);
  EXPECT_EQ(x.next_u64(), y.next_u64());
  std::set<std::uint64_t> firsts = {Rng(parent).split("a").next_u64(), z.next_u64(), w.next_u64(),
                                    parent.split(2).next_u64()};
  EXPECT_EQ(firsts.size(), 4u);
}

TEST(Rng, UniformMomentsAndRange) {
  Rng rng(1);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3, 4 * std::sqrt((1.0 / 5 - 1.0 / 9) / n));
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  const int n = 100000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4 * std::sqrt(96.0 / n));
}

TEST(Rng, BelowIsUniformOverTheRange) {
  Rng rng(3);
  std::vector<int> hits(7);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++hits[rng.below(7)];
  // Each cell is binomial(n, 1/7).
  const double sd = std::sqrt(n * (1.0 / 7) * (6.0 / 7));
  for (int h : hits) EXPECT_NEAR(h, n / 7.0, 4 * sd);
}

TEST(Snapshot, RoundTripsEveryFieldType) {
  BinaryWriter w;
  w.magic("TEST");
  w.u8(200);
  w.u32(0xdeadbeef);
  w.u64(0x0123456789abcdefULL);
  w.i32(-17);
  w.f64(-0.1);
  w.f64(std::numeric_limits<double>::infinity());
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6.5});
  w.tensor(t);
  w.doubles(std::vector<double>{3.0, 1e-300});
  const auto bytes = w.take();

  BinaryReader r(bytes);
  r.expect_magic("TEST");
  EXPECT_EQ(r.u8(), 200);
  EXPECT_EQ(r.u32(), 0xdeadbeefu);
  EXPECT_EQ(r.u64(), 0x0123456789abcdefULL);
  EXPECT_EQ(r.i32(), -17);
  EXPECT_EQ(r.f64(), -0.1);
  EXPECT_EQ(r.f64(), std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.tensor(), t);
  EXPECT_EQ(r.doubles(), (std::vector<double>{3.0, 1e-300}));
  EXPECT_TRUE(r.at_end());
}

TEST(Snapshot, LittleEndianLayout) {
  BinaryWriter w;
  w.u32(0x01020304);
  EXPECT_EQ(w.buffer(), (std::vector<std::uint8_t>{4, 3, 2, 1}));
}

TEST(Snapshot, TruncationAndWrongMagicAreErrors) {
  BinaryWriter w;
  w.magic("ABCD");
  w.u64(5);
  auto bytes = w.take();
  {
    BinaryReader r(bytes);
    EXPECT_THROW(r.expect_magic("ABCE"), SnapshotError);
  }
  bytes.pop_back();
  BinaryReader r(bytes);
  r.expect_magic("ABCD");
  EXPECT_THROW(r.u64(), SnapshotError);
}

TEST(Snapshot, StrategyHeaderRoundTrip) {
  BinaryWriter w;
  write_strategy_header(w, {StrategyKind::kMlMixture, 9, fingerprint("cfg")});
  const auto bytes = w.take();
  BinaryReader r(bytes);
  const auto h = read_strategy_header(r);
  EXPECT_EQ(h.kind, StrategyKind::kMlMixture);
  EXPECT_EQ(h.step, 9u);
  EXPECT_EQ(h.config_hash, fingerprint("cfg"));
  EXPECT_NE(fingerprint("cfg"), fingerprint("cfh"));
}

TEST(StrategyKinds, NamesRoundTrip) {
  EXPECT_EQ(all_strategy_kinds().size(), 6u);
  for (auto k : all_strategy_kinds()) EXPECT_EQ(parse_strategy_kind(to_string(k)), k);
  EXPECT_EQ(to_string(StrategyKind::kMlPlugin), "ml-plugin");
  EXPECT_EQ(to_string(StrategyKind::kBayesMixture), "bayes-mixture");
  EXPECT_ANY_THROW(parse_strategy_kind("ewc"));
}
