#include <gtest/gtest.h>

#include <fstream>

#include "frsb/defense.hpp"
#include "frsb/errors.hpp"
#include "support/synthetic.hpp"

using namespace frsb;

namespace {

PruneConfig small_config(int kappa = 4) {
  PruneConfig c;
  c.kappa = kappa;
  c.sb = 3;
  c.bi = 2;
  c.n = 2;
  return c;
}

// Every identity appears once; `correct` identities are predicted right, the rest wrong.
StreamBatch batch_over(const PruneState& state, const std::vector<int>& correct) {
  StreamBatch b;
  for (int id = 0; id < state.kappa(); ++id) {
    if (!state.active(id)) continue;
    const bool hit = std::find(correct.begin(), correct.end(), id) != correct.end();
    b.push_back({id, hit ? id : (id + 1) % state.kappa()});
  }
  return b;
}

}  // namespace

TEST(PruneConfig, Validation) {
  PruneConfig c = small_config();
  EXPECT_NO_THROW(validate(c));
  c.sb = 0;
  EXPECT_THROW(validate(c), DomainError);
  c = small_config();
  c.bi = 0;
  EXPECT_THROW(validate(c), DomainError);
  c = small_config();
  c.n = 4;
  EXPECT_THROW(validate(c), DomainError);
  EXPECT_EQ(parse_prune_direction("min_accuracy"), PruneDirection::min_accuracy);
  EXPECT_THROW(parse_prune_direction("best"), DomainError);
}

TEST(ObserveBatch, NeverPrunesBeforeStartBatch) {
  const PruneConfig c = small_config();
  PruneState s(c.kappa);
  EXPECT_FALSE(observe_batch(s, batch_over(s, {1}), c));
  EXPECT_FALSE(observe_batch(s, batch_over(s, {1}), c));
  EXPECT_EQ(s.batch_counter, 2);
  EXPECT_EQ(s.hits[1], 2);
  EXPECT_EQ(s.totals[1], 2);
}

TEST(ObserveBatch, PerfectIdentityPrunedAtFirstEligibleBatch) {
  const PruneConfig c = small_config();
  PruneState s(c.kappa);
  std::optional<int> first;
  std::int64_t at = 0;
  while (!first) {
    first = observe_batch(s, batch_over(s, {2}), c);
    at = s.batch_counter;
  }
  EXPECT_EQ(*first, 2);
  EXPECT_EQ(at, 4);  // first multiple of bi = 2 at or after sb = 3
  EXPECT_TRUE(s.removed[2]);
  EXPECT_EQ(s.hits.sum(), 0);
  EXPECT_EQ(s.totals.sum(), 0);
  EXPECT_EQ(s.removal_counter, 1);
}

TEST(ObserveBatch, MinAccuracyDirection) {
  PruneConfig c = small_config();
  c.direction = PruneDirection::min_accuracy;
  PruneState s(c.kappa);
  std::optional<int> pruned;
  for (int k = 0; k < 4; ++k) pruned = observe_batch(s, batch_over(s, {0, 1, 3}), c);
  ASSERT_TRUE(pruned);
  EXPECT_EQ(*pruned, 2);
}

TEST(ObserveBatch, TiesGoToLowestIndex) {
  const PruneConfig c = small_config();
  PruneState s(c.kappa);
  std::optional<int> pruned;
  for (int k = 0; k < 4; ++k) pruned = observe_batch(s, batch_over(s, {1, 3}), c);
  ASSERT_TRUE(pruned);
  EXPECT_EQ(*pruned, 1);
}

TEST(ObserveBatch, IdentitiesWithoutSamplesAreSkipped) {
  const PruneConfig c = small_config();
  PruneState s(c.kappa);
  std::optional<int> pruned;
  for (int k = 0; k < 4; ++k) pruned = observe_batch(s, StreamBatch{{3, 0}, {2, 2}}, c);
  ASSERT_TRUE(pruned);
  EXPECT_EQ(*pruned, 2);
  PruneConfig minc = c;
  minc.direction = PruneDirection::min_accuracy;
  PruneState t(c.kappa);
  for (int k = 0; k < 4; ++k) pruned = observe_batch(t, StreamBatch{{3, 0}, {2, 2}}, minc);
  EXPECT_EQ(*pruned, 3);
}

TEST(ObserveBatch, StopsAfterMaxRemovals) {
  const PruneConfig c = small_config();
  PruneState s(c.kappa);
  int removals = 0;
  for (int k = 0; k < 40; ++k)
    if (observe_batch(s, batch_over(s, {0, 1, 2, 3}), c)) ++removals;
  EXPECT_EQ(removals, c.n);
  EXPECT_EQ(s.removal_counter, c.n);
}

TEST(ObserveBatch, RejectsRemovedUnknownAndEmpty) {
  const PruneConfig c = small_config();
  PruneState s(c.kappa);
  for (int k = 0; k < 4; ++k) observe_batch(s, batch_over(s, {0}), c);
  ASSERT_TRUE(s.removed[0]);
  EXPECT_THROW(observe_batch(s, StreamBatch{{0, 0}}, c), ContractError);
  EXPECT_THROW(observe_batch(s, StreamBatch{{7, 0}}, c), ContractError);
  EXPECT_THROW(observe_batch(s, StreamBatch{{-1, 0}}, c), ContractError);
  EXPECT_THROW(observe_batch(s, StreamBatch{}, c), ContractError);
  PruneState wrong(3);
  EXPECT_THROW(observe_batch(wrong, StreamBatch{{0, 0}}, c), ContractError);
}

TEST(ObserveBatch, HitsNeverExceedTotals) {
  SyntheticStreamConfig sc;
  sc.kappa = 12;
  sc.batch_size = 16;
  sc.num_batches = 200;
  sc.tau_benign = 50;
  sc.tau_poisoned = 10;
  sc.seed = 4;
  SyntheticStream stream(sc);
  PruneConfig c;
  c.kappa = 12;
  c.sb = 20;
  c.bi = 20;
  c.n = 5;
  run_defense(stream, c, [](const PruneState& s) {
    EXPECT_TRUE((s.hits.array() <= s.totals.array()).all());
    EXPECT_TRUE((s.hits.array() >= 0).all());
  });
}

TEST(RunDefense, EventsAtEligibleBatchesOnly) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticStreamConfig sc;
    sc.kappa = 16;
    sc.batch_size = 32;
    sc.num_batches = 400;
    sc.tau_benign = 100;
    sc.tau_poisoned = 20;
    sc.seed = seed;
    SyntheticStream stream(sc);
    PruneConfig c;
    c.kappa = 16;
    c.sb = 30;
    c.bi = 25;
    c.n = 6;
    const DefenseReport r = run_defense(stream, c);
    EXPECT_EQ(r.batches, 400);
    EXPECT_LE(int(r.pruned.size()), c.n);
    std::vector<bool> seen(16, false);
    for (const auto& e : r.pruned) {
      EXPECT_GE(e.batch, c.sb);
      EXPECT_EQ(e.batch % c.bi, 0);
      EXPECT_FALSE(seen[std::size_t(e.identity)]);
      seen[std::size_t(e.identity)] = true;
    }
  }
}

TEST(RunDefense, DeterministicPerSeed) {
  auto run = [](std::uint64_t seed) {
    SyntheticStreamConfig sc;
    sc.kappa = 10;
    sc.batch_size = 20;
    sc.num_batches = 300;
    sc.tau_benign = 80;
    sc.tau_poisoned = 80;
    sc.seed = seed;
    SyntheticStream stream(sc);
    PruneConfig c;
    c.kappa = 10;
    c.sb = 50;
    c.bi = 50;
    c.n = 4;
    return run_defense(stream, c);
  };
  const DefenseReport a = run(9), b = run(9);
  ASSERT_EQ(a.pruned.size(), b.pruned.size());
  for (std::size_t k = 0; k < a.pruned.size(); ++k) {
    EXPECT_EQ(a.pruned[k].identity, b.pruned[k].identity);
    EXPECT_EQ(a.pruned[k].batch, b.pruned[k].batch);
  }
  EXPECT_TRUE(a.final_accuracy.isNaN().cwiseEqual(b.final_accuracy.isNaN()).all());
}

TEST(SyntheticStream, ExcludesRemovedIdentities) {
  SyntheticStreamConfig sc;
  sc.kappa = 5;
  sc.batch_size = 50;
  sc.num_batches = 3;
  SyntheticStream stream(sc);
  PruneState s(5);
  s.removed[1] = s.removed[4] = true;
  int batches = 0;
  while (auto b = stream.next(s)) {
    ++batches;
    EXPECT_EQ(b->size(), 50u);
    for (const auto& p : *b) {
      EXPECT_TRUE(s.active(p.truth));
      EXPECT_GE(p.predicted, 0);
      EXPECT_LT(p.predicted, 5);
    }
  }
  EXPECT_EQ(batches, 3);
}

TEST(SyntheticStream, EqualTausSpreadFirstPrune) {
  std::vector<int> first_counts(8, 0);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SyntheticStreamConfig sc;
    sc.kappa = 8;
    sc.batch_size = 32;
    sc.num_batches = 60;
    sc.tau_benign = sc.tau_poisoned = 100;
    sc.seed = seed;
    SyntheticStream stream(sc);
    PruneConfig c;
    c.kappa = 8;
    c.sb = 60;
    c.bi = 60;
    c.n = 1;
    const DefenseReport r = run_defense(stream, c);
    ASSERT_EQ(r.pruned.size(), 1u);
    ++first_counts[std::size_t(r.pruned[0].identity)];
  }
  EXPECT_LT(*std::max_element(first_counts.begin(), first_counts.end()), 20);
  EXPECT_GE(std::count_if(first_counts.begin(), first_counts.end(), [](int n) { return n > 0; }), 4);
}

TEST(ReplayStream, GroupsByBatchAndDropsRemoved) {
  const auto dir = frsb::testing::temp_dir("replay");
  std::ofstream(dir / "stream.csv") << "batch,true_id,pred_id\n1,0,0\n1,1,1\n2,0,1\n2,2,2\n3,0,0\n";
  ReplayStream stream(dir / "stream.csv");
  PruneState s(3);
  auto b1 = stream.next(s);
  ASSERT_TRUE(b1);
  EXPECT_EQ(b1->size(), 2u);
  s.removed[0] = true;
  auto b2 = stream.next(s);
  ASSERT_TRUE(b2);
  ASSERT_EQ(b2->size(), 1u);
  EXPECT_EQ((*b2)[0].truth, 2);
  EXPECT_FALSE(stream.next(s));
}

TEST(ReplayStream, KeepsRemovedWhenAskedAndReportsBadLines) {
  const auto dir = frsb::testing::temp_dir("replay-keep");
  std::ofstream(dir / "stream.csv") << "1,0,0\n2,0,0\n";
  ReplayStream keep(dir / "stream.csv", false);
  PruneState s(2);
  s.removed[0] = true;
  ASSERT_TRUE(keep.next(s));
  std::ofstream(dir / "bad.csv") << "1,0,0\n2,x,0\n";
  EXPECT_THROW(ReplayStream(dir / "bad.csv"), DomainError);
  EXPECT_THROW(ReplayStream(dir / "missing.csv"), IoError);
}

TEST(ReplayStream, UnknownIdentityReachesMonitor) {
  const auto dir = frsb::testing::temp_dir("replay-unknown");
  std::ofstream(dir / "stream.csv") << "1,0,0\n1,9,9\n";
  ReplayStream stream(dir / "stream.csv");
  PruneConfig c = small_config(3);
  c.n = 1;
  EXPECT_THROW(run_defense(stream, c), ContractError);
}
