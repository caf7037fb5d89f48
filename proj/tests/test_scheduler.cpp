#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "rollout_lab/rollout_lab.hpp"

#include "corpus.hpp"

using namespace rollout_lab;

namespace {

std::size_t non_initial(const RolloutWindow &w) {
  std::size_t n = 0;
  for (WindowNodeId v = 0; v < w.node_count(); ++v)
    n += !w.is_initial(v);
  return n;
}

CostModel random_costs(const Network &net, std::mt19937_64 &rng) {
  CostModel m;
  for (const auto &name : net.nodes())
    m.node_cost[name] = 0.5 + static_cast<double>(rng() % 8) / 2.0;
  return m;
}

} // namespace

TEST(Profile, StreamingSkipRecurrent) {
  auto net = skip_recurrent_network();
  auto w = RolloutWindow::build(net, streaming_pattern(net), 2);
  auto p = parallelism_profile(w);
  ASSERT_EQ(p.per_step.size(), 2u);
  EXPECT_EQ(p.per_step[0].size(), 3u);
  EXPECT_EQ(p.per_step[1].size(), 3u);
  EXPECT_EQ(p.initial.size(), 6u);
}

TEST(Profile, WorkloadInvariant) {
  // every pattern updates the same W * |non-input| nodes, only their order differs
  for (const auto &net : corpus::random_networks(80)) {
    std::size_t inputs = net.inputs().size();
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto w = RolloutWindow::build(net, p, 3);
      auto prof = parallelism_profile(w);
      std::size_t total = 0;
      for (const auto &s : prof.per_step) {
        EXPECT_FALSE(s.empty());
        total += s.size();
      }
      EXPECT_EQ(total, 3 * (net.node_count() - inputs));
      EXPECT_EQ(prof.per_step.size(), steps_to_full(w));
    }
  }
}

TEST(Makespan, UnitCostIdentity) {
  auto nets = corpus::random_networks(150);
  for (const auto &n : corpus::named_networks())
    nets.push_back(n);
  for (const auto &net : nets) {
    for (const auto &p : enumerate_valid_patterns(net)) {
      for (std::size_t wsize = 1; wsize <= 3; ++wsize) {
        auto w = RolloutWindow::build(net, p, wsize);
        auto r = weighted_makespan(w, CostModel::unit());
        EXPECT_EQ(r.total_time, static_cast<double>(steps_to_full(w)));
        EXPECT_EQ(r.total_time, static_cast<double>(tableau_by_paths(w).max()));
        EXPECT_FALSE(r.heuristic);
      }
    }
  }
}

TEST(Makespan, SerialWorkerCountsNodes) {
  for (const auto &net : corpus::random_networks(100)) {
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto w = RolloutWindow::build(net, p, 2);
      auto r = weighted_makespan(w, CostModel::unit(), 1);
      EXPECT_EQ(r.total_time, static_cast<double>(non_initial(w)));
      EXPECT_TRUE(r.heuristic);
    }
  }
}

TEST(Makespan, WeightedBoundsAndCriticalPath) {
  std::mt19937_64 rng(77);
  for (const auto &net : corpus::random_networks(100)) {
    auto costs = random_costs(net, rng);
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto w = RolloutWindow::build(net, p, 2);
      auto free = weighted_makespan(w, costs);
      double work = 0;
      for (WindowNodeId v = 0; v < w.node_count(); ++v)
        if (!w.is_initial(v))
          work += costs.cost(net, w.node(v).node);

      // critical path is a chain of window edges whose costs add up
      double along = 0;
      for (std::size_t k = 0; k < free.critical_path.size(); ++k) {
        along += costs.cost(net, w.node(free.critical_path[k]).node);
        if (k == 0)
          continue;
        bool linked = false;
        for (auto e : w.in_edges(free.critical_path[k]))
          linked = linked || w.edges()[e].source == free.critical_path[k - 1];
        EXPECT_TRUE(linked);
      }
      EXPECT_DOUBLE_EQ(along, free.total_time);
      EXPECT_EQ(free.per_frame_time.size(), 3u);
      EXPECT_EQ(free.per_frame_time[0], 0.0);
      EXPECT_DOUBLE_EQ(free.per_frame_time.back(), free.total_time);

      for (std::size_t k : {1u, 2u, 3u}) {
        auto bounded = weighted_makespan(w, costs, k);
        EXPECT_GE(bounded.total_time + 1e-12, free.total_time);
        EXPECT_LE(bounded.total_time, work / static_cast<double>(k) + free.total_time + 1e-9);
      }
      EXPECT_DOUBLE_EQ(weighted_makespan(w, costs, 1).total_time, work);
    }
  }
}

TEST(Makespan, ScalesWithCosts) {
  auto net = generate_dsr(3);
  auto w = RolloutWindow::build(net, most_sequential_patterns(net).front(), 2);
  CostModel twice;
  twice.fallback = 2.0;
  EXPECT_DOUBLE_EQ(weighted_makespan(w, twice).total_time,
                   2 * weighted_makespan(w, CostModel::unit()).total_time);
}

TEST(Makespan, Errors) {
  auto net = ff_network();
  auto w = RolloutWindow::build(net, streaming_pattern(net), 1);
  CostModel strict;
  strict.fallback.reset();
  strict.node_cost["H1"] = 1;
  try {
    weighted_makespan(w, strict);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingCost);
  }
  strict.node_cost["H2"] = 0;
  strict.node_cost["O"] = 1;
  EXPECT_THROW(weighted_makespan(w, strict), Error);
  EXPECT_THROW(weighted_makespan(w, CostModel::unit(), 0), Error);
}

// Streaming carry-over runs frame j at step j; the size-h window agrees on
// every node whose tableau value reaches its frame index and is earlier
// elsewhere, because it sees all input samples from the start.
TEST(CarryOver, MatchesStreamingWindow) {
  std::size_t matched = 0;
  for (const auto &net : corpus::random_networks(120)) {
    auto s = streaming_pattern(net);
    for (std::size_t h = 1; h <= 5; ++h) {
      auto trace = carry_over_trace(net, s, h);
      auto t = tableau_by_paths(RolloutWindow::build(net, s, h));
      for (std::size_t j = 0; j <= h; ++j) {
        for (NodeIndex v = 0; v < net.node_count(); ++v) {
          std::size_t expect = (j == 0 || net.is_input(v)) ? 0 : j;
          EXPECT_EQ(trace.step[j][v], expect);
          EXPECT_LE(t.at(j, v), trace.step[j][v]);
          if (t.at(j, v) == j) {
            EXPECT_EQ(trace.step[j][v], t.at(j, v));
            ++matched;
          }
        }
      }
    }
  }
  EXPECT_GT(matched, 0u);
}

TEST(CarryOver, RecurrentNetsMatchExactly) {
  for (auto net : {skip_recurrent_network(), generate_dsr(2)}) {
    auto s = streaming_pattern(net);
    auto trace = carry_over_trace(net, s, 6);
    auto t = tableau_by_paths(RolloutWindow::build(net, s, 6));
    for (std::size_t j = 0; j <= 6; ++j)
      EXPECT_EQ(trace.step[j][net.node_index("H1")], t.at(j, net.node_index("H1")));
  }
}

TEST(CarryOver, SequentialUsesFactor) {
  auto net = skip_recurrent_network();
  auto seq = most_sequential_patterns(net).front();
  auto trace = carry_over_trace(net, seq, 4);
  auto t1 = tableau_by_paths(RolloutWindow::build(net, seq, 1));
  EXPECT_EQ(trace.inference_factor, 3u);
  for (std::size_t j = 1; j <= 4; ++j)
    for (NodeIndex v = 0; v < net.node_count(); ++v)
      if (!net.is_input(v)) {
        EXPECT_EQ(trace.step[j][v], (j - 1) * 3 + t1.at(1, v));
      }
}

TEST(CarryOver, SampleProvenance) {
  auto net = skip_network();
  auto trace = carry_over_trace(net, streaming_pattern(net), 4);
  auto o = net.node_index("O");
  // O at frame 3: sample 0 through H1->H2->O, sample 1 through the skip edge
  EXPECT_EQ(trace.samples[3][o], (std::set<std::size_t>{0, 1}));
  auto seq = carry_over_trace(net, most_sequential_patterns(net).front(), 4);
  EXPECT_EQ(seq.samples[3][o], (std::set<std::size_t>{3}));
}

TEST(Response, SkipRecurrent) {
  auto net = skip_recurrent_network();
  auto str = response_profile(net, streaming_pattern(net), {"O"}, 12);
  EXPECT_EQ(str.first_response_step, 2u);
  EXPECT_EQ(str.sampling_period, 1u);
  auto seq = response_profile(net, most_sequential_patterns(net).front(), {"O"}, 12);
  EXPECT_EQ(seq.first_response_step, 3u);
  EXPECT_EQ(seq.sampling_period, 3u);
  ASSERT_GE(seq.responses.size(), 2u);
  EXPECT_EQ(seq.responses[1].step - seq.responses[0].step, 3u);
}

TEST(Response, FeedForwardSameFirstResponse) {
  auto net = ff_network();
  auto str = response_profile(net, streaming_pattern(net), {"O"}, 10);
  auto seq = response_profile(net, most_sequential_patterns(net).front(), {"O"}, 10);
  EXPECT_EQ(str.first_response_step, 3u);
  EXPECT_EQ(seq.first_response_step, 3u);
}

TEST(Response, StreamingDominance) {
  for (const auto &net : corpus::random_networks(120)) {
    auto outputs = default_outputs(net);
    if (outputs.empty())
      continue;
    bool reachable = true;
    try {
      io_path_extremes(net, outputs);
    } catch (const Error &) {
      reachable = false;
    }
    if (!reachable)
      continue;
    std::size_t horizon = 4 * net.node_count() * net.node_count() + 4;
    auto str = response_profile(net, streaming_pattern(net), outputs, horizon);
    ASSERT_TRUE(str.first_response_step);
    EXPECT_EQ(str.sampling_period, 1u);
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto r = response_profile(net, p, outputs, horizon);
      EXPECT_LE(str.sampling_period, r.sampling_period);
      if (r.first_response_step) {
        EXPECT_LE(*str.first_response_step, *r.first_response_step);
      }
    }
  }
}

TEST(Response, Errors) {
  auto net = skip_recurrent_network();
  EXPECT_THROW(response_profile(net, streaming_pattern(net), {"Nope"}, 5), Error);
  EXPECT_THROW(response_profile(net, streaming_pattern(net), {"O"}, 0), Error);
  auto bad = streaming_pattern(net);
  bad.set(*net.find_edge(net.node_index("H1"), net.node_index("H1")), 0);
  EXPECT_THROW(response_profile(net, bad, {"O"}, 5), Error);
}

TEST(DsrSweep, Values) {
  auto rows = dsr_sweep();
  ASSERT_EQ(rows.size(), 7u);
  for (const auto &r : rows) {
    EXPECT_EQ(r.shortest_path, 4u);
    EXPECT_EQ(r.longest_path, static_cast<std::size_t>(4 + r.k));
    EXPECT_EQ(r.streaming_first, 4u);
    EXPECT_EQ(r.sequential_first, static_cast<std::size_t>(4 + r.k));
    EXPECT_EQ(r.difference, static_cast<std::size_t>(r.k));
  }
  EXPECT_EQ(rows[2].difference, 2u);
  auto csv = dsr_sweep_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,streaming_first,sequential_first,difference");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
}
