#include <gtest/gtest.h>

#include "rollout_lab/rollout_lab.hpp"

#include "corpus.hpp"
#include "dot_check.hpp"
#include "oracles.hpp"

using namespace rollout_lab;

namespace {

std::vector<int> as_ints(const RolloutPattern &p) {
  return {p.bits().begin(), p.bits().end()};
}

} // namespace

TEST(Enumerate, SmallCounts) {
  EXPECT_EQ(count_valid_patterns(make_network({{"I", "A"}, {"A", "B"}})), 4u);
  EXPECT_EQ(count_valid_patterns(make_network({{"I", "A"}, {"A", "A"}})), 2u);
  EXPECT_EQ(count_valid_patterns(make_network({{"I", "A"}, {"A", "B"}, {"B", "C"}, {"C", "A"}})),
            14u);
  // SR: four forward edges free, self-loop fixed
  EXPECT_EQ(count_valid_patterns(skip_recurrent_network()), 16u);
}

TEST(Enumerate, MatchesBruteForce) {
  for (const auto &net : corpus::random_networks(250)) {
    auto expected = oracle::all_valid(net);
    auto got = enumerate_valid_patterns(net);
    ASSERT_EQ(got.size(), expected.size());
    std::set<std::vector<int>> a(expected.begin(), expected.end());
    std::set<std::vector<int>> b;
    for (const auto &p : got) {
      EXPECT_TRUE(is_valid(net, p));
      b.insert(as_ints(p));
    }
    EXPECT_EQ(a, b);
  }
}

TEST(Enumerate, IndependentOfThreadCount) {
  for (const auto &net : corpus::random_networks(40, 5, 99)) {
    Limits one;
    Limits many;
    many.threads = 7;
    EXPECT_EQ(enumerate_valid_patterns(net, one), enumerate_valid_patterns(net, many));
  }
}

TEST(Enumerate, CanonicalOrder) {
  auto net = make_network({{"I", "A"}, {"A", "B"}, {"B", "C"}, {"C", "A"}});
  auto ps = enumerate_valid_patterns(net);
  for (std::size_t i = 1; i < ps.size(); ++i)
    EXPECT_LT(canonical_index(net, ps[i - 1]), canonical_index(net, ps[i]));
}

TEST(Enumerate, Cap) {
  // 25 forward edges from the input
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i < 25; ++i)
    edges.emplace_back("I", "N" + std::to_string(i));
  auto net = make_network(edges);
  try {
    count_valid_patterns(net);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::EnumerationCapExceeded);
  }
}

TEST(Validity, AgreesWithWindowAcyclicity) {
  for (const auto &net : corpus::random_networks(120)) {
    const std::size_t m = net.edge_count();
    for (std::uint64_t c = 0; c < (std::uint64_t{1} << m); c += 1 + (c % 3)) {
      RolloutPattern p{std::vector<std::uint8_t>(m)};
      for (std::size_t e = 0; e < m; ++e)
        p.set(e, static_cast<int>((c >> e) & 1u));
      bool v = is_valid(net, p);
      for (std::size_t w = 1; w <= 3; ++w) {
        auto window = RolloutWindow::build(net, p, w);
        EXPECT_EQ(window.pattern_valid(), v);
        EXPECT_EQ(is_acyclic(window), v);
      }
      EXPECT_EQ(v, oracle::valid(net, as_ints(p)));
    }
  }
}

TEST(Validity, ZeroSelfLoopIsInvalid) {
  auto net = make_network({{"I", "A"}, {"A", "A"}});
  auto p = RolloutPattern::from_assignment(net, {{"I->A", 1}, {"A->A", 0}});
  EXPECT_FALSE(is_valid(net, p));
  auto w = RolloutWindow::build(net, p, 2);
  EXPECT_THROW(w.require_valid(), Error);
  EXPECT_FALSE(nodes_on_cycles(w).empty());
}

TEST(Streaming, ValidAndUniqueMaximizer) {
  auto nets = corpus::random_networks(200);
  for (const auto &n : corpus::named_networks())
    nets.push_back(n);
  for (const auto &net : nets) {
    auto s = streaming_pattern(net);
    ASSERT_TRUE(is_valid(net, s));
    std::size_t winners = 0;
    for (const auto &p : enumerate_valid_patterns(net)) {
      EXPECT_LE(p.ones(), s.ones());
      if (p.ones() == s.ones()) {
        ++winners;
        EXPECT_EQ(p, s);
      }
    }
    EXPECT_EQ(winners, 1u);
  }
}

TEST(MostSequential, SkipRecurrent) {
  auto net = skip_recurrent_network();
  auto ps = most_sequential_patterns(net);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].ones(), 1u);
  EXPECT_EQ(ps[0][*net.find_edge(net.node_index("H1"), net.node_index("H1"))], 1);
}

TEST(MostSequential, MaximizeZerosAmongValid) {
  for (const auto &net : corpus::random_networks(150)) {
    auto all = enumerate_valid_patterns(net);
    std::size_t best = 0;
    for (const auto &p : all)
      best = std::max(best, p.zeros());
    std::vector<RolloutPattern> expected;
    for (const auto &p : all)
      if (p.zeros() == best)
        expected.push_back(p);
    auto got = most_sequential_patterns(net);
    EXPECT_EQ(got, expected);
  }
}

TEST(MostSequential, AmbiguousOnLongCycles) {
  auto net = make_network({{"I", "A"}, {"A", "B"}, {"B", "C"}, {"C", "A"}});
  // one of three cycle edges must bridge frames
  EXPECT_EQ(most_sequential_patterns(net).size(), 3u);
}

TEST(EquallyParallel, IgnoresInputEdges) {
  auto net = skip_network();
  auto s = streaming_pattern(net);
  auto p = s;
  p.set(*net.find_edge(net.node_index("I"), net.node_index("H1")), 0);
  EXPECT_TRUE(equally_model_parallel(net, s, p));
  p.set(*net.find_edge(net.node_index("H1"), net.node_index("O")), 0);
  EXPECT_FALSE(equally_model_parallel(net, s, p));
}

TEST(Lemma1, Examples) {
  auto b = lemma1_bounds(make_network({{"I", "A"}, {"A", "B"}, {"B", "C"}, {"C", "A"}}), true);
  EXPECT_EQ(b.lower_forward, 2);
  EXPECT_EQ(b.lower_cycle, 7);
  EXPECT_EQ(b.lower, 7);
  EXPECT_EQ(b.upper, 16);
  ASSERT_TRUE(b.exact_count);
  EXPECT_EQ(*b.exact_count, 14);

  auto sr = lemma1_bounds(skip_recurrent_network(), false);
  EXPECT_EQ(sr.lower, 16);
  EXPECT_EQ(sr.upper, 16);
  EXPECT_FALSE(sr.exact_count);
}

TEST(Lemma1, Sandwich) {
  for (const auto &net : corpus::random_networks(300)) {
    auto b = lemma1_bounds(net, true);
    ASSERT_TRUE(b.exact_count);
    EXPECT_LE(b.lower, *b.exact_count);
    EXPECT_LE(*b.exact_count, b.upper);
    EXPECT_GE(b.lower, 1);
  }
}

TEST(Lemma1, BigUpperBound) {
  // 70 forward edges: bounds need more than 64 bits, exact count is skipped
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i < 70; ++i)
    edges.emplace_back("I", "N" + std::to_string(i));
  auto b = lemma1_bounds(make_network(edges), false);
  EXPECT_EQ(b.upper, BigCount(1) << 70);
  EXPECT_EQ(count_to_json(b.upper).dump(), "\"1180591620717411303424\"");
}

TEST(Window, EdgeCounts) {
  for (const auto &net : corpus::random_networks(60)) {
    for (const auto &p : enumerate_valid_patterns(net)) {
      for (std::size_t w = 1; w <= 3; ++w) {
        auto window = RolloutWindow::build(net, p, w);
        EXPECT_EQ(window.active_edge_count(), w * net.edge_count());
        EXPECT_EQ(window.edges().size(), w * net.edge_count() + p.zeros());
        EXPECT_EQ(window.node_count(), (w + 1) * net.node_count());
      }
    }
  }
}

TEST(Window, Errors) {
  auto net = ff_network();
  EXPECT_THROW(RolloutWindow::build(net, streaming_pattern(net), 0), Error);
  EXPECT_THROW(RolloutWindow::build(net, RolloutPattern({1, 1}), 1), Error);
  EXPECT_THROW(RolloutPattern::from_assignment(net, {{"I->H1", 1}}), Error);
}

TEST(PatternIo, RoundTrip) {
  for (const auto &net : corpus::random_networks(50)) {
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto text = pattern_to_json(net, p).dump(2);
      auto back = parse_pattern_json(net, text);
      EXPECT_EQ(back, p);
      EXPECT_EQ(pattern_to_json(net, back).dump(2), text);
    }
  }
}

TEST(PatternIo, Rejects) {
  auto net = ff_network();
  EXPECT_THROW(parse_pattern_json(net, R"({"edges": {"I->H1": 1}})"), Error);
  EXPECT_THROW(parse_pattern_json(net, R"({"edges": {"I->H1": 1, "H1->H2": 1, "H2->O": 2}})"),
               Error);
  EXPECT_THROW(parse_pattern_json(net, R"({"edges": {"I->H1": 1, "H1->H2": 1, "H2->O": 1, "O->I": 1}})"),
               Error);
  EXPECT_THROW(parse_pattern_json(net, "{"), ParseError);
}

TEST(WindowDot, Grammar) {
  for (const auto &net : corpus::named_networks()) {
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto w = RolloutWindow::build(net, p, 2);
      auto t = tableau_by_paths(w);
      EXPECT_EQ(dot::check(window_to_dot(w)), "");
      EXPECT_EQ(dot::check(window_to_dot(w, &t)), "");
    }
    EXPECT_EQ(dot::check(network_to_dot(net)), "");
  }
  EXPECT_NE(dot::check("digraph { a -> }"), "");
  EXPECT_NE(dot::check("digraph { a [label=] }"), "");
}

TEST(WindowDot, Styling) {
  auto net = skip_recurrent_network();
  auto w = RolloutWindow::build(net, most_sequential_patterns(net).front(), 1);
  auto text = window_to_dot(w);
  EXPECT_NE(text.find("subgraph cluster_frame_0"), std::string::npos);
  EXPECT_NE(text.find("subgraph cluster_frame_1"), std::string::npos);
  EXPECT_NE(text.find("\"f0_H1\" -> \"f1_H1\" [style=solid"), std::string::npos);
  EXPECT_NE(text.find("\"f1_H1\" -> \"f1_H2\" [style=dashed"), std::string::npos);
}
