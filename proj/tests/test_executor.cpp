#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rollout_lab/rollout_lab.hpp"

#include "corpus.hpp"
#include "oracles.hpp"

using namespace rollout_lab;

namespace {

std::vector<NodeValues> random_inputs(const Network &net, const NumericSpec &spec,
                                      std::size_t frames, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<NodeValues> out(frames);
  for (auto &f : out)
    for (auto v : net.inputs()) {
      std::vector<double> x(spec.dims.at(net.name(v)));
      for (auto &xi : x)
        xi = u(rng);
      f[net.name(v)] = x;
    }
  return out;
}

std::vector<NodeValues> constant_inputs(const Network &net, const NumericSpec &spec,
                                        std::size_t frames, double c) {
  std::vector<NodeValues> out(frames);
  for (auto &f : out)
    for (auto v : net.inputs())
      f[net.name(v)] = std::vector<double>(spec.dims.at(net.name(v)), c);
  return out;
}

NumericSpec identity_spec(const Network &net) {
  NumericSpec spec;
  spec.activation = Activation::Identity;
  for (const auto &n : net.nodes())
    spec.dims[n] = 1;
  for (const auto &e : net.edges())
    spec.edge_params[{net.name(e.source), net.name(e.target)}] = Matrix::identity(1);
  return spec;
}

std::vector<int> as_ints(const RolloutPattern &p) {
  return {p.bits().begin(), p.bits().end()};
}

} // namespace

TEST(Window, IdentityPropagation) {
  auto net = make_network({{"I", "A"}});
  auto spec = identity_spec(net);
  spec.dims = {{"I", 3}, {"A", 3}};
  spec.edge_params[{"I", "A"}] = Matrix::identity(3);
  std::vector<NodeValues> in{{{"I", {1.0, -2.0, 0.5}}}, {{"I", {0, 0, 0}}}};
  auto t = execute_window(net, streaming_pattern(net), 1, spec, in);
  EXPECT_EQ(t.at(1, net.node_index("A")), (std::vector<double>{1.0, -2.0, 0.5}));
}

TEST(Window, ZeroStaysZero) {
  std::mt19937_64 rng(5);
  for (auto act : {Activation::Identity, Activation::Relu, Activation::Tanh}) {
    for (const auto &net : corpus::random_networks(30)) {
      auto spec = random_numeric_spec(net, 3, act, rng());
      spec.node_bias.clear();
      auto in = constant_inputs(net, spec, 4, 0.0);
      auto t = execute_window(net, streaming_pattern(net), 3, spec, in);
      for (const auto &frame : t.frame_states)
        for (const auto &x : frame)
          for (double xi : x)
            EXPECT_EQ(xi, 0.0);
    }
  }
}

TEST(Window, MatchesRecursiveOracle) {
  std::mt19937_64 rng(2024);
  std::size_t instances = 0;
  const Activation acts[] = {Activation::Identity, Activation::Relu, Activation::Tanh};
  for (const auto &net : corpus::random_networks(130, 6, 555)) {
    auto patterns = enumerate_valid_patterns(net);
    for (int rep = 0; rep < 4; ++rep) {
      const auto &p = patterns[rng() % patterns.size()];
      std::size_t w = 1 + rng() % 3;
      auto spec = random_numeric_spec(net, 4, acts[rng() % 3], rng());
      auto in = random_inputs(net, spec, w + 1, rng);
      auto trace = execute_window(net, p, w, spec, in);
      std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> memo;
      for (std::size_t i = 0; i <= w; ++i)
        for (NodeIndex v = 0; v < net.node_count(); ++v) {
          auto expect = oracle::evaluate(net, as_ints(p), spec, in, i, v, memo);
          const auto &got = trace.at(i, v);
          ASSERT_EQ(got.size(), expect.size());
          for (std::size_t k = 0; k < got.size(); ++k)
            ASSERT_NEAR(got[k], expect[k], 1e-9);
        }
      ++instances;
    }
  }
  EXPECT_GE(instances, 500u);
}

TEST(Window, UpdateOrderFollowsTableau) {
  auto net = skip_recurrent_network();
  auto p = most_sequential_patterns(net).front();
  auto spec = random_numeric_spec(net, 2, Activation::Tanh, 1);
  std::mt19937_64 rng(1);
  auto trace = execute_window(net, p, 2, spec, random_inputs(net, spec, 3, rng));
  auto w = RolloutWindow::build(net, p, 2);
  auto t = tableau_by_paths(w);
  std::size_t last = 0;
  for (const auto &[step, wn] : trace.update_order) {
    EXPECT_EQ(step, t.at(wn.frame, wn.node));
    EXPECT_GE(step, last);
    last = step;
  }
  EXPECT_EQ(trace.update_order.size(), 6u);
}

TEST(Window, TieOrderBitIdentical) {
  std::mt19937_64 rng(8);
  for (const auto &net : corpus::random_networks(60, 6)) {
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto spec = random_numeric_spec(net, 3, Activation::Tanh, rng());
      auto in = random_inputs(net, spec, 3, rng);
      auto base = execute_window(net, p, 2, spec, in);
      for (std::uint64_t s : {1u, 2u, 3u}) {
        auto shuffled = execute_window(net, p, 2, spec, in, nullptr, s);
        EXPECT_EQ(shuffled.frame_states, base.frame_states);
      }
    }
  }
}

TEST(Window, Linearity) {
  std::mt19937_64 rng(9);
  for (const auto &net : corpus::random_networks(80, 6)) {
    auto spec = random_numeric_spec(net, 3, Activation::Identity, rng());
    spec.node_bias.clear();
    auto in = random_inputs(net, spec, 4, rng);
    auto doubled = in;
    for (auto &f : doubled)
      for (auto &[name, x] : f)
        for (auto &xi : x)
          xi *= 2;
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto a = execute_window(net, p, 3, spec, in);
      auto b = execute_window(net, p, 3, spec, doubled);
      for (std::size_t i = 0; i < a.frame_states.size(); ++i)
        for (std::size_t v = 0; v < a.frame_states[i].size(); ++v)
          for (std::size_t k = 0; k < a.frame_states[i][v].size(); ++k)
            EXPECT_EQ(b.frame_states[i][v][k], 2 * a.frame_states[i][v][k]);
    }
  }
}

TEST(Window, Errors) {
  auto net = ff_network();
  auto spec = identity_spec(net);
  auto in = constant_inputs(net, spec, 2, 1.0);
  auto bad = spec;
  bad.edge_params[{"H1", "H2"}] = Matrix{2, 1, {1.0, 1.0}};
  auto expect_kind = [](auto &&f, ErrorKind kind) {
    try {
      f();
      ADD_FAILURE() << "no error";
    } catch (const Error &e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  };
  auto s = streaming_pattern(net);
  expect_kind([&] { execute_window(net, s, 1, bad, in); }, ErrorKind::ShapeMismatch);
  bad = spec;
  bad.edge_params.erase({"H2", "O"});
  expect_kind([&] { execute_window(net, s, 1, bad, in); }, ErrorKind::ShapeMismatch);
  bad = spec;
  bad.node_bias["I"] = {1.0};
  expect_kind([&] { execute_window(net, s, 1, bad, in); }, ErrorKind::ShapeMismatch);
  bad = spec;
  bad.node_bias["O"] = {1.0, 2.0};
  expect_kind([&] { execute_window(net, s, 1, bad, in); }, ErrorKind::ShapeMismatch);
  expect_kind([&] { execute_window(net, s, 2, spec, in); }, ErrorKind::MissingInput);
  std::vector<NodeValues> wrong{{{"I", {1.0, 2.0}}}, {{"I", {1.0}}}};
  expect_kind([&] { execute_window(net, s, 1, spec, wrong); }, ErrorKind::ShapeMismatch);
  std::vector<NodeValues> missing{{}, {}};
  expect_kind([&] { execute_window(net, s, 1, spec, missing); }, ErrorKind::MissingInput);
  auto rec = make_network({{"I", "A"}, {"A", "A"}});
  auto zero = RolloutPattern::from_assignment(rec, {{"I->A", 1}, {"A->A", 0}});
  expect_kind([&] { execute_window(rec, zero, 1, identity_spec(rec), in); },
              ErrorKind::InvalidPattern);
}

TEST(Stream, Accumulates) {
  auto net = make_network({{"I", "A"}, {"A", "A"}});
  auto spec = identity_spec(net);
  auto out = execute_stream(net, streaming_pattern(net), spec, constant_inputs(net, spec, 12, 1.0),
                            10, {"A"});
  ASSERT_EQ(out.size(), 10u);
  for (const auto &o : out) {
    EXPECT_EQ(o.step, o.frame);
    EXPECT_EQ(o.values.at("A")[0], static_cast<double>(o.step));
  }
}

TEST(Stream, ZeroSteps) {
  auto net = ff_network();
  auto spec = identity_spec(net);
  EXPECT_TRUE(execute_stream(net, streaming_pattern(net), spec, {}, 0, {"O"}).empty());
}

TEST(Stream, NotEnoughInputs) {
  auto net = ff_network();
  auto spec = identity_spec(net);
  EXPECT_THROW(execute_stream(net, streaming_pattern(net), spec,
                              constant_inputs(net, spec, 3, 1.0), 10, {"O"}),
               Error);
}

TEST(Stream, PipelineFillsToSequentialValue) {
  std::mt19937_64 rng(31);
  for (std::size_t depth = 1; depth <= 5; ++depth) {
    auto net = chain_network(depth);
    auto out_name = "A" + std::to_string(depth);
    auto spec = random_numeric_spec(net, 3, Activation::Tanh, rng());
    auto in = constant_inputs(net, spec, 3 * depth + 4, 0.7);
    auto seq = most_sequential_patterns(net).front();
    auto seq_out = execute_stream(net, seq, spec, in, depth, {out_name});
    ASSERT_EQ(seq_out.size(), 1u);
    EXPECT_EQ(seq_out[0].step, depth);
    auto str_out = execute_stream(net, streaming_pattern(net), spec, in, 3 * depth, {out_name});
    for (const auto &o : str_out) {
      if (o.step < depth)
        continue;
      const auto &a = o.values.at(out_name);
      const auto &b = seq_out[0].values.at(out_name);
      for (std::size_t k = 0; k < a.size(); ++k)
        EXPECT_NEAR(a[k], b[k], 1e-6) << depth << " step " << o.step;
    }
  }
}

// Carrying frame 1 over into the next size-1 window reproduces the size-h
// window exactly, for every pattern.
TEST(Stream, MatchesLargeWindow) {
  std::mt19937_64 rng(12);
  for (const auto &net : corpus::random_networks(60, 5, 77)) {
    auto outputs = default_outputs(net);
    if (outputs.empty())
      continue;
    for (const auto &p : enumerate_valid_patterns(net)) {
      auto spec = random_numeric_spec(net, 2, Activation::Tanh, rng());
      const std::size_t h = 4;
      auto in = random_inputs(net, spec, h + 1, rng);
      auto trace = execute_window(net, p, h, spec, in);
      auto stream = execute_stream(net, p, spec, in, h * inference_factor(net, p), outputs);
      ASSERT_EQ(stream.size(), h);
      for (const auto &o : stream)
        for (const auto &[name, x] : o.values)
          EXPECT_EQ(x, trace.at(o.frame, net.node_index(name)));
    }
  }
}

TEST(Compare, FeedForwardEquivalent) {
  auto net = ff_network();
  auto spec = random_numeric_spec(net, 3, Activation::Tanh, 3);
  auto r = compare_rollout_functions(net, streaming_pattern(net),
                                     most_sequential_patterns(net).front(), spec, 4, 1e-6, 1,
                                     {"O"});
  EXPECT_TRUE(r.steady_state_equivalent);
  EXPECT_LT(r.best_deviation, 1e-6);
}

TEST(Compare, SkipDistinct) {
  auto net = skip_network();
  auto spec = random_numeric_spec(net, 3, Activation::Tanh, 3);
  auto r = compare_rollout_functions(net, streaming_pattern(net),
                                     most_sequential_patterns(net).front(), spec, 4, 1e-6, 1,
                                     {"O"});
  EXPECT_FALSE(r.steady_state_equivalent);
}

TEST(Compare, SamePatternZero) {
  auto net = skip_recurrent_network();
  auto spec = random_numeric_spec(net, 3, Activation::Relu, 3);
  auto s = streaming_pattern(net);
  auto r = compare_rollout_functions(net, s, s, spec, 3, 1e-9, 5, {"O"});
  EXPECT_TRUE(r.steady_state_equivalent);
  EXPECT_EQ(r.best_offset, 0);
  EXPECT_EQ(r.best_deviation, 0.0);
}

TEST(SpecIo, RoundTrip) {
  for (const auto &net : corpus::random_networks(20)) {
    auto spec = random_numeric_spec(net, 3, Activation::Relu, 4);
    auto text = numeric_spec_to_json(spec).dump();
    auto back = parse_numeric_spec(text);
    EXPECT_EQ(numeric_spec_to_json(back).dump(), text);
    EXPECT_EQ(back.activation, spec.activation);
  }
  EXPECT_THROW(parse_numeric_spec(R"({"dims": {"I": 1}, "edges": {"I->A": [[1], [1, 2]]}})"),
               ParseError);
  EXPECT_THROW(parse_numeric_spec(R"({"activation": "gelu", "dims": {}, "edges": {}})"),
               ParseError);
}

TEST(SpecIo, Inputs) {
  auto in = parse_inputs(R"([{"I": [1, 2]}, {"I": [3, 4]}])");
  ASSERT_EQ(in.size(), 2u);
  EXPECT_EQ(in[1].at("I"), (std::vector<double>{3, 4}));
  EXPECT_EQ(parse_inputs(R"({"format_version": 1, "frames": [{"I": [1]}]})").size(), 1u);
  EXPECT_THROW(parse_inputs(R"([{"I": "x"}])"), ParseError);
}
