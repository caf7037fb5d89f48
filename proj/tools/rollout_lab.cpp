// rollout-lab: command-line front end for rollout analysis.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "rollout_lab/rollout_lab.hpp"

namespace rl = rollout_lab;

namespace {

struct Options {
  std::string net_path;
  std::string pattern_arg = "streaming";
  std::size_t window = 1;
  std::string format;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string out_path;
  std::vector<std::string> outputs;
  std::optional<std::size_t> horizon;
  std::string costs_path;
  std::optional<std::size_t> parallel_limit;
  std::size_t cycle_cap = 100'000;
  unsigned max_free_edges = 24;
  // exec
  std::string spec_path;
  std::string inputs_path;
  std::optional<std::size_t> steps;
  std::string compare_with;
  std::size_t trials = 5;
  double tolerance = 1e-6;
  std::size_t max_dim = 3;
  std::string activation = "tanh";
  bool window_mode = false;
  std::size_t samples = 4096;
};

rl::Limits limits_of(const Options &o) {
  rl::Limits l;
  l.cycle_cap = o.cycle_cap;
  l.max_free_edges = o.max_free_edges;
  l.force = o.force;
  if (const char *env = std::getenv("ROLLOUT_LAB_THREADS")) {
    try {
      long n = std::stol(env);
      l.threads = n > 0 ? static_cast<unsigned>(n) : 1u;
    } catch (const std::exception &) {
      throw rl::Error(rl::ErrorKind::ParseError,
                      "ROLLOUT_LAB_THREADS must be a positive integer");
    }
  }
  return l;
}

rl::Network load_network(const Options &o) {
  auto desc = rl::parse_network(rl::read_file(o.net_path));
  auto report = rl::validate_network(desc);
  if (!report.valid())
    throw rl::Error(rl::ErrorKind::InvalidNetwork, rl::describe(report));
  return rl::Network::create(desc);
}

rl::RolloutPattern resolve_pattern(const rl::Network &net, const std::string &arg,
                                   const rl::Limits &limits) {
  if (arg == "streaming")
    return rl::streaming_pattern(net);
  if (arg == "sequential")
    return rl::most_sequential_patterns(net, limits).front();
  return rl::parse_pattern_json(net, rl::read_file(arg));
}

std::set<rl::NodeId> outputs_of(const Options &o, const rl::Network &net) {
  if (o.outputs.empty())
    return rl::default_outputs(net);
  return {o.outputs.begin(), o.outputs.end()};
}

std::uint64_t require_seed(const Options &o, const char *what) {
  if (!o.seed)
    throw rl::Error(rl::ErrorKind::ParseError, std::string(what) + " requires --seed");
  return *o.seed;
}

std::string dump(const rl::Json &j) { return j.dump(2) + "\n"; }

void check_format(const std::string &fmt, std::initializer_list<const char *> allowed) {
  for (const char *a : allowed)
    if (fmt == a)
      return;
  throw rl::Error(rl::ErrorKind::ParseError, "unsupported --format '" + fmt + "'");
}

// Each command returns its primary output and the exit status.
struct Result {
  std::string text;
  int status = 0;
};

Result cmd_validate(const Options &o) {
  check_format(o.format, {"json", "text"});
  auto desc = rl::parse_network(rl::read_file(o.net_path));
  auto report = rl::validate_network(desc);
  Result r;
  r.status = report.valid() ? 0 : 1;
  if (o.format == "text")
    r.text = report.valid() ? "valid\n" : rl::describe(report) + "\n";
  else
    r.text = dump(rl::validation_to_json(report));
  if (!report.valid())
    std::cerr << "InvalidNetwork: " << rl::describe(report) << "\n";
  return r;
}

Result cmd_analyze(const Options &o) {
  check_format(o.format, {"json", "dot", "text"});
  auto net = load_network(o);
  if (o.format == "dot")
    return {rl::network_to_dot(net)};
  auto limits = limits_of(o);
  auto analysis = rl::classify_edges(net, limits);
  rl::Lemma1Bounds bounds;
  try {
    bounds = rl::lemma1_bounds(net, true, limits);
  } catch (const rl::Error &err) {
    if (err.kind() != rl::ErrorKind::EnumerationCapExceeded)
      throw;
    std::cerr << "note: exact count skipped: " << err.what() << "\n";
    bounds = rl::lemma1_bounds(net, false, limits);
  }
  auto outputs = outputs_of(o, net);
  // a network whose every node feeds another has no sinks to default to
  std::optional<rl::PathExtremes> extremes;
  if (!outputs.empty())
    extremes = rl::io_path_extremes(net, outputs);
  auto stream = rl::streaming_pattern(net);

  if (o.format == "text") {
    std::ostringstream os;
    os << "nodes " << net.node_count() << ", edges " << net.edge_count() << "\n";
    os << "recurrent edges " << analysis.recurrent_edges.size() << ", forward edges "
       << analysis.forward_edges.size() << ", minimal cycles "
       << analysis.minimal_cycles.size() << "\n";
    os << "bounds " << bounds.lower << " <= n <= " << bounds.upper;
    if (bounds.exact_count)
      os << ", exact " << *bounds.exact_count;
    os << "\n";
    if (extremes)
      os << "input-output path lengths " << extremes->shortest << ".." << extremes->longest
         << "\n";
    else
      os << "no output nodes\n";
    return {os.str()};
  }
  rl::Json j;
  j["format_version"] = rl::kFormatVersion;
  j["network"] = rl::network_to_json(net);
  j["network"].erase("format_version");
  rl::Json inputs = rl::Json::array();
  for (auto v : net.inputs())
    inputs.push_back(net.name(v));
  j["inputs"] = std::move(inputs);
  j["outputs"] = outputs;
  j["cycles"] = rl::cycle_analysis_to_json(net, analysis);
  j["bounds"] = rl::lemma1_to_json(bounds);
  if (extremes)
    j["io_path_extremes"] = {{"shortest", extremes->shortest}, {"longest", extremes->longest}};
  else
    j["io_path_extremes"] = nullptr;
  j["streaming_inference_factor"] = rl::inference_factor(net, stream);
  return {dump(j)};
}

Result cmd_enumerate(const Options &o) {
  check_format(o.format, {"json", "text"});
  auto net = load_network(o);
  auto patterns = rl::enumerate_valid_patterns(net, limits_of(o));
  if (o.format == "text") {
    std::ostringstream os;
    for (std::size_t e = 0; e < net.edge_count(); ++e)
      os << (e ? " " : "") << net.edge_label(e);
    os << "\n";
    for (const auto &p : patterns) {
      for (std::size_t e = 0; e < p.size(); ++e)
        os << (e ? " " : "") << p[e];
      os << "\n";
    }
    os << patterns.size() << " valid patterns\n";
    return {os.str()};
  }
  rl::Json list = rl::Json::array();
  for (const auto &p : patterns) {
    auto pj = rl::pattern_to_json(net, p);
    list.push_back(pj["edges"]);
  }
  rl::Json j;
  j["format_version"] = rl::kFormatVersion;
  j["count"] = patterns.size();
  j["patterns"] = std::move(list);
  return {dump(j)};
}

Result cmd_tableau(const Options &o) {
  check_format(o.format, {"json", "dot", "text"});
  auto net = load_network(o);
  auto pattern = resolve_pattern(net, o.pattern_arg, limits_of(o));
  auto window = rl::RolloutWindow::build(net, pattern, o.window);
  if (!window.pattern_valid()) {
    if (o.format == "dot") {
      std::cerr << "InvalidPattern: rollout window contains a cycle\n";
      return {rl::window_to_dot(window), 1};
    }
    window.require_valid();
  }
  auto tableau = rl::tableau_by_paths(window);
  if (o.format == "dot")
    return {rl::window_to_dot(window, &tableau)};
  if (o.format == "text") {
    std::ostringstream os;
    for (rl::NodeIndex v = 0; v < net.node_count(); ++v) {
      os << net.name(v);
      for (std::size_t i = 0; i <= o.window; ++i)
        os << " " << tableau.at(i, v);
      os << "\n";
    }
    return {os.str()};
  }
  auto j = rl::tableau_to_json(window, tableau);
  j["inference_factor"] = rl::inference_factor(net, pattern);
  return {dump(j)};
}

Result cmd_theorem1(const Options &o) {
  check_format(o.format, {"json", "text"});
  auto net = load_network(o);
  rl::Theorem1Options opts;
  opts.limits = limits_of(o);
  opts.sample_seed = o.seed;
  opts.samples = o.samples;
  auto pattern = resolve_pattern(net, o.pattern_arg, opts.limits);
  auto report = rl::theorem1_check(net, pattern, o.window, opts);
  if (o.format == "text") {
    std::ostringstream os;
    os << std::boolalpha << "a " << report.a_equally_parallel << "\nb " << report.b_factor_one
       << "\nc " << report.c_frame_i_at_step_i << "\nd " << report.d_pointwise_minimal << " ("
       << rl::minimality_mode_name(report.d_mode) << ")\nconsistent " << report.consistent
       << "\n";
    return {os.str()};
  }
  return {dump(rl::theorem1_to_json(report))};
}

Result cmd_schedule(const Options &o) {
  check_format(o.format, {"json", "text"});
  auto net = load_network(o);
  auto pattern = resolve_pattern(net, o.pattern_arg, limits_of(o));
  auto window = rl::RolloutWindow::build(net, pattern, o.window);
  auto costs = o.costs_path.empty() ? rl::CostModel::unit()
                                    : rl::parse_costs(rl::read_file(o.costs_path));
  auto report = rl::weighted_makespan(window, costs, o.parallel_limit);
  auto profile = rl::parallelism_profile(window);
  if (o.format == "text") {
    std::ostringstream os;
    os << "total_time " << report.total_time << "\n";
    os << "critical_path";
    for (auto v : report.critical_path)
      os << " " << window.label(v);
    os << "\n";
    for (std::size_t k = 0; k < profile.per_step.size(); ++k)
      os << "step " << k + 1 << ": " << profile.per_step[k].size() << " nodes\n";
    return {os.str()};
  }
  rl::Json j;
  j["format_version"] = rl::kFormatVersion;
  j["window_size"] = o.window;
  j["makespan"] = rl::makespan_to_json(window, report);
  j["profile"] = rl::profile_to_json(window, profile);
  return {dump(j)};
}

Result cmd_respond(const Options &o) {
  check_format(o.format, {"json", "text"});
  auto net = load_network(o);
  auto pattern = resolve_pattern(net, o.pattern_arg, limits_of(o));
  auto outputs = outputs_of(o, net);
  std::size_t horizon = o.horizon.value_or(
      2 * rl::inference_factor(net, pattern) + 2 * net.node_count());
  auto profile = rl::response_profile(net, pattern, outputs, horizon);
  if (o.format == "text") {
    std::ostringstream os;
    os << "first_response_step ";
    if (profile.first_response_step)
      os << *profile.first_response_step;
    else
      os << "none";
    os << "\nsampling_period " << profile.sampling_period << "\n";
    return {os.str()};
  }
  return {dump(rl::response_to_json(profile))};
}

Result cmd_exec(const Options &o) {
  check_format(o.format, {"json"});
  auto net = load_network(o);
  auto limits = limits_of(o);
  auto pattern = resolve_pattern(net, o.pattern_arg, limits);
  auto outputs = outputs_of(o, net);
  rl::NumericSpec spec;
  if (!o.spec_path.empty())
    spec = rl::parse_numeric_spec(rl::read_file(o.spec_path));
  else
    spec = rl::random_numeric_spec(net, o.max_dim, rl::parse_activation(o.activation),
                                   require_seed(o, "a random numeric spec"));

  if (!o.compare_with.empty()) {
    auto other = resolve_pattern(net, o.compare_with, limits);
    auto report = rl::compare_rollout_functions(net, pattern, other, spec, o.trials,
                                                o.tolerance,
                                                require_seed(o, "comparison"), outputs);
    return {dump(rl::comparison_to_json(report))};
  }
  if (o.inputs_path.empty())
    throw rl::Error(rl::ErrorKind::MissingInput, "exec needs --inputs");
  auto inputs = rl::parse_inputs(rl::read_file(o.inputs_path));
  if (o.window_mode) {
    auto trace = rl::execute_window(net, pattern, o.window, spec, inputs);
    auto window = rl::RolloutWindow::build(net, pattern, o.window);
    return {dump(rl::window_trace_to_json(window, trace))};
  }
  std::size_t steps =
      o.steps.value_or(inputs.empty() ? 0 : (inputs.size() - 1) *
                                                rl::inference_factor(net, pattern));
  return {dump(rl::stream_to_json(rl::execute_stream(net, pattern, spec, inputs, steps,
                                                     outputs)))};
}

Result cmd_dsr_sweep(const Options &o) {
  check_format(o.format, {"json", "csv", "text"});
  auto rows = rl::dsr_sweep();
  if (o.format == "json")
    return {dump(rl::dsr_sweep_to_json(rows))};
  if (o.format == "csv")
    return {rl::dsr_sweep_to_csv(rows)};
  std::ostringstream os;
  for (const auto &r : rows)
    os << "DSR" << r.k << ": paths " << r.shortest_path << ".." << r.longest_path
       << ", first response streaming " << r.streaming_first << ", sequential "
       << r.sequential_first << ", difference " << r.difference << "\n";
  return {os.str()};
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Rollout pattern analysis for networks with skip and recurrent edges"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App *sub, bool net, bool pattern, bool window,
                        const std::string &default_format) {
    if (net)
      sub->add_option("--net", o.net_path, "Network file (line format or JSON)")
          ->required()
          ->check(CLI::ExistingFile);
    if (pattern)
      sub->add_option("--pattern", o.pattern_arg,
                      "Pattern JSON file, or 'streaming' / 'sequential'")
          ->capture_default_str();
    if (window)
      sub->add_option("--window", o.window, "Window size W >= 1")->capture_default_str();
    sub->add_option("--format", o.format,
                    "Output format: json, dot, csv or text (default " + default_format + ")");
    sub->add_option("--out", o.out_path, "Write output to this file instead of stdout");
    sub->add_flag("--force", o.force, "Ignore enumeration caps");
    sub->add_option("--cycle-cap", o.cycle_cap, "Maximum number of minimal cycles")
        ->capture_default_str();
    sub->add_option("--max-free-edges", o.max_free_edges,
                    "Maximum number of free edges for pattern enumeration")
        ->capture_default_str();
  };

  std::map<CLI::App *, Result (*)(const Options &)> handlers;

  auto *validate = app.add_subcommand("validate", "Check a network against the model rules");
  add_common(validate, true, false, false, "json");
  handlers[validate] = cmd_validate;

  auto *analyze = app.add_subcommand("analyze", "Edge classes, cycles and pattern bounds");
  add_common(analyze, true, false, false, "json");
  analyze->add_option("--outputs", o.outputs, "Output node names");
  handlers[analyze] = cmd_analyze;

  auto *enumerate = app.add_subcommand("enumerate", "List every valid rollout pattern");
  add_common(enumerate, true, false, false, "json");
  handlers[enumerate] = cmd_enumerate;

  auto *tableau = app.add_subcommand("tableau", "Inference tableau of a rollout window");
  add_common(tableau, true, true, true, "json");
  handlers[tableau] = cmd_tableau;

  auto *theorem1 =
      app.add_subcommand("theorem1", "Check the four streaming characterizations");
  add_common(theorem1, true, true, true, "json");
  theorem1->add_option("--seed", o.seed, "Sample patterns with this seed if enumeration is capped");
  theorem1->add_option("--samples", o.samples, "Number of sampled patterns")
      ->capture_default_str();
  handlers[theorem1] = cmd_theorem1;

  auto *schedule = app.add_subcommand("schedule", "Makespan and parallelism profile");
  add_common(schedule, true, true, true, "json");
  schedule->add_option("--costs", o.costs_path, "Node cost JSON (default unit costs)")
      ->check(CLI::ExistingFile);
  schedule->add_option("--parallel-limit", o.parallel_limit,
                       "Number of workers (greedy list scheduling)");
  handlers[schedule] = cmd_schedule;

  auto *respond = app.add_subcommand("respond", "Response timing under carry-over inference");
  add_common(respond, true, true, false, "json");
  respond->add_option("--outputs", o.outputs, "Output node names");
  respond->add_option("--horizon", o.horizon, "Number of update steps to simulate");
  handlers[respond] = cmd_respond;

  auto *exec = app.add_subcommand("exec", "Numeric execution of windows and streams");
  add_common(exec, true, true, true, "json");
  exec->add_option("--spec", o.spec_path, "Numeric spec JSON")->check(CLI::ExistingFile);
  exec->add_option("--inputs", o.inputs_path, "Input sequence JSON")
      ->check(CLI::ExistingFile);
  exec->add_option("--steps", o.steps, "Number of update steps to stream");
  exec->add_option("--outputs", o.outputs, "Output node names");
  exec->add_flag("--single-window", o.window_mode,
                 "Execute one window of size --window instead of a stream");
  exec->add_option("--compare-with", o.compare_with,
                   "Second pattern to compare against (file or keyword)");
  exec->add_option("--trials", o.trials, "Comparison trials")->capture_default_str();
  exec->add_option("--tolerance", o.tolerance, "Comparison tolerance")->capture_default_str();
  exec->add_option("--seed", o.seed, "Seed for random specs and comparison inputs");
  exec->add_option("--max-dim", o.max_dim, "Largest node dimension of a random spec")
      ->capture_default_str();
  exec->add_option("--activation", o.activation, "identity, relu or tanh (random spec)")
      ->capture_default_str();
  handlers[exec] = cmd_exec;

  auto *sweep = app.add_subcommand("dsr-sweep", "First-response sweep over DSR0..DSR6");
  add_common(sweep, false, false, false, "csv");
  handlers[sweep] = cmd_dsr_sweep;

  // Subcommand defaults differ; reset after parsing based on the chosen one.
  std::map<CLI::App *, std::string> default_format{
      {validate, "json"}, {analyze, "json"}, {enumerate, "json"},
      {tableau, "json"},  {theorem1, "json"}, {schedule, "json"},
      {respond, "json"},  {exec, "json"},    {sweep, "csv"}};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App *chosen = app.get_subcommands().front();
  if (o.format.empty())
    o.format = default_format[chosen];

  try {
    Result r = handlers.at(chosen)(o);
    if (o.out_path.empty())
      std::cout << r.text;
    else
      rl::write_file(o.out_path, r.text);
    return r.status;
  } catch (const rl::ParseError &e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const rl::Error &e) {
    std::cerr << e.what() << "\n";
    return rl::is_input_error(e.kind()) ? 2 : 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
