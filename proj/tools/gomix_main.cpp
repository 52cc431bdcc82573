// Command-line front end: run optimizations, generate benchmark instances,
// inspect the parallel grouping of a linkage model, and query the exhaustive
// oracle. Exit codes: 0 success, 2 bad input, 3 requested target not reached.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "gomix/gomix.hpp"

namespace {

constexpr int exit_bad_input = 2;
constexpr int exit_target_unreached = 3;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string genotype_string(const gomix::Genotype& g) {
  std::string s;
  s.reserve(g.size());
  for (const gomix::Allele a : g) s.push_back(static_cast<char>('0' + a));
  return s;
}

gomix::WeightSpec parse_weights(const std::string& spec) {
  if (spec == "unit") return {};
  if (spec.rfind("uniform:", 0) == 0) {
    const std::string rest = spec.substr(8);
    const std::size_t colon = rest.find(':');
    if (colon != std::string::npos) {
      try {
        gomix::WeightSpec w;
        w.kind = gomix::WeightSpec::Kind::uniform_int;
        w.lo = std::stoll(rest.substr(0, colon));
        w.hi = std::stoll(rest.substr(colon + 1));
        if (w.lo <= w.hi) return w;
      } catch (const std::exception&) {
      }
    }
  }
  throw std::invalid_argument("weights: expected unit or uniform:LO:HI, got '" +
                              spec + "'");
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& spec) {
  const std::size_t x = spec.find('x');
  if (x != std::string::npos) {
    try {
      const std::size_t w = std::stoull(spec.substr(0, x));
      const std::size_t h = std::stoull(spec.substr(x + 1));
      return {w, h};
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("torus: expected WIDTHxHEIGHT, got '" + spec + "'");
}

// One instance per invocation, from a file or a seeded generator.
struct InstanceOpts {
  std::string path;
  std::size_t complete = 0;
  std::string torus;
  std::string weights = "unit";

  CLI::Option* o_path = nullptr;
  CLI::Option* o_complete = nullptr;
  CLI::Option* o_torus = nullptr;
  CLI::Option* o_weights = nullptr;

  void attach(CLI::App& cmd, bool with_file) {
    if (with_file)
      o_path = cmd.add_option("--instance", path, "edge-list instance file");
    o_complete =
        cmd.add_option("--complete", complete, "complete graph on N vertices");
    o_torus = cmd.add_option("--torus", torus, "WxH torus grid");
    o_weights = cmd.add_option("--weights", weights,
                               "edge weights: unit or uniform:LO:HI")
                    ->capture_default_str();
  }

  gomix::MaxCutInstance resolve(std::uint64_t seed) const {
    const int sources =
        (!path.empty()) + (complete != 0) + (!torus.empty());
    if (sources != 1)
      throw std::invalid_argument(
          "exactly one of --instance, --complete, --torus is required");
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in)
        throw std::invalid_argument("cannot open instance '" + path + "'");
      try {
        return gomix::load_edge_list(in);
      } catch (const gomix::ParseError& e) {
        throw std::invalid_argument(path + ": " + e.what());
      }
    }
    const gomix::WeightSpec w = parse_weights(weights);
    if (complete != 0) return gomix::generate_complete(complete, w, seed);
    const auto [width, height] = parse_dims(torus);
    return gomix::generate_torus(width, height, w, seed);
  }
};

struct ModelSpec {
  gomix::ModelConfig config;
  std::string fos_path;  // non-empty: sets supplied as a file
};

ModelSpec parse_model(const std::string& spec, bool allow_fos_file) {
  ModelSpec m;
  if (spec == "learned-lt") {
    m.config.kind = gomix::LinkageKind::learned_lt;
    return m;
  }
  m.config.kind = gomix::LinkageKind::fixed_tree;
  if (spec == "flt") return m;
  if (spec == "univariate") {
    m.config.bound = 1;
    return m;
  }
  if (spec.rfind("bflt:", 0) == 0) {
    try {
      const std::size_t bound = std::stoull(spec.substr(5));
      if (bound > 0) {
        m.config.bound = bound;
        return m;
      }
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("model: bflt needs a positive bound");
  }
  if (allow_fos_file && spec.rfind("fos:", 0) == 0) {
    m.fos_path = spec.substr(4);
    if (!m.fos_path.empty()) return m;
  }
  throw std::invalid_argument(
      "model: expected learned-lt, flt, bflt:BOUND, univariate" +
      std::string(allow_fos_file ? ", or fos:PATH" : "") + "; got '" + spec +
      "'");
}

struct RunOpts {
  InstanceOpts instance;
  std::string engine = "serial";
  std::string model = "flt";
  std::string trace;
  std::string config_path;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t population = 0;  // non-zero: single population of this size
  std::size_t ims_base = 16;
  std::size_t ims_c = 4;
  std::size_t ims_max = 0;
  std::optional<double> max_evaluations;
  std::optional<double> max_seconds;
  std::optional<double> target_fitness;
  std::optional<double> stop_on_optimum;
  std::optional<long> max_generations;

  CLI::Option *o_engine, *o_model, *o_trace, *o_seed, *o_workers, *o_population,
      *o_base, *o_c, *o_max, *o_evals, *o_secs, *o_target, *o_optimum, *o_gens;
};

void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw std::invalid_argument("config: unknown key '" + where + item.key() +
                                  "'");
}

// Flags beat the config file, the config file beats defaults.
void apply_config(RunOpts& o) {
  std::ifstream in(o.config_path);
  if (!in)
    throw std::invalid_argument("config: cannot open '" + o.config_path + "'");
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + std::string(e.what()));
  }
  require_keys(cfg,
               {"seed", "engine", "model", "workers", "population", "instance",
                "complete", "torus", "weights", "trace", "ims", "termination"},
               "");

  auto take = [&](const CLI::Option* opt, const char* key, auto& target) {
    if (opt->count() == 0 && cfg.contains(key))
      cfg.at(key).get_to(target);
  };
  take(o.o_seed, "seed", o.seed);
  take(o.o_engine, "engine", o.engine);
  take(o.o_model, "model", o.model);
  take(o.o_workers, "workers", o.workers);
  take(o.o_population, "population", o.population);
  take(o.instance.o_path, "instance", o.instance.path);
  take(o.instance.o_complete, "complete", o.instance.complete);
  take(o.instance.o_torus, "torus", o.instance.torus);
  take(o.instance.o_weights, "weights", o.instance.weights);
  take(o.o_trace, "trace", o.trace);

  if (cfg.contains("ims")) {
    const nlohmann::json& ims = cfg.at("ims");
    require_keys(ims, {"n_base", "c", "max_populations"}, "ims.");
    if (o.o_base->count() == 0 && ims.contains("n_base"))
      ims.at("n_base").get_to(o.ims_base);
    if (o.o_c->count() == 0 && ims.contains("c")) ims.at("c").get_to(o.ims_c);
    if (o.o_max->count() == 0 && ims.contains("max_populations"))
      ims.at("max_populations").get_to(o.ims_max);
  }
  if (cfg.contains("termination")) {
    const nlohmann::json& term = cfg.at("termination");
    require_keys(term,
                 {"max_evaluations", "max_seconds", "target_fitness",
                  "stop_on_optimum", "max_generations"},
                 "termination.");
    auto take_opt = [&](const CLI::Option* opt, const char* key, auto& target) {
      if (opt->count() == 0 && term.contains(key))
        target = term.at(key).get<typename std::decay_t<decltype(target)>::value_type>();
    };
    take_opt(o.o_evals, "max_evaluations", o.max_evaluations);
    take_opt(o.o_secs, "max_seconds", o.max_seconds);
    take_opt(o.o_target, "target_fitness", o.target_fitness);
    take_opt(o.o_optimum, "stop_on_optimum", o.stop_on_optimum);
    take_opt(o.o_gens, "max_generations", o.max_generations);
  }
}

int cmd_run(RunOpts& o) {
  if (!o.config_path.empty()) apply_config(o);
  if (o.target_fitness && o.stop_on_optimum)
    throw std::invalid_argument(
        "choose one of --target-fitness and --stop-on-optimum");
  if (o.workers == 0) throw std::invalid_argument("workers must be >= 1");

  const gomix::MaxCutInstance inst = o.instance.resolve(o.seed);
  const gomix::GrayBoxProblem problem = gomix::as_graybox(inst);

  const ModelSpec model = parse_model(o.model, false);
  gomix::RunSpec spec;
  spec.engine.model = model.config;
  // Fixed trees are learned from the instance, with edge weights as the
  // similarity between endpoints.
  if (spec.engine.model.kind == gomix::LinkageKind::fixed_tree)
    spec.engine.model.similarity = gomix::weight_similarity(inst);
  spec.engine.seed = o.seed;
  spec.engine.workers = o.workers;
  if (o.population != 0) {
    spec.use_ims = false;
    spec.engine.population_size = o.population;
  } else {
    spec.ims.base_population = o.ims_base;
    spec.ims.subgenerations = o.ims_c;
    spec.ims.max_populations = o.ims_max;
  }
  spec.termination.max_evaluations = o.max_evaluations;
  spec.termination.max_seconds = o.max_seconds;
  spec.termination.target_fitness =
      o.stop_on_optimum ? o.stop_on_optimum : o.target_fitness;
  spec.termination.max_generations = o.max_generations;

  std::ofstream trace_file;
  std::unique_ptr<gomix::CsvTraceWriter> sink;
  if (!o.trace.empty()) {
    trace_file.open(o.trace);
    if (!trace_file)
      throw std::invalid_argument("cannot open trace file '" + o.trace + "'");
    sink = std::make_unique<gomix::CsvTraceWriter>(trace_file);
  }

  gomix::RunResult result;
  if (o.engine == "serial") {
    if (o.workers > 1)
      throw std::invalid_argument("the serial engine runs with --workers 1");
    result = gomix::run_serial(problem, spec, sink.get());
  } else {
    result = gomix::run_parallel(problem, spec, sink.get());
  }

  std::cout << "best " << fmt(result.best.fitness) << '\n'
            << "reason " << gomix::to_string(result.reason) << '\n'
            << "evaluations " << fmt(result.evaluations) << '\n'
            << "generations " << result.generations << '\n'
            << "populations " << result.populations << '\n'
            << "genotype " << genotype_string(result.best.genotype) << '\n';

  if (spec.termination.target_fitness &&
      result.reason != gomix::StopReason::target_reached)
    return exit_target_unreached;
  return 0;
}

int cmd_generate(const InstanceOpts& instance, const std::string& out_path,
                 std::uint64_t seed) {
  const gomix::MaxCutInstance inst = instance.resolve(seed);
  std::ofstream out(out_path);
  if (!out)
    throw std::invalid_argument("cannot open output file '" + out_path + "'");
  gomix::save_edge_list(out, inst);
  if (!out.flush())
    throw std::invalid_argument("failed writing '" + out_path + "'");
  return 0;
}

int cmd_color_stats(const InstanceOpts& instance, const std::string& model_spec,
                    std::uint64_t seed) {
  const gomix::MaxCutInstance inst = instance.resolve(seed);
  const gomix::GrayBoxProblem problem = gomix::as_graybox(inst);
  const ModelSpec model = parse_model(model_spec, true);
  if (model.config.kind == gomix::LinkageKind::learned_lt)
    throw std::invalid_argument(
        "model: a population-learned model has no fixed grouping; use flt, "
        "bflt:BOUND, univariate, or fos:PATH");

  gomix::ColorGroups groups;
  if (!model.fos_path.empty()) {
    std::ifstream in(model.fos_path);
    if (!in)
      throw std::invalid_argument("cannot open FOS file '" + model.fos_path +
                                  "'");
    gomix::Fos fos;
    try {
      fos = gomix::read_fos(in, problem.num_variables());
    } catch (const gomix::ParseError& e) {
      throw std::invalid_argument(model.fos_path + ": " + e.what());
    }
    const gomix::FosValidation check =
        gomix::validate_fos(fos, problem.num_variables());
    if (!check.ok)
      throw std::invalid_argument("FOS file: " + check.violations.front());
    groups = gomix::welsh_powell(
        gomix::build_lmig(fos, gomix::build_vig(problem)));
  } else {
    gomix::ModelConfig config = model.config;
    if (config.kind == gomix::LinkageKind::fixed_tree)
      config.similarity = gomix::weight_similarity(inst);
    groups = gomix::build_fixed_model(problem, config, true)->groups;
  }
  std::cout << gomix::format_group_report(groups);
  return 0;
}

int cmd_oracle(const InstanceOpts& instance, std::uint64_t seed) {
  const gomix::MaxCutInstance inst = instance.resolve(seed);
  const gomix::BruteForceResult result = gomix::brute_force_optimum(inst);
  std::cout << "optimum " << fmt(result.optimum) << '\n'
            << "genotype " << genotype_string(result.genotype) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gray-box optimal mixing optimizer for max-cut"};
  app.require_subcommand(1);

  RunOpts run;
  CLI::App* run_cmd = app.add_subcommand("run", "optimize an instance");
  run.instance.attach(*run_cmd, true);
  run.o_engine = run_cmd->add_option("--engine", run.engine, "serial | parallel")
                     ->check(CLI::IsMember({"serial", "parallel"}))
                     ->capture_default_str();
  run.o_model =
      run_cmd->add_option("--model", run.model,
                          "learned-lt | flt | bflt:BOUND | univariate")
          ->capture_default_str();
  run.o_seed = run_cmd->add_option("--seed", run.seed, "random seed")
                   ->capture_default_str();
  run.o_workers =
      run_cmd->add_option("--workers", run.workers, "worker threads (parallel)")
          ->capture_default_str();
  run.o_population = run_cmd->add_option(
      "--n", run.population,
      "single population of this size (disables the interleaved scheme)");
  run.o_base = run_cmd->add_option("--ims-base", run.ims_base,
                                   "smallest population size")
                   ->capture_default_str();
  run.o_c = run_cmd->add_option("--ims-c", run.ims_c, "interleave factor")
                ->capture_default_str();
  run.o_max = run_cmd->add_option("--ims-max-pops", run.ims_max,
                                  "population cap (0 = unlimited)");
  run.o_evals = run_cmd->add_option("--max-evaluations", run.max_evaluations,
                                    "evaluation budget, gray-box units");
  run.o_secs =
      run_cmd->add_option("--max-seconds", run.max_seconds, "wall-clock budget");
  run.o_target = run_cmd->add_option("--target-fitness", run.target_fitness,
                                     "stop at this fitness or better");
  run.o_optimum = run_cmd->add_option("--stop-on-optimum", run.stop_on_optimum,
                                      "known optimum; stop when reached");
  run.o_gens = run_cmd->add_option("--max-generations", run.max_generations,
                                   "generation cap for the first population");
  run.o_trace = run_cmd->add_option("--trace", run.trace, "write a CSV trace");
  run_cmd->add_option("--config", run.config_path, "JSON config file");

  InstanceOpts gen;
  std::string gen_out;
  CLI::App* gen_cmd =
      app.add_subcommand("generate", "write a benchmark instance file");
  gen.attach(*gen_cmd, false);
  gen_cmd->add_option("--out", gen_out, "output file")->required();
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--seed", gen_seed, "random seed")->capture_default_str();

  InstanceOpts stats;
  std::string stats_model = "flt";
  std::uint64_t stats_seed = 1;
  CLI::App* stats_cmd = app.add_subcommand(
      "color-stats", "show the parallel grouping of a linkage model");
  stats.attach(*stats_cmd, true);
  stats_cmd
      ->add_option("--model", stats_model,
                   "flt | bflt:BOUND | univariate | fos:PATH")
      ->capture_default_str();
  stats_cmd->add_option("--seed", stats_seed, "random seed")
      ->capture_default_str();

  InstanceOpts oracle;
  std::uint64_t oracle_seed = 1;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "exhaustive optimum (up to 26 vertices)");
  oracle.attach(*oracle_cmd, true);
  oracle_cmd->add_option("--seed", oracle_seed, "random seed")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_bad_input;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*gen_cmd) return cmd_generate(gen, gen_out, gen_seed);
    if (*stats_cmd) return cmd_color_stats(stats, stats_model, stats_seed);
    return cmd_oracle(oracle, oracle_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_bad_input;
  }
}
