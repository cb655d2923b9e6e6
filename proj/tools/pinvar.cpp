// pinvar command-line front end.
//
//   pinvar generate --problem lorenz --n 100000 --fine-h 1e-5 --downsample 100 --out lorenz.csv
//   pinvar train    --data D.csv --basis h2 --wo 0.5 --r 1e-4 --out model.json
//   pinvar predict  --model model.json --data D.csv --start 10001 --steps 10000 --out P.csv
//   pinvar eval     --pred P.csv --ref D.csv --start 10001 --M 1e-4
//   pinvar sweep    --config sweep.json --out results/ --jobs 4
//   pinvar report   --results results/ --format markdown
//
// Exit codes: 0 ok, 1 runtime failure, 2 bad usage. Each run leaves a
// manifest JSON beside its output holding the resolved settings; feeding
// its "config" object back through --config repeats the run.

#include <algorithm>
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pinvar/experiment.hpp"
#include "pinvar/integrate.hpp"
#include "pinvar/io.hpp"
#include "pinvar/metrics.hpp"
#include "pinvar/nvar.hpp"
#include "pinvar/ode_systems.hpp"
#include "pinvar/simd.hpp"
#include "pinvar/state_function.hpp"
#include "pinvar/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pinvar;

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

OdeSystem::Params parse_params(const std::vector<std::string>& items) {
  OdeSystem::Params out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects name=value, got '" + item + "'");
    try {
      out.emplace_back(item.substr(0, eq), io::parse_double(item.substr(eq + 1)));
    } catch (const std::invalid_argument&) {
      throw UsageError("--param value in '" + item + "' is not a number");
    }
  }
  return out;
}

json params_json(const OdeSystem::Params& p) {
  json j = json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

OdeSystem::Params params_from_json(const json& j) {
  OdeSystem::Params out;
  if (j.is_object())
    for (const auto& [k, v] : j.items()) out.emplace_back(k, v.get<double>());
  return out;
}

void write_manifest(const fs::path& path, const std::string& command, const json& config, const json& outputs) {
  json m;
  m["tool"] = "pinvar";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = config;
  m["outputs"] = outputs;
  io::write_json(path, m);
}

fs::path manifest_beside(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

// --- flat JSON config files -------------------------------------------------
//
// For every subcommand except sweep, --config takes a flat object whose keys
// are long flag names without the dashes. Its entries are spliced in ahead of
// the command-line flags so that flags given explicitly win.

std::vector<std::string> config_tokens(const json& j) {
  std::vector<std::string> out;
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  auto scalar = [](const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return io::format_double(v.get<double>());
    return v.dump();
  };
  for (const auto& [k, v] : j.items()) {
    if (k == "config") continue;
    const std::string flag = "--" + k;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      for (const auto& e : v) {
        out.push_back(flag);
        out.push_back(scalar(e));
      }
    } else if (v.is_object()) {
      for (const auto& [pk, pv] : v.items()) {
        out.push_back(flag);
        out.push_back(pk + "=" + scalar(pv));
      }
    } else if (!v.is_null()) {
      out.push_back(flag);
      out.push_back(scalar(v));
    }
  }
  return out;
}

// --- subcommand settings ----------------------------------------------------

struct GenerateArgs {
  std::string problem, out, generator, config;
  std::vector<std::string> params;
  std::size_t n = 100000;
  double h = 0.0, fine_h = 0.0, t0 = 0.0;
  std::size_t downsample = 0;
};

struct TrainArgs {
  std::string data, problem, basis = "h1", out, radii_source = "training", config;
  std::vector<std::string> params;
  std::size_t p = 10, s = 1, train_start = 2001, train_len = 1500;
  double w_o = 0.0, r = 1e-12, w_d = 1.0;
};

struct PredictArgs {
  std::string model, data, out, config;
  std::size_t start = 10001, steps = 10000;
};

struct EvalArgs {
  std::string pred, ref, model, out, config;
  std::size_t start = 10001;
  double threshold = 1e-4;
};

struct SweepArgs {
  std::string config, out, data, problem;
  std::vector<std::string> params, bases;
  std::vector<double> r_values, wo_values;
  std::vector<std::size_t> intervals;
  std::size_t jobs = 1, test_len = 0, train_start = 0, train_len = 0, n = 0, p = 0, s = 0;
  double threshold = 0.0;
  bool quiet = false;
};

struct ReportArgs {
  std::string results, format = "markdown", out, config;
  std::size_t expected = 0;
};

// --- generate ---------------------------------------------------------------

int run_generate(const GenerateArgs& a) {
  const auto overrides = parse_params(a.params);
  OdeSystem system = OdeSystem::by_name(a.problem, overrides);
  DatasetConfig dc = default_dataset_config(a.problem);
  std::string gen = a.generator.empty() ? dc.generator : a.generator;
  if (gen != "exact" && gen != "rk4") throw UsageError("--generator must be 'exact' or 'rk4'");
  if (gen == "exact" && a.problem != "spring") throw UsageError("the exact generator exists only for the spring");
  if (a.n < 1) throw UsageError("--n must be at least 1");

  Dataset data;
  json config;
  config["problem"] = a.problem;
  config["generator"] = gen;
  config["n"] = a.n;
  config["param"] = params_json(system.params());
  if (gen == "exact") {
    const double h = a.h > 0 ? a.h : dc.h;
    data = generate_exact_spring_dataset(system.param("k"), h, a.n, a.t0);
    config["h"] = h;
    config["t0"] = a.t0;
  } else {
    if (a.t0 != 0.0) throw UsageError("--t0 applies only to the exact generator");
    const double fine_h = a.fine_h > 0 ? a.fine_h : dc.fine_h;
    std::size_t ds = a.downsample > 0 ? a.downsample : dc.downsample;
    if (a.h > 0) {
      // --h alone picks the downsample factor that reaches it.
      const double ratio = a.h / fine_h;
      const auto rounded = static_cast<std::size_t>(std::llround(ratio));
      if (a.downsample == 0) ds = rounded;
      if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > 1e-9 * ratio || rounded != ds) {
        throw UsageError("--h must equal fine-h * downsample");
      }
    }
    data = generate_dataset(system, system.x0(), fine_h, ds, a.n);
    config["fine-h"] = fine_h;
    config["downsample"] = ds;
  }
  config["out"] = a.out;
  io::write_dataset_csv(a.out, data);
  write_manifest(manifest_beside(a.out), "generate", config, {a.out});
  std::cerr << "wrote " << data.size() << " points of " << a.problem << " (h=" << io::format_double(data.h)
            << ") to " << a.out << '\n';
  return 0;
}

// --- train ------------------------------------------------------------------

std::string problem_for(const std::string& flag, const Dataset& data) {
  if (!flag.empty()) {
    if (!data.system_name.empty() && data.system_name != flag) {
      throw std::runtime_error("dataset was generated for '" + data.system_name + "', not '" + flag + "'");
    }
    return flag;
  }
  if (data.system_name.empty()) throw UsageError("dataset carries no system name; pass --problem");
  return data.system_name;
}

int run_train(const TrainArgs& a) {
  Dataset data = io::read_dataset_csv(a.data);
  const std::string problem = problem_for(a.problem, data);
  OdeSystem system = OdeSystem::by_name(problem, parse_params(a.params));
  if (data.dim() != system.dim()) {
    throw std::runtime_error("dataset has " + std::to_string(data.dim()) + " columns but '" + problem +
                             "' has dimension " + std::to_string(system.dim()));
  }
  if (a.train_len < 1) throw std::runtime_error("training window is empty (--train-len 0)");
  EmbeddingSpec emb{a.p, a.s, data.dim()};
  emb.validate();
  if (a.train_start <= emb.span() || a.train_start + a.train_len > data.size()) {
    throw std::runtime_error("training indices " + std::to_string(a.train_start) + ".." +
                             std::to_string(a.train_start + a.train_len) + " need " + std::to_string(emb.span()) +
                             " points of history and must lie within 1.." + std::to_string(data.size()));
  }
  const auto radii = a.radii_source == "all" ? compute_radii(data, 1, data.size())
                                             : compute_radii(data, a.train_start, a.train_start + a.train_len - 1);
  const auto spec = make_state_function(parse_basis(a.basis), emb, radii);
  TrainingWeights w{a.w_d, a.w_o, a.r};
  auto problem_data = build_training_problem(data, system, spec, a.train_start, a.train_len, w);
  WeightFit fit = solve_weights(problem_data);
  auto obj = training_objective(problem_data, fit.W);

  io::ModelFile file;
  file.system = problem;
  file.model = NvarModel{fit.W, spec, data.h};
  file.model.validate();
  json training;
  training["w_d"] = a.w_d;
  training["w_o"] = a.w_o;
  training["r"] = a.r;
  training["train_start"] = a.train_start;
  training["train_len"] = a.train_len;
  training["radii_source"] = a.radii_source;
  training["radii"] = radii;
  training["system_params"] = params_json(system.params());
  training["objective"] = {{"g_d", obj.g_d}, {"g_o", obj.g_o}, {"g_r", obj.g_r}, {"total", obj.total}};
  training["rank"] = fit.rank;
  training["rank_deficient"] = fit.rank_deficient;
  file.training = training;
  io::write_model(a.out, file);

  json config;
  config["data"] = a.data;
  config["problem"] = problem;
  config["param"] = params_json(system.params());
  config["basis"] = a.basis;
  config["p"] = a.p;
  config["s"] = a.s;
  config["wo"] = a.w_o;
  config["r"] = a.r;
  config["wd"] = a.w_d;
  config["train-start"] = a.train_start;
  config["train-len"] = a.train_len;
  config["radii-source"] = a.radii_source;
  config["out"] = a.out;
  write_manifest(manifest_beside(a.out), "train", config, {a.out});
  std::cerr << "trained " << a.basis << " model (m=" << spec.m() << ", rank " << fit.rank
            << (fit.rank_deficient ? ", rank deficient" : "") << "), objective " << io::format_double(obj.total)
            << '\n';
  return 0;
}

// --- predict ----------------------------------------------------------------

struct LoadedModel {
  io::ModelFile file;
  OdeSystem system;
};

LoadedModel load_model(const std::string& path) {
  io::ModelFile f = io::read_model(path);
  auto params = f.training.is_object() && f.training.contains("system_params")
                    ? params_from_json(f.training["system_params"])
                    : OdeSystem::Params{};
  OdeSystem sys = OdeSystem::by_name(f.system, params);
  return {std::move(f), std::move(sys)};
}

Matrix seed_window(const Dataset& data, std::size_t start, const EmbeddingSpec& emb) {
  if (start <= emb.span() || start > data.size()) {
    throw std::runtime_error("--start " + std::to_string(start) + " needs " + std::to_string(emb.span()) +
                             " earlier points and must lie within 1.." + std::to_string(data.size()));
  }
  Matrix seed(emb.span() + 1, emb.d);
  for (std::size_t r = 0; r < seed.rows(); ++r) {
    auto x = data.at(start - emb.span() + r);
    std::copy(x.begin(), x.end(), seed.row(r).begin());
  }
  return seed;
}

int run_predict(const PredictArgs& a) {
  auto lm = load_model(a.model);
  Dataset data = io::read_dataset_csv(a.data);
  const NvarModel& model = lm.file.model;
  if (data.dim() != model.d()) {
    throw std::runtime_error("model expects " + std::to_string(model.d()) + " coordinates but the dataset has " +
                             std::to_string(data.dim()));
  }
  if (!data.system_name.empty() && data.system_name != lm.file.system) {
    throw std::runtime_error("model was trained on '" + lm.file.system + "' but the dataset is '" +
                             data.system_name + "'");
  }
  Matrix seed = seed_window(data, a.start, model.spec.embedding);
  Rollout roll = recursive_predict(model, seed, a.steps);

  Dataset out;
  out.system_name = lm.file.system;
  out.h = data.h;
  out.t0 = data.time_at(a.start + 1);
  out.points = roll.trajectory;
  out.generator = "nvar";
  out.generator_params = {{"start", static_cast<double>(a.start)}, {"steps", static_cast<double>(a.steps)}};
  json extra;
  extra["model"] = a.model;
  extra["first_index"] = a.start + 1;
  if (roll.diverged_at) extra["diverged_at"] = *roll.diverged_at;
  if (out.points.rows() == 0) {
    throw std::runtime_error("prediction diverged at step 1; nothing to write");
  }
  io::write_dataset_csv(a.out, out, extra);

  json config{{"model", a.model}, {"data", a.data}, {"start", a.start}, {"steps", a.steps}, {"out", a.out}};
  write_manifest(manifest_beside(a.out), "predict", config, {a.out});
  if (roll.diverged_at) {
    std::cerr << "prediction went non-finite at step " << *roll.diverged_at << "; wrote "
              << roll.trajectory.rows() << " finite steps\n";
  } else {
    std::cerr << "wrote " << roll.trajectory.rows() << " predicted steps to " << a.out << '\n';
  }
  return 0;
}

// --- eval -------------------------------------------------------------------

int run_eval(const EvalArgs& a) {
  Dataset pred = io::read_dataset_csv(a.pred);
  Dataset ref = io::read_dataset_csv(a.ref);
  if (pred.dim() != ref.dim()) {
    throw std::runtime_error("prediction has " + std::to_string(pred.dim()) + " coordinates, reference has " +
                             std::to_string(ref.dim()));
  }
  const std::size_t steps = pred.size();
  if (a.start < 1 || a.start + steps > ref.size()) {
    throw std::runtime_error("reference indices " + std::to_string(a.start + 1) + ".." +
                             std::to_string(a.start + steps) + " fall outside 1.." + std::to_string(ref.size()));
  }
  Matrix slice(steps, ref.dim());
  for (std::size_t j = 0; j < steps; ++j) {
    auto x = ref.at(a.start + 1 + j);
    std::copy(x.begin(), x.end(), slice.row(j).begin());
  }
  json result;
  result["start"] = a.start;
  result["steps"] = steps;
  result["M"] = a.threshold;
  result["valid_time"] = valid_time(pred.points, slice, a.threshold);
  if (!a.model.empty()) {
    auto lm = load_model(a.model);
    if (lm.file.model.d() != pred.dim()) throw std::runtime_error("model dimension does not match the prediction");
    Matrix seed = seed_window(ref, a.start, lm.file.model.spec.embedding);
    auto e = discrete_energy(lm.file.model, lm.system, pred.points, seed, ref.h);
    // nlohmann writes non-finite doubles as null; keep them readable.
    result["energy"] = std::isfinite(e.energy) ? json(e.energy) : json(io::format_double(e.energy));
    result["energy_steps"] = e.steps;
  }
  const std::string text = result.dump(2) + "\n";
  json config{{"pred", a.pred}, {"ref", a.ref}, {"start", a.start}, {"M", a.threshold}};
  if (!a.model.empty()) config["model"] = a.model;
  if (!a.out.empty()) {
    config["out"] = a.out;
    io::write_text(a.out, text);
    write_manifest(manifest_beside(a.out), "eval", config, {a.out});
  } else {
    std::cout << text;
    write_manifest(fs::path(a.pred + ".eval.manifest.json"), "eval", config, json::array());
  }
  return 0;
}

// --- sweep ------------------------------------------------------------------

int run_sweep(const SweepArgs& a, CLI::App& sub) {
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    json j = io::read_json(a.config);
    // A sweep manifest carries the experiment config under "config".
    if (j.contains("tool") && j.contains("config")) j = j["config"];
    cfg = config_from_json(j);
  }
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--problem")) {
    cfg.system = a.problem;
    auto old = cfg.dataset;
    cfg.dataset = default_dataset_config(a.problem);
    cfg.dataset.path = old.path;
    cfg.dataset.n_points = old.n_points;
  }
  if (given("--param")) cfg.system_params = parse_params(a.params);
  if (given("--data")) cfg.dataset.path = a.data;
  if (given("--n")) cfg.dataset.n_points = a.n;
  if (given("--bases")) {
    cfg.bases.clear();
    for (const auto& b : a.bases) cfg.bases.push_back(parse_basis(b));
  }
  if (given("--r-values")) cfg.r_values = a.r_values;
  if (given("--wo-values")) cfg.wo_values = a.wo_values;
  if (given("--intervals")) cfg.interval_starts = a.intervals;
  if (given("--test-len")) cfg.test_len = a.test_len;
  if (given("--train-start")) cfg.train_start = a.train_start;
  if (given("--train-len")) cfg.train_len = a.train_len;
  if (given("--p")) cfg.p = a.p;
  if (given("--s")) cfg.s = a.s;
  if (given("--M")) cfg.threshold = a.threshold;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  OdeSystem system = OdeSystem::by_name(cfg.system, cfg.system_params);
  auto log = [&](const std::string& msg) {
    if (!a.quiet) std::cerr << msg << '\n';
  };
  log("loading " + cfg.system + " data" + (cfg.dataset.path.empty() ? " (generating)" : " from " + cfg.dataset.path));
  auto data = std::make_shared<const Dataset>(load_or_generate_dataset(cfg, system));

  fs::create_directories(a.out);
  write_manifest(fs::path(a.out) / "manifest.json", "sweep", config_to_json(cfg),
                 {"results.csv", "aggregate.csv", "tables.md", "errors.json"});

  SweepOptions opts;
  opts.out_dir = a.out;
  opts.jobs = a.jobs;
  opts.log = log;
  SweepResult res = sweep(cfg, data, opts);
  log("sweep done: " + std::to_string(res.records.size()) + " trials, " + std::to_string(res.errors.size()) +
      " failed cells");
  return res.errors.empty() ? 0 : 1;
}

// --- report -----------------------------------------------------------------

int run_report(const ReportArgs& a) {
  const fs::path dir = a.results;
  const fs::path results = fs::is_directory(dir) ? dir / "results.csv" : dir;
  std::vector<TrialRecord> records;
  if (fs::exists(results)) {
    std::ifstream in(results);
    std::stringstream buf;
    buf << in.rdbuf();
    records = parse_results_csv(buf.str());
  }
  if (records.empty()) throw std::runtime_error("no results found in '" + a.results + "'");

  std::size_t expected = a.expected;
  const fs::path manifest = results.parent_path() / "manifest.json";
  if (expected == 0 && fs::exists(manifest)) {
    auto m = io::read_json(manifest);
    if (m.contains("config") && m["config"].contains("interval_starts")) expected = m["config"]["interval_starts"].size();
  }
  if (expected == 0) expected = 5;

  auto agg = aggregate_median(records, expected);
  std::size_t incomplete = 0;
  for (const auto& c : agg) incomplete += c.complete ? 0 : 1;
  if (incomplete > 0) {
    std::cerr << incomplete << " cell(s) lack " << expected << " interval results and are left out\n";
  }
  const std::string text = a.format == "csv" ? aggregate_csv(agg) : markdown_tables(agg);
  json config{{"results", a.results}, {"format", a.format}, {"expected-intervals", expected}};
  if (!a.out.empty()) {
    config["out"] = a.out;
    io::write_text(a.out, text);
    write_manifest(manifest_beside(a.out), "report", config, {a.out});
  } else {
    std::cout << text;
    write_manifest(results.parent_path() / "report.manifest.json", "report", config, json::array());
  }
  return 0;
}

// --- wiring -----------------------------------------------------------------

const std::vector<std::string> kBases{"h1", "h2", "h3"};

struct Cli {
  CLI::App app{"Physics-informed nonlinear vector autoregression"};
  GenerateArgs gen;
  TrainArgs train;
  PredictArgs pred;
  EvalArgs eval;
  SweepArgs sweep;
  ReportArgs report;
  std::string isa = "auto";
  CLI::App *c_gen, *c_train, *c_pred, *c_eval, *c_sweep, *c_report;

  Cli() {
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_version_flag("--version", kVersion);
    app.add_option("--isa", isa, "Kernel set: auto, scalar, avx2 or neon")
        ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));
    const auto problems = OdeSystem::registry_names();

    c_gen = app.add_subcommand("generate", "Write a reference trajectory CSV");
    c_gen->set_help_flag("--help", "Print this help message and exit");
    c_gen->add_option("--config", gen.config, "Flat JSON file of flag values");
    c_gen->add_option("--problem", gen.problem, "spring, lotka_volterra or lorenz")
        ->required()
        ->check(CLI::IsMember(problems));
    c_gen->add_option("--param", gen.params, "System parameter override name=value")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_gen->add_option("--n", gen.n, "Number of stored points")->capture_default_str();
    c_gen->add_option("--h", gen.h, "Stored step (spring default 1e-3)");
    c_gen->add_option("--fine-h", gen.fine_h, "RK4 step (default 1e-5)");
    c_gen->add_option("--downsample", gen.downsample, "Keep every k-th RK4 state");
    c_gen->add_option("--t0", gen.t0, "Start time for the exact spring solution");
    c_gen->add_option("--generator", gen.generator, "exact or rk4 (default per system)");
    c_gen->add_option("--out", gen.out, "Output CSV")->required();

    c_train = app.add_subcommand("train", "Fit NVAR weights on a training window");
    c_train->set_help_flag("--help", "Print this help message and exit");
    c_train->add_option("--config", train.config, "Flat JSON file of flag values");
    c_train->add_option("--data", train.data, "Dataset CSV")->required();
    c_train->add_option("--problem", train.problem, "System (default: from the dataset)")
        ->check(CLI::IsMember(problems));
    c_train->add_option("--param", train.params, "System parameter override name=value")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_train->add_option("--basis", train.basis, "h1, h2 or h3")->check(CLI::IsMember(kBases))->capture_default_str();
    c_train->add_option("--p", train.p, "Embedding depth")->check(CLI::PositiveNumber)->capture_default_str();
    c_train->add_option("--s", train.s, "Embedding stride")->check(CLI::PositiveNumber)->capture_default_str();
    c_train->add_option("--wo", train.w_o, "ODE-fit weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_train->add_option("--r", train.r, "Ridge weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_train->add_option("--wd", train.w_d, "Data-fit weight")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_train->add_option("--train-start", train.train_start, "1-based index of the first input")
        ->capture_default_str();
    c_train->add_option("--train-len", train.train_len, "Number of training columns")->capture_default_str();
    c_train->add_option("--radii-source", train.radii_source, "training or all")
        ->check(CLI::IsMember({"training", "all"}))
        ->capture_default_str();
    c_train->add_option("--out", train.out, "Output model JSON")->required();

    c_pred = app.add_subcommand("predict", "Roll a trained model forward");
    c_pred->set_help_flag("--help", "Print this help message and exit");
    c_pred->add_option("--config", pred.config, "Flat JSON file of flag values");
    c_pred->add_option("--model", pred.model, "Model JSON")->required();
    c_pred->add_option("--data", pred.data, "Dataset CSV supplying the seed window")->required();
    c_pred->add_option("--start", pred.start, "1-based index of the newest seed point")->capture_default_str();
    c_pred->add_option("--steps", pred.steps, "Steps to predict")->capture_default_str();
    c_pred->add_option("--out", pred.out, "Output trajectory CSV")->required();

    c_eval = app.add_subcommand("eval", "Score a predicted trajectory");
    c_eval->set_help_flag("--help", "Print this help message and exit");
    c_eval->add_option("--config", eval.config, "Flat JSON file of flag values");
    c_eval->add_option("--pred", eval.pred, "Predicted trajectory CSV")->required();
    c_eval->add_option("--ref", eval.ref, "Reference dataset CSV")->required();
    c_eval->add_option("--start", eval.start, "Seed index; prediction j is compared with start+j")
        ->capture_default_str();
    c_eval->add_option("--M", eval.threshold, "Valid-time threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_eval->add_option("--model", eval.model, "Model JSON; adds the discrete energy");
    c_eval->add_option("--out", eval.out, "Write metrics JSON here instead of stdout");

    c_sweep = app.add_subcommand("sweep", "Run the basis x r x w_o x interval grid");
    c_sweep->set_help_flag("--help", "Print this help message and exit");
    c_sweep->add_option("--config", sweep.config, "Experiment JSON");
    c_sweep->add_option("--out", sweep.out, "Results directory")->required();
    c_sweep->add_option("--jobs", sweep.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    c_sweep->add_option("--problem", sweep.problem, "System")->check(CLI::IsMember(problems));
    c_sweep->add_option("--param", sweep.params, "System parameter override name=value")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_sweep->add_option("--data", sweep.data, "Dataset CSV (default: generate)");
    c_sweep->add_option("--n", sweep.n, "Points to generate")->check(CLI::PositiveNumber);
    c_sweep->add_option("--bases", sweep.bases, "Bases to sweep")
        ->check(CLI::IsMember(kBases))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_sweep->add_option("--r-values", sweep.r_values, "Ridge grid")
        ->check(CLI::NonNegativeNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_sweep->add_option("--wo-values", sweep.wo_values, "ODE-weight grid")
        ->check(CLI::NonNegativeNumber)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_sweep->add_option("--intervals", sweep.intervals, "1-based seed indices of the test intervals")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    c_sweep->add_option("--test-len", sweep.test_len, "Steps per interval")->check(CLI::PositiveNumber);
    c_sweep->add_option("--train-start", sweep.train_start, "1-based first training input");
    c_sweep->add_option("--train-len", sweep.train_len, "Training columns");
    c_sweep->add_option("--p", sweep.p, "Embedding depth")->check(CLI::PositiveNumber);
    c_sweep->add_option("--s", sweep.s, "Embedding stride")->check(CLI::PositiveNumber);
    c_sweep->add_option("--M", sweep.threshold, "Valid-time threshold")->check(CLI::PositiveNumber);
    c_sweep->add_flag("--quiet", sweep.quiet, "No progress output");

    c_report = app.add_subcommand("report", "Aggregate sweep results into tables");
    c_report->set_help_flag("--help", "Print this help message and exit");
    c_report->add_option("--config", report.config, "Flat JSON file of flag values");
    c_report->add_option("--results", report.results, "Results directory or results.csv")->required();
    c_report->add_option("--format", report.format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}))
        ->capture_default_str();
    c_report->add_option("--expected-intervals", report.expected, "Intervals per complete cell (default 5)");
    c_report->add_option("--out", report.out, "Output file (default stdout)");
  }
};

// Finds "--config <path>" or "--config=<path>" after the subcommand name.
std::string find_config(const std::vector<std::string>& args, std::size_t sub_pos) {
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

int parse(Cli& cli, const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (const auto& s : args) argv.push_back(const_cast<char*>(s.c_str()));
  try {
    cli.app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = cli.app.exit(e);
    return code == 0 ? -1 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  auto cli = std::make_unique<Cli>();

  try {
    // A flat config file is spliced in front of the explicit flags before
    // parsing, so required flags may come from the file.
    const std::vector<std::string> flat{"generate", "train", "predict", "eval", "report"};
    for (std::size_t pos = 1; pos < args.size(); ++pos) {
      if (args[pos] == "--isa") {
        ++pos;
        continue;
      }
      if (std::find(flat.begin(), flat.end(), args[pos]) == flat.end()) {
        if (args[pos].rfind("-", 0) == 0) continue;
        break;
      }
      const std::string path = find_config(args, pos);
      if (path.empty()) break;
      std::vector<std::string> merged(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
      for (auto& t : config_tokens(io::read_json(path))) merged.push_back(std::move(t));
      merged.insert(merged.end(), args.begin() + static_cast<std::ptrdiff_t>(pos) + 1, args.end());
      args = std::move(merged);
      break;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  if (int rc = parse(*cli, args); rc != 0) return rc < 0 ? 0 : rc;

  try {
    if (cli->isa != "auto") {
      simd::Isa isa{};
      simd::parse_isa(cli->isa, isa);
      if (!simd::isa_supported(isa)) throw std::runtime_error("kernel set '" + cli->isa + "' is not supported here");
      simd::select_isa(isa);
    }

    if (cli->c_gen->parsed()) return run_generate(cli->gen);
    if (cli->c_train->parsed()) return run_train(cli->train);
    if (cli->c_pred->parsed()) return run_predict(cli->pred);
    if (cli->c_eval->parsed()) return run_eval(cli->eval);
    if (cli->c_sweep->parsed()) return run_sweep(cli->sweep, *cli->c_sweep);
    if (cli->c_report->parsed()) return run_report(cli->report);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
