#include "pinvar/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "pinvar/io.hpp"

namespace pinvar {

using nlohmann::json;

DatasetConfig default_dataset_config(const std::string& system) {
  DatasetConfig c;
  if (system == "spring") {
    c.generator = "exact";
    c.h = 1e-3;
  } else if (system == "lotka_volterra") {
    c.generator = "rk4";
    c.fine_h = 1e-5;
    c.downsample = 10000;
  } else {
    c.generator = "rk4";
    c.fine_h = 1e-5;
    c.downsample = 100;
  }
  c.n_points = 100000;
  return c;
}

void ExperimentConfig::validate(std::optional<std::size_t> n_points) const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("experiment config: " + msg); };
  OdeSystem::by_name(system, system_params);
  if (bases.empty()) fail("no bases");
  if (r_values.empty() || wo_values.empty()) fail("empty r or w_o grid");
  for (double r : r_values)
    if (!(r >= 0.0)) fail("r values must be nonnegative");
  for (double w : wo_values)
    if (!(w >= 0.0)) fail("w_o values must be nonnegative");
  if (!(w_d >= 0.0)) fail("w_d must be nonnegative");
  if (!(threshold > 0.0)) fail("threshold M must be positive");
  if (p < 1 || s < 1) fail("p and s must be >= 1");
  if (train_len < 1) fail("training window is empty");
  if (train_start <= (p - 1) * s) {
    fail("training start " + std::to_string(train_start) + " must exceed (p-1)s = " + std::to_string((p - 1) * s));
  }
  if (test_len < 1) fail("test length must be >= 1");
  if (interval_starts.empty()) fail("no test intervals");
  if (radii_source != "training" && radii_source != "all") fail("radii_source must be 'training' or 'all'");

  // Training touches inputs train_start..train_start+train_len-1 and the
  // target one past the end; a test interval covers seed..seed+test_len.
  const std::size_t train_lo = train_start;
  const std::size_t train_hi = train_start + train_len;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t k0 : interval_starts) {
    if (k0 <= (p - 1) * s) fail("interval start " + std::to_string(k0) + " leaves no room for the seed window");
    const std::size_t lo = k0;
    const std::size_t hi = k0 + test_len;
    if (lo <= train_hi && train_lo <= hi) {
      fail("test interval starting at " + std::to_string(k0) + " overlaps the training window " +
           std::to_string(train_lo) + ".." + std::to_string(train_hi));
    }
    spans.emplace_back(lo, hi - 1);
    if (n_points && hi > *n_points) {
      fail("test interval starting at " + std::to_string(k0) + " needs index " + std::to_string(hi) +
           " but the dataset has " + std::to_string(*n_points) + " points");
    }
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first <= spans[i - 1].second) fail("test intervals overlap");
  }
  if (n_points && train_hi > *n_points) fail("training window runs past the end of the dataset");
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["system"] = c.system;
  json params = json::object();
  for (const auto& [k, v] : c.system_params) params[k] = v;
  j["system_params"] = params;
  json ds;
  ds["path"] = c.dataset.path;
  ds["generator"] = c.dataset.generator;
  ds["h"] = c.dataset.h;
  ds["fine_h"] = c.dataset.fine_h;
  ds["downsample"] = c.dataset.downsample;
  ds["n_points"] = c.dataset.n_points;
  j["dataset"] = ds;
  json bases = json::array();
  for (Basis b : c.bases) bases.push_back(basis_name(b));
  j["bases"] = bases;
  j["p"] = c.p;
  j["s"] = c.s;
  j["train_start"] = c.train_start;
  j["train_len"] = c.train_len;
  j["interval_starts"] = c.interval_starts;
  j["test_len"] = c.test_len;
  j["r_values"] = c.r_values;
  j["wo_values"] = c.wo_values;
  j["w_d"] = c.w_d;
  j["M"] = c.threshold;
  j["radii_source"] = c.radii_source;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.system = j.value("system", c.system);
    c.dataset = default_dataset_config(c.system);
    if (j.contains("system_params")) {
      for (const auto& [k, v] : j["system_params"].items()) c.system_params.emplace_back(k, v.get<double>());
    }
    if (j.contains("dataset")) {
      const auto& ds = j["dataset"];
      c.dataset.path = ds.value("path", c.dataset.path);
      c.dataset.generator = ds.value("generator", c.dataset.generator);
      c.dataset.h = ds.value("h", c.dataset.h);
      c.dataset.fine_h = ds.value("fine_h", c.dataset.fine_h);
      c.dataset.downsample = ds.value("downsample", c.dataset.downsample);
      c.dataset.n_points = ds.value("n_points", c.dataset.n_points);
    }
    if (j.contains("bases")) {
      c.bases.clear();
      for (const auto& b : j["bases"]) c.bases.push_back(parse_basis(b.get<std::string>()));
    }
    c.p = j.value("p", c.p);
    c.s = j.value("s", c.s);
    c.train_start = j.value("train_start", c.train_start);
    c.train_len = j.value("train_len", c.train_len);
    if (j.contains("interval_starts")) c.interval_starts = j["interval_starts"].get<std::vector<std::size_t>>();
    c.test_len = j.value("test_len", c.test_len);
    if (j.contains("r_values")) c.r_values = j["r_values"].get<std::vector<double>>();
    if (j.contains("wo_values")) c.wo_values = j["wo_values"].get<std::vector<double>>();
    c.w_d = j.value("w_d", c.w_d);
    c.threshold = j.value("M", c.threshold);
    c.radii_source = j.value("radii_source", c.radii_source);
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment config: ") + e.what());
  }
}

Dataset load_or_generate_dataset(const ExperimentConfig& c, const OdeSystem& system) {
  if (!c.dataset.path.empty()) return io::read_dataset_csv(c.dataset.path);
  const std::string gen = c.dataset.generator.empty() ? default_dataset_config(c.system).generator
                                                       : c.dataset.generator;
  if (gen == "exact") {
    if (system.name() != "spring") throw std::invalid_argument("exact-solution data exists only for the spring");
    return generate_exact_spring_dataset(system.param("k"), c.dataset.h, c.dataset.n_points);
  }
  if (gen == "rk4") {
    return generate_dataset(system, system.x0(), c.dataset.fine_h, c.dataset.downsample, c.dataset.n_points);
  }
  throw std::invalid_argument("unknown dataset generator '" + gen + "'");
}

MetricReport evaluate_interval(const NvarModel& model, const OdeSystem& system, const Dataset& data,
                               std::size_t seed_index, std::size_t steps, double threshold) {
  const EmbeddingSpec& emb = model.spec.embedding;
  if (seed_index <= emb.span() || seed_index + steps > data.size()) {
    throw std::out_of_range("interval seeded at " + std::to_string(seed_index) + " with " +
                            std::to_string(steps) + " steps does not fit the dataset");
  }
  Matrix seed(emb.span() + 1, emb.d);
  for (std::size_t r = 0; r < seed.rows(); ++r) {
    auto x = data.at(seed_index - emb.span() + r);
    std::copy(x.begin(), x.end(), seed.row(r).begin());
  }
  Rollout roll = recursive_predict(model, seed, steps);

  const std::size_t done = roll.trajectory.rows();
  Matrix ref(done, emb.d);
  for (std::size_t j = 0; j < done; ++j) {
    auto x = data.at(seed_index + 1 + j);
    std::copy(x.begin(), x.end(), ref.row(j).begin());
  }

  MetricReport report;
  report.steps_evaluated = done;
  report.diverged_at = roll.diverged_at;
  report.valid_time = valid_time(roll.trajectory, ref, threshold);
  report.energy = discrete_energy(model, system, roll.trajectory, seed, data.h).energy;
  return report;
}

TrialRunner::TrialRunner(ExperimentConfig config, std::shared_ptr<const Dataset> data)
    : config_(std::move(config)),
      data_(std::move(data)),
      system_(OdeSystem::by_name(config_.system, config_.system_params)) {
  config_.validate(data_->size());
  if (data_->dim() != system_.dim()) {
    throw std::invalid_argument("dataset dimension " + std::to_string(data_->dim()) + " does not match system '" +
                                system_.name() + "'");
  }
  if (config_.radii_source == "all") {
    radii_ = compute_radii(*data_, 1, data_->size());
  } else {
    radii_ = compute_radii(*data_, config_.train_start, config_.train_start + config_.train_len - 1);
  }
}

std::shared_ptr<const NvarModel> TrialRunner::model(const CellKey& cell) {
  std::shared_ptr<std::once_flag> flag;
  {
    std::lock_guard lock(mutex_);
    auto& slot = once_[cell];
    if (!slot) slot = std::make_shared<std::once_flag>();
    flag = slot;
  }
  std::call_once(*flag, [&] {
    auto spec = make_state_function(cell.basis, config_.embedding(system_.dim()), radii_);
    TrainingWeights w{config_.w_d, cell.w_o, cell.r};
    auto m = std::make_shared<const NvarModel>(
        train_model(*data_, system_, spec, config_.train_start, config_.train_len, w));
    std::lock_guard lock(mutex_);
    models_[cell] = std::move(m);
  });
  std::lock_guard lock(mutex_);
  return models_.at(cell);
}

MetricReport TrialRunner::run_trial(const CellKey& cell, std::size_t interval) {
  if (interval < 1 || interval > config_.interval_starts.size()) {
    throw std::out_of_range("interval id " + std::to_string(interval) + " outside 1.." +
                            std::to_string(config_.interval_starts.size()));
  }
  auto m = model(cell);
  return evaluate_interval(*m, system_, *data_, config_.interval_starts[interval - 1], config_.test_len,
                           config_.threshold);
}

namespace {

std::string fmt_index(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string{}; }

std::string record_line(const TrialRecord& t) {
  std::ostringstream out;
  out << t.problem << ',' << basis_name(t.cell.basis) << ',' << io::format_double(t.cell.r) << ','
      << io::format_double(t.cell.w_o) << ',' << t.interval << ',' << t.report.valid_time << ','
      << io::format_double(t.report.energy) << ',' << t.report.steps_evaluated << ','
      << fmt_index(t.report.diverged_at) << '\n';
  return out.str();
}

constexpr const char* kResultsHeader = "problem,basis,r,w_o,interval,valid_time,energy,steps_evaluated,diverged_at\n";

std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad integer '" + std::string(s) + "'");
  }
  return v;
}

// Grid position of a cell under the config ordering.
struct GridOrder {
  const ExperimentConfig& c;
  std::tuple<std::size_t, std::size_t, std::size_t> rank(const CellKey& k) const {
    auto pos = [](const auto& vec, const auto& v) {
      return static_cast<std::size_t>(std::find(vec.begin(), vec.end(), v) - vec.begin());
    };
    return {pos(c.bases, k.basis), pos(c.r_values, k.r), pos(c.wo_values, k.w_o)};
  }
};

}  // namespace

std::string results_csv(const std::vector<TrialRecord>& records) {
  std::string out = kResultsHeader;
  for (const auto& r : records) out += record_line(r);
  return out;
}

std::vector<TrialRecord> parse_results_csv(const std::string& text) {
  std::vector<TrialRecord> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line + "\n" != kResultsHeader) throw std::invalid_argument("unexpected results header: " + line);
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string field; std::getline(ls, field, ',');) f.push_back(field);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 9) {
      throw std::invalid_argument("results line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                                  " fields");
    }
    TrialRecord t;
    t.problem = f[0];
    t.cell.basis = parse_basis(f[1]);
    t.cell.r = io::parse_double(f[2]);
    t.cell.w_o = io::parse_double(f[3]);
    t.interval = parse_count(f[4]);
    t.report.valid_time = parse_count(f[5]);
    t.report.energy = io::parse_double(f[6]);
    t.report.steps_evaluated = parse_count(f[7]);
    if (!f[8].empty()) t.report.diverged_at = parse_count(f[8]);
    out.push_back(std::move(t));
  }
  return out;
}

SweepResult sweep(const ExperimentConfig& config, std::shared_ptr<const Dataset> data,
                  const SweepOptions& options) {
  TrialRunner runner(config, data);
  const std::size_t n_intervals = config.interval_starts.size();
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::vector<CellKey> cells;
  for (Basis b : config.bases)
    for (double r : config.r_values)
      for (double w : config.wo_values) cells.push_back({b, r, w});

  const bool persist = !options.out_dir.empty();
  const auto results_path = options.out_dir / "results.csv";
  std::map<std::pair<CellKey, std::size_t>, TrialRecord> done;
  if (persist) {
    std::filesystem::create_directories(options.out_dir);
    if (std::filesystem::exists(results_path)) {
      std::ifstream in(results_path);
      std::stringstream buf;
      buf << in.rdbuf();
      for (auto& t : parse_results_csv(buf.str())) {
        if (t.problem == config.system) done[{t.cell, t.interval}] = t;
      }
      log("resuming with " + std::to_string(done.size()) + " finished trials");
    } else {
      io::write_text(results_path, kResultsHeader);
    }
  }

  std::vector<CellKey> todo;
  for (const auto& c : cells) {
    bool complete = true;
    for (std::size_t i = 1; i <= n_intervals; ++i) complete = complete && done.count({c, i}) > 0;
    if (!complete) todo.push_back(c);
  }

  std::mutex out_mutex;
  std::vector<CellError> errors;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < todo.size(); idx = next++) {
      const CellKey cell = todo[idx];
      std::vector<TrialRecord> fresh;
      try {
        for (std::size_t i = 1; i <= n_intervals; ++i) {
          TrialRecord t;
          t.problem = config.system;
          t.cell = cell;
          t.interval = i;
          t.report = runner.run_trial(cell, i);
          fresh.push_back(std::move(t));
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(out_mutex);
        errors.push_back({cell, e.what()});
        log("cell " + basis_name(cell.basis) + " r=" + io::format_double(cell.r) + " w_o=" +
            io::format_double(cell.w_o) + " failed: " + e.what());
        continue;
      }
      std::lock_guard lock(out_mutex);
      std::string lines;
      for (auto& t : fresh) {
        lines += record_line(t);
        done[{t.cell, t.interval}] = t;
      }
      if (persist) {
        std::ofstream app(results_path, std::ios::app | std::ios::binary);
        app << lines;
        app.flush();
      }
      log("finished " + basis_name(cell.basis) + " r=" + io::format_double(cell.r) + " w_o=" +
          io::format_double(cell.w_o));
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, todo.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  GridOrder order{config};
  for (const auto& c : cells)
    for (std::size_t i = 1; i <= n_intervals; ++i)
      if (auto it = done.find({c, i}); it != done.end()) result.records.push_back(it->second);
  std::sort(errors.begin(), errors.end(),
            [&](const CellError& a, const CellError& b) { return order.rank(a.cell) < order.rank(b.cell); });
  result.errors = std::move(errors);

  if (persist) {
    io::write_text(results_path, results_csv(result.records));
    auto agg = aggregate_median(result.records, n_intervals);
    io::write_text(options.out_dir / "aggregate.csv", aggregate_csv(agg));
    io::write_text(options.out_dir / "tables.md", markdown_tables(agg));
    json errs = json::array();
    for (const auto& e : result.errors) {
      errs.push_back({{"basis", basis_name(e.cell.basis)}, {"r", e.cell.r}, {"w_o", e.cell.w_o}, {"error", e.message}});
    }
    io::write_json(options.out_dir / "errors.json", errs);
  }
  return result;
}

std::vector<CellAggregate> aggregate_median(const std::vector<TrialRecord>& records,
                                            std::size_t expected_intervals) {
  std::map<std::tuple<std::string, CellKey>, std::vector<const TrialRecord*>> groups;
  std::vector<std::tuple<std::string, CellKey>> order;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.problem, r.cell);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<CellAggregate> out;
  for (const auto& key : order) {
    const auto& group = groups[key];
    CellAggregate a;
    a.problem = std::get<0>(key);
    a.cell = std::get<1>(key);
    std::set<std::size_t> intervals;
    std::vector<std::size_t> vt;
    std::vector<double> en;
    for (const auto* r : group) {
      intervals.insert(r->interval);
      vt.push_back(r->report.valid_time);
      en.push_back(r->report.energy);
    }
    a.count = group.size();
    a.complete = a.count == expected_intervals && intervals.size() == expected_intervals;
    a.median_valid_time = median_of(vt);
    a.median_energy = median_of(en);
    out.push_back(a);
  }
  return out;
}

std::string aggregate_csv(const std::vector<CellAggregate>& cells) {
  std::string out = "problem,basis,r,w_o,median_valid_time,median_energy\n";
  for (const auto& a : cells) {
    if (!a.complete) continue;
    out += a.problem + ',' + basis_name(a.cell.basis) + ',' + io::format_double(a.cell.r) + ',' +
           io::format_double(a.cell.w_o) + ',' + std::to_string(a.median_valid_time) + ',' +
           io::format_double(a.median_energy) + '\n';
  }
  return out;
}

namespace {

std::string short_number(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string sci(double v) {
  if (!std::isfinite(v)) return io::format_double(v);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1e", v);
  return buf;
}

}  // namespace

std::string markdown_tables(const std::vector<CellAggregate>& cells) {
  std::vector<std::string> problems;
  for (const auto& a : cells)
    if (std::find(problems.begin(), problems.end(), a.problem) == problems.end()) problems.push_back(a.problem);

  std::ostringstream out;
  for (const auto& problem : problems) {
    std::vector<Basis> bases;
    std::vector<double> rs, wos;
    std::map<CellKey, const CellAggregate*> lookup;
    for (const auto& a : cells) {
      if (a.problem != problem || !a.complete) continue;
      if (std::find(bases.begin(), bases.end(), a.cell.basis) == bases.end()) bases.push_back(a.cell.basis);
      if (std::find(rs.begin(), rs.end(), a.cell.r) == rs.end()) rs.push_back(a.cell.r);
      if (std::find(wos.begin(), wos.end(), a.cell.w_o) == wos.end()) wos.push_back(a.cell.w_o);
      lookup[a.cell] = &a;
    }
    std::sort(bases.begin(), bases.end());
    std::sort(rs.begin(), rs.end());
    std::sort(wos.begin(), wos.end());

    for (int metric = 0; metric < 2; ++metric) {
      out << "### " << problem << ": " << (metric == 0 ? "median valid time" : "median discrete energy E_h")
          << "\n\n";
      out << "| basis | r \\ w_o |";
      for (double w : wos) out << ' ' << short_number(w) << " |";
      out << "\n|---|---|";
      for (std::size_t i = 0; i < wos.size(); ++i) out << "---|";
      out << '\n';
      for (Basis b : bases) {
        bool first = true;
        for (double r : rs) {
          out << "| " << (first ? basis_name(b) : std::string{}) << " | " << short_number(r) << " |";
          first = false;
          for (double w : wos) {
            auto it = lookup.find({b, r, w});
            if (it == lookup.end()) {
              out << " - |";
            } else if (metric == 0) {
              out << ' ' << it->second->median_valid_time << " |";
            } else {
              out << ' ' << sci(it->second->median_energy) << " |";
            }
          }
          out << '\n';
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace pinvar
