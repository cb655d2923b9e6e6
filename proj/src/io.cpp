#include "pinvar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pinvar::io {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

std::string dataset_csv_string(const Dataset& data, const json& extra_meta) {
  json meta = json::object();
  meta["system"] = data.system_name;
  meta["t0"] = data.t0;
  meta["h"] = data.h;
  meta["N"] = data.size();
  meta["d"] = data.dim();
  json gen = json::object();
  gen["method"] = data.generator;
  for (const auto& [k, v] : data.generator_params) gen[k] = v;
  meta["generator"] = gen;
  for (const auto& [k, v] : extra_meta.items()) meta[k] = v;

  std::ostringstream out;
  std::istringstream lines(meta.dump(2));
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << 't';
  for (std::size_t i = 1; i <= data.dim(); ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 1; k <= data.size(); ++k) {
    out << format_double(data.time_at(k));
    for (double v : data.at(k)) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const json& extra_meta) {
  write_text(path, dataset_csv_string(data, extra_meta));
}

namespace {

struct CsvContents {
  json meta = json::object();
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(',', pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

CsvContents read_csv(const std::filesystem::path& path, bool rows_too) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  CsvContents c;
  std::string meta_text;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string_view body(line);
      body.remove_prefix(1);
      if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      meta_text.append(body);
      meta_text.push_back('\n');
      continue;
    }
    if (c.header.empty()) {
      for (auto f : split_commas(line)) c.header.emplace_back(f);
      if (!rows_too) break;
      continue;
    }
    auto fields = split_commas(line);
    if (fields.size() != c.header.size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(c.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {
      try {
        row.push_back(parse_double(f));
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    c.rows.push_back(std::move(row));
  }
  if (c.header.empty()) throw std::runtime_error("'" + path.string() + "' has no CSV header");
  if (!meta_text.empty()) {
    try {
      c.meta = json::parse(meta_text);
    } catch (const json::exception& e) {
      throw std::runtime_error("bad metadata block in '" + path.string() + "': " + e.what());
    }
  }
  return c;
}

}  // namespace

json read_csv_metadata(const std::filesystem::path& path) { return read_csv(path, false).meta; }

Dataset read_dataset_csv(const std::filesystem::path& path) {
  CsvContents c = read_csv(path, true);
  if (c.header.size() < 2 || c.header[0] != "t") {
    throw std::runtime_error("'" + path.string() + "' must start with a 't,x1,...' header");
  }
  const std::size_t d = c.header.size() - 1;
  if (c.rows.empty()) throw std::runtime_error("'" + path.string() + "' has no data rows");

  Dataset ds;
  ds.system_name = c.meta.value("system", std::string{});
  ds.points = Matrix(c.rows.size(), d);
  for (std::size_t k = 0; k < c.rows.size(); ++k)
    for (std::size_t i = 0; i < d; ++i) ds.points(k, i) = c.rows[k][i + 1];
  if (c.meta.contains("h")) {
    ds.h = c.meta["h"].get<double>();
    ds.t0 = c.meta.value("t0", c.rows[0][0]);
  } else {
    ds.t0 = c.rows[0][0];
    ds.h = c.rows.size() > 1 ? c.rows[1][0] - c.rows[0][0] : 0.0;
  }
  if (c.meta.contains("generator") && c.meta["generator"].is_object()) {
    for (const auto& [k, v] : c.meta["generator"].items()) {
      if (k == "method") ds.generator = v.get<std::string>();
      else if (v.is_number()) ds.generator_params.emplace_back(k, v.get<double>());
    }
  }
  return ds;
}

json spec_to_json(const StateFunctionSpec& spec) {
  json j;
  j["basis"] = basis_name(spec.basis);
  j["p"] = spec.embedding.p;
  j["s"] = spec.embedding.s;
  j["d"] = spec.embedding.d;
  json params = json::array();
  std::string kind;
  std::visit(
      [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        for (const auto& lam : v) {
          if constexpr (std::is_same_v<T, SmoothSupport>) {
            kind = "smooth";
            params.push_back({lam.sharpness, lam.radius, lam.center});
          } else if constexpr (std::is_same_v<T, PiecewiseSupport>) {
            kind = "piecewise";
            params.push_back({lam.a, lam.b, lam.c, lam.d});
          } else {
            kind = "chebyshev_clamp";
            params.push_back({lam.a, lam.b});
          }
        }
      },
      spec.support);
  j["support"] = {{"kind", kind}, {"params", params}};
  return j;
}

StateFunctionSpec spec_from_json(const json& j) {
  try {
    StateFunctionSpec spec;
    spec.basis = parse_basis(j.at("basis").get<std::string>());
    spec.embedding.p = j.at("p").get<std::size_t>();
    spec.embedding.s = j.at("s").get<std::size_t>();
    spec.embedding.d = j.at("d").get<std::size_t>();
    const auto& sup = j.at("support");
    const std::string kind = sup.at("kind").get<std::string>();
    const auto& params = sup.at("params");
    if (kind == "smooth") {
      std::vector<SmoothSupport> v;
      for (const auto& p : params) v.push_back({p.at(0).get<int>(), p.at(1).get<double>(), p.at(2).get<double>()});
      spec.support = v;
    } else if (kind == "piecewise") {
      std::vector<PiecewiseSupport> v;
      for (const auto& p : params)
        v.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()});
      spec.support = v;
    } else if (kind == "chebyshev_clamp") {
      std::vector<ChebyshevClamp> v;
      for (const auto& p : params) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      spec.support = v;
    } else {
      throw std::invalid_argument("unknown support kind '" + kind + "'");
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed state function spec: ") + e.what());
  }
}

json model_to_json(const ModelFile& file) {
  json j;
  j["format"] = "pinvar-model";
  j["version"] = 1;
  j["system"] = file.system;
  j["h"] = file.model.h;
  j["spec"] = spec_to_json(file.model.spec);
  j["m"] = file.model.m();
  j["W"] = std::vector<double>(file.model.W.flat().begin(), file.model.W.flat().end());
  j["training"] = file.training;
  return j;
}

ModelFile model_from_json(const json& j) {
  try {
    ModelFile f;
    f.system = j.at("system").get<std::string>();
    f.model.h = j.at("h").get<double>();
    f.model.spec = spec_from_json(j.at("spec"));
    auto w = j.at("W").get<std::vector<double>>();
    const std::size_t d = f.model.d();
    const std::size_t m = f.model.m();
    if (w.size() != d * m) {
      throw std::invalid_argument("model W has " + std::to_string(w.size()) + " entries, expected d*m = " +
                                  std::to_string(d * m));
    }
    f.model.W = Matrix(d, m);
    std::copy(w.begin(), w.end(), f.model.W.flat().begin());
    if (j.contains("training")) f.training = j["training"];
    f.model.validate();
    return f;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model file: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const ModelFile& file) { write_json(path, model_to_json(file)); }

ModelFile read_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

}  // namespace pinvar::io
