#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pinvar/integrate.hpp"
#include "pinvar/nvar.hpp"
#include "pinvar/state_function.hpp"
#include "pinvar/train.hpp"

namespace pinvar::io {

// Shortest decimal form that parses back to the same double; "inf",
// "-inf" and "nan" for non-finite values.
std::string format_double(double v);
double parse_double(std::string_view text);

// CSV with a "# "-prefixed JSON metadata block, then "t,x1,...,xd".
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data,
                       const nlohmann::json& extra_meta = nlohmann::json::object());
Dataset read_dataset_csv(const std::filesystem::path& path);
nlohmann::json read_csv_metadata(const std::filesystem::path& path);

std::string dataset_csv_string(const Dataset& data, const nlohmann::json& extra_meta);

nlohmann::json spec_to_json(const StateFunctionSpec& spec);
StateFunctionSpec spec_from_json(const nlohmann::json& j);

struct ModelFile {
  NvarModel model;
  std::string system;
  nlohmann::json training = nlohmann::json::object();
};

nlohmann::json model_to_json(const ModelFile& file);
ModelFile model_from_json(const nlohmann::json& j);
void write_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile read_model(const std::filesystem::path& path);

// Pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pinvar::io
