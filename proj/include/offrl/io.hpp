#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "offrl/bounds.hpp"
#include "offrl/harness.hpp"
#include "offrl/mdp.hpp"
#include "offrl/ope.hpp"
#include "offrl/planners.hpp"
#include "offrl/sampling.hpp"

namespace offrl {

using Json = nlohmann::json;

/// Malformed input. `location` is "line L, column C" for syntax errors, a
/// JSON pointer for structural ones, or "line L" for CSV.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string source, std::string location, const std::string& message);

    const std::string& source() const { return source_; }
    const std::string& location() const { return location_; }

private:
    std::string source_;
    std::string location_;
};

/// Shortest decimal form that reads back to the same double.
std::string format_double(double x);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
/// Parses JSON text, mapping syntax errors to line/column.
Json parse_json(const std::string& text, const std::string& source);

Json to_json(const Mdp& m);
Mdp mdp_from_json(const Json& j, const std::string& source = "<mdp>");
void save_mdp(const std::filesystem::path& path, const Mdp& m);
Mdp load_mdp(const std::filesystem::path& path);

Json to_json(const Policy& pi);
Policy policy_from_json(const Json& j, const std::string& source = "<policy>");
void save_policy(const std::filesystem::path& path, const Policy& pi);
Policy load_policy(const std::filesystem::path& path);

std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text, const std::string& source = "<csv>");
std::string dataset_to_binary(const Dataset& d);
Dataset dataset_from_binary(const std::string& bytes, const std::string& source = "<binary>");
/// Format chosen by extension on save (.bin is binary) and by magic on load.
void save_dataset(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& path);

Json to_json(const BoundBreakdown& b);
/// Columns h, s, a, value.
std::string per_cell_csv(const SATable& per_cell);

Json to_json(const PlannerOutput& out);
Json to_json(const OpeResult& r);

Json to_json(const SweepConfig& cfg);
SweepConfig sweep_config_from_json(const Json& j, const std::string& source = "<config>");

Json to_json(const SweepResult& r);
SweepResult sweep_result_from_json(const Json& j, const std::string& source = "<sweep>");
std::string sweep_rows_csv(const SweepResult& r);

}  // namespace offrl
