#pragma once
// Structured-text configuration: `key = value` lines grouped under `[table]`
// headers, `#` comments, numbers, booleans, quoted strings and (nested,
// possibly multi-line) arrays. Parsed into a JSON document.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvfield/alignment.hpp"
#include "rvfield/models.hpp"

namespace rvf {

using Json = nlohmann::ordered_json;

// Throws ConfigError with the offending line number.
Json parse_config(const std::string& text);
// Throws IoError when the file cannot be read.
Json load_config_file(const std::filesystem::path& path);

// Typed view on one table of a parsed config. Every value that is read,
// including defaults, is recorded in `resolved()`.
class ConfigView {
public:
    explicit ConfigView(Json table) : table_(std::move(table)) {}

    bool has(const std::string& key) const { return table_.contains(key); }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt);
    std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt);
    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt);
    bool flag(const std::string& key, std::optional<bool> fallback = std::nullopt);
    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt);
    std::vector<std::int64_t> integers(const std::string& key,
                                       std::optional<std::vector<std::int64_t>> fallback = std::nullopt);

    // Records a value that was resolved outside the config (flags, paths).
    void set_resolved(const std::string& key, Json value) { resolved_[key] = std::move(value); }
    const Json& resolved() const { return resolved_; }

private:
    const Json& require(const std::string& key) const;

    Json table_;
    Json resolved_ = Json::object();
};

// Model files. Throws IoError when unreadable, InvalidModel when a required
// key is missing or malformed.
MAModel ma_model_from_json(const Json& doc);
ScoreModel score_model_from_json(const Json& doc);
MAModel load_ma_model(const std::filesystem::path& path);
ScoreModel load_score_model(const std::filesystem::path& path);

Json to_json(const MAModel& model);
Json to_json(const ScoreModel& model);
Json to_json(const GumbelParams& params);
GumbelParams gumbel_params_from_json(const Json& doc);

}  // namespace rvf
