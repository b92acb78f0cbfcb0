#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace galerkin {

std::string sha1_hex(const std::string& data);
// git-style blob hash
std::string blob_hash(const std::string& data);
std::string file_blob_hash(const std::filesystem::path& p);

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string version = GALERKIN_VERSION;
    double wall_time = 0.0;
    std::vector<std::filesystem::path> outputs;
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const RunManifest& m, const std::filesystem::path& out_dir);
void write_text(const std::filesystem::path& p, const std::string& s);
std::string read_text(const std::filesystem::path& p);

// columns of equal length, ", " separated, 17 significant digits
std::string csv_table(const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns);

// least-squares slope and intercept of log y against log x
struct LogFit {
    double slope = 0.0;
    double intercept = 0.0;  // y ~ exp(intercept) x^slope
};
LogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace galerkin
