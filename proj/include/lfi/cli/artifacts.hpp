#pragma once

// Run-directory persistence: atomic file writes, matrix CSVs, and the run
// manifest. Every artifact is written to a temporary file and renamed, so a
// finalized manifest never sits next to a half-written file.

#include "lfi/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lfi::cli {

void ensure_dir(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

std::vector<std::string> indexed_columns(const std::string& prefix, int n);
std::string matrix_csv(const Mat& m, const std::vector<std::string>& columns);
Mat parse_matrix_csv(const std::string& text, std::vector<std::string>* columns = nullptr);

// Compile-time injected source id ("unknown" outside a git checkout).
std::string build_id();

inline constexpr int metrics_format_version = 1;
inline constexpr int results_csv_format_version = 1;

struct RunManifest {
    std::string status = "incomplete";  // "complete" once finalized
    std::string model;
    std::string method;
    std::uint64_t seed = 0;      // master seed as listed in the config
    std::uint64_t run_seed = 0;  // derived per-(method, seed) stream root
    std::string seed_scheme;
    std::string build;
    std::map<std::string, std::string> config;              // resolved snapshot
    std::map<std::string, int> format_versions;             // artifact formats
    std::map<std::string, std::vector<std::string>> files;  // dir -> file names
    double wall_time_s = 0.0;                               // filled at finalize

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const std::string& run_dir, const RunManifest& m);
RunManifest read_manifest(const std::string& run_dir);

}  // namespace lfi::cli
