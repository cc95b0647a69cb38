#include "lfi/cli/artifacts.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef LFI_BUILD_ID
#define LFI_BUILD_ID "unknown"
#endif

namespace lfi::cli {

namespace fs = std::filesystem;

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw ConfigError("cannot create directory " + path + ": " + ec.message());
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp);
        out << content;
        if (!out) throw ConfigError("short write: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw ConfigError("cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> indexed_columns(const std::string& prefix, int n) {
    std::vector<std::string> cols;
    cols.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cols.push_back(prefix + "_" + std::to_string(i));
    return cols;
}

std::string matrix_csv(const Mat& m, const std::vector<std::string>& columns) {
    require(static_cast<Eigen::Index>(columns.size()) == m.cols(),
            "matrix_csv: column label count mismatch");
    std::ostringstream out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c > 0) out << ',';
        out << columns[c];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    return out.str();
}

Mat parse_matrix_csv(const std::string& text, std::vector<std::string>* columns) {
    std::istringstream in(text);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "matrix csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> cols;
    {
        std::istringstream hs(line);
        std::string f;
        while (std::getline(hs, f, ',')) cols.push_back(f);
    }
    require(!cols.empty(), "matrix csv: empty header");
    if (columns != nullptr) *columns = cols;

    std::vector<double> values;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f;
        std::size_t count = 0;
        while (std::getline(ls, f, ',')) {
            values.push_back(std::stod(f));
            ++count;
        }
        require(count == cols.size(), "matrix csv: malformed row: " + line);
        ++rows;
    }
    Mat m(rows, static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = values[static_cast<std::size_t>(i * m.cols() + j)];
    return m;
}

std::string build_id() { return LFI_BUILD_ID; }

nlohmann::json RunManifest::to_json() const {
    return {{"status", status},
            {"model", model},
            {"method", method},
            {"seed", seed},
            {"run_seed", run_seed},
            {"seed_scheme", seed_scheme},
            {"build", build},
            {"config", config},
            {"format_versions", format_versions},
            {"files", files},
            {"wall_time_s", wall_time_s}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.status = j.at("status").get<std::string>();
    m.model = j.at("model").get<std::string>();
    m.method = j.at("method").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.run_seed = j.at("run_seed").get<std::uint64_t>();
    m.seed_scheme = j.at("seed_scheme").get<std::string>();
    m.build = j.at("build").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.format_versions = j.at("format_versions").get<std::map<std::string, int>>();
    m.files = j.at("files").get<std::map<std::string, std::vector<std::string>>>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    return m;
}

void write_manifest(const std::string& run_dir, const RunManifest& m) {
    write_file_atomic(run_dir + "/manifest.json", m.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::string& run_dir) {
    return RunManifest::from_json(nlohmann::json::parse(read_file(run_dir + "/manifest.json")));
}

}  // namespace lfi::cli
