#include "lfi/nn/checkpoint.hpp"

#include <cstdio>
#include <fstream>

namespace lfi::nn {

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json j;
    j["format_version"] = checkpoint_format_version;
    j["kind"] = "mlp";
    j["dims"] = net.dims();
    j["activation"] = activation_name(net.activation());
    j["params"] = std::vector<double>(net.params().begin(), net.params().end());
    return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != checkpoint_format_version)
        throw ConfigError("checkpoint: missing or unsupported format_version");
    if (j.at("kind").get<std::string>() != "mlp")
        throw ConfigError("checkpoint: expected kind 'mlp', got '" +
                          j.at("kind").get<std::string>() + "'");
    Mlp net(j.at("dims").get<std::vector<int>>(),
            activation_from_name(j.at("activation").get<std::string>()), 0);
    const auto params = j.at("params").get<std::vector<double>>();
    require(params.size() == net.params().size(), "checkpoint: parameter count mismatch");
    std::copy(params.begin(), params.end(), net.params().begin());
    return net;
}

void save_json(const nlohmann::json& j, const std::string& path) {
    // Write to a sibling temp file, then rename; partial checkpoints never
    // appear under the final name.
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot open for writing: " + tmp);
        out << j.dump(2) << '\n';
        if (!out) throw ConfigError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ConfigError("rename failed: " + tmp + " -> " + path);
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

nlohmann::json vec_to_json(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vec vec_from_json(const nlohmann::json& j) {
    const auto vals = j.get<std::vector<double>>();
    Vec v(static_cast<Eigen::Index>(vals.size()));
    std::copy(vals.begin(), vals.end(), v.data());
    return v;
}

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["data"] = std::vector<double>(m.data(), m.data() + m.size());
    return j;
}

Mat mat_from_json(const nlohmann::json& j) {
    Mat m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const auto vals = j.at("data").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(vals.size()) == m.size(), "mat_from_json: size mismatch");
    std::copy(vals.begin(), vals.end(), m.data());
    return m;
}

}  // namespace lfi::nn
