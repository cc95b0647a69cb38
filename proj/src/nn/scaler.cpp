#include "lfi/nn/scaler.hpp"

namespace lfi::nn {

StandardScaler StandardScaler::fit(const Mat& data, double sd_floor) {
    require(data.rows() >= 2, "StandardScaler::fit: need at least 2 rows");
    StandardScaler s;
    s.mean = data.colwise().mean();
    Mat centered = data.rowwise() - s.mean.transpose();
    s.sd = (centered.array().square().colwise().sum() / (static_cast<double>(data.rows()) - 1.0))
               .sqrt()
               .transpose();
    for (Eigen::Index k = 0; k < s.sd.size(); ++k)
        if (!(s.sd[k] > sd_floor)) s.sd[k] = 1.0;  // constant column: pass through centered
    return s;
}

StandardScaler StandardScaler::identity(int dim) {
    StandardScaler s;
    s.mean = Vec::Zero(dim);
    s.sd = Vec::Ones(dim);
    return s;
}

Mat StandardScaler::apply(const Mat& data) const {
    require(data.cols() == mean.size(), "StandardScaler::apply: dimension mismatch");
    Mat out = data.rowwise() - mean.transpose();
    out.array().rowwise() /= sd.transpose().array();
    return out;
}

Vec StandardScaler::apply_row(const Vec& row) const {
    require(row.size() == mean.size(), "StandardScaler::apply_row: dimension mismatch");
    return ((row - mean).array() / sd.array()).matrix();
}

}  // namespace lfi::nn
