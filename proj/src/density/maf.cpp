#include "lfi/density/maf.hpp"

#include "lfi/nn/checkpoint.hpp"

#include <algorithm>
#include <cmath>

namespace lfi::density {

namespace {

// Hidden-unit degrees cycle over 0..d-1. Degree-0 units see no data input
// (only the conditioner) but may feed every output, which is what lets
// mu_1/alpha_1 depend on theta. For d = 1 every hidden unit has degree 0 and
// the single output is a function of theta alone, as required.
std::vector<int> hidden_degrees(int h, int d) {
    std::vector<int> deg(h);
    for (int j = 0; j < h; ++j) deg[j] = j % d;
    return deg;
}

}  // namespace

MafModel::MafModel(int data_dim, int cond_dim, const MafConfig& cfg, std::uint64_t init_seed)
    : d_(data_dim), k_(cond_dim), h_(cfg.hidden) {
    require(d_ >= 1, "MafModel: data_dim must be positive");
    require(k_ >= 0, "MafModel: cond_dim must be nonnegative");
    require(cfg.n_flows >= 1 && cfg.hidden >= 1, "MafModel: bad architecture");

    const auto mdeg = hidden_degrees(h_, d_);
    std::size_t total = 0;
    auto block = [&](int flow, const char* piece, std::size_t size) {
        layout_.push_back({"flow" + std::to_string(flow) + "." + piece, total, size});
        const std::size_t off = total;
        total += size;
        return off;
    };

    for (int fk = 0; fk < cfg.n_flows; ++fk) {
        Flow f;
        f.degrees.resize(d_);
        for (int i = 0; i < d_; ++i) f.degrees[i] = (fk % 2 == 0) ? i + 1 : d_ - i;

        f.mask_in = Mat::Zero(h_, d_);
        for (int j = 0; j < h_; ++j)
            for (int i = 0; i < d_; ++i)
                if (mdeg[j] >= f.degrees[i]) f.mask_in(j, i) = 1.0;
        f.mask_hid = Mat::Zero(h_, h_);
        for (int r = 0; r < h_; ++r)
            for (int c = 0; c < h_; ++c)
                if (mdeg[r] >= mdeg[c]) f.mask_hid(r, c) = 1.0;
        f.mask_out = Mat::Zero(d_, h_);
        for (int i = 0; i < d_; ++i)
            for (int c = 0; c < h_; ++c)
                if (f.degrees[i] > mdeg[c]) f.mask_out(i, c) = 1.0;

        f.w1 = block(fk, "W1", static_cast<std::size_t>(h_) * d_);
        f.u1 = block(fk, "U1", static_cast<std::size_t>(h_) * std::max(k_, 1));
        f.b1 = block(fk, "b1", h_);
        f.w2 = block(fk, "W2", static_cast<std::size_t>(h_) * h_);
        f.u2 = block(fk, "U2", static_cast<std::size_t>(h_) * std::max(k_, 1));
        f.b2 = block(fk, "b2", h_);
        f.wmu = block(fk, "Wmu", static_cast<std::size_t>(d_) * h_);
        f.bmu = block(fk, "bmu", d_);
        f.walpha = block(fk, "Walpha", static_cast<std::size_t>(d_) * h_);
        f.balpha = block(fk, "balpha", d_);
        flows_.push_back(std::move(f));
    }
    params_.assign(total, 0.0);
    grads_.assign(total, 0.0);

    Rng rng = make_rng(init_seed, stream::init);
    auto fill = [&](std::size_t off, std::size_t size, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < size; ++i) params_[off + i] = u(rng);
    };
    for (auto& f : flows_) {
        fill(f.w1, static_cast<std::size_t>(h_) * d_, std::sqrt(6.0 / (d_ + h_)));
        if (k_ > 0) fill(f.u1, static_cast<std::size_t>(h_) * k_, std::sqrt(6.0 / (k_ + h_)));
        fill(f.b1, h_, 1.0 / std::sqrt(static_cast<double>(d_ + k_)));
        fill(f.w2, static_cast<std::size_t>(h_) * h_, std::sqrt(6.0 / (h_ + h_)));
        if (k_ > 0) fill(f.u2, static_cast<std::size_t>(h_) * k_, std::sqrt(6.0 / (k_ + h_)));
        fill(f.b2, h_, 1.0 / std::sqrt(static_cast<double>(h_ + k_)));
        // shift/log-scale heads stay zero: the fresh flow is the identity
        pmat(f.w1, h_, d_).array() *= f.mask_in.array();
        pmat(f.w2, h_, h_).array() *= f.mask_hid.array();
    }
}

Eigen::Map<const Mat> MafModel::cmat(std::size_t off, int rows, int cols) const {
    return Eigen::Map<const Mat>(params_.data() + off, rows, cols);
}

Eigen::Map<Mat> MafModel::pmat(std::size_t off, int rows, int cols) {
    return Eigen::Map<Mat>(params_.data() + off, rows, cols);
}

Eigen::Map<Mat> MafModel::gmat(std::size_t off, int rows, int cols) {
    return Eigen::Map<Mat>(grads_.data() + off, rows, cols);
}

const std::vector<int>& MafModel::flow_degrees(int k) const {
    require(k >= 0 && k < n_flows(), "MafModel::flow_degrees: flow index out of range");
    return flows_[static_cast<std::size_t>(k)].degrees;
}

void MafModel::flow_apply(const Flow& f, const Mat& v, const Mat& cond, FlowTrace* trace,
                          Mat& mu, Mat& alpha) const {
    Mat pre1 = v * (f.mask_in.array() * cmat(f.w1, h_, d_).array()).matrix().transpose();
    if (k_ > 0) pre1.noalias() += cond * cmat(f.u1, h_, k_).transpose();
    pre1.rowwise() += cmat(f.b1, 1, h_).row(0);
    Mat h1 = pre1.array().tanh().matrix();

    Mat pre2 = h1 * (f.mask_hid.array() * cmat(f.w2, h_, h_).array()).matrix().transpose();
    if (k_ > 0) pre2.noalias() += cond * cmat(f.u2, h_, k_).transpose();
    pre2.rowwise() += cmat(f.b2, 1, h_).row(0);
    Mat h2 = pre2.array().tanh().matrix();

    mu = h2 * (f.mask_out.array() * cmat(f.wmu, d_, h_).array()).matrix().transpose();
    mu.rowwise() += cmat(f.bmu, 1, d_).row(0);
    Mat alpha_raw = h2 * (f.mask_out.array() * cmat(f.walpha, d_, h_).array()).matrix().transpose();
    alpha_raw.rowwise() += cmat(f.balpha, 1, d_).row(0);
    alpha = alpha_raw.array().min(maf_log_scale_clamp).max(-maf_log_scale_clamp).matrix();

    if (trace) {
        trace->v = v;
        trace->h1 = std::move(h1);
        trace->h2 = std::move(h2);
        trace->alpha_raw = std::move(alpha_raw);
        trace->alpha = alpha;
    }
}

Mat MafModel::flow_forward(int k, const Mat& v, const Mat& cond) const {
    require(v.cols() == d_ && cond.cols() == k_ && v.rows() == cond.rows(),
            "MafModel: dimension mismatch");
    const auto& f = flows_[static_cast<std::size_t>(k)];
    Mat mu, alpha;
    flow_apply(f, v, cond, nullptr, mu, alpha);
    return ((v - mu).array() * (-alpha).array().exp()).matrix();
}

Mat MafModel::forward_u(const Mat& s, const Mat& cond) const {
    Mat v = s;
    for (int k = 0; k < n_flows(); ++k) v = flow_forward(k, v, cond);
    return v;
}

Vec MafModel::log_density(const Mat& s, const Mat& cond) const {
    require(s.cols() == d_ && cond.cols() == k_ && s.rows() == cond.rows(),
            "MafModel::log_density: dimension mismatch");
    Mat v = s;
    Vec logdet = Vec::Zero(s.rows());
    for (int k = 0; k < n_flows(); ++k) {
        const auto& f = flows_[static_cast<std::size_t>(k)];
        Mat mu, alpha;
        flow_apply(f, v, cond, nullptr, mu, alpha);
        v = ((v - mu).array() * (-alpha).array().exp()).matrix();
        if (!v.allFinite())
            throw NumericalError("maf: non-finite value at flow " + std::to_string(k));
        logdet -= alpha.rowwise().sum();
    }
    return (-0.5 * v.array().square().rowwise().sum() -
            0.5 * d_ * std::log(2.0 * pi_v) + logdet.array())
        .matrix();
}

Mat MafModel::inverse(const Mat& u, const Mat& cond) const {
    require(u.cols() == d_ && cond.cols() == k_ && u.rows() == cond.rows(),
            "MafModel::inverse: dimension mismatch");
    Mat v = u;
    for (int k = n_flows() - 1; k >= 0; --k) {
        const auto& f = flows_[static_cast<std::size_t>(k)];
        const Mat target = v;
        // fill coordinates in degree order; each pass fixes one coordinate
        for (int t = 1; t <= d_; ++t) {
            Mat mu, alpha;
            flow_apply(f, v, cond, nullptr, mu, alpha);
            for (int i = 0; i < d_; ++i) {
                if (f.degrees[i] != t) continue;
                v.col(i) = (target.col(i).array() * alpha.col(i).array().exp() +
                            mu.col(i).array())
                               .matrix();
            }
        }
    }
    return v;
}

double MafModel::nll_grad(const Mat& s, const Mat& cond) {
    require(s.cols() == d_ && cond.cols() == k_ && s.rows() == cond.rows(),
            "MafModel::nll_grad: dimension mismatch");
    const int n = static_cast<int>(s.rows());
    require(n >= 1, "MafModel::nll_grad: empty batch");
    const double inv_n = 1.0 / n;

    std::vector<FlowTrace> traces(flows_.size());
    Mat v = s;
    double alpha_sum = 0.0;
    for (std::size_t k = 0; k < flows_.size(); ++k) {
        Mat mu, alpha;
        flow_apply(flows_[k], v, cond, &traces[k], mu, alpha);
        v = ((v - mu).array() * (-alpha).array().exp()).matrix();
        if (!v.allFinite())
            throw NumericalError("maf: non-finite value at flow " + std::to_string(k));
        traces[k].u = v;
        alpha_sum += alpha.sum();
    }
    const double loss =
        inv_n * (0.5 * v.squaredNorm() + alpha_sum) + 0.5 * d_ * std::log(2.0 * pi_v);

    Mat g = v * inv_n;  // dL/du of the last flow
    for (int k = n_flows() - 1; k >= 0; --k) {
        const auto& f = flows_[static_cast<std::size_t>(k)];
        const auto& tr = traces[static_cast<std::size_t>(k)];
        Mat escale = (-tr.alpha).array().exp().matrix();

        Mat galpha = (-g.array() * tr.u.array() + inv_n).matrix();
        // clamp is flat outside the band
        galpha.array() *= (tr.alpha_raw.array().abs() < maf_log_scale_clamp).cast<double>();
        Mat gmu = -(g.array() * escale.array()).matrix();

        Mat masked_wmu = (f.mask_out.array() * cmat(f.wmu, d_, h_).array()).matrix();
        Mat masked_walpha = (f.mask_out.array() * cmat(f.walpha, d_, h_).array()).matrix();
        gmat(f.wmu, d_, h_).array() +=
            (gmu.transpose() * tr.h2).array() * f.mask_out.array();
        gmat(f.bmu, 1, d_) += gmu.colwise().sum();
        gmat(f.walpha, d_, h_).array() +=
            (galpha.transpose() * tr.h2).array() * f.mask_out.array();
        gmat(f.balpha, 1, d_) += galpha.colwise().sum();

        Mat gh2 = gmu * masked_wmu + galpha * masked_walpha;
        Mat gpre2 = (gh2.array() * (1.0 - tr.h2.array().square())).matrix();
        Mat masked_w2 = (f.mask_hid.array() * cmat(f.w2, h_, h_).array()).matrix();
        gmat(f.w2, h_, h_).array() +=
            (gpre2.transpose() * tr.h1).array() * f.mask_hid.array();
        if (k_ > 0) gmat(f.u2, h_, k_).noalias() += gpre2.transpose() * cond;
        gmat(f.b2, 1, h_) += gpre2.colwise().sum();

        Mat gh1 = gpre2 * masked_w2;
        Mat gpre1 = (gh1.array() * (1.0 - tr.h1.array().square())).matrix();
        Mat masked_w1 = (f.mask_in.array() * cmat(f.w1, h_, d_).array()).matrix();
        gmat(f.w1, h_, d_).array() +=
            (gpre1.transpose() * tr.v).array() * f.mask_in.array();
        if (k_ > 0) gmat(f.u1, h_, k_).noalias() += gpre1.transpose() * cond;
        gmat(f.b1, 1, h_) += gpre1.colwise().sum();

        g = (g.array() * escale.array()).matrix() + gpre1 * masked_w1;
    }
    return loss;
}

// ----------------------------------------------------- fitted density ----

Vec MafDensity::log_density(const Mat& s, const Mat& cond) const {
    Vec ll = flow.log_density(s_scaler.apply(s), cond_scaler.apply(cond));
    ll.array() += s_scaler.log_jacobian();
    return ll;
}

double MafDensity::log_density_row(const Vec& s, const Vec& cond) const {
    Mat sm = s.transpose();
    Mat cm = cond.transpose();
    return log_density(sm, cm)[0];
}

nlohmann::json maf_to_json(const MafDensity& m) {
    nlohmann::json j;
    j["format_version"] = nn::checkpoint_format_version;
    j["kind"] = "maf";
    j["data_dim"] = m.flow.data_dim();
    j["cond_dim"] = m.flow.cond_dim();
    j["n_flows"] = m.flow.n_flows();
    j["hidden"] = m.flow.hidden_dim();
    j["params"] = std::vector<double>(m.flow.params().begin(), m.flow.params().end());
    j["s_mean"] = nn::vec_to_json(m.s_scaler.mean);
    j["s_sd"] = nn::vec_to_json(m.s_scaler.sd);
    j["cond_mean"] = nn::vec_to_json(m.cond_scaler.mean);
    j["cond_sd"] = nn::vec_to_json(m.cond_scaler.sd);
    return j;
}

MafDensity maf_from_json(const nlohmann::json& j) {
    if (j.value("format_version", -1) != nn::checkpoint_format_version)
        throw ConfigError("maf checkpoint: unsupported format version");
    if (j.value("kind", "") != "maf") throw ConfigError("maf checkpoint: wrong model kind");
    MafConfig cfg;
    cfg.n_flows = j.at("n_flows").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    MafModel flow(j.at("data_dim").get<int>(), j.at("cond_dim").get<int>(), cfg, 0);
    const auto params = j.at("params").get<std::vector<double>>();
    require(params.size() == flow.params().size(), "maf checkpoint: parameter count mismatch");
    std::copy(params.begin(), params.end(), flow.params().begin());
    nn::StandardScaler s_sc{nn::vec_from_json(j.at("s_mean")), nn::vec_from_json(j.at("s_sd"))};
    nn::StandardScaler c_sc{nn::vec_from_json(j.at("cond_mean")),
                            nn::vec_from_json(j.at("cond_sd"))};
    return MafDensity{std::move(flow), std::move(s_sc), std::move(c_sc)};
}

// ------------------------------------------------------------ trainer ----

MafNllModel::MafNllModel(const Mat& conds, const Mat& s, const MafConfig& cfg,
                         std::uint64_t init_seed)
    : s_scaler_(nn::StandardScaler::fit(s)),
      cond_scaler_(nn::StandardScaler::fit(conds)),
      s_std_(s_scaler_.apply(s)),
      cond_std_(cond_scaler_.apply(conds)),
      flow_(static_cast<int>(s.cols()), static_cast<int>(conds.cols()), cfg, init_seed) {
    require(conds.rows() == s.rows(), "MafNllModel: row count mismatch");
}

std::vector<nn::ParamBlock> MafNllModel::param_blocks() {
    std::vector<nn::ParamBlock> blocks;
    auto params = flow_.params();
    auto grads = flow_.grads();
    for (const auto& b : flow_.layout())
        blocks.push_back({b.name, params.subspan(b.offset, b.size),
                          grads.subspan(b.offset, b.size)});
    return blocks;
}

double MafNllModel::loss_grad(std::span<const int> rows, std::uint64_t) {
    flow_.zero_grad();
    return flow_.nll_grad(gather_rows(s_std_, rows), gather_rows(cond_std_, rows));
}

double MafNllModel::eval_loss(std::span<const int> rows, std::uint64_t) {
    return -flow_.log_density(gather_rows(s_std_, rows), gather_rows(cond_std_, rows)).mean();
}

MafFitResult maf_fit(const Mat& conds, const Mat& s, const MafFitConfig& cfg) {
    MafNllModel model(conds, s, cfg.arch, mix_seed(cfg.train.seed, stream::init));
    nn::TrainLog log = nn::train_early_stop(model, cfg.train);
    return MafFitResult{MafDensity{std::move(model.flow()), model.s_scaler(),
                                   model.cond_scaler()},
                        std::move(log)};
}

}  // namespace lfi::density
