#include "lfi/mi/infomax.hpp"

#include "lfi/nn/checkpoint.hpp"

#include <algorithm>
#include <numeric>

namespace lfi::mi {

Vec StatisticModel::apply_row(const Vec& x) const {
    Mat m = apply(x.transpose());
    return m.row(0).transpose();
}

nlohmann::json statistic_to_json(const StatisticModel& model) {
    nlohmann::json j;
    j["format_version"] = nn::checkpoint_format_version;
    j["kind"] = "statistic";
    j["net"] = nn::mlp_to_json(model.net);
    j["scaler_mean"] = nn::vec_to_json(model.scaler.mean);
    j["scaler_sd"] = nn::vec_to_json(model.scaler.sd);
    return j;
}

StatisticModel statistic_from_json(const nlohmann::json& j) {
    if (j.at("kind").get<std::string>() != "statistic")
        throw ConfigError("statistic_from_json: wrong kind");
    StatisticModel m{nn::mlp_from_json(j.at("net")),
                     {nn::vec_from_json(j.at("scaler_mean")), nn::vec_from_json(j.at("scaler_sd"))}};
    require(m.scaler.mean.size() == m.net.input_dim(), "statistic_from_json: scaler/net mismatch");
    return m;
}

const char* estimator_name(MiEstimator e) {
    return e == MiEstimator::Jsd ? "jsd" : "dc";
}

MiEstimator estimator_from_name(const std::string& name) {
    if (name == "jsd") return MiEstimator::Jsd;
    if (name == "dc") return MiEstimator::Dc;
    throw ConfigError("unknown estimator: " + name + " (expected jsd or dc)");
}

int select_statistic_dim(int param_dim) {
    require(param_dim >= 1, "select_statistic_dim: param_dim must be positive");
    return 2 * param_dim;
}

// --- distance correlation -------------------------------------------------

namespace {

Mat pairwise_distances(const Mat& v) {
    const Eigen::Index n = v.rows();
    Mat d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = (v.row(i) - v.row(j)).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

Mat center_distance_matrix(const Mat& d) {
    const auto n = static_cast<double>(d.rows());
    const Vec rows = d.rowwise().sum();
    const Vec cols = d.colwise().sum();
    const double total = rows.sum();
    Mat out = d;
    out.colwise() -= (rows / (n - 2.0));
    out.rowwise() -= (cols / (n - 2.0)).transpose();
    out.array() += total / ((n - 1.0) * (n - 2.0));
    return out;
}

// Adjoint of the (linear) centering map; same algebraic form.
Mat center_adjoint(const Mat& g) {
    return center_distance_matrix(g);
}

struct DcParts {
    Mat a_centered, b_centered;
    double num = 0.0, da = 0.0, db = 0.0, value = 0.0;
};

DcParts dc_forward(const Mat& a, const Mat& b) {
    require(a.rows() == b.rows(), "distance_correlation: row count mismatch");
    require(a.rows() >= 4, "distance_correlation: need at least 4 rows");
    DcParts p;
    p.a_centered = center_distance_matrix(pairwise_distances(a));
    p.b_centered = center_distance_matrix(pairwise_distances(b));
    p.num = (p.a_centered.array() * p.b_centered.array()).sum();
    p.da = p.a_centered.array().square().sum();
    p.db = p.b_centered.array().square().sum();
    if (!(p.da > 1e-300) || !(p.db > 1e-300))
        throw NumericalError("distance_correlation: degenerate batch (zero centered variation)");
    p.value = p.num / std::sqrt(p.da * p.db);
    return p;
}

// dDC/d(b rows): through the quotient, the centering adjoint, and the
// pairwise distances.
Mat dc_grad_b(const DcParts& p, const Mat& b) {
    const Eigen::Index n = b.rows();
    const double s = std::sqrt(p.da * p.db);
    Mat g_bt = p.a_centered / s - (p.value / p.db) * p.b_centered;
    Mat g_b = center_adjoint(g_bt);

    Mat grad = Mat::Zero(n, b.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dist = (b.row(i) - b.row(j)).norm();
            if (dist <= 0.0) continue;  // nondifferentiable tie: subgradient 0
            const double w = g_b(i, j) + g_b(j, i);
            grad.row(i) += (w / dist) * (b.row(i) - b.row(j));
        }
    }
    return grad;
}

}  // namespace

double distance_correlation(const Mat& a, const Mat& b) { return dc_forward(a, b).value; }

Mat distance_correlation_grad_b(const Mat& a, const Mat& b) {
    return dc_grad_b(dc_forward(a, b), b);
}

// --- JSD objective ----------------------------------------------------------

namespace {

std::vector<nn::ParamBlock> blocks_of(nn::Mlp& net, const std::string& prefix) {
    std::vector<nn::ParamBlock> blocks;
    for (const auto& info : net.layout())
        blocks.push_back({prefix + "." + info.name, net.params().subspan(info.offset, info.size),
                          net.grads().subspan(info.offset, info.size)});
    return blocks;
}

std::vector<int> make_hidden_dims(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> dims;
    dims.push_back(in);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

}  // namespace

JsdInfomaxModel::JsdInfomaxModel(const Mat& thetas, const Mat& xs, const InfomaxConfig& cfg,
                                 std::uint64_t init_seed)
    : x_scaler_(StandardScaler::fit(xs)),
      theta_scaler_(StandardScaler::fit(thetas)),
      stat_net_(make_hidden_dims(static_cast<int>(xs.cols()), cfg.hidden,
                                 cfg.stat_dim > 0 ? cfg.stat_dim
                                                  : select_statistic_dim(static_cast<int>(thetas.cols()))),
                nn::Activation::Relu, mix_seed(init_seed, 1)),
      embed_net_(make_hidden_dims(static_cast<int>(thetas.cols()), cfg.hidden,
                                  static_cast<int>(thetas.cols())),
                 nn::Activation::Relu, mix_seed(init_seed, 2)),
      head_net_({stat_net_.output_dim() + static_cast<int>(thetas.cols()), 100, 1},
                nn::Activation::Relu, mix_seed(init_seed, 3)),
      m_perm_(cfg.m_perm) {
    require(thetas.rows() == xs.rows(), "JsdInfomaxModel: theta/x row mismatch");
    require(m_perm_ >= 1, "JsdInfomaxModel: m_perm must be positive");
    theta_std_ = theta_scaler_.apply(thetas);
    x_std_ = x_scaler_.apply(xs);
}

std::vector<nn::ParamBlock> JsdInfomaxModel::param_blocks() {
    auto blocks = blocks_of(stat_net_, "stat");
    auto embed = blocks_of(embed_net_, "embed");
    auto head = blocks_of(head_net_, "head");
    blocks.insert(blocks.end(), embed.begin(), embed.end());
    blocks.insert(blocks.end(), head.begin(), head.end());
    return blocks;
}

double JsdInfomaxModel::run(std::span<const int> rows, std::uint64_t perm_seed, bool with_grads) {
    const int n = static_cast<int>(rows.size());
    require(n >= 2, "jsd objective: need at least 2 rows in a batch");

    Mat theta_b = gather_rows(theta_std_, rows);
    Mat x_b = gather_rows(x_std_, rows);

    nn::Mlp::Trace trace_s, trace_h;
    Mat s_out = stat_net_.forward(x_b, trace_s);
    Mat h_out = embed_net_.forward(theta_b, trace_h);
    const int d = stat_net_.output_dim();
    const int k = embed_net_.output_dim();

    Mat grad_s, grad_h;
    if (with_grads) {
        grad_s = Mat::Zero(n, d);
        grad_h = Mat::Zero(n, k);
    }

    // joint pairs
    Mat joint(n, k + d);
    joint.leftCols(k) = h_out;
    joint.rightCols(d) = s_out;
    nn::Mlp::Trace trace_j;
    Mat t_joint = head_net_.forward(joint, trace_j);
    double joint_term = 0.0;
    for (int i = 0; i < n; ++i) joint_term -= softplus(-t_joint(i, 0));
    joint_term /= n;
    if (with_grads) {
        // d(-L)/dt_joint_i = -sigmoid(-t)/n
        Mat g(n, 1);
        for (int i = 0; i < n; ++i) g(i, 0) = -sigmoid(-t_joint(i, 0)) / n;
        Mat gj = head_net_.backward(trace_j, g);
        grad_h += gj.leftCols(k);
        grad_s += gj.rightCols(d);
    }

    // permuted pairings, processed in chunks to bound memory
    Rng perm_rng(perm_seed);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const int chunk = std::max(1, 8192 / std::max(n, 1));
    double marg_sum = 0.0;
    const double inv_mn = 1.0 / (static_cast<double>(m_perm_) * n);
    std::vector<int> chunk_perms;
    for (int m0 = 0; m0 < m_perm_; m0 += chunk) {
        const int mc = std::min(chunk, m_perm_ - m0);
        chunk_perms.clear();
        Mat pairs(static_cast<Eigen::Index>(mc) * n, k + d);
        for (int m = 0; m < mc; ++m) {
            std::shuffle(perm.begin(), perm.end(), perm_rng);
            for (int i = 0; i < n; ++i) {
                const Eigen::Index r = static_cast<Eigen::Index>(m) * n + i;
                pairs.row(r).head(k) = h_out.row(perm[i]);
                pairs.row(r).tail(d) = s_out.row(i);
                chunk_perms.push_back(perm[i]);
            }
        }
        nn::Mlp::Trace trace_p;
        Mat t_perm = head_net_.forward(pairs, trace_p);
        for (Eigen::Index r = 0; r < t_perm.rows(); ++r) marg_sum += softplus(t_perm(r, 0));
        if (with_grads) {
            // d(-L)/dt_perm = +sigmoid(t) / (m n)
            Mat g(t_perm.rows(), 1);
            for (Eigen::Index r = 0; r < t_perm.rows(); ++r)
                g(r, 0) = sigmoid(t_perm(r, 0)) * inv_mn;
            Mat gp = head_net_.backward(trace_p, g);
            for (int m = 0; m < mc; ++m) {
                for (int i = 0; i < n; ++i) {
                    const Eigen::Index r = static_cast<Eigen::Index>(m) * n + i;
                    grad_h.row(chunk_perms[static_cast<std::size_t>(m) * n + i]) +=
                        gp.row(r).head(k);
                    grad_s.row(i) += gp.row(r).tail(d);
                }
            }
        }
    }

    const double objective = joint_term - marg_sum * inv_mn;
    if (with_grads) {
        stat_net_.backward(trace_s, grad_s);
        embed_net_.backward(trace_h, grad_h);
    }
    return objective;
}

double JsdInfomaxModel::loss_grad(std::span<const int> rows, std::uint64_t noise_seed) {
    return -run(rows, noise_seed, true);
}

double JsdInfomaxModel::eval_loss(std::span<const int> rows, std::uint64_t noise_seed) {
    return -run(rows, noise_seed, false);
}

double JsdInfomaxModel::objective(std::span<const int> rows, std::uint64_t perm_seed) {
    return run(rows, perm_seed, false);
}

// --- DC objective -----------------------------------------------------------

DcInfomaxModel::DcInfomaxModel(const Mat& thetas, const Mat& xs, const InfomaxConfig& cfg,
                               std::uint64_t init_seed)
    : x_scaler_(StandardScaler::fit(xs)),
      theta_scaler_(StandardScaler::fit(thetas)),
      stat_net_(make_hidden_dims(static_cast<int>(xs.cols()), cfg.hidden,
                                 cfg.stat_dim > 0 ? cfg.stat_dim
                                                  : select_statistic_dim(static_cast<int>(thetas.cols()))),
                nn::Activation::Relu, mix_seed(init_seed, 1)) {
    require(thetas.rows() == xs.rows(), "DcInfomaxModel: theta/x row mismatch");
    theta_std_ = theta_scaler_.apply(thetas);
    x_std_ = x_scaler_.apply(xs);
}

std::vector<nn::ParamBlock> DcInfomaxModel::param_blocks() {
    return blocks_of(stat_net_, "stat");
}

double DcInfomaxModel::run(std::span<const int> rows, bool with_grads) {
    require(rows.size() >= 4, "dc objective: need at least 4 rows in a batch");
    Mat theta_b = gather_rows(theta_std_, rows);
    Mat x_b = gather_rows(x_std_, rows);

    nn::Mlp::Trace trace;
    Mat s_out = stat_net_.forward(x_b, trace);
    DcParts parts = dc_forward(theta_b, s_out);
    if (with_grads) {
        Mat g = -dc_grad_b(parts, s_out);  // minimize the negated correlation
        stat_net_.backward(trace, g);
    }
    return parts.value;
}

double DcInfomaxModel::loss_grad(std::span<const int> rows, std::uint64_t) {
    return -run(rows, true);
}

double DcInfomaxModel::eval_loss(std::span<const int> rows, std::uint64_t) {
    // Large validation sets are scored as the mean DC over consecutive
    // blocks, which bounds the n^2 distance matrices; the stopping signal is
    // what matters here, and block means are deterministic.
    const int n = static_cast<int>(rows.size());
    if (n <= eval_block_) return -run(rows, false);
    double acc = 0.0;
    int blocks = 0;
    for (int start = 0; start + 4 <= n; start += eval_block_) {
        const int len = std::min(eval_block_, n - start);
        if (len < 4) break;
        acc += run(rows.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(len)),
                   false);
        ++blocks;
    }
    return -acc / blocks;
}

double DcInfomaxModel::objective(std::span<const int> rows) { return run(rows, false); }

double jsd_loss_minibatch(JsdInfomaxModel& model, std::span<const int> rows,
                          std::uint64_t perm_seed) {
    return model.objective(rows, perm_seed);
}

double dc_loss_minibatch(DcInfomaxModel& model, std::span<const int> rows) {
    return model.objective(rows);
}

// --- training ---------------------------------------------------------------

namespace {

bool statistic_near_constant(const StatisticModel& model, const Mat& xs) {
    Mat s = model.apply(xs);
    StandardScaler sc;
    sc.mean = s.colwise().mean();
    Mat centered = s.rowwise() - sc.mean.transpose();
    const double max_sd =
        std::sqrt(centered.array().square().colwise().sum().maxCoeff() /
                  std::max<double>(1.0, static_cast<double>(s.rows()) - 1.0));
    return max_sd < 1e-10;
}

}  // namespace

namespace {

void maybe_warm_start(nn::Mlp& stat_net, const StatisticModel* warm_start) {
    if (warm_start == nullptr) return;
    const nn::Mlp& prev = warm_start->net;
    require(prev.dims() == stat_net.dims(), "train_statistic: warm-start network shape mismatch");
    stat_net = prev;
}

}  // namespace

TrainedStatistic train_statistic(const Mat& thetas, const Mat& xs, const InfomaxConfig& cfg,
                                 const StatisticModel* warm_start) {
    require(thetas.rows() == xs.rows(), "train_statistic: theta/x row mismatch");
    require(thetas.rows() >= 20, "train_statistic: need at least 20 simulations");

    nn::TrainConfig tcfg = cfg.train;
    if (cfg.estimator == MiEstimator::Dc) tcfg.min_batch_rows = std::max(tcfg.min_batch_rows, 4);

    auto assemble = [&](nn::Mlp&& net, const StandardScaler& scaler, nn::TrainLog&& log) {
        TrainedStatistic out{StatisticModel{std::move(net), scaler}, std::move(log),
                             cfg.estimator, 0.0, false};
        out.best_objective = -out.log.best_val;
        out.near_constant = statistic_near_constant(out.model, xs);
        return out;
    };

    if (cfg.estimator == MiEstimator::Jsd) {
        JsdInfomaxModel model(thetas, xs, cfg, mix_seed(tcfg.seed, stream::init));
        maybe_warm_start(model.stat_net(), warm_start);
        auto log = nn::train_early_stop(model, tcfg);
        return assemble(std::move(model.stat_net()), model.x_scaler(), std::move(log));
    }
    DcInfomaxModel model(thetas, xs, cfg, mix_seed(tcfg.seed, stream::init));
    maybe_warm_start(model.stat_net(), warm_start);
    auto log = nn::train_early_stop(model, tcfg);
    return assemble(std::move(model.stat_net()), model.x_scaler(), std::move(log));
}

RegressionBaseline train_mean_regression_baseline(const Mat& thetas, const Mat& xs,
                                                  const std::vector<int>& hidden,
                                                  const nn::TrainConfig& cfg) {
    require(thetas.rows() == xs.rows(), "train_mean_regression_baseline: row mismatch");
    StandardScaler scaler = StandardScaler::fit(xs);
    Mat x_std = scaler.apply(xs);
    nn::Mlp net(make_hidden_dims(static_cast<int>(xs.cols()), hidden,
                                 static_cast<int>(thetas.cols())),
                nn::Activation::Relu, mix_seed(cfg.seed, stream::init, 17));
    RegressionBaseline out{StatisticModel{std::move(net), scaler}, {}};
    out.log = nn::train_mlp(out.model.net, x_std, thetas, nn::LossKind::MeanSquaredError, cfg);
    return out;
}

}  // namespace lfi::mi
