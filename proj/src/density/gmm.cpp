#include "lfi/density/gmm.hpp"

#include "lfi/nn/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfi::density {

namespace {

// Symmetrize and floor eigenvalues; returns true if the floor fired.
bool floor_eigenvalues(Mat& cov, double floor) {
    Eigen::MatrixXd c = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    require(es.info() == Eigen::Success, "gmm: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    bool fired = false;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < floor) {
            ev[i] = floor;
            fired = true;
        }
    }
    c = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    cov = 0.5 * (c + c.transpose());
    return fired;
}

int sample_proportional(const Vec& weights, Rng& rng) {
    const double total = weights.sum();
    require(total > 0.0, "gmm: cannot sample from all-zero weights");
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        target -= weights[i];
        if (target <= 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace

void GmmModel::refresh_cache() {
    const int k = component_count();
    const int d = dim();
    chol_.clear();
    log_norm_ = Vec(k);
    for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd cov = covs[static_cast<std::size_t>(c)];
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw NumericalError("gmm: covariance of component " + std::to_string(c) +
                                 " is not positive definite");
        Mat l = llt.matrixL();
        double log_det_half = 0.0;
        for (int i = 0; i < d; ++i) log_det_half += std::log(l(i, i));
        log_norm_[c] = -0.5 * d * std::log(2.0 * pi_v) - log_det_half;
        chol_.push_back(std::move(l));
    }
}

double GmmModel::component_log_density(int c, const Vec& x) const {
    require(!chol_.empty(), "gmm: cache not built; call refresh_cache()");
    require(x.size() == dim(), "gmm: dimension mismatch");
    const Vec diff = x - means[static_cast<std::size_t>(c)];
    const Vec w =
        chol_[static_cast<std::size_t>(c)].triangularView<Eigen::Lower>().solve(diff);
    return log_norm_[c] - 0.5 * w.squaredNorm();
}

double GmmModel::log_density(const Vec& x) const {
    std::vector<double> terms(static_cast<std::size_t>(component_count()));
    for (int c = 0; c < component_count(); ++c)
        terms[static_cast<std::size_t>(c)] = std::log(weights[c]) + component_log_density(c, x);
    return log_sum_exp(terms);
}

Vec GmmModel::log_density_batch(const Mat& xs) const {
    Vec out(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = log_density(xs.row(i).transpose());
    return out;
}

Vec GmmModel::sample(Rng& rng) const {
    require(!chol_.empty(), "gmm: cache not built; call refresh_cache()");
    const int c = sample_proportional(weights, rng);
    std::normal_distribution<double> n(0.0, 1.0);
    Vec z(dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n(rng);
    return means[static_cast<std::size_t>(c)] + chol_[static_cast<std::size_t>(c)] * z;
}

GmmModel gmm_fit_em(const Mat& samples, int k, std::uint64_t seed, const GmmEmConfig& cfg) {
    const int n = static_cast<int>(samples.rows());
    const int d = static_cast<int>(samples.cols());
    require(k >= 1, "gmm_fit_em: need at least one component");
    require(n > k * (d + 1), "gmm_fit_em: too few samples for the component count");

    Rng rng = make_rng(seed, stream::density);

    // k-means++ seeding
    std::vector<int> centers;
    {
        std::uniform_int_distribution<int> first(0, n - 1);
        centers.push_back(first(rng));
        Vec dist2(n);
        for (int i = 0; i < n; ++i)
            dist2[i] = (samples.row(i) - samples.row(centers[0])).squaredNorm();
        while (static_cast<int>(centers.size()) < k) {
            if (dist2.sum() <= 0.0)
                throw NumericalError("gmm_fit_em: fewer distinct samples than components");
            const int idx = sample_proportional(dist2, rng);
            centers.push_back(idx);
            for (int i = 0; i < n; ++i)
                dist2[i] = std::min(dist2[i], (samples.row(i) - samples.row(idx)).squaredNorm());
        }
    }

    // one hard assignment for the initial parameters
    std::vector<int> label(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double d2 = (samples.row(i) - samples.row(centers[static_cast<std::size_t>(c)]))
                                  .squaredNorm();
            if (d2 < best) {
                best = d2;
                label[static_cast<std::size_t>(i)] = c;
            }
        }
    }

    const Vec global_mean = samples.colwise().mean().transpose();
    Mat centered_all = samples.rowwise() - global_mean.transpose();
    Mat global_cov = centered_all.transpose() * centered_all / static_cast<double>(n);

    GmmModel m;
    m.weights = Vec(k);
    m.means.resize(static_cast<std::size_t>(k));
    m.covs.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        std::vector<int> rows;
        for (int i = 0; i < n; ++i)
            if (label[static_cast<std::size_t>(i)] == c) rows.push_back(i);
        m.weights[c] = std::max<double>(static_cast<double>(rows.size()), 1.0) / n;
        if (static_cast<int>(rows.size()) < d + 2) {
            m.means[static_cast<std::size_t>(c)] =
                samples.row(centers[static_cast<std::size_t>(c)]).transpose();
            m.covs[static_cast<std::size_t>(c)] = global_cov;
        } else {
            Mat sub = gather_rows(samples, rows);
            const Vec mu = sub.colwise().mean().transpose();
            Mat cen = sub.rowwise() - mu.transpose();
            m.means[static_cast<std::size_t>(c)] = mu;
            m.covs[static_cast<std::size_t>(c)] =
                cen.transpose() * cen / static_cast<double>(rows.size());
        }
        if (floor_eigenvalues(m.covs[static_cast<std::size_t>(c)], cfg.eigen_floor))
            m.jitter_applied = true;
    }
    m.weights /= m.weights.sum();
    m.refresh_cache();

    Mat resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        // E step, evaluated at the current parameters
        double ll_sum = 0.0;
        std::vector<double> terms(static_cast<std::size_t>(k));
        for (int i = 0; i < n; ++i) {
            const Vec x = samples.row(i).transpose();
            for (int c = 0; c < k; ++c)
                terms[static_cast<std::size_t>(c)] =
                    std::log(m.weights[c]) + m.component_log_density(c, x);
            const double lse = log_sum_exp(terms);
            ll_sum += lse;
            for (int c = 0; c < k; ++c)
                resp(i, c) = std::exp(terms[static_cast<std::size_t>(c)] - lse);
        }
        const double ll = ll_sum / n;
        m.ll_trace.push_back(ll);
        if (iter > 0 && ll - prev_ll < cfg.tol) break;
        prev_ll = ll;

        // M step
        const Vec nc = resp.colwise().sum().transpose();
        for (int c = 0; c < k; ++c) {
            if (!(nc[c] > 0.0)) continue;  // component lost all mass; keep it frozen
            m.weights[c] = nc[c] / n;
            const Vec mu = (resp.col(c).transpose() * samples).transpose() / nc[c];
            Mat cen = samples.rowwise() - mu.transpose();
            Mat cov = cen.transpose() * (resp.col(c).asDiagonal() * cen) / nc[c];
            if (floor_eigenvalues(cov, cfg.eigen_floor)) m.jitter_applied = true;
            m.means[static_cast<std::size_t>(c)] = mu;
            m.covs[static_cast<std::size_t>(c)] = std::move(cov);
        }
        m.weights /= m.weights.sum();
        m.refresh_cache();
    }
    return m;
}

nlohmann::json gmm_to_json(const GmmModel& m) {
    nlohmann::json j;
    j["format_version"] = nn::checkpoint_format_version;
    j["kind"] = "gmm";
    j["weights"] = nn::vec_to_json(m.weights);
    j["means"] = nlohmann::json::array();
    j["covs"] = nlohmann::json::array();
    for (const auto& mu : m.means) j["means"].push_back(nn::vec_to_json(mu));
    for (const auto& c : m.covs) j["covs"].push_back(nn::mat_to_json(c));
    return j;
}

GmmModel gmm_from_json(const nlohmann::json& j) {
    if (j.value("format_version", -1) != nn::checkpoint_format_version)
        throw ConfigError("gmm checkpoint: unsupported format version");
    if (j.value("kind", "") != "gmm") throw ConfigError("gmm checkpoint: wrong model kind");
    GmmModel m;
    m.weights = nn::vec_from_json(j.at("weights"));
    for (const auto& e : j.at("means")) m.means.push_back(nn::vec_from_json(e));
    for (const auto& e : j.at("covs")) m.covs.push_back(nn::mat_from_json(e));
    require(m.means.size() == static_cast<std::size_t>(m.weights.size()) &&
                m.covs.size() == m.means.size(),
            "gmm checkpoint: inconsistent component counts");
    m.refresh_cache();
    return m;
}

}  // namespace lfi::density
