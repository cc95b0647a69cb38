#pragma once

// Summary-statistic learning by mutual-information maximization. A statistic
// network S maps data vectors to d summary coordinates; the training signal
// is either
//   - a Jensen-Shannon mutual-information lower bound estimated with a
//     critic T'(H(theta), S(x)) over joint pairs and m permuted pairings, or
//   - the empirical distance correlation between theta and S(x) batches.
// Both are maximized; the trainable wrappers hand the shared early-stopping
// loop the negated objective.

#include "lfi/common.hpp"
#include "lfi/nn/mlp.hpp"
#include "lfi/nn/scaler.hpp"
#include "lfi/nn/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lfi::mi {

using nn::StandardScaler;

// A trained statistic: input standardization baked in, so apply() is
// self-contained given raw data vectors.
struct StatisticModel {
    nn::Mlp net;
    StandardScaler scaler;

    int input_dim() const { return net.input_dim(); }
    int stat_dim() const { return net.output_dim(); }
    Mat apply(const Mat& x) const { return net.forward(scaler.apply(x)); }
    Vec apply_row(const Vec& x) const;
};

nlohmann::json statistic_to_json(const StatisticModel& model);
StatisticModel statistic_from_json(const nlohmann::json& j);

enum class MiEstimator { Jsd, Dc };

const char* estimator_name(MiEstimator e);
MiEstimator estimator_from_name(const std::string& name);

// Dimension heuristic: twice the parameter dimension.
int select_statistic_dim(int param_dim);

// --- distance correlation kernel -----------------------------------------
//
// Centered-kernel form over a batch of n >= 4 rows: with A(i,j) = |a_i-a_j|
// and the centering
//   At(i,j) = A(i,j) - r_i/(n-2) - c_j/(n-2) + g/((n-1)(n-2)),
// the statistic is sum(At.*Bt) / sqrt(sum(At^2) sum(Bt^2)).
// Throws NumericalError when either centered sum of squares vanishes
// (degenerate batch).
double distance_correlation(const Mat& a, const Mat& b);

// Gradient of distance_correlation(a, b) with respect to the rows of b,
// holding a fixed. Exposed for direct testing.
Mat distance_correlation_grad_b(const Mat& a, const Mat& b);

// --- trainable infomax objectives ----------------------------------------

struct InfomaxConfig {
    MiEstimator estimator = MiEstimator::Jsd;
    int stat_dim = 0;  // 0 -> select_statistic_dim(param_dim)
    int m_perm = 400;  // JSD permutation count per batch
    std::vector<int> hidden = {100, 100};
    nn::TrainConfig train;  // defaults: lr 1e-4, batch 200, patience 100
};

// JSD bound with split critic: T'( [H(theta), S(x)] ) with H a K-100-100-K
// embedder and T' a (d+K)-100-1 head. loss_grad returns the negated bound.
class JsdInfomaxModel final : public nn::TrainableModel {
  public:
    JsdInfomaxModel(const Mat& thetas, const Mat& xs, const InfomaxConfig& cfg,
                    std::uint64_t init_seed);

    std::vector<nn::ParamBlock> param_blocks() override;
    int sample_count() const override { return static_cast<int>(theta_std_.rows()); }
    double loss_grad(std::span<const int> rows, std::uint64_t noise_seed) override;
    double eval_loss(std::span<const int> rows, std::uint64_t noise_seed) override;

    // The bound itself (what training maximizes); evaluation only.
    double objective(std::span<const int> rows, std::uint64_t perm_seed);

    nn::Mlp& stat_net() { return stat_net_; }
    nn::Mlp& embed_net() { return embed_net_; }
    nn::Mlp& head_net() { return head_net_; }
    const StandardScaler& x_scaler() const { return x_scaler_; }
    int m_perm() const { return m_perm_; }

  private:
    double run(std::span<const int> rows, std::uint64_t perm_seed, bool with_grads);

    Mat theta_std_, x_std_;
    StandardScaler x_scaler_, theta_scaler_;
    nn::Mlp stat_net_, embed_net_, head_net_;
    int m_perm_;
};

// Distance-correlation objective; gradients flow only into the statistic
// network. Batches need at least 4 rows.
class DcInfomaxModel final : public nn::TrainableModel {
  public:
    DcInfomaxModel(const Mat& thetas, const Mat& xs, const InfomaxConfig& cfg,
                   std::uint64_t init_seed);

    std::vector<nn::ParamBlock> param_blocks() override;
    int sample_count() const override { return static_cast<int>(theta_std_.rows()); }
    double loss_grad(std::span<const int> rows, std::uint64_t noise_seed) override;
    double eval_loss(std::span<const int> rows, std::uint64_t noise_seed) override;

    double objective(std::span<const int> rows);

    nn::Mlp& stat_net() { return stat_net_; }
    const StandardScaler& x_scaler() const { return x_scaler_; }

  private:
    double run(std::span<const int> rows, bool with_grads);

    Mat theta_std_, x_std_;
    StandardScaler x_scaler_, theta_scaler_;
    nn::Mlp stat_net_;
    int eval_block_ = 1024;  // validation DC is averaged over blocks this size
};

// Spec-level loss entry points (value of the maximization objective on a
// row subset, no parameter updates).
double jsd_loss_minibatch(JsdInfomaxModel& model, std::span<const int> rows,
                          std::uint64_t perm_seed);
double dc_loss_minibatch(DcInfomaxModel& model, std::span<const int> rows);

// --- statistic training ---------------------------------------------------

struct TrainedStatistic {
    StatisticModel model;
    nn::TrainLog log;
    MiEstimator estimator = MiEstimator::Jsd;
    double best_objective = 0.0;  // objective at the restored snapshot
    bool near_constant = false;   // statistic ~constant on validation inputs
};

// warm_start, when given and shape-compatible, seeds the statistic network
// with a previously trained one instead of fresh random weights.
TrainedStatistic train_statistic(const Mat& thetas, const Mat& xs, const InfomaxConfig& cfg,
                                 const StatisticModel* warm_start = nullptr);

// Posterior-mean regression used as the non-sufficiency contrast: an
// identically shaped network trained to predict theta from x by least
// squares. Returns the regression outputs packaged as a StatisticModel.
struct RegressionBaseline {
    StatisticModel model;
    nn::TrainLog log;
};

RegressionBaseline train_mean_regression_baseline(const Mat& thetas, const Mat& xs,
                                                  const std::vector<int>& hidden,
                                                  const nn::TrainConfig& cfg);

}  // namespace lfi::mi
