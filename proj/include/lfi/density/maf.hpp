#pragma once

// Masked autoregressive flow for conditional densities q(s | theta). Each of
// the stacked layers is a masked dense network (two tanh hidden layers) that
// maps its input v to u = (v - mu(v, theta)) * exp(-alpha(v, theta)), where
// mu_i and alpha_i may depend only on coordinates of v that precede i under
// the layer's ordering, plus all of theta. Orderings alternate between
// natural and reversed across layers. The base density is standard normal;
// shift/log-scale heads start at zero so a fresh flow is exactly the
// identity. Log-scales are clamped to +-7 for stability.

#include "lfi/common.hpp"
#include "lfi/nn/scaler.hpp"
#include "lfi/nn/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lfi::density {

inline constexpr double maf_log_scale_clamp = 7.0;

struct MafConfig {
    int n_flows = 5;
    int hidden = 50;
};

class MafModel {
  public:
    MafModel(int data_dim, int cond_dim, const MafConfig& cfg, std::uint64_t init_seed);

    int data_dim() const { return d_; }
    int cond_dim() const { return k_; }
    int n_flows() const { return static_cast<int>(flows_.size()); }
    int hidden_dim() const { return h_; }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> grads() { return grads_; }
    void zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }
    const std::vector<nn::BlockInfo>& layout() const { return layout_; }

    // Degree of each input coordinate under flow `k`'s ordering (1-based;
    // mu_i/alpha_i of that flow see only inputs with strictly lower degree).
    const std::vector<int>& flow_degrees(int k) const;

    // Batched conditional log-density; throws NumericalError naming the
    // first flow that produces a non-finite value.
    Vec log_density(const Mat& s, const Mat& cond) const;

    // Data -> base-noise transform (all flows); exposed for mask tests.
    Mat forward_u(const Mat& s, const Mat& cond) const;
    // One flow only.
    Mat flow_forward(int k, const Mat& v, const Mat& cond) const;
    // Base noise -> data (sequential inverse per flow).
    Mat inverse(const Mat& u, const Mat& cond) const;

    // Mean negative log-likelihood over the batch, accumulating parameter
    // gradients into grads(). Used by the trainer.
    double nll_grad(const Mat& s, const Mat& cond);

  private:
    struct Flow {
        std::vector<int> degrees;   // input degree per coordinate
        Mat mask_in, mask_hid, mask_out;
        // offsets into the flat parameter array
        std::size_t w1, u1, b1, w2, u2, b2, wmu, bmu, walpha, balpha;
    };
    struct FlowTrace {
        Mat v, h1, h2, alpha_raw, alpha, u;
    };

    Eigen::Map<const Mat> cmat(std::size_t off, int rows, int cols) const;
    Eigen::Map<Mat> pmat(std::size_t off, int rows, int cols);
    Eigen::Map<Mat> gmat(std::size_t off, int rows, int cols);
    void flow_apply(const Flow& f, const Mat& v, const Mat& cond, FlowTrace* trace,
                    Mat& mu, Mat& alpha) const;

    int d_, k_, h_;
    std::vector<Flow> flows_;
    std::vector<double> params_, grads_;
    std::vector<nn::BlockInfo> layout_;
};

// A fitted conditional density: the flow plus the standardizations applied
// to s and theta during fitting.
struct MafDensity {
    MafModel flow;
    nn::StandardScaler s_scaler;
    nn::StandardScaler cond_scaler;

    Vec log_density(const Mat& s, const Mat& cond) const;
    double log_density_row(const Vec& s, const Vec& cond) const;
};

nlohmann::json maf_to_json(const MafDensity& m);
MafDensity maf_from_json(const nlohmann::json& j);

// NLL objective adapter for the shared early-stopping trainer. The loss is
// deterministic; noise_seed is ignored.
class MafNllModel final : public nn::TrainableModel {
  public:
    MafNllModel(const Mat& conds, const Mat& s, const MafConfig& cfg, std::uint64_t init_seed);

    std::vector<nn::ParamBlock> param_blocks() override;
    int sample_count() const override { return static_cast<int>(s_std_.rows()); }
    double loss_grad(std::span<const int> rows, std::uint64_t noise_seed) override;
    double eval_loss(std::span<const int> rows, std::uint64_t noise_seed) override;

    MafModel& flow() { return flow_; }
    const nn::StandardScaler& s_scaler() const { return s_scaler_; }
    const nn::StandardScaler& cond_scaler() const { return cond_scaler_; }

  private:
    nn::StandardScaler s_scaler_, cond_scaler_;
    Mat s_std_, cond_std_;
    MafModel flow_;
};

struct MafFitConfig {
    MafConfig arch;
    nn::TrainConfig train;  // defaults overridden in the constructor below

    MafFitConfig() {
        train.lr = 5e-4;
        train.batch_size = 500;
        train.weight_decay = 1e-4;
        train.patience = 100;
        train.max_epochs = 2000;
    }
};

struct MafFitResult {
    MafDensity density;
    nn::TrainLog log;
};

MafFitResult maf_fit(const Mat& conds, const Mat& s, const MafFitConfig& cfg);

}  // namespace lfi::density
