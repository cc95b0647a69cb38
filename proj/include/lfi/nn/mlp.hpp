#pragma once

// Dense feed-forward networks in 64-bit precision. Parameters and their
// gradients live in flat arrays so optimizers, snapshots, checkpoints and
// finite-difference checks can treat every model the same way; layers are
// Eigen maps into that storage.

#include "lfi/common.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lfi::nn {

enum class Activation { Relu, Tanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One named slice of a flat parameter array, used for optimizer error
// reports and snapshots.
struct BlockInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

class Mlp {
  public:
    // dims = [input, hidden..., output]; hidden layers use `act`, the output
    // layer is linear. Weights start uniform over ±sqrt(6/(fan_in+fan_out)),
    // biases at zero.
    Mlp(std::vector<int> dims, Activation act, std::uint64_t init_seed);

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
    const std::vector<int>& dims() const { return dims_; }
    Activation activation() const { return act_; }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> grads() { return grads_; }
    void zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }
    const std::vector<BlockInfo>& layout() const { return layout_; }

    Eigen::Map<Mat> weight(int layer);
    Eigen::Map<const Mat> weight(int layer) const;
    Eigen::Map<Eigen::RowVectorXd> bias(int layer);
    Eigen::Map<const Eigen::RowVectorXd> bias(int layer) const;
    Eigen::Map<Mat> weight_grad(int layer);
    Eigen::Map<Eigen::RowVectorXd> bias_grad(int layer);

    // Activations kept from a forward pass; post[0] is the input batch.
    struct Trace {
        std::vector<Mat> post;
    };

    Mat forward(const Mat& batch) const;
    Mat forward(const Mat& batch, Trace& trace) const;

    // Backpropagates dL/doutput, accumulating parameter gradients into
    // grads() and returning dL/dinput (needed when networks are composed).
    Mat backward(const Trace& trace, const Mat& grad_output);

  private:
    std::vector<int> dims_;
    Activation act_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::vector<BlockInfo> layout_;
    std::vector<std::size_t> w_off_, b_off_;
};

}  // namespace lfi::nn
