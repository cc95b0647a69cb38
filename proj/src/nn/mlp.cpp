#include "lfi/nn/mlp.hpp"

#include <algorithm>

namespace lfi::nn {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    throw ContractViolation("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation name: " + name);
}

Mlp::Mlp(std::vector<int> dims, Activation act, std::uint64_t init_seed)
    : dims_(std::move(dims)), act_(act) {
    require(dims_.size() >= 2, "Mlp: need at least input and output dims");
    for (int d : dims_) require(d >= 1, "Mlp: all layer dims must be positive");

    std::size_t total = 0;
    for (int l = 0; l + 1 < static_cast<int>(dims_.size()); ++l) {
        const auto rows = static_cast<std::size_t>(dims_[l + 1]);
        const auto cols = static_cast<std::size_t>(dims_[l]);
        w_off_.push_back(total);
        layout_.push_back({"W" + std::to_string(l), total, rows * cols});
        total += rows * cols;
        b_off_.push_back(total);
        layout_.push_back({"b" + std::to_string(l), total, rows});
        total += rows;
    }
    params_.assign(total, 0.0);
    grads_.assign(total, 0.0);

    Rng rng = make_rng(init_seed, stream::init);
    for (int l = 0; l < layer_count(); ++l) {
        const double bound = std::sqrt(6.0 / (dims_[l] + dims_[l + 1]));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto w = weight(l);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
        // nonzero bias init keeps relu pre-activations off the exact kink,
        // which narrow layers would otherwise hit through all-dead rows
        const double b_bound = 1.0 / std::sqrt(static_cast<double>(dims_[l]));
        std::uniform_real_distribution<double> ub(-b_bound, b_bound);
        auto b = bias(l);
        for (Eigen::Index c = 0; c < b.size(); ++c) b(c) = ub(rng);
    }
}

Eigen::Map<Mat> Mlp::weight(int layer) {
    return {params_.data() + w_off_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<const Mat> Mlp::weight(int layer) const {
    return {params_.data() + w_off_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<Eigen::RowVectorXd> Mlp::bias(int layer) {
    return {params_.data() + b_off_[layer], dims_[layer + 1]};
}
Eigen::Map<const Eigen::RowVectorXd> Mlp::bias(int layer) const {
    return {params_.data() + b_off_[layer], dims_[layer + 1]};
}
Eigen::Map<Mat> Mlp::weight_grad(int layer) {
    return {grads_.data() + w_off_[layer], dims_[layer + 1], dims_[layer]};
}
Eigen::Map<Eigen::RowVectorXd> Mlp::bias_grad(int layer) {
    return {grads_.data() + b_off_[layer], dims_[layer + 1]};
}

namespace {

void apply_activation(Mat& m, Activation act) {
    if (act == Activation::Relu) {
        m = m.cwiseMax(0.0);
    } else {
        m = m.array().tanh().matrix();
    }
}

}  // namespace

Mat Mlp::forward(const Mat& batch) const {
    Trace tr;
    return forward(batch, tr);
}

Mat Mlp::forward(const Mat& batch, Trace& trace) const {
    require(batch.cols() == input_dim(), "Mlp::forward: input has " +
                                             std::to_string(batch.cols()) + " columns, expected " +
                                             std::to_string(input_dim()));
    trace.post.clear();
    trace.post.reserve(dims_.size());
    trace.post.push_back(batch);
    for (int l = 0; l < layer_count(); ++l) {
        Mat z = trace.post.back() * weight(l).transpose();
        z.rowwise() += bias(l);
        if (l + 1 < layer_count()) apply_activation(z, act_);
        trace.post.push_back(std::move(z));
    }
    return trace.post.back();
}

Mat Mlp::backward(const Trace& trace, const Mat& grad_output) {
    require(static_cast<int>(trace.post.size()) == layer_count() + 1,
            "Mlp::backward: trace does not match network depth");
    require(grad_output.rows() == trace.post.back().rows() &&
                grad_output.cols() == output_dim(),
            "Mlp::backward: gradient shape mismatch");

    Mat g = grad_output;
    for (int l = layer_count() - 1; l >= 0; --l) {
        if (l + 1 < layer_count()) {
            // trace.post[l+1] holds the post-activation values of layer l
            const Mat& a = trace.post[l + 1];
            if (act_ == Activation::Relu) {
                g = (a.array() > 0.0).select(g, 0.0);
            } else {
                g = (g.array() * (1.0 - a.array().square())).matrix();
            }
        }
        weight_grad(l) += g.transpose() * trace.post[l];
        bias_grad(l) += g.colwise().sum();
        if (l > 0) g = g * weight(l);
    }
    return g * weight(0);
}

}  // namespace lfi::nn
