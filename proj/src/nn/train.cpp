#include "lfi/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lfi::nn {

void Adam::step(std::vector<ParamBlock>& blocks) {
    if (m_.empty()) {
        for (const auto& b : blocks) {
            m_.emplace_back(b.value.size(), 0.0);
            v_.emplace_back(b.value.size(), 0.0);
        }
    }
    require(m_.size() == blocks.size(), "Adam::step: block structure changed between steps");

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        auto& b = blocks[k];
        require(m_[k].size() == b.value.size(), "Adam::step: block size changed between steps");
        for (std::size_t i = 0; i < b.value.size(); ++i) {
            const double g = b.grad[i];
            if (!std::isfinite(g))
                throw NumericalError("Adam: non-finite gradient in block '" + b.name +
                                     "' at index " + std::to_string(i));
            m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
            v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[k][i] / bc1;
            const double vhat = v_[k][i] / bc2;
            b.value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            if (cfg_.weight_decay != 0.0) b.value[i] -= cfg_.lr * cfg_.weight_decay * b.value[i];
        }
    }
}

std::vector<std::vector<double>> snapshot_params(std::vector<ParamBlock>& blocks) {
    std::vector<std::vector<double>> snap;
    snap.reserve(blocks.size());
    for (auto& b : blocks) snap.emplace_back(b.value.begin(), b.value.end());
    return snap;
}

void restore_params(std::vector<ParamBlock>& blocks,
                    const std::vector<std::vector<double>>& snap) {
    require(snap.size() == blocks.size(), "restore_params: block count mismatch");
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        require(snap[k].size() == blocks[k].value.size(), "restore_params: block size mismatch");
        std::copy(snap[k].begin(), snap[k].end(), blocks[k].value.begin());
    }
}

namespace {

void zero_grads(std::vector<ParamBlock>& blocks) {
    for (auto& b : blocks) std::fill(b.grad.begin(), b.grad.end(), 0.0);
}

}  // namespace

TrainLog train_early_stop(TrainableModel& model, const TrainConfig& cfg) {
    const int n = model.sample_count();
    require(n >= 2, "train_early_stop: need at least 2 samples");
    require(cfg.batch_size >= 2, "train_early_stop: batch_size must be >= 2");
    require(cfg.min_batch_rows >= 2 && cfg.batch_size >= cfg.min_batch_rows,
            "train_early_stop: batch_size must cover min_batch_rows");
    require(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0,
            "train_early_stop: val_fraction must lie in [0,1)");
    require(cfg.patience >= 1 && cfg.max_epochs >= 1,
            "train_early_stop: patience and max_epochs must be positive");

    // Validation rows are the tail of one seeded shuffle; with val_fraction 0
    // the training loss itself drives early stopping.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng = make_rng(cfg.seed, stream::shuffle);
    std::shuffle(order.begin(), order.end(), split_rng);
    int n_val = static_cast<int>(std::lround(cfg.val_fraction * n));
    if (cfg.val_fraction > 0.0 && n_val == 0 && n >= 4) n_val = 1;
    const int n_train = n - n_val;
    require(n_train >= 2, "train_early_stop: fewer than 2 training rows after split");

    std::vector<int> train_idx(order.begin(), order.begin() + n_train);
    std::vector<int> val_idx(order.begin() + n_train, order.end());

    auto blocks = model.param_blocks();
    Adam opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
    const std::uint64_t val_seed = mix_seed(cfg.seed, stream::validation);

    TrainLog log;
    auto best = snapshot_params(blocks);
    log.best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng epoch_rng = make_rng(cfg.seed, stream::shuffle, static_cast<std::uint64_t>(epoch) + 1);
        std::shuffle(train_idx.begin(), train_idx.end(), epoch_rng);

        double loss_sum = 0.0;
        int batches = 0;
        for (int start = 0; start < n_train; start += cfg.batch_size) {
            const int len = std::min(cfg.batch_size, n_train - start);
            if (len < cfg.min_batch_rows) break;  // drop an undersized remainder
            zero_grads(blocks);
            const std::uint64_t noise =
                mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1,
                         static_cast<std::uint64_t>(batches) + 1);
            const double loss =
                model.loss_grad(std::span<const int>(train_idx.data() + start, len), noise);
            if (!std::isfinite(loss))
                throw NumericalError("train_early_stop: non-finite training loss at epoch " +
                                     std::to_string(epoch));
            opt.step(blocks);
            loss_sum += loss;
            ++batches;
        }
        log.train_loss.push_back(batches > 0 ? loss_sum / batches : 0.0);

        const double val = n_val > 0 ? model.eval_loss(val_idx, val_seed) : log.train_loss.back();
        if (!std::isfinite(val))
            throw NumericalError("train_early_stop: non-finite validation loss at epoch " +
                                 std::to_string(epoch));
        log.val_loss.push_back(val);
        log.epochs_run = epoch + 1;

        if (val < log.best_val) {
            log.best_val = val;
            log.best_epoch = epoch;
            best = snapshot_params(blocks);
        } else if (epoch - log.best_epoch >= cfg.patience) {
            break;
        }
    }

    restore_params(blocks, best);
    return log;
}

namespace {

class SupervisedMlp final : public TrainableModel {
  public:
    SupervisedMlp(Mlp& net, const Mat& x, const Mat& y, LossKind kind)
        : net_(net), x_(x), y_(y), kind_(kind) {
        require(x.rows() == y.rows(), "train_mlp: inputs and targets disagree on row count");
        require(x.cols() == net.input_dim() && y.cols() == net.output_dim(),
                "train_mlp: dataset shape does not match network");
    }

    std::vector<ParamBlock> param_blocks() override {
        std::vector<ParamBlock> blocks;
        for (const auto& info : net_.layout())
            blocks.push_back({info.name, net_.params().subspan(info.offset, info.size),
                              net_.grads().subspan(info.offset, info.size)});
        return blocks;
    }

    int sample_count() const override { return static_cast<int>(x_.rows()); }

    double loss_grad(std::span<const int> rows, std::uint64_t) override {
        Mat xb = gather_rows(x_, rows);
        Mat yb = gather_rows(y_, rows);
        Mlp::Trace tr;
        Mat out = net_.forward(xb, tr);
        // mean over rows of the squared error summed over coordinates
        Mat diff = out - yb;
        const double loss = diff.squaredNorm() / static_cast<double>(rows.size());
        Mat grad_out = diff * (2.0 / static_cast<double>(rows.size()));
        net_.backward(tr, grad_out);
        return loss;
    }

    double eval_loss(std::span<const int> rows, std::uint64_t) override {
        Mat diff = net_.forward(gather_rows(x_, rows)) - gather_rows(y_, rows);
        return diff.squaredNorm() / static_cast<double>(rows.size());
    }

  private:
    Mlp& net_;
    const Mat& x_;
    const Mat& y_;
    LossKind kind_;
};

}  // namespace

TrainLog train_mlp(Mlp& net, const Mat& inputs, const Mat& targets, LossKind loss,
                   const TrainConfig& cfg) {
    require(loss == LossKind::MeanSquaredError, "train_mlp: unsupported loss kind");
    SupervisedMlp model(net, inputs, targets, loss);
    return train_early_stop(model, cfg);
}

}  // namespace lfi::nn
