#pragma once

// Adam optimizer and the shared early-stopping training loop. Models plug in
// through TrainableModel: named parameter/gradient blocks plus a batch loss.
// The loop owns shuffling, the validation split, patience and best-snapshot
// restoration, so every trainable object in the project behaves identically.

#include "lfi/common.hpp"
#include "lfi/nn/mlp.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lfi::nn {

struct ParamBlock {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
};

// Stochastic losses (the mutual-information objectives) derive their noise
// from noise_seed, so an identical seed reproduces the identical loss; that
// is what makes validation comparable across epochs and finite-difference
// checks exact.
class TrainableModel {
  public:
    virtual ~TrainableModel() = default;
    virtual std::vector<ParamBlock> param_blocks() = 0;
    virtual int sample_count() const = 0;
    // Accumulates gradients into the blocks (caller zeroes first), returns loss.
    virtual double loss_grad(std::span<const int> rows, std::uint64_t noise_seed) = 0;
    virtual double eval_loss(std::span<const int> rows, std::uint64_t noise_seed) = 0;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled, applied after the Adam step
};

class Adam {
  public:
    explicit Adam(const AdamConfig& cfg) : cfg_(cfg) {}

    // Throws NumericalError naming the offending block if a gradient is
    // non-finite. Moment slots are allocated lazily on first use.
    void step(std::vector<ParamBlock>& blocks);

    long steps_taken() const { return t_; }

  private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainConfig {
    int batch_size = 200;
    double lr = 1e-4;
    double weight_decay = 0.0;
    double val_fraction = 0.2;
    int patience = 100;   // epochs without validation improvement before stopping
    int max_epochs = 2000;
    int min_batch_rows = 2;  // losses with batch-size preconditions raise this
    std::uint64_t seed = 0;
};

struct TrainLog {
    std::vector<double> train_loss;  // mean batch loss per epoch
    std::vector<double> val_loss;
    int best_epoch = -1;
    double best_val = 0.0;
    int epochs_run = 0;
};

// Runs seeded-shuffle minibatch Adam with a 20%-style validation split (last
// fraction of one seeded shuffle), tracks the best validation loss, stops
// after `patience` epochs without improvement and restores the best
// parameters before returning.
TrainLog train_early_stop(TrainableModel& model, const TrainConfig& cfg);

// Convenience wrapper for plain supervised nets.
enum class LossKind { MeanSquaredError };

TrainLog train_mlp(Mlp& net, const Mat& inputs, const Mat& targets, LossKind loss,
                   const TrainConfig& cfg);

std::vector<std::vector<double>> snapshot_params(std::vector<ParamBlock>& blocks);
void restore_params(std::vector<ParamBlock>& blocks,
                    const std::vector<std::vector<double>>& snap);

}  // namespace lfi::nn
