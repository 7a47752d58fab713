#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "kdlab/data.hpp"

namespace kdlab::nn {

/// Multiplicative learning-rate schedule: the rate is multiplied by
/// `factor` at the start of each listed epoch (0-based), cumulatively.
struct LrDecay {
    double factor = 0.1;
    std::vector<int> milestones;
};

struct TrainConfig {
    int epochs = 60;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    LrDecay lr_decay;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Fully connected network with ReLU hidden activations and an identity
/// output layer. weights[l] is a (dims[l+1] x dims[l]) row-major matrix.
struct MlpModel {
    std::vector<int> layer_dims;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t init_seed = 0;

    std::size_t num_layers() const { return weights.size(); }
    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
};

/// Per-layer parameter gradients, same shapes as the model.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

/// Momentum buffers for SGD, same shapes as the model.
struct SgdState {
    std::vector<std::vector<double>> vel_w;
    std::vector<std::vector<double>> vel_b;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

using History = std::vector<EpochStats>;

/// Loss callback used by train(): receives the original dataset index of
/// the sample (so per-sample soft labels can be looked up), the current
/// logits, and the hard label; returns the loss value and its gradient
/// with respect to the logits.
struct SampleLoss {
    double loss = 0.0;
    std::vector<double> grad_logits;
};
using LossFn =
    std::function<SampleLoss(std::size_t index, const std::vector<double>& logits, int label)>;

/// Weights drawn from a centered uniform distribution with standard
/// deviation 1/sqrt(fan_in); biases start at zero. Deterministic per seed.
MlpModel init_model(const std::vector<int>& layer_dims, std::uint64_t seed);

std::vector<double> forward(const MlpModel& model, std::span<const double> x);

/// Reverse-mode gradients for one sample given dLoss/dlogits. Returns
/// freshly allocated gradients of the same shape as the model.
Gradients backward(const MlpModel& model, std::span<const double> x,
                   const std::vector<double>& grad_logits);

Gradients zero_gradients(const MlpModel& model);
SgdState zero_state(const MlpModel& model);

/// v <- momentum * v + g; param <- param - lr * v.
void sgd_step(MlpModel& model, const Gradients& grads, SgdState& state, double lr,
              double momentum);

/// Minibatch SGD over shuffled indices. Gradients are averaged within each
/// batch (the last batch may be smaller). Per-epoch train loss and accuracy
/// are accumulated from the forward passes as samples are visited; test
/// accuracy is evaluated after the epoch's updates. Fully deterministic for
/// a fixed config.
History train(MlpModel& model, const data::VectorDataset& train_set,
              const data::VectorDataset& test_set, const TrainConfig& config,
              const LossFn& loss);

/// Fraction of samples whose argmax logit (lowest index wins ties) matches
/// the label.
double accuracy(const MlpModel& model, const data::VectorDataset& ds);

/// Forward pass over a whole dataset, keeping dataset order and labels.
data::LogitDataset collect_logits(const MlpModel& model, const data::VectorDataset& ds);

/// Versioned JSON checkpoint. Doubles round-trip exactly; loading a file
/// with a different format name or version fails with a clear error.
void write_checkpoint(const std::filesystem::path& path, const MlpModel& model);
MlpModel read_checkpoint(const std::filesystem::path& path);

}  // namespace kdlab::nn
