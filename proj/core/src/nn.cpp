#include "kdlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "kdlab/rng.hpp"

namespace kdlab::nn {

namespace {

void check_dims(const std::vector<int>& layer_dims) {
    if (layer_dims.size() < 2) {
        throw std::invalid_argument("layer_dims needs input and output sizes");
    }
    for (int d : layer_dims) {
        if (d < 1) {
            throw std::invalid_argument("layer dimension must be positive");
        }
    }
}

/// Forward pass that keeps every layer's pre-activation; used by backward.
/// zs[l] is the affine output of layer l; the hidden activations are
/// relu(zs[l]) and the logits are zs.back() unmodified.
std::vector<std::vector<double>> forward_trace(const MlpModel& model,
                                               std::span<const double> x) {
    std::vector<std::vector<double>> zs(model.num_layers());
    std::span<const double> input = x;
    std::vector<double> activated;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto rows = static_cast<std::size_t>(model.layer_dims[l + 1]);
        const auto cols = static_cast<std::size_t>(model.layer_dims[l]);
        const double* w = model.weights[l].data();
        zs[l].resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = model.biases[l][r];
            const double* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                acc += wr[c] * input[c];
            }
            zs[l][r] = acc;
        }
        if (l + 1 < model.num_layers()) {
            activated = zs[l];
            for (double& v : activated) {
                v = v > 0.0 ? v : 0.0;
            }
            input = activated;
        }
    }
    return zs;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw std::invalid_argument("momentum must be in [0, 1)");
    }
}

MlpModel init_model(const std::vector<int>& layer_dims, std::uint64_t seed) {
    check_dims(layer_dims);
    MlpModel model;
    model.layer_dims = layer_dims;
    model.init_seed = seed;
    rng::Engine engine(rng::mix_seed(seed, 0x696e6974ULL));
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const auto rows = static_cast<std::size_t>(layer_dims[l + 1]);
        const auto cols = static_cast<std::size_t>(layer_dims[l]);
        // Uniform on [-sqrt(3/fan_in), sqrt(3/fan_in)] has standard
        // deviation exactly 1/sqrt(fan_in).
        double bound = std::sqrt(3.0 / static_cast<double>(cols));
        std::vector<double> w(rows * cols);
        for (double& v : w) {
            v = engine.uniform(-bound, bound);
        }
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(rows, 0.0);
    }
    return model;
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(model.input_dim())) {
        throw std::invalid_argument("forward: input size mismatch");
    }
    return forward_trace(model, x).back();
}

Gradients zero_gradients(const MlpModel& model) {
    Gradients g;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        g.weights.emplace_back(model.weights[l].size(), 0.0);
        g.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    return g;
}

SgdState zero_state(const MlpModel& model) {
    SgdState s;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        s.vel_w.emplace_back(model.weights[l].size(), 0.0);
        s.vel_b.emplace_back(model.biases[l].size(), 0.0);
    }
    return s;
}

namespace {

/// Core of backward(): accumulates this sample's gradients into `out`.
void backward_accumulate(const MlpModel& model, std::span<const double> x,
                         const std::vector<std::vector<double>>& zs,
                         const std::vector<double>& grad_logits, Gradients& out) {
    const std::size_t layers = model.num_layers();
    std::vector<double> delta = grad_logits;
    for (std::size_t l = layers; l-- > 0;) {
        const auto rows = static_cast<std::size_t>(model.layer_dims[l + 1]);
        const auto cols = static_cast<std::size_t>(model.layer_dims[l]);

        // Activation of the layer below (or the input itself).
        std::vector<double> below;
        std::span<const double> a;
        if (l == 0) {
            a = x;
        } else {
            below = zs[l - 1];
            for (double& v : below) {
                v = v > 0.0 ? v : 0.0;
            }
            a = below;
        }

        double* gw = out.weights[l].data();
        for (std::size_t r = 0; r < rows; ++r) {
            double* gwr = gw + r * cols;
            const double d = delta[r];
            for (std::size_t c = 0; c < cols; ++c) {
                gwr[c] += d * a[c];
            }
            out.biases[l][r] += d;
        }

        if (l == 0) break;
        std::vector<double> next(cols, 0.0);
        const double* w = model.weights[l].data();
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = delta[r];
            const double* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                next[c] += wr[c] * d;
            }
        }
        for (std::size_t c = 0; c < cols; ++c) {
            next[c] = zs[l - 1][c] > 0.0 ? next[c] : 0.0;
        }
        delta = std::move(next);
    }
}

}  // namespace

Gradients backward(const MlpModel& model, std::span<const double> x,
                   const std::vector<double>& grad_logits) {
    if (grad_logits.size() != static_cast<std::size_t>(model.output_dim())) {
        throw std::invalid_argument("backward: gradient size mismatch");
    }
    auto zs = forward_trace(model, x);
    Gradients g = zero_gradients(model);
    backward_accumulate(model, x, zs, grad_logits, g);
    return g;
}

void sgd_step(MlpModel& model, const Gradients& grads, SgdState& state, double lr,
              double momentum) {
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        for (std::size_t i = 0; i < model.weights[l].size(); ++i) {
            double v = momentum * state.vel_w[l][i] + grads.weights[l][i];
            state.vel_w[l][i] = v;
            model.weights[l][i] -= lr * v;
        }
        for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
            double v = momentum * state.vel_b[l][i] + grads.biases[l][i];
            state.vel_b[l][i] = v;
            model.biases[l][i] -= lr * v;
        }
    }
}

History train(MlpModel& model, const data::VectorDataset& train_set,
              const data::VectorDataset& test_set, const TrainConfig& config,
              const LossFn& loss) {
    config.validate();
    if (train_set.input_dim != model.input_dim() ||
        test_set.input_dim != model.input_dim()) {
        throw std::invalid_argument("train: dataset input_dim mismatch");
    }
    if (train_set.size() == 0) {
        throw std::invalid_argument("train: empty training set");
    }

    rng::Engine shuffle_engine(rng::mix_seed(config.seed, 0x73687566ULL));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    Gradients batch_grads = zero_gradients(model);
    SgdState state = zero_state(model);
    History history;
    history.reserve(static_cast<std::size_t>(config.epochs));

    double lr = config.learning_rate;
    std::vector<int> milestones = config.lr_decay.milestones;
    std::sort(milestones.begin(), milestones.end());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int m : milestones) {
            if (m == epoch) {
                lr *= config.lr_decay.factor;
            }
        }
        shuffle_engine.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        std::size_t done = 0;
        while (done < order.size()) {
            std::size_t batch =
                std::min(static_cast<std::size_t>(config.batch_size), order.size() - done);
            for (auto& layer : batch_grads.weights) {
                std::fill(layer.begin(), layer.end(), 0.0);
            }
            for (auto& layer : batch_grads.biases) {
                std::fill(layer.begin(), layer.end(), 0.0);
            }
            for (std::size_t b = 0; b < batch; ++b) {
                std::size_t idx = order[done + b];
                auto x = train_set.row(idx);
                auto zs = forward_trace(model, x);
                const std::vector<double>& logits = zs.back();
                int label = train_set.labels[idx];

                SampleLoss sl = loss(idx, logits, label);
                loss_sum += sl.loss;
                auto arg = static_cast<std::size_t>(
                    std::max_element(logits.begin(), logits.end()) - logits.begin());
                if (arg == static_cast<std::size_t>(label)) {
                    ++correct;
                }
                backward_accumulate(model, x, zs, sl.grad_logits, batch_grads);
            }
            double inv = 1.0 / static_cast<double>(batch);
            for (auto& layer : batch_grads.weights) {
                for (double& v : layer) {
                    v *= inv;
                }
            }
            for (auto& layer : batch_grads.biases) {
                for (double& v : layer) {
                    v *= inv;
                }
            }
            sgd_step(model, batch_grads, state, lr, config.momentum);
            done += batch;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.test_acc = test_set.size() ? accuracy(model, test_set) : 0.0;
        history.push_back(stats);
    }
    return history;
}

double accuracy(const MlpModel& model, const data::VectorDataset& ds) {
    if (ds.size() == 0) {
        throw std::invalid_argument("accuracy: empty dataset");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<double> logits = forward(model, ds.row(i));
        auto arg = static_cast<std::size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (arg == static_cast<std::size_t>(ds.labels[i])) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

data::LogitDataset collect_logits(const MlpModel& model, const data::VectorDataset& ds) {
    data::LogitDataset out;
    out.num_classes = model.output_dim();
    out.records.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.records.emplace_back(forward(model, ds.row(i)), ds.labels[i]);
    }
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const MlpModel& model) {
    nlohmann::json j;
    j["format"] = "kdlab-mlp";
    j["version"] = 1;
    j["layer_dims"] = model.layer_dims;
    j["init_seed"] = model.init_seed;
    j["weights"] = model.weights;
    j["biases"] = model.biases;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("failed while writing " + path.string());
    }
}

MlpModel read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "kdlab-mlp") {
        throw std::runtime_error("not a kdlab-mlp checkpoint: " + path.string());
    }
    if (j.value("version", -1) != 1) {
        throw std::runtime_error("unsupported checkpoint version " +
                                 j["version"].dump() + " in " + path.string() +
                                 " (this build reads version 1)");
    }
    MlpModel model;
    j.at("layer_dims").get_to(model.layer_dims);
    j.at("init_seed").get_to(model.init_seed);
    j.at("weights").get_to(model.weights);
    j.at("biases").get_to(model.biases);
    check_dims(model.layer_dims);
    if (model.weights.size() != model.layer_dims.size() - 1 ||
        model.biases.size() != model.weights.size()) {
        throw std::runtime_error("checkpoint layer count mismatch in " + path.string());
    }
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        auto rows = static_cast<std::size_t>(model.layer_dims[l + 1]);
        auto cols = static_cast<std::size_t>(model.layer_dims[l]);
        if (model.weights[l].size() != rows * cols || model.biases[l].size() != rows) {
            throw std::runtime_error("checkpoint shape mismatch in " + path.string());
        }
    }
    return model;
}

}  // namespace kdlab::nn
