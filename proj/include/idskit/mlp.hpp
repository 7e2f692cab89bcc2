#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idskit/dataset.hpp"
#include "idskit/error.hpp"
#include "idskit/matrix.hpp"
#include "idskit/prediction.hpp"
#include "idskit/rng.hpp"

namespace idskit::mlp {

enum class Activation { kSigmoid, kRelu, kTanh };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::kSigmoid: return "sigmoid";
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
    }
    return "sigmoid";
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "sigmoid") return Activation::kSigmoid;
    if (name == "relu") return Activation::kRelu;
    if (name == "tanh") return Activation::kTanh;
    throw ConfigError("unknown activation: \"" + name + "\" (expected sigmoid, relu, or tanh)");
}

// Predicted probabilities are clipped into [kLossClip, 1 - kLossClip] before
// the log, which keeps the loss finite at the 0/1 extremes.
inline constexpr double kLossClip = 1e-12;

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double activation_apply(Activation kind, double z) {
    switch (kind) {
        case Activation::kSigmoid: return sigmoid(z);
        case Activation::kRelu: return z > 0.0 ? z : 0.0;
        case Activation::kTanh: return std::tanh(z);
    }
    return 0.0;
}

// Relu's derivative at exactly 0 is taken as 0.
inline double activation_derivative(Activation kind, double z) {
    switch (kind) {
        case Activation::kSigmoid: {
            const double s = sigmoid(z);
            return s * (1.0 - s);
        }
        case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::kTanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

// Max-subtracted softmax; safe for logits of any magnitude.
inline Vector softmax(const Vector& logits) {
    if (logits.size() == 0) throw ContractError("softmax: empty logits");
    const double m = logits.maxCoeff();
    Vector out = (logits.array() - m).exp();
    out /= out.sum();
    return out;
}

inline double cross_entropy(int y, double prob_attack) {
    const double p = std::clamp(prob_attack, kLossClip, 1.0 - kLossClip);
    return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Dense feedforward classifier. layer_sizes runs input..output; every hidden
// layer applies `activation`, the 2-wide output layer applies softmax.
struct Model {
    std::vector<int> layer_sizes;
    std::vector<Matrix> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
    std::vector<Vector> biases;   // biases[l]: layer_sizes[l+1]
    Activation activation = Activation::kSigmoid;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)), zero biases.
// Entries are drawn layer by layer in row-major order from one stream seeded
// with derive_seed(seed, "mlp-init").
inline Model init_model(int input_size, const std::vector<int>& hidden, Activation activation,
                        std::uint64_t seed) {
    if (input_size < 1) throw ContractError("init_model: input size must be >= 1");
    for (int h : hidden)
        if (h < 1) throw ContractError("init_model: hidden layer sizes must be >= 1");

    Model model;
    model.activation = activation;
    model.layer_sizes.push_back(input_size);
    model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
    model.layer_sizes.push_back(2);

    Rng rng(derive_seed(seed, "mlp-init"));
    for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
        const int fan_in = model.layer_sizes[l];
        const int fan_out = model.layer_sizes[l + 1];
        const double r = std::sqrt(6.0 / (fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.next_uniform(-r, r);
        model.weights.push_back(std::move(w));
        model.biases.push_back(Vector::Zero(fan_out));
    }
    return model;
}

// Per-layer pre-activations and activations kept from a forward pass;
// post[0] is the input, post.back() the softmax probabilities.
struct ForwardCache {
    std::vector<Vector> pre;
    std::vector<Vector> post;
};

inline ForwardCache forward(const Model& model, const Vector& x) {
    if (x.size() != model.input_size())
        throw ShapeError("forward: input length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(model.input_size()));
    ForwardCache cache;
    cache.pre.reserve(model.layer_count());
    cache.post.reserve(model.layer_count() + 1);
    cache.post.push_back(x);
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        Vector z = model.weights[l] * cache.post.back() + model.biases[l];
        cache.pre.push_back(z);
        if (l + 1 == model.layer_count()) {
            cache.post.push_back(softmax(z));
        } else {
            Vector a(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i)
                a[i] = activation_apply(model.activation, z[i]);
            cache.post.push_back(std::move(a));
        }
    }
    return cache;
}

struct Gradients {
    std::vector<Matrix> dw;
    std::vector<Vector> db;
};

// Exact gradients of cross-entropy(softmax(network(x)), y) for every weight
// and bias. The softmax/cross-entropy pair collapses to (probs - onehot(y))
// at the output layer; hidden layers chain through the activation derivative.
inline Gradients backward(const Model& model, const ForwardCache& cache, int y) {
    const std::size_t layers = model.layer_count();
    if (cache.pre.size() != layers || cache.post.size() != layers + 1 ||
        cache.post.front().size() != model.input_size())
        throw ShapeError("backward: cache does not match model");
    if (y != 0 && y != 1) throw ContractError("backward: label must be 0 or 1");

    Gradients g;
    g.dw.resize(layers);
    g.db.resize(layers);

    Vector delta = cache.post.back();  // probs
    delta[y] -= 1.0;
    for (std::size_t l = layers; l-- > 0;) {
        g.dw[l] = delta * cache.post[l].transpose();
        g.db[l] = delta;
        if (l > 0) {
            Vector upstream = model.weights[l].transpose() * delta;
            delta.resize(upstream.size());
            for (Eigen::Index i = 0; i < upstream.size(); ++i)
                delta[i] = upstream[i] * activation_derivative(model.activation, cache.pre[l - 1][i]);
        }
    }
    return g;
}

struct AdamConfig {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("adam: alpha must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in [0, 1)");
        if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
    }
};

// First/second moment accumulators shaped like the model parameters.
struct AdamState {
    AdamConfig hp;
    long t = 0;
    std::vector<Matrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;

    static AdamState like(const Model& model, AdamConfig hp = {}) {
        hp.validate();
        AdamState s;
        s.hp = hp;
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
            s.m_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
            s.v_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
            s.m_b.push_back(Vector::Zero(model.biases[l].size()));
            s.v_b.push_back(Vector::Zero(model.biases[l].size()));
        }
        return s;
    }
};

namespace detail {

template <class Tensor>
void adam_update(AdamState& s, Tensor& m, Tensor& v, Tensor& param, const Tensor& grad) {
    const double b1 = s.hp.beta1, b2 = s.hp.beta2;
    m = b1 * m + (1.0 - b1) * grad;
    v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
    const double m_corr = 1.0 - std::pow(b1, static_cast<double>(s.t));
    const double v_corr = 1.0 - std::pow(b2, static_cast<double>(s.t));
    param.array() -= s.hp.alpha * (m.array() / m_corr) / ((v.array() / v_corr).sqrt() + s.hp.epsilon);
}

}  // namespace detail

// Bias-corrected Adam update over every parameter; t advances by exactly 1.
inline void adam_step(AdamState& state, Model& model, const Gradients& grads) {
    if (grads.dw.size() != model.layer_count() || grads.db.size() != model.layer_count())
        throw ShapeError("adam_step: gradient layer count does not match model");
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        if (grads.dw[l].rows() != model.weights[l].rows() ||
            grads.dw[l].cols() != model.weights[l].cols() ||
            grads.db[l].size() != model.biases[l].size())
            throw ShapeError("adam_step: gradient shape does not match layer " + std::to_string(l));
    }
    ++state.t;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        detail::adam_update(state, state.m_w[l], state.v_w[l], model.weights[l], grads.dw[l]);
        detail::adam_update(state, state.m_b[l], state.v_b[l], model.biases[l], grads.db[l]);
    }
}

struct TrainConfig {
    std::vector<int> hidden{300, 300};
    Activation activation = Activation::kSigmoid;
    int epochs = 3;
    int batch_size = 128;
    std::uint64_t seed = 42;
    AdamConfig adam;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        for (int h : hidden)
            if (h < 1) throw ConfigError("train: hidden layer sizes must be >= 1");
        adam.validate();
    }
};

// Running mean loss and accuracy over one full pass, measured on each batch
// before its update (the usual training-trace convention).
struct EpochTrace {
    int epoch = 0;
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochTrace> trace;
};

namespace detail {

inline void softmax_rows(Matrix& z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - m).exp();
        z.row(i) /= z.row(i).sum();
    }
}

// Batched forward/backward over a block of rows. Algebraically the mean of
// the per-sample backward() gradients; a property test pins the two paths
// together.
struct BatchWorkspace {
    std::vector<Matrix> pre;   // per layer, B x width
    std::vector<Matrix> post;  // per layer incl. input
};

inline void batch_forward(const Model& model, const Matrix& xb, BatchWorkspace& ws) {
    const std::size_t layers = model.layer_count();
    ws.pre.assign(layers, Matrix());
    ws.post.assign(layers + 1, Matrix());
    ws.post[0] = xb;
    for (std::size_t l = 0; l < layers; ++l) {
        ws.pre[l] = ws.post[l] * model.weights[l].transpose();
        ws.pre[l].rowwise() += model.biases[l].transpose();
        if (l + 1 == layers) {
            ws.post[l + 1] = ws.pre[l];
            softmax_rows(ws.post[l + 1]);
        } else {
            Matrix a = ws.pre[l];
            const Activation kind = model.activation;
            a = a.unaryExpr([kind](double z) { return activation_apply(kind, z); });
            ws.post[l + 1] = std::move(a);
        }
    }
}

inline Gradients batch_backward(const Model& model, const BatchWorkspace& ws,
                                const std::vector<int>& y, std::span<const std::size_t> rows) {
    const std::size_t layers = model.layer_count();
    const Eigen::Index batch = ws.post[0].rows();
    Matrix delta = ws.post[layers];  // probs, B x 2
    for (Eigen::Index i = 0; i < batch; ++i) delta(i, y[rows[i]]) -= 1.0;
    delta /= static_cast<double>(batch);

    Gradients g;
    g.dw.resize(layers);
    g.db.resize(layers);
    for (std::size_t l = layers; l-- > 0;) {
        g.dw[l] = delta.transpose() * ws.post[l];
        g.db[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix upstream = delta * model.weights[l];
            const Activation kind = model.activation;
            Matrix dact = ws.pre[l - 1].unaryExpr(
                [kind](double z) { return activation_derivative(kind, z); });
            delta = upstream.cwiseProduct(dact);
        }
    }
    return g;
}

}  // namespace detail

// Trains on an n x d feature matrix with binary labels. Deterministic per
// (data, config, seed): initialization draws from derive_seed(seed,
// "mlp-init"), the epoch shuffles from derive_seed(seed, "mlp-shuffle").
inline TrainResult train_xy(const Matrix& x, const std::vector<int>& y, const TrainConfig& config) {
    config.validate();
    if (x.rows() == 0) throw ContractError("train: empty dataset");
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw ShapeError("train: feature rows and label count differ");
    for (int label : y)
        if (label != 0 && label != 1) throw ContractError("train: labels must be 0 or 1");

    const std::size_t n = static_cast<std::size_t>(x.rows());
    const std::size_t batch_size = std::min<std::size_t>(config.batch_size, n);

    TrainResult result;
    result.model = init_model(static_cast<int>(x.cols()), config.hidden, config.activation,
                              config.seed);
    AdamState adam = AdamState::like(result.model, config.adam);
    Rng shuffle_rng(derive_seed(config.seed, "mlp-shuffle"));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    detail::BatchWorkspace ws;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < n; begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, n);
            const Eigen::Index b = static_cast<Eigen::Index>(end - begin);
            Matrix xb(b, x.cols());
            for (Eigen::Index i = 0; i < b; ++i) xb.row(i) = x.row(static_cast<Eigen::Index>(order[begin + i]));

            detail::batch_forward(result.model, xb, ws);
            const Matrix& probs = ws.post.back();
            for (Eigen::Index i = 0; i < b; ++i) {
                const int label = y[order[begin + i]];
                loss_sum += cross_entropy(label, probs(i, 1));
                const int predicted = probs(i, 1) > probs(i, 0) ? 1 : 0;
                if (predicted == label) ++correct;
            }
            Gradients grads = detail::batch_backward(
                result.model, ws, y, std::span<const std::size_t>(order).subspan(begin, end - begin));
            adam_step(adam, result.model, grads);
        }
        result.trace.push_back({epoch, loss_sum / static_cast<double>(n),
                                static_cast<double>(correct) / static_cast<double>(n)});
    }
    return result;
}

inline TrainResult train(const std::vector<data::EncodedRecord>& records,
                         const TrainConfig& config) {
    config.validate();
    if (records.empty()) throw ContractError("train: empty dataset");
    Matrix x(static_cast<Eigen::Index>(records.size()), data::kFeatureCount);
    std::vector<int> y(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (int j = 0; j < data::kFeatureCount; ++j)
            x(static_cast<Eigen::Index>(i), j) = records[i].x[j];
        y[i] = records[i].y;
    }
    return train_xy(x, y, config);
}

// argmax of the softmax output; ties resolve to class 0, so the reported
// confidence is always >= 0.5 for this two-class head.
inline Prediction predict(const Model& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.input_size())
        throw ShapeError("predict: input length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(model.input_size()));
    Vector v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
    const Vector probs = forward(model, v).post.back();
    const int cls = probs[1] > probs[0] ? 1 : 0;
    return Prediction{cls, probs[cls], probs[1]};
}

}  // namespace idskit::mlp
