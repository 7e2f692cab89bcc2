#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "idskit/dataset.hpp"
#include "idskit/error.hpp"
#include "idskit/prediction.hpp"

namespace idskit::baselines {

// Class-conditional Gaussians per feature, shared smoothing added to every
// variance so standardized constant features keep likelihoods finite.
struct GaussianNb {
    std::array<double, 2> prior{};
    std::array<std::vector<double>, 2> mean;
    std::array<std::vector<double>, 2> variance;  // smoothed
    double smoothing = 0.0;

    std::size_t feature_count() const { return mean[0].size(); }
};

inline GaussianNb train_nb(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
    if (x.empty()) throw ContractError("train_nb: empty dataset");
    if (x.size() != y.size()) throw ShapeError("train_nb: feature rows and label count differ");
    const std::size_t d = x[0].size();
    std::array<std::size_t, 2> n{};
    for (int label : y) {
        if (label != 0 && label != 1) throw ContractError("train_nb: labels must be 0 or 1");
        ++n[label];
    }
    if (n[0] == 0 || n[1] == 0)
        throw ContractError("train_nb: training data contains a single class");

    GaussianNb model;
    for (int c = 0; c < 2; ++c) {
        model.prior[c] = static_cast<double>(n[c]) / static_cast<double>(x.size());
        model.mean[c].assign(d, 0.0);
        model.variance[c].assign(d, 0.0);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != d) throw ShapeError("train_nb: ragged feature rows");
        for (std::size_t j = 0; j < d; ++j) model.mean[y[i]][j] += x[i][j];
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < d; ++j) model.mean[c][j] /= static_cast<double>(n[c]);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = x[i][j] - model.mean[y[i]][j];
            model.variance[y[i]][j] += diff * diff;
        }

    // Smoothing scale: 1e-9 times the largest global feature variance.
    std::vector<double> global_mean(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) global_mean[j] += row[j];
    for (std::size_t j = 0; j < d; ++j) global_mean[j] /= static_cast<double>(x.size());
    double max_var = 0.0;
    std::vector<double> global_var(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - global_mean[j];
            global_var[j] += diff * diff;
        }
    for (std::size_t j = 0; j < d; ++j)
        max_var = std::max(max_var, global_var[j] / static_cast<double>(x.size()));
    model.smoothing = max_var > 0.0 ? 1e-9 * max_var : 1e-9;

    for (int c = 0; c < 2; ++c)
        for (std::size_t j = 0; j < d; ++j)
            model.variance[c][j] = model.variance[c][j] / static_cast<double>(n[c]) + model.smoothing;
    return model;
}

inline GaussianNb train_nb(const std::vector<data::EncodedRecord>& records) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(records.size());
    y.reserve(records.size());
    for (const auto& r : records) {
        x.emplace_back(r.x.begin(), r.x.end());
        y.push_back(r.y);
    }
    return train_nb(x, y);
}

// argmax over log prior + sum of per-feature Gaussian log-likelihoods; the
// reported posterior is the pair normalized in a numerically safe way.
inline Prediction predict_nb(const GaussianNb& model, std::span<const double> x) {
    const std::size_t d = model.feature_count();
    if (x.size() != d)
        throw ShapeError("predict_nb: input length " + std::to_string(x.size()) +
                         ", model expects " + std::to_string(d));
    std::array<double, 2> joint{};
    for (int c = 0; c < 2; ++c) {
        double ll = std::log(model.prior[c]);
        for (std::size_t j = 0; j < d; ++j) {
            const double v = model.variance[c][j];
            const double diff = x[j] - model.mean[c][j];
            ll += -0.5 * std::log(2.0 * M_PI * v) - diff * diff / (2.0 * v);
        }
        joint[c] = ll;
    }
    const double m = std::max(joint[0], joint[1]);
    const double e0 = std::exp(joint[0] - m);
    const double e1 = std::exp(joint[1] - m);
    const double p1 = e1 / (e0 + e1);
    const int cls = p1 > 0.5 ? 1 : 0;
    return Prediction{cls, cls == 1 ? p1 : 1.0 - p1, p1};
}

}  // namespace idskit::baselines
