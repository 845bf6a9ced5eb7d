// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace dcbleo::neural {

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

/// Dueling Q-network: tanh trunk, scalar value head and |A|-wide advantage head.
/// The same type doubles as a gradient container.
struct QNetworkParams {
    std::vector<DenseLayer> trunk;
    DenseLayer value;
    DenseLayer advantage;

    static QNetworkParams zeros(int input_dim, const std::vector<int>& hidden, int num_actions);
    /// Glorot-uniform weights, zero biases.
    static QNetworkParams random(int input_dim, const std::vector<int>& hidden, int num_actions, Rng& rng);

    [[nodiscard]] int input_dim() const;
    [[nodiscard]] int num_actions() const { return static_cast<int>(advantage.weight.rows()); }
    [[nodiscard]] std::vector<int> hidden_widths() const;
    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] bool all_finite() const;
    [[nodiscard]] bool same_shape(const QNetworkParams& other) const;

    /// Views over every tensor in a fixed order (trunk layers, value head, advantage head; weight then bias).
    std::vector<std::span<double>> tensors();
    [[nodiscard]] std::vector<std::span<const double>> tensors() const;

    void set_zero();
};

struct ForwardOutput {
    double value = 0.0;
    Eigen::VectorXd advantage;
    Eigen::VectorXd q;  // value + advantage - mean(advantage)
};

ForwardOutput forward(const QNetworkParams& params, std::span<const double> input);

/// Q-values for a batch whose columns are state encodings. Returns |A| x batch.
Eigen::MatrixXd forward_batch(const QNetworkParams& params, const Eigen::MatrixXd& inputs);

struct TdBatch {
    Eigen::MatrixXd inputs;  // input_dim x batch
    std::vector<int> actions;
    std::vector<double> targets;
};

struct Gradient {
    QNetworkParams grad;
    double loss = 0.0;
};

/// Gradient of scale * (1/B) sum_b 0.5 (Q(s_b, a_b) - y_b)^2.
Gradient backward(const QNetworkParams& params, const TdBatch& batch, double scale = 1.0);

/// Rescales `grad` in place so its global L2 norm is at most `cap`. Returns the norm before clipping.
double clip_gradient_norm(QNetworkParams& grad, double cap);

struct AdamState {
    QNetworkParams first;
    QNetworkParams second;
    long step = 0;

    static AdamState for_params(const QNetworkParams& params);
};

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

void adam_step(QNetworkParams& params, const QNetworkParams& grad, AdamState& state, double learning_rate,
               const AdamOptions& options = {});

// Versioned little-endian binary tensor list.
void write_params(std::ostream& os, const QNetworkParams& params);
QNetworkParams read_params(std::istream& is);

}  // namespace dcbleo::neural
