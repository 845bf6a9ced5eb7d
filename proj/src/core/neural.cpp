// SPDX-License-Identifier: Apache-2.0
#include "neural.hpp"

#include <fmt/format.h>

#include "binio.hpp"

namespace dcbleo::neural {

namespace {

constexpr char kParamsMagic[9] = "DCBQNET1";
constexpr std::uint64_t kParamsVersion = 1;

DenseLayer zero_layer(int in, int out) {
    return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

void glorot(DenseLayer& layer, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            layer.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    layer.bias.setZero();
}

std::span<double> view(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> view(const Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

QNetworkParams QNetworkParams::zeros(int input_dim, const std::vector<int>& hidden, int num_actions) {
    if (input_dim < 1 || num_actions < 1 || hidden.empty())
        throw ShapeError("network needs input_dim >= 1, at least one hidden layer and >= 1 action");
    QNetworkParams p;
    int in = input_dim;
    for (int w : hidden) {
        if (w < 1) throw ShapeError("hidden widths must be >= 1");
        p.trunk.push_back(zero_layer(in, w));
        in = w;
    }
    p.value = zero_layer(in, 1);
    p.advantage = zero_layer(in, num_actions);
    return p;
}

QNetworkParams QNetworkParams::random(int input_dim, const std::vector<int>& hidden, int num_actions, Rng& rng) {
    auto p = zeros(input_dim, hidden, num_actions);
    for (auto& l : p.trunk) glorot(l, rng);
    glorot(p.value, rng);
    glorot(p.advantage, rng);
    return p;
}

int QNetworkParams::input_dim() const { return static_cast<int>(trunk.front().weight.cols()); }

std::vector<int> QNetworkParams::hidden_widths() const {
    std::vector<int> w;
    for (const auto& l : trunk) w.push_back(static_cast<int>(l.weight.rows()));
    return w;
}

std::size_t QNetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
}

bool QNetworkParams::all_finite() const {
    for (auto t : tensors())
        for (double v : t)
            if (!std::isfinite(v)) return false;
    return true;
}

bool QNetworkParams::same_shape(const QNetworkParams& other) const {
    return trunk.size() == other.trunk.size() && input_dim() == other.input_dim() &&
           hidden_widths() == other.hidden_widths() && num_actions() == other.num_actions();
}

std::vector<std::span<double>> QNetworkParams::tensors() {
    std::vector<std::span<double>> out;
    for (auto& l : trunk) {
        out.push_back(view(l.weight));
        out.push_back(view(l.bias));
    }
    out.push_back(view(value.weight));
    out.push_back(view(value.bias));
    out.push_back(view(advantage.weight));
    out.push_back(view(advantage.bias));
    return out;
}

std::vector<std::span<const double>> QNetworkParams::tensors() const {
    std::vector<std::span<const double>> out;
    for (const auto& l : trunk) {
        out.push_back(view(l.weight));
        out.push_back(view(l.bias));
    }
    out.push_back(view(value.weight));
    out.push_back(view(value.bias));
    out.push_back(view(advantage.weight));
    out.push_back(view(advantage.bias));
    return out;
}

void QNetworkParams::set_zero() {
    for (auto t : tensors()) std::fill(t.begin(), t.end(), 0.0);
}

ForwardOutput forward(const QNetworkParams& params, std::span<const double> input) {
    if (static_cast<int>(input.size()) != params.input_dim())
        throw ShapeError(fmt::format("input length {} != network input_dim {}", input.size(), params.input_dim()));
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
    for (const auto& l : params.trunk) h = (l.weight * h + l.bias).array().tanh().matrix();
    ForwardOutput out;
    out.value = (params.value.weight * h)(0) + params.value.bias(0);
    out.advantage = params.advantage.weight * h + params.advantage.bias;
    out.q = (out.advantage.array() + (out.value - out.advantage.mean())).matrix();
    return out;
}

Eigen::MatrixXd forward_batch(const QNetworkParams& params, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != params.input_dim())
        throw ShapeError(fmt::format("input rows {} != network input_dim {}", inputs.rows(), params.input_dim()));
    Eigen::MatrixXd h = inputs;
    for (const auto& l : params.trunk) h = ((l.weight * h).colwise() + l.bias).array().tanh().matrix();
    const Eigen::RowVectorXd v = (params.value.weight * h).array() + params.value.bias(0);
    Eigen::MatrixXd a = (params.advantage.weight * h).colwise() + params.advantage.bias;
    const Eigen::RowVectorXd mean = a.colwise().mean();
    a.rowwise() += v - mean;
    return a;
}

Gradient backward(const QNetworkParams& params, const TdBatch& batch, double scale) {
    const auto n = static_cast<Eigen::Index>(batch.actions.size());
    if (n == 0) throw ShapeError("backward needs a non-empty batch");
    if (batch.inputs.cols() != n || static_cast<Eigen::Index>(batch.targets.size()) != n)
        throw ShapeError("batch inputs, actions and targets disagree in length");
    if (batch.inputs.rows() != params.input_dim()) throw ShapeError("batch input rows != network input_dim");

    // Forward pass, keeping activations.
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(params.trunk.size() + 1);
    acts.push_back(batch.inputs);
    for (const auto& l : params.trunk)
        acts.push_back(((l.weight * acts.back()).colwise() + l.bias).array().tanh().matrix());
    const Eigen::MatrixXd& top = acts.back();
    const Eigen::RowVectorXd v = (params.value.weight * top).array() + params.value.bias(0);
    Eigen::MatrixXd a = (params.advantage.weight * top).colwise() + params.advantage.bias;
    const Eigen::RowVectorXd mean = a.colwise().mean();

    const auto num_actions = params.num_actions();
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(num_actions, n);
    Gradient out;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index b = 0; b < n; ++b) {
        const int act = batch.actions[static_cast<std::size_t>(b)];
        if (act < 0 || act >= num_actions) throw ShapeError(fmt::format("action index {} out of range", act));
        const double q = v(b) + a(act, b) - mean(b);
        const double err = q - batch.targets[static_cast<std::size_t>(b)];
        out.loss += 0.5 * err * err * inv_n * scale;
        dq(act, b) = err * inv_n * scale;
    }

    // Dueling combination: dQ_a/dV = 1, dQ_a/dA_j = delta_aj - 1/|A|.
    const Eigen::RowVectorXd dv = dq.colwise().sum();
    Eigen::MatrixXd da = dq;
    da.rowwise() -= dv / static_cast<double>(num_actions);

    out.grad = QNetworkParams::zeros(params.input_dim(), params.hidden_widths(), num_actions);
    out.grad.advantage.weight.noalias() = da * top.transpose();
    out.grad.advantage.bias = da.rowwise().sum();
    out.grad.value.weight.noalias() = dv * top.transpose();
    out.grad.value.bias(0) = dv.sum();

    Eigen::MatrixXd dh = params.advantage.weight.transpose() * da + params.value.weight.transpose() * dv;
    for (std::size_t li = params.trunk.size(); li-- > 0;) {
        const Eigen::MatrixXd& h = acts[li + 1];
        const Eigen::MatrixXd dz = dh.array() * (1.0 - h.array().square());
        out.grad.trunk[li].weight.noalias() = dz * acts[li].transpose();
        out.grad.trunk[li].bias = dz.rowwise().sum();
        if (li > 0) dh = params.trunk[li].weight.transpose() * dz;
    }
    return out;
}

double clip_gradient_norm(QNetworkParams& grad, double cap) {
    double sq = 0.0;
    for (auto t : grad.tensors())
        for (double v : t) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > cap && norm > 0.0) {
        const double s = cap / norm;
        for (auto t : grad.tensors())
            for (double& v : t) v *= s;
    }
    return norm;
}

AdamState AdamState::for_params(const QNetworkParams& params) {
    AdamState s;
    s.first = QNetworkParams::zeros(params.input_dim(), params.hidden_widths(), params.num_actions());
    s.second = s.first;
    return s;
}

void adam_step(QNetworkParams& params, const QNetworkParams& grad, AdamState& state, double learning_rate,
               const AdamOptions& options) {
    if (!params.same_shape(grad) || !params.same_shape(state.first))
        throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
    ++state.step;
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
    auto p = params.tensors();
    auto g = grad.tensors();
    auto m = state.first.tensors();
    auto v = state.second.tensors();
    for (std::size_t t = 0; t < p.size(); ++t) {
        for (std::size_t i = 0; i < p[t].size(); ++i) {
            const double gi = g[t][i];
            m[t][i] = options.beta1 * m[t][i] + (1.0 - options.beta1) * gi;
            v[t][i] = options.beta2 * v[t][i] + (1.0 - options.beta2) * gi * gi;
            const double mhat = m[t][i] / c1;
            const double vhat = v[t][i] / c2;
            p[t][i] -= learning_rate * mhat / (std::sqrt(vhat) + options.epsilon);
        }
    }
}

void write_params(std::ostream& os, const QNetworkParams& params) {
    binio::put_magic(os, kParamsMagic);
    binio::put_u64(os, kParamsVersion);
    binio::put_u64(os, static_cast<std::uint64_t>(params.input_dim()));
    const auto widths = params.hidden_widths();
    binio::put_u64(os, widths.size());
    for (int w : widths) binio::put_u64(os, static_cast<std::uint64_t>(w));
    binio::put_u64(os, static_cast<std::uint64_t>(params.num_actions()));
    for (auto t : params.tensors()) binio::put_f64s(os, t);
    if (!os) throw IoError("failed writing network parameters");
}

QNetworkParams read_params(std::istream& is) {
    binio::expect_magic(is, kParamsMagic);
    const auto version = binio::get_u64(is);
    if (version != kParamsVersion) throw IoError(fmt::format("unsupported parameter format version {}", version));
    const auto input = binio::get_u64(is);
    const auto depth = binio::get_u64(is);
    if (depth == 0 || depth > 64) throw IoError("corrupt parameter header (depth)");
    std::vector<int> widths;
    for (std::uint64_t i = 0; i < depth; ++i) widths.push_back(static_cast<int>(binio::get_u64(is)));
    const auto actions = binio::get_u64(is);
    auto params = QNetworkParams::zeros(static_cast<int>(input), widths, static_cast<int>(actions));
    for (auto t : params.tensors()) binio::get_f64s(is, t);
    return params;
}

}  // namespace dcbleo::neural
