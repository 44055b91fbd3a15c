#include "projmon/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "projmon/common.hpp"
#include "projmon/rng.hpp"

namespace projmon {

double activate(Activation a, double x, double softplus_k) {
    switch (a) {
        case Activation::relu:
            return x > 0 ? x : 0.0;
        case Activation::sigmoid:
            return 1.0 / (1.0 + std::exp(-x));
        case Activation::tanh:
            return std::tanh(x);
        case Activation::softplus: {
            const double u = 2.0 * softplus_k * x;
            const double sp = std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
            return sp / (2.0 * softplus_k);
        }
    }
    return x;
}

double activate_deriv(Activation a, double x, double softplus_k) {
    switch (a) {
        case Activation::relu:
            return x > 0 ? 1.0 : 0.0;
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::softplus:
            return 1.0 / (1.0 + std::exp(-2.0 * softplus_k * x));
    }
    return 1.0;
}

bool MlpModel::bias_free() const {
    return std::none_of(layers.begin(), layers.end(),
                        [](const MlpLayer& l) { return l.has_bias(); });
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = static_cast<std::size_t>(beta.size());
    for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
}

MlpForward MlpModel::forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (layers.empty()) throw_invalid("network has no layers");
    if (x.size() != static_cast<Eigen::Index>(input_dim())) {
        throw_invalid("forward: input dimension mismatch");
    }
    Eigen::VectorXd a = x;
    for (const auto& layer : layers) {
        Eigen::VectorXd pre = layer.w * a;
        if (layer.has_bias()) pre += layer.b;
        if (!pre.allFinite()) throw_domain("forward: non-finite pre-activation");
        a.resize(pre.size());
        for (Eigen::Index i = 0; i < pre.size(); ++i) {
            a(i) = activate(layer.act, pre(i), layer.softplus_k);
        }
    }
    MlpForward out;
    out.features = a;
    out.y = beta.dot(a);
    if (!std::isfinite(out.y)) throw_domain("forward: non-finite output");
    return out;
}

MlpModel MlpModel::init(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                        Activation act, std::uint64_t seed, bool with_bias) {
    if (hidden.empty()) throw_invalid("network needs at least one hidden layer");
    MlpModel m;
    Rng rng = make_rng(derive_seed(seed, seed_tag::train_init));
    std::size_t fan_in = input_dim;
    for (std::size_t width : hidden) {
        MlpLayer layer;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + width));
        std::uniform_real_distribution<double> u(-limit, limit);
        layer.w.resize(width, fan_in);
        for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.w.cols(); ++j) layer.w(i, j) = u(rng);
        }
        if (with_bias) layer.b = Eigen::VectorXd::Zero(width);
        layer.act = act;
        m.layers.push_back(std::move(layer));
        fan_in = width;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + 1));
    std::uniform_real_distribution<double> u(-limit, limit);
    m.beta.resize(fan_in);
    for (Eigen::Index i = 0; i < m.beta.size(); ++i) m.beta(i) = u(rng);
    return m;
}

namespace {

struct BackpropScratch {
    std::vector<Eigen::VectorXd> activations;  // a_0 = x, ..., a_H
    std::vector<Eigen::VectorXd> pre;          // pre-activations per layer
};

double forward_into(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                    BackpropScratch& s) {
    s.activations.assign(1, x);
    s.pre.clear();
    Eigen::VectorXd a = x;
    for (const auto& layer : model.layers) {
        Eigen::VectorXd pre = layer.w * a;
        if (layer.has_bias()) pre += layer.b;
        s.pre.push_back(pre);
        a.resize(pre.size());
        for (Eigen::Index i = 0; i < pre.size(); ++i) {
            a(i) = activate(layer.act, pre(i), layer.softplus_k);
        }
        s.activations.push_back(a);
    }
    return model.beta.dot(a);
}

struct Gradients {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd beta;

    void init_like(const MlpModel& m) {
        w.clear();
        b.clear();
        for (const auto& l : m.layers) {
            w.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
            b.push_back(Eigen::VectorXd::Zero(l.b.size()));
        }
        beta = Eigen::VectorXd::Zero(m.beta.size());
    }
    void scale(double s) {
        for (auto& g : w) g *= s;
        for (auto& g : b) g *= s;
        beta *= s;
    }
};

// Accumulates the gradient of (z - f_net(x))^2 for one example.
void backprop_one(const MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                  BackpropScratch& s, Gradients& g, double* loss) {
    const double y = forward_into(model, x, s);
    const double err = z - y;
    if (loss) *loss += err * err;
    const double dy = -2.0 * err;  // dL/dy

    g.beta += dy * s.activations.back();
    Eigen::VectorXd delta = dy * model.beta;
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const auto& layer = model.layers[li];
        for (Eigen::Index i = 0; i < delta.size(); ++i) {
            delta(i) *= activate_deriv(layer.act, s.pre[li](i), layer.softplus_k);
        }
        g.w[li] += delta * s.activations[li].transpose();
        if (layer.has_bias()) g.b[li] += delta;
        if (li > 0) delta = (layer.w.transpose() * delta).eval();
    }
}

}  // namespace

double mse_loss(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (x.rows() != z.size()) throw_invalid("loss: row/response count mismatch");
    if (x.rows() == 0) throw_invalid("loss: empty sample");
    double loss = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double err = z(i) - model.forward(x.row(i).transpose()).y;
        loss += err * err;
    }
    return loss / static_cast<double>(x.rows());
}

Eigen::VectorXd flatten_params(const MlpModel& model) {
    Eigen::VectorXd theta(model.parameter_count());
    Eigen::Index pos = 0;
    for (const auto& l : model.layers) {
        for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
            for (Eigen::Index j = 0; j < l.w.cols(); ++j) theta(pos++) = l.w(i, j);
        }
        for (Eigen::Index i = 0; i < l.b.size(); ++i) theta(pos++) = l.b(i);
    }
    for (Eigen::Index i = 0; i < model.beta.size(); ++i) theta(pos++) = model.beta(i);
    return theta;
}

void set_params(MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() != static_cast<Eigen::Index>(model.parameter_count())) {
        throw_invalid("set_params: parameter count mismatch");
    }
    Eigen::Index pos = 0;
    for (auto& l : model.layers) {
        for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
            for (Eigen::Index j = 0; j < l.w.cols(); ++j) l.w(i, j) = theta(pos++);
        }
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = theta(pos++);
    }
    for (Eigen::Index i = 0; i < model.beta.size(); ++i) model.beta(i) = theta(pos++);
}

Eigen::VectorXd mse_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (x.rows() != z.size() || x.rows() == 0) throw_invalid("gradient: bad sample");
    Gradients g;
    g.init_like(model);
    BackpropScratch scratch;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        backprop_one(model, x.row(i).transpose(), z(i), scratch, g, nullptr);
    }
    g.scale(1.0 / static_cast<double>(x.rows()));

    Eigen::VectorXd flat(model.parameter_count());
    Eigen::Index pos = 0;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        for (Eigen::Index i = 0; i < g.w[li].rows(); ++i) {
            for (Eigen::Index j = 0; j < g.w[li].cols(); ++j) flat(pos++) = g.w[li](i, j);
        }
        for (Eigen::Index i = 0; i < g.b[li].size(); ++i) flat(pos++) = g.b[li](i);
    }
    for (Eigen::Index i = 0; i < g.beta.size(); ++i) flat(pos++) = g.beta(i);
    return flat;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw_invalid("epochs must be >= 0");
    if (batch < 1) throw_invalid("batch size must be >= 1");
    if (!(val_split >= 0.0 && val_split < 1.0)) throw_invalid("val_split must lie in [0, 1)");
}

TrainResult train(const MlpModel& init, const Eigen::Ref<const Eigen::MatrixXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& z, const TrainConfig& cfg) {
    cfg.validate();
    if (x.rows() != z.size()) throw_invalid("train: row/response count mismatch");
    const Eigen::Index n = x.rows();
    const Eigen::Index n_val = static_cast<Eigen::Index>(
        std::floor(static_cast<double>(n) * cfg.val_split + 1e-9));
    const Eigen::Index n_train = n - n_val;
    if (n_train < cfg.batch) throw_invalid("train: fewer training pairs than one batch");

    TrainResult res;
    res.model = init;

    Eigen::VectorXd theta = flatten_params(res.model);
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
    long step = 0;

    std::vector<Eigen::Index> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    BackpropScratch scratch;
    Gradients g;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng = make_rng(derive_seed(cfg.seed, seed_tag::train_shuffle, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n_train; start += cfg.batch) {
            const Eigen::Index stop = std::min<Eigen::Index>(start + cfg.batch, n_train);
            g.init_like(res.model);
            double batch_loss = 0;
            for (Eigen::Index i = start; i < stop; ++i) {
                backprop_one(res.model, x.row(order[i]).transpose(), z(order[i]), scratch, g,
                             &batch_loss);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            g.scale(inv);
            epoch_loss += batch_loss;
            seen += stop - start;
            if (!std::isfinite(batch_loss)) {
                throw_domain("training diverged at epoch " + std::to_string(epoch + 1));
            }

            // flatten the batch gradient in the canonical parameter order
            Eigen::VectorXd grad(theta.size());
            Eigen::Index pos = 0;
            for (std::size_t li = 0; li < res.model.layers.size(); ++li) {
                for (Eigen::Index i = 0; i < g.w[li].rows(); ++i) {
                    for (Eigen::Index j = 0; j < g.w[li].cols(); ++j) {
                        grad(pos++) = g.w[li](i, j);
                    }
                }
                for (Eigen::Index i = 0; i < g.b[li].size(); ++i) grad(pos++) = g.b[li](i);
            }
            for (Eigen::Index i = 0; i < g.beta.size(); ++i) grad(pos++) = g.beta(i);

            // Adam with bias-corrected moments
            ++step;
            m1 = cfg.adam.beta1 * m1 + (1.0 - cfg.adam.beta1) * grad;
            m2 = cfg.adam.beta2 * m2 + (1.0 - cfg.adam.beta2) * grad.cwiseProduct(grad);
            const double bc1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(step));
            theta.array() -= cfg.adam.lr * (m1.array() / bc1) /
                             ((m2.array() / bc2).sqrt() + cfg.adam.eps);
            set_params(res.model, theta);
        }
        res.train_loss.push_back(epoch_loss / static_cast<double>(seen));
        if (n_val > 0) {
            res.val_loss.push_back(
                mse_loss(res.model, x.bottomRows(n_val), z.tail(n_val)));
        }
    }
    return res;
}

namespace {

double operator_norm(const Eigen::MatrixXd& w) {
    return w.jacobiSvd().singularValues()(0);
}

double lipschitz_rho(Activation a) {
    switch (a) {
        case Activation::relu:
        case Activation::tanh:
            return 1.0;
        default:
            throw_invalid("Lipschitz bound requires activations with sigma(0) = 0 "
                          "(relu or tanh)");
    }
}

}  // namespace

LipschitzCheck lipschitz_bound_check(const MlpModel& model, const MlpModel& perturbed,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (!model.bias_free() || !perturbed.bias_free()) {
        throw_invalid("Lipschitz bound requires bias-free networks");
    }
    const std::size_t h = model.depth();
    if (perturbed.depth() != h) throw_invalid("Lipschitz bound: depth mismatch");
    for (std::size_t i = 0; i < h; ++i) {
        if (model.layers[i].w.rows() != perturbed.layers[i].w.rows() ||
            model.layers[i].w.cols() != perturbed.layers[i].w.cols()) {
            throw_invalid("Lipschitz bound: layer shape mismatch");
        }
    }

    std::vector<double> rho(h), norm_orig(h), norm_pert(h);
    double frob_sq = 0;
    for (std::size_t i = 0; i < h; ++i) {
        rho[i] = lipschitz_rho(model.layers[i].act);
        norm_orig[i] = operator_norm(model.layers[i].w);
        norm_pert[i] = operator_norm(perturbed.layers[i].w);
        frob_sq += (perturbed.layers[i].w - model.layers[i].w).squaredNorm();
    }

    // L_Hk: perturbed operator norms strictly below the swapped layer,
    // original ones strictly above, rho_k alone at the swap.
    double l_h = 0;
    for (std::size_t k = 0; k < h; ++k) {
        double prod = rho[k];
        for (std::size_t i = 0; i < k; ++i) prod *= rho[i] * norm_pert[i];
        for (std::size_t i = k + 1; i < h; ++i) prod *= rho[i] * norm_orig[i];
        l_h = std::max(l_h, prod);
    }

    LipschitzCheck out;
    // features only; the output layer is not part of the hidden-layer map
    Eigen::VectorXd f0 = model.forward(x).features;
    Eigen::VectorXd f1 = perturbed.forward(x).features;
    out.lhs = (f1 - f0).norm();
    out.rhs = l_h * std::sqrt(static_cast<double>(h)) * x.norm() * std::sqrt(frob_sq);
    out.holds = out.lhs <= out.rhs + 1e-9;
    return out;
}

namespace {

nlohmann::json activation_to_json(const MlpLayer& l) {
    switch (l.act) {
        case Activation::relu:
            return "relu";
        case Activation::sigmoid:
            return "sigmoid";
        case Activation::tanh:
            return "tanh";
        case Activation::softplus:
            return nlohmann::json{{"softplus", l.softplus_k}};
    }
    return "relu";
}

void activation_from_json(const nlohmann::json& j, MlpLayer& l) {
    if (j.is_object()) {
        l.act = Activation::softplus;
        l.softplus_k = j.at("softplus").get<double>();
        return;
    }
    const std::string s = j.get<std::string>();
    if (s == "relu") {
        l.act = Activation::relu;
    } else if (s == "sigmoid") {
        l.act = Activation::sigmoid;
    } else if (s == "tanh") {
        l.act = Activation::tanh;
    } else {
        throw_io("unknown activation '" + s + "'");
    }
}

}  // namespace

std::string MlpModel::to_json() const {
    nlohmann::json j;
    std::vector<std::size_t> shapes{input_dim()};
    for (const auto& l : layers) shapes.push_back(static_cast<std::size_t>(l.w.rows()));
    j["shapes"] = shapes;
    j["activations"] = nlohmann::json::array();
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (const auto& l : layers) {
        j["activations"].push_back(activation_to_json(l));
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.w.size()));
        for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
            for (Eigen::Index jj = 0; jj < l.w.cols(); ++jj) w.push_back(l.w(i, jj));
        }
        j["weights"].push_back(w);
        j["biases"].push_back(std::vector<double>(l.b.data(), l.b.data() + l.b.size()));
    }
    j["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
    return j.dump();
}

MlpModel MlpModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw_io("model JSON: invalid");
    MlpModel m;
    try {
        const auto shapes = j.at("shapes").get<std::vector<std::size_t>>();
        if (shapes.size() < 2) throw_io("model JSON: needs at least one layer");
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        const auto& acts = j.at("activations");
        for (std::size_t li = 0; li + 1 < shapes.size(); ++li) {
            MlpLayer layer;
            const std::size_t rows = shapes[li + 1], cols = shapes[li];
            const auto w = weights.at(li).get<std::vector<double>>();
            if (w.size() != rows * cols) throw_io("model JSON: weight size mismatch");
            layer.w.resize(rows, cols);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t jj = 0; jj < cols; ++jj) layer.w(i, jj) = w[i * cols + jj];
            }
            const auto b = biases.at(li).get<std::vector<double>>();
            if (!b.empty()) {
                if (b.size() != rows) throw_io("model JSON: bias size mismatch");
                layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
            }
            activation_from_json(acts.at(li), layer);
            m.layers.push_back(std::move(layer));
        }
        const auto beta = j.at("beta").get<std::vector<double>>();
        if (beta.size() != shapes.back()) throw_io("model JSON: beta size mismatch");
        m.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
    } catch (const nlohmann::json::exception& e) {
        throw_io(std::string("model JSON: ") + e.what());
    }
    return m;
}

}  // namespace projmon
