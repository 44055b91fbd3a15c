#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace projmon {

enum class Activation { relu, sigmoid, tanh, softplus };

// Feed-forward network with H hidden layers and a linear output
// y = beta' f_H(x). Hidden layers may carry biases; the output does not.
struct MlpLayer {
    Eigen::MatrixXd w;  // n_j x n_{j-1}
    Eigen::VectorXd b;  // n_j, zero-length when bias-free
    Activation act = Activation::relu;
    double softplus_k = 1.0;

    bool has_bias() const { return b.size() > 0; }
};

struct MlpForward {
    double y = 0;
    Eigen::VectorXd features;  // f_H(x)
};

struct MlpModel {
    std::vector<MlpLayer> layers;
    Eigen::VectorXd beta;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().w.cols(); }
    std::size_t feature_dim() const { return layers.empty() ? 0 : layers.back().w.rows(); }
    std::size_t depth() const { return layers.size(); }
    bool bias_free() const;
    std::size_t parameter_count() const;

    MlpForward forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;

    std::string to_json() const;
    static MlpModel from_json(const std::string& text);

    // Glorot-uniform weights, zero biases (omitted when with_bias is false).
    static MlpModel init(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         Activation act, std::uint64_t seed, bool with_bias = true);
};

double activate(Activation a, double x, double softplus_k = 1.0);
double activate_deriv(Activation a, double x, double softplus_k = 1.0);

// Mean squared error (1/n) sum (z_i - f_net(x_i))^2 and its gradient in the
// flat parameter order (W1, b1, ..., WH, bH, beta), matrices row-major.
double mse_loss(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::VectorXd mse_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& z);

Eigen::VectorXd flatten_params(const MlpModel& model);
void set_params(MlpModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta);

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int epochs = 100;
    int batch = 32;
    double val_split = 0.2;  // final fraction of the window, time-ordered
    AdamParams adam;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainResult {
    MlpModel model;
    std::vector<double> train_loss;  // one entry per epoch
    std::vector<double> val_loss;    // empty when val_split == 0
};

// Adam on the least-squares loss with bias-corrected moments. Batches are
// reshuffled each epoch from the run seed; the validation split is the
// final val_split fraction of the provided window, never shuffled in.
TrainResult train(const MlpModel& init, const Eigen::Ref<const Eigen::MatrixXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& z, const TrainConfig& cfg);

// Checks ||f_H(x; theta~) - f_H(x; theta)||_2 <= L_H sqrt(H) ||x|| ||theta~ - theta||_F
// for bias-free networks with activations fixing 0 (relu, tanh).
// L_H = max_k L_Hk with L_Hk built from the perturbed operator norms below
// layer k and the original ones above it.
struct LipschitzCheck {
    double lhs = 0;
    double rhs = 0;
    bool holds = false;
};

LipschitzCheck lipschitz_bound_check(const MlpModel& model, const MlpModel& perturbed,
                                     const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace projmon
