#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "malscope/rng.hpp"

namespace malscope::nn {

using Matrix = Eigen::MatrixXd;

/// A trainable tensor with its gradient and Adam moments.
struct Param {
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;
    bool decay = false;  // subject to L2 penalty (kernels only)

    void resize_state();
};

/// Layers process a batch laid out one sample per row.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Matrix forward(const Matrix& x, bool training, Rng* rng) = 0;
    /// Gradient w.r.t. the input of the last forward call; accumulates
    /// parameter gradients.
    virtual Matrix backward(const Matrix& dy) = 0;
    virtual std::vector<Param*> params() { return {}; }
    virtual nlohmann::json to_json() const = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;
};

class Dense : public Layer {
public:
    Dense(Eigen::Index in, Eigen::Index out);
    /// Glorot-uniform kernel, zero bias.
    void init(Rng& rng);

    Matrix forward(const Matrix& x, bool training, Rng* rng) override;
    Matrix backward(const Matrix& dy) override;
    std::vector<Param*> params() override { return {&kernel_, &bias_}; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    Param& kernel() { return kernel_; }
    Param& bias() { return bias_; }
    const Param& kernel() const { return kernel_; }

private:
    Param kernel_;  // in x out
    Param bias_;    // 1 x out
    Matrix input_;
};

class Relu : public Layer {
public:
    Matrix forward(const Matrix& x, bool training, Rng* rng) override;
    Matrix backward(const Matrix& dy) override;
    nlohmann::json to_json() const override { return {{"type", "relu"}}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }

private:
    Matrix input_;
};

class LeakyRelu : public Layer {
public:
    explicit LeakyRelu(double slope) : slope_(slope) {}
    Matrix forward(const Matrix& x, bool training, Rng* rng) override;
    Matrix backward(const Matrix& dy) override;
    nlohmann::json to_json() const override { return {{"type", "leaky_relu"}, {"slope", slope_}}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<LeakyRelu>(*this); }

private:
    double slope_;
    Matrix input_;
};

/// Inverted dropout; identity outside training.
class Dropout : public Layer {
public:
    explicit Dropout(double rate) : rate_(rate) {}
    Matrix forward(const Matrix& x, bool training, Rng* rng) override;
    Matrix backward(const Matrix& dy) override;
    nlohmann::json to_json() const override { return {{"type", "dropout"}, {"rate", rate_}}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

private:
    double rate_;
    Matrix mask_;
    bool active_ = false;
};

/// Batch statistics while training, running averages otherwise.
class BatchNorm : public Layer {
public:
    explicit BatchNorm(Eigen::Index width, double momentum = 0.9, double eps = 1e-5);

    Matrix forward(const Matrix& x, bool training, Rng* rng) override;
    Matrix backward(const Matrix& dy) override;
    std::vector<Param*> params() override { return {&gamma_, &beta_}; }
    nlohmann::json to_json() const override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }

    void set_running(Eigen::RowVectorXd mean, Eigen::RowVectorXd var) {
        running_mean_ = std::move(mean);
        running_var_ = std::move(var);
    }

private:
    Param gamma_, beta_;
    Eigen::RowVectorXd running_mean_, running_var_;
    double momentum_, eps_;
    Matrix xhat_;
    Eigen::RowVectorXd inv_std_;
    bool batch_mode_ = false;
};

class Sequential {
public:
    Sequential() = default;
    Sequential(const Sequential& other);
    Sequential& operator=(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    template <class L, class... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    Matrix forward(const Matrix& x, bool training, Rng* rng);
    Matrix backward(const Matrix& dy);
    std::vector<Param*> params();
    void zero_grad();

    nlohmann::json to_json() const;
    static Sequential from_json(const nlohmann::json& j);

    std::size_t size() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment update with bias correction.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(const std::vector<Param*>& params);
    long steps() const { return t_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
};

double sigmoid(double z);
/// log(1 + e^z) without overflow.
double softplus(double z);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace malscope::nn
