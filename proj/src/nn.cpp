#include "malscope/nn.hpp"

#include <cmath>

#include "malscope/error.hpp"

namespace malscope::nn {

void Param::resize_state() {
    grad = Matrix::Zero(value.rows(), value.cols());
    m = Matrix::Zero(value.rows(), value.cols());
    v = Matrix::Zero(value.rows(), value.cols());
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

nlohmann::json matrix_to_json(const Matrix& m) {
    std::vector<double> flat(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) flat[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    auto rows = j.at("rows").get<Eigen::Index>();
    auto cols = j.at("cols").get<Eigen::Index>();
    auto flat = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw data_error("matrix payload size mismatch");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = flat[static_cast<std::size_t>(i * cols + c)];
    return m;
}

// --- Dense ----------------------------------------------------------------

Dense::Dense(Eigen::Index in, Eigen::Index out) {
    kernel_.value = Matrix::Zero(in, out);
    kernel_.decay = true;
    bias_.value = Matrix::Zero(1, out);
    kernel_.resize_state();
    bias_.resize_state();
}

void Dense::init(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(kernel_.value.rows() + kernel_.value.cols()));
    for (Eigen::Index i = 0; i < kernel_.value.rows(); ++i)
        for (Eigen::Index j = 0; j < kernel_.value.cols(); ++j) kernel_.value(i, j) = rng.uniform(-limit, limit);
    bias_.value.setZero();
}

Matrix Dense::forward(const Matrix& x, bool, Rng*) {
    input_ = x;
    Matrix y = x * kernel_.value;
    y.rowwise() += bias_.value.row(0);
    return y;
}

Matrix Dense::backward(const Matrix& dy) {
    kernel_.grad.noalias() += input_.transpose() * dy;
    bias_.grad += dy.colwise().sum();
    return dy * kernel_.value.transpose();
}

nlohmann::json Dense::to_json() const {
    return {{"type", "dense"}, {"kernel", matrix_to_json(kernel_.value)}, {"bias", matrix_to_json(bias_.value)}};
}

// --- Activations ------------------------------------------------------------

Matrix Relu::forward(const Matrix& x, bool, Rng*) {
    input_ = x;
    return x.cwiseMax(0.0);
}

Matrix Relu::backward(const Matrix& dy) { return (input_.array() > 0.0).select(dy, 0.0); }

Matrix LeakyRelu::forward(const Matrix& x, bool, Rng*) {
    input_ = x;
    return (x.array() > 0.0).select(x, slope_ * x);
}

Matrix LeakyRelu::backward(const Matrix& dy) { return (input_.array() > 0.0).select(dy, slope_ * dy); }

Matrix Dropout::forward(const Matrix& x, bool training, Rng* rng) {
    active_ = training && rate_ > 0.0;
    if (!active_) return x;
    if (!rng) throw std::logic_error("dropout in training mode needs a random source");
    const double keep = 1.0 - rate_;
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) mask_(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
    return x.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& dy) { return active_ ? dy.cwiseProduct(mask_) : dy; }

// --- BatchNorm --------------------------------------------------------------

BatchNorm::BatchNorm(Eigen::Index width, double momentum, double eps) : momentum_(momentum), eps_(eps) {
    gamma_.value = Matrix::Ones(1, width);
    beta_.value = Matrix::Zero(1, width);
    gamma_.resize_state();
    beta_.resize_state();
    running_mean_ = Eigen::RowVectorXd::Zero(width);
    running_var_ = Eigen::RowVectorXd::Ones(width);
}

Matrix BatchNorm::forward(const Matrix& x, bool training, Rng*) {
    batch_mode_ = training;
    Eigen::RowVectorXd mean, var;
    if (training) {
        if (x.rows() < 2) throw std::logic_error("batch normalization needs at least two samples per batch");
        mean = x.colwise().mean();
        var = (x.rowwise() - mean).array().square().colwise().mean();
        running_mean_ = momentum_ * running_mean_ + (1.0 - momentum_) * mean;
        running_var_ = momentum_ * running_var_ + (1.0 - momentum_) * var;
    } else {
        mean = running_mean_;
        var = running_var_;
    }
    inv_std_ = (var.array() + eps_).rsqrt();
    xhat_ = (x.rowwise() - mean).array().rowwise() * inv_std_.array();
    Matrix y = xhat_.array().rowwise() * gamma_.value.row(0).array();
    y.rowwise() += beta_.value.row(0);
    return y;
}

Matrix BatchNorm::backward(const Matrix& dy) {
    gamma_.grad += (dy.array() * xhat_.array()).colwise().sum().matrix();
    beta_.grad += dy.colwise().sum();
    Matrix dxhat = dy.array().rowwise() * gamma_.value.row(0).array();
    if (!batch_mode_) return dxhat.array().rowwise() * inv_std_.array();
    const double n = static_cast<double>(dy.rows());
    Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
    Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * xhat_.array()).colwise().sum();
    Matrix dx = (n * dxhat.array()).matrix();
    dx.rowwise() -= sum_dxhat;
    dx -= (xhat_.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    return (dx.array().rowwise() * (inv_std_.array() / n)).matrix();
}

nlohmann::json BatchNorm::to_json() const {
    return {{"type", "batch_norm"},
            {"gamma", matrix_to_json(gamma_.value)},
            {"beta", matrix_to_json(beta_.value)},
            {"running_mean", matrix_to_json(running_mean_)},
            {"running_var", matrix_to_json(running_var_)},
            {"momentum", momentum_},
            {"eps", eps_}};
}

// --- Sequential -------------------------------------------------------------

Sequential::Sequential(const Sequential& other) {
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
    if (this != &other) {
        layers_.clear();
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
    }
    return *this;
}

Matrix Sequential::forward(const Matrix& x, bool training, Rng* rng) {
    Matrix h = x;
    for (auto& l : layers_) h = l->forward(h, training, rng);
    return h;
}

Matrix Sequential::backward(const Matrix& dy) {
    Matrix g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<Param*> Sequential::params() {
    std::vector<Param*> out;
    for (auto& l : layers_)
        for (Param* p : l->params()) out.push_back(p);
    return out;
}

void Sequential::zero_grad() {
    for (Param* p : params()) p->grad.setZero();
}

nlohmann::json Sequential::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : layers_) arr.push_back(l->to_json());
    return arr;
}

Sequential Sequential::from_json(const nlohmann::json& j) {
    Sequential s;
    for (const auto& lj : j) {
        const auto type = lj.at("type").get<std::string>();
        if (type == "dense") {
            Matrix k = matrix_from_json(lj.at("kernel"));
            Matrix b = matrix_from_json(lj.at("bias"));
            auto& d = s.add<Dense>(k.rows(), k.cols());
            d.kernel().value = k;
            d.bias().value = b;
        } else if (type == "relu") {
            s.add<Relu>();
        } else if (type == "leaky_relu") {
            s.add<LeakyRelu>(lj.at("slope").get<double>());
        } else if (type == "dropout") {
            s.add<Dropout>(lj.at("rate").get<double>());
        } else if (type == "batch_norm") {
            Matrix g = matrix_from_json(lj.at("gamma"));
            auto& bn = s.add<BatchNorm>(g.cols(), lj.at("momentum").get<double>(), lj.at("eps").get<double>());
            auto ps = bn.params();
            ps[0]->value = g;
            ps[1]->value = matrix_from_json(lj.at("beta"));
            bn.set_running(matrix_from_json(lj.at("running_mean")).row(0), matrix_from_json(lj.at("running_var")).row(0));
        } else {
            throw data_error("unknown layer type '" + type + "'");
        }
    }
    return s;
}

// --- Adam -------------------------------------------------------------------

void Adam::step(const std::vector<Param*>& params) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Param* p : params) {
        p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * p->grad;
        p->v = cfg_.beta2 * p->v + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
        p->value.array() -= cfg_.learning_rate * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + cfg_.epsilon);
    }
}

}  // namespace malscope::nn
