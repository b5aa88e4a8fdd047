#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crosslinear {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A mutable view over one named parameter group (flat f64 values plus
/// their gradient buffer). Used by the optimizer, the gradient checker
/// and checkpointing.
struct ParamView {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t count = 0;
};

/// Dense row-major f64 tensor. Copies are handles over shared storage;
/// reshape produces a new handle over the same data and gradient buffers.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, bool requires_grad = false);

    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const;
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }

    std::span<double> data();
    std::span<const double> data() const;
    /// Gradient buffer; allocated (zeroed) on first access.
    std::span<double> grad();
    bool has_grad() const;
    void zero_grad();

    bool requires_grad() const;
    void set_requires_grad(bool v);

    // Element access for ranks 1..3.
    double& operator()(std::size_t i);
    double operator()(std::size_t i) const;
    double& operator()(std::size_t i, std::size_t j);
    double operator()(std::size_t i, std::size_t j) const;
    double& operator()(std::size_t i, std::size_t j, std::size_t k);
    double operator()(std::size_t i, std::size_t j, std::size_t k) const;

    /// New handle over the same storage with a different shape
    /// (product of dims must be preserved).
    Tensor reshape(std::vector<std::size_t> new_shape) const;

    ParamView param_view(std::string name);

    bool valid() const { return storage_ != nullptr; }
    /// True when both handles share the same underlying storage.
    bool shares_storage(const Tensor& other) const { return storage_ == other.storage_; }

private:
    struct Storage {
        std::vector<double> data;
        std::vector<double> grad; // empty until first use
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> storage_;
    std::vector<std::size_t> shape_;

    void ensure_grad() const;
};

/// A learnable f64 scalar with its own gradient slot.
class Scalar {
public:
    Scalar() : Scalar(0.0, false) {}
    explicit Scalar(double value, bool requires_grad = false);

    double value() const { return impl_->value; }
    void set_value(double v) { impl_->value = v; }
    double grad_value() const { return impl_->grad; }
    double& grad_ref() { return impl_->grad; }
    void zero_grad() { impl_->grad = 0.0; }
    bool requires_grad() const { return impl_->requires_grad; }

    ParamView param_view(std::string name);

private:
    struct Impl {
        double value = 0.0;
        double grad = 0.0;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

/// Define-by-run tape: ops append their backward closures in execution
/// order, backward() replays them in exact reverse order.
class Graph {
public:
    void record(std::function<void()> backward_fn) { tape_.push_back(std::move(backward_fn)); }
    std::size_t size() const { return tape_.size(); }
    void clear() { tape_.clear(); }

    /// Seeds loss.grad = 1 and replays the tape in reverse. Gradients
    /// accumulate additively; callers zero them beforehand.
    void backward(Scalar& loss);

private:
    std::vector<std::function<void()>> tape_;
};

// Elementwise ops. Shapes must match exactly (no broadcasting).
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor hadamard(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, double c, const Tensor& a);

/// c[i][j] = sum_t a[i][t] * b[t][j]
Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);

/// Row-broadcast bias add: m is r x c, bias has c entries.
Tensor add_bias_rows(Graph& g, const Tensor& m, const Tensor& bias);

/// 1D cross-correlation (no kernel flip), stride 1, symmetric zero
/// padding of width `pad`. input is C_in x L, kernel C_out x C_in x K,
/// bias C_out; output is C_out x (L + 2*pad - K + 1).
Tensor conv1d(Graph& g, const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t pad);

/// out = alpha * x + (1 - alpha) * y
Tensor blend(Graph& g, const Scalar& alpha, const Tensor& x, const Tensor& y);

/// Concatenate two matrices with equal row counts along the column axis.
Tensor concat_cols(Graph& g, const Tensor& a, const Tensor& b);

/// Stack 1 x C rows into an n x C matrix.
Tensor stack_rows(Graph& g, const std::vector<Tensor>& rows);

/// Extract row i of a matrix as 1 x C.
Tensor take_row(Graph& g, const Tensor& m, std::size_t i);

/// Mean of squared elementwise differences. target carries no gradient.
Scalar mse(Graph& g, const Tensor& pred, const Tensor& target);

/// Central-difference gradient check. `forward` re-evaluates the scalar
/// objective at the current parameter values; analytic gradients must
/// already be stored in the views' grad buffers. Returns the maximum
/// relative error over all elements (absolute error when both analytic
/// and numeric are below 1e-8).
double finite_diff_check(const std::function<double()>& forward,
                         std::span<const ParamView> params, double eps);

} // namespace crosslinear
