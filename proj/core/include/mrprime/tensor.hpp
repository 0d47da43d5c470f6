#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mrprime {

/// Dense N-dimensional real array. Image-like data uses the N x C x H x W
/// convention. Handles share storage; clone() makes a deep copy.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, bool requires_grad = false);
    Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const;
    int dim(int i) const;
    int ndim() const;
    std::int64_t numel() const;

    std::vector<double>& data();
    const std::vector<double>& data() const;
    double* ptr();
    const double* ptr() const;

    bool requires_grad() const;
    void set_requires_grad(bool on);

    // Gradient buffer, allocated to zeros on first access.
    bool has_grad() const;
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    double item() const;
    Tensor clone() const;

    // Identity of the underlying storage, for accumulation bookkeeping.
    const void* id() const { return impl_.get(); }

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

/// Named trainable tensor. Names are unique within a model and define
/// checkpoint blob order.
struct Parameter {
    Tensor tensor;
    std::string name;
};

/// Record of executed differentiable operations in topological order.
/// One backward pass per tape; reuse without reset is an error.
class Tape {
public:
    using BackwardFn = std::function<void()>;

    void record(BackwardFn fn) { nodes_.push_back(std::move(fn)); }
    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }
    void reset();

    // Seeds d(loss)/d(loss) = 1 and replays recorded rules in reverse,
    // accumulating into the grad buffers of every requires_grad tensor.
    void backward(const Tensor& loss);

private:
    std::vector<BackwardFn> nodes_;
    bool consumed_ = false;
};

/// When enabled, every op validates that its output is finite and throws
/// std::runtime_error otherwise. Off by default; the training loop always
/// checks the loss scalar regardless.
void set_finite_checks(bool on);
bool finite_checks_enabled();

namespace detail {
void check_finite(const Tensor& t, const char* op_name);
}

} // namespace mrprime
