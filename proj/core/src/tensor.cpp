#include "mrprime/tensor.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace mrprime {

struct Tensor::Impl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    bool grad_alloc = false;
};

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<int> shape, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    impl_->data.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("tensor: data length does not match shape");
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
}

const std::vector<int>& Tensor::shape() const { return impl_->shape; }

int Tensor::dim(int i) const { return impl_->shape.at(static_cast<std::size_t>(i)); }

int Tensor::ndim() const { return static_cast<int>(impl_->shape.size()); }

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }
double* Tensor::ptr() { return impl_->data.data(); }
const double* Tensor::ptr() const { return impl_->data.data(); }

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool on) { impl_->requires_grad = on; }

bool Tensor::has_grad() const { return impl_ && impl_->grad_alloc; }

std::vector<double>& Tensor::grad() {
    if (!impl_->grad_alloc) {
        impl_->grad.assign(impl_->data.size(), 0.0);
        impl_->grad_alloc = true;
    }
    return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (!impl_->grad_alloc) throw std::runtime_error("tensor: gradient not populated");
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_->grad_alloc) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (numel() != 1) throw std::invalid_argument("tensor: item() requires a scalar");
    return impl_->data[0];
}

Tensor Tensor::clone() const {
    Tensor out;
    out.impl_ = std::make_shared<Impl>();
    out.impl_->shape = impl_->shape;
    out.impl_->data = impl_->data;
    out.impl_->requires_grad = impl_->requires_grad;
    return out;
}

void Tape::reset() {
    nodes_.clear();
    consumed_ = false;
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw std::runtime_error("tape: already consumed; reset before reuse");
    if (!loss.defined() || loss.numel() != 1)
        throw std::invalid_argument("tape: backward requires a scalar loss");
    consumed_ = true;
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

namespace {
std::atomic<bool> g_finite_checks{false};
}

void set_finite_checks(bool on) { g_finite_checks.store(on, std::memory_order_relaxed); }
bool finite_checks_enabled() { return g_finite_checks.load(std::memory_order_relaxed); }

namespace detail {

void check_finite(const Tensor& t, const char* op_name) {
    if (!finite_checks_enabled()) return;
    for (double v : t.data()) {
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite value produced by ") + op_name);
    }
}

} // namespace detail

} // namespace mrprime
