// Copyright Contributors to the mvskit Project
// SPDX-License-Identifier: Apache-2.0

#ifndef MVS_TENSOR_TENSOR_HPP
#define MVS_TENSOR_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvs {

/// Dense row-major extents. All extents are positive.
using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s)
{
    std::int64_t n = 1;
    for (int e : s)
    {
        if (e <= 0)
            throw std::invalid_argument("tensor shape extents must be positive");
        n *= e;
    }
    return n;
}

inline std::string shape_str(const Shape& s)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i)
        os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

/// Dense real tensor with optional gradient storage. Copies share storage
/// (handle semantics); gradients accumulate into the shared buffer.
template <typename S>
class Tensor
{
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false)
    {
        Tensor t;
        t.st_ = std::make_shared<Storage>();
        t.st_->shape = std::move(shape);
        t.st_->data.assign(shape_numel(t.st_->shape), S(0));
        t.st_->requires_grad = requires_grad;
        return t;
    }

    static Tensor full(Shape shape, S value, bool requires_grad = false)
    {
        Tensor t = zeros(std::move(shape), requires_grad);
        std::fill(t.data().begin(), t.data().end(), value);
        return t;
    }

    static Tensor from_data(Shape shape, std::vector<S> values, bool requires_grad = false)
    {
        Tensor t;
        t.st_ = std::make_shared<Storage>();
        t.st_->shape = std::move(shape);
        if (static_cast<std::int64_t>(values.size()) != shape_numel(t.st_->shape))
            throw std::invalid_argument("from_data: value count does not match shape "
                + shape_str(t.st_->shape));
        t.st_->data = std::move(values);
        t.st_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(S value, bool requires_grad = false)
    {
        return from_data({1}, {value}, requires_grad);
    }

    bool defined() const { return st_ != nullptr; }
    const Shape& shape() const { return st_->shape; }
    int rank() const { return static_cast<int>(st_->shape.size()); }
    std::int64_t numel() const { return static_cast<std::int64_t>(st_->data.size()); }

    std::vector<S>& data() { return st_->data; }
    const std::vector<S>& data() const { return st_->data; }

    bool requires_grad() const { return st_->requires_grad; }
    void set_requires_grad(bool rg) { st_->requires_grad = rg; }

    bool has_grad() const { return !st_->grad.empty(); }

    /// Gradient buffer, zero-initialized on first access. Tensor is a shared
    /// handle, so accumulation through const handles mutates the one buffer.
    std::vector<S>& grad() const
    {
        if (st_->grad.empty())
            st_->grad.assign(st_->data.size(), S(0));
        return st_->grad;
    }

    void zero_grad() const
    {
        if (!st_->grad.empty())
            std::fill(st_->grad.begin(), st_->grad.end(), S(0));
    }

    /// True if this handle refers to the same storage as `other`.
    bool same_storage(const Tensor& other) const { return st_ == other.st_; }

    S value() const
    {
        if (numel() != 1)
            throw std::invalid_argument("value(): tensor is not scalar, shape "
                + shape_str(shape()));
        return st_->data[0];
    }

private:
    struct Storage
    {
        Shape shape;
        std::vector<S> data;
        mutable std::vector<S> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> st_;
};

/// Ordered record of executed differentiable ops. Ops append during the
/// forward pass (execution order is topological by construction); backward
/// replays the records in exact reverse order. Single writer per tape.
template <typename S>
class Tape
{
public:
    void record(std::function<void()> backward_fn, Tensor<S> output)
    {
        nodes_.push_back(Node{std::move(backward_fn), std::move(output)});
    }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    /// Seeds d(root)/d(root) = 1 and accumulates gradients into every
    /// requires_grad leaf reachable from the recorded ops. Grads of op
    /// outputs are cleared first, so repeated calls each add exactly one
    /// Jacobian-transpose product into the leaves.
    void backward(Tensor<S>& root)
    {
        if (root.numel() != 1)
            throw std::invalid_argument("backward: root must be scalar, got shape "
                + shape_str(root.shape()));
        for (auto& node : nodes_)
            node.output.zero_grad();
        root.grad()[0] += S(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            it->fn();
    }

private:
    struct Node
    {
        std::function<void()> fn;
        Tensor<S> output;
    };
    std::vector<Node> nodes_;
};

namespace detail {

template <typename S>
inline bool want_record(const Tape<S>* tape, bool any_input_grad)
{
    return tape != nullptr && any_input_grad;
}

inline void check_same_shape(const Shape& a, const Shape& b, const char* op)
{
    if (a != b)
        throw std::invalid_argument(std::string(op) + ": shape mismatch "
            + shape_str(a) + " vs " + shape_str(b));
}

} // namespace detail

} // namespace mvs

#endif
