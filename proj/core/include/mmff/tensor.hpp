#pragma once

// Reverse-mode automatic differentiation over dense double-precision arrays.
//
// A Var is a shared handle to a graph node. Leaves are either constants or
// parameters (requires_grad). Every primitive returns a fresh interior node
// that records its operands and a backward closure; operands are always
// created before their consumers, so the graph is acyclic by construction.
// When no operand requires a gradient the result is folded into a constant
// and keeps no references.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmff/rng.hpp"

namespace mmff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

enum class PrimitiveKind {
    matmul,
    add,
    scale,  // scale-by-scalar-node: operands (s[1], x)
    hadamard,
    concat,
    mean,
    affine,  // operands (W[m,k], x[k], b[m])
    softmax,
    activation,
};

enum class Activation { identity, relu, elu, tanh, hardtanh, sigmoid };

enum class Mode { train, eval };

std::string_view to_string(PrimitiveKind kind);
std::string_view to_string(Activation act);
PrimitiveKind parse_primitive_kind(std::string_view name);
Activation parse_activation(std::string_view name);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    // Set when a backward pass reaches this leaf; cleared by zero_grad().
    bool grad_populated = false;
    std::string_view op = "leaf";
    std::vector<std::shared_ptr<Node>> operands;
    std::function<void(Node&)> backward_fn;

    bool is_leaf() const { return !backward_fn; }
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var constant(Shape shape, std::vector<double> values);
    static Var constant(std::vector<double> values);  // rank-1
    static Var scalar(double value);
    static Var parameter(Shape shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }
    bool grad_populated() const { return node_->grad_populated; }

    std::span<const double> value() const { return node_->value; }
    std::span<double> mutable_value() { return node_->value; }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad; }
    double item() const;
    double operator[](std::size_t i) const { return node_->value[i]; }

    void zero_grad();

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Primitives. Shape violations throw DimensionError naming the operation.
Var matmul(const Var& a, const Var& b);  // [m,k]x[k,n] or [m,k]x[k]
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& s, const Var& x);
Var scale(double s, const Var& x);
Var hadamard(const Var& a, const Var& b);
Var concat(std::span<const Var> parts);  // rank-1 operands
Var concat(std::initializer_list<Var> parts);
Var mean(const Var& x);  // -> [1]
Var sum(const Var& x);   // -> [1]
Var affine(const Var& w, const Var& x, const Var& b);
Var softmax(const Var& x);  // over the last axis
Var activate(const Var& x, Activation act);
Var slice(const Var& x, std::size_t offset, std::size_t length);  // rank-1
Var element(const Var& x, std::size_t index);                      // -> [1]

// Dispatcher over the primitive catalogue. `act` is consulted only for
// PrimitiveKind::activation.
Var apply_primitive(PrimitiveKind kind, std::span<const Var> operands,
                    Activation act = Activation::identity);

// (1/N) sum (pred - target)^2 as a differentiable [1] node.
Var mse_loss(const Var& pred, std::span<const double> target);

// Inverted dropout. Eval mode (or rate 0) returns `x` itself.
Var dropout(const Var& x, double rate, Mode mode, RngStream& rng);

// Populates grads of every requires-grad node reachable from `loss`.
// Leaf gradients accumulate across calls until zero_grad().
void backward(const Var& loss);

} // namespace mmff
