#include "mmff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "mmff/error.hpp"

namespace mmff {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) {
        n *= extent;
    }
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            os << ',';
        }
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::string_view to_string(PrimitiveKind kind) {
    switch (kind) {
    case PrimitiveKind::matmul: return "matmul";
    case PrimitiveKind::add: return "add";
    case PrimitiveKind::scale: return "scale";
    case PrimitiveKind::hadamard: return "hadamard";
    case PrimitiveKind::concat: return "concat";
    case PrimitiveKind::mean: return "mean";
    case PrimitiveKind::affine: return "affine";
    case PrimitiveKind::softmax: return "softmax";
    case PrimitiveKind::activation: return "activation";
    }
    throw UsageError("unknown primitive kind");
}

std::string_view to_string(Activation act) {
    switch (act) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
    case Activation::tanh: return "tanh";
    case Activation::hardtanh: return "hardtanh";
    case Activation::sigmoid: return "sigmoid";
    }
    throw UsageError("unknown activation kind");
}

PrimitiveKind parse_primitive_kind(std::string_view name) {
    for (auto kind : {PrimitiveKind::matmul, PrimitiveKind::add, PrimitiveKind::scale,
                      PrimitiveKind::hadamard, PrimitiveKind::concat, PrimitiveKind::mean,
                      PrimitiveKind::affine, PrimitiveKind::softmax, PrimitiveKind::activation}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw UsageError("unknown primitive kind '" + std::string(name) + "'");
}

Activation parse_activation(std::string_view name) {
    for (auto act : {Activation::identity, Activation::relu, Activation::elu, Activation::tanh,
                     Activation::hardtanh, Activation::sigmoid}) {
        if (to_string(act) == name) {
            return act;
        }
    }
    throw UsageError("unknown activation kind '" + std::string(name) + "'");
}

namespace {

using NodePtr = std::shared_ptr<Node>;

Var make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) {
        throw DimensionError("leaf: shape " + shape_string(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->grad.assign(node->value.size(), 0.0);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
}

Var make_result(std::string_view op, Shape shape, std::vector<double> value,
                std::vector<NodePtr> operands, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->grad.assign(node->value.size(), 0.0);
    node->op = op;
    bool needs_grad = std::any_of(operands.begin(), operands.end(),
                                  [](const NodePtr& p) { return p->requires_grad; });
    node->requires_grad = needs_grad;
    if (needs_grad) {
        node->operands = std::move(operands);
        node->backward_fn = std::move(backward_fn);
    }
    return Var(std::move(node));
}

void require_defined(std::string_view op, const Var& v) {
    if (!v.defined()) {
        throw UsageError(std::string(op) + ": undefined operand");
    }
}

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                         shape_string(b));
}

void require_same_shape(std::string_view op, const Var& a, const Var& b) {
    require_defined(op, a);
    require_defined(op, b);
    if (a.shape() != b.shape()) {
        shape_mismatch(op, a.shape(), b.shape());
    }
}

void require_scalar(std::string_view op, const Var& s) {
    require_defined(op, s);
    if (s.size() != 1) {
        throw DimensionError(std::string(op) + ": expected a scalar node, got shape " +
                             shape_string(s.shape()));
    }
}

double activation_value(Activation act, double x) {
    switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::elu: return x > 0.0 ? x : std::expm1(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::hardtanh: return std::clamp(x, -1.0, 1.0);
    case Activation::sigmoid:
        if (x >= 0.0) {
            return 1.0 / (1.0 + std::exp(-x));
        } else {
            double e = std::exp(x);
            return e / (1.0 + e);
        }
    }
    throw UsageError("unknown activation kind");
}

// Derivative given input x and output y.
double activation_slope(Activation act, double x, double y) {
    switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::elu: return x > 0.0 ? 1.0 : y + 1.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::hardtanh: return (x > -1.0 && x < 1.0) ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    }
    throw UsageError("unknown activation kind");
}

} // namespace

Var Var::constant(Shape shape, std::vector<double> values) {
    return make_leaf(std::move(shape), std::move(values), false);
}

Var Var::constant(std::vector<double> values) {
    Shape shape{values.size()};
    return make_leaf(std::move(shape), std::move(values), false);
}

Var Var::scalar(double value) { return make_leaf(Shape{1}, {value}, false); }

Var Var::parameter(Shape shape, std::vector<double> values) {
    return make_leaf(std::move(shape), std::move(values), true);
}

double Var::item() const {
    if (!defined() || size() != 1) {
        throw UsageError("item: node is not a scalar");
    }
    return node_->value[0];
}

void Var::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    node_->grad_populated = false;
}

Var matmul(const Var& a, const Var& b) {
    require_defined("matmul", a);
    require_defined("matmul", b);
    if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.shape()[1] != b.shape()[0]) {
        shape_mismatch("matmul", a.shape(), b.shape());
    }
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = b.rank() == 2 ? b.shape()[1] : 1;
    std::vector<double> out(m * n, 0.0);
    const double* pa = a.value().data();
    const double* pb = b.value().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] += aip * brow[j];
            }
        }
    }
    Shape shape = b.rank() == 2 ? Shape{m, n} : Shape{m};
    return make_result("matmul", std::move(shape), std::move(out), {a.node_ptr(), b.node_ptr()},
                       [m, k, n](Node& self) {
                           Node& na = *self.operands[0];
                           Node& nb = *self.operands[1];
                           const double* dc = self.grad.data();
                           if (na.requires_grad) {
                               // dA = dC * B^T
                               for (std::size_t i = 0; i < m; ++i) {
                                   for (std::size_t p = 0; p < k; ++p) {
                                       double acc = 0.0;
                                       for (std::size_t j = 0; j < n; ++j) {
                                           acc += dc[i * n + j] * nb.value[p * n + j];
                                       }
                                       na.grad[i * k + p] += acc;
                                   }
                               }
                           }
                           if (nb.requires_grad) {
                               // dB = A^T * dC
                               for (std::size_t i = 0; i < m; ++i) {
                                   for (std::size_t p = 0; p < k; ++p) {
                                       const double aip = na.value[i * k + p];
                                       for (std::size_t j = 0; j < n; ++j) {
                                           nb.grad[p * n + j] += aip * dc[i * n + j];
                                       }
                                   }
                               }
                           }
                       });
}

Var add(const Var& a, const Var& b) {
    require_same_shape("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return make_result("add", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                       [](Node& self) {
                           for (auto& operand : self.operands) {
                               if (operand->requires_grad) {
                                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                       operand->grad[i] += self.grad[i];
                                   }
                               }
                           }
                       });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return make_result("sub", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                       [](Node& self) {
                           Node& na = *self.operands[0];
                           Node& nb = *self.operands[1];
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               if (na.requires_grad) {
                                   na.grad[i] += self.grad[i];
                               }
                               if (nb.requires_grad) {
                                   nb.grad[i] -= self.grad[i];
                               }
                           }
                       });
}

Var scale(const Var& s, const Var& x) {
    require_scalar("scale", s);
    require_defined("scale", x);
    const double factor = s.item();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = factor * x[i];
    }
    return make_result("scale", x.shape(), std::move(out), {s.node_ptr(), x.node_ptr()},
                       [](Node& self) {
                           Node& ns = *self.operands[0];
                           Node& nx = *self.operands[1];
                           const double factor = ns.value[0];
                           double ds = 0.0;
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               ds += self.grad[i] * nx.value[i];
                               if (nx.requires_grad) {
                                   nx.grad[i] += factor * self.grad[i];
                               }
                           }
                           if (ns.requires_grad) {
                               ns.grad[0] += ds;
                           }
                       });
}

Var scale(double s, const Var& x) { return scale(Var::scalar(s), x); }

Var hadamard(const Var& a, const Var& b) {
    require_same_shape("hadamard", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] * b[i];
    }
    return make_result("hadamard", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                       [](Node& self) {
                           Node& na = *self.operands[0];
                           Node& nb = *self.operands[1];
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               if (na.requires_grad) {
                                   na.grad[i] += self.grad[i] * nb.value[i];
                               }
                               if (nb.requires_grad) {
                                   nb.grad[i] += self.grad[i] * na.value[i];
                               }
                           }
                       });
}

Var concat(std::span<const Var> parts) {
    if (parts.empty()) {
        throw UsageError("concat: no operands");
    }
    std::vector<double> out;
    std::vector<NodePtr> operands;
    for (const Var& part : parts) {
        require_defined("concat", part);
        if (part.rank() != 1) {
            throw DimensionError("concat: operands must be rank-1, got " +
                                 shape_string(part.shape()));
        }
        out.insert(out.end(), part.value().begin(), part.value().end());
        operands.push_back(part.node_ptr());
    }
    const std::size_t total = out.size();
    return make_result("concat", Shape{total}, std::move(out), std::move(operands),
                       [](Node& self) {
                           std::size_t offset = 0;
                           for (auto& operand : self.operands) {
                               const std::size_t n = operand->value.size();
                               if (operand->requires_grad) {
                                   for (std::size_t i = 0; i < n; ++i) {
                                       operand->grad[i] += self.grad[offset + i];
                                   }
                               }
                               offset += n;
                           }
                       });
}

Var concat(std::initializer_list<Var> parts) {
    return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var sum(const Var& x) {
    require_defined("sum", x);
    double total = 0.0;
    for (double v : x.value()) {
        total += v;
    }
    return make_result("sum", Shape{1}, {total}, {x.node_ptr()}, [](Node& self) {
        Node& nx = *self.operands[0];
        for (double& g : nx.grad) {
            g += self.grad[0];
        }
    });
}

Var mean(const Var& x) {
    require_defined("mean", x);
    if (x.size() == 0) {
        throw DimensionError("mean: empty operand");
    }
    double total = 0.0;
    for (double v : x.value()) {
        total += v;
    }
    const double inv = 1.0 / static_cast<double>(x.size());
    return make_result("mean", Shape{1}, {total * inv}, {x.node_ptr()}, [inv](Node& self) {
        Node& nx = *self.operands[0];
        for (double& g : nx.grad) {
            g += self.grad[0] * inv;
        }
    });
}

Var affine(const Var& w, const Var& x, const Var& b) {
    require_defined("affine", w);
    require_defined("affine", x);
    require_defined("affine", b);
    if (w.rank() != 2 || x.rank() != 1 || b.rank() != 1 || w.shape()[1] != x.shape()[0] ||
        w.shape()[0] != b.shape()[0]) {
        throw DimensionError("affine: incompatible shapes W" + shape_string(w.shape()) + " x" +
                             shape_string(x.shape()) + " b" + shape_string(b.shape()));
    }
    const std::size_t m = w.shape()[0];
    const std::size_t k = w.shape()[1];
    std::vector<double> out(b.value().begin(), b.value().end());
    const double* pw = w.value().data();
    const double* px = x.value().data();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* row = pw + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            acc += row[p] * px[p];
        }
        out[i] += acc;
    }
    return make_result("affine", Shape{m}, std::move(out),
                       {w.node_ptr(), x.node_ptr(), b.node_ptr()}, [m, k](Node& self) {
                           Node& nw = *self.operands[0];
                           Node& nx = *self.operands[1];
                           Node& nb = *self.operands[2];
                           const double* dy = self.grad.data();
                           if (nw.requires_grad) {
                               for (std::size_t i = 0; i < m; ++i) {
                                   double* grow = nw.grad.data() + i * k;
                                   for (std::size_t p = 0; p < k; ++p) {
                                       grow[p] += dy[i] * nx.value[p];
                                   }
                               }
                           }
                           if (nx.requires_grad) {
                               for (std::size_t i = 0; i < m; ++i) {
                                   const double* row = nw.value.data() + i * k;
                                   for (std::size_t p = 0; p < k; ++p) {
                                       nx.grad[p] += dy[i] * row[p];
                                   }
                               }
                           }
                           if (nb.requires_grad) {
                               for (std::size_t i = 0; i < m; ++i) {
                                   nb.grad[i] += dy[i];
                               }
                           }
                       });
}

Var softmax(const Var& x) {
    require_defined("softmax", x);
    if (x.rank() == 0 || x.size() == 0) {
        throw DimensionError("softmax: empty operand");
    }
    const std::size_t width = x.shape().back();
    const std::size_t rows = x.size() / width;
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.value().data() + r * width;
        double* o = out.data() + r * width;
        double peak = *std::max_element(in, in + width);
        double total = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            o[j] = std::exp(in[j] - peak);
            total += o[j];
        }
        for (std::size_t j = 0; j < width; ++j) {
            o[j] /= total;
        }
    }
    return make_result("softmax", x.shape(), std::move(out), {x.node_ptr()},
                       [rows, width](Node& self) {
                           Node& nx = *self.operands[0];
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* y = self.value.data() + r * width;
                               const double* dy = self.grad.data() + r * width;
                               double dot = 0.0;
                               for (std::size_t j = 0; j < width; ++j) {
                                   dot += dy[j] * y[j];
                               }
                               for (std::size_t j = 0; j < width; ++j) {
                                   nx.grad[r * width + j] += y[j] * (dy[j] - dot);
                               }
                           }
                       });
}

Var activate(const Var& x, Activation act) {
    require_defined("activation", x);
    if (act == Activation::identity) {
        return x;
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = activation_value(act, x[i]);
    }
    return make_result(to_string(act), x.shape(), std::move(out), {x.node_ptr()},
                       [act](Node& self) {
                           Node& nx = *self.operands[0];
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               nx.grad[i] += self.grad[i] *
                                             activation_slope(act, nx.value[i], self.value[i]);
                           }
                       });
}

Var slice(const Var& x, std::size_t offset, std::size_t length) {
    require_defined("slice", x);
    if (x.rank() != 1 || offset + length > x.size()) {
        throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                             std::to_string(offset + length) + ") outside shape " +
                             shape_string(x.shape()));
    }
    std::vector<double> out(x.value().begin() + static_cast<std::ptrdiff_t>(offset),
                            x.value().begin() + static_cast<std::ptrdiff_t>(offset + length));
    return make_result("slice", Shape{length}, std::move(out), {x.node_ptr()},
                       [offset](Node& self) {
                           Node& nx = *self.operands[0];
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                               nx.grad[offset + i] += self.grad[i];
                           }
                       });
}

Var element(const Var& x, std::size_t index) {
    require_defined("element", x);
    if (index >= x.size()) {
        throw DimensionError("element: index " + std::to_string(index) + " outside shape " +
                             shape_string(x.shape()));
    }
    return make_result("element", Shape{1}, {x[index]}, {x.node_ptr()}, [index](Node& self) {
        self.operands[0]->grad[index] += self.grad[0];
    });
}

Var apply_primitive(PrimitiveKind kind, std::span<const Var> operands, Activation act) {
    auto expect = [&](std::size_t n) {
        if (operands.size() != n) {
            throw UsageError(std::string(to_string(kind)) + ": expected " + std::to_string(n) +
                             " operands, got " + std::to_string(operands.size()));
        }
    };
    switch (kind) {
    case PrimitiveKind::matmul: expect(2); return matmul(operands[0], operands[1]);
    case PrimitiveKind::add: expect(2); return add(operands[0], operands[1]);
    case PrimitiveKind::scale: expect(2); return scale(operands[0], operands[1]);
    case PrimitiveKind::hadamard: expect(2); return hadamard(operands[0], operands[1]);
    case PrimitiveKind::concat: return concat(operands);
    case PrimitiveKind::mean: expect(1); return mean(operands[0]);
    case PrimitiveKind::affine: expect(3); return affine(operands[0], operands[1], operands[2]);
    case PrimitiveKind::softmax: expect(1); return softmax(operands[0]);
    case PrimitiveKind::activation: expect(1); return activate(operands[0], act);
    }
    throw UsageError("apply_primitive: unknown primitive kind " +
                     std::to_string(static_cast<int>(kind)));
}

Var mse_loss(const Var& pred, std::span<const double> target) {
    require_defined("mse_loss", pred);
    if (pred.size() != target.size()) {
        throw DimensionError("mse_loss: prediction has " + std::to_string(pred.size()) +
                             " values but target has " + std::to_string(target.size()));
    }
    if (pred.size() == 0) {
        throw DimensionError("mse_loss: empty operands");
    }
    std::vector<double> residual(pred.size());
    double total = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        residual[i] = pred[i] - target[i];
        total += residual[i] * residual[i];
    }
    const double inv = 1.0 / static_cast<double>(residual.size());
    return make_result("mse", Shape{1}, {total * inv}, {pred.node_ptr()},
                       [residual = std::move(residual), inv](Node& self) {
                           Node& np = *self.operands[0];
                           const double g = 2.0 * inv * self.grad[0];
                           for (std::size_t i = 0; i < residual.size(); ++i) {
                               np.grad[i] += g * residual[i];
                           }
                       });
}

Var dropout(const Var& x, double rate, Mode mode, RngStream& rng) {
    require_defined("dropout", x);
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw UsageError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (mode == Mode::eval || rate == 0.0) {
        return x;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.size());
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        out[i] = x[i] * mask[i];
    }
    return make_result("dropout", x.shape(), std::move(out), {x.node_ptr()},
                       [mask = std::move(mask)](Node& self) {
                           Node& nx = *self.operands[0];
                           for (std::size_t i = 0; i < mask.size(); ++i) {
                               nx.grad[i] += self.grad[i] * mask[i];
                           }
                       });
}

void backward(const Var& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw UsageError("backward: loss must be a scalar node, got shape " +
                         (loss.defined() ? shape_string(loss.shape()) : std::string("<none>")));
    }
    Node* root = loss.node();
    if (!root->requires_grad) {
        return;
    }

    // Iterative post-order DFS; recurrent graphs are far too deep to recurse.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->operands.size()) {
            Node* child = node->operands[next++].get();
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* node : order) {
        if (!node->is_leaf()) {
            std::fill(node->grad.begin(), node->grad.end(), 0.0);
        }
    }
    if (root->is_leaf()) {
        root->grad[0] += 1.0;
    } else {
        root->grad[0] = 1.0;
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->is_leaf()) {
            node->grad_populated = true;
        } else {
            node->backward_fn(*node);
        }
    }
}

} // namespace mmff
