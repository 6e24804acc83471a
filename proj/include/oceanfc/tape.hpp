#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace oceanfc::ad {

/// Row-major dense matrix.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(std::size_t(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {}

    std::size_t size() const { return v.size(); }
    double& operator()(int r, int c) { return v[std::size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return v[std::size_t(r) * cols + c]; }
};

/// Token windows for one attention layer. Tokens attend only to members of
/// their own window that carry the same region label.
struct WindowPlan {
    int tokens = 0;
    std::vector<std::vector<int>> windows;  // token ids per window
    std::vector<std::vector<int>> labels;   // region label per window member
};

using NodeId = int;

/// Reverse-mode tape. Every op records its output value and a closure that
/// pushes the output gradient back onto its inputs. Parameters are views into
/// a flat vector; backward() accumulates their gradients at the same offsets.
class Tape {
public:
    NodeId constant(Tensor t);
    NodeId parameter(std::span<const double> flat, std::size_t offset, int rows, int cols);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    std::size_t size() const { return nodes_.size(); }

    NodeId matmul(NodeId a, NodeId w);            // [n x k] . [k x m]
    NodeId add_row(NodeId a, NodeId bias);        // bias [1 x m] broadcast over rows
    NodeId add(NodeId a, NodeId b);               // same shape
    NodeId mul_const(NodeId a, std::vector<double> factors);  // elementwise by constants
    NodeId layer_norm(NodeId a, NodeId gamma, NodeId beta, double eps = 1e-5);
    NodeId gelu(NodeId a);
    /// out.v[n] = in.v[index[n]], or 0 where index[n] < 0. Backward scatter-adds.
    NodeId gather(NodeId a, int rows, int cols, std::shared_ptr<const std::vector<int>> index);
    /// qkv [N x 3C] -> [N x C] windowed multi-head softmax attention.
    NodeId window_attention(NodeId qkv, std::shared_ptr<const WindowPlan> plan, int heads);
    /// Scalar sum_n weight[n] * (a[n] - target[n])^2; entries with zero weight are skipped.
    NodeId weighted_sse(NodeId a, std::shared_ptr<const std::vector<double>> target,
                        std::shared_ptr<const std::vector<double>> weight);

    /// Seeds d(root)/d(root) = 1 and accumulates parameter gradients into `param_grad`.
    void backward(NodeId root, std::span<double> param_grad);

    /// True when every recorded value is finite.
    bool all_finite() const;

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, NodeId)> back;
        bool is_param = false;
        std::size_t param_offset = 0;
    };

    NodeId push(Tensor value, std::function<void(Tape&, NodeId)> back);
    Tensor& grad(NodeId id);
    bool has_grad(NodeId id) const { return !nodes_[id].grad.v.empty(); }

    std::vector<Node> nodes_;
};

/// Tanh form: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
double gelu_tanh(double x);
double gelu_tanh_grad(double x);

}  // namespace oceanfc::ad
