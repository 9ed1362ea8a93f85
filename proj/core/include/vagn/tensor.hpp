#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vagn::ad {

// Dense row-major tensor of 64-bit floats. `node` is a handle into the tape
// that produced it; -1 marks constants and detached values.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    int node = -1;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);

    int size() const { return static_cast<int>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    bool empty() const { return data.empty(); }

    double item() const;
    double& operator[](int i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return data[static_cast<std::size_t>(i)]; }
    // Detached copy that no longer references any tape.
    Tensor detached() const;
};

int shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);
bool all_finite(const Tensor& t);

// Reverse-mode gradient record. Ops append nodes in topological order (every
// node's inputs precede it by construction); backward() walks the record in
// reverse and accumulates per-node gradients.
//
// Single-writer: one thread builds and differentiates a given tape.
// Independent samples may use separate tapes in parallel.
class Tape {
  public:
    // Per-input gradient producer for one node: maps the node's output
    // gradient to gradients of its inputs (same order as `inputs`).
    using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

    // Copies `value` onto the tape as a differentiable leaf.
    Tensor leaf(const Tensor& value);

    // Appends a custom node. `output` is the forward value, `inputs` the tape
    // tensors feeding it. Output is checked for finiteness.
    Tensor attach(Tensor output, const std::vector<const Tensor*>& inputs, BackwardFn backward);

    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor div(const Tensor& a, const Tensor& b);
    Tensor neg(const Tensor& a);
    Tensor scale(const Tensor& a, double c);
    Tensor add_scalar(const Tensor& a, double c);
    Tensor sum(const Tensor& a);
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor matvec(const Tensor& a, const Tensor& x);
    Tensor reshape(const Tensor& a, std::vector<int> shape);
    Tensor slice(const Tensor& a, int begin, int count);
    Tensor concat(const std::vector<Tensor>& parts);
    Tensor relu(const Tensor& x);
    Tensor sigmoid(const Tensor& x);
    Tensor sqrt(const Tensor& x);
    Tensor softmax_columns(const Tensor& m);
    Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
                  int stride, int padding);
    Tensor global_avg_pool(const Tensor& f);
    Tensor mse_loss(const Tensor& pred, const Tensor& target);

    // Seeds grad(loss) = 1 and runs reverse accumulation. `loss` must be a
    // scalar living on this tape.
    void backward(const Tensor& loss);

    bool has_grad(const Tensor& t) const;
    // Gradient of the last backward() target with respect to t. Returns a
    // zero tensor of matching shape when t is unreachable from the loss.
    Tensor grad(const Tensor& t) const;

    void reset();
    std::size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        std::vector<int> inputs;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::vector<std::vector<int>> shapes_;

    int push(std::vector<int> inputs, BackwardFn backward, const std::vector<int>& out_shape);
};

}  // namespace vagn::ad
