#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fn/graph.hpp"
#include "fn/rng.hpp"

namespace fn::ad {

// Skips value-initialization so freshly sized buffers are not zero-filled;
// ops that fully overwrite their output use Tensor::uninit.
template <class T>
struct DefaultInitAllocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  template <class U>
  void construct(U* p) noexcept(noexcept(::new (static_cast<void*>(p)) U)) {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

// Dense double-precision tensor. Rank 1 or 2; scalars use shape {1}.
struct Tensor {
  using Buffer = std::vector<double, DefaultInitAllocator<double>>;

  std::vector<int> shape;
  Buffer v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<std::size_t>(numel_of(shape)), 0.0);
  }
  Tensor(std::vector<int> s, const std::vector<double>& data)
      : shape(std::move(s)), v(data.begin(), data.end()) {}
  Tensor(std::vector<int> s, std::initializer_list<double> data)
      : shape(std::move(s)), v(data.begin(), data.end()) {}

  static Tensor uninit(std::vector<int> s) {
    Tensor t;
    t.shape = std::move(s);
    t.v.resize(static_cast<std::size_t>(numel_of(t.shape)));
    return t;
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }
  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(j)]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(j)]; }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }
  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double x) {
    Tensor t(std::move(s));
    for (double& e : t.v) e = x;
    return t;
  }
  static Tensor randn(std::vector<int> s, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(s));
    for (double& e : t.v) e = scale * rng.normal();
    return t;
  }
  // Glorot-style uniform fan-based initialization for weight matrices.
  static Tensor glorot(int fan_out, int fan_in, Rng& rng) {
    Tensor t({fan_out, fan_in});
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& e : t.v) e = rng.uniform(-a, a);
    return t;
  }
};

// Handle to a node on a Tape.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Per-forward-pass record of operations; freed after backward. Confined to a
// single thread.
class Tape {
 public:
  Var leaf(Tensor t, bool requires_grad = true);

  const Tensor& val(Var x) const { return nodes_[static_cast<std::size_t>(x.idx)].value; }
  // Gradient of a node after backward(); zero tensor if it never received one.
  const Tensor& grad(Var x);

  // Reverse sweep from a scalar output.
  void backward(Var output);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t live_bytes() const { return bytes_; }
  std::size_t peak_bytes() const { return peak_bytes_; }

  // --- op-implementation interface ---
  Var push(const char* op, Tensor value, bool requires_grad);
  void set_back(Var x, std::function<void()> back) {
    nodes_[static_cast<std::size_t>(x.idx)].back = std::move(back);
  }
  bool wants_grad(Var x) const { return nodes_[static_cast<std::size_t>(x.idx)].requires_grad; }
  Tensor& grad_buffer(Var x);       // allocates zeros on first touch
  bool grad_allocated(Var x) const { return !nodes_[static_cast<std::size_t>(x.idx)].grad.v.empty(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;  // empty for leaves / no-grad nodes
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::size_t bytes_ = 0;
  std::size_t peak_bytes_ = 0;
};

// ---- core ops (each registers its backward) ----
Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);  // elementwise
Var add_rowvec(Tape& t, Var x, Var b);
Var mul_rowvec(Tape& t, Var x, Var s);
Var mul_scalar(Tape& t, Var x, Var w);  // w is a {1} tensor
Var scale(Tape& t, Var x, double c);
Var add_const(Tape& t, Var x, double c);
Var relu(Tape& t, Var x);
Var gelu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var sqrt_op(Tape& t, Var x);
Var layer_norm(Tape& t, Var x, double eps = 1e-5);
Var softmax(Tape& t, Var x);  // last axis
Var transpose(Tape& t, Var x);
Var mean_axis(Tape& t, Var x, int axis);
Var mean_all(Tape& t, Var x);
Var sum_all(Tape& t, Var x);
Var concat_cols(Tape& t, Var a, Var b);
Var gather_rows(Tape& t, Var x, std::vector<int> idx);
Var scatter_sum_rows(Tape& t, Var x, std::vector<int> idx, int out_rows);

// Row c = mean of rows assigned to block c; every block must be nonempty.
Var segment_mean(Tape& t, Var x, const std::vector<int>& assignment, int num_segments);
// Overlap-capable variant over explicit member lists.
Var segment_mean_blocks(Tape& t, Var x, const std::vector<std::vector<int>>& blocks);
// Row v = f[assignment(v)].
Var segment_broadcast(Tape& t, Var f, const std::vector<int>& assignment);

// out[v] = sum over CSR edges (v,u) of w_e * x[u]; empty weights mean 1.
Var sparse_neighbor_aggregate(Tape& t, const Graph& g, Var x, const std::vector<double>& edge_weights);

// ---- fused kernels for the hot layer patterns ----
// act(residual + x W); act is ReLU unless linear = true. Equivalent to the
// composed relu(add(residual, matmul(x, w))) with one output buffer.
Var linear_residual_act(Tape& t, Var residual, Var x, Var w, bool linear = false);

// Fused fractal message delivery:
//   out[v] = h[v] + deliver[a(v)] + omega (.) (h[v] - lpf[a(v)])
// omega may be invalid (no HPF term), a {1} scalar, or a {d} vector.
Var fractal_message(Tape& t, Var h, Var deliver, Var lpf, const std::vector<int>& assignment,
                    Var omega);

// Losses (scalar outputs). Labels of -1 are ignored by the masked CE.
Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels);
Var bce_with_logits(Tape& t, Var logits, const Tensor& targets);
Var l1_loss(Tape& t, Var pred, const Tensor& targets);

}  // namespace fn::ad
