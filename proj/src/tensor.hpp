#pragma once

#include <functional>
#include <memory>

#include "common.hpp"

namespace adec {

class Tape;

// Lightweight handle to a value recorded on a Tape. Copying a Tensor copies
// the handle, not the data. A Tensor created by Tape::constant (or detach)
// carries a value but is excluded from gradient flow.
class Tensor {
 public:
  Tensor() = default;

  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;
  const std::vector<double>& value() const;
  // Gradient accumulated by backward() calls on this tape; empty until the
  // node participates in a backward pass.
  const std::vector<double>& grad() const;
  double scalar() const;

  bool valid() const { return tape_ != nullptr; }
  int node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Tensor(Tape* t, int n) : tape_(t), node_(n) {}
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Dynamic reverse-mode tape. Operations append nodes in topological order;
// backward() replays them in reverse. Rebuilt from scratch every training
// step. Single-threaded by construction: evaluation order is the recording
// order and reductions are plain sequential loops, so results are
// reproducible bit-for-bit.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf excluded from gradient flow.
  Tensor constant(Shape shape, std::vector<double> data);
  Tensor constant_scalar(double v);
  // Trainable leaf: value copied in, gradients accumulated into grad_sink
  // (same length as data) by backward().
  Tensor leaf(Shape shape, const double* data, double* grad_sink);

  Tensor matmul(Tensor a, Tensor b);
  Tensor transpose(Tensor t);

  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor mul(Tensor a, Tensor b);
  Tensor divide(Tensor a, Tensor b);

  // Broadcast variants: b is a 1xN row (per-column) or Mx1 column (per-row).
  Tensor add_row(Tensor a, Tensor b);
  Tensor add_col(Tensor a, Tensor b);
  Tensor mul_col(Tensor a, Tensor b);
  Tensor div_col(Tensor a, Tensor b);

  Tensor relu(Tensor t);
  Tensor leaky_relu(Tensor t, double slope);
  Tensor sigmoid(Tensor t);
  Tensor log(Tensor t);
  Tensor square(Tensor t);
  Tensor recip(Tensor t);
  Tensor scale(Tensor t, double c);
  Tensor add_scalar(Tensor t, double c);
  Tensor clamp_min(Tensor t, double c);

  Tensor sum(Tensor t);
  Tensor mean(Tensor t);
  Tensor sum_rows(Tensor t);  // MxN -> Mx1
  Tensor sum_cols(Tensor t);  // MxN -> 1xN

  // Reverses row order; used to pair each batch row with another one.
  Tensor flip_rows(Tensor t);

  Tensor detach(Tensor t);

  // Accumulates dRoot/dNode into every participating node's grad buffer and
  // into leaf grad sinks. May be called multiple times; contributions add.
  void backward(Tensor root);

  void set_check_finite(bool on) { check_finite_ = on; }
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  friend class Tensor;
  using GradStore = std::vector<std::vector<double>>;
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    double* sink = nullptr;
    std::function<void(Tape&, const std::vector<double>&, GradStore&)> back;
  };

  Tensor push(Shape shape, std::vector<double> value);
  Node& at(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& at(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  static std::vector<double>& accum(GradStore& gs, int id, std::size_t n);
  void check_node(int id);
  static void require_same_shape(const Tensor& a, const Tensor& b,
                                 const char* op);
  void require_same_tape(const Tensor& a, const Tensor& b, const char* op);

  Tensor map_unary(Tensor t, const char* name,
                   double (*f)(double),
                   double (*df)(double /*x*/, double /*y*/));

  std::vector<Node> nodes_;
  bool check_finite_ = false;
};

}  // namespace adec
