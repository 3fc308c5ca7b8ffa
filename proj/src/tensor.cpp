#include "tensor.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace adec {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

const Shape& Tensor::shape() const { return tape_->at(node_).shape; }
std::size_t Tensor::size() const { return tape_->at(node_).value.size(); }
const std::vector<double>& Tensor::value() const {
  return tape_->at(node_).value;
}
const std::vector<double>& Tensor::grad() const {
  return tape_->at(node_).grad;
}

std::size_t Tensor::rows() const {
  const Shape& s = shape();
  return s.empty() ? 1 : s[0];
}
std::size_t Tensor::cols() const {
  const Shape& s = shape();
  return s.size() < 2 ? 1 : s[1];
}

double Tensor::scalar() const {
  if (size() != 1) throw ContractError("scalar() on tensor of size > 1");
  return value()[0];
}

Tensor Tape::push(Shape shape, std::vector<double> value) {
  if (shape_size(shape) != value.size())
    throw DimensionError("tensor data length does not match shape " +
                         shape_str(shape));
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::check_node(int id) {
  if (!check_finite_) return;
  for (double v : at(id).value)
    if (!std::isfinite(v))
      throw DomainError("non-finite value produced at node " +
                        std::to_string(id));
}

std::vector<double>& Tape::accum(GradStore& gs, int id, std::size_t n) {
  auto& g = gs[static_cast<std::size_t>(id)];
  if (g.empty()) g.assign(n, 0.0);
  return g;
}

void Tape::require_same_shape(const Tensor& a, const Tensor& b,
                              const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void Tape::require_same_tape(const Tensor& a, const Tensor& b,
                             const char* op) {
  if (a.tape() != this || b.tape() != this)
    throw ContractError(std::string(op) + ": tensors from different tapes");
}

Tensor Tape::constant(Shape shape, std::vector<double> data) {
  return push(std::move(shape), std::move(data));
}

Tensor Tape::constant_scalar(double v) { return push({1}, {v}); }

Tensor Tape::leaf(Shape shape, const double* data, double* grad_sink) {
  std::size_t n = shape_size(shape);
  Tensor t = push(std::move(shape), std::vector<double>(data, data + n));
  at(t.node()).sink = grad_sink;
  return t;
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  require_same_tape(a, b, "matmul");
  std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2)
    throw DimensionError("matmul: inner extents differ " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  {
    CMap ma(a.value().data(), m, k), mb(b.value().data(), k, n);
    MMap mo(out.data(), m, n);
    mo.noalias() = ma * mb;
  }
  Tensor r = push({m, n}, std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, m, k, n](Tape& tp, const std::vector<double>& g,
                                        GradStore& gs) {
    CMap mg(g.data(), m, n);
    CMap ma(tp.at(ia).value.data(), m, k);
    CMap mb(tp.at(ib).value.data(), k, n);
    MMap ga(accum(gs, ia, m * k).data(), m, k);
    MMap gb(accum(gs, ib, k * n).data(), k, n);
    ga.noalias() += mg * mb.transpose();
    gb.noalias() += ma.transpose() * mg;
  };
  check_node(r.node());
  return r;
}

Tensor Tape::transpose(Tensor t) {
  std::size_t m = t.rows(), n = t.cols();
  std::vector<double> out(m * n);
  CMap mt(t.value().data(), m, n);
  MMap mo(out.data(), n, m);
  mo = mt.transpose();
  Tensor r = push({n, m}, std::move(out));
  int it = t.node();
  at(r.node()).back = [it, m, n](Tape& tp, const std::vector<double>& g,
                                 GradStore& gs) {
    CMap mg(g.data(), n, m);
    MMap gt(accum(gs, it, m * n).data(), m, n);
    gt += mg.transpose();
  };
  return r;
}

Tensor Tape::add(Tensor a, Tensor b) {
  require_same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  std::size_t n = a.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a.value()[i] + b.value()[i];
  Tensor r = push(a.shape(), std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, n](Tape&, const std::vector<double>& g,
                                  GradStore& gs) {
    auto& ga = accum(gs, ia, n);
    auto& gb = accum(gs, ib, n);
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::sub(Tensor a, Tensor b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  std::size_t n = a.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a.value()[i] - b.value()[i];
  Tensor r = push(a.shape(), std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, n](Tape&, const std::vector<double>& g,
                                  GradStore& gs) {
    auto& ga = accum(gs, ia, n);
    auto& gb = accum(gs, ib, n);
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::mul(Tensor a, Tensor b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  std::size_t n = a.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a.value()[i] * b.value()[i];
  Tensor r = push(a.shape(), std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, n](Tape& tp, const std::vector<double>& g,
                                  GradStore& gs) {
    const auto& va = tp.at(ia).value;
    const auto& vb = tp.at(ib).value;
    auto& ga = accum(gs, ia, n);
    auto& gb = accum(gs, ib, n);
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::divide(Tensor a, Tensor b) {
  require_same_tape(a, b, "div");
  require_same_shape(a, b, "div");
  std::size_t n = a.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a.value()[i] / b.value()[i];
  Tensor r = push(a.shape(), std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, n](Tape& tp, const std::vector<double>& g,
                                  GradStore& gs) {
    const auto& va = tp.at(ia).value;
    const auto& vb = tp.at(ib).value;
    auto& ga = accum(gs, ia, n);
    auto& gb = accum(gs, ib, n);
    for (std::size_t i = 0; i < n; ++i) {
      ga[i] += g[i] / vb[i];
      gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
    }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::add_row(Tensor a, Tensor b) {
  require_same_tape(a, b, "add_row");
  std::size_t m = a.rows(), n = a.cols();
  if (b.rows() != 1 || b.cols() != n)
    throw DimensionError("add_row: expected 1x" + std::to_string(n) +
                         ", got " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = a.value()[i * n + j] + b.value()[j];
  Tensor r = push({m, n}, std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, m, n](Tape&, const std::vector<double>& g,
                                     GradStore& gs) {
    auto& ga = accum(gs, ia, m * n);
    auto& gb = accum(gs, ib, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j];
        gb[j] += g[i * n + j];
      }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::add_col(Tensor a, Tensor b) {
  require_same_tape(a, b, "add_col");
  std::size_t m = a.rows(), n = a.cols();
  if (b.rows() != m || b.cols() != 1)
    throw DimensionError("add_col: expected " + std::to_string(m) +
                         "x1, got " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = a.value()[i * n + j] + b.value()[i];
  Tensor r = push({m, n}, std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, m, n](Tape&, const std::vector<double>& g,
                                     GradStore& gs) {
    auto& ga = accum(gs, ia, m * n);
    auto& gb = accum(gs, ib, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j];
        gb[i] += g[i * n + j];
      }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::mul_col(Tensor a, Tensor b) {
  require_same_tape(a, b, "mul_col");
  std::size_t m = a.rows(), n = a.cols();
  if (b.rows() != m || b.cols() != 1)
    throw DimensionError("mul_col: expected " + std::to_string(m) +
                         "x1, got " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = a.value()[i * n + j] * b.value()[i];
  Tensor r = push({m, n}, std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, m, n](Tape& tp, const std::vector<double>& g,
                                     GradStore& gs) {
    const auto& va = tp.at(ia).value;
    const auto& vb = tp.at(ib).value;
    auto& ga = accum(gs, ia, m * n);
    auto& gb = accum(gs, ib, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j] * vb[i];
        gb[i] += g[i * n + j] * va[i * n + j];
      }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::div_col(Tensor a, Tensor b) {
  require_same_tape(a, b, "div_col");
  std::size_t m = a.rows(), n = a.cols();
  if (b.rows() != m || b.cols() != 1)
    throw DimensionError("div_col: expected " + std::to_string(m) +
                         "x1, got " + shape_str(b.shape()));
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = a.value()[i * n + j] / b.value()[i];
  Tensor r = push({m, n}, std::move(out));
  int ia = a.node(), ib = b.node();
  at(r.node()).back = [ia, ib, m, n](Tape& tp, const std::vector<double>& g,
                                     GradStore& gs) {
    const auto& va = tp.at(ia).value;
    const auto& vb = tp.at(ib).value;
    auto& ga = accum(gs, ia, m * n);
    auto& gb = accum(gs, ib, m);
    for (std::size_t i = 0; i < m; ++i) {
      double inv = 1.0 / vb[i];
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j] * inv;
        gb[i] -= g[i * n + j] * va[i * n + j] * inv * inv;
      }
    }
  };
  check_node(r.node());
  return r;
}

Tensor Tape::map_unary(Tensor t, const char* name, double (*f)(double),
                       double (*df)(double, double)) {
  (void)name;
  std::size_t n = t.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(t.value()[i]);
  Tensor r = push(t.shape(), std::move(out));
  int it = t.node(), ir = r.node();
  at(ir).back = [it, ir, df, n](Tape& tp, const std::vector<double>& g,
                                GradStore& gs) {
    const auto& x = tp.at(it).value;
    const auto& y = tp.at(ir).value;
    auto& gt = accum(gs, it, n);
    for (std::size_t i = 0; i < n; ++i) gt[i] += g[i] * df(x[i], y[i]);
  };
  check_node(ir);
  return r;
}

Tensor Tape::relu(Tensor t) {
  return map_unary(
      t, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Tape::leaky_relu(Tensor t, double slope) {
  std::size_t n = t.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = t.value()[i];
    out[i] = x > 0.0 ? x : slope * x;
  }
  Tensor r = push(t.shape(), std::move(out));
  int it = t.node();
  at(r.node()).back = [it, slope, n](Tape& tp, const std::vector<double>& g,
                                     GradStore& gs) {
    const auto& x = tp.at(it).value;
    auto& gt = accum(gs, it, n);
    for (std::size_t i = 0; i < n; ++i)
      gt[i] += g[i] * (x[i] > 0.0 ? 1.0 : slope);
  };
  check_node(r.node());
  return r;
}

Tensor Tape::sigmoid(Tensor t) {
  return map_unary(
      t, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor Tape::log(Tensor t) {
  for (double v : t.value())
    if (!(v > 0.0)) throw DomainError("log of non-positive value");
  return map_unary(
      t, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor Tape::square(Tensor t) {
  return map_unary(
      t, "square", [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Tensor Tape::recip(Tensor t) {
  return map_unary(
      t, "recip", [](double x) { return 1.0 / x; },
      [](double, double y) { return -y * y; });
}

Tensor Tape::scale(Tensor t, double c) {
  std::size_t n = t.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = c * t.value()[i];
  Tensor r = push(t.shape(), std::move(out));
  int it = t.node();
  at(r.node()).back = [it, c, n](Tape&, const std::vector<double>& g,
                                 GradStore& gs) {
    auto& gt = accum(gs, it, n);
    for (std::size_t i = 0; i < n; ++i) gt[i] += c * g[i];
  };
  check_node(r.node());
  return r;
}

Tensor Tape::add_scalar(Tensor t, double c) {
  std::size_t n = t.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = t.value()[i] + c;
  Tensor r = push(t.shape(), std::move(out));
  int it = t.node();
  at(r.node()).back = [it, n](Tape&, const std::vector<double>& g,
                              GradStore& gs) {
    auto& gt = accum(gs, it, n);
    for (std::size_t i = 0; i < n; ++i) gt[i] += g[i];
  };
  check_node(r.node());
  return r;
}

Tensor Tape::clamp_min(Tensor t, double c) {
  std::size_t n = t.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(t.value()[i], c);
  Tensor r = push(t.shape(), std::move(out));
  int it = t.node();
  at(r.node()).back = [it, c, n](Tape& tp, const std::vector<double>& g,
                                 GradStore& gs) {
    const auto& x = tp.at(it).value;
    auto& gt = accum(gs, it, n);
    for (std::size_t i = 0; i < n; ++i)
      if (x[i] > c) gt[i] += g[i];
  };
  check_node(r.node());
  return r;
}

Tensor Tape::sum(Tensor t) {
  std::size_t n = t.size();
  double s = 0.0;
  for (double v : t.value()) s += v;
  Tensor r = push({1}, {s});
  int it = t.node();
  at(r.node()).back = [it, n](Tape&, const std::vector<double>& g,
                              GradStore& gs) {
    auto& gt = accum(gs, it, n);
    for (std::size_t i = 0; i < n; ++i) gt[i] += g[0];
  };
  return r;
}

Tensor Tape::mean(Tensor t) {
  std::size_t n = t.size();
  double s = 0.0;
  for (double v : t.value()) s += v;
  Tensor r = push({1}, {s / static_cast<double>(n)});
  int it = t.node();
  at(r.node()).back = [it, n](Tape&, const std::vector<double>& g,
                              GradStore& gs) {
    auto& gt = accum(gs, it, n);
    double w = g[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) gt[i] += w;
  };
  return r;
}

Tensor Tape::sum_rows(Tensor t) {
  std::size_t m = t.rows(), n = t.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += t.value()[i * n + j];
  Tensor r = push({m, 1}, std::move(out));
  int it = t.node();
  at(r.node()).back = [it, m, n](Tape&, const std::vector<double>& g,
                                 GradStore& gs) {
    auto& gt = accum(gs, it, m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gt[i * n + j] += g[i];
  };
  return r;
}

Tensor Tape::sum_cols(Tensor t) {
  std::size_t m = t.rows(), n = t.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += t.value()[i * n + j];
  Tensor r = push({1, n}, std::move(out));
  int it = t.node();
  at(r.node()).back = [it, m, n](Tape&, const std::vector<double>& g,
                                 GradStore& gs) {
    auto& gt = accum(gs, it, m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gt[i * n + j] += g[j];
  };
  return r;
}

Tensor Tape::flip_rows(Tensor t) {
  std::size_t m = t.rows(), n = t.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = t.value()[(m - 1 - i) * n + j];
  Tensor r = push({m, n}, std::move(out));
  int it = t.node();
  at(r.node()).back = [it, m, n](Tape&, const std::vector<double>& g,
                                 GradStore& gs) {
    auto& gt = accum(gs, it, m * n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        gt[(m - 1 - i) * n + j] += g[i * n + j];
  };
  return r;
}

Tensor Tape::detach(Tensor t) {
  // Value bit-equal to t, no backward edge.
  return push(t.shape(), t.value());
}

void Tape::backward(Tensor root) {
  if (root.tape() != this)
    throw ContractError("backward: root from a different tape");
  if (root.size() != 1)
    throw ContractError("backward: root must be scalar-shaped");
  GradStore gs(nodes_.size());
  gs[static_cast<std::size_t>(root.node())] = {1.0};
  for (int i = root.node(); i >= 0; --i) {
    auto& g = gs[static_cast<std::size_t>(i)];
    if (g.empty()) continue;
    Node& nd = at(i);
    if (nd.back) nd.back(*this, g, gs);
    if (nd.grad.empty()) nd.grad.assign(g.size(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) nd.grad[k] += g[k];
    if (nd.sink)
      for (std::size_t k = 0; k < g.size(); ++k) nd.sink[k] += g[k];
    // Release per-call buffer early; upstream of i is never revisited.
    g.clear();
    g.shrink_to_fit();
  }
}

}  // namespace adec
