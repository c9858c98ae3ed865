#include "fn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fn::ad {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using CEMap = Eigen::Map<const EMat>;

CEMap cmap(const Tensor& t) { return CEMap(t.v.data(), t.rows(), t.cols()); }
EMap map(Tensor& t) { return EMap(t.v.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_fail2(const char* op, const Tensor& a, const Tensor& b) {
  std::string s = "op ";
  s += op;
  s += ": incompatible shapes (";
  for (std::size_t i = 0; i < a.shape.size(); ++i) s += (i ? "," : "") + std::to_string(a.shape[i]);
  s += ") vs (";
  for (std::size_t i = 0; i < b.shape.size(); ++i) s += (i ? "," : "") + std::to_string(b.shape[i]);
  s += ")";
  throw std::invalid_argument(s);
}

}  // namespace

Var Tape::leaf(Tensor t, bool requires_grad) { return push("leaf", std::move(t), requires_grad); }

Var Tape::push(const char* op, Tensor value, bool requires_grad) {
#ifndef NDEBUG
  for (double x : value.v) {
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("op ") + op + ": non-finite value in forward output");
  }
#else
  (void)op;
#endif
  bytes_ += value.v.size() * sizeof(double);
  peak_bytes_ = std::max(peak_bytes_, bytes_);
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buffer(Var x) {
  Node& n = nodes_[static_cast<std::size_t>(x.idx)];
  if (n.grad.v.empty()) {
    n.grad = Tensor(n.value.shape);
    bytes_ += n.grad.v.size() * sizeof(double);
    peak_bytes_ = std::max(peak_bytes_, bytes_);
  }
  return n.grad;
}

const Tensor& Tape::grad(Var x) { return grad_buffer(x); }

void Tape::backward(Var output) {
  if (!output.valid()) throw std::invalid_argument("backward: invalid output var");
  Node& out = nodes_[static_cast<std::size_t>(output.idx)];
  if (out.value.numel() != 1) throw std::invalid_argument("backward: output must be scalar");
  grad_buffer(output).v[0] = 1.0;
  for (int i = output.idx; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || !n.back) continue;
    if (n.grad.v.empty()) continue;  // no gradient reached this node
    n.back();
  }
}

namespace {

template <class Fwd, class Dfun>
Var elementwise(const char* name, Tape& t, Var a, Fwd f, Dfun df) {
  const Tensor& av = t.val(a);
  Tensor out = Tensor::uninit(av.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = f(av.v[i]);
  const bool rg = t.wants_grad(a);
  Var o = t.push(name, std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, a, o, df]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& x = t.val(a);
      const Tensor& y = t.val(o);
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * df(x.v[i], y.v[i]);
    });
  }
  return o;
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.shape.size() != 2 || bv.shape.size() != 2 || av.cols() != bv.rows())
    shape_fail2("matmul", av, bv);
  Tensor out = Tensor::uninit({av.rows(), bv.cols()});
  map(out).noalias() = cmap(av) * cmap(bv);
  const bool rg = t.wants_grad(a) || t.wants_grad(b);
  Var o = t.push("matmul", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, a, b, o]() {
      const Tensor& g = t.grad_buffer(o);
      if (t.wants_grad(a)) map(t.grad_buffer(a)) += cmap(g) * cmap(t.val(b)).transpose();
      if (t.wants_grad(b)) map(t.grad_buffer(b)) += cmap(t.val(a)).transpose() * cmap(g);
    });
  }
  return o;
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.shape != bv.shape) shape_fail2("add", av, bv);
  Tensor out = Tensor::uninit(av.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = av.v[i] + bv.v[i];
  const bool rg = t.wants_grad(a) || t.wants_grad(b);
  Var o = t.push("add", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, a, b, o]() {
      const Tensor& g = t.grad_buffer(o);
      if (t.wants_grad(a)) {
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
      }
      if (t.wants_grad(b)) {
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i];
      }
    });
  }
  return o;
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.shape != bv.shape) shape_fail2("sub", av, bv);
  Tensor out = Tensor::uninit(av.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = av.v[i] - bv.v[i];
  const bool rg = t.wants_grad(a) || t.wants_grad(b);
  Var o = t.push("sub", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, a, b, o]() {
      const Tensor& g = t.grad_buffer(o);
      if (t.wants_grad(a)) {
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
      }
      if (t.wants_grad(b)) {
        Tensor& gb = t.grad_buffer(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] -= g.v[i];
      }
    });
  }
  return o;
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.shape != bv.shape) shape_fail2("mul", av, bv);
  Tensor out = Tensor::uninit(av.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = av.v[i] * bv.v[i];
  const bool rg = t.wants_grad(a) || t.wants_grad(b);
  Var o = t.push("mul", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, a, b, o]() {
      const Tensor& g = t.grad_buffer(o);
      if (t.wants_grad(a)) {
        Tensor& ga = t.grad_buffer(a);
        const Tensor& bvv = t.val(b);
        for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * bvv.v[i];
      }
      if (t.wants_grad(b)) {
        Tensor& gb = t.grad_buffer(b);
        const Tensor& avv = t.val(a);
        for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * avv.v[i];
      }
    });
  }
  return o;
}

Var add_rowvec(Tape& t, Var x, Var b) {
  const Tensor& xv = t.val(x);
  const Tensor& bv = t.val(b);
  if (bv.numel() != xv.cols()) shape_fail2("add_rowvec", xv, bv);
  Tensor out = Tensor::uninit(xv.shape);
  const int r = xv.rows(), c = xv.cols();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = xv.at(i, j) + bv.v[static_cast<std::size_t>(j)];
  const bool rg = t.wants_grad(x) || t.wants_grad(b);
  Var o = t.push("add_rowvec", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, b, o, r, c]() {
      const Tensor& g = t.grad_buffer(o);
      if (t.wants_grad(x)) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.v.size(); ++i) gx.v[i] += g.v[i];
      }
      if (t.wants_grad(b)) {
        Tensor& gb = t.grad_buffer(b);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gb.v[static_cast<std::size_t>(j)] += g.at(i, j);
      }
    });
  }
  return o;
}

Var mul_rowvec(Tape& t, Var x, Var s) {
  const Tensor& xv = t.val(x);
  const Tensor& sv = t.val(s);
  if (sv.numel() != xv.cols()) shape_fail2("mul_rowvec", xv, sv);
  Tensor out = Tensor::uninit(xv.shape);
  const int r = xv.rows(), c = xv.cols();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) = xv.at(i, j) * sv.v[static_cast<std::size_t>(j)];
  const bool rg = t.wants_grad(x) || t.wants_grad(s);
  Var o = t.push("mul_rowvec", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, s, o, r, c]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& xvv = t.val(x);
      const Tensor& svv = t.val(s);
      if (t.wants_grad(x)) {
        Tensor& gx = t.grad_buffer(x);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gx.at(i, j) += g.at(i, j) * svv.v[static_cast<std::size_t>(j)];
      }
      if (t.wants_grad(s)) {
        Tensor& gs = t.grad_buffer(s);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gs.v[static_cast<std::size_t>(j)] += g.at(i, j) * xvv.at(i, j);
      }
    });
  }
  return o;
}

Var mul_scalar(Tape& t, Var x, Var w) {
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  if (wv.numel() != 1) shape_fail2("mul_scalar", xv, wv);
  Tensor out = Tensor::uninit(xv.shape);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = xv.v[i] * wv.v[0];
  const bool rg = t.wants_grad(x) || t.wants_grad(w);
  Var o = t.push("mul_scalar", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, w, o]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& xvv = t.val(x);
      const Tensor& wvv = t.val(w);
      if (t.wants_grad(x)) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.v.size(); ++i) gx.v[i] += g.v[i] * wvv.v[0];
      }
      if (t.wants_grad(w)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.v.size(); ++i) acc += g.v[i] * xvv.v[i];
        t.grad_buffer(w).v[0] += acc;
      }
    });
  }
  return o;
}

Var scale(Tape& t, Var x, double c) {
  return elementwise("scale", t, x, [c](double a) { return a * c; },
                     [c](double, double) { return c; });
}

Var add_const(Tape& t, Var x, double c) {
  return elementwise("add_const", t, x, [c](double a) { return a + c; },
                     [](double, double) { return 1.0; });
}

Var relu(Tape& t, Var x) {
  return elementwise("relu", t, x, [](double a) { return a > 0.0 ? a : 0.0; },
                     [](double a, double) { return a > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& t, Var x) {
  return elementwise("sigmoid", t, x,
                     [](double a) { return 1.0 / (1.0 + std::exp(-a)); },
                     [](double, double y) { return y * (1.0 - y); });
}

Var gelu(Tape& t, Var x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  return elementwise(
      "gelu", t, x,
      [=](double a) { return 0.5 * a * (1.0 + std::erf(a * inv_sqrt2)); },
      [=](double a, double) {
        const double cdf = 0.5 * (1.0 + std::erf(a * inv_sqrt2));
        return cdf + a * inv_sqrt2pi * std::exp(-0.5 * a * a);
      });
}

Var sqrt_op(Tape& t, Var x) {
  return elementwise("sqrt", t, x, [](double a) { return std::sqrt(a); },
                     [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Var layer_norm(Tape& t, Var x, double eps) {
  const Tensor& xv = t.val(x);
  const int r = xv.rows(), c = xv.cols();
  Tensor out = Tensor::uninit(xv.shape);
  std::vector<double> inv_std(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += xv.at(i, j);
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = xv.at(i, j) - mean;
      var += d * d;
    }
    var /= c;
    const double s = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = s;
    for (int j = 0; j < c; ++j) out.at(i, j) = (xv.at(i, j) - mean) * s;
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("layer_norm", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, r, c, inv_std = std::move(inv_std)]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& y = t.val(o);
      Tensor& gx = t.grad_buffer(x);
      for (int i = 0; i < r; ++i) {
        double gmean = 0.0, gymean = 0.0;
        for (int j = 0; j < c; ++j) {
          gmean += g.at(i, j);
          gymean += g.at(i, j) * y.at(i, j);
        }
        gmean /= c;
        gymean /= c;
        const double s = inv_std[static_cast<std::size_t>(i)];
        for (int j = 0; j < c; ++j)
          gx.at(i, j) += s * (g.at(i, j) - gmean - y.at(i, j) * gymean);
      }
    });
  }
  return o;
}

Var softmax(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  const int r = xv.rows(), c = xv.cols();
  Tensor out = Tensor::uninit(xv.shape);
  for (int i = 0; i < r; ++i) {
    double mx = xv.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, xv.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      out.at(i, j) = std::exp(xv.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (int j = 0; j < c; ++j) out.at(i, j) /= z;
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("softmax", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, r, c]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& y = t.val(o);
      Tensor& gx = t.grad_buffer(x);
      for (int i = 0; i < r; ++i) {
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += g.at(i, j) * y.at(i, j);
        for (int j = 0; j < c; ++j) gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    });
  }
  return o;
}

Var transpose(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  const int r = xv.rows(), c = xv.cols();
  Tensor out = Tensor::uninit({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(j, i) = xv.at(i, j);
  const bool rg = t.wants_grad(x);
  Var o = t.push("transpose", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, r, c]() {
      const Tensor& g = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gx.at(i, j) += g.at(j, i);
    });
  }
  return o;
}

Var mean_axis(Tape& t, Var x, int axis) {
  const Tensor& xv = t.val(x);
  const int r = xv.rows(), c = xv.cols();
  if (axis != 0 && axis != 1) throw std::invalid_argument("mean_axis: axis must be 0 or 1");
  Tensor out(axis == 0 ? std::vector<int>{1, c} : std::vector<int>{r, 1});
  if (axis == 0) {
    for (int j = 0; j < c; ++j) {
      double acc = 0.0;
      for (int i = 0; i < r; ++i) acc += xv.at(i, j);
      out.at(0, j) = acc / r;
    }
  } else {
    for (int i = 0; i < r; ++i) {
      double acc = 0.0;
      for (int j = 0; j < c; ++j) acc += xv.at(i, j);
      out.at(i, 0) = acc / c;
    }
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("mean_axis", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, r, c, axis]() {
      const Tensor& g = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      if (axis == 0) {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gx.at(i, j) += g.at(0, j) / r;
      } else {
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) gx.at(i, j) += g.at(i, 0) / c;
      }
    });
  }
  return o;
}

Var mean_all(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  double acc = 0.0;
  for (double a : xv.v) acc += a;
  const double n = static_cast<double>(xv.numel());
  const bool rg = t.wants_grad(x);
  Var o = t.push("mean_all", Tensor::scalar(acc / n), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, n]() {
      const double g = t.grad_buffer(o).v[0];
      Tensor& gx = t.grad_buffer(x);
      for (double& e : gx.v) e += g / n;
    });
  }
  return o;
}

Var sum_all(Tape& t, Var x) {
  const Tensor& xv = t.val(x);
  double acc = 0.0;
  for (double a : xv.v) acc += a;
  const bool rg = t.wants_grad(x);
  Var o = t.push("sum_all", Tensor::scalar(acc), rg);
  if (rg) {
    t.set_back(o, [&t, x, o]() {
      const double g = t.grad_buffer(o).v[0];
      Tensor& gx = t.grad_buffer(x);
      for (double& e : gx.v) e += g;
    });
  }
  return o;
}

Var concat_cols(Tape& t, Var a, Var b) {
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  if (av.rows() != bv.rows()) shape_fail2("concat_cols", av, bv);
  const int r = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out = Tensor::uninit({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = av.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = bv.at(i, j);
  }
  const bool rg = t.wants_grad(a) || t.wants_grad(b);
  Var o = t.push("concat_cols", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, a, b, o, r, ca, cb]() {
      const Tensor& g = t.grad_buffer(o);
      if (t.wants_grad(a)) {
        Tensor& ga = t.grad_buffer(a);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < ca; ++j) ga.at(i, j) += g.at(i, j);
      }
      if (t.wants_grad(b)) {
        Tensor& gb = t.grad_buffer(b);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < cb; ++j) gb.at(i, j) += g.at(i, ca + j);
      }
    });
  }
  return o;
}

Var gather_rows(Tape& t, Var x, std::vector<int> idx) {
  const Tensor& xv = t.val(x);
  const int c = xv.cols();
  Tensor out = Tensor::uninit({static_cast<int>(idx.size()), c});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= xv.rows()) throw std::invalid_argument("gather_rows: index out of range");
    for (int j = 0; j < c; ++j) out.at(static_cast<int>(i), j) = xv.at(idx[i], j);
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("gather_rows", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, c, idx = std::move(idx)]() {
      const Tensor& g = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < c; ++j) gx.at(idx[i], j) += g.at(static_cast<int>(i), j);
    });
  }
  return o;
}

Var scatter_sum_rows(Tape& t, Var x, std::vector<int> idx, int out_rows) {
  const Tensor& xv = t.val(x);
  if (static_cast<int>(idx.size()) != xv.rows())
    throw std::invalid_argument("scatter_sum_rows: index count != row count");
  const int c = xv.cols();
  Tensor out({out_rows, c});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= out_rows) throw std::invalid_argument("scatter_sum_rows: index out of range");
    for (int j = 0; j < c; ++j) out.at(idx[i], j) += xv.at(static_cast<int>(i), j);
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("scatter_sum_rows", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, c, idx = std::move(idx)]() {
      const Tensor& g = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < c; ++j) gx.at(static_cast<int>(i), j) += g.at(idx[i], j);
    });
  }
  return o;
}

Var segment_mean(Tape& t, Var x, const std::vector<int>& assignment, int num_segments) {
  const Tensor& xv = t.val(x);
  if (static_cast<int>(assignment.size()) != xv.rows())
    throw std::invalid_argument("segment_mean: assignment size != row count");
  const int c = xv.cols();
  std::vector<std::int64_t> count(static_cast<std::size_t>(num_segments), 0);
  for (int b : assignment) {
    if (b < 0 || b >= num_segments) throw std::invalid_argument("segment_mean: segment id out of range");
    count[static_cast<std::size_t>(b)]++;
  }
  for (int s = 0; s < num_segments; ++s)
    if (count[static_cast<std::size_t>(s)] == 0)
      throw std::invalid_argument("segment_mean: empty segment " + std::to_string(s));
  Tensor out({num_segments, c});
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < c; ++j) out.at(assignment[static_cast<std::size_t>(i)], j) += xv.at(i, j);
  for (int s = 0; s < num_segments; ++s)
    for (int j = 0; j < c; ++j) out.at(s, j) /= static_cast<double>(count[static_cast<std::size_t>(s)]);
  const bool rg = t.wants_grad(x);
  Var o = t.push("segment_mean", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, c, assignment, count = std::move(count)]() {
      const Tensor& g = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      for (std::size_t i = 0; i < assignment.size(); ++i) {
        const int s = assignment[i];
        const double inv = 1.0 / static_cast<double>(count[static_cast<std::size_t>(s)]);
        for (int j = 0; j < c; ++j) gx.at(static_cast<int>(i), j) += g.at(s, j) * inv;
      }
    });
  }
  return o;
}

Var segment_mean_blocks(Tape& t, Var x, const std::vector<std::vector<int>>& blocks) {
  const Tensor& xv = t.val(x);
  const int c = xv.cols();
  const int C = static_cast<int>(blocks.size());
  Tensor out({C, c});
  for (int b = 0; b < C; ++b) {
    if (blocks[static_cast<std::size_t>(b)].empty())
      throw std::invalid_argument("segment_mean_blocks: empty block " + std::to_string(b));
    for (int v : blocks[static_cast<std::size_t>(b)])
      for (int j = 0; j < c; ++j) out.at(b, j) += xv.at(v, j);
    const double inv = 1.0 / static_cast<double>(blocks[static_cast<std::size_t>(b)].size());
    for (int j = 0; j < c; ++j) out.at(b, j) *= inv;
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("segment_mean_blocks", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, x, o, c, blocks]() {
      const Tensor& g = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const double inv = 1.0 / static_cast<double>(blocks[b].size());
        for (int v : blocks[b])
          for (int j = 0; j < c; ++j) gx.at(v, j) += g.at(static_cast<int>(b), j) * inv;
      }
    });
  }
  return o;
}

Var segment_broadcast(Tape& t, Var f, const std::vector<int>& assignment) {
  return gather_rows(t, f, assignment);
}

Var sparse_neighbor_aggregate(Tape& t, const Graph& g, Var x, const std::vector<double>& edge_weights) {
  const Tensor& xv = t.val(x);
  if (xv.rows() != g.num_nodes)
    throw std::invalid_argument("sparse_neighbor_aggregate: row count != node count");
  const bool weighted = !edge_weights.empty();
  if (weighted && static_cast<std::int64_t>(edge_weights.size()) != g.num_directed_edges())
    throw std::invalid_argument("sparse_neighbor_aggregate: weights misaligned with directed edge order");
  const int c = xv.cols();
  Tensor out({g.num_nodes, c});
  for (int v = 0; v < g.num_nodes; ++v) {
    for (std::int64_t e = g.offsets[static_cast<std::size_t>(v)]; e < g.offsets[static_cast<std::size_t>(v) + 1]; ++e) {
      const int u = g.neighbors[static_cast<std::size_t>(e)];
      const double w = weighted ? edge_weights[static_cast<std::size_t>(e)] : 1.0;
      for (int j = 0; j < c; ++j) out.at(v, j) += w * xv.at(u, j);
    }
  }
  const bool rg = t.wants_grad(x);
  Var o = t.push("sparse_neighbor_aggregate", std::move(out), rg);
  if (rg) {
    // The graph must outlive the tape; weights are copied into the closure.
    t.set_back(o, [&t, &g, x, o, c, weighted, edge_weights]() {
      const Tensor& gr = t.grad_buffer(o);
      Tensor& gx = t.grad_buffer(x);
      // Adjoint scatters along reversed edges; the undirected CSR already
      // stores both directions.
      for (int v = 0; v < g.num_nodes; ++v) {
        for (std::int64_t e = g.offsets[static_cast<std::size_t>(v)]; e < g.offsets[static_cast<std::size_t>(v) + 1]; ++e) {
          const int u = g.neighbors[static_cast<std::size_t>(e)];
          const double w = weighted ? edge_weights[static_cast<std::size_t>(e)] : 1.0;
          for (int j = 0; j < c; ++j) gx.at(u, j) += w * gr.at(v, j);
        }
      }
    });
  }
  return o;
}

Var linear_residual_act(Tape& t, Var residual, Var x, Var w, bool linear) {
  const Tensor& rv = t.val(residual);
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  if (xv.cols() != wv.rows() || rv.rows() != xv.rows() || rv.cols() != wv.cols())
    shape_fail2("linear_residual_act", rv, xv);
  Tensor out = Tensor::uninit({rv.rows(), rv.cols()});
  map(out).noalias() = cmap(xv) * cmap(wv);
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    const double pre = out.v[i] + rv.v[i];
    out.v[i] = linear ? pre : (pre > 0.0 ? pre : 0.0);
  }
  const bool rg = t.wants_grad(residual) || t.wants_grad(x) || t.wants_grad(w);
  Var o = t.push("linear_residual_act", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, residual, x, w, o, linear]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& y = t.val(o);
      Tensor gm = Tensor::uninit(y.shape);
      if (linear) {
        std::copy(g.v.begin(), g.v.end(), gm.v.begin());
      } else {
        for (std::size_t i = 0; i < g.v.size(); ++i) gm.v[i] = y.v[i] > 0.0 ? g.v[i] : 0.0;
      }
      if (t.wants_grad(residual)) {
        Tensor& gr = t.grad_buffer(residual);
        for (std::size_t i = 0; i < gm.v.size(); ++i) gr.v[i] += gm.v[i];
      }
      if (t.wants_grad(x)) map(t.grad_buffer(x)) += cmap(gm) * cmap(t.val(w)).transpose();
      if (t.wants_grad(w)) map(t.grad_buffer(w)) += cmap(t.val(x)).transpose() * cmap(gm);
    });
  }
  return o;
}

Var fractal_message(Tape& t, Var h, Var deliver, Var lpf, const std::vector<int>& assignment,
                    Var omega) {
  const Tensor& hv = t.val(h);
  const Tensor& dv = t.val(deliver);
  const Tensor& lv = t.val(lpf);
  const int n = hv.rows(), d = hv.cols();
  if (static_cast<int>(assignment.size()) != n || dv.cols() != d || lv.cols() != d)
    shape_fail2("fractal_message", hv, dv);
  const bool hpf = omega.valid();
  const Tensor* ov = hpf ? &t.val(omega) : nullptr;
  const bool omega_scalar = hpf && ov->numel() == 1;
  if (hpf && !omega_scalar && ov->numel() != d) shape_fail2("fractal_message", hv, *ov);

  Tensor out = Tensor::uninit(hv.shape);
  for (int v = 0; v < n; ++v) {
    const int b = assignment[static_cast<std::size_t>(v)];
    for (int j = 0; j < d; ++j) {
      double m = dv.at(b, j);
      if (hpf) {
        const double w = omega_scalar ? ov->v[0] : ov->v[static_cast<std::size_t>(j)];
        m += w * (hv.at(v, j) - lv.at(b, j));
      }
      out.at(v, j) = hv.at(v, j) + m;
    }
  }
  const bool rg = t.wants_grad(h) || t.wants_grad(deliver) || t.wants_grad(lpf) ||
                  (hpf && t.wants_grad(omega));
  Var o = t.push("fractal_message", std::move(out), rg);
  if (rg) {
    t.set_back(o, [&t, h, deliver, lpf, omega, o, n, d, hpf, omega_scalar, assignment]() {
      const Tensor& g = t.grad_buffer(o);
      const Tensor& hvv = t.val(h);
      const Tensor& lvv = t.val(lpf);
      const Tensor* ovv = hpf ? &t.val(omega) : nullptr;
      Tensor* gh = t.wants_grad(h) ? &t.grad_buffer(h) : nullptr;
      Tensor* gd = t.wants_grad(deliver) ? &t.grad_buffer(deliver) : nullptr;
      Tensor* gl = (hpf && t.wants_grad(lpf)) ? &t.grad_buffer(lpf) : nullptr;
      Tensor* go = (hpf && t.wants_grad(omega)) ? &t.grad_buffer(omega) : nullptr;
      for (int v = 0; v < n; ++v) {
        const int b = assignment[static_cast<std::size_t>(v)];
        for (int j = 0; j < d; ++j) {
          const double gv = g.at(v, j);
          const double w = hpf ? (omega_scalar ? ovv->v[0] : ovv->v[static_cast<std::size_t>(j)]) : 0.0;
          if (gh) gh->at(v, j) += gv * (1.0 + w);
          if (gd) gd->at(b, j) += gv;
          if (gl) gl->at(b, j) -= gv * w;
          if (go) {
            const double dev = hvv.at(v, j) - lvv.at(b, j);
            go->v[omega_scalar ? 0 : static_cast<std::size_t>(j)] += gv * dev;
          }
        }
      }
    });
  }
  return o;
}

Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels) {
  const Tensor& lv = t.val(logits);
  if (static_cast<int>(labels.size()) != lv.rows())
    throw std::invalid_argument("cross_entropy: label count != row count");
  const int r = lv.rows(), c = lv.cols();
  int labeled = 0;
  double loss = 0.0;
  Tensor probs({r, c});
  for (int i = 0; i < r; ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0) continue;
    if (labels[static_cast<std::size_t>(i)] >= c) throw std::invalid_argument("cross_entropy: label out of range");
    double mx = lv.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, lv.at(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      probs.at(i, j) = std::exp(lv.at(i, j) - mx);
      z += probs.at(i, j);
    }
    for (int j = 0; j < c; ++j) probs.at(i, j) /= z;
    loss -= std::log(std::max(probs.at(i, labels[static_cast<std::size_t>(i)]), 1e-300));
    labeled++;
  }
  if (labeled == 0) throw std::invalid_argument("cross_entropy: no labeled rows");
  loss /= labeled;
  const bool rg = t.wants_grad(logits);
  Var o = t.push("cross_entropy", Tensor::scalar(loss), rg);
  if (rg) {
    t.set_back(o, [&t, logits, o, r, c, labeled, labels, probs = std::move(probs)]() {
      const double g = t.grad_buffer(o).v[0];
      Tensor& gl = t.grad_buffer(logits);
      for (int i = 0; i < r; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0) continue;
        for (int j = 0; j < c; ++j)
          gl.at(i, j) += g * (probs.at(i, j) - (j == y ? 1.0 : 0.0)) / labeled;
      }
    });
  }
  return o;
}

Var bce_with_logits(Tape& t, Var logits, const Tensor& targets) {
  const Tensor& lv = t.val(logits);
  if (lv.shape != targets.shape) shape_fail2("bce_with_logits", lv, targets);
  double loss = 0.0;
  for (std::size_t i = 0; i < lv.v.size(); ++i) {
    const double x = lv.v[i], y = targets.v[i];
    loss += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
  }
  const double n = static_cast<double>(lv.numel());
  loss /= n;
  const bool rg = t.wants_grad(logits);
  Var o = t.push("bce_with_logits", Tensor::scalar(loss), rg);
  if (rg) {
    t.set_back(o, [&t, logits, o, targets, n]() {
      const double g = t.grad_buffer(o).v[0];
      const Tensor& lvv = t.val(logits);
      Tensor& gl = t.grad_buffer(logits);
      for (std::size_t i = 0; i < lvv.v.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-lvv.v[i]));
        gl.v[i] += g * (s - targets.v[i]) / n;
      }
    });
  }
  return o;
}

Var l1_loss(Tape& t, Var pred, const Tensor& targets) {
  const Tensor& pv = t.val(pred);
  if (pv.shape != targets.shape) shape_fail2("l1_loss", pv, targets);
  double loss = 0.0;
  for (std::size_t i = 0; i < pv.v.size(); ++i) loss += std::abs(pv.v[i] - targets.v[i]);
  const double n = static_cast<double>(pv.numel());
  loss /= n;
  const bool rg = t.wants_grad(pred);
  Var o = t.push("l1_loss", Tensor::scalar(loss), rg);
  if (rg) {
    t.set_back(o, [&t, pred, o, targets, n]() {
      const double g = t.grad_buffer(o).v[0];
      const Tensor& pvv = t.val(pred);
      Tensor& gp = t.grad_buffer(pred);
      for (std::size_t i = 0; i < pvv.v.size(); ++i) {
        const double d = pvv.v[i] - targets.v[i];
        gp.v[i] += g * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
      }
    });
  }
  return o;
}

}  // namespace fn::ad
