// mixse/autodiff.hpp

// Copyright 2026  The mixse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixse/tensor.hpp"

namespace mixse {

class Tape;

/// Handle to a node in a Tape's computation graph. Cheap to copy; valid for
/// the lifetime of the owning Tape.
class Value {
 public:
  Value() = default;
  Value(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Tensor& val() const;
  Tensor& grad() const;
  const std::vector<int>& shape() const { return val().shape(); }
  double scalar() const { return val().scalar(); }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are recorded in forward order, which is a
/// topological order of the graph, so walking ids backwards visits every node
/// after all of its consumers, so each node's backward runs exactly once per
/// backward() call. A tape is confined to one thread during forward/backward;
/// independent tapes may run concurrently.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf node: an input the graph differentiates with respect to.
  Value leaf(Tensor value) { return emplace(std::move(value)); }

  /// Constant input. Gradients are still accumulated into it (and ignored);
  /// the distinction is documentation, not mechanics.
  Value constant(Tensor value) { return emplace(std::move(value)); }

  Value constant_scalar(double v) { return emplace(Tensor::Scalar(v)); }

  /// Reverse-mode accumulation from a scalar loss. Gradients of all nodes up
  /// to the loss are recomputed from scratch on every call, so successive
  /// backward() calls on one tape are independent of each other.
  void backward(const Value& loss) {
    if (loss.tape() != this) throw std::invalid_argument("backward: value from another tape");
    const int last = loss.id();
    if (node(last).value.numel() != 1)
      throw std::invalid_argument("backward: loss must be scalar");
    for (int i = 0; i <= last; ++i) {
      Node& n = node(i);
      if (!n.grad.empty() && n.grad.same_shape(n.value))
        n.grad.fill(0.0);
      else
        n.grad = Tensor(n.value.shape(), 0.0);
    }
    node(last).grad[0] = 1.0;
    for (int i = last; i >= 0; --i) {
      Node& n = node(i);
      if (n.backward) n.backward();
    }
  }

  std::size_t size() const { return nodes_.size(); }

  const Tensor& value_of(int id) const { return node(id).value; }
  Tensor& grad_of(int id) { return node(id).grad; }

  Value emplace(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor{}, nullptr});
    return Value(this, static_cast<int>(nodes_.size()) - 1);
  }

  void set_backward(int id, std::function<void()> fn) { node(id).backward = std::move(fn); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backward;
  };

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  // deque: node storage stays put while closures hold references via the tape.
  std::deque<Node> nodes_;
};

inline const Tensor& Value::val() const { return tape_->value_of(id_); }
inline Tensor& Value::grad() const { return tape_->grad_of(id_); }

namespace detail {

inline Tape* same_tape(const Value& a, const Value& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands from different tapes");
  return a.tape();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise primitives
// ---------------------------------------------------------------------------

inline Value add(const Value& a, const Value& b) {
  Tape* t = detail::same_tape(a, b);
  a.val().require_same_shape(b.val(), "add");
  Tensor out = a.val();
  out += b.val();
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id(), ib = b.id();
  t->set_backward(io, [t, io, ia, ib]() {
    const Tensor& g = t->grad_of(io);
    t->grad_of(ia) += g;
    t->grad_of(ib) += g;
  });
  return o;
}

inline Value sub(const Value& a, const Value& b) {
  Tape* t = detail::same_tape(a, b);
  a.val().require_same_shape(b.val(), "sub");
  Tensor out = a.val();
  const Tensor& bv = b.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= bv[i];
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id(), ib = b.id();
  t->set_backward(io, [t, io, ia, ib]() {
    const Tensor& g = t->grad_of(io);
    t->grad_of(ia) += g;
    Tensor& gb = t->grad_of(ib);
    for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
  });
  return o;
}

inline Value mul(const Value& a, const Value& b) {
  Tape* t = detail::same_tape(a, b);
  a.val().require_same_shape(b.val(), "mul");
  Tensor out = a.val();
  const Tensor& bv = b.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id(), ib = b.id();
  t->set_backward(io, [t, io, ia, ib]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& av = t->value_of(ia);
    const Tensor& bv2 = t->value_of(ib);
    Tensor& ga = t->grad_of(ia);
    Tensor& gb = t->grad_of(ib);
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      ga[i] += g[i] * bv2[i];
      gb[i] += g[i] * av[i];
    }
  });
  return o;
}

inline Value scale(const Value& a, double s) {
  Tape* t = a.tape();
  Tensor out = a.val();
  out *= s;
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia, s]() {
    const Tensor& g = t->grad_of(io);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += s * g[i];
  });
  return o;
}

inline Value add_scalar(const Value& a, double s) {
  Tape* t = a.tape();
  Tensor out = a.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += s;
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia]() { t->grad_of(ia) += t->grad_of(io); });
  return o;
}

inline Value neg(const Value& a) { return scale(a, -1.0); }

inline Value sigmoid(const Value& a) {
  Tape* t = a.tape();
  Tensor out = a.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& y = t->value_of(io);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
  return o;
}

inline Value tanh_act(const Value& a) {
  Tape* t = a.tape();
  Tensor out = a.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& y = t->value_of(io);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
  return o;
}

/// Leaky ReLU; slope 0 gives plain ReLU. Derivative at 0 is taken as 1.
inline Value leaky_relu(const Value& a, double slope) {
  Tape* t = a.tape();
  Tensor out = a.val();
  for (std::int64_t i = 0; i < out.numel(); ++i)
    if (out[i] < 0.0) out[i] *= slope;
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia, slope]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& x = t->value_of(ia);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * (x[i] >= 0.0 ? 1.0 : slope);
  });
  return o;
}

inline Value relu(const Value& a) { return leaky_relu(a, 0.0); }

/// Elementwise a^p for constant p. Non-integer p requires positive inputs;
/// callers guard with an epsilon.
inline Value pow_scalar(const Value& a, double p) {
  Tape* t = a.tape();
  Tensor out = a.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::pow(out[i], p);
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia, p]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& x = t->value_of(ia);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * p * std::pow(x[i], p - 1.0);
  });
  return o;
}

inline Value log_e(const Value& a) {
  Tape* t = a.tape();
  Tensor out = a.val();
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i]);
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& x = t->value_of(ia);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] / x[i];
  });
  return o;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Value sum(const Value& a) {
  Tape* t = a.tape();
  double s = 0.0;
  const Tensor& av = a.val();
  for (std::int64_t i = 0; i < av.numel(); ++i) s += av[i];
  Value o = t->emplace(Tensor::Scalar(s));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia]() {
    const double g = t->grad_of(io)[0];
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
  return o;
}

inline Value mean(const Value& a) {
  Tape* t = a.tape();
  const Tensor& av = a.val();
  const double inv = 1.0 / static_cast<double>(av.numel());
  double s = 0.0;
  for (std::int64_t i = 0; i < av.numel(); ++i) s += av[i];
  Value o = t->emplace(Tensor::Scalar(s * inv));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia, inv]() {
    const double g = t->grad_of(io)[0] * inv;
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
  return o;
}

/// Dot product over flattened tensors of equal element count.
inline Value dot(const Value& a, const Value& b) {
  Tape* t = detail::same_tape(a, b);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.numel() != bv.numel()) throw std::invalid_argument("dot: element count mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < av.numel(); ++i) s += av[i] * bv[i];
  Value o = t->emplace(Tensor::Scalar(s));
  const int io = o.id(), ia = a.id(), ib = b.id();
  t->set_backward(io, [t, io, ia, ib]() {
    const double g = t->grad_of(io)[0];
    const Tensor& av2 = t->value_of(ia);
    const Tensor& bv2 = t->value_of(ib);
    Tensor& ga = t->grad_of(ia);
    Tensor& gb = t->grad_of(ib);
    for (std::int64_t i = 0; i < av2.numel(); ++i) {
      ga[i] += g * bv2[i];
      gb[i] += g * av2[i];
    }
  });
  return o;
}

// ---------------------------------------------------------------------------
// Linear algebra and shape ops
// ---------------------------------------------------------------------------

inline Value matmul(const Value& a, const Value& b) {
  Tape* t = detail::same_tape(a, b);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " + av.shape_str() + " x " +
                                bv.shape_str());
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n}, 0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av.at(i, p);
      for (int j = 0; j < n; ++j) out.at(i, j) += aip * bv.at(p, j);
    }
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id(), ib = b.id();
  t->set_backward(io, [t, io, ia, ib, m, k, n]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& av2 = t->value_of(ia);
    const Tensor& bv2 = t->value_of(ib);
    Tensor& ga = t->grad_of(ia);
    Tensor& gb = t->grad_of(ib);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double gij = g.at(i, j);
        for (int p = 0; p < k; ++p) {
          ga.at(i, p) += gij * bv2.at(p, j);
          gb.at(p, j) += gij * av2.at(i, p);
        }
      }
  });
  return o;
}

inline Value transpose2d(const Value& a) {
  Tape* t = a.tape();
  const Tensor& av = a.val();
  if (av.rank() != 2) throw std::invalid_argument("transpose2d: rank-2 tensor required");
  const int m = av.dim(0), n = av.dim(1);
  Tensor out({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia, m, n]() {
    const Tensor& g = t->grad_of(io);
    Tensor& ga = t->grad_of(ia);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
  });
  return o;
}

inline Value reshape(const Value& a, std::vector<int> shape) {
  Tape* t = a.tape();
  const Tensor& av = a.val();
  if (Tensor::ShapeNumel(shape) != av.numel())
    throw std::invalid_argument("reshape: element count mismatch");
  Tensor out(std::move(shape));
  for (std::int64_t i = 0; i < av.numel(); ++i) out[i] = av[i];
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia]() {
    const Tensor& g = t->grad_of(io);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
  });
  return o;
}

namespace detail {

// outer/inner extents around one axis, shared by slice and concat.
inline void axis_extents(const std::vector<int>& shape, int axis, std::int64_t* outer,
                         std::int64_t* inner) {
  *outer = 1;
  *inner = 1;
  for (int i = 0; i < axis; ++i) *outer *= shape[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i)
    *inner *= shape[i];
}

}  // namespace detail

inline Value slice(const Value& a, int axis, int start, int len) {
  Tape* t = a.tape();
  const Tensor& av = a.val();
  if (axis < 0 || axis >= av.rank()) throw std::invalid_argument("slice: bad axis");
  const int d = av.dim(axis);
  if (start < 0 || len <= 0 || start + len > d) throw std::invalid_argument("slice: bad range");
  std::vector<int> oshape = av.shape();
  oshape[static_cast<std::size_t>(axis)] = len;
  std::int64_t outer, inner;
  detail::axis_extents(av.shape(), axis, &outer, &inner);
  Tensor out(oshape);
  for (std::int64_t ou = 0; ou < outer; ++ou)
    for (int j = 0; j < len; ++j)
      for (std::int64_t in = 0; in < inner; ++in)
        out[(ou * len + j) * inner + in] = av[(ou * d + start + j) * inner + in];
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ia = a.id();
  t->set_backward(io, [t, io, ia, axis, start, len, d, outer, inner]() {
    (void)axis;
    const Tensor& g = t->grad_of(io);
    Tensor& ga = t->grad_of(ia);
    for (std::int64_t ou = 0; ou < outer; ++ou)
      for (int j = 0; j < len; ++j)
        for (std::int64_t in = 0; in < inner; ++in)
          ga[(ou * d + start + j) * inner + in] += g[(ou * len + j) * inner + in];
  });
  return o;
}

inline Value concat(const std::vector<Value>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Tape* t = parts[0].tape();
  const Tensor& first = parts[0].val();
  if (axis < 0 || axis >= first.rank()) throw std::invalid_argument("concat: bad axis");
  int total = 0;
  for (const Value& p : parts) {
    if (p.tape() != t) throw std::invalid_argument("concat: operands from different tapes");
    const Tensor& pv = p.val();
    if (pv.rank() != first.rank()) throw std::invalid_argument("concat: rank mismatch");
    for (int i = 0; i < first.rank(); ++i)
      if (i != axis && pv.dim(i) != first.dim(i))
        throw std::invalid_argument("concat: shape mismatch off axis");
    total += pv.dim(axis);
  }
  std::vector<int> oshape = first.shape();
  oshape[static_cast<std::size_t>(axis)] = total;
  std::int64_t outer, inner;
  detail::axis_extents(oshape, axis, &outer, &inner);
  Tensor out(oshape);
  std::vector<int> ids(parts.size());
  std::vector<int> lens(parts.size());
  int off = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const Tensor& pv = parts[pi].val();
    const int len = pv.dim(axis);
    ids[pi] = parts[pi].id();
    lens[pi] = len;
    for (std::int64_t ou = 0; ou < outer; ++ou)
      for (int j = 0; j < len; ++j)
        for (std::int64_t in = 0; in < inner; ++in)
          out[(ou * total + off + j) * inner + in] = pv[(ou * len + j) * inner + in];
    off += len;
  }
  Value o = t->emplace(std::move(out));
  const int io = o.id();
  t->set_backward(io, [t, io, ids, lens, total, outer, inner]() {
    const Tensor& g = t->grad_of(io);
    int off2 = 0;
    for (std::size_t pi = 0; pi < ids.size(); ++pi) {
      Tensor& gp = t->grad_of(ids[pi]);
      const int len = lens[pi];
      for (std::int64_t ou = 0; ou < outer; ++ou)
        for (int j = 0; j < len; ++j)
          for (std::int64_t in = 0; in < inner; ++in)
            gp[(ou * len + j) * inner + in] += g[(ou * total + off2 + j) * inner + in];
      off2 += len;
    }
  });
  return o;
}

// ---------------------------------------------------------------------------
// Convolutions. Activations are [C, H, W]; kernels are [Cout, Cin, KH, KW].
// In the enhancement model H is the frequency axis and W is the time axis.
// ---------------------------------------------------------------------------

struct Conv2dGeom {
  int stride_h = 1, stride_w = 1;
  int pad_h0 = 0, pad_h1 = 0;  // zeros prepended/appended along H
  int pad_w0 = 0, pad_w1 = 0;

  int out_h(int h, int kh) const { return (h + pad_h0 + pad_h1 - kh) / stride_h + 1; }
  int out_w(int w, int kw) const { return (w + pad_w0 + pad_w1 - kw) / stride_w + 1; }
};

inline Value conv2d(const Value& x, const Value& w, const Value& b, const Conv2dGeom& geom) {
  Tape* t = detail::same_tape(x, w);
  detail::same_tape(x, b);
  const Tensor& xv = x.val();
  const Tensor& wv = w.val();
  const Tensor& bv = b.val();
  if (xv.rank() != 3 || wv.rank() != 4) throw std::invalid_argument("conv2d: need x[C,H,W], w[Co,Ci,Kh,Kw]");
  const int ci = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
  const int co = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
  if (wv.dim(1) != ci) throw std::invalid_argument("conv2d: channel mismatch");
  if (bv.rank() != 1 || bv.dim(0) != co) throw std::invalid_argument("conv2d: bias shape");
  if (h + geom.pad_h0 + geom.pad_h1 < kh || wd + geom.pad_w0 + geom.pad_w1 < kw)
    throw std::invalid_argument("conv2d: input smaller than kernel");
  const int oh = geom.out_h(h, kh), ow = geom.out_w(wd, kw);
  Tensor out({co, oh, ow});
  for (int c = 0; c < co; ++c) {
    const double bias = bv.at(c);
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        double acc = bias;
        for (int c2 = 0; c2 < ci; ++c2)
          for (int u = 0; u < kh; ++u) {
            const int hi = i * geom.stride_h + u - geom.pad_h0;
            if (hi < 0 || hi >= h) continue;
            for (int v = 0; v < kw; ++v) {
              const int wi = j * geom.stride_w + v - geom.pad_w0;
              if (wi < 0 || wi >= wd) continue;
              acc += xv.at(c2, hi, wi) * wv.at(c, c2, u, v);
            }
          }
        out.at(c, i, j) = acc;
      }
  }
  Value o = t->emplace(std::move(out));
  const int io = o.id(), ix = x.id(), iw = w.id(), ib = b.id();
  t->set_backward(io, [t, io, ix, iw, ib, geom, ci, h, wd, co, kh, kw, oh, ow]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& xv2 = t->value_of(ix);
    const Tensor& wv2 = t->value_of(iw);
    Tensor& gx = t->grad_of(ix);
    Tensor& gw = t->grad_of(iw);
    Tensor& gb = t->grad_of(ib);
    for (int c = 0; c < co; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          const double gij = g.at(c, i, j);
          gb.at(c) += gij;
          for (int c2 = 0; c2 < ci; ++c2)
            for (int u = 0; u < kh; ++u) {
              const int hi = i * geom.stride_h + u - geom.pad_h0;
              if (hi < 0 || hi >= h) continue;
              for (int v = 0; v < kw; ++v) {
                const int wi = j * geom.stride_w + v - geom.pad_w0;
                if (wi < 0 || wi >= wd) continue;
                gx.at(c2, hi, wi) += gij * wv2.at(c, c2, u, v);
                gw.at(c, c2, u, v) += gij * xv2.at(c2, hi, wi);
              }
            }
        }
  });
  return o;
}

/// Transposed convolution, the exact adjoint of conv2d under the same
/// geometry: maps [Cout, OH, OW] back to [Cin, H, W]. The target H, W must be
/// consistent with the geometry (the shapes conv2d would produce from them).
inline Value conv2d_transposed(const Value& y, const Value& w, const Value& b,
                               const Conv2dGeom& geom, int out_h, int out_w) {
  Tape* t = detail::same_tape(y, w);
  detail::same_tape(y, b);
  const Tensor& yv = y.val();
  const Tensor& wv = w.val();
  const Tensor& bv = b.val();
  if (yv.rank() != 3 || wv.rank() != 4)
    throw std::invalid_argument("conv2d_transposed: need y[Co,OH,OW], w[Co,Ci,Kh,Kw]");
  const int co = yv.dim(0), oh = yv.dim(1), ow = yv.dim(2);
  const int ci = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
  if (wv.dim(0) != co) throw std::invalid_argument("conv2d_transposed: channel mismatch");
  if (bv.rank() != 1 || bv.dim(0) != ci) throw std::invalid_argument("conv2d_transposed: bias shape");
  if (geom.out_h(out_h, kh) != oh || geom.out_w(out_w, kw) != ow)
    throw std::invalid_argument("conv2d_transposed: target shape inconsistent with geometry");
  Tensor out({ci, out_h, out_w});
  for (int c2 = 0; c2 < ci; ++c2) {
    const double bias = bv.at(c2);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(out_h) * out_w; ++i)
      out[c2 * static_cast<std::int64_t>(out_h) * out_w + i] = bias;
  }
  for (int c = 0; c < co; ++c)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        const double yij = yv.at(c, i, j);
        for (int c2 = 0; c2 < ci; ++c2)
          for (int u = 0; u < kh; ++u) {
            const int hi = i * geom.stride_h + u - geom.pad_h0;
            if (hi < 0 || hi >= out_h) continue;
            for (int v = 0; v < kw; ++v) {
              const int wi = j * geom.stride_w + v - geom.pad_w0;
              if (wi < 0 || wi >= out_w) continue;
              out.at(c2, hi, wi) += yij * wv.at(c, c2, u, v);
            }
          }
      }
  Value o = t->emplace(std::move(out));
  const int io = o.id(), iy = y.id(), iw = w.id(), ib = b.id();
  t->set_backward(io, [t, io, iy, iw, ib, geom, co, oh, ow, ci, kh, kw, out_h, out_w]() {
    const Tensor& g = t->grad_of(io);
    const Tensor& yv2 = t->value_of(iy);
    const Tensor& wv2 = t->value_of(iw);
    Tensor& gy = t->grad_of(iy);
    Tensor& gw = t->grad_of(iw);
    Tensor& gb = t->grad_of(ib);
    for (int c2 = 0; c2 < ci; ++c2)
      for (int hi = 0; hi < out_h; ++hi)
        for (int wi = 0; wi < out_w; ++wi) gb.at(c2) += g.at(c2, hi, wi);
    for (int c = 0; c < co; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (int c2 = 0; c2 < ci; ++c2)
            for (int u = 0; u < kh; ++u) {
              const int hi = i * geom.stride_h + u - geom.pad_h0;
              if (hi < 0 || hi >= out_h) continue;
              for (int v = 0; v < kw; ++v) {
                const int wi = j * geom.stride_w + v - geom.pad_w0;
                if (wi < 0 || wi >= out_w) continue;
                acc += g.at(c2, hi, wi) * wv2.at(c, c2, u, v);
                gw.at(c, c2, u, v) += g.at(c2, hi, wi) * yv2.at(c, i, j);
              }
            }
          gy.at(c, i, j) += acc;
        }
  });
  return o;
}

/// Element-wise complex product of two [2, F, T] spectra (channel 0 real,
/// channel 1 imaginary). Composite of primitives, so the gradient is exact.
inline Value mul_complex(const Value& a, const Value& b) {
  const Tensor& av = a.val();
  if (av.rank() != 3 || av.dim(0) != 2)
    throw std::invalid_argument("mul_complex: need [2, F, T], got " + av.shape_str());
  av.require_same_shape(b.val(), "mul_complex");
  Value ar = slice(a, 0, 0, 1);
  Value ai = slice(a, 0, 1, 1);
  Value br = slice(b, 0, 0, 1);
  Value bi = slice(b, 0, 1, 1);
  Value re = sub(mul(ar, br), mul(ai, bi));
  Value im = add(mul(ar, bi), mul(ai, br));
  return concat({re, im}, 0);
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator*(double s, const Value& a) { return scale(a, s); }
inline Value operator*(const Value& a, double s) { return scale(a, s); }

}  // namespace mixse
