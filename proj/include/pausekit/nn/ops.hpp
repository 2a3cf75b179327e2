// pausekit/nn/ops.hpp

// Copyright 2026 Pausekit Authors

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

// Differentiable tensor ops. Matrix products go through Eigen; everything
// else is plain loops over row-major storage.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "pausekit/nn/graph.hpp"

namespace pausekit::nn {

inline constexpr double kProbEps = 1e-7;  // clamp for log terms in BCE

namespace detail {

inline bool rg(const Var& v) { return v.node->requires_grad; }

inline void require_rank2(const Var& v, const char* op) {
  if (v.value().rank() != 2)
    throw ConfigError(std::string(op) + ": expected rank-2 tensor, got " + v.value().shape_str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra and elementwise ops
// ---------------------------------------------------------------------------

inline Var matmul(Var a, Var b) {
  check_same_graph(a, b, "matmul");
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  if (a.value().cols() != b.value().rows())
    throw ConfigError("matmul: inner dimensions differ, " + a.value().shape_str() + " x " +
                      b.value().shape_str());
  Tensor out({a.value().rows(), b.value().cols()});
  out.mat().noalias() = a.value().mat() * b.value().mat();
  Node* an = a.node;
  Node* bn = b.node;
  return a.graph->make(std::move(out), detail::rg(a) || detail::rg(b), [an, bn](Node& self) {
    if (an->requires_grad)
      grad_buffer(an).mat().noalias() += self.grad.mat() * bn->value.mat().transpose();
    if (bn->requires_grad)
      grad_buffer(bn).mat().noalias() += an->value.mat().transpose() * self.grad.mat();
  });
}

inline Var add(Var a, Var b) {
  check_same_graph(a, b, "add");
  if (!a.value().same_shape(b.value()))
    throw ConfigError("add: shape mismatch " + a.value().shape_str() + " vs " +
                      b.value().shape_str());
  Tensor out(a.value().shape());
  out.arr() = a.value().arr() + b.value().arr();
  Node* an = a.node;
  Node* bn = b.node;
  return a.graph->make(std::move(out), detail::rg(a) || detail::rg(b), [an, bn](Node& self) {
    if (an->requires_grad) grad_buffer(an).arr() += self.grad.arr();
    if (bn->requires_grad) grad_buffer(bn).arr() += self.grad.arr();
  });
}

inline Var mul(Var a, Var b) {
  check_same_graph(a, b, "mul");
  if (!a.value().same_shape(b.value()))
    throw ConfigError("mul: shape mismatch " + a.value().shape_str() + " vs " +
                      b.value().shape_str());
  Tensor out(a.value().shape());
  out.arr() = a.value().arr() * b.value().arr();
  Node* an = a.node;
  Node* bn = b.node;
  return a.graph->make(std::move(out), detail::rg(a) || detail::rg(b), [an, bn](Node& self) {
    if (an->requires_grad) grad_buffer(an).arr() += self.grad.arr() * bn->value.arr();
    if (bn->requires_grad) grad_buffer(bn).arr() += self.grad.arr() * an->value.arr();
  });
}

inline Var scale(Var a, double s) {
  Tensor out(a.value().shape());
  out.arr() = a.value().arr() * s;
  Node* an = a.node;
  return a.graph->make(std::move(out), detail::rg(a), [an, s](Node& self) {
    if (an->requires_grad) grad_buffer(an).arr() += self.grad.arr() * s;
  });
}

// out[r, :] = a[r, :] + v
inline Var add_rowvec(Var a, Var v) {
  check_same_graph(a, v, "add_rowvec");
  detail::require_rank2(a, "add_rowvec");
  if (v.value().numel() != a.value().cols())
    throw ConfigError("add_rowvec: vector length does not match column count");
  Tensor out(a.value().shape());
  size_t rows = a.value().rows(), cols = a.value().cols();
  const double* av = a.value().data();
  const double* vv = v.value().data();
  double* ov = out.data();
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) ov[r * cols + c] = av[r * cols + c] + vv[c];
  Node* an = a.node;
  Node* vn = v.node;
  return a.graph->make(std::move(out), detail::rg(a) || detail::rg(v),
                       [an, vn, rows, cols](Node& self) {
                         const double* gv = self.grad.data();
                         if (an->requires_grad) grad_buffer(an).arr() += self.grad.arr();
                         if (vn->requires_grad) {
                           double* vg = grad_buffer(vn).data();
                           for (size_t r = 0; r < rows; ++r)
                             for (size_t c = 0; c < cols; ++c) vg[c] += gv[r * cols + c];
                         }
                       });
}

// out[r, :] = a[r, :] * v (elementwise broadcast over rows)
inline Var mul_rowvec(Var a, Var v) {
  check_same_graph(a, v, "mul_rowvec");
  detail::require_rank2(a, "mul_rowvec");
  if (v.value().numel() != a.value().cols())
    throw ConfigError("mul_rowvec: vector length does not match column count");
  Tensor out(a.value().shape());
  size_t rows = a.value().rows(), cols = a.value().cols();
  const double* av = a.value().data();
  const double* vv = v.value().data();
  double* ov = out.data();
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) ov[r * cols + c] = av[r * cols + c] * vv[c];
  Node* an = a.node;
  Node* vn = v.node;
  return a.graph->make(std::move(out), detail::rg(a) || detail::rg(v),
                       [an, vn, rows, cols](Node& self) {
                         const double* gv = self.grad.data();
                         const double* av2 = an->value.data();
                         const double* vv2 = vn->value.data();
                         if (an->requires_grad) {
                           double* ag = grad_buffer(an).data();
                           for (size_t r = 0; r < rows; ++r)
                             for (size_t c = 0; c < cols; ++c)
                               ag[r * cols + c] += gv[r * cols + c] * vv2[c];
                         }
                         if (vn->requires_grad) {
                           double* vg = grad_buffer(vn).data();
                           for (size_t r = 0; r < rows; ++r)
                             for (size_t c = 0; c < cols; ++c)
                               vg[c] += gv[r * cols + c] * av2[r * cols + c];
                         }
                       });
}

inline Var sigmoid(Var a) {
  Tensor out(a.value().shape());
  out.arr() = 1.0 / (1.0 + (-a.value().arr()).exp());
  Node* an = a.node;
  Node* on = nullptr;
  Var res = a.graph->make(std::move(out), detail::rg(a), nullptr);
  on = res.node;
  res.node->backward_fn = [an, on](Node& self) {
    if (an->requires_grad)
      grad_buffer(an).arr() += self.grad.arr() * on->value.arr() * (1.0 - on->value.arr());
  };
  return res;
}

inline Var tanh_act(Var a) {
  Tensor out(a.value().shape());
  out.arr() = a.value().arr().tanh();
  Node* an = a.node;
  Var res = a.graph->make(std::move(out), detail::rg(a), nullptr);
  Node* on = res.node;
  res.node->backward_fn = [an, on](Node& self) {
    if (an->requires_grad)
      grad_buffer(an).arr() += self.grad.arr() * (1.0 - on->value.arr().square());
  };
  return res;
}

inline Var relu(Var a) {
  Tensor out(a.value().shape());
  out.arr() = a.value().arr().max(0.0);
  Node* an = a.node;
  return a.graph->make(std::move(out), detail::rg(a), [an](Node& self) {
    if (!an->requires_grad) return;
    auto& g = grad_buffer(an);
    for (size_t i = 0; i < g.numel(); ++i)
      if (an->value[i] > 0.0) g[i] += self.grad[i];
  });
}

inline Var softmax_rows(Var a) {
  detail::require_rank2(a, "softmax_rows");
  size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out(a.value().shape());
  for (size_t r = 0; r < rows; ++r) {
    const double* x = a.value().data() + r * cols;
    double* y = out.data() + r * cols;
    double m = *std::max_element(x, x + cols);
    double s = 0.0;
    for (size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - m);
      s += y[c];
    }
    for (size_t c = 0; c < cols; ++c) y[c] /= s;
  }
  Node* an = a.node;
  Var res = a.graph->make(std::move(out), detail::rg(a), nullptr);
  Node* on = res.node;
  res.node->backward_fn = [an, on, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    double* ag = grad_buffer(an).data();
    for (size_t r = 0; r < rows; ++r) {
      const double* y = on->value.data() + r * cols;
      const double* gy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (size_t c = 0; c < cols; ++c) dot += gy[c] * y[c];
      for (size_t c = 0; c < cols; ++c) ag[r * cols + c] += y[c] * (gy[c] - dot);
    }
  };
  return res;
}

// Row-wise standardization (x - mean) / sqrt(var + eps); affine scale/shift
// are composed separately with mul_rowvec/add_rowvec.
inline Var layer_norm_rows(Var a, double eps = 1e-5) {
  detail::require_rank2(a, "layer_norm_rows");
  size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out(a.value().shape());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (size_t r = 0; r < rows; ++r) {
    const double* x = a.value().data() + r * cols;
    double mean = 0.0;
    for (size_t c = 0; c < cols; ++c) mean += x[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (size_t c = 0; c < cols; ++c) var += (x[c] - mean) * (x[c] - mean);
    var /= static_cast<double>(cols);
    double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    double* y = out.data() + r * cols;
    for (size_t c = 0; c < cols; ++c) y[c] = (x[c] - mean) * inv;
  }
  Node* an = a.node;
  Var res = a.graph->make(std::move(out), detail::rg(a), nullptr);
  Node* on = res.node;
  res.node->backward_fn = [an, on, rows, cols, inv_std](Node& self) {
    if (!an->requires_grad) return;
    double* ag = grad_buffer(an).data();
    for (size_t r = 0; r < rows; ++r) {
      const double* y = on->value.data() + r * cols;
      const double* gy = self.grad.data() + r * cols;
      double mean_g = 0.0, mean_gy = 0.0;
      for (size_t c = 0; c < cols; ++c) {
        mean_g += gy[c];
        mean_gy += gy[c] * y[c];
      }
      mean_g /= static_cast<double>(cols);
      mean_gy /= static_cast<double>(cols);
      double inv = (*inv_std)[r];
      for (size_t c = 0; c < cols; ++c)
        ag[r * cols + c] += inv * (gy[c] - mean_g - y[c] * mean_gy);
    }
  };
  return res;
}

inline Var transpose(Var a) {
  detail::require_rank2(a, "transpose");
  Tensor out({a.value().cols(), a.value().rows()});
  out.mat() = a.value().mat().transpose();
  Node* an = a.node;
  return a.graph->make(std::move(out), detail::rg(a), [an](Node& self) {
    if (an->requires_grad) grad_buffer(an).mat() += self.grad.mat().transpose();
  });
}

inline Var sum_all(Var a) {
  Tensor out = Tensor::scalar(a.value().arr().sum());
  Node* an = a.node;
  return a.graph->make(std::move(out), detail::rg(a), [an](Node& self) {
    if (an->requires_grad) grad_buffer(an).arr() += self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Slicing, stacking, gathering
// ---------------------------------------------------------------------------

inline Var slice_rows(Var a, size_t offset, size_t n) {
  detail::require_rank2(a, "slice_rows");
  if (offset + n > a.value().rows()) throw ConfigError("slice_rows: out of range");
  size_t cols = a.value().cols();
  Tensor out({n, cols});
  std::copy(a.value().data() + offset * cols, a.value().data() + (offset + n) * cols, out.data());
  Node* an = a.node;
  return a.graph->make(std::move(out), detail::rg(a), [an, offset, n, cols](Node& self) {
    if (!an->requires_grad) return;
    double* ag = grad_buffer(an).data() + offset * cols;
    const double* g = self.grad.data();
    for (size_t i = 0; i < n * cols; ++i) ag[i] += g[i];
  });
}

inline Var slice_cols(Var a, size_t offset, size_t n) {
  detail::require_rank2(a, "slice_cols");
  if (offset + n > a.value().cols()) throw ConfigError("slice_cols: out of range");
  size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out({rows, n});
  for (size_t r = 0; r < rows; ++r)
    std::copy(a.value().data() + r * cols + offset, a.value().data() + r * cols + offset + n,
              out.data() + r * n);
  Node* an = a.node;
  return a.graph->make(std::move(out), detail::rg(a), [an, offset, n, rows, cols](Node& self) {
    if (!an->requires_grad) return;
    double* ag = grad_buffer(an).data();
    const double* g = self.grad.data();
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < n; ++c) ag[r * cols + offset + c] += g[r * n + c];
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_rows: no parts");
  size_t cols = parts[0].value().cols();
  size_t rows = 0;
  bool needs_grad = false;
  for (const auto& p : parts) {
    check_same_graph(parts[0], p, "concat_rows");
    detail::require_rank2(p, "concat_rows");
    if (p.value().cols() != cols) throw ConfigError("concat_rows: column mismatch");
    rows += p.value().rows();
    needs_grad = needs_grad || detail::rg(p);
  }
  Tensor out({rows, cols});
  auto nodes = std::make_shared<std::vector<Node*>>();
  size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().numel(), out.data() + off * cols);
    off += p.value().rows();
    nodes->push_back(p.node);
  }
  return parts[0].graph->make(std::move(out), needs_grad, [nodes, cols](Node& self) {
    size_t off2 = 0;
    for (Node* p : *nodes) {
      size_t n = p->value.numel();
      if (p->requires_grad) {
        double* pg = grad_buffer(p).data();
        const double* g = self.grad.data() + off2 * cols;
        for (size_t i = 0; i < n; ++i) pg[i] += g[i];
      }
      off2 += p->value.rows();
    }
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat_cols: no parts");
  size_t rows = parts[0].value().rows();
  size_t cols = 0;
  bool needs_grad = false;
  for (const auto& p : parts) {
    check_same_graph(parts[0], p, "concat_cols");
    detail::require_rank2(p, "concat_cols");
    if (p.value().rows() != rows) throw ConfigError("concat_cols: row mismatch");
    cols += p.value().cols();
    needs_grad = needs_grad || detail::rg(p);
  }
  Tensor out({rows, cols});
  auto nodes = std::make_shared<std::vector<Node*>>();
  size_t off = 0;
  for (const auto& p : parts) {
    size_t pc = p.value().cols();
    for (size_t r = 0; r < rows; ++r)
      std::copy(p.value().data() + r * pc, p.value().data() + (r + 1) * pc,
                out.data() + r * cols + off);
    off += pc;
    nodes->push_back(p.node);
  }
  return parts[0].graph->make(std::move(out), needs_grad, [nodes, rows, cols](Node& self) {
    size_t off2 = 0;
    for (Node* p : *nodes) {
      size_t pc = p->value.cols();
      if (p->requires_grad) {
        double* pg = grad_buffer(p).data();
        const double* g = self.grad.data();
        for (size_t r = 0; r < rows; ++r)
          for (size_t c = 0; c < pc; ++c) pg[r * pc + c] += g[r * cols + off2 + c];
      }
      off2 += pc;
    }
  });
}

// out[i, :] = table[ids[i], :]; the backward pass scatter-adds into the rows
// of the table. Used for subword embeddings and per-row speaker vectors.
inline Var gather_rows(Var table, std::vector<int> ids) {
  detail::require_rank2(table, "gather_rows");
  size_t cols = table.value().cols();
  size_t v = table.value().rows();
  Tensor out({ids.size(), cols});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= v)
      throw ConfigError("gather_rows: id " + std::to_string(ids[i]) + " out of range");
    std::copy(table.value().data() + static_cast<size_t>(ids[i]) * cols,
              table.value().data() + (static_cast<size_t>(ids[i]) + 1) * cols,
              out.data() + i * cols);
  }
  Node* tn = table.node;
  auto ids_ptr = std::make_shared<std::vector<int>>(std::move(ids));
  return table.graph->make(std::move(out), detail::rg(table), [tn, ids_ptr, cols](Node& self) {
    if (!tn->requires_grad) return;
    double* tg = grad_buffer(tn).data();
    const double* g = self.grad.data();
    for (size_t i = 0; i < ids_ptr->size(); ++i) {
      double* row = tg + static_cast<size_t>((*ids_ptr)[i]) * cols;
      for (size_t c = 0; c < cols; ++c) row[c] += g[i * cols + c];
    }
  });
}

// ---------------------------------------------------------------------------
// Batched-sequence layout ops. Sentence-major stacking puts the rows of
// sentence s at [offset_s, offset_s + len_s); time-major padding puts
// (t, b) at row t*B + b with zero rows past each sentence's end.
// ---------------------------------------------------------------------------

inline std::vector<size_t> sentence_offsets(const std::vector<int>& lengths) {
  std::vector<size_t> offs(lengths.size() + 1, 0);
  for (size_t s = 0; s < lengths.size(); ++s) {
    if (lengths[s] <= 0) throw ConfigError("sequence batch: empty sentence");
    offs[s + 1] = offs[s] + static_cast<size_t>(lengths[s]);
  }
  return offs;
}

inline int max_length(const std::vector<int>& lengths) {
  int m = 0;
  for (int l : lengths) m = std::max(m, l);
  return m;
}

inline Var to_time_major(Var x, const std::vector<int>& lengths) {
  detail::require_rank2(x, "to_time_major");
  auto offs = sentence_offsets(lengths);
  size_t b = lengths.size();
  size_t tmax = static_cast<size_t>(max_length(lengths));
  size_t cols = x.value().cols();
  if (offs.back() != x.value().rows())
    throw ConfigError("to_time_major: lengths do not sum to row count");
  Tensor out({tmax * b, cols});
  for (size_t s = 0; s < b; ++s)
    for (size_t t = 0; t < static_cast<size_t>(lengths[s]); ++t)
      std::copy(x.value().data() + (offs[s] + t) * cols,
                x.value().data() + (offs[s] + t + 1) * cols, out.data() + (t * b + s) * cols);
  Node* xn = x.node;
  auto lens = std::make_shared<std::vector<int>>(lengths);
  auto offs_ptr = std::make_shared<std::vector<size_t>>(std::move(offs));
  return x.graph->make(std::move(out), detail::rg(x), [xn, lens, offs_ptr, b, cols](Node& self) {
    if (!xn->requires_grad) return;
    double* xg = grad_buffer(xn).data();
    const double* g = self.grad.data();
    for (size_t s = 0; s < b; ++s)
      for (size_t t = 0; t < static_cast<size_t>((*lens)[s]); ++t) {
        const double* src = g + (t * b + s) * cols;
        double* dst = xg + ((*offs_ptr)[s] + t) * cols;
        for (size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
  });
}

inline Var from_time_major(Var y, const std::vector<int>& lengths) {
  detail::require_rank2(y, "from_time_major");
  auto offs = sentence_offsets(lengths);
  size_t b = lengths.size();
  size_t tmax = static_cast<size_t>(max_length(lengths));
  size_t cols = y.value().cols();
  if (y.value().rows() != tmax * b)
    throw ConfigError("from_time_major: row count does not match lengths");
  Tensor out({offs.back(), cols});
  for (size_t s = 0; s < b; ++s)
    for (size_t t = 0; t < static_cast<size_t>(lengths[s]); ++t)
      std::copy(y.value().data() + (t * b + s) * cols, y.value().data() + (t * b + s + 1) * cols,
                out.data() + (offs[s] + t) * cols);
  Node* yn = y.node;
  auto lens = std::make_shared<std::vector<int>>(lengths);
  auto offs_ptr = std::make_shared<std::vector<size_t>>(std::move(offs));
  return y.graph->make(std::move(out), detail::rg(y), [yn, lens, offs_ptr, b, cols](Node& self) {
    if (!yn->requires_grad) return;
    double* yg = grad_buffer(yn).data();
    const double* g = self.grad.data();
    for (size_t s = 0; s < b; ++s)
      for (size_t t = 0; t < static_cast<size_t>((*lens)[s]); ++t) {
        const double* src = g + ((*offs_ptr)[s] + t) * cols;
        double* dst = yg + (t * b + s) * cols;
        for (size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
  });
}

// Per-row selection: out[r] = mask[r] != 0 ? a[r] : b[r]. Used to freeze
// recurrent state across padded steps.
inline Var row_select(const std::vector<double>& mask, Var a, Var b) {
  check_same_graph(a, b, "row_select");
  detail::require_rank2(a, "row_select");
  if (!a.value().same_shape(b.value())) throw ConfigError("row_select: shape mismatch");
  if (mask.size() != a.value().rows()) throw ConfigError("row_select: mask length mismatch");
  size_t rows = a.value().rows(), cols = a.value().cols();
  Tensor out(a.value().shape());
  for (size_t r = 0; r < rows; ++r) {
    const double* src = (mask[r] != 0.0 ? a.value().data() : b.value().data()) + r * cols;
    std::copy(src, src + cols, out.data() + r * cols);
  }
  Node* an = a.node;
  Node* bn = b.node;
  auto m = std::make_shared<std::vector<double>>(mask);
  return a.graph->make(std::move(out), detail::rg(a) || detail::rg(b),
                       [an, bn, m, rows, cols](Node& self) {
                         const double* g = self.grad.data();
                         for (size_t r = 0; r < rows; ++r) {
                           Node* target = (*m)[r] != 0.0 ? an : bn;
                           if (!target->requires_grad) continue;
                           double* tg = grad_buffer(target).data() + r * cols;
                           for (size_t c = 0; c < cols; ++c) tg[c] += g[r * cols + c];
                         }
                       });
}

// Stacks the 2w+1 neighboring frames around every position; positions
// outside a sentence contribute zeros. Output dimension is (2w+1)*d.
inline Var splice_window(Var x, const std::vector<int>& lengths, int w) {
  detail::require_rank2(x, "splice_window");
  if (w < 0) throw ConfigError("splice_window: negative window");
  auto offs = sentence_offsets(lengths);
  if (offs.back() != x.value().rows())
    throw ConfigError("splice_window: lengths do not sum to row count");
  size_t d = x.value().cols();
  size_t span = static_cast<size_t>(2 * w + 1);
  Tensor out({x.value().rows(), span * d});
  for (size_t s = 0; s < lengths.size(); ++s) {
    long len = lengths[s];
    for (long t = 0; t < len; ++t)
      for (long j = -w; j <= w; ++j) {
        long src = t + j;
        if (src < 0 || src >= len) continue;
        const double* from = x.value().data() + (offs[s] + static_cast<size_t>(src)) * d;
        double* to = out.data() + (offs[s] + static_cast<size_t>(t)) * span * d +
                     static_cast<size_t>(j + w) * d;
        std::copy(from, from + d, to);
      }
  }
  Node* xn = x.node;
  auto lens = std::make_shared<std::vector<int>>(lengths);
  auto offs_ptr = std::make_shared<std::vector<size_t>>(std::move(offs));
  return x.graph->make(std::move(out), detail::rg(x), [xn, lens, offs_ptr, w, d, span](Node& self) {
    if (!xn->requires_grad) return;
    double* xg = grad_buffer(xn).data();
    const double* g = self.grad.data();
    for (size_t s = 0; s < lens->size(); ++s) {
      long len = (*lens)[s];
      size_t off = (*offs_ptr)[s];
      for (long t = 0; t < len; ++t)
        for (long j = -w; j <= w; ++j) {
          long src = t + j;
          if (src < 0 || src >= len) continue;
          const double* from = g + (off + static_cast<size_t>(t)) * span * d +
                               static_cast<size_t>(j + w) * d;
          double* to = xg + (off + static_cast<size_t>(src)) * d;
          for (size_t c = 0; c < d; ++c) to[c] += from[c];
        }
    }
  });
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

// Mean over unmasked positions of -[y log p + (1-y) log(1-p)], with p
// clamped to [kProbEps, 1-kProbEps].
inline Var bce_loss(Var probs, const Tensor& targets, const Tensor& mask) {
  if (targets.numel() != probs.value().numel() || mask.numel() != probs.value().numel())
    throw ConfigError("bce_loss: target/mask size mismatch");
  double count = 0.0;
  for (size_t i = 0; i < mask.numel(); ++i) {
    if (mask[i] == 0.0) continue;
    if (targets[i] != 0.0 && targets[i] != 1.0)
      throw ConfigError("bce_loss: targets must be 0 or 1");
    count += 1.0;
  }
  if (count == 0.0) throw DataError("bce_loss: all positions are masked");
  double loss = 0.0;
  for (size_t i = 0; i < mask.numel(); ++i) {
    if (mask[i] == 0.0) continue;
    double p = std::clamp(probs.value()[i], kProbEps, 1.0 - kProbEps);
    loss += targets[i] == 1.0 ? -std::log(p) : -std::log(1.0 - p);
  }
  loss /= count;
  Node* pn = probs.node;
  auto tgt = std::make_shared<Tensor>(targets);
  auto msk = std::make_shared<Tensor>(mask);
  return probs.graph->make(Tensor::scalar(loss), detail::rg(probs),
                           [pn, tgt, msk, count](Node& self) {
                             if (!pn->requires_grad) return;
                             double g = self.grad[0] / count;
                             double* pg = grad_buffer(pn).data();
                             for (size_t i = 0; i < msk->numel(); ++i) {
                               if ((*msk)[i] == 0.0) continue;
                               double p = pn->value[i];
                               if (p <= kProbEps || p >= 1.0 - kProbEps) continue;  // clamped flat
                               pg[i] += g * ((*tgt)[i] == 1.0 ? -1.0 / p : 1.0 / (1.0 - p));
                             }
                           });
}

// Weighted cross-entropy over logits: sum_i m_i w[y_i] * -log softmax(x_i)[y_i]
// normalized by sum_i m_i w[y_i].
inline Var wce_loss(Var logits, const std::vector<int>& targets,
                    const std::vector<double>& class_weights, const Tensor& mask) {
  detail::require_rank2(logits, "wce_loss");
  size_t n = logits.value().rows(), classes = logits.value().cols();
  if (class_weights.size() != classes)
    throw ConfigError("wce_loss: weight vector length " + std::to_string(class_weights.size()) +
                      " does not match class count " + std::to_string(classes));
  if (targets.size() != n || mask.numel() != n)
    throw ConfigError("wce_loss: target/mask size mismatch");

  auto softmax = std::make_shared<Tensor>(std::vector<size_t>{n, classes});
  double weight_sum = 0.0, loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double* x = logits.value().data() + i * classes;
    double* y = softmax->data() + i * classes;
    double m = *std::max_element(x, x + classes);
    double s = 0.0;
    for (size_t c = 0; c < classes; ++c) {
      y[c] = std::exp(x[c] - m);
      s += y[c];
    }
    for (size_t c = 0; c < classes; ++c) y[c] /= s;
    if (mask[i] == 0.0) continue;
    if (targets[i] < 0 || static_cast<size_t>(targets[i]) >= classes)
      throw ConfigError("wce_loss: target class out of range");
    double w = class_weights[static_cast<size_t>(targets[i])];
    weight_sum += w;
    loss += w * -(std::log(std::max(y[targets[i]], 1e-300)));
  }
  if (weight_sum == 0.0) throw DataError("wce_loss: all positions are masked");
  loss /= weight_sum;

  Node* ln = logits.node;
  auto tgt = std::make_shared<std::vector<int>>(targets);
  auto wts = std::make_shared<std::vector<double>>(class_weights);
  auto msk = std::make_shared<Tensor>(mask);
  return logits.graph->make(
      Tensor::scalar(loss), detail::rg(logits),
      [ln, tgt, wts, msk, softmax, weight_sum, n, classes](Node& self) {
        if (!ln->requires_grad) return;
        double g = self.grad[0] / weight_sum;
        double* lg = grad_buffer(ln).data();
        for (size_t i = 0; i < n; ++i) {
          if ((*msk)[i] == 0.0) continue;
          double w = (*wts)[static_cast<size_t>((*tgt)[i])];
          const double* y = softmax->data() + i * classes;
          for (size_t c = 0; c < classes; ++c) {
            double delta = c == static_cast<size_t>((*tgt)[i]) ? 1.0 : 0.0;
            lg[i * classes + c] += g * w * (y[c] - delta);
          }
        }
      });
}

}  // namespace pausekit::nn
