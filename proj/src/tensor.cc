#include "milnet/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "milnet/error.h"
#include "milnet/kernels.h"

namespace milnet {

std::string shape_string(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

size_t product(const Shape &shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

void check_shape(const Shape &shape) {
  if (shape.empty() || shape.size() > 2) {
    throw ShapeError("tensors are rank 1 or 2, got " + shape_string(shape));
  }
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in " + shape_string(shape));
  }
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape(shape);
  auto n = std::make_shared<TensorNode>();
  n->value.assign(product(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (product(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

std::span<double> Tensor::grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tape::record(Shape shape, std::vector<double> value,
                    const std::vector<Tensor> &parents, BackwardFn fn) {
  Tensor out = Tensor::from(std::move(shape), std::move(value));
  Entry e;
  for (const Tensor &p : parents) {
    e.parent_ids.push_back(p.id());
    if (p.requires_grad()) out.node_->requires_grad = true;
  }
  out.node_->id = static_cast<int>(entries_.size());
  e.out = out.node_;
  if (out.node_->requires_grad) e.fn = std::move(fn);
  entries_.push_back(std::move(e));
  return out;
}

void Tape::backward(const Tensor &loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_string(loss.shape()));
  }
  if (loss.id() < 0 || loss.id() >= size() || entries_[loss.id()].out.get() != loss.node()) {
    throw Error("loss was not recorded on this tape");
  }
  for (Entry &e : entries_) {
    e.out->grad.assign(e.out->value.size(), 0.0);
  }
  entries_[loss.id()].out->grad[0] = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Entry &e = entries_[i];
    if (e.fn) e.fn(*e.out);
  }
}

namespace ad {
namespace {

void require_same(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

void require_rank2(const Tensor &a, const char *op) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

// Accumulate into p's gradient if it participates in differentiation.
template <typename F>
void into(Tensor p, F &&f) {
  if (p.requires_grad()) f(p.grad());
}

}  // namespace

Tensor matmul(Tape &t, const Tensor &a, const Tensor &b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  std::vector<double> out(static_cast<size_t>(m) * n);
  kernels::matmul(a.data(), b.data(), out, m, k, n);
  return t.record({m, n}, std::move(out), {a, b},
                  [a, b, m, k, n](const TensorNode &o) mutable {
                    into(a, [&](std::span<double> ga) {
                      kernels::matmul_nt_acc(o.grad, b.data(), ga, m, n, k);
                    });
                    into(b, [&](std::span<double> gb) {
                      kernels::matmul_tn_acc(a.data(), o.grad, gb, k, m, n);
                    });
                  });
}

Tensor add(Tape &t, const Tensor &a, const Tensor &b) {
  require_same(a, b, "add");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.at(i) + b.at(i);
  return t.record(a.shape(), std::move(out), {a, b}, [a, b](const TensorNode &o) mutable {
    into(a, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
    into(b, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
  });
}

Tensor sub(Tape &t, const Tensor &a, const Tensor &b) {
  require_same(a, b, "sub");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.at(i) - b.at(i);
  return t.record(a.shape(), std::move(out), {a, b}, [a, b](const TensorNode &o) mutable {
    into(a, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
    into(b, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    });
  });
}

Tensor mul(Tape &t, const Tensor &a, const Tensor &b) {
  require_same(a, b, "mul");
  std::vector<double> out(a.size());
  for (int i = 0; i < a.size(); ++i) out[i] = a.at(i) * b.at(i);
  return t.record(a.shape(), std::move(out), {a, b}, [a, b](const TensorNode &o) mutable {
    into(a, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * b.at(i);
    });
    into(b, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * a.at(i);
    });
  });
}

Tensor scale(Tape &t, const Tensor &x, double c) {
  std::vector<double> out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = c * x.at(i);
  return t.record(x.shape(), std::move(out), {x}, [x, c](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += c * o.grad[i];
    });
  });
}

Tensor add_bias(Tape &t, const Tensor &x, const Tensor &bias) {
  const int m = x.rows(), n = x.cols();
  if (bias.size() != n) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " for input " +
                     shape_string(x.shape()));
  }
  std::vector<double> out(x.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out[i * n + j] = x.at(i * n + j) + bias.at(j);
  }
  return t.record(x.shape(), std::move(out), {x, bias},
                  [x, bias, m, n](const TensorNode &o) mutable {
                    into(x, [&](std::span<double> g) {
                      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                    });
                    into(bias, [&](std::span<double> g) {
                      for (int i = 0; i < m; ++i) {
                        for (int j = 0; j < n; ++j) g[j] += o.grad[i * n + j];
                      }
                    });
                  });
}

Tensor relu(Tape &t, const Tensor &x) {
  std::vector<double> out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = x.at(i) > 0.0 ? x.at(i) : 0.0;
  return t.record(x.shape(), std::move(out), {x}, [x](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) {
        if (x.at(i) > 0.0) g[i] += o.grad[i];
      }
    });
  });
}

Tensor tanh(Tape &t, const Tensor &x) {
  std::vector<double> out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = std::tanh(x.at(i));
  return t.record(x.shape(), std::move(out), {x}, [x](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) {
        const double y = o.value[i];
        g[i] += o.grad[i] * (1.0 - y * y);
      }
    });
  });
}

Tensor sigmoid(Tape &t, const Tensor &x) {
  std::vector<double> out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double v = x.at(i);
    // Branch keeps exp() from overflowing for large |v|.
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return t.record(x.shape(), std::move(out), {x}, [x](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) {
        const double y = o.value[i];
        g[i] += o.grad[i] * y * (1.0 - y);
      }
    });
  });
}

namespace {

// Shared by the softmax family. mask may be empty (all live).
Tensor softmax_impl(Tape &t, const Tensor &x, int rows, int cols,
                    std::span<const uint8_t> mask) {
  std::vector<double> out(x.size(), 0.0);
  for (int r = 0; r < rows; ++r) {
    const double *in = x.data().data() + static_cast<size_t>(r) * cols;
    double *y = out.data() + static_cast<size_t>(r) * cols;
    auto live = [&](int c) { return mask.empty() || mask[r * cols + c] != 0; };
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cols; ++c) {
      if (live(c)) mx = std::max(mx, in[c]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw DegenerateMaskError("softmax row " + std::to_string(r) + " has no live position");
    }
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      if (live(c)) {
        y[c] = std::exp(in[c] - mx);
        z += y[c];
      }
    }
    for (int c = 0; c < cols; ++c) y[c] /= z;
  }
  return t.record(x.shape(), std::move(out), {x}, [x, rows, cols](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (int r = 0; r < rows; ++r) {
        const size_t base = static_cast<size_t>(r) * cols;
        double dot = 0.0;
        for (int c = 0; c < cols; ++c) dot += o.grad[base + c] * o.value[base + c];
        for (int c = 0; c < cols; ++c) {
          g[base + c] += o.value[base + c] * (o.grad[base + c] - dot);
        }
      }
    });
  });
}

}  // namespace

Tensor softmax(Tape &t, const Tensor &x) {
  if (x.rank() == 2 && x.rows() != 1) {
    throw ShapeError("softmax: expected a vector, got " + shape_string(x.shape()));
  }
  return softmax_impl(t, x, 1, x.size(), {});
}

Tensor softmax_rows(Tape &t, const Tensor &x) {
  return softmax_impl(t, x, x.rows(), x.cols(), {});
}

Tensor masked_softmax_rows(Tape &t, const Tensor &x, std::span<const uint8_t> mask) {
  if (static_cast<int>(mask.size()) != x.size()) {
    throw ShapeError("masked_softmax_rows: mask size " + std::to_string(mask.size()) +
                     " for " + shape_string(x.shape()));
  }
  return softmax_impl(t, x, x.rows(), x.cols(), mask);
}

Tensor concat_cols(Tape &t, const std::vector<Tensor> &parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Tensor &p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  std::vector<double> out(static_cast<size_t>(rows) * cols);
  int off = 0;
  for (const Tensor &p : parts) {
    const int pc = p.cols();
    for (int r = 0; r < rows; ++r) {
      std::copy_n(p.data().begin() + r * pc, pc, out.begin() + r * cols + off);
    }
    off += pc;
  }
  Shape shape = parts[0].rank() == 1 ? Shape{cols} : Shape{rows, cols};
  return t.record(shape, std::move(out), parts,
                  [parts, rows, cols](const TensorNode &o) mutable {
                    int off = 0;
                    for (const Tensor &p : parts) {
                      const int pc = p.cols();
                      into(p, [&](std::span<double> g) {
                        for (int r = 0; r < rows; ++r) {
                          for (int c = 0; c < pc; ++c) g[r * pc + c] += o.grad[r * cols + off + c];
                        }
                      });
                      off += pc;
                    }
                  });
}

Tensor concat_rows(Tape &t, const std::vector<Tensor> &parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const int cols = parts[0].cols();
  int rows = 0;
  std::vector<double> out;
  for (const Tensor &p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return t.record({rows, cols}, std::move(out), parts, [parts](const TensorNode &o) mutable {
    size_t off = 0;
    for (const Tensor &p : parts) {
      into(p, [&](std::span<double> g) {
        for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[off + i];
      });
      off += p.size();
    }
  });
}

Tensor reshape(Tape &t, const Tensor &x, Shape shape) {
  if (product(shape) != static_cast<size_t>(x.size())) {
    throw ShapeError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return t.record(std::move(shape), std::move(out), {x}, [x](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
  });
}

Tensor segment_max_pool(Tape &t, const Tensor &x, int stride, std::vector<int> valid) {
  const int segments = static_cast<int>(valid.size());
  const int cols = x.cols();
  if (x.rows() != segments * stride) {
    throw ShapeError("segment_max_pool: " + shape_string(x.shape()) + " is not " +
                     std::to_string(segments) + " blocks of " + std::to_string(stride));
  }
  std::vector<double> out(static_cast<size_t>(segments) * cols);
  auto arg = std::make_shared<std::vector<int>>(out.size());
  kernels::segment_max(x.data(), stride, cols, valid, out, *arg);
  return t.record({segments, cols}, std::move(out), {x},
                  [x, arg, stride, cols](const TensorNode &o) mutable {
                    into(x, [&](std::span<double> g) {
                      const int segments = static_cast<int>(arg->size()) / cols;
                      for (int s = 0; s < segments; ++s) {
                        for (int j = 0; j < cols; ++j) {
                          const int w = (*arg)[s * cols + j];
                          if (w >= 0) g[(s * stride + w) * cols + j] += o.grad[s * cols + j];
                        }
                      }
                    });
                  });
}

Tensor max_over_time(Tape &t, const Tensor &x) {
  Tensor m = x.rank() == 1 ? reshape(t, x, {x.size(), 1}) : x;
  Tensor pooled = segment_max_pool(t, m, m.rows(), {m.rows()});
  return reshape(t, pooled, {m.cols()});
}

Tensor dropout(Tape &t, const Tensor &x, double rate, bool train, Rng &rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ValidationError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!train || rate == 0.0) return x;
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  std::vector<double> out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    (*mask)[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    out[i] = x.at(i) * (*mask)[i];
  }
  return t.record(x.shape(), std::move(out), {x}, [x, mask](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (*mask)[i];
    });
  });
}

Tensor gather_rows(Tape &t, const Tensor &x, std::vector<int> rows) {
  const int cols = x.cols();
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw ShapeError("gather_rows: empty index list");
  std::vector<double> out(static_cast<size_t>(n) * cols);
  for (int i = 0; i < n; ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) throw ShapeError("gather_rows: row out of range");
    std::copy_n(x.data().begin() + static_cast<size_t>(rows[i]) * cols, cols,
                out.begin() + static_cast<size_t>(i) * cols);
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(rows));
  return t.record({n, cols}, std::move(out), {x}, [x, idx, cols](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < idx->size(); ++i) {
        double *dst = g.data() + static_cast<size_t>((*idx)[i]) * cols;
        const double *src = o.grad.data() + i * cols;
        for (int c = 0; c < cols; ++c) dst[c] += src[c];
      }
    });
  });
}

Tensor scatter_rows(Tape &t, const Tensor &x, std::vector<int> target, int total) {
  const int cols = x.cols();
  if (static_cast<int>(target.size()) != x.rows()) {
    throw ShapeError("scatter_rows: one target per input row required");
  }
  std::vector<double> out(static_cast<size_t>(total) * cols, 0.0);
  for (size_t i = 0; i < target.size(); ++i) {
    if (target[i] < 0 || target[i] >= total) throw ShapeError("scatter_rows: target out of range");
    std::copy_n(x.data().begin() + i * cols, cols,
                out.begin() + static_cast<size_t>(target[i]) * cols);
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(target));
  return t.record({total, cols}, std::move(out), {x}, [x, idx, cols](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < idx->size(); ++i) {
        const double *src = o.grad.data() + static_cast<size_t>((*idx)[i]) * cols;
        for (int c = 0; c < cols; ++c) g[i * cols + c] += src[c];
      }
    });
  });
}

Tensor embedding_lookup(Tape &t, const Tensor &table, std::vector<int> ids, int pad_id) {
  const int k = table.cols();
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw ShapeError("embedding_lookup: empty id list");
  std::vector<double> out(static_cast<size_t>(n) * k, 0.0);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw ShapeError("embedding_lookup: id out of range");
    if (ids[i] == pad_id) continue;
    std::copy_n(table.data().begin() + static_cast<size_t>(ids[i]) * k, k,
                out.begin() + static_cast<size_t>(i) * k);
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(ids));
  return t.record({n, k}, std::move(out), {table},
                  [table, idx, k, pad_id](const TensorNode &o) mutable {
                    into(table, [&](std::span<double> g) {
                      for (size_t i = 0; i < idx->size(); ++i) {
                        const int id = (*idx)[i];
                        if (id == pad_id) continue;
                        double *dst = g.data() + static_cast<size_t>(id) * k;
                        const double *src = o.grad.data() + i * k;
                        for (int c = 0; c < k; ++c) dst[c] += src[c];
                      }
                    });
                  });
}

Tensor unfold_windows(Tape &t, const Tensor &x, int seq_len, int width) {
  const int k = x.cols();
  if (seq_len < width || x.rows() % seq_len != 0) {
    throw ShapeError("unfold_windows: " + shape_string(x.shape()) + " with sequence length " +
                     std::to_string(seq_len) + " and width " + std::to_string(width));
  }
  const int seqs = x.rows() / seq_len;
  const int positions = seq_len - width + 1;
  const int out_cols = width * k;
  std::vector<double> out(static_cast<size_t>(seqs) * positions * out_cols);
  const double *in = x.data().data();
  for (int s = 0; s < seqs; ++s) {
    for (int p = 0; p < positions; ++p) {
      // Rows p..p+width-1 are contiguous in x, so one copy suffices.
      const double *src = in + (static_cast<size_t>(s) * seq_len + p) * k;
      std::copy_n(src, out_cols, out.begin() + (static_cast<size_t>(s) * positions + p) * out_cols);
    }
  }
  return t.record({seqs * positions, out_cols}, std::move(out), {x},
                  [x, seqs, seq_len, positions, out_cols, k](const TensorNode &o) mutable {
                    into(x, [&](std::span<double> g) {
                      for (int s = 0; s < seqs; ++s) {
                        for (int p = 0; p < positions; ++p) {
                          double *dst = g.data() + (static_cast<size_t>(s) * seq_len + p) * k;
                          const double *src =
                              o.grad.data() + (static_cast<size_t>(s) * positions + p) * out_cols;
                          for (int c = 0; c < out_cols; ++c) dst[c] += src[c];
                        }
                      }
                    });
                  });
}

Tensor bag_weighted_sum(Tape &t, const Tensor &weights, const Tensor &x) {
  const int bags = weights.rows(), slots = weights.cols(), d = x.cols();
  if (x.rows() != bags * slots) {
    throw ShapeError("bag_weighted_sum: weights " + shape_string(weights.shape()) +
                     " do not match instances " + shape_string(x.shape()));
  }
  std::vector<double> out(static_cast<size_t>(bags) * d, 0.0);
  for (int b = 0; b < bags; ++b) {
    double *o = out.data() + static_cast<size_t>(b) * d;
    for (int m = 0; m < slots; ++m) {
      const double a = weights.at(b * slots + m);
      const double *xr = x.data().data() + static_cast<size_t>(b * slots + m) * d;
      for (int j = 0; j < d; ++j) o[j] += a * xr[j];
    }
  }
  return t.record({bags, d}, std::move(out), {weights, x},
                  [weights, x, bags, slots, d](const TensorNode &o) mutable {
                    into(weights, [&](std::span<double> g) {
                      for (int b = 0; b < bags; ++b) {
                        for (int m = 0; m < slots; ++m) {
                          double s = 0.0;
                          for (int j = 0; j < d; ++j) {
                            s += o.grad[b * d + j] * x.at((b * slots + m) * d + j);
                          }
                          g[b * slots + m] += s;
                        }
                      }
                    });
                    into(x, [&](std::span<double> g) {
                      for (int b = 0; b < bags; ++b) {
                        for (int m = 0; m < slots; ++m) {
                          const double a = weights.at(b * slots + m);
                          for (int j = 0; j < d; ++j) {
                            g[(b * slots + m) * d + j] += a * o.grad[b * d + j];
                          }
                        }
                      }
                    });
                  });
}

Tensor nll(Tape &t, const Tensor &probs, std::vector<int> labels, double floor) {
  const int rows = probs.rows(), cols = probs.cols();
  if (static_cast<int>(labels.size()) != rows) {
    throw ShapeError("nll: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(rows) + " rows");
  }
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (labels[r] < 0 || labels[r] >= cols) {
      throw ValidationError("nll: label " + std::to_string(labels[r] + 1) + " outside [1, " +
                            std::to_string(cols) + "]");
    }
    loss -= std::log(std::max(probs.at(r * cols + labels[r]), floor));
  }
  auto idx = std::make_shared<std::vector<int>>(std::move(labels));
  return t.record({1}, {loss}, {probs}, [probs, idx, cols, floor](const TensorNode &o) mutable {
    into(probs, [&](std::span<double> g) {
      for (size_t r = 0; r < idx->size(); ++r) {
        const size_t i = r * cols + (*idx)[r];
        const double p = probs.at(static_cast<int>(i));
        if (p > floor) g[i] -= o.grad[0] / p;
      }
    });
  });
}

Tensor sum(Tape &t, const Tensor &x) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += x.at(i);
  return t.record({1}, {s}, {x}, [x](const TensorNode &o) mutable {
    into(x, [&](std::span<double> g) {
      for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0];
    });
  });
}

}  // namespace ad
}  // namespace milnet
