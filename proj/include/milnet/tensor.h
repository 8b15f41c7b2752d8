#ifndef MILNET_TENSOR_H_
#define MILNET_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "milnet/rng.h"

namespace milnet {

using Shape = std::vector<int>;

std::string shape_string(const Shape &shape);

// Storage behind a Tensor handle. Several handles may share one node.
struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  int id = -1;  // position on the recording tape; -1 for leaves
};

// Dense row-major float64 array. Rank 1 ([n]) or rank 2 ([rows, cols]).
// Copying a Tensor copies the handle, not the data.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v) { return from({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int rows() const { return rank() == 1 ? 1 : node_->shape[0]; }
  int cols() const { return node_->shape.back(); }
  int size() const { return static_cast<int>(node_->value.size()); }

  std::span<double> data() { return node_->value; }
  std::span<const double> data() const { return node_->value; }
  double at(int i) const { return node_->value[i]; }
  double at(int r, int c) const { return node_->value[r * cols() + c]; }
  double item() const { return node_->value.at(0); }

  // Gradient accumulator; allocated as zeros on first access.
  std::span<double> grad();
  std::span<const double> grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  int id() const { return node_->id; }
  TensorNode *node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}
  friend class Tape;

  std::shared_ptr<TensorNode> node_;
};

// Records operations in execution order for reverse-mode differentiation.
// Parents always precede their outputs, so a reverse sweep is a valid
// topological order. A tape belongs to one thread.
class Tape {
 public:
  // Called with the output node once its gradient is complete.
  using BackwardFn = std::function<void(const TensorNode &out)>;

  Tensor record(Shape shape, std::vector<double> value,
                const std::vector<Tensor> &parents, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and propagates to every leaf that requires a
  // gradient. Gradients of intermediate nodes are reset first; leaf
  // gradients accumulate across calls.
  void backward(const Tensor &loss);

  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<int> &parent_ids(int id) const {
    return entries_[id].parent_ids;
  }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::shared_ptr<TensorNode> out;
    std::vector<int> parent_ids;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
};

// Differentiable operations. Each records onto the given tape.
namespace ad {

Tensor matmul(Tape &t, const Tensor &a, const Tensor &b);
Tensor add(Tape &t, const Tensor &a, const Tensor &b);
Tensor sub(Tape &t, const Tensor &a, const Tensor &b);
Tensor mul(Tape &t, const Tensor &a, const Tensor &b);
Tensor scale(Tape &t, const Tensor &x, double c);
// x[m×n] + bias[n] broadcast over rows.
Tensor add_bias(Tape &t, const Tensor &x, const Tensor &bias);

Tensor relu(Tape &t, const Tensor &x);
Tensor tanh(Tape &t, const Tensor &x);
Tensor sigmoid(Tape &t, const Tensor &x);

// Softmax over all elements of a vector (or a single row).
Tensor softmax(Tape &t, const Tensor &x);
// Row-wise softmax of a matrix.
Tensor softmax_rows(Tape &t, const Tensor &x);
// Row-wise softmax with masked positions (mask == 0) forced to exactly zero.
// Throws DegenerateMaskError when a row has no live position.
Tensor masked_softmax_rows(Tape &t, const Tensor &x,
                           std::span<const uint8_t> mask);

Tensor concat_cols(Tape &t, const std::vector<Tensor> &parts);
Tensor concat_rows(Tape &t, const std::vector<Tensor> &parts);
Tensor reshape(Tape &t, const Tensor &x, Shape shape);

// Column-wise max over the rows of x[n×f] -> [f]. Gradient flows only to the
// first maximal row of each column.
Tensor max_over_time(Tape &t, const Tensor &x);
// Blocked max-over-time: x holds S consecutive blocks of `stride` rows; only
// the first valid[s] rows of block s compete. Result is [S×f].
Tensor segment_max_pool(Tape &t, const Tensor &x, int stride,
                        std::vector<int> valid);

// Inverted dropout. Identity when !train or rate == 0.
Tensor dropout(Tape &t, const Tensor &x, double rate, bool train, Rng &rng);

Tensor gather_rows(Tape &t, const Tensor &x, std::vector<int> rows);
// Row r of x lands in row target[r] of a zero [total×cols] matrix.
Tensor scatter_rows(Tape &t, const Tensor &x, std::vector<int> target,
                    int total);

// Rows of table for each id. Rows for pad_id are zero and receive no gradient.
Tensor embedding_lookup(Tape &t, const Tensor &table, std::vector<int> ids,
                        int pad_id);

// x holds S sequences of `seq_len` rows each. Emits, per sequence, every
// window of `width` consecutive rows flattened into one row:
// [(S·(seq_len−width+1)) × (width·cols)].
Tensor unfold_windows(Tape &t, const Tensor &x, int seq_len, int width);

// out[b] = Σ_m weights[b,m] · x[b·M+m] for weights [B×M], x [(B·M)×d].
Tensor bag_weighted_sum(Tape &t, const Tensor &weights, const Tensor &x);

// Σ_r −log(max(probs[r, labels[r]], floor)). Labels are 0-based.
Tensor nll(Tape &t, const Tensor &probs, std::vector<int> labels,
           double floor = 1e-12);

Tensor sum(Tape &t, const Tensor &x);

}  // namespace ad
}  // namespace milnet

#endif  // MILNET_TENSOR_H_
