#pragma once

// Reverse-mode differentiation over Tensor4. Ops append closures to a Tape
// recorded per forward pass; Tape::backward walks it in reverse. Passing a
// null tape runs the pure forward (inference) path.

#include <functional>
#include <vector>

#include "hbpn/tensor.hpp"

namespace hbpn::ad {

class Tape {
 public:
  void record(std::vector<TensorPtr> inputs, TensorPtr output,
              std::function<void()> backward);
  // Seeds d(loss)=1 and propagates. loss must be a (1,1,1,1) scalar produced
  // by ops recorded on this tape. Parameter gradients accumulate across
  // calls; intermediate gradients are reset per call.
  void backward(const TensorPtr& loss);
  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    std::function<void()> bw;
  };
  std::vector<Node> nodes_;
};

TensorPtr conv2d(Tape* tape, const TensorPtr& x, const TensorPtr& weight,
                 const TensorPtr& bias, const ConvSpec& spec);
TensorPtr conv_transpose2d(Tape* tape, const TensorPtr& x,
                           const TensorPtr& weight, const TensorPtr& bias,
                           const ConvSpec& spec);
TensorPtr prelu(Tape* tape, const TensorPtr& x, const TensorPtr& slopes);
TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b);
// Concatenate along axis 0 (batch) or 1 (channels).
TensorPtr concat(Tape* tape, const std::vector<TensorPtr>& parts, int axis);
TensorPtr softmax_over_axis(Tape* tape, const TensorPtr& x, int axis);
// Sum over axis 0, keeping it as extent 1.
TensorPtr sum_axis0(Tape* tape, const TensorPtr& x);
TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape4 target);
TensorPtr mse_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target);
TensorPtr l1_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target);

}  // namespace hbpn::ad
