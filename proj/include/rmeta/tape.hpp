#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rmeta/tensor.hpp"

namespace rmeta::ad {

// Elementary operations recorded on the tape. Binary arithmetic broadcasts a
// 1x1 operand against any shape; everything else requires exact shapes.
enum class Op : std::uint8_t {
  kLeaf,
  kConst,
  kAdd,
  kSub,
  kMul,      // elementwise
  kMatMul,
  kSin,
  kTanh,
  kRelu,
  kSquare,
  kSum,      // all entries -> 1x1
  kMean,     // all entries -> 1x1
  kSoftmax,  // vector -> vector
  kSoftplus,
  kLog,
};

struct Node {
  Op op = Op::kLeaf;
  std::int32_t a = -1;
  std::int32_t b = -1;
  Tensor val;
  Tensor adj;
  std::string name;  // set for leaves; used in error messages
};

class Tape;

// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;
};

// Records elementary ops in topological order (inputs always precede the
// node that consumes them) and replays them in reverse to accumulate
// adjoints. Single-owner: one build + one backward pass at a time. reset()
// keeps node buffers alive so a tape can be reused across many small graphs
// without reallocating.
class Tape {
 public:
  Var leaf(const Tensor& v, std::string_view name = {});
  Var constant(const Tensor& v);
  Var constant_scalar(double v);

  std::size_t size() const { return active_; }
  const Tensor& value(Var x) const;
  const Tensor& adjoint(Var x) const;
  Tensor& mutable_value(Var x);

  // Node introspection (diagnostics and tests).
  Op node_op(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)].op; }
  std::int32_t node_input(std::int32_t id, int which = 0) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return which == 0 ? n.a : n.b;
  }
  const Tensor& node_value(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)].val; }

  void reset() { active_ = 0; }

  // Reverse pass from a scalar output. Verifies every recorded value is
  // finite first and reports the offending node id if not.
  void backward(Var output);

  Var emit_binary(Op op, Var x, Var y);
  Var emit_unary(Op op, Var x);

 private:
  Node& push(Op op, std::int32_t a, std::int32_t b);
  const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  void check_same_tape(Var x, Var y) const;
  [[noreturn]] void shape_fail(const char* what, const Node& x, const Node& y) const;

  std::vector<Node> nodes_;
  std::size_t active_ = 0;
};

// Elementwise arithmetic with 1x1 broadcast on either side.
Var operator+(Var x, Var y);
Var operator-(Var x, Var y);
Var operator*(Var x, Var y);

Var matmul(Var x, Var y);
Var sin(Var x);
Var tanh(Var x);
Var relu(Var x);
Var square(Var x);
Var sum(Var x);
Var mean(Var x);
Var softmax(Var x);
Var softplus(Var x);
Var log(Var x);

// Overflow-safe scalar softplus / its inverse / logistic; shared by the tape
// kernels and the reparametrization code.
double softplus_scalar(double x);
double softplus_inv_scalar(double y);
double sigmoid_scalar(double x);

}  // namespace rmeta::ad
