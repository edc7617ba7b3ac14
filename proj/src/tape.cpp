#include "rmeta/tape.hpp"

#include <cmath>
#include <string>

#include "rmeta/errors.hpp"

namespace rmeta::ad {

double softplus_scalar(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double softplus_inv_scalar(double y) {
  // inverse of ln(1+e^x): x = ln(e^y - 1) = y + ln(1 - e^-y)
  if (y > 30.0) return y;
  return y + std::log(-std::expm1(-y));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Node& Tape::push(Op op, std::int32_t a, std::int32_t b) {
  if (active_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[active_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.name.clear();
  return n;
}

Var Tape::leaf(const Tensor& v, std::string_view name) {
  Node& n = push(Op::kLeaf, -1, -1);
  n.val = v;
  n.name.assign(name);
  return {this, static_cast<std::int32_t>(active_ - 1)};
}

Var Tape::constant(const Tensor& v) {
  Node& n = push(Op::kConst, -1, -1);
  n.val = v;
  return {this, static_cast<std::int32_t>(active_ - 1)};
}

Var Tape::constant_scalar(double v) {
  Node& n = push(Op::kConst, -1, -1);
  n.val.assign_shape(1, 1);
  n.val.data[0] = v;
  return {this, static_cast<std::int32_t>(active_ - 1)};
}

const Tensor& Tape::value(Var x) const { return node(x.id).val; }
const Tensor& Tape::adjoint(Var x) const { return node(x.id).adj; }
Tensor& Tape::mutable_value(Var x) { return nodes_[static_cast<std::size_t>(x.id)].val; }

void Tape::check_same_tape(Var x, Var y) const {
  if (x.tape != y.tape) throw ShapeError("operands live on different tapes");
}

void Tape::shape_fail(const char* what, const Node& x, const Node& y) const {
  std::string msg = std::string(what) + ": shapes " + x.val.shape_str() + " and " + y.val.shape_str() + " are incompatible";
  if (!x.name.empty()) msg += " [lhs=" + x.name + "]";
  if (!y.name.empty()) msg += " [rhs=" + y.name + "]";
  throw ShapeError(msg);
}

namespace {

// y <- x elementwise through f
template <typename F>
void map_into(const Tensor& x, Tensor& y, F f) {
  y.assign_shape(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
}

}  // namespace

Var Tape::emit_binary(Op op, Var x, Var y) {
  check_same_tape(x, y);
  const Node& nx = node(x.id);
  const Node& ny = node(y.id);
  const Tensor& a = nx.val;
  const Tensor& b = ny.val;

  if (op == Op::kMatMul) {
    if (a.cols != b.rows) shape_fail("matmul", nx, ny);
    Node& n = push(op, x.id, y.id);
    matmul(node(n.a).val, node(n.b).val, n.val);
    return {this, static_cast<std::int32_t>(active_ - 1)};
  }

  // elementwise add/sub/mul with scalar broadcast
  const bool a_scalar = a.is_scalar();
  const bool b_scalar = b.is_scalar();
  if (!a.same_shape(b) && !a_scalar && !b_scalar) {
    shape_fail(op == Op::kAdd ? "add" : op == Op::kSub ? "sub" : "mul", nx, ny);
  }
  Node& n = push(op, x.id, y.id);
  const Tensor& av = node(n.a).val;
  const Tensor& bv = node(n.b).val;
  const Tensor& big = a_scalar && !b_scalar ? bv : av;
  n.val.assign_shape(big.rows, big.cols);
  const std::size_t sz = n.val.size();
  auto lhs = [&](std::size_t i) { return a_scalar ? av.data[0] : av.data[i]; };
  auto rhs = [&](std::size_t i) { return b_scalar ? bv.data[0] : bv.data[i]; };
  switch (op) {
    case Op::kAdd:
      for (std::size_t i = 0; i < sz; ++i) n.val.data[i] = lhs(i) + rhs(i);
      break;
    case Op::kSub:
      for (std::size_t i = 0; i < sz; ++i) n.val.data[i] = lhs(i) - rhs(i);
      break;
    case Op::kMul:
      for (std::size_t i = 0; i < sz; ++i) n.val.data[i] = lhs(i) * rhs(i);
      break;
    default:
      throw ShapeError("emit_binary: not a binary op");
  }
  return {this, static_cast<std::int32_t>(active_ - 1)};
}

Var Tape::emit_unary(Op op, Var x) {
  const Tensor& a = node(x.id).val;
  if (op == Op::kSoftmax && !a.is_vector()) {
    throw ShapeError("softmax expects a vector, got " + a.shape_str());
  }
  if ((op == Op::kMean || op == Op::kSum) && a.size() == 0) {
    throw ShapeError("reduction over an empty tensor");
  }
  Node& n = push(op, x.id, -1);
  const Tensor& av = node(n.a).val;
  switch (op) {
    case Op::kSin:
      map_into(av, n.val, [](double v) { return std::sin(v); });
      break;
    case Op::kTanh:
      map_into(av, n.val, [](double v) { return std::tanh(v); });
      break;
    case Op::kRelu:
      map_into(av, n.val, [](double v) { return v > 0.0 ? v : 0.0; });
      break;
    case Op::kSquare:
      map_into(av, n.val, [](double v) { return v * v; });
      break;
    case Op::kSoftplus:
      map_into(av, n.val, softplus_scalar);
      break;
    case Op::kLog:
      map_into(av, n.val, [](double v) { return std::log(v); });
      break;
    case Op::kSum: {
      double acc = 0.0;
      for (double v : av.data) acc += v;
      n.val.assign_shape(1, 1);
      n.val.data[0] = acc;
      break;
    }
    case Op::kMean: {
      double acc = 0.0;
      for (double v : av.data) acc += v;
      n.val.assign_shape(1, 1);
      n.val.data[0] = acc / static_cast<double>(av.size());
      break;
    }
    case Op::kSoftmax: {
      n.val.assign_shape(av.rows, av.cols);
      double mx = av.data[0];
      for (double v : av.data) mx = std::max(mx, v);
      double z = 0.0;
      for (std::size_t i = 0; i < av.size(); ++i) {
        n.val.data[i] = std::exp(av.data[i] - mx);
        z += n.val.data[i];
      }
      for (double& v : n.val.data) v /= z;
      break;
    }
    default:
      throw ShapeError("emit_unary: not a unary op");
  }
  return {this, static_cast<std::int32_t>(active_ - 1)};
}

void Tape::backward(Var output) {
  if (output.tape != this || output.id < 0 || static_cast<std::size_t>(output.id) >= active_) {
    throw ShapeError("backward: output is not a node of this tape");
  }
  if (!node(output.id).val.is_scalar()) {
    throw ShapeError("backward: output must be scalar, got " + node(output.id).val.shape_str());
  }
  for (std::size_t i = 0; i <= static_cast<std::size_t>(output.id); ++i) {
    for (double v : nodes_[i].val.data) {
      if (!std::isfinite(v)) {
        throw NonFiniteError("non-finite value at tape node " + std::to_string(i), static_cast<long long>(i));
      }
    }
  }

  for (std::size_t i = 0; i <= static_cast<std::size_t>(output.id); ++i) {
    Node& n = nodes_[i];
    n.adj.assign_shape(n.val.rows, n.val.cols);
    n.adj.fill(0.0);
  }
  nodes_[static_cast<std::size_t>(output.id)].adj.data[0] = 1.0;

  for (std::int32_t id = output.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kAdd:
      case Op::kSub: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        const double sb = n.op == Op::kSub ? -1.0 : 1.0;
        if (na.val.is_scalar() && !n.val.is_scalar()) {
          double acc = 0.0;
          for (double v : n.adj.data) acc += v;
          na.adj.data[0] += acc;
        } else {
          for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += n.adj.data[i];
        }
        if (nb.val.is_scalar() && !n.val.is_scalar()) {
          double acc = 0.0;
          for (double v : n.adj.data) acc += v;
          nb.adj.data[0] += sb * acc;
        } else {
          for (std::size_t i = 0; i < n.adj.size(); ++i) nb.adj.data[i] += sb * n.adj.data[i];
        }
        break;
      }
      case Op::kMul: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        const bool as = na.val.is_scalar() && !n.val.is_scalar();
        const bool bs = nb.val.is_scalar() && !n.val.is_scalar();
        for (std::size_t i = 0; i < n.adj.size(); ++i) {
          const double g = n.adj.data[i];
          const double av = as ? na.val.data[0] : na.val.data[i];
          const double bv = bs ? nb.val.data[0] : nb.val.data[i];
          if (as) na.adj.data[0] += g * bv; else na.adj.data[i] += g * bv;
          if (bs) nb.adj.data[0] += g * av; else nb.adj.data[i] += g * av;
        }
        break;
      }
      case Op::kMatMul: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        Node& nb = nodes_[static_cast<std::size_t>(n.b)];
        matmul_acc_abt(n.adj, nb.val, na.adj);  // dA += dC * B^T
        matmul_acc_atb(na.val, n.adj, nb.adj);  // dB += A^T * dC
        break;
      }
      case Op::kSin: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += n.adj.data[i] * std::cos(na.val.data[i]);
        break;
      }
      case Op::kTanh: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += n.adj.data[i] * (1.0 - n.val.data[i] * n.val.data[i]);
        break;
      }
      case Op::kRelu: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < n.adj.size(); ++i) {
          if (na.val.data[i] > 0.0) na.adj.data[i] += n.adj.data[i];
        }
        break;
      }
      case Op::kSquare: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += 2.0 * na.val.data[i] * n.adj.data[i];
        break;
      }
      case Op::kSum: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const double g = n.adj.data[0];
        for (double& v : na.adj.data) v += g;
        break;
      }
      case Op::kMean: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        const double g = n.adj.data[0] / static_cast<double>(na.val.size());
        for (double& v : na.adj.data) v += g;
        break;
      }
      case Op::kSoftmax: {
        // dX += y .* (dY - <dY, y>)
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        double dot = 0.0;
        for (std::size_t i = 0; i < n.adj.size(); ++i) dot += n.adj.data[i] * n.val.data[i];
        for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += n.val.data[i] * (n.adj.data[i] - dot);
        break;
      }
      case Op::kSoftplus: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += n.adj.data[i] * sigmoid_scalar(na.val.data[i]);
        break;
      }
      case Op::kLog: {
        Node& na = nodes_[static_cast<std::size_t>(n.a)];
        for (std::size_t i = 0; i < n.adj.size(); ++i) na.adj.data[i] += n.adj.data[i] / na.val.data[i];
        break;
      }
    }
  }
}

Var operator+(Var x, Var y) { return x.tape->emit_binary(Op::kAdd, x, y); }
Var operator-(Var x, Var y) { return x.tape->emit_binary(Op::kSub, x, y); }
Var operator*(Var x, Var y) { return x.tape->emit_binary(Op::kMul, x, y); }
Var matmul(Var x, Var y) { return x.tape->emit_binary(Op::kMatMul, x, y); }
Var sin(Var x) { return x.tape->emit_unary(Op::kSin, x); }
Var tanh(Var x) { return x.tape->emit_unary(Op::kTanh, x); }
Var relu(Var x) { return x.tape->emit_unary(Op::kRelu, x); }
Var square(Var x) { return x.tape->emit_unary(Op::kSquare, x); }
Var sum(Var x) { return x.tape->emit_unary(Op::kSum, x); }
Var mean(Var x) { return x.tape->emit_unary(Op::kMean, x); }
Var softmax(Var x) { return x.tape->emit_unary(Op::kSoftmax, x); }
Var softplus(Var x) { return x.tape->emit_unary(Op::kSoftplus, x); }
Var log(Var x) { return x.tape->emit_unary(Op::kLog, x); }

}  // namespace rmeta::ad
