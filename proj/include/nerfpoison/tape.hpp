#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nerfpoison/errors.hpp"

namespace nerfpoison {

enum class Op : uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Sqrt,
  Pow,
  Sin,
  Cos,
  Relu,
  Softplus,
  Sigmoid,
  Clamp,
  Sum,
  Gather,
  ScatterAdd,
  Select,
  Matmul,
};

inline double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

class Tape;

// Lightweight handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
  int size() const;
};

// Leaf adjoints produced by a numeric backward pass.
struct Adjoints {
  std::unordered_map<int, std::vector<double>> by_node;

  bool has(Var v) const { return by_node.count(v.id) != 0; }

  const std::vector<double>& of(Var v) const {
    static const std::vector<double> kEmpty;
    auto it = by_node.find(v.id);
    return it == by_node.end() ? kEmpty : it->second;
  }
};

class Tape {
 public:
  struct Marker {
    size_t start = 0;
    size_t depth = 0;
  };

  struct SegmentHandle {
    int seg = -1;
    bool empty() const { return seg < 0; }
  };

  // ---- construction of nodes -------------------------------------------

  Var leaf(std::vector<double> value, bool requires_grad = true) {
    if (value.empty()) throw std::invalid_argument("leaf: empty buffer");
    Node n;
    n.op = Op::Leaf;
    n.size = static_cast<int>(value.size());
    n.diff = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var leaf(std::span<const double> value, bool requires_grad = true) {
    return leaf(std::vector<double>(value.begin(), value.end()), requires_grad);
  }

  Var constant(std::vector<double> value) { return leaf(std::move(value), false); }
  Var constant(std::span<const double> value) { return leaf(value, false); }
  Var scalar(double v) { return constant(std::vector<double>{v}); }
  Var zeros(int n) { return constant(std::vector<double>(static_cast<size_t>(n), 0.0)); }

  // ---- elementwise and reduction ops ------------------------------------

  Var add(Var a, Var b) { return binary(Op::Add, a, b); }
  Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
  Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }
  Var div(Var a, Var b) { return binary(Op::Div, a, b); }
  Var pow(Var a, Var b) { return binary(Op::Pow, a, b); }
  Var neg(Var a) { return unary(Op::Neg, a); }
  Var exp(Var a) { return unary(Op::Exp, a); }
  Var log(Var a) { return unary(Op::Log, a); }
  Var sqrt(Var a) { return unary(Op::Sqrt, a); }
  Var sin(Var a) { return unary(Op::Sin, a); }
  Var cos(Var a) { return unary(Op::Cos, a); }
  Var relu(Var a) { return unary(Op::Relu, a); }
  Var softplus(Var a) { return unary(Op::Softplus, a); }
  Var sigmoid(Var a) { return unary(Op::Sigmoid, a); }

  Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
    Node n = make(Op::Clamp, {a});
    n.size = node(a).size;
    n.lo = lo;
    n.hi = hi;
    return push(std::move(n));
  }

  Var sum(Var a) {
    Node n = make(Op::Sum, {a});
    n.size = 1;
    return push(std::move(n));
  }

  Var gather(Var a, std::vector<int32_t> idx) {
    if (idx.empty()) throw std::invalid_argument("gather: empty index list");
    int asz = node(a).size;
    for (int32_t i : idx)
      if (i < 0 || i >= asz) throw std::invalid_argument("gather: index out of range");
    Node n = make(Op::Gather, {a});
    n.size = static_cast<int>(idx.size());
    n.idx = std::move(idx);
    return push(std::move(n));
  }

  Var scatter_add(Var a, std::vector<int32_t> idx, int out_size) {
    if (static_cast<int>(idx.size()) != node(a).size)
      throw std::invalid_argument("scatter_add: index count must match input size");
    for (int32_t i : idx)
      if (i < 0 || i >= out_size) throw std::invalid_argument("scatter_add: index out of range");
    Node n = make(Op::ScatterAdd, {a});
    n.size = out_size;
    n.idx = std::move(idx);
    return push(std::move(n));
  }

  // Where cond >= 0 take a, else b (ties take the first branch; this is the
  // convention the clamp gradient relies on).
  Var select(Var cond, Var a, Var b) {
    int n0 = node(cond).size, n1 = node(a).size, n2 = node(b).size;
    int out = std::max({n0, n1, n2});
    auto ok = [out](int s) { return s == out || s == 1; };
    if (!ok(n0) || !ok(n1) || !ok(n2))
      throw std::invalid_argument("select: shape mismatch");
    Node n = make(Op::Select, {cond, a, b});
    n.size = out;
    n.diff = node(a).diff || node(b).diff;  // no gradient through cond
    return push(std::move(n));
  }

  // C(m x n) = opA(A) * opB(B); a flag means the stored buffer holds the
  // transpose of the operand (A stored k x m when ta, B stored n x k when tb).
  Var matmul(Var a, bool ta, Var b, bool tb, int m, int k, int n) {
    if (m <= 0 || k <= 0 || n <= 0) throw std::invalid_argument("matmul: bad dims");
    if (node(a).size != m * k) throw std::invalid_argument("matmul: A size mismatch");
    if (node(b).size != k * n) throw std::invalid_argument("matmul: B size mismatch");
    Node nd = make(Op::Matmul, {a, b});
    nd.size = m * n;
    nd.m = m;
    nd.k = k;
    nd.n = n;
    nd.ta = ta;
    nd.tb = tb;
    return push(std::move(nd));
  }

  // Generic recording entry point for aux-free ops.
  Var record(Op kind, std::span<const Var> inputs) {
    switch (kind) {
      case Op::Add: return add(inputs[0], inputs[1]);
      case Op::Sub: return sub(inputs[0], inputs[1]);
      case Op::Mul: return mul(inputs[0], inputs[1]);
      case Op::Div: return div(inputs[0], inputs[1]);
      case Op::Pow: return pow(inputs[0], inputs[1]);
      case Op::Neg: return neg(inputs[0]);
      case Op::Exp: return exp(inputs[0]);
      case Op::Log: return log(inputs[0]);
      case Op::Sqrt: return sqrt(inputs[0]);
      case Op::Sin: return sin(inputs[0]);
      case Op::Cos: return cos(inputs[0]);
      case Op::Relu: return relu(inputs[0]);
      case Op::Softplus: return softplus(inputs[0]);
      case Op::Sigmoid: return sigmoid(inputs[0]);
      case Op::Sum: return sum(inputs[0]);
      case Op::Select: return select(inputs[0], inputs[1], inputs[2]);
      default:
        throw std::invalid_argument("record: unknown or aux-requiring op-kind");
    }
  }

  // ---- values ------------------------------------------------------------

  const std::vector<double>& value(Var v) {
    ensure_value(v.id);
    return node(v).value;
  }

  double scalar_value(Var v) {
    const auto& val = value(v);
    if (val.size() != 1) throw std::invalid_argument("scalar_value: not a scalar node");
    return val[0];
  }

  int size_of(Var v) const { return node(v).size; }
  size_t node_count() const { return nodes_.size(); }

  size_t bytes() const {
    size_t b = 0;
    for (const Node& n : nodes_) b += n.value.capacity() * sizeof(double) + n.idx.capacity() * 4;
    return b;
  }

  void truncate(size_t count) {
    if (count > nodes_.size()) throw std::invalid_argument("truncate: growing not allowed");
    while (!segments_.empty() && segments_.back().begin >= count) segments_.pop_back();
    while (!marker_stack_.empty() && marker_stack_.back() > count) marker_stack_.pop_back();
    nodes_.resize(count);
  }

  // ---- checkpointing -----------------------------------------------------

  Marker push_marker() {
    marker_stack_.push_back(nodes_.size());
    return Marker{nodes_.size(), marker_stack_.size() - 1};
  }

  // Discards intermediate values of the segment recorded since the marker.
  // They are recomputed transparently when backward (or value()) needs them.
  // Nodes listed in `keep` and the final node of the segment stay resident.
  SegmentHandle checkpoint_segment(Marker m, std::span<const Var> keep = {}) {
    if (marker_stack_.empty() || m.depth != marker_stack_.size() - 1 ||
        marker_stack_.back() != m.start)
      throw std::invalid_argument("checkpoint_segment: unbalanced markers");
    marker_stack_.pop_back();
    size_t begin = m.start, end = nodes_.size();
    if (begin == end) return SegmentHandle{};
    std::unordered_set<int> keep_ids;
    for (Var v : keep) keep_ids.insert(v.id);
    keep_ids.insert(static_cast<int>(end) - 1);
    int seg = static_cast<int>(segments_.size());
    segments_.push_back({begin, end});
    for (size_t i = begin; i < end; ++i) {
      Node& nd = nodes_[i];
      if (nd.op == Op::Leaf) continue;  // leaves/constants are not replayable
      if (keep_ids.count(static_cast<int>(i))) continue;
      nd.value.clear();
      nd.value.shrink_to_fit();
      nd.seg = seg;
    }
    return SegmentHandle{seg};
  }

  // ---- differentiation ---------------------------------------------------

  // Records the reverse sweep as ordinary tape nodes and returns the adjoint
  // of each requested node. Differentiating the result again (unrolled
  // meta-gradients) therefore needs no extra machinery.
  std::vector<Var> grad(Var out, std::span<const Var> wrt) {
    if (node(out).size != 1)
      throw std::invalid_argument("backward: output node must be scalar");

    // Active set: differentiable ancestors of out.
    std::vector<uint8_t> active(nodes_.size(), 0);
    {
      std::vector<int> stack{out.id};
      while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (active[id]) continue;
        if (!nodes_[id].diff) continue;
        active[id] = 1;
        const Node& nd = nodes_[id];
        for (int s = 0; s < nd.nin; ++s) {
          if (nd.op == Op::Select && s == 0) continue;
          int in = nd.in[s];
          if (!active[in] && nodes_[in].diff) stack.push_back(in);
        }
      }
    }
    if (!active[out.id]) {
      // Output does not depend on any differentiable leaf.
      std::vector<Var> res;
      for (Var w : wrt) res.push_back(zeros(node(w).size));
      return res;
    }

    // Consumer lists over the active set, in recorded order.
    std::unordered_map<int, std::vector<std::pair<int, int>>> consumers;
    size_t recorded = nodes_.size();
    for (size_t c = 0; c < recorded; ++c) {
      if (!active[c]) continue;
      const Node& nd = nodes_[c];
      for (int s = 0; s < nd.nin; ++s) {
        if (nd.op == Op::Select && s == 0) continue;
        int in = nd.in[s];
        if (active[in]) consumers[in].push_back({static_cast<int>(c), s});
      }
    }

    std::unordered_map<int, Var> adj;
    adj[out.id] = scalar(1.0);

    std::vector<int> order;
    for (size_t i = 0; i < recorded; ++i)
      if (active[i]) order.push_back(static_cast<int>(i));
    std::sort(order.rbegin(), order.rend());

    for (int id : order) {
      if (id == out.id) continue;
      Var acc{};
      for (auto [c, slot] : consumers[id]) {
        auto it = adj.find(c);
        if (it == adj.end()) continue;
        Var contrib = vjp(c, slot, it->second);
        acc = acc.valid() ? add(acc, contrib) : contrib;
      }
      if (acc.valid()) adj[id] = acc;
    }

    std::vector<Var> res;
    for (Var w : wrt) {
      auto it = adj.find(w.id);
      res.push_back(it == adj.end() ? zeros(node(w).size) : it->second);
    }
    return res;
  }

  Var grad_of(Var out, Var wrt) {
    std::array<Var, 1> w{wrt};
    return grad(out, w)[0];
  }

  // Numeric backward: adjoints of all differentiable leaves. The nodes the
  // reverse sweep appends are popped again before returning. A seed other
  // than 1 scales the seed-1 adjoints elementwise (exact linearity).
  Adjoints backward(Var out, double seed = 1.0) {
    size_t mark = nodes_.size();
    std::vector<Var> leaves;
    for (size_t i = 0; i < mark; ++i)
      if (nodes_[i].op == Op::Leaf && nodes_[i].diff)
        leaves.push_back(Var{this, static_cast<int>(i)});
    std::vector<Var> gs = grad(out, leaves);
    Adjoints res;
    for (size_t i = 0; i < leaves.size(); ++i) {
      std::vector<double> v = value(gs[i]);
      if (seed != 1.0)
        for (double& x : v) x *= seed;
      res.by_node[leaves[i].id] = std::move(v);
    }
    truncate(mark);
    return res;
  }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::array<int, 3> in{{-1, -1, -1}};
    int nin = 0;
    int size = 0;
    bool diff = false;
    int seg = -1;  // checkpoint segment owning this node's dropped value
    std::vector<double> value;
    std::vector<int32_t> idx;
    double lo = 0, hi = 0;          // clamp bounds
    int m = 0, k = 0, n = 0;        // matmul dims
    bool ta = false, tb = false;    // matmul transpose flags
  };

  struct Segment {
    size_t begin = 0, end = 0;
  };

  std::vector<Node> nodes_;
  std::vector<size_t> marker_stack_;
  std::vector<Segment> segments_;

  Node& node(Var v) { return nodes_.at(v.id); }
  const Node& node(Var v) const { return nodes_.at(v.id); }

  Node make(Op op, std::initializer_list<Var> inputs) {
    Node n;
    n.op = op;
    for (Var v : inputs) {
      if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("op input is not on this trace");
      n.in[n.nin++] = v.id;
      n.diff = n.diff || nodes_[v.id].diff;
    }
    return n;
  }

  Var push(Node&& n) {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    if (nodes_.back().value.empty()) compute_value(id);
    return Var{this, id};
  }

  Var binary(Op op, Var a, Var b) {
    int na = node(a).size, nb = node(b).size;
    if (na != nb && na != 1 && nb != 1)
      throw std::invalid_argument("elementwise op: shape mismatch");
    Node n = make(op, {a, b});
    n.size = std::max(na, nb);
    return push(std::move(n));
  }

  Var unary(Op op, Var a) {
    Node n = make(op, {a});
    n.size = node(a).size;
    return push(std::move(n));
  }

  // ---- forward evaluation -----------------------------------------------

  void ensure_value(int id) {
    if (!nodes_[id].value.empty()) return;
    // Iterative replay of dropped checkpoint segments.
    std::vector<int> stack{id};
    while (!stack.empty()) {
      int cur = stack.back();
      Node& nd = nodes_[cur];
      if (!nd.value.empty()) {
        stack.pop_back();
        continue;
      }
      bool ready = true;
      for (int s = 0; s < nd.nin; ++s) {
        if (nodes_[nd.in[s]].value.empty()) {
          stack.push_back(nd.in[s]);
          ready = false;
        }
      }
      if (ready) {
        compute_value(cur);
        stack.pop_back();
      }
    }
  }

  static inline size_t bidx(int size, size_t i) { return size == 1 ? 0 : i; }

  void compute_value(int id) {
    Node& nd = nodes_[id];
    for (int s = 0; s < nd.nin; ++s) ensure_value(nd.in[s]);
    std::vector<double> out(static_cast<size_t>(nd.size), 0.0);
    auto A = [&](size_t i) -> double {
      const Node& a = nodes_[nd.in[0]];
      return a.value[bidx(a.size, i)];
    };
    auto B = [&](size_t i) -> double {
      const Node& b = nodes_[nd.in[1]];
      return b.value[bidx(b.size, i)];
    };
    size_t n = out.size();
    switch (nd.op) {
      case Op::Leaf:
        throw std::logic_error("leaf value lost");
      case Op::Add:
        for (size_t i = 0; i < n; ++i) out[i] = A(i) + B(i);
        break;
      case Op::Sub:
        for (size_t i = 0; i < n; ++i) out[i] = A(i) - B(i);
        break;
      case Op::Mul:
        for (size_t i = 0; i < n; ++i) out[i] = A(i) * B(i);
        break;
      case Op::Div:
        for (size_t i = 0; i < n; ++i) out[i] = A(i) / B(i);
        break;
      case Op::Pow:
        for (size_t i = 0; i < n; ++i) out[i] = std::pow(A(i), B(i));
        break;
      case Op::Neg:
        for (size_t i = 0; i < n; ++i) out[i] = -A(i);
        break;
      case Op::Exp:
        for (size_t i = 0; i < n; ++i) out[i] = std::exp(A(i));
        break;
      case Op::Log:
        for (size_t i = 0; i < n; ++i) out[i] = std::log(A(i));
        break;
      case Op::Sqrt:
        for (size_t i = 0; i < n; ++i) out[i] = std::sqrt(A(i));
        break;
      case Op::Sin:
        for (size_t i = 0; i < n; ++i) out[i] = std::sin(A(i));
        break;
      case Op::Cos:
        for (size_t i = 0; i < n; ++i) out[i] = std::cos(A(i));
        break;
      case Op::Relu:
        for (size_t i = 0; i < n; ++i) out[i] = std::max(A(i), 0.0);
        break;
      case Op::Softplus:
        for (size_t i = 0; i < n; ++i) out[i] = stable_softplus(A(i));
        break;
      case Op::Sigmoid:
        for (size_t i = 0; i < n; ++i) out[i] = stable_sigmoid(A(i));
        break;
      case Op::Clamp:
        for (size_t i = 0; i < n; ++i) out[i] = std::min(std::max(A(i), nd.lo), nd.hi);
        break;
      case Op::Sum: {
        double s = 0.0;
        const Node& a = nodes_[nd.in[0]];
        for (double v : a.value) s += v;
        out[0] = s;
        break;
      }
      case Op::Gather: {
        const Node& a = nodes_[nd.in[0]];
        for (size_t i = 0; i < n; ++i) out[i] = a.value[nd.idx[i]];
        break;
      }
      case Op::ScatterAdd: {
        const Node& a = nodes_[nd.in[0]];
        for (size_t i = 0; i < a.value.size(); ++i) out[nd.idx[i]] += a.value[i];
        break;
      }
      case Op::Select: {
        const Node& c = nodes_[nd.in[0]];
        const Node& a = nodes_[nd.in[1]];
        const Node& b = nodes_[nd.in[2]];
        for (size_t i = 0; i < n; ++i)
          out[i] = c.value[bidx(c.size, i)] >= 0.0 ? a.value[bidx(a.size, i)]
                                                   : b.value[bidx(b.size, i)];
        break;
      }
      case Op::Matmul: {
        const std::vector<double>& a = nodes_[nd.in[0]].value;
        const std::vector<double>& b = nodes_[nd.in[1]].value;
        int M = nd.m, K = nd.k, N = nd.n;
        if (!nd.ta && !nd.tb) {
          for (int i = 0; i < M; ++i)
            for (int p = 0; p < K; ++p) {
              double av = a[static_cast<size_t>(i) * K + p];
              const double* brow = &b[static_cast<size_t>(p) * N];
              double* orow = &out[static_cast<size_t>(i) * N];
              for (int j = 0; j < N; ++j) orow[j] += av * brow[j];
            }
        } else {
          auto ae = [&](int i, int p) { return nd.ta ? a[static_cast<size_t>(p) * M + i]
                                                     : a[static_cast<size_t>(i) * K + p]; };
          auto be = [&](int p, int j) { return nd.tb ? b[static_cast<size_t>(j) * K + p]
                                                     : b[static_cast<size_t>(p) * N + j]; };
          for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) {
              double s = 0.0;
              for (int p = 0; p < K; ++p) s += ae(i, p) * be(p, j);
              out[static_cast<size_t>(i) * N + j] = s;
            }
        }
        break;
      }
    }
    nd.value = std::move(out);
  }

  // ---- reverse rules ------------------------------------------------------

  Var var(int id) { return Var{this, id}; }

  // Reduce a broadcasted contribution back to the input's size.
  Var reduce_to(Var h, int target_size) {
    if (node(h).size > 1 && target_size == 1) return sum(h);
    return h;
  }

  // Contribution of consumer node c (via input slot `slot`) to the adjoint of
  // that input, given c's adjoint g.
  Var vjp(int c, int slot, Var g) {
    // Copy fields up front: pushing rule nodes may reallocate nodes_.
    const Node& ref = nodes_[c];
    const Op op = ref.op;
    const int nin = ref.nin;
    const double lo = ref.lo, hi = ref.hi;
    const int M = ref.m, K = ref.k, N = ref.n;
    const bool fta = ref.ta, ftb = ref.tb;
    std::vector<int32_t> idx;
    if (op == Op::Gather || op == Op::ScatterAdd) idx = ref.idx;
    Var out = var(c);
    Var a = nin > 0 ? var(ref.in[0]) : Var{};
    Var b = nin > 1 ? var(ref.in[1]) : Var{};
    int tsz = nodes_[ref.in[slot]].size;
    switch (op) {
      case Op::Add:
        return reduce_to(g, tsz);
      case Op::Sub:
        return slot == 0 ? reduce_to(g, tsz) : reduce_to(neg(g), tsz);
      case Op::Mul:
        return slot == 0 ? reduce_to(mul(g, b), tsz) : reduce_to(mul(g, a), tsz);
      case Op::Div:
        // out = a/b; d/da = 1/b; d/db = -out/b
        return slot == 0 ? reduce_to(div(g, b), tsz)
                         : reduce_to(neg(mul(g, div(out, b))), tsz);
      case Op::Pow:
        // out = a^b; d/da = b*out/a; d/db = out*log(a)
        return slot == 0 ? reduce_to(mul(mul(g, b), div(out, a)), tsz)
                         : reduce_to(mul(mul(g, out), log(a)), tsz);
      case Op::Neg:
        return neg(g);
      case Op::Exp:
        return mul(g, out);
      case Op::Log:
        return div(g, a);
      case Op::Sqrt:
        return div(mul(g, scalar(0.5)), out);
      case Op::Sin:
        return mul(g, cos(a));
      case Op::Cos:
        return neg(mul(g, sin(a)));
      case Op::Relu:
        return select(a, g, zeros(node(g).size));
      case Op::Softplus:
        return mul(g, sigmoid(a));
      case Op::Sigmoid:
        return mul(g, mul(out, sub(scalar(1.0), out)));
      case Op::Clamp: {
        // Pass-through strictly inside and at the boundary (ties inside).
        Var cond = mul(sub(a, scalar(lo)), sub(scalar(hi), a));
        return select(cond, g, zeros(node(g).size));
      }
      case Op::Sum:
        return gather(g, std::vector<int32_t>(static_cast<size_t>(tsz), 0));
      case Op::Gather:
        return scatter_add(g, std::move(idx), tsz);
      case Op::ScatterAdd:
        return gather(g, std::move(idx));
      case Op::Select:
        return slot == 1 ? select(a, g, zeros(node(g).size))
                         : select(a, zeros(node(g).size), g);
      case Op::Matmul: {
        if (slot == 0) {
          if (!fta) return matmul(g, false, b, !ftb, M, N, K);   // G * opB^T
          if (!ftb) return matmul(b, false, g, true, K, N, M);   // B * G^T
          return matmul(b, true, g, true, K, N, M);              // B^T * G^T
        } else {
          if (!ftb) return fta ? matmul(a, false, g, false, K, M, N)  // A * G
                               : matmul(a, true, g, false, K, M, N);  // A^T * G
          return fta ? matmul(g, true, a, true, N, M, K)   // G^T * A^T
                     : matmul(g, true, a, false, N, M, K); // G^T * A
        }
      }
      case Op::Leaf:
        break;
    }
    throw std::logic_error("vjp: unreachable");
  }
};

inline int Var::size() const { return tape->size_of(*this); }

// Arithmetic sugar; all operands must live on the same tape.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator+(Var a, double s) { return a + a.tape->scalar(s); }
inline Var operator-(Var a, double s) { return a - a.tape->scalar(s); }
inline Var operator*(Var a, double s) { return a * a.tape->scalar(s); }
inline Var operator*(double s, Var a) { return a * s; }
inline Var operator-(double s, Var a) { return a.tape->scalar(s) - a; }

}  // namespace nerfpoison
