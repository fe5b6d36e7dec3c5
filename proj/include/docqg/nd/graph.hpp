#pragma once

// Reverse-mode differentiation over a recorded sequence of dense kernels.
//
// A Graph is an append-only record: every kernel call evaluates eagerly and
// pushes one node whose inputs are earlier nodes, so node order is already a
// topological order. backward() walks the record in reverse.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "docqg/nd/array.hpp"

namespace docqg::nd {

enum class Kernel {
  leaf,
  matmul,
  add,
  concat,
  elementwise_mul,
  sigmoid,
  tanh,
  softmax_last_axis,
  max_over_axis,
  embedding_lookup,
  broadcast_scale_rows,
  log_floor,
};

inline std::string_view kernel_name(Kernel k) {
  switch (k) {
    case Kernel::leaf: return "leaf";
    case Kernel::matmul: return "matmul";
    case Kernel::add: return "add";
    case Kernel::concat: return "concat";
    case Kernel::elementwise_mul: return "elementwise_mul";
    case Kernel::sigmoid: return "sigmoid";
    case Kernel::tanh: return "tanh";
    case Kernel::softmax_last_axis: return "softmax_last_axis";
    case Kernel::max_over_axis: return "max_over_axis";
    case Kernel::embedding_lookup: return "embedding_lookup";
    case Kernel::broadcast_scale_rows: return "broadcast_scale_rows";
    case Kernel::log_floor: return "log_floor";
  }
  return "unknown";
}

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteError : std::domain_error {
  using std::domain_error::domain_error;
};

template <typename T>
class Graph;

/// Handle to one node of a Graph.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Array<T>& value() const { return graph->value(id); }
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename T>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<Array<T>> grads) : grads_(std::move(grads)) {}

  bool has(Var<T> v) const {
    return v.id < grads_.size() && !grads_[v.id].empty();
  }
  const Array<T>& at(Var<T> v) const {
    if (!has(v)) {
      throw std::out_of_range("Gradients: no gradient for node " +
                              std::to_string(v.id));
    }
    return grads_[v.id];
  }
  std::vector<Array<T>>& all() { return grads_; }

 private:
  std::vector<Array<T>> grads_;
};

template <typename T>
class Graph {
 public:
  struct Node {
    Kernel kind = Kernel::leaf;
    std::vector<std::size_t> inputs;
    Array<T> owned;
    const Array<T>* external = nullptr;
    bool requires_grad = false;
    bool trans_b = false;
    int axis = 0;
    char broadcast = 's';  // s: same shape, r: row vector, c: scalar
    T floor = T{0};
    std::vector<std::size_t> index;  // lookup ids or recorded argmax

    const Array<T>& value() const { return external ? *external : owned; }
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const Array<T>& value(std::size_t id) const { return nodes_[id].value(); }

  // ---- leaves -------------------------------------------------------------

  Var<T> constant(Array<T> value) { return make_leaf(std::move(value), false); }

  Var<T> input(Array<T> value) { return make_leaf(std::move(value), true); }

  /// Leaf reading caller-owned storage without copying. The array must
  /// outlive the graph; changes to it are picked up by forward().
  Var<T> parameter(const Array<T>& value, bool requires_grad = true) {
    check_finite_leaf(value);
    Node n;
    n.kind = Kernel::leaf;
    n.external = &value;
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }

  /// Mutable access to an owned leaf, for replaying with new inputs.
  Array<T>& leaf_value(Var<T> v) {
    Node& n = nodes_.at(v.id);
    if (n.kind != Kernel::leaf || n.external) {
      throw std::invalid_argument("leaf_value: node is not an owned leaf");
    }
    return n.owned;
  }

  // ---- kernels ------------------------------------------------------------

  Var<T> matmul(Var<T> a, Var<T> b, bool trans_b = false) {
    const auto& A = value(a.id);
    const auto& B = value(b.id);
    const std::size_t k_b = trans_b ? B.cols() : B.rows();
    if (A.cols() != k_b) mismatch("matmul", A, B);
    Node n = op(Kernel::matmul, {a.id, b.id});
    n.trans_b = trans_b;
    n.owned = Array<T>({A.rows(), trans_b ? B.rows() : B.cols()});
    return finish(std::move(n));
  }

  Var<T> add(Var<T> a, Var<T> b) {
    Node n = op(Kernel::add, {a.id, b.id});
    n.broadcast = broadcast_mode("add", value(a.id), value(b.id));
    n.owned = Array<T>(value(a.id).shape());
    return finish(std::move(n));
  }

  Var<T> mul(Var<T> a, Var<T> b) {
    Node n = op(Kernel::elementwise_mul, {a.id, b.id});
    n.broadcast = broadcast_mode("elementwise_mul", value(a.id), value(b.id));
    n.owned = Array<T>(value(a.id).shape());
    return finish(std::move(n));
  }

  /// axis 0 stacks rows; axis 1 joins along the last axis.
  Var<T> concat(const std::vector<Var<T>>& parts, int axis = 1) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    std::vector<std::size_t> ids;
    ids.reserve(parts.size());
    const auto& first = value(parts[0].id);
    std::size_t total = 0;
    for (const auto& p : parts) {
      const auto& P = value(p.id);
      if (axis == 0 ? P.cols() != first.cols() : P.rows() != first.rows()) {
        mismatch("concat", first, P);
      }
      total += axis == 0 ? P.rows() : P.cols();
      ids.push_back(p.id);
    }
    Node n = op(Kernel::concat, std::move(ids));
    n.axis = axis;
    n.owned = axis == 0 ? Array<T>({total, first.cols()})
                        : Array<T>({first.rows(), total});
    return finish(std::move(n));
  }

  Var<T> sigmoid(Var<T> a) { return unary(Kernel::sigmoid, a); }
  Var<T> tanh(Var<T> a) { return unary(Kernel::tanh, a); }
  Var<T> softmax(Var<T> a) { return unary(Kernel::softmax_last_axis, a); }

  /// Maximum along `axis`, laid out as a 1 x m row. axis 1 yields one value
  /// per row, axis 0 one value per column.
  Var<T> max_over_axis(Var<T> a, int axis) {
    if (axis != 0 && axis != 1) throw ShapeError("max_over_axis: axis must be 0 or 1");
    const auto& A = value(a.id);
    Node n = op(Kernel::max_over_axis, {a.id});
    n.axis = axis;
    const std::size_t m = axis == 1 ? A.rows() : A.cols();
    n.owned = Array<T>({1, m});
    n.index.assign(m, 0);
    return finish(std::move(n));
  }

  Var<T> embedding_lookup(Var<T> table, std::vector<std::size_t> ids) {
    const auto& W = value(table.id);
    if (ids.empty()) throw ShapeError("embedding_lookup: empty id list");
    for (auto id : ids) {
      if (id >= W.rows()) {
        throw ShapeError("embedding_lookup: id " + std::to_string(id) +
                         " out of range for table " + shape_string(W.shape()));
      }
    }
    Node n = op(Kernel::embedding_lookup, {table.id});
    n.owned = Array<T>({ids.size(), W.cols()});
    n.index = std::move(ids);
    return finish(std::move(n));
  }

  /// Row i of `h` scaled by scale[i].
  Var<T> scale_rows(Var<T> h, Var<T> scale) {
    const auto& H = value(h.id);
    const auto& S = value(scale.id);
    if (S.size() != H.rows()) mismatch("broadcast_scale_rows", H, S);
    Node n = op(Kernel::broadcast_scale_rows, {h.id, scale.id});
    n.owned = Array<T>(H.shape());
    return finish(std::move(n));
  }

  /// Elementwise log(max(x, floor)).
  Var<T> log_floor(Var<T> a, T floor) {
    if (!(floor > T{0})) throw std::invalid_argument("log_floor: floor must be > 0");
    Node n = op(Kernel::log_floor, {a.id});
    n.floor = floor;
    n.owned = Array<T>(value(a.id).shape());
    return finish(std::move(n));
  }

  // ---- replay & backward --------------------------------------------------

  /// Re-evaluates every kernel node in record order from current leaf values.
  void forward() {
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      if (nodes_[id].kind != Kernel::leaf) evaluate(nodes_[id]);
    }
  }

  Gradients<T> backward(Var<T> loss) const {
    const auto& L = value(loss.id);
    if (L.size() != 1) {
      throw ShapeError("backward: loss must be scalar-shaped, got " +
                       shape_string(L.shape()));
    }
    std::vector<Array<T>> grads(nodes_.size());
    grads[loss.id] = Array<T>(L.shape(), T{1});
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      const Node& n = nodes_[id];
      if (grads[id].empty() || n.kind == Kernel::leaf) continue;
      propagate(n, grads[id], grads);
    }
    return Gradients<T>(std::move(grads));
  }

 private:
  Var<T> make_leaf(Array<T> value, bool requires_grad) {
    check_finite_leaf(value);
    Node n;
    n.kind = Kernel::leaf;
    n.owned = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }

  static void check_finite_leaf(const Array<T>& a) {
    if (a.empty()) throw ShapeError("leaf: empty array");
    if (!a.all_finite()) throw NonFiniteError("leaf: non-finite input value");
  }

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>{this, nodes_.size() - 1};
  }

  Node op(Kernel kind, std::vector<std::size_t> inputs) {
    Node n;
    n.kind = kind;
    for (auto id : inputs) {
      if (id >= nodes_.size()) {
        throw std::invalid_argument(std::string(kernel_name(kind)) +
                                    ": input from another graph");
      }
      n.requires_grad = n.requires_grad || nodes_[id].requires_grad;
    }
    n.inputs = std::move(inputs);
    return n;
  }

  Var<T> unary(Kernel kind, Var<T> a) {
    Node n = op(kind, {a.id});
    n.owned = Array<T>(value(a.id).shape());
    return finish(std::move(n));
  }

  Var<T> finish(Node n) {
    evaluate(n);
    return push(std::move(n));
  }

  [[noreturn]] static void mismatch(std::string_view kernel, const Array<T>& a,
                                    const Array<T>& b) {
    throw ShapeError(std::string(kernel) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }

  static char broadcast_mode(std::string_view kernel, const Array<T>& a,
                             const Array<T>& b) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return 's';
    if (b.size() == 1) return 'c';
    if (b.rows() == 1 && b.cols() == a.cols()) return 'r';
    mismatch(kernel, a, b);
  }

  const Array<T>& in(const Node& n, std::size_t k) const {
    return nodes_[n.inputs[k]].value();
  }

  void evaluate(Node& n) {
    Array<T>& out = n.owned;
    T* y = out.data();
    switch (n.kind) {
      case Kernel::leaf:
        return;
      case Kernel::matmul: {
        const auto& A = in(n, 0);
        const auto& B = in(n, 1);
        const std::size_t rows = A.rows(), inner = A.cols(), cols = out.cols();
        const T* a = A.data();
        const T* b = B.data();
        if (n.trans_b) {
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
              T acc{0};
              for (std::size_t p = 0; p < inner; ++p) {
                acc += a[i * inner + p] * b[j * inner + p];
              }
              y[i * cols + j] = acc;
            }
          }
        } else {
          out.fill(T{0});
          for (std::size_t i = 0; i < rows; ++i) {
            T* yr = y + i * cols;
            for (std::size_t p = 0; p < inner; ++p) {
              const T av = a[i * inner + p];
              const T* br = b + p * cols;
              for (std::size_t j = 0; j < cols; ++j) yr[j] += av * br[j];
            }
          }
        }
        break;
      }
      case Kernel::add:
      case Kernel::elementwise_mul: {
        const auto& A = in(n, 0);
        const auto& B = in(n, 1);
        const T* a = A.data();
        const T* b = B.data();
        const std::size_t size = A.size(), cols = A.cols();
        const bool is_add = n.kind == Kernel::add;
        for (std::size_t i = 0; i < size; ++i) {
          const T bv = n.broadcast == 's' ? b[i] : n.broadcast == 'r' ? b[i % cols] : b[0];
          y[i] = is_add ? a[i] + bv : a[i] * bv;
        }
        break;
      }
      case Kernel::concat: {
        const std::size_t out_cols = out.cols();
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const auto& P = in(n, k);
          if (n.axis == 0) {
            std::copy(P.data(), P.data() + P.size(), y + offset * out_cols);
            offset += P.rows();
          } else {
            for (std::size_t r = 0; r < P.rows(); ++r) {
              std::copy(P.data() + r * P.cols(), P.data() + (r + 1) * P.cols(),
                        y + r * out_cols + offset);
            }
            offset += P.cols();
          }
        }
        break;
      }
      case Kernel::sigmoid: {
        const auto& A = in(n, 0);
        const T lo = std::numeric_limits<T>::min();
        const T hi = std::nextafter(T{1}, T{0});
        for (std::size_t i = 0; i < A.size(); ++i) {
          const T x = A[i];
          T s;
          if (x >= T{0}) {
            s = T{1} / (T{1} + std::exp(-x));
          } else {
            const T e = std::exp(x);
            s = e / (T{1} + e);
          }
          // keep strictly inside (0, 1) even where the exact value rounds off
          y[i] = std::clamp(s, lo, hi);
        }
        break;
      }
      case Kernel::tanh: {
        const auto& A = in(n, 0);
        for (std::size_t i = 0; i < A.size(); ++i) y[i] = std::tanh(A[i]);
        break;
      }
      case Kernel::softmax_last_axis: {
        const auto& A = in(n, 0);
        const std::size_t rows = A.rows(), cols = A.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* x = A.data() + r * cols;
          T* yr = y + r * cols;
          const T mx = *std::max_element(x, x + cols);
          T sum{0};
          for (std::size_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(x[j] - mx);
            sum += yr[j];
          }
          for (std::size_t j = 0; j < cols; ++j) yr[j] /= sum;
        }
        break;
      }
      case Kernel::max_over_axis: {
        const auto& A = in(n, 0);
        const std::size_t rows = A.rows(), cols = A.cols();
        if (n.axis == 1) {
          for (std::size_t r = 0; r < rows; ++r) {
            const T* x = A.data() + r * cols;
            const std::size_t j = static_cast<std::size_t>(
                std::max_element(x, x + cols) - x);
            n.index[r] = r * cols + j;
            y[r] = x[j];
          }
        } else {
          for (std::size_t c = 0; c < cols; ++c) {
            std::size_t best = c;
            for (std::size_t r = 1; r < rows; ++r) {
              if (A[r * cols + c] > A[best]) best = r * cols + c;
            }
            n.index[c] = best;
            y[c] = A[best];
          }
        }
        break;
      }
      case Kernel::embedding_lookup: {
        const auto& W = in(n, 0);
        const std::size_t cols = W.cols();
        for (std::size_t r = 0; r < n.index.size(); ++r) {
          const T* src = W.data() + n.index[r] * cols;
          std::copy(src, src + cols, y + r * cols);
        }
        break;
      }
      case Kernel::broadcast_scale_rows: {
        const auto& H = in(n, 0);
        const auto& S = in(n, 1);
        const std::size_t rows = H.rows(), cols = H.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          const T s = S[r];
          for (std::size_t j = 0; j < cols; ++j) y[r * cols + j] = s * H[r * cols + j];
        }
        break;
      }
      case Kernel::log_floor: {
        const auto& A = in(n, 0);
        for (std::size_t i = 0; i < A.size(); ++i) {
          y[i] = std::log(std::max(A[i], n.floor));
        }
        break;
      }
    }
    if (!out.all_finite()) {
      throw NonFiniteError(std::string(kernel_name(n.kind)) +
                           ": produced a non-finite value");
    }
  }

  // Accumulates into grads[target], allocating it on first touch. Returns
  // nullptr when the target does not need a gradient.
  T* grad_slot(std::size_t target, std::vector<Array<T>>& grads) const {
    const Node& t = nodes_[target];
    if (!t.requires_grad) return nullptr;
    if (grads[target].empty()) grads[target] = Array<T>(t.value().shape());
    return grads[target].data();
  }

  void propagate(const Node& n, const Array<T>& dout,
                 std::vector<Array<T>>& grads) const {
    const T* dy = dout.data();
    const T* y = n.owned.data();
    switch (n.kind) {
      case Kernel::leaf:
        return;
      case Kernel::matmul: {
        const auto& A = in(n, 0);
        const auto& B = in(n, 1);
        const std::size_t rows = A.rows(), inner = A.cols(), cols = n.owned.cols();
        const T* a = A.data();
        const T* b = B.data();
        if (T* da = grad_slot(n.inputs[0], grads)) {
          for (std::size_t i = 0; i < rows; ++i) {
            const T* dyr = dy + i * cols;
            T* dar = da + i * inner;
            if (n.trans_b) {
              for (std::size_t j = 0; j < cols; ++j) {
                const T g = dyr[j];
                const T* br = b + j * inner;
                for (std::size_t p = 0; p < inner; ++p) dar[p] += g * br[p];
              }
            } else {
              for (std::size_t p = 0; p < inner; ++p) {
                const T* br = b + p * cols;
                T acc{0};
                for (std::size_t j = 0; j < cols; ++j) acc += dyr[j] * br[j];
                dar[p] += acc;
              }
            }
          }
        }
        if (T* db = grad_slot(n.inputs[1], grads)) {
          for (std::size_t i = 0; i < rows; ++i) {
            const T* dyr = dy + i * cols;
            const T* ar = a + i * inner;
            if (n.trans_b) {
              for (std::size_t j = 0; j < cols; ++j) {
                const T g = dyr[j];
                T* dbr = db + j * inner;
                for (std::size_t p = 0; p < inner; ++p) dbr[p] += g * ar[p];
              }
            } else {
              for (std::size_t p = 0; p < inner; ++p) {
                const T av = ar[p];
                T* dbr = db + p * cols;
                for (std::size_t j = 0; j < cols; ++j) dbr[j] += av * dyr[j];
              }
            }
          }
        }
        break;
      }
      case Kernel::add:
      case Kernel::elementwise_mul: {
        const auto& A = in(n, 0);
        const auto& B = in(n, 1);
        const std::size_t size = A.size(), cols = A.cols();
        const bool is_add = n.kind == Kernel::add;
        auto bidx = [&](std::size_t i) {
          return n.broadcast == 's' ? i : n.broadcast == 'r' ? i % cols : 0;
        };
        if (T* da = grad_slot(n.inputs[0], grads)) {
          for (std::size_t i = 0; i < size; ++i) {
            da[i] += is_add ? dy[i] : dy[i] * B[bidx(i)];
          }
        }
        if (T* db = grad_slot(n.inputs[1], grads)) {
          for (std::size_t i = 0; i < size; ++i) {
            db[bidx(i)] += is_add ? dy[i] : dy[i] * A[i];
          }
        }
        break;
      }
      case Kernel::concat: {
        const std::size_t out_cols = n.owned.cols();
        std::size_t offset = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const auto& P = in(n, k);
          T* dp = grad_slot(n.inputs[k], grads);
          if (n.axis == 0) {
            if (dp) {
              const T* src = dy + offset * out_cols;
              for (std::size_t i = 0; i < P.size(); ++i) dp[i] += src[i];
            }
            offset += P.rows();
          } else {
            if (dp) {
              for (std::size_t r = 0; r < P.rows(); ++r) {
                for (std::size_t j = 0; j < P.cols(); ++j) {
                  dp[r * P.cols() + j] += dy[r * out_cols + offset + j];
                }
              }
            }
            offset += P.cols();
          }
        }
        break;
      }
      case Kernel::sigmoid: {
        if (T* dx = grad_slot(n.inputs[0], grads)) {
          for (std::size_t i = 0; i < n.owned.size(); ++i) {
            dx[i] += dy[i] * y[i] * (T{1} - y[i]);
          }
        }
        break;
      }
      case Kernel::tanh: {
        if (T* dx = grad_slot(n.inputs[0], grads)) {
          for (std::size_t i = 0; i < n.owned.size(); ++i) {
            dx[i] += dy[i] * (T{1} - y[i] * y[i]);
          }
        }
        break;
      }
      case Kernel::softmax_last_axis: {
        if (T* dx = grad_slot(n.inputs[0], grads)) {
          const std::size_t rows = n.owned.rows(), cols = n.owned.cols();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* yr = y + r * cols;
            const T* dyr = dy + r * cols;
            T dot{0};
            for (std::size_t j = 0; j < cols; ++j) dot += dyr[j] * yr[j];
            for (std::size_t j = 0; j < cols; ++j) {
              dx[r * cols + j] += yr[j] * (dyr[j] - dot);
            }
          }
        }
        break;
      }
      case Kernel::max_over_axis: {
        if (T* dx = grad_slot(n.inputs[0], grads)) {
          for (std::size_t k = 0; k < n.index.size(); ++k) dx[n.index[k]] += dy[k];
        }
        break;
      }
      case Kernel::embedding_lookup: {
        if (T* dw = grad_slot(n.inputs[0], grads)) {
          const std::size_t cols = n.owned.cols();
          for (std::size_t r = 0; r < n.index.size(); ++r) {
            T* dst = dw + n.index[r] * cols;
            for (std::size_t j = 0; j < cols; ++j) dst[j] += dy[r * cols + j];
          }
        }
        break;
      }
      case Kernel::broadcast_scale_rows: {
        const auto& H = in(n, 0);
        const auto& S = in(n, 1);
        const std::size_t rows = H.rows(), cols = H.cols();
        if (T* dh = grad_slot(n.inputs[0], grads)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < cols; ++j) dh[r * cols + j] += dy[r * cols + j] * S[r];
          }
        }
        if (T* ds = grad_slot(n.inputs[1], grads)) {
          for (std::size_t r = 0; r < rows; ++r) {
            T acc{0};
            for (std::size_t j = 0; j < cols; ++j) acc += dy[r * cols + j] * H[r * cols + j];
            ds[r] += acc;
          }
        }
        break;
      }
      case Kernel::log_floor: {
        const auto& A = in(n, 0);
        if (T* dx = grad_slot(n.inputs[0], grads)) {
          for (std::size_t i = 0; i < A.size(); ++i) {
            if (A[i] > n.floor) dx[i] += dy[i] / A[i];
          }
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
};

// ---- free-function spellings ---------------------------------------------

template <typename T>
Graph<T>& graph_of(Var<T> a, Var<T> b) {
  if (a.graph != b.graph || !a.graph) {
    throw std::invalid_argument("operands belong to different graphs");
  }
  return *a.graph;
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, bool trans_b = false) {
  return graph_of(a, b).matmul(a, b, trans_b);
}
template <typename T>
Var<T> add(Var<T> a, Var<T> b) { return graph_of(a, b).add(a, b); }
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) { return graph_of(a, b).mul(a, b); }
template <typename T>
Var<T> sigmoid(Var<T> a) { return a.graph->sigmoid(a); }
template <typename T>
Var<T> tanh(Var<T> a) { return a.graph->tanh(a); }
template <typename T>
Var<T> softmax(Var<T> a) { return a.graph->softmax(a); }
template <typename T>
Var<T> max_over_axis(Var<T> a, int axis) { return a.graph->max_over_axis(a, axis); }
template <typename T>
Var<T> scale_rows(Var<T> h, Var<T> s) { return graph_of(h, s).scale_rows(h, s); }
template <typename T>
Var<T> log_floor(Var<T> a, T floor) { return a.graph->log_floor(a, floor); }
template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, int axis = 1) {
  return parts.at(0).graph->concat(parts, axis);
}

/// Sum of all entries as a 1 x 1 value, composed from two matmuls.
template <typename T>
Var<T> sum(Var<T> a) {
  Graph<T>& g = *a.graph;
  Var<T> col = g.constant(Array<T>({a.cols(), 1}, T{1}));
  Var<T> per_row = g.matmul(a, col);
  if (a.rows() == 1) return per_row;
  Var<T> left = g.constant(Array<T>({1, a.rows()}, T{1}));
  return g.matmul(left, per_row);
}

/// a * c for a constant scalar c.
template <typename T>
Var<T> scale(Var<T> a, T c) {
  return a.graph->mul(a, a.graph->constant(Array<T>({1, 1}, c)));
}

}  // namespace docqg::nd
