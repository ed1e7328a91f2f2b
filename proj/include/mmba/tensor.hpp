#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmba/errors.hpp"
#include "mmba/mat.hpp"
#include "mmba/rng.hpp"

namespace mmba {

class Graph;

// A matrix value with an optional handle into the graph that produced it.
// Values are computed eagerly; the graph only records how to push gradients
// back. Detached tensors (no graph) act as constants.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Mat value) : value_(std::move(value)) {}  // NOLINT: implicit by design

  const Mat& value() const { return value_; }
  int rows() const { return value_.rows(); }
  int cols() const { return value_.cols(); }
  double scalar() const {
    if (rows() != 1 || cols() != 1)
      throw ShapeError("scalar(): tensor is " + value_.shape_str());
    return value_(0, 0);
  }

  bool attached() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int node() const { return node_; }

 private:
  friend class Graph;
  Mat value_;
  Graph* graph_ = nullptr;
  int node_ = -1;
};

// Append-only reverse-mode tape. Node indices are topological by
// construction, so backward() is a single reverse sweep that visits each
// node exactly once. A graph is confined to one thread; independent graphs
// may run concurrently.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf with gradient tracking (model parameters, checked inputs).
  Tensor var(Mat value) {
    Tensor t(std::move(value));
    t.graph_ = this;
    t.node_ = add_node(t.rows(), t.cols(), nullptr);
    return t;
  }

  // Records an interior node; backprop receives this node's output gradient.
  using Backprop = std::function<void(Graph&, const Mat& out_grad)>;
  int add_node(int rows, int cols, Backprop backprop) {
    nodes_.push_back(Node{rows, cols, std::move(backprop), Mat{}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  Tensor make(Mat value, Backprop backprop) {
    Tensor t(std::move(value));
    t.graph_ = this;
    t.node_ = add_node(t.rows(), t.cols(), std::move(backprop));
    return t;
  }

  void accumulate(int node, const Mat& contribution) {
    Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.grad.empty()) n.grad = Mat(n.rows, n.cols);
    n.grad.axpy(1.0, contribution);
  }

  // Reverse sweep from a scalar loss. Gradients from multiple consumers
  // accumulate additively before a node's own rule runs.
  void backward(const Tensor& loss) {
    if (!loss.attached() || loss.graph_ != this)
      throw UsageError("backward: tensor is detached from this graph");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw ShapeError("backward: loss must be 1x1, got " + loss.value().shape_str());
    accumulate(loss.node_, Mat(1, 1, 1.0));
    for (int i = loss.node_; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.empty() || !n.backprop) continue;
      n.backprop(*this, n.grad);
    }
  }

  // Gradient accumulated on a tensor's node; zeros if backward never
  // reached it.
  Mat grad(const Tensor& t) const {
    if (!t.attached() || t.graph_ != this)
      throw UsageError("grad: tensor is detached from this graph");
    const Node& n = nodes_[static_cast<std::size_t>(t.node_)];
    if (n.grad.empty()) return Mat(n.rows, n.cols);
    return n.grad;
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    int rows, cols;
    Backprop backprop;  // null for leaves
    Mat grad;
  };
  std::vector<Node> nodes_;
};

namespace detail {

// Resolves which graph (if any) a result belongs to; mixing two different
// graphs in one op is a usage error.
inline Graph* result_graph(const Tensor& a, const Tensor& b) {
  if (a.attached() && b.attached() && a.graph() != b.graph())
    throw UsageError("op mixes tensors from two different graphs");
  return a.attached() ? a.graph() : b.graph();
}

inline Tensor attach(Graph* g, Mat value, Graph::Backprop backprop) {
  if (!g) return Tensor(std::move(value));
  return g->make(std::move(value), std::move(backprop));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

// dA = dC * B^T, dB = A^T * dC
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Graph* g = detail::result_graph(a, b);
  Mat out = mul_nn(a.value(), b.value());
  const int na = a.node(), nb = b.node();
  const Mat av = a.value(), bv = b.value();
  return detail::attach(g, std::move(out), [na, nb, av, bv](Graph& gr, const Mat& d) {
    if (na >= 0) gr.accumulate(na, mul_nt(d, bv));
    if (nb >= 0) gr.accumulate(nb, mul_tn(av, d));
  });
}

inline Tensor transpose(const Tensor& a) {
  Graph* g = a.graph();
  const int na = a.node();
  return detail::attach(g, transpose(a.value()), [na](Graph& gr, const Mat& d) {
    if (na >= 0) gr.accumulate(na, transpose(d));
  });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape("hadamard", a.value(), b.value());
  Graph* g = detail::result_graph(a, b);
  Mat out = a.value();
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= b.value()(i, j);
  const int na = a.node(), nb = b.node();
  const Mat av = a.value(), bv = b.value();
  return detail::attach(g, std::move(out), [na, nb, av, bv](Graph& gr, const Mat& d) {
    if (na >= 0) {
      Mat da = d;
      for (int i = 0; i < da.rows(); ++i)
        for (int j = 0; j < da.cols(); ++j) da(i, j) *= bv(i, j);
      gr.accumulate(na, da);
    }
    if (nb >= 0) {
      Mat db = d;
      for (int i = 0; i < db.rows(); ++i)
        for (int j = 0; j < db.cols(); ++j) db(i, j) *= av(i, j);
      gr.accumulate(nb, db);
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a.value(), b.value());
  Graph* g = detail::result_graph(a, b);
  Mat out = a.value();
  out.axpy(1.0, b.value());
  const int na = a.node(), nb = b.node();
  return detail::attach(g, std::move(out), [na, nb](Graph& gr, const Mat& d) {
    if (na >= 0) gr.accumulate(na, d);
    if (nb >= 0) gr.accumulate(nb, d);
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a.value(), b.value());
  Graph* g = detail::result_graph(a, b);
  Mat out = a.value();
  out.axpy(-1.0, b.value());
  const int na = a.node(), nb = b.node();
  return detail::attach(g, std::move(out), [na, nb](Graph& gr, const Mat& d) {
    if (na >= 0) gr.accumulate(na, d);
    if (nb >= 0) {
      Mat db = d;
      for (auto& x : db) x = -x;
      gr.accumulate(nb, db);
    }
  });
}

// out = scale * a + shift, elementwise.
inline Tensor affine(const Tensor& a, double scale, double shift) {
  Graph* g = a.graph();
  Mat out = a.value();
  for (auto& x : out) x = scale * x + shift;
  const int na = a.node();
  return detail::attach(g, std::move(out), [na, scale](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da = d;
    for (auto& x : da) x *= scale;
    gr.accumulate(na, da);
  });
}

// Adds a 1xN bias row to every row of a; the bias gradient is the column sum.
inline Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw ShapeError("add_rowvec: " + a.value().shape_str() + " + " +
                     bias.value().shape_str());
  Graph* g = detail::result_graph(a, bias);
  Mat out = a.value();
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += bias.value()(0, j);
  const int na = a.node(), nb = bias.node();
  return detail::attach(g, std::move(out), [na, nb](Graph& gr, const Mat& d) {
    if (na >= 0) gr.accumulate(na, d);
    if (nb >= 0) {
      Mat db(1, d.cols());
      for (int i = 0; i < d.rows(); ++i)
        for (int j = 0; j < d.cols(); ++j) db(0, j) += d(i, j);
      gr.accumulate(nb, db);
    }
  });
}

inline Tensor divide(const Tensor& a, const Tensor& b) {
  check_same_shape("divide", a.value(), b.value());
  Graph* g = detail::result_graph(a, b);
  Mat out = a.value();
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) /= b.value()(i, j);
  const int na = a.node(), nb = b.node();
  const Mat av = a.value(), bv = b.value();
  return detail::attach(g, std::move(out), [na, nb, av, bv](Graph& gr, const Mat& d) {
    if (na >= 0) {
      Mat da = d;
      for (int i = 0; i < da.rows(); ++i)
        for (int j = 0; j < da.cols(); ++j) da(i, j) /= bv(i, j);
      gr.accumulate(na, da);
    }
    if (nb >= 0) {
      Mat db = d;
      for (int i = 0; i < db.rows(); ++i)
        for (int j = 0; j < db.cols(); ++j)
          db(i, j) *= -av(i, j) / (bv(i, j) * bv(i, j));
      gr.accumulate(nb, db);
    }
  });
}

// Elementwise min/max; on ties the gradient routes to the first argument.
inline Tensor minimum(const Tensor& a, const Tensor& b) {
  check_same_shape("minimum", a.value(), b.value());
  Graph* g = detail::result_graph(a, b);
  Mat out = a.value();
  Mat pick_a(out.rows(), out.cols());
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) {
      if (a.value()(i, j) <= b.value()(i, j)) {
        pick_a(i, j) = 1.0;
      } else {
        out(i, j) = b.value()(i, j);
      }
    }
  const int na = a.node(), nb = b.node();
  return detail::attach(g, std::move(out), [na, nb, pick_a](Graph& gr, const Mat& d) {
    if (na >= 0) {
      Mat da = d;
      for (int i = 0; i < da.rows(); ++i)
        for (int j = 0; j < da.cols(); ++j) da(i, j) *= pick_a(i, j);
      gr.accumulate(na, da);
    }
    if (nb >= 0) {
      Mat db = d;
      for (int i = 0; i < db.rows(); ++i)
        for (int j = 0; j < db.cols(); ++j) db(i, j) *= 1.0 - pick_a(i, j);
      gr.accumulate(nb, db);
    }
  });
}

inline Tensor maximum(const Tensor& a, const Tensor& b) {
  check_same_shape("maximum", a.value(), b.value());
  Graph* g = detail::result_graph(a, b);
  Mat out = a.value();
  Mat pick_a(out.rows(), out.cols());
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) {
      if (a.value()(i, j) >= b.value()(i, j)) {
        pick_a(i, j) = 1.0;
      } else {
        out(i, j) = b.value()(i, j);
      }
    }
  const int na = a.node(), nb = b.node();
  return detail::attach(g, std::move(out), [na, nb, pick_a](Graph& gr, const Mat& d) {
    if (na >= 0) {
      Mat da = d;
      for (int i = 0; i < da.rows(); ++i)
        for (int j = 0; j < da.cols(); ++j) da(i, j) *= pick_a(i, j);
      gr.accumulate(na, da);
    }
    if (nb >= 0) {
      Mat db = d;
      for (int i = 0; i < db.rows(); ++i)
        for (int j = 0; j < db.cols(); ++j) db(i, j) *= 1.0 - pick_a(i, j);
      gr.accumulate(nb, db);
    }
  });
}

inline Tensor elem_log(const Tensor& a) {
  Graph* g = a.graph();
  Mat out = a.value();
  for (auto& x : out) x = std::log(x);
  const int na = a.node();
  const Mat av = a.value();
  return detail::attach(g, std::move(out), [na, av](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da = d;
    for (int i = 0; i < da.rows(); ++i)
      for (int j = 0; j < da.cols(); ++j) da(i, j) /= av(i, j);
    gr.accumulate(na, da);
  });
}

inline Tensor elem_pow(const Tensor& a, double exponent) {
  Graph* g = a.graph();
  Mat out = a.value();
  for (auto& x : out) x = std::pow(x, exponent);
  const int na = a.node();
  const Mat av = a.value();
  return detail::attach(g, std::move(out), [na, av, exponent](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da = d;
    if (exponent == 0.0) {
      for (auto& x : da) x = 0.0;
    } else {
      for (int i = 0; i < da.rows(); ++i)
        for (int j = 0; j < da.cols(); ++j)
          da(i, j) *= exponent * std::pow(av(i, j), exponent - 1.0);
    }
    gr.accumulate(na, da);
  });
}

// Gradient passes through where the input already lies in [lo, hi].
inline Tensor clamp(const Tensor& a, double lo, double hi) {
  Graph* g = a.graph();
  Mat out = a.value();
  Mat inside(out.rows(), out.cols());
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) {
      double x = out(i, j);
      if (x < lo) {
        out(i, j) = lo;
      } else if (x > hi) {
        out(i, j) = hi;
      } else {
        inside(i, j) = 1.0;
      }
    }
  const int na = a.node();
  return detail::attach(g, std::move(out), [na, inside](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da = d;
    for (int i = 0; i < da.rows(); ++i)
      for (int j = 0; j < da.cols(); ++j) da(i, j) *= inside(i, j);
    gr.accumulate(na, da);
  });
}

// ---------------------------------------------------------------------------
// Activations / softmax / dropout
// ---------------------------------------------------------------------------

enum class Activation { Sigmoid, Tanh, Relu };

inline Activation parse_activation(const std::string& name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation kind: " + name);
}

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "?";
}

// ReLU uses subgradient 0 at the kink.
inline Tensor activation(Activation kind, const Tensor& a) {
  Graph* g = a.graph();
  Mat out = a.value();
  switch (kind) {
    case Activation::Sigmoid:
      for (auto& x : out) x = 1.0 / (1.0 + std::exp(-x));
      break;
    case Activation::Tanh:
      for (auto& x : out) x = std::tanh(x);
      break;
    case Activation::Relu:
      for (auto& x : out) x = x > 0.0 ? x : 0.0;
      break;
  }
  const int na = a.node();
  const Mat ov = out;
  return detail::attach(g, std::move(out), [na, ov, kind](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da = d;
    for (int i = 0; i < da.rows(); ++i)
      for (int j = 0; j < da.cols(); ++j) {
        const double y = ov(i, j);
        switch (kind) {
          case Activation::Sigmoid: da(i, j) *= y * (1.0 - y); break;
          case Activation::Tanh: da(i, j) *= 1.0 - y * y; break;
          case Activation::Relu: da(i, j) *= y > 0.0 ? 1.0 : 0.0; break;
        }
      }
    gr.accumulate(na, da);
  });
}

// Row-wise softmax with max subtraction. Rows sum to 1.
inline Tensor row_softmax(const Tensor& a) {
  if (a.cols() < 1) throw ShapeError("row_softmax: empty rows");
  for (double x : a.value())
    if (!std::isfinite(x)) throw NumericError("row_softmax: non-finite input");
  Graph* g = a.graph();
  Mat out = a.value();
  for (int i = 0; i < out.rows(); ++i) {
    double m = out(i, 0);
    for (int j = 1; j < out.cols(); ++j) m = std::max(m, out(i, j));
    double denom = 0.0;
    for (int j = 0; j < out.cols(); ++j) {
      out(i, j) = std::exp(out(i, j) - m);
      denom += out(i, j);
    }
    for (int j = 0; j < out.cols(); ++j) out(i, j) /= denom;
  }
  const int na = a.node();
  const Mat ov = out;
  return detail::attach(g, std::move(out), [na, ov](Graph& gr, const Mat& d) {
    if (na < 0) return;
    // dX(i,j) = Y(i,j) * (dY(i,j) - sum_k dY(i,k) Y(i,k))
    Mat da(d.rows(), d.cols());
    for (int i = 0; i < d.rows(); ++i) {
      double dot = 0.0;
      for (int k = 0; k < d.cols(); ++k) dot += d(i, k) * ov(i, k);
      for (int j = 0; j < d.cols(); ++j) da(i, j) = ov(i, j) * (d(i, j) - dot);
    }
    gr.accumulate(na, da);
  });
}

// Inverted dropout: survivors scale by 1/(1-rate) at training time so that
// evaluation is the identity.
inline Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) {
    Graph* g = a.graph();
    const int na = a.node();
    return detail::attach(g, a.value(), [na](Graph& gr, const Mat& d) {
      if (na >= 0) gr.accumulate(na, d);
    });
  }
  Graph* g = a.graph();
  const double keep_scale = 1.0 / (1.0 - rate);
  Mat mask(a.rows(), a.cols());
  for (auto& m : mask) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
  Mat out = a.value();
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= mask(i, j);
  const int na = a.node();
  return detail::attach(g, std::move(out), [na, mask](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da = d;
    for (int i = 0; i < da.rows(); ++i)
      for (int j = 0; j < da.cols(); ++j) da(i, j) *= mask(i, j);
    gr.accumulate(na, da);
  });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty part list");
  const int m = parts[0].rows();
  int total = 0;
  Graph* g = nullptr;
  for (const auto& p : parts) {
    if (p.rows() != m)
      throw ShapeError("concat_cols: row mismatch " + parts[0].value().shape_str() +
                       " vs " + p.value().shape_str());
    total += p.cols();
    if (p.attached()) {
      if (g && g != p.graph()) throw UsageError("concat_cols mixes graphs");
      g = p.graph();
    }
  }
  Mat out(m, total);
  std::vector<int> nodes;
  std::vector<int> widths;
  int off = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < p.cols(); ++j) out(i, off + j) = p.value()(i, j);
    nodes.push_back(p.node());
    widths.push_back(p.cols());
    off += p.cols();
  }
  return detail::attach(g, std::move(out), [nodes, widths, m](Graph& gr, const Mat& d) {
    int start = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] >= 0) {
        Mat part(m, widths[k]);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < widths[k]; ++j) part(i, j) = d(i, start + j);
        gr.accumulate(nodes[k], part);
      }
      start += widths[k];
    }
  });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty part list");
  const int n = parts[0].cols();
  int total = 0;
  Graph* g = nullptr;
  for (const auto& p : parts) {
    if (p.cols() != n)
      throw ShapeError("concat_rows: column mismatch " + parts[0].value().shape_str() +
                       " vs " + p.value().shape_str());
    total += p.rows();
    if (p.attached()) {
      if (g && g != p.graph()) throw UsageError("concat_rows mixes graphs");
      g = p.graph();
    }
  }
  Mat out(total, n);
  std::vector<int> nodes;
  std::vector<int> heights;
  int off = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < n; ++j) out(off + i, j) = p.value()(i, j);
    nodes.push_back(p.node());
    heights.push_back(p.rows());
    off += p.rows();
  }
  return detail::attach(g, std::move(out), [nodes, heights, n](Graph& gr, const Mat& d) {
    int start = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k] >= 0) {
        Mat part(heights[k], n);
        for (int i = 0; i < heights[k]; ++i)
          for (int j = 0; j < n; ++j) part(i, j) = d(start + i, j);
        gr.accumulate(nodes[k], part);
      }
      start += heights[k];
    }
  });
}

// Copies the half-open block [r0,r1) x [c0,c1); backward scatters into it.
inline Tensor slice(const Tensor& a, int r0, int r1, int c0, int c1) {
  if (r0 < 0 || c0 < 0 || r1 > a.rows() || c1 > a.cols() || r0 >= r1 || c0 >= c1)
    throw ShapeError("slice: block [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ")x[" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") out of range for " + a.value().shape_str());
  Graph* g = a.graph();
  Mat out(r1 - r0, c1 - c0);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = a.value()(r0 + i, c0 + j);
  const int na = a.node();
  const int ar = a.rows(), ac = a.cols();
  return detail::attach(g, std::move(out), [na, r0, c0, ar, ac](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da(ar, ac);
    for (int i = 0; i < d.rows(); ++i)
      for (int j = 0; j < d.cols(); ++j) da(r0 + i, c0 + j) = d(i, j);
    gr.accumulate(na, da);
  });
}

// Row-major reshape; element order is preserved.
inline Tensor reshape(const Tensor& a, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != a.value().size())
    throw ShapeError("reshape: " + a.value().shape_str() + " to " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  Graph* g = a.graph();
  Mat out(rows, cols);
  const double* src = a.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = src[i];
  const int na = a.node();
  const int ar = a.rows(), ac = a.cols();
  return detail::attach(g, std::move(out), [na, ar, ac](Graph& gr, const Mat& d) {
    if (na < 0) return;
    Mat da(ar, ac);
    for (std::size_t i = 0; i < da.size(); ++i) da.data()[i] = d.data()[i];
    gr.accumulate(na, da);
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& a) {
  Graph* g = a.graph();
  double s = 0.0;
  for (double x : a.value()) s += x;
  const int na = a.node();
  const int ar = a.rows(), ac = a.cols();
  return detail::attach(g, Mat(1, 1, s), [na, ar, ac](Graph& gr, const Mat& d) {
    if (na < 0) return;
    gr.accumulate(na, Mat(ar, ac, d(0, 0)));
  });
}

inline Tensor mean(const Tensor& a) {
  return affine(sum(a), 1.0 / static_cast<double>(a.value().size()), 0.0);
}

// Detached 1x1 constant, handy for scalar arithmetic against graph tensors.
inline Tensor scalar_const(double v) { return Tensor(Mat(1, 1, v)); }

}  // namespace mmba
