#pragma once

#include <utility>
#include <vector>

#include "mmba/errors.hpp"
#include "mmba/tensor.hpp"

namespace mmba {

// Gated recurrent unit cell parameters. T is Mat for stored weights and
// Tensor once bound into a graph for a training step.
template <class T>
struct GruCell {
  T wz, uz, bz;  // update gate
  T wr, ur, br;  // reset gate
  T wc, uc, bc;  // candidate state

  // Canonical parameter order; serialization and the optimizer rely on it.
  template <class F>
  void visit(F&& f) {
    f(wz); f(uz); f(bz);
    f(wr); f(ur); f(br);
    f(wc); f(uc); f(bc);
  }
  template <class F>
  void visit(F&& f) const {
    f(wz); f(uz); f(bz);
    f(wr); f(ur); f(br);
    f(wc); f(uc); f(bc);
  }

  int hidden() const { return uz.cols(); }
  int input_width() const { return wz.rows(); }
};

// One modality branch: bidirectional GRU, concatenation, dense projection.
template <class T>
struct ModalityEncoder {
  GruCell<T> fwd, bwd;
  T proj_w;  // 2h x d_proj
  T proj_b;  // 1 x d_proj

  double dropout_rate = 0.3;
  Activation act = Activation::Relu;
  bool dropout_after_gru = true;   // between concatenated states and dense
  bool dropout_after_proj = true;  // after the dense projection

  template <class F>
  void visit(F&& f) {
    fwd.visit(f);
    bwd.visit(f);
    f(proj_w);
    f(proj_b);
  }
  template <class F>
  void visit(F&& f) const {
    fwd.visit(f);
    bwd.visit(f);
    f(proj_w);
    f(proj_b);
  }

  int proj_width() const { return proj_w.cols(); }
};

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases.
inline Mat init_weight(int rows, int cols, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(rows));
  return Mat::uniform(rows, cols, -s, s, rng);
}

inline GruCell<Mat> init_gru(int d_in, int h, Rng& rng) {
  GruCell<Mat> c;
  c.wz = init_weight(d_in, h, rng);
  c.uz = init_weight(h, h, rng);
  c.bz = Mat(1, h);
  c.wr = init_weight(d_in, h, rng);
  c.ur = init_weight(h, h, rng);
  c.br = Mat(1, h);
  c.wc = init_weight(d_in, h, rng);
  c.uc = init_weight(h, h, rng);
  c.bc = Mat(1, h);
  return c;
}

inline GruCell<Tensor> bind(Graph& g, const GruCell<Mat>& c) {
  GruCell<Tensor> out;
  out.wz = g.var(c.wz); out.uz = g.var(c.uz); out.bz = g.var(c.bz);
  out.wr = g.var(c.wr); out.ur = g.var(c.ur); out.br = g.var(c.br);
  out.wc = g.var(c.wc); out.uc = g.var(c.uc); out.bc = g.var(c.bc);
  return out;
}

inline ModalityEncoder<Tensor> bind(Graph& g, const ModalityEncoder<Mat>& e) {
  ModalityEncoder<Tensor> out;
  out.fwd = bind(g, e.fwd);
  out.bwd = bind(g, e.bwd);
  out.proj_w = g.var(e.proj_w);
  out.proj_b = g.var(e.proj_b);
  out.dropout_rate = e.dropout_rate;
  out.act = e.act;
  out.dropout_after_gru = e.dropout_after_gru;
  out.dropout_after_proj = e.dropout_after_proj;
  return out;
}

// Single GRU step on a 1 x d_in input row and 1 x h previous state:
//   z = sigma(x Wz + h Uz + bz)
//   r = sigma(x Wr + h Ur + br)
//   c = tanh(x Wc + (r . h) Uc + bc)
//   h' = (1 - z) . h + z . c
inline Tensor gru_step(const GruCell<Tensor>& cell, const Tensor& x,
                       const Tensor& h_prev) {
  Tensor z = activation(
      Activation::Sigmoid,
      add_rowvec(add(matmul(x, cell.wz), matmul(h_prev, cell.uz)), cell.bz));
  Tensor r = activation(
      Activation::Sigmoid,
      add_rowvec(add(matmul(x, cell.wr), matmul(h_prev, cell.ur)), cell.br));
  Tensor cand = activation(
      Activation::Tanh,
      add_rowvec(add(matmul(x, cell.wc), matmul(hadamard(r, h_prev), cell.uc)),
                 cell.bc));
  return add(hadamard(affine(z, -1.0, 1.0), h_prev), hadamard(z, cand));
}

// Runs the cell over the rows of x in the given order, zero initial state.
// Returns one hidden-state row per input row, at the original row positions.
inline std::vector<Tensor> gru_pass(const GruCell<Tensor>& cell, const Tensor& x,
                                    bool reversed) {
  const int n = x.rows();
  const int h = cell.hidden();
  std::vector<Tensor> states(static_cast<std::size_t>(n));
  Tensor hidden(Mat(1, h));
  for (int step = 0; step < n; ++step) {
    const int t = reversed ? n - 1 - step : step;
    Tensor xt = slice(x, t, t + 1, 0, x.cols());
    hidden = gru_step(cell, xt, hidden);
    states[static_cast<std::size_t>(t)] = hidden;
  }
  return states;
}

// Full modality branch: Bi-GRU states concatenated per position (N x 2h),
// then dense projection to N x d_proj with activation and dropout.
inline Tensor encode_modality(const ModalityEncoder<Tensor>& enc, const Tensor& x,
                              bool training, Rng& rng) {
  if (x.rows() < 1) throw ShapeError("encode_modality: empty sequence");
  if (x.cols() != enc.fwd.input_width())
    throw ShapeError("encode_modality: input width " + std::to_string(x.cols()) +
                     " does not match cell input width " +
                     std::to_string(enc.fwd.input_width()));
  std::vector<Tensor> f = gru_pass(enc.fwd, x, /*reversed=*/false);
  std::vector<Tensor> b = gru_pass(enc.bwd, x, /*reversed=*/true);
  std::vector<Tensor> rows;
  rows.reserve(f.size());
  for (std::size_t t = 0; t < f.size(); ++t)
    rows.push_back(concat_cols({f[t], b[t]}));
  Tensor states = concat_rows(rows);
  if (enc.dropout_after_gru)
    states = dropout(states, enc.dropout_rate, rng, training);
  Tensor projected =
      activation(enc.act, add_rowvec(matmul(states, enc.proj_w), enc.proj_b));
  if (enc.dropout_after_proj)
    projected = dropout(projected, enc.dropout_rate, rng, training);
  return projected;
}

}  // namespace mmba
