#pragma once

#include <vector>

#include "mmba/errors.hpp"
#include "mmba/tensor.hpp"

namespace mmba {

// Intermediate products of one bi-modal attention block, kept for
// inspection and testing. All row-stochastic matrices live in K1/K2.
struct PairAttentionTrace {
  Tensor m1, m2;   // N x N matching matrices
  Tensor k1, k2;   // row-stochastic attention weights
  Tensor o1, o2;   // attended representations
  Tensor a1, a2;   // gated (Hadamard) outputs
  Tensor fused;    // N x 2d concatenation of a1, a2
};

// Cross-modal attention between two N x d sequences:
//   M1 = Xp Xq^T      K1 = row_softmax(M1)   O1 = K1 Xq   A1 = O1 . Xp
//   M2 = Xq Xp^T      K2 = row_softmax(M2)   O2 = K2 Xp   A2 = O2 . Xq
//   fused = [A1 | A2]
inline PairAttentionTrace pair_attention(const Tensor& xp, const Tensor& xq) {
  check_same_shape("pair_attention", xp.value(), xq.value());
  PairAttentionTrace t;
  t.m1 = matmul(xp, transpose(xq));
  t.m2 = matmul(xq, transpose(xp));
  t.k1 = row_softmax(t.m1);
  t.k2 = row_softmax(t.m2);
  t.o1 = matmul(t.k1, xq);
  t.o2 = matmul(t.k2, xp);
  t.a1 = hadamard(t.o1, xp);
  t.a2 = hadamard(t.o2, xq);
  t.fused = concat_cols({t.a1, t.a2});
  return t;
}

// Full tri-modal fusion: the three pairwise blocks plus the raw embeddings,
// in the frozen column order (VL, AV, AL, V, A, L). Output is N x 9d.
inline Tensor mmms_ba_fuse(const Tensor& v, const Tensor& l, const Tensor& a) {
  check_same_shape("mmms_ba_fuse", v.value(), l.value());
  check_same_shape("mmms_ba_fuse", v.value(), a.value());
  PairAttentionTrace vl = pair_attention(v, l);
  PairAttentionTrace av = pair_attention(a, v);
  PairAttentionTrace al = pair_attention(a, l);
  return concat_cols({vl.fused, av.fused, al.fused, v, a, l});
}

// Self-attention over the three modality rows of one sequence position.
// Input is 3 x r (rows: one per modality); output is the row-major flatten
// of [A | X], shape 1 x 6r.
inline Tensor mmus_sa_block(const Tensor& xp) {
  if (xp.rows() != 3)
    throw ShapeError("mmus_sa_block: expected 3 modality rows, got " +
                     xp.value().shape_str());
  Tensor m = matmul(xp, transpose(xp));
  Tensor n = row_softmax(m);
  Tensor o = matmul(n, xp);
  Tensor a = hadamard(o, xp);
  const int r = xp.cols();
  return concat_cols({reshape(a, 1, 3 * r), reshape(xp, 1, 3 * r)});
}

// Self-attention over the N positions of a single modality. The caller
// concatenates per-modality outputs with the raw embeddings.
inline Tensor ms_sa_block(const Tensor& x) {
  if (x.rows() < 1) throw ShapeError("ms_sa_block: empty sequence");
  Tensor m = matmul(x, transpose(x));
  Tensor n = row_softmax(m);
  Tensor o = matmul(n, x);
  return hadamard(o, x);
}

}  // namespace mmba
