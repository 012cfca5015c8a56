#pragma once

// Differentiable operations recorded on a Tape. A rank-1 operand is treated
// as a single row wherever a matrix is expected; results keep rank 1 then.

#include <span>
#include <vector>

#include "hictl/numerics/rng.hpp"
#include "hictl/numerics/tape.hpp"

namespace hictl::num::ops {

/// a[m,k] * b[k,n]
template <class T>
Var matmul(Tape<T>& tp, Var a, Var b);

/// a[m,k] * b[n,k]^T
template <class T>
Var matmul_nt(Tape<T>& tp, Var a, Var b);

/// x[m,in] * w[in,out] + bias[out]; bias may be an invalid Var.
template <class T>
Var linear(Tape<T>& tp, Var x, Var w, Var bias);

template <class T>
Var add(Tape<T>& tp, Var a, Var b);

/// x[m,n] + row[n] broadcast over every row.
template <class T>
Var add_row(Tape<T>& tp, Var x, Var row);

template <class T>
Var scale(Tape<T>& tp, Var a, T factor);

/// Sum of scalar Vars; an empty list gives a constant 0.
template <class T>
Var sum(Tape<T>& tp, std::span<const Var> scalars);

template <class T>
Var gelu(Tape<T>& tp, Var x);

/// Row-wise layer normalisation with learned gain and bias.
template <class T>
Var layer_norm(Tape<T>& tp, Var x, Var gamma, Var beta, T eps = T(1e-5));

/// Rows of table[v,d] at ids, giving [ids.size(), d]. Gradient is scattered
/// back to the selected rows only.
template <class T>
Var gather_rows(Tape<T>& tp, Var table, std::span<const int> ids);

/// Row r of x as a rank-1 vector.
template <class T>
Var select_row(Tape<T>& tp, Var x, int r);

/// Stacks equal-length vectors into a matrix.
template <class T>
Var stack_rows(Tape<T>& tp, std::span<const Var> rows);

/// Divides every row by its L2 norm. Throws DegenerateInputError on a zero row.
template <class T>
Var l2_normalize_rows(Tape<T>& tp, Var x);

/// Cosine similarity of every row of a against every row of b: [ra, rb].
template <class T>
Var cosine_matrix(Tape<T>& tp, Var a, Var b);

/// Multi-head scaled dot-product attention over already projected q[lq,h],
/// k[lk,h], v[lk,h]. With causal, query i only sees keys j <= i.
template <class T>
Var attention(Tape<T>& tp, Var q, Var k, Var v, int heads, bool causal);

/// Mean over rows of -log softmax(logits[i])[targets[i]]; 0 for no rows.
template <class T>
Var cross_entropy_rows(Tape<T>& tp, Var logits, std::span<const int> targets);

/// InfoNCE on a row of similarity scores:
///   -log( exp(s[pos]/tau) / (exp(s[pos]/tau) + sum_j exp(s[neg_j]/tau)) ).
/// Exactly 0 when negatives is empty.
template <class T>
Var info_nce(Tape<T>& tp, Var scores, int positive, std::span<const int> negatives, T tau);

/// Inverted dropout; identity when rate == 0.
template <class T>
Var dropout(Tape<T>& tp, Var x, double rate, Rng& rng);

}  // namespace hictl::num::ops
