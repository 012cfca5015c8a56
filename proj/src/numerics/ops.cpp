#include "hictl/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hictl/numerics/kernels.hpp"

namespace hictl::num::ops {

namespace k = kernels::parallel;

namespace {

struct MatDims {
  int rows;
  int cols;
};

template <class T>
MatDims mat_dims(const Tensor<T>& t, const char* what) {
  if (t.rank() == 1) return {1, t.dims()[0]};
  if (t.rank() == 2) return {t.dims()[0], t.dims()[1]};
  throw DimError(std::string(what) + ": expected a vector or matrix, got " + shape_string(t.dims()));
}

Shape result_shape(bool vector_result, int rows, int cols) {
  return vector_result ? Shape{cols} : Shape{rows, cols};
}

}  // namespace

template <class T>
Var matmul(Tape<T>& tp, Var a, Var b) {
  const auto& av = tp.value(a);
  const auto& bv = tp.value(b);
  const MatDims ad = mat_dims(av, "matmul lhs");
  const MatDims bd = mat_dims(bv, "matmul rhs");
  if (bv.rank() != 2 || ad.cols != bd.rows) {
    throw DimError("matmul: " + shape_string(av.dims()) + " x " + shape_string(bv.dims()));
  }
  const int m = ad.rows, kk = ad.cols, n = bd.cols;
  Tensor<T> out(result_shape(av.rank() == 1, m, n));
  k::matmul(av.data(), bv.data(), out.data(), m, kk, n, false);
  return tp.push(std::move(out), {a, b}, [a, b, m, kk, n, out_id = int(tp.size())](Tape<T>& t) {
    const Var o{out_id};
    const T* g = t.grad(o).data();
    if (t.requires_grad(a)) k::matmul_nt(g, t.value(b).data(), t.grad_acc(a).data(), m, n, kk, true);
    if (t.requires_grad(b)) k::matmul_tn(t.value(a).data(), g, t.grad_acc(b).data(), m, kk, n, true);
  });
}

template <class T>
Var matmul_nt(Tape<T>& tp, Var a, Var b) {
  const auto& av = tp.value(a);
  const auto& bv = tp.value(b);
  const MatDims ad = mat_dims(av, "matmul_nt lhs");
  const MatDims bd = mat_dims(bv, "matmul_nt rhs");
  if (ad.cols != bd.cols) {
    throw DimError("matmul_nt: " + shape_string(av.dims()) + " x " + shape_string(bv.dims()) + "^T");
  }
  const int m = ad.rows, kk = ad.cols, n = bd.rows;
  Tensor<T> out(result_shape(av.rank() == 1, m, n));
  k::matmul_nt(av.data(), bv.data(), out.data(), m, kk, n, false);
  return tp.push(std::move(out), {a, b}, [a, b, m, kk, n, out_id = int(tp.size())](Tape<T>& t) {
    const T* g = t.grad(Var{out_id}).data();
    // dA[m,k] = G[m,n] * B[n,k];  dB[n,k] = G^T[n,m] * A[m,k]
    if (t.requires_grad(a)) k::matmul(g, t.value(b).data(), t.grad_acc(a).data(), m, n, kk, true);
    if (t.requires_grad(b)) k::matmul_tn(g, t.value(a).data(), t.grad_acc(b).data(), m, n, kk, true);
  });
}

template <class T>
Var linear(Tape<T>& tp, Var x, Var w, Var bias) {
  const auto& xv = tp.value(x);
  const auto& wv = tp.value(w);
  const MatDims xd = mat_dims(xv, "linear input");
  if (wv.rank() != 2 || wv.dims()[0] != xd.cols) {
    throw DimError("linear: input " + shape_string(xv.dims()) + " weight " + shape_string(wv.dims()));
  }
  const int m = xd.rows, in = xd.cols, outc = wv.dims()[1];
  if (bias.valid()) require_same_dims(tp.value(bias).dims(), Shape{outc}, "linear bias");
  Tensor<T> out(result_shape(xv.rank() == 1, m, outc));
  if (bias.valid()) {
    const T* bv = tp.value(bias).data();
    for (int i = 0; i < m; ++i) std::copy(bv, bv + outc, out.data() + static_cast<std::size_t>(i) * outc);
  }
  k::matmul(xv.data(), wv.data(), out.data(), m, in, outc, bias.valid());
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x, w, bias.valid() ? bias : x}, [=](Tape<T>& t) {
    const T* g = t.grad(Var{out_id}).data();
    if (t.requires_grad(x)) k::matmul_nt(g, t.value(w).data(), t.grad_acc(x).data(), m, outc, in, true);
    if (t.requires_grad(w)) k::matmul_tn(t.value(x).data(), g, t.grad_acc(w).data(), m, in, outc, true);
    if (bias.valid() && t.requires_grad(bias)) {
      T* gb = t.grad_acc(bias).data();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < outc; ++j) gb[j] += g[static_cast<std::size_t>(i) * outc + j];
      }
    }
  });
}

template <class T>
Var add(Tape<T>& tp, Var a, Var b) {
  const auto& av = tp.value(a);
  const auto& bv = tp.value(b);
  require_same_dims(av.dims(), bv.dims(), "add");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {a, b}, [=](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    for (Var in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      auto& gi = t.grad_acc(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

template <class T>
Var add_row(Tape<T>& tp, Var x, Var row) {
  const auto& xv = tp.value(x);
  const MatDims xd = mat_dims(xv, "add_row input");
  require_same_dims(tp.value(row).dims(), Shape{xd.cols}, "add_row vector");
  Tensor<T> out = xv;
  const T* rv = tp.value(row).data();
  for (int i = 0; i < xd.rows; ++i) {
    for (int j = 0; j < xd.cols; ++j) out[static_cast<std::size_t>(i) * xd.cols + j] += rv[j];
  }
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x, row}, [=](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    if (t.requires_grad(x)) {
      auto& gx = t.grad_acc(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(row)) {
      T* gr = t.grad_acc(row).data();
      for (int i = 0; i < xd.rows; ++i) {
        for (int j = 0; j < xd.cols; ++j) gr[j] += g[static_cast<std::size_t>(i) * xd.cols + j];
      }
    }
  });
}

template <class T>
Var scale(Tape<T>& tp, Var a, T factor) {
  Tensor<T> out = tp.value(a);
  for (auto& v : out.values()) v *= factor;
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {a}, [=](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    auto& ga = t.grad_acc(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

template <class T>
Var sum(Tape<T>& tp, std::span<const Var> scalars) {
  T total = T(0);
  for (Var s : scalars) total += tp.value(s).item();
  const int out_id = int(tp.size());
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  bool needs = false;
  for (Var s : inputs) needs = needs || tp.requires_grad(s);
  if (!needs || !tp.recording()) return tp.constant(Tensor<T>::scalar(total));
  // push() only inspects the initializer list; pass one input that needs grad.
  Var witness = *std::find_if(inputs.begin(), inputs.end(), [&](Var s) { return tp.requires_grad(s); });
  return tp.push(Tensor<T>::scalar(total), {witness}, [inputs = std::move(inputs), out_id](Tape<T>& t) {
    const T g = t.grad(Var{out_id})[0];
    for (Var s : inputs) {
      if (t.requires_grad(s)) t.grad_acc(s)[0] += g;
    }
  });
}

template <class T>
Var gelu(Tape<T>& tp, Var x) {
  const auto& xv = tp.value(x);
  Tensor<T> out(xv.dims());
  k::gelu(xv.data(), out.data(), xv.size());
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x}, [=](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    k::gelu_backward(t.value(x).data(), g.data(), t.grad_acc(x).data(), g.size());
  });
}

template <class T>
Var layer_norm(Tape<T>& tp, Var x, Var gamma, Var beta, T eps) {
  const auto& xv = tp.value(x);
  const MatDims d = mat_dims(xv, "layer_norm");
  require_same_dims(tp.value(gamma).dims(), Shape{d.cols}, "layer_norm gamma");
  require_same_dims(tp.value(beta).dims(), Shape{d.cols}, "layer_norm beta");
  Tensor<T> out(xv.dims());
  std::vector<T> mean(static_cast<std::size_t>(d.rows));
  std::vector<T> rstd(static_cast<std::size_t>(d.rows));
  k::layer_norm(xv.data(), tp.value(gamma).data(), tp.value(beta).data(), out.data(), mean.data(),
                rstd.data(), d.rows, d.cols, eps);
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x, gamma, beta},
                 [=, mean = std::move(mean), rstd = std::move(rstd)](Tape<T>& t) {
                   const auto& g = t.grad(Var{out_id});
                   // dx is always needed to keep the kernel simple; discard if unused.
                   Tensor<T> scratch;
                   T* dx;
                   if (t.requires_grad(x)) {
                     dx = t.grad_acc(x).data();
                   } else {
                     scratch = Tensor<T>(t.value(x).dims());
                     dx = scratch.data();
                   }
                   T* dg = t.requires_grad(gamma) ? t.grad_acc(gamma).data() : nullptr;
                   T* db = t.requires_grad(beta) ? t.grad_acc(beta).data() : nullptr;
                   k::layer_norm_backward(t.value(x).data(), t.value(gamma).data(), mean.data(),
                                          rstd.data(), g.data(), dx, dg, db, d.rows, d.cols);
                 });
}

template <class T>
Var gather_rows(Tape<T>& tp, Var table, std::span<const int> ids) {
  const auto& tv = tp.value(table);
  if (tv.rank() != 2) throw DimError("gather_rows: table must be a matrix");
  const int rows = tv.dims()[0], cols = tv.dims()[1];
  std::vector<int> idx(ids.begin(), ids.end());
  Tensor<T> out({static_cast<int>(idx.size()), cols});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= rows) {
      throw DimError("gather_rows: id " + std::to_string(idx[r]) + " outside table of " +
                     std::to_string(rows) + " rows");
    }
    const auto src = tv.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(r)).begin());
  }
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {table}, [=, idx = std::move(idx)](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    auto& gt = t.grad_acc(table);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto src = g.row(static_cast<int>(r));
      auto dst = gt.row(idx[r]);
      for (int j = 0; j < cols; ++j) dst[static_cast<std::size_t>(j)] += src[static_cast<std::size_t>(j)];
    }
  });
}

template <class T>
Var select_row(Tape<T>& tp, Var x, int r) {
  const auto& xv = tp.value(x);
  const MatDims d = mat_dims(xv, "select_row");
  if (r < 0 || r >= d.rows) throw DimError("select_row: row " + std::to_string(r) + " out of range");
  const auto src = xv.row(r);
  Tensor<T> out({d.cols}, std::vector<T>(src.begin(), src.end()));
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x}, [=](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    auto dst = t.grad_acc(x).row(r);
    for (int j = 0; j < d.cols; ++j) dst[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(j)];
  });
}

template <class T>
Var stack_rows(Tape<T>& tp, std::span<const Var> rows) {
  if (rows.empty()) throw DimError("stack_rows: no rows");
  const int cols = static_cast<int>(tp.value(rows[0]).size());
  Tensor<T> out({static_cast<int>(rows.size()), cols});
  bool needs = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& v = tp.value(rows[r]);
    if (v.rank() != 1 || static_cast<int>(v.size()) != cols) {
      throw DimError("stack_rows: row " + std::to_string(r) + " has dims " + shape_string(v.dims()));
    }
    std::copy(v.values().begin(), v.values().end(), out.row(static_cast<int>(r)).begin());
    needs = needs || tp.requires_grad(rows[r]);
  }
  if (!needs || !tp.recording()) return tp.constant(std::move(out));
  std::vector<Var> inputs(rows.begin(), rows.end());
  Var witness = *std::find_if(inputs.begin(), inputs.end(), [&](Var s) { return tp.requires_grad(s); });
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {witness}, [inputs = std::move(inputs), out_id, cols](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      if (!t.requires_grad(inputs[r])) continue;
      auto& gi = t.grad_acc(inputs[r]);
      const auto src = g.row(static_cast<int>(r));
      for (int j = 0; j < cols; ++j) gi[static_cast<std::size_t>(j)] += src[static_cast<std::size_t>(j)];
    }
  });
}

template <class T>
Var l2_normalize_rows(Tape<T>& tp, Var x) {
  const auto& xv = tp.value(x);
  const MatDims d = mat_dims(xv, "l2_normalize_rows");
  Tensor<T> out(xv.dims());
  std::vector<T> norms(static_cast<std::size_t>(d.rows));
  for (int i = 0; i < d.rows; ++i) {
    const auto src = xv.row(i);
    T sq = T(0);
    for (T v : src) sq += v * v;
    const T nrm = std::sqrt(sq);
    if (!(nrm > T(0))) throw DegenerateInputError("cosine similarity of a zero-norm vector");
    norms[static_cast<std::size_t>(i)] = nrm;
    auto dst = out.row(i);
    for (int j = 0; j < d.cols; ++j) dst[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(j)] / nrm;
  }
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x}, [=, norms = std::move(norms)](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    const auto& y = t.value(Var{out_id});
    auto& gx = t.grad_acc(x);
    for (int i = 0; i < d.rows; ++i) {
      const auto gr = g.row(i);
      const auto yr = y.row(i);
      T proj = T(0);
      for (int j = 0; j < d.cols; ++j) proj += yr[static_cast<std::size_t>(j)] * gr[static_cast<std::size_t>(j)];
      auto dst = gx.row(i);
      const T inv = T(1) / norms[static_cast<std::size_t>(i)];
      for (int j = 0; j < d.cols; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        dst[jj] += (gr[jj] - yr[jj] * proj) * inv;
      }
    }
  });
}

template <class T>
Var cosine_matrix(Tape<T>& tp, Var a, Var b) {
  const Var na = l2_normalize_rows(tp, a);
  const Var nb = a.id == b.id ? na : l2_normalize_rows(tp, b);
  return matmul_nt(tp, na, nb);
}

template <class T>
Var attention(Tape<T>& tp, Var q, Var kv_k, Var v, int heads, bool causal) {
  const auto& qv = tp.value(q);
  const auto& kv = tp.value(kv_k);
  const auto& vv = tp.value(v);
  const MatDims qd = mat_dims(qv, "attention q");
  const MatDims kd = mat_dims(kv, "attention k");
  const MatDims vd = mat_dims(vv, "attention v");
  if (qd.cols != kd.cols || kd.cols != vd.cols || kd.rows != vd.rows) {
    throw DimError("attention: q " + shape_string(qv.dims()) + " k " + shape_string(kv.dims()) +
                   " v " + shape_string(vv.dims()));
  }
  if (heads <= 0 || qd.cols % heads != 0) throw DimError("attention: width not divisible by heads");
  if (causal && qd.rows != kd.rows) throw DimError("attention: causal mask needs lq == lk");
  const int lq = qd.rows, lk = kd.rows, width = qd.cols, hd = width / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(hd));

  // Contiguous per-head slices: [heads][rows][hd].
  auto split = [&](const Tensor<T>& src, int rows) {
    std::vector<T> out(static_cast<std::size_t>(heads) * rows * hd);
    for (int h = 0; h < heads; ++h) {
      for (int r = 0; r < rows; ++r) {
        const T* s = src.data() + static_cast<std::size_t>(r) * width + h * hd;
        std::copy(s, s + hd, out.data() + (static_cast<std::size_t>(h) * rows + r) * hd);
      }
    }
    return out;
  };
  std::vector<T> qh = split(qv, lq);
  std::vector<T> kh = split(kv, lk);
  std::vector<T> vh = split(vv, lk);

  std::vector<T> probs(static_cast<std::size_t>(heads) * lq * lk);
  Tensor<T> out(qv.dims());
  std::vector<T> ctx(static_cast<std::size_t>(lq) * hd);
  for (int h = 0; h < heads; ++h) {
    T* p = probs.data() + static_cast<std::size_t>(h) * lq * lk;
    const T* qp = qh.data() + static_cast<std::size_t>(h) * lq * hd;
    const T* kp = kh.data() + static_cast<std::size_t>(h) * lk * hd;
    const T* vp = vh.data() + static_cast<std::size_t>(h) * lk * hd;
    k::matmul_nt(qp, kp, p, lq, hd, lk, false);
    for (std::size_t i = 0; i < static_cast<std::size_t>(lq) * lk; ++i) p[i] *= inv_sqrt;
    if (causal) {
      for (int i = 0; i < lq; ++i) {
        for (int j = i + 1; j < lk; ++j) p[static_cast<std::size_t>(i) * lk + j] = -std::numeric_limits<T>::infinity();
      }
    }
    k::softmax_rows(p, lq, lk);
    k::matmul(p, vp, ctx.data(), lq, lk, hd, false);
    for (int r = 0; r < lq; ++r) {
      std::copy(ctx.data() + static_cast<std::size_t>(r) * hd, ctx.data() + static_cast<std::size_t>(r + 1) * hd,
                out.data() + static_cast<std::size_t>(r) * width + h * hd);
    }
  }

  const int out_id = int(tp.size());
  return tp.push(std::move(out), {q, kv_k, v},
                 [=, qh = std::move(qh), kh = std::move(kh), vh = std::move(vh),
                  probs = std::move(probs)](Tape<T>& t) {
                   const auto& g = t.grad(Var{out_id});
                   const bool need_q = t.requires_grad(q);
                   const bool need_k = t.requires_grad(kv_k);
                   const bool need_v = t.requires_grad(v);
                   std::vector<T> go(static_cast<std::size_t>(lq) * hd);
                   std::vector<T> dp(static_cast<std::size_t>(lq) * lk);
                   std::vector<T> dq(static_cast<std::size_t>(lq) * hd);
                   std::vector<T> dk(static_cast<std::size_t>(lk) * hd);
                   std::vector<T> dv(static_cast<std::size_t>(lk) * hd);
                   for (int h = 0; h < heads; ++h) {
                     const T* p = probs.data() + static_cast<std::size_t>(h) * lq * lk;
                     const T* qp = qh.data() + static_cast<std::size_t>(h) * lq * hd;
                     const T* kp = kh.data() + static_cast<std::size_t>(h) * lk * hd;
                     const T* vp = vh.data() + static_cast<std::size_t>(h) * lk * hd;
                     for (int r = 0; r < lq; ++r) {
                       const T* s = g.data() + static_cast<std::size_t>(r) * width + h * hd;
                       std::copy(s, s + hd, go.data() + static_cast<std::size_t>(r) * hd);
                     }
                     if (need_v) {
                       k::matmul_tn(p, go.data(), dv.data(), lq, lk, hd, false);
                       auto& gv = t.grad_acc(v);
                       for (int r = 0; r < lk; ++r) {
                         T* dst = gv.data() + static_cast<std::size_t>(r) * width + h * hd;
                         const T* src = dv.data() + static_cast<std::size_t>(r) * hd;
                         for (int j = 0; j < hd; ++j) dst[j] += src[j];
                       }
                     }
                     if (!need_q && !need_k) continue;
                     k::matmul_nt(go.data(), vp, dp.data(), lq, hd, lk, false);
                     // Softmax backward, then the 1/sqrt(d) scale.
                     for (int i = 0; i < lq; ++i) {
                       T* dpr = dp.data() + static_cast<std::size_t>(i) * lk;
                       const T* pr = p + static_cast<std::size_t>(i) * lk;
                       T dotp = T(0);
                       for (int j = 0; j < lk; ++j) dotp += dpr[j] * pr[j];
                       for (int j = 0; j < lk; ++j) dpr[j] = pr[j] * (dpr[j] - dotp) * inv_sqrt;
                     }
                     if (need_q) {
                       k::matmul(dp.data(), kp, dq.data(), lq, lk, hd, false);
                       auto& gq = t.grad_acc(q);
                       for (int r = 0; r < lq; ++r) {
                         T* dst = gq.data() + static_cast<std::size_t>(r) * width + h * hd;
                         const T* src = dq.data() + static_cast<std::size_t>(r) * hd;
                         for (int j = 0; j < hd; ++j) dst[j] += src[j];
                       }
                     }
                     if (need_k) {
                       k::matmul_tn(dp.data(), qp, dk.data(), lq, lk, hd, false);
                       auto& gk = t.grad_acc(kv_k);
                       for (int r = 0; r < lk; ++r) {
                         T* dst = gk.data() + static_cast<std::size_t>(r) * width + h * hd;
                         const T* src = dk.data() + static_cast<std::size_t>(r) * hd;
                         for (int j = 0; j < hd; ++j) dst[j] += src[j];
                       }
                     }
                   }
                 });
}

template <class T>
Var cross_entropy_rows(Tape<T>& tp, Var logits, std::span<const int> targets) {
  const auto& lv = tp.value(logits);
  const MatDims d = mat_dims(lv, "cross_entropy_rows");
  const int m = d.rows;
  if (static_cast<int>(targets.size()) != m) {
    throw DimError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets for " +
                   std::to_string(m) + " rows");
  }
  if (m == 0) return tp.constant(Tensor<T>::scalar(T(0)));
  const int n = d.cols;
  std::vector<T> probs(lv.values());
  k::softmax_rows(probs.data(), m, n);
  std::vector<int> tgt(targets.begin(), targets.end());
  T loss = T(0);
  for (int i = 0; i < m; ++i) {
    const int c = tgt[static_cast<std::size_t>(i)];
    if (c < 0 || c >= n) throw DimError("cross_entropy_rows: target " + std::to_string(c) + " out of range");
    // log-sum-exp directly for accuracy rather than log(prob).
    const auto row = lv.row(i);
    const T mx = *std::max_element(row.begin(), row.end());
    T s = T(0);
    for (T x : row) s += std::exp(x - mx);
    loss += (mx + std::log(s)) - row[static_cast<std::size_t>(c)];
  }
  loss /= T(m);
  const int out_id = int(tp.size());
  return tp.push(Tensor<T>::scalar(loss), {logits},
                 [=, probs = std::move(probs), tgt = std::move(tgt)](Tape<T>& t) {
                   const T g = t.grad(Var{out_id})[0] / T(m);
                   auto& gl = t.grad_acc(logits);
                   for (int i = 0; i < m; ++i) {
                     for (int j = 0; j < n; ++j) {
                       const std::size_t idx = static_cast<std::size_t>(i) * n + j;
                       gl[idx] += g * (probs[idx] - (j == tgt[static_cast<std::size_t>(i)] ? T(1) : T(0)));
                     }
                   }
                 });
}

template <class T>
Var info_nce(Tape<T>& tp, Var scores, int positive, std::span<const int> negatives, T tau) {
  const auto& sv = tp.value(scores);
  if (sv.rank() != 1) throw DimError("info_nce: scores must be a vector");
  if (!(tau > T(0))) throw ConfigError("info_nce: temperature must be positive");
  const int n = static_cast<int>(sv.size());
  if (positive < 0 || positive >= n) throw DimError("info_nce: positive index out of range");
  if (negatives.empty()) return tp.constant(Tensor<T>::scalar(T(0)));
  std::vector<int> members;
  members.reserve(negatives.size() + 1);
  members.push_back(positive);
  for (int j : negatives) {
    if (j < 0 || j >= n || j == positive) throw DimError("info_nce: bad negative index");
    members.push_back(j);
  }
  T mx = -std::numeric_limits<T>::infinity();
  for (int j : members) mx = std::max(mx, sv[static_cast<std::size_t>(j)] / tau);
  std::vector<T> w(members.size());
  T z = T(0);
  for (std::size_t i = 0; i < members.size(); ++i) {
    w[i] = std::exp(sv[static_cast<std::size_t>(members[i])] / tau - mx);
    z += w[i];
  }
  for (auto& x : w) x /= z;
  const T loss = mx + std::log(z) - sv[static_cast<std::size_t>(positive)] / tau;
  const int out_id = int(tp.size());
  return tp.push(Tensor<T>::scalar(std::max(loss, T(0))), {scores},
                 [=, members = std::move(members), w = std::move(w)](Tape<T>& t) {
                   const T g = t.grad(Var{out_id})[0];
                   auto& gs = t.grad_acc(scores);
                   for (std::size_t i = 0; i < members.size(); ++i) {
                     const T target = i == 0 ? T(1) : T(0);
                     gs[static_cast<std::size_t>(members[i])] += g * (w[i] - target) / tau;
                   }
                 });
}

template <class T>
Var dropout(Tape<T>& tp, Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
  const auto& xv = tp.value(x);
  std::vector<T> mask(xv.size());
  const T keep_scale = T(1.0 / (1.0 - rate));
  for (auto& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  Tensor<T> out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const int out_id = int(tp.size());
  return tp.push(std::move(out), {x}, [=, mask = std::move(mask)](Tape<T>& t) {
    const auto& g = t.grad(Var{out_id});
    auto& gx = t.grad_acc(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

#define HICTL_INSTANTIATE(T)                                                              \
  template Var matmul<T>(Tape<T>&, Var, Var);                                             \
  template Var matmul_nt<T>(Tape<T>&, Var, Var);                                          \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                                        \
  template Var add<T>(Tape<T>&, Var, Var);                                                \
  template Var add_row<T>(Tape<T>&, Var, Var);                                            \
  template Var scale<T>(Tape<T>&, Var, T);                                                \
  template Var sum<T>(Tape<T>&, std::span<const Var>);                                    \
  template Var gelu<T>(Tape<T>&, Var);                                                    \
  template Var layer_norm<T>(Tape<T>&, Var, Var, Var, T);                                 \
  template Var gather_rows<T>(Tape<T>&, Var, std::span<const int>);                       \
  template Var select_row<T>(Tape<T>&, Var, int);                                         \
  template Var stack_rows<T>(Tape<T>&, std::span<const Var>);                             \
  template Var l2_normalize_rows<T>(Tape<T>&, Var);                                       \
  template Var cosine_matrix<T>(Tape<T>&, Var, Var);                                      \
  template Var attention<T>(Tape<T>&, Var, Var, Var, int, bool);                          \
  template Var cross_entropy_rows<T>(Tape<T>&, Var, std::span<const int>);                \
  template Var info_nce<T>(Tape<T>&, Var, int, std::span<const int>, T);                  \
  template Var dropout<T>(Tape<T>&, Var, double, Rng&);

HICTL_INSTANTIATE(float)
HICTL_INSTANTIATE(double)
#undef HICTL_INSTANTIATE

}  // namespace hictl::num::ops
