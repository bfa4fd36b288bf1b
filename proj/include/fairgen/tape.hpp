#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fairgen/error.hpp"
#include "fairgen/mat.hpp"

namespace fairgen {

// Reverse-mode automatic differentiation over Mat-valued nodes.
//
// A Tape is built fresh for every training step: leaf nodes are created from
// parameter (or constant) matrices, ops append derived nodes, and
// backward(root) fills every node's gradient by walking the tape in reverse
// creation order (which is a valid topological order, since an op may only
// reference earlier nodes). Gradients of parameter leaves are then read back
// by the optimizer.
class Tape {
 public:
  using NodeId = int;

  // ---- leaves ---------------------------------------------------------

  NodeId input(const Mat& m) {
    nodes_.push_back(Node{m, Mat(), {}});
    return static_cast<NodeId>(nodes_.size()) - 1;
  }

  NodeId input(Mat&& m) {
    nodes_.push_back(Node{std::move(m), Mat(), {}});
    return static_cast<NodeId>(nodes_.size()) - 1;
  }

  const Mat& val(NodeId id) const { return nodes_[id].val; }

  // Valid after backward(); zero matrix if the node never received gradient.
  const Mat& grad(NodeId id) const { return nodes_[id].grad; }

  size_t node_count() const { return nodes_.size(); }

  // ---- elementwise and linear ops --------------------------------------

  NodeId add(NodeId a, NodeId b) {
    check_shape(val(a).same_shape(val(b)), "tape add");
    Mat out = val(a);
    const double* pb = val(b).data.data();
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += pb[i];
    return push(std::move(out), [this, a, b](NodeId self) {
      accum(a, nodes_[self].grad);
      accum(b, nodes_[self].grad);
    });
  }

  NodeId sub(NodeId a, NodeId b) {
    check_shape(val(a).same_shape(val(b)), "tape sub");
    Mat out = val(a);
    const double* pb = val(b).data.data();
    for (size_t i = 0; i < out.size(); ++i) out.data[i] -= pb[i];
    return push(std::move(out), [this, a, b](NodeId self) {
      accum(a, nodes_[self].grad);
      accum_scaled(b, nodes_[self].grad, -1.0);
    });
  }

  NodeId hadamard(NodeId a, NodeId b) {
    check_shape(val(a).same_shape(val(b)), "tape hadamard");
    Mat out = val(a);
    const double* pb = val(b).data.data();
    for (size_t i = 0; i < out.size(); ++i) out.data[i] *= pb[i];
    return push(std::move(out), [this, a, b](NodeId self) {
      const Mat& g = nodes_[self].grad;
      Mat ga = g;
      const double* vb = val(b).data.data();
      for (size_t i = 0; i < ga.size(); ++i) ga.data[i] *= vb[i];
      accum(a, ga);
      Mat gb = g;
      const double* va = val(a).data.data();
      for (size_t i = 0; i < gb.size(); ++i) gb.data[i] *= va[i];
      accum(b, gb);
    });
  }

  NodeId scale(NodeId a, double s) {
    Mat out = val(a);
    for (double& x : out.data) x *= s;
    return push(std::move(out), [this, a, s](NodeId self) {
      accum_scaled(a, nodes_[self].grad, s);
    });
  }

  // x (m x n) plus a bias row (1 x n) broadcast over rows.
  NodeId add_row_broadcast(NodeId x, NodeId bias) {
    check_shape(val(bias).rows == 1 && val(bias).cols == val(x).cols, "tape add_row_broadcast");
    Mat out = val(x);
    const double* pb = val(bias).row_ptr(0);
    for (int r = 0; r < out.rows; ++r) {
      double* prow = out.row_ptr(r);
      for (int c = 0; c < out.cols; ++c) prow[c] += pb[c];
    }
    return push(std::move(out), [this, x, bias](NodeId self) {
      const Mat& g = nodes_[self].grad;
      accum(x, g);
      Mat gb(1, g.cols);
      for (int r = 0; r < g.rows; ++r) {
        const double* prow = g.row_ptr(r);
        for (int c = 0; c < g.cols; ++c) gb.data[c] += prow[c];
      }
      accum(bias, gb);
    });
  }

  NodeId matmul(NodeId a, NodeId b) {
    Mat out = fairgen::matmul(val(a), val(b));
    return push(std::move(out), [this, a, b](NodeId self) {
      const Mat& g = nodes_[self].grad;
      ensure_grad(a);
      matmul_nt_accum(g, val(b), nodes_[a].grad);  // dA += dC * B^T
      ensure_grad(b);
      matmul_tn_accum(val(a), g, nodes_[b].grad);  // dB += A^T * dC
    });
  }

  // a * b^T
  NodeId matmul_nt(NodeId a, NodeId b) {
    Mat out = fairgen::matmul_nt(val(a), val(b));
    return push(std::move(out), [this, a, b](NodeId self) {
      const Mat& g = nodes_[self].grad;
      ensure_grad(a);
      matmul_accum(g, val(b), nodes_[a].grad);  // dA += dC * B
      ensure_grad(b);
      matmul_tn_accum(g, val(a), nodes_[b].grad);  // dB += dC^T * A
    });
  }

  // x * w + bias_row; the workhorse for every linear layer.
  NodeId affine(NodeId x, NodeId w, NodeId bias) {
    return add_row_broadcast(matmul(x, w), bias);
  }

  // ---- structural ops ---------------------------------------------------

  // Select rows of a table by index (embedding lookup). Indices may repeat.
  NodeId gather_rows(NodeId table, std::vector<int> ids) {
    const Mat& t = val(table);
    Mat out(static_cast<int>(ids.size()), t.cols);
    for (size_t r = 0; r < ids.size(); ++r) {
      check_shape(ids[r] >= 0 && ids[r] < t.rows, "tape gather_rows index");
      std::copy(t.row_ptr(ids[r]), t.row_ptr(ids[r]) + t.cols, out.row_ptr(static_cast<int>(r)));
    }
    return push(std::move(out), [this, table, ids = std::move(ids)](NodeId self) {
      const Mat& g = nodes_[self].grad;
      ensure_grad(table);
      Mat& gt = nodes_[table].grad;
      for (size_t r = 0; r < ids.size(); ++r) {
        const double* src = g.row_ptr(static_cast<int>(r));
        double* dst = gt.row_ptr(ids[r]);
        for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
      }
    });
  }

  // Single row as a 1 x n node.
  NodeId pick_row(NodeId x, int r) {
    const Mat& v = val(x);
    check_shape(r >= 0 && r < v.rows, "tape pick_row");
    Mat out(1, v.cols);
    std::copy(v.row_ptr(r), v.row_ptr(r) + v.cols, out.row_ptr(0));
    return push(std::move(out), [this, x, r](NodeId self) {
      const Mat& g = nodes_[self].grad;
      ensure_grad(x);
      double* dst = nodes_[x].grad.row_ptr(r);
      const double* src = g.row_ptr(0);
      for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
    });
  }

  // Columns [c0, c0+width) as an own node (attention head slicing).
  NodeId col_slice(NodeId x, int c0, int width) {
    const Mat& v = val(x);
    check_shape(c0 >= 0 && c0 + width <= v.cols, "tape col_slice");
    Mat out(v.rows, width);
    for (int r = 0; r < v.rows; ++r)
      std::copy(v.row_ptr(r) + c0, v.row_ptr(r) + c0 + width, out.row_ptr(r));
    return push(std::move(out), [this, x, c0, width](NodeId self) {
      const Mat& g = nodes_[self].grad;
      ensure_grad(x);
      Mat& gx = nodes_[x].grad;
      for (int r = 0; r < g.rows; ++r) {
        const double* src = g.row_ptr(r);
        double* dst = gx.row_ptr(r) + c0;
        for (int c = 0; c < width; ++c) dst[c] += src[c];
      }
    });
  }

  NodeId concat_cols(const std::vector<NodeId>& parts) {
    check_shape(!parts.empty(), "tape concat_cols empty");
    int rows = val(parts[0]).rows;
    int cols = 0;
    for (NodeId p : parts) {
      check_shape(val(p).rows == rows, "tape concat_cols rows");
      cols += val(p).cols;
    }
    Mat out(rows, cols);
    int off = 0;
    for (NodeId p : parts) {
      const Mat& v = val(p);
      for (int r = 0; r < rows; ++r)
        std::copy(v.row_ptr(r), v.row_ptr(r) + v.cols, out.row_ptr(r) + off);
      off += v.cols;
    }
    return push(std::move(out), [this, parts](NodeId self) {
      const Mat& g = nodes_[self].grad;
      int off2 = 0;
      for (NodeId p : parts) {
        const int w = val(p).cols;
        ensure_grad(p);
        Mat& gp = nodes_[p].grad;
        for (int r = 0; r < g.rows; ++r) {
          const double* src = g.row_ptr(r) + off2;
          double* dst = gp.row_ptr(r);
          for (int c = 0; c < w; ++c) dst[c] += src[c];
        }
        off2 += w;
      }
    });
  }

  // ---- nonlinearities ----------------------------------------------------

  // Exact (erf-based) GELU; derivative is Phi(x) + x*phi(x).
  NodeId gelu(NodeId x) {
    Mat out = val(x);
    for (double& v : out.data) v = v * normal_cdf(v);
    return push(std::move(out), [this, x](NodeId self) {
      const Mat& g = nodes_[self].grad;
      const Mat& v = val(x);
      Mat gx = g;
      for (size_t i = 0; i < gx.size(); ++i) {
        const double xv = v.data[i];
        gx.data[i] *= normal_cdf(xv) + xv * normal_pdf(xv);
      }
      accum(x, gx);
    });
  }

  NodeId tanh_act(NodeId x) {
    Mat out = val(x);
    for (double& v : out.data) v = std::tanh(v);
    return push(std::move(out), [this, x](NodeId self) {
      const Mat& g = nodes_[self].grad;
      const Mat& y = nodes_[self].val;
      Mat gx = g;
      for (size_t i = 0; i < gx.size(); ++i) gx.data[i] *= 1.0 - y.data[i] * y.data[i];
      accum(x, gx);
    });
  }

  // Row-wise layer normalization with learned gain/bias (1 x n each).
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias) {
    const Mat& v = val(x);
    check_shape(val(gain).rows == 1 && val(gain).cols == v.cols, "tape layer_norm gain");
    check_shape(val(bias).rows == 1 && val(bias).cols == v.cols, "tape layer_norm bias");
    const int n = v.cols;
    Mat out(v.rows, n);
    Mat xhat(v.rows, n);       // normalized input, cached for backward
    Mat invstd(v.rows, 1);
    const double* pg = val(gain).row_ptr(0);
    const double* pb = val(bias).row_ptr(0);
    for (int r = 0; r < v.rows; ++r) {
      const double* prow = v.row_ptr(r);
      double mean = 0.0;
      for (int c = 0; c < n; ++c) mean += prow[c];
      mean /= n;
      double var = 0.0;
      for (int c = 0; c < n; ++c) {
        const double d = prow[c] - mean;
        var += d * d;
      }
      var /= n;
      const double is = 1.0 / std::sqrt(var + kLnEps);
      invstd(r, 0) = is;
      double* ph = xhat.row_ptr(r);
      double* po = out.row_ptr(r);
      for (int c = 0; c < n; ++c) {
        ph[c] = (prow[c] - mean) * is;
        po[c] = pg[c] * ph[c] + pb[c];
      }
    }
    return push(std::move(out), [this, x, gain, bias, xhat = std::move(xhat),
                                 invstd = std::move(invstd)](NodeId self) {
      const Mat& g = nodes_[self].grad;
      const int n = g.cols;
      const double* pg = val(gain).row_ptr(0);
      ensure_grad(x);
      ensure_grad(gain);
      ensure_grad(bias);
      Mat& gx = nodes_[x].grad;
      double* ggain = nodes_[gain].grad.row_ptr(0);
      double* gbias = nodes_[bias].grad.row_ptr(0);
      for (int r = 0; r < g.rows; ++r) {
        const double* pgr = g.row_ptr(r);
        const double* ph = xhat.row_ptr(r);
        double* pgx = gx.row_ptr(r);
        // dxhat = g * gain; dx = invstd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
        double sum_dh = 0.0, sum_dh_h = 0.0;
        for (int c = 0; c < n; ++c) {
          const double dh = pgr[c] * pg[c];
          sum_dh += dh;
          sum_dh_h += dh * ph[c];
        }
        const double m1 = sum_dh / n;
        const double m2 = sum_dh_h / n;
        const double is = invstd(r, 0);
        for (int c = 0; c < n; ++c) {
          const double dh = pgr[c] * pg[c];
          pgx[c] += is * (dh - m1 - ph[c] * m2);
          ggain[c] += pgr[c] * ph[c];
          gbias[c] += pgr[c];
        }
      }
    });
  }

  // Row-wise softmax (used directly only in tests; attention and the loss
  // have their own fused versions).
  NodeId softmax_rows(NodeId x) {
    Mat out = softmax_rows_val(val(x));
    return push(std::move(out), [this, x](NodeId self) {
      const Mat& g = nodes_[self].grad;
      const Mat& p = nodes_[self].val;
      ensure_grad(x);
      Mat& gx = nodes_[x].grad;
      for (int r = 0; r < g.rows; ++r) {
        const double* pg = g.row_ptr(r);
        const double* pp = p.row_ptr(r);
        double s = 0.0;
        for (int c = 0; c < g.cols; ++c) s += pg[c] * pp[c];
        double* pgx = gx.row_ptr(r);
        for (int c = 0; c < g.cols; ++c) pgx[c] += pp[c] * (pg[c] - s);
      }
    });
  }

  // Single-head causal self-attention: softmax(Q K^T * scale, causal) V.
  // Q, K, V are T x dh. Row t of the score matrix attends to columns 0..t.
  NodeId causal_attention(NodeId q, NodeId k, NodeId v, double scale_factor) {
    const Mat& Q = val(q);
    const Mat& K = val(k);
    const Mat& V = val(v);
    check_shape(Q.same_shape(K) && Q.same_shape(V), "tape causal_attention");
    const int T = Q.rows;
    const int dh = Q.cols;
    Mat P(T, T);  // attention weights, cached for backward
    for (int t = 0; t < T; ++t) {
      double mx = -1e300;
      double* prow = P.row_ptr(t);
      for (int u = 0; u <= t; ++u) {
        prow[u] = scale_factor * dot(Q.row_ptr(t), K.row_ptr(u), dh);
        mx = std::max(mx, prow[u]);
      }
      double z = 0.0;
      for (int u = 0; u <= t; ++u) {
        prow[u] = std::exp(prow[u] - mx);
        z += prow[u];
      }
      for (int u = 0; u <= t; ++u) prow[u] /= z;
      // u > t stays exactly 0 (causal mask)
    }
    Mat out = fairgen::matmul(P, V);
    return push(std::move(out), [this, q, k, v, scale_factor, P = std::move(P)](NodeId self) {
      const Mat& g = nodes_[self].grad;
      const Mat& Q2 = val(q);
      const Mat& K2 = val(k);
      const Mat& V2 = val(v);
      const int T = Q2.rows;
      const int dh = Q2.cols;
      ensure_grad(q);
      ensure_grad(k);
      ensure_grad(v);
      // dV = P^T dOut
      matmul_tn_accum(P, g, nodes_[v].grad);
      // dP = dOut V^T ; dS = P ⊙ (dP − rowsum(dP ⊙ P)) ; masked entries have
      // P = 0, hence dS = 0 there without special casing.
      Mat dS(T, T);
      for (int t = 0; t < T; ++t) {
        const double* pg = g.row_ptr(t);
        const double* pp = P.row_ptr(t);
        double* pds = dS.row_ptr(t);
        double rowsum = 0.0;
        for (int u = 0; u <= t; ++u) {
          double dp = dot(pg, V2.row_ptr(u), dh);
          pds[u] = dp;
          rowsum += dp * pp[u];
        }
        for (int u = 0; u <= t; ++u) pds[u] = pp[u] * (pds[u] - rowsum);
      }
      // dQ += scale * dS K ; dK += scale * dS^T Q
      Mat dQ(T, dh);
      matmul_accum(dS, K2, dQ);
      Mat& gq = nodes_[q].grad;
      for (size_t i = 0; i < dQ.size(); ++i) gq.data[i] += scale_factor * dQ.data[i];
      Mat dK(T, dh);
      matmul_tn_accum(dS, Q2, dK);
      Mat& gk = nodes_[k].grad;
      for (size_t i = 0; i < dK.size(); ++i) gk.data[i] += scale_factor * dK.data[i];
    });
  }

  // ---- losses and scalars -------------------------------------------------

  // Mean over rows of -log softmax(logits_row)[target_row]. Targets of -1
  // are ignored (masked out of both the mean and the gradient).
  NodeId cross_entropy_mean(NodeId logits, std::vector<int> targets) {
    const Mat& L = val(logits);
    check_shape(static_cast<int>(targets.size()) == L.rows, "tape cross_entropy targets");
    int active = 0;
    for (int t : targets)
      if (t >= 0) ++active;
    check_shape(active > 0, "tape cross_entropy no active targets");
    Mat P = softmax_rows_val(L);
    double loss = 0.0;
    for (int r = 0; r < L.rows; ++r) {
      if (targets[r] < 0) continue;
      check_shape(targets[r] < L.cols, "tape cross_entropy target range");
      loss -= std::log(std::max(P(r, targets[r]), 1e-300));
    }
    loss /= active;
    Mat out(1, 1);
    out(0, 0) = loss;
    return push(std::move(out),
                [this, logits, targets = std::move(targets), P = std::move(P), active](NodeId self) {
                  const double g = nodes_[self].grad(0, 0);
                  ensure_grad(logits);
                  Mat& gl = nodes_[logits].grad;
                  const double w = g / active;
                  for (int r = 0; r < gl.rows; ++r) {
                    if (targets[r] < 0) continue;
                    const double* pp = P.row_ptr(r);
                    double* pg = gl.row_ptr(r);
                    for (int c = 0; c < gl.cols; ++c) pg[c] += w * pp[c];
                    pg[targets[r]] -= w;
                  }
                });
  }

  // Cosine distance 1 - u.v/(|u||v|) between two 1 x n rows -> 1 x 1.
  NodeId cosine_distance(NodeId u, NodeId v) {
    const Mat& U = val(u);
    const Mat& V = val(v);
    check_shape(U.rows == 1 && V.rows == 1 && U.cols == V.cols, "tape cosine_distance");
    const int n = U.cols;
    const double uu = dot(U.row_ptr(0), U.row_ptr(0), n);
    const double vv = dot(V.row_ptr(0), V.row_ptr(0), n);
    require(uu >= 1e-24 && vv >= 1e-24, errc::zero_vector,
            "cosine distance of a (near-)zero vector is undefined");
    const double nu = std::sqrt(uu);
    const double nv = std::sqrt(vv);
    const double uv = dot(U.row_ptr(0), V.row_ptr(0), n);
    Mat out(1, 1);
    // Same form as the plain-path value: exactly zero for identical inputs.
    out(0, 0) = 1.0 - uv / std::sqrt(uu * vv);
    return push(std::move(out), [this, u, v, nu, nv, uv](NodeId self) {
      const double g = nodes_[self].grad(0, 0);
      const Mat& U2 = val(u);
      const Mat& V2 = val(v);
      const int n2 = U2.cols;
      ensure_grad(u);
      ensure_grad(v);
      double* gu = nodes_[u].grad.row_ptr(0);
      double* gv = nodes_[v].grad.row_ptr(0);
      const double* pu = U2.row_ptr(0);
      const double* pv = V2.row_ptr(0);
      // d(1 - cos)/du = -( v/(|u||v|) - (u.v) u/(|u|^3 |v|) )
      const double inv = 1.0 / (nu * nv);
      const double cu = uv / (nu * nu * nu * nv);
      const double cv = uv / (nu * nv * nv * nv);
      for (int i = 0; i < n2; ++i) {
        gu[i] += g * (cu * pu[i] - inv * pv[i]);
        gv[i] += g * (cv * pv[i] - inv * pu[i]);
      }
    });
  }

  // Sum of every entry -> 1 x 1.
  NodeId sum_all(NodeId x) {
    Mat out(1, 1);
    for (double v : val(x).data) out(0, 0) += v;
    return push(std::move(out), [this, x](NodeId self) {
      const double g = nodes_[self].grad(0, 0);
      ensure_grad(x);
      for (double& v : nodes_[x].grad.data) v += g;
    });
  }

  // Arithmetic mean of a list of 1 x 1 nodes.
  NodeId mean_scalars(const std::vector<NodeId>& xs) {
    check_shape(!xs.empty(), "tape mean_scalars empty");
    Mat out(1, 1);
    for (NodeId x : xs) {
      check_shape(val(x).rows == 1 && val(x).cols == 1, "tape mean_scalars shape");
      out(0, 0) += val(x)(0, 0);
    }
    out(0, 0) /= static_cast<double>(xs.size());
    return push(std::move(out), [this, xs](NodeId self) {
      const double g = nodes_[self].grad(0, 0) / static_cast<double>(xs.size());
      for (NodeId x : xs) {
        ensure_grad(x);
        nodes_[x].grad(0, 0) += g;
      }
    });
  }

  // Elementwise mean of two same-shape nodes ((a + b) / 2), e.g. h-bar.
  NodeId average(NodeId a, NodeId b) { return scale(add(a, b), 0.5); }

  // ---- backward -----------------------------------------------------------

  void backward(NodeId root) {
    check_shape(val(root).rows == 1 && val(root).cols == 1, "tape backward root not scalar");
    for (Node& n : nodes_) {
      n.grad = Mat(n.val.rows, n.val.cols);
    }
    nodes_[root].grad(0, 0) = 1.0;
    for (NodeId id = root; id >= 0; --id) {
      if (nodes_[id].back) nodes_[id].back(id);
    }
  }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void(NodeId)> back;
  };

  static constexpr double kLnEps = 1e-5;

  static double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }
  static double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  }

  static Mat softmax_rows_val(const Mat& x) {
    Mat p(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
      const double* px = x.row_ptr(r);
      double* pp = p.row_ptr(r);
      double mx = px[0];
      for (int c = 1; c < x.cols; ++c) mx = std::max(mx, px[c]);
      double z = 0.0;
      for (int c = 0; c < x.cols; ++c) {
        pp[c] = std::exp(px[c] - mx);
        z += pp[c];
      }
      for (int c = 0; c < x.cols; ++c) pp[c] /= z;
    }
    return p;
  }

  NodeId push(Mat&& out, std::function<void(NodeId)> back) {
    nodes_.push_back(Node{std::move(out), Mat(), std::move(back)});
    return static_cast<NodeId>(nodes_.size()) - 1;
  }

  void ensure_grad(NodeId id) {
    Mat& g = nodes_[id].grad;
    if (g.rows != nodes_[id].val.rows || g.cols != nodes_[id].val.cols)
      g = Mat(nodes_[id].val.rows, nodes_[id].val.cols);
  }

  void accum(NodeId id, const Mat& g) {
    ensure_grad(id);
    Mat& dst = nodes_[id].grad;
    for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += g.data[i];
  }

  void accum_scaled(NodeId id, const Mat& g, double s) {
    ensure_grad(id);
    Mat& dst = nodes_[id].grad;
    for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += s * g.data[i];
  }

  std::vector<Node> nodes_;
};

}  // namespace fairgen
