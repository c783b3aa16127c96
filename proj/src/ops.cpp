// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rotssl {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
using NodePtr = std::shared_ptr<detail::TensorNode<T>>;

std::string dim_msg(const char* op, const std::string& what, std::int64_t got,
                    std::int64_t expected) {
  return std::string(op) + ": " + what + " is " + std::to_string(got) + ", expected " +
         std::to_string(expected);
}

void require_rank(const char* op, const char* arg, const Shape& shape, std::size_t rank) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) +
                     ", got shape " + shape_str(shape));
  }
}

struct ConvGeometry {
  std::int64_t n, c, h, w, f, kh, kw, oh, ow;
  int stride, pad;
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
  std::int64_t col_rows() const { return c * kh * kw; }
  std::int64_t col_cols() const { return oh * ow; }
};

template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const std::int64_t plane = g.oh * g.ow;
  for (std::int64_t ch = 0; ch < g.c; ++ch) {
    const T* src = image + ch * g.h * g.w;
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        T* dst = cols + ((ch * g.kh + ki) * g.kw + kj) * plane;
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ki;
          T* row = dst + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.ow, T(0));
            continue;
          }
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kj;
            row[ox] = (ix < 0 || ix >= g.w) ? T(0) : src[iy * g.w + ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* image) {
  const std::int64_t plane = g.oh * g.ow;
  for (std::int64_t ch = 0; ch < g.c; ++ch) {
    T* dst = image + ch * g.h * g.w;
    for (std::int64_t ki = 0; ki < g.kh; ++ki) {
      for (std::int64_t kj = 0; kj < g.kw; ++kj) {
        const T* src = cols + ((ch * g.kh + ki) * g.kw + kj) * plane;
        for (std::int64_t oy = 0; oy < g.oh; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          const T* row = src + oy * g.ow;
          for (std::int64_t ox = 0; ox < g.ow; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[iy * g.w + ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride, int pad) {
  constexpr const char* op = "conv2d";
  require_rank(op, "input", input.shape(), 4);
  require_rank(op, "weight", weight.shape(), 4);
  require_rank(op, "bias", bias.shape(), 1);
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (pad < 0) throw ShapeError("conv2d: pad must be >= 0");
  ConvGeometry g{};
  g.n = input.dim(0), g.c = input.dim(1), g.h = input.dim(2), g.w = input.dim(3);
  g.f = weight.dim(0), g.kh = weight.dim(2), g.kw = weight.dim(3);
  g.stride = stride, g.pad = pad;
  if (weight.dim(1) != g.c) throw ShapeError(dim_msg(op, "weight dim 1 (in channels)", weight.dim(1), g.c));
  if (bias.dim(0) != g.f) throw ShapeError(dim_msg(op, "bias dim 0", bias.dim(0), g.f));
  const auto span_h = g.h + 2 * pad - g.kh;
  const auto span_w = g.w + 2 * pad - g.kw;
  if (span_h < 0) throw ShapeError(dim_msg(op, "kernel height", g.kh, g.h + 2 * pad));
  if (span_w < 0) throw ShapeError(dim_msg(op, "kernel width", g.kw, g.w + 2 * pad));
  if (span_h % stride != 0) {
    throw ShapeError("conv2d: input height " + std::to_string(g.h) +
                     " with pad/kernel/stride does not divide exactly");
  }
  if (span_w % stride != 0) {
    throw ShapeError("conv2d: input width " + std::to_string(g.w) +
                     " with pad/kernel/stride does not divide exactly");
  }
  g.oh = span_h / stride + 1;
  g.ow = span_w / stride + 1;

  const std::int64_t in_plane = g.c * g.h * g.w;
  const std::int64_t out_plane = g.f * g.oh * g.ow;
  Buffer<T> out(static_cast<std::size_t>(g.n * out_plane));
  Buffer<T> cols;
  if (!g.pointwise()) cols.resize(static_cast<std::size_t>(g.col_rows() * g.col_cols()));

  CMapMat<T> wmat(weight.data().data(), g.f, g.col_rows());
  const auto bvec = bias.data();
  for (std::int64_t s = 0; s < g.n; ++s) {
    const T* x = input.data().data() + s * in_plane;
    const T* colp = x;
    if (!g.pointwise()) {
      im2col(x, g, cols.data());
      colp = cols.data();
    }
    MapMat<T> y(out.data() + s * out_plane, g.f, g.col_cols());
    y.noalias() = wmat * CMapMat<T>(colp, g.col_rows(), g.col_cols());
    for (std::int64_t f = 0; f < g.f; ++f) y.row(f).array() += bvec[f];
  }

  NodePtr<T> xin = input.node(), wn = weight.node(), bn = bias.node();
  return detail::make_result<T>(
      {g.n, g.f, g.oh, g.ow}, std::move(out), {xin, wn, bn},
      [xin, wn, bn, g](detail::TensorNode<T>& self) {
        const std::int64_t in_plane = g.c * g.h * g.w;
        const std::int64_t out_plane = g.f * g.oh * g.ow;
        Buffer<T> cols;
        if (!g.pointwise()) cols.resize(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
        Buffer<T> dcols;
        if (xin->requires_grad) {
          xin->ensure_grad();
          dcols.resize(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
        }
        if (wn->requires_grad) wn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        CMapMat<T> wmat(wn->data.data(), g.f, g.col_rows());
        for (std::int64_t s = 0; s < g.n; ++s) {
          CMapMat<T> dy(self.grad.data() + s * out_plane, g.f, g.col_cols());
          if (bn->requires_grad) {
            for (std::int64_t f = 0; f < g.f; ++f) bn->grad[f] += dy.row(f).sum();
          }
          if (wn->requires_grad) {
            const T* x = xin->data.data() + s * in_plane;
            const T* colp = x;
            if (!g.pointwise()) {
              im2col(x, g, cols.data());
              colp = cols.data();
            }
            MapMat<T> dw(wn->grad.data(), g.f, g.col_rows());
            dw.noalias() += dy * CMapMat<T>(colp, g.col_rows(), g.col_cols()).transpose();
          }
          if (xin->requires_grad) {
            T* dx = xin->grad.data() + s * in_plane;
            if (g.pointwise()) {
              MapMat<T>(dx, g.c, g.col_cols()).noalias() += wmat.transpose() * dy;
            } else {
              MapMat<T>(dcols.data(), g.col_rows(), g.col_cols()).noalias() = wmat.transpose() * dy;
              col2im_add(dcols.data(), g, dx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, Mode mode) {
  constexpr const char* op = "batch_norm";
  if (input.rank() < 2) throw ShapeError("batch_norm: input must have rank >= 2, got " + shape_str(input.shape()));
  const std::int64_t n = input.dim(0);
  const std::int64_t c = input.dim(1);
  std::int64_t spatial = 1;
  for (std::size_t i = 2; i < input.rank(); ++i) spatial *= input.dim(i);
  require_rank(op, "gamma", gamma.shape(), 1);
  require_rank(op, "beta", beta.shape(), 1);
  if (gamma.dim(0) != c) throw ShapeError(dim_msg(op, "gamma dim 0", gamma.dim(0), c));
  if (beta.dim(0) != c) throw ShapeError(dim_msg(op, "beta dim 0", beta.dim(0), c));
  if (static_cast<std::int64_t>(state.running_mean.size()) != c ||
      static_cast<std::int64_t>(state.running_var.size()) != c) {
    throw ShapeError(dim_msg(op, "running statistics length",
                             static_cast<std::int64_t>(state.running_mean.size()), c));
  }
  const std::int64_t count = n * spatial;
  if (mode == Mode::train && count < 2) {
    throw std::invalid_argument(
        "batch_norm: train mode needs more than one value per channel (variance undefined)");
  }

  const auto x = input.data();
  const auto gm = gamma.data();
  const auto bt = beta.data();
  Buffer<T> xhat(x.size());
  Buffer<T> inv_std(static_cast<std::size_t>(c));
  Buffer<T> out(x.size());

  for (std::int64_t ch = 0; ch < c; ++ch) {
    T mean, var;
    if (mode == Mode::train) {
      double acc = 0;
      for (std::int64_t s = 0; s < n; ++s) {
        const T* p = x.data() + (s * c + ch) * spatial;
        for (std::int64_t i = 0; i < spatial; ++i) acc += p[i];
      }
      mean = static_cast<T>(acc / static_cast<double>(count));
      double sq = 0;
      for (std::int64_t s = 0; s < n; ++s) {
        const T* p = x.data() + (s * c + ch) * spatial;
        for (std::int64_t i = 0; i < spatial; ++i) {
          const double d = static_cast<double>(p[i]) - static_cast<double>(mean);
          sq += d * d;
        }
      }
      var = static_cast<T>(sq / static_cast<double>(count));
      const T unbiased = static_cast<T>(sq / static_cast<double>(count - 1));
      state.running_mean[ch] = (T(1) - state.momentum) * state.running_mean[ch] + state.momentum * mean;
      state.running_var[ch] = (T(1) - state.momentum) * state.running_var[ch] + state.momentum * unbiased;
    } else {
      mean = state.running_mean[ch];
      var = state.running_var[ch];
    }
    const T istd = T(1) / std::sqrt(var + state.epsilon);
    inv_std[ch] = istd;
    for (std::int64_t s = 0; s < n; ++s) {
      const std::int64_t base = (s * c + ch) * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) {
        const T h = (x[base + i] - mean) * istd;
        xhat[base + i] = h;
        out[base + i] = gm[ch] * h + bt[ch];
      }
    }
  }

  NodePtr<T> xin = input.node(), gn = gamma.node(), bn = beta.node();
  return detail::make_result<T>(
      input.shape(), std::move(out), {xin, gn, bn},
      [xin, gn, bn, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, spatial,
       mode](detail::TensorNode<T>& self) {
        const std::int64_t count = n * spatial;
        const auto& dy = self.grad;
        if (xin->requires_grad) xin->ensure_grad();
        if (gn->requires_grad) gn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        for (std::int64_t ch = 0; ch < c; ++ch) {
          T sum_dy = 0, sum_dy_xhat = 0;
          for (std::int64_t s = 0; s < n; ++s) {
            const std::int64_t base = (s * c + ch) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) {
              sum_dy += dy[base + i];
              sum_dy_xhat += dy[base + i] * xhat[base + i];
            }
          }
          if (gn->requires_grad) gn->grad[ch] += sum_dy_xhat;
          if (bn->requires_grad) bn->grad[ch] += sum_dy;
          if (!xin->requires_grad) continue;
          const T g = gn->data[ch];
          const T scale = g * inv_std[ch];
          for (std::int64_t s = 0; s < n; ++s) {
            const std::int64_t base = (s * c + ch) * spatial;
            for (std::int64_t i = 0; i < spatial; ++i) {
              if (mode == Mode::train) {
                const T m = static_cast<T>(count);
                xin->grad[base + i] +=
                    scale / m * (m * dy[base + i] - sum_dy - xhat[base + i] * sum_dy_xhat);
              } else {
                xin->grad[base + i] += scale * dy[base + i];
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  const auto x = input.data();
  Buffer<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  NodePtr<T> xin = input.node();
  return detail::make_result<T>(input.shape(), std::move(out), {xin},
                                [xin](detail::TensorNode<T>& self) {
                                  xin->ensure_grad();
                                  for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                    if (self.data[i] > T(0)) xin->grad[i] += self.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int kernel, int stride, int pad) {
  constexpr const char* op = "max_pool2d";
  require_rank(op, "input", input.shape(), 4);
  if (kernel < 1 || stride < 1 || pad < 0) throw ShapeError("max_pool2d: invalid window parameters");
  if (pad >= kernel) throw ShapeError("max_pool2d: pad must be smaller than kernel");
  const std::int64_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h + 2 * pad < kernel) throw ShapeError(dim_msg(op, "kernel", kernel, h + 2 * pad));
  if (w + 2 * pad < kernel) throw ShapeError(dim_msg(op, "kernel", kernel, w + 2 * pad));
  const std::int64_t oh = (h + 2 * pad - kernel) / stride + 1;
  const std::int64_t ow = (w + 2 * pad - kernel) / stride + 1;
  const auto x = input.data();
  Buffer<T> out(static_cast<std::size_t>(n * c * oh * ow));
  std::vector<std::int64_t> argmax(out.size());
  for (std::int64_t plane = 0; plane < n * c; ++plane) {
    const T* src = x.data() + plane * h * w;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        std::int64_t best_idx = -1;
        for (int ki = 0; ki < kernel; ++ki) {
          const std::int64_t iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          for (int kj = 0; kj < kernel; ++kj) {
            const std::int64_t ix = ox * stride - pad + kj;
            if (ix < 0 || ix >= w) continue;
            const T v = src[iy * w + ix];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = iy * w + ix;
            }
          }
        }
        const std::int64_t o = (plane * oh + oy) * ow + ox;
        out[o] = best;
        argmax[o] = plane * h * w + best_idx;
      }
    }
  }
  NodePtr<T> xin = input.node();
  return detail::make_result<T>({n, c, oh, ow}, std::move(out), {xin},
                                [xin, argmax = std::move(argmax)](detail::TensorNode<T>& self) {
                                  xin->ensure_grad();
                                  for (std::size_t o = 0; o < argmax.size(); ++o) {
                                    xin->grad[argmax[o]] += self.grad[o];
                                  }
                                });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require_rank("global_avg_pool", "input", input.shape(), 4);
  const std::int64_t n = input.dim(0), c = input.dim(1);
  const std::int64_t spatial = input.dim(2) * input.dim(3);
  const auto x = input.data();
  Buffer<T> out(static_cast<std::size_t>(n * c));
  for (std::int64_t p = 0; p < n * c; ++p) {
    T acc = 0;
    for (std::int64_t i = 0; i < spatial; ++i) acc += x[p * spatial + i];
    out[p] = acc / static_cast<T>(spatial);
  }
  NodePtr<T> xin = input.node();
  return detail::make_result<T>({n, c}, std::move(out), {xin},
                                [xin, spatial](detail::TensorNode<T>& self) {
                                  xin->ensure_grad();
                                  const T inv = T(1) / static_cast<T>(spatial);
                                  for (std::size_t p = 0; p < self.grad.size(); ++p) {
                                    const T g = self.grad[p] * inv;
                                    for (std::int64_t i = 0; i < spatial; ++i) {
                                      xin->grad[p * spatial + i] += g;
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& input) {
  if (input.rank() < 2) throw ShapeError("flatten: input must have rank >= 2, got " + shape_str(input.shape()));
  const auto n = input.dim(0);
  return input.reshape({n, static_cast<std::int64_t>(input.size()) / n});
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  constexpr const char* op = "dense";
  require_rank(op, "input", input.shape(), 2);
  require_rank(op, "weight", weight.shape(), 2);
  require_rank(op, "bias", bias.shape(), 1);
  const std::int64_t n = input.dim(0), d = input.dim(1), m = weight.dim(1);
  if (weight.dim(0) != d) throw ShapeError(dim_msg(op, "weight dim 0 (inner)", weight.dim(0), d));
  if (bias.dim(0) != m) throw ShapeError(dim_msg(op, "bias dim 0", bias.dim(0), m));
  Buffer<T> out(static_cast<std::size_t>(n * m));
  MapMat<T> y(out.data(), n, m);
  y.noalias() = CMapMat<T>(input.data().data(), n, d) * CMapMat<T>(weight.data().data(), d, m);
  const auto b = bias.data();
  for (std::int64_t r = 0; r < n; ++r) {
    for (std::int64_t j = 0; j < m; ++j) y(r, j) += b[j];
  }
  NodePtr<T> xin = input.node(), wn = weight.node(), bn = bias.node();
  return detail::make_result<T>(
      {n, m}, std::move(out), {xin, wn, bn}, [xin, wn, bn, n, d, m](detail::TensorNode<T>& self) {
        CMapMat<T> dy(self.grad.data(), n, m);
        if (xin->requires_grad) {
          xin->ensure_grad();
          MapMat<T>(xin->grad.data(), n, d).noalias() +=
              dy * CMapMat<T>(wn->data.data(), d, m).transpose();
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          MapMat<T>(wn->grad.data(), d, m).noalias() +=
              CMapMat<T>(xin->data.data(), n, d).transpose() * dy;
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::int64_t r = 0; r < n; ++r) {
            for (std::int64_t j = 0; j < m; ++j) bn->grad[j] += dy(r, j);
          }
        }
      });
}

template <typename T>
std::vector<T> softmax(const Tensor<T>& logits) {
  require_rank("softmax", "logits", logits.shape(), 2);
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  const auto z = logits.data();
  std::vector<T> p(z.size());
  for (std::int64_t r = 0; r < n; ++r) {
    const T* row = z.data() + r * k;
    const T mx = *std::max_element(row, row + k);
    T total = 0;
    for (std::int64_t j = 0; j < k; ++j) total += (p[r * k + j] = std::exp(row[j] - mx));
    for (std::int64_t j = 0; j < k; ++j) p[r * k + j] /= total;
  }
  return p;
}

template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank("softmax_cross_entropy", "logits", logits.shape(), 2);
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw ShapeError(dim_msg("softmax_cross_entropy", "label count",
                             static_cast<std::int64_t>(labels.size()), n));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                              " at row " + std::to_string(i) + " outside [0," +
                              std::to_string(k) + ")");
    }
  }
  const auto z = logits.data();
  Buffer<T> probs(z.size());
  double total_loss = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    const T* row = z.data() + r * k;
    const T mx = *std::max_element(row, row + k);
    T denom = 0;
    for (std::int64_t j = 0; j < k; ++j) denom += std::exp(row[j] - mx);
    const T log_denom = std::log(denom);
    for (std::int64_t j = 0; j < k; ++j) probs[r * k + j] = std::exp(row[j] - mx - log_denom);
    total_loss += static_cast<double>(log_denom - (row[labels[r]] - mx));
  }
  std::vector<int> lab(labels.begin(), labels.end());
  NodePtr<T> zin = logits.node();
  return detail::make_result<T>(
      {1}, {static_cast<T>(total_loss / static_cast<double>(n))}, {zin},
      [zin, probs = std::move(probs), lab = std::move(lab), n, k](detail::TensorNode<T>& self) {
        zin->ensure_grad();
        const T g = self.grad[0] / static_cast<T>(n);
        for (std::int64_t r = 0; r < n; ++r) {
          for (std::int64_t j = 0; j < k; ++j) {
            const T target = (j == lab[r]) ? T(1) : T(0);
            zin->grad[r * k + j] += g * (probs[r * k + j] - target);
          }
        }
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& input) {
  T acc = 0;
  for (T v : input.data()) acc += v;
  NodePtr<T> xin = input.node();
  return detail::make_result<T>({1}, {acc}, {xin}, [xin](detail::TensorNode<T>& self) {
    xin->ensure_grad();
    for (auto& g : xin->grad) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  Buffer<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  NodePtr<T> an = a.node(), bn = b.node();
  return detail::make_result<T>(a.shape(), std::move(out), {an, bn},
                                [an, bn](detail::TensorNode<T>& self) {
                                  for (auto* p : {an.get(), bn.get()}) {
                                    if (!p->requires_grad) continue;
                                    p->ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                      p->grad[i] += self.grad[i];
                                    }
                                  }
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  Buffer<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  NodePtr<T> an = a.node(), bn = b.node();
  return detail::make_result<T>(a.shape(), std::move(out), {an, bn},
                                [an, bn](detail::TensorNode<T>& self) {
                                  if (an->requires_grad) {
                                    an->ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                      an->grad[i] += self.grad[i] * bn->data[i];
                                    }
                                  }
                                  if (bn->requires_grad) {
                                    bn->ensure_grad();
                                    for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                      bn->grad[i] += self.grad[i] * an->data[i];
                                    }
                                  }
                                });
}

#define ROTSSL_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);   \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                BatchNormState<T>&, Mode);                                     \
  template Tensor<T> relu(const Tensor<T>&);                                                   \
  template Tensor<T> max_pool2d(const Tensor<T>&, int, int, int);                              \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                        \
  template Tensor<T> flatten(const Tensor<T>&);                                                \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> softmax_cross_entropy(const Tensor<T>&, std::span<const int>);            \
  template std::vector<T> softmax(const Tensor<T>&);                                           \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);

ROTSSL_INSTANTIATE_OPS(float)
ROTSSL_INSTANTIATE_OPS(double)

}  // namespace rotssl
