/*
 * Copyright 2026 The mmfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mmfuse/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "mmfuse/common.h"
#include "mmfuse/log.h"

namespace mmfuse::nn {
namespace {

void ExpectRank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
  if (t.rank() != rank) {
    throw ValidationError(std::string(op) + ": " + arg + " expected rank " +
                          std::to_string(rank) + ", got shape " + ShapeString(t.shape()));
  }
}

void ExpectShape(const Tensor& t, const Shape& expected, const char* op, const char* arg) {
  if (t.shape() != expected) {
    throw ValidationError(std::string(op) + ": " + arg + " expected shape " +
                          ShapeString(expected) + ", got " + ShapeString(t.shape()));
  }
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Indices of non-zero entries, used to skip work on sparse inputs.
void NonZeros(const double* x, std::size_t n, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (x[j] != 0.0) out.push_back(j);
  }
}

}  // namespace

Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  ExpectRank(x, 2, "linear", "input");
  ExpectRank(w, 2, "linear", "weight");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(0);
  ExpectShape(w, {out, in}, "linear", "weight");
  ExpectShape(b, {out}, "linear", "bias");
  std::vector<double> y(batch * out);
  const auto xv = x.data();
  const auto wv = w.data();
  const auto bv = b.data();
  std::vector<std::size_t> nz;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = xv.data() + r * in;
    NonZeros(xr, in, nz);
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = wv.data() + o * in;
      double acc = bv[o];
      for (std::size_t j : nz) acc += wr[j] * xr[j];
      y[r * out + o] = acc;
    }
  }
  return Tensor::MakeResult(
      {batch, out}, std::move(y), {x, w, b}, [batch, in, out](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        const auto& dy = self.grad;
        std::vector<std::size_t> nz;
        if (wn.requires_grad) {
          auto& dw = wn.EnsureGrad();
          for (std::size_t r = 0; r < batch; ++r) {
            const double* xr = xn.value.data() + r * in;
            NonZeros(xr, in, nz);
            for (std::size_t o = 0; o < out; ++o) {
              const double g = dy[r * out + o];
              if (g == 0.0) continue;
              double* dwr = dw.data() + o * in;
              for (std::size_t j : nz) dwr[j] += g * xr[j];
            }
          }
        }
        if (bn.requires_grad) {
          auto& db = bn.EnsureGrad();
          for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t o = 0; o < out; ++o) db[o] += dy[r * out + o];
        }
        if (xn.requires_grad) {
          auto& dx = xn.EnsureGrad();
          for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t o = 0; o < out; ++o) {
              const double g = dy[r * out + o];
              if (g == 0.0) continue;
              const double* wr = wn.value.data() + o * in;
              double* dxr = dx.data() + r * in;
              for (std::size_t j = 0; j < in; ++j) dxr[j] += g * wr[j];
            }
          }
        }
      });
}

Tensor Conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
  ExpectRank(x, 3, "conv1d", "input");
  ExpectRank(w, 3, "conv1d", "weight");
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  ExpectShape(w, {cout, cin, k}, "conv1d", "weight");
  ExpectShape(b, {cout}, "conv1d", "bias");
  if (stride == 0) throw ValidationError("conv1d: stride must be positive");
  if (len < k) {
    throw ValidationError("conv1d: input length " + std::to_string(len) +
                          " shorter than kernel " + std::to_string(k));
  }
  const std::size_t lout = (len - k) / stride + 1;
  std::vector<double> y(batch * cout * lout);
  const auto xv = x.data();
  const auto wv = w.data();
  const auto bv = b.data();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < cout; ++o) {
      double* yr = y.data() + (n * cout + o) * lout;
      for (std::size_t t = 0; t < lout; ++t) yr[t] = bv[o];
      for (std::size_t c = 0; c < cin; ++c) {
        const double* xr = xv.data() + (n * cin + c) * len;
        const double* wr = wv.data() + (o * cin + c) * k;
        for (std::size_t t = 0; t < lout; ++t) {
          const double* xs = xr + t * stride;
          double acc = 0.0;
          for (std::size_t q = 0; q < k; ++q) acc += wr[q] * xs[q];
          yr[t] += acc;
        }
      }
    }
  }
  return Tensor::MakeResult(
      {batch, cout, lout}, std::move(y), {x, w, b},
      [batch, cin, len, cout, k, lout, stride](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        const auto& dy = self.grad;
        double* dx = xn.requires_grad ? xn.EnsureGrad().data() : nullptr;
        double* dw = wn.requires_grad ? wn.EnsureGrad().data() : nullptr;
        double* db = bn.requires_grad ? bn.EnsureGrad().data() : nullptr;
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t o = 0; o < cout; ++o) {
            const double* g = dy.data() + (n * cout + o) * lout;
            if (db) {
              for (std::size_t t = 0; t < lout; ++t) db[o] += g[t];
            }
            for (std::size_t c = 0; c < cin; ++c) {
              const std::size_t xoff = (n * cin + c) * len;
              const std::size_t woff = (o * cin + c) * k;
              for (std::size_t t = 0; t < lout; ++t) {
                if (g[t] == 0.0) continue;
                for (std::size_t q = 0; q < k; ++q) {
                  if (dw) dw[woff + q] += g[t] * xn.value[xoff + t * stride + q];
                  if (dx) dx[xoff + t * stride + q] += g[t] * wn.value[woff + q];
                }
              }
            }
          }
        }
      });
}

Tensor MaxPool1d(const Tensor& x, std::size_t width) {
  ExpectRank(x, 3, "max_pool1d", "input");
  const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
  if (width == 0) throw ValidationError("max_pool1d: width must be positive");
  if (len < width) {
    throw ValidationError("max_pool1d: input length " + std::to_string(len) +
                          " shorter than pool width " + std::to_string(width));
  }
  const std::size_t lout = (len - width) / width + 1;
  std::vector<double> y(batch * ch * lout);
  std::vector<std::size_t> arg(y.size());
  const auto xv = x.data();
  for (std::size_t r = 0; r < batch * ch; ++r) {
    for (std::size_t t = 0; t < lout; ++t) {
      std::size_t best = r * len + t * width;
      for (std::size_t q = 1; q < width; ++q) {
        const std::size_t idx = r * len + t * width + q;
        if (xv[idx] > xv[best]) best = idx;
      }
      y[r * lout + t] = xv[best];
      arg[r * lout + t] = best;
    }
  }
  return Tensor::MakeResult({batch, ch, lout}, std::move(y), {x},
                            [arg = std::move(arg)](Node& self) {
                              auto& dx = self.parents[0]->EnsureGrad();
                              for (std::size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += self.grad[i];
                            });
}

Tensor LeakyRelu(const Tensor& x, double slope) {
  std::vector<double> y(x.data().begin(), x.data().end());
  for (double& v : y) v = v > 0 ? v : slope * v;
  return Tensor::MakeResult(x.shape(), std::move(y), {x}, [slope](Node& self) {
    Node& xn = *self.parents[0];
    auto& dx = xn.EnsureGrad();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] += self.grad[i] * (xn.value[i] > 0 ? 1.0 : slope);
    }
  });
}

Tensor Relu(const Tensor& x) { return LeakyRelu(x, 0.0); }

Tensor Reshape(const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    throw ValidationError("reshape: cannot view " + ShapeString(x.shape()) + " as " +
                          ShapeString(shape));
  }
  std::vector<double> y(x.data().begin(), x.data().end());
  return Tensor::MakeResult(std::move(shape), std::move(y), {x}, [](Node& self) {
    auto& dx = self.parents[0]->EnsureGrad();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
  });
}

Tensor Flatten(const Tensor& x) {
  if (x.rank() < 1) throw ValidationError("flatten: scalar input");
  return Reshape(x, {x.dim(0), x.size() / x.dim(0)});
}

Tensor Lstm(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b) {
  ExpectRank(x, 2, "lstm", "input");
  const std::size_t steps = x.dim(0), in = x.dim(1);
  ExpectRank(w_hh, 2, "lstm", "w_hh");
  const std::size_t hidden = w_hh.dim(1);
  const std::size_t g4 = 4 * hidden;
  ExpectShape(w_ih, {g4, in}, "lstm", "w_ih");
  ExpectShape(w_hh, {g4, hidden}, "lstm", "w_hh");
  ExpectShape(b, {g4}, "lstm", "bias");
  if (steps == 0) throw ValidationError("lstm: empty sequence");

  const auto xv = x.data();
  const auto wi = w_ih.data();
  const auto wh = w_hh.data();
  const auto bv = b.data();
  // Sparse inputs (hashed text) take the index-list path; dense inputs
  // (spectrogram frames) go through one matrix product for all steps.
  const std::size_t nonzero =
      static_cast<std::size_t>(std::count_if(xv.begin(), xv.end(), [](double v) { return v != 0.0; }));
  const bool dense = nonzero * 4 > xv.size();

  // Input projection plus bias for every step: [T, 4H].
  std::vector<double> zin(steps * g4);
  if (dense) {
    ConstRowMap X(xv.data(), steps, in);
    ConstRowMap W(wi.data(), g4, in);
    RowMap Z(zin.data(), steps, g4);
    Z.noalias() = X * W.transpose();
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t r = 0; r < g4; ++r) zin[t * g4 + r] += bv[r];
  } else {
    std::vector<std::size_t> nz;
    for (std::size_t t = 0; t < steps; ++t) {
      const double* xt = xv.data() + t * in;
      NonZeros(xt, in, nz);
      for (std::size_t r = 0; r < g4; ++r) {
        double acc = bv[r];
        const double* wr = wi.data() + r * in;
        for (std::size_t j : nz) acc += wr[j] * xt[j];
        zin[t * g4 + r] = acc;
      }
    }
  }

  // Cache per step: activated gates (i, f, g, o), cell state and tanh(cell).
  auto gates = std::make_shared<std::vector<double>>(steps * g4);
  auto cells = std::make_shared<std::vector<double>>(steps * hidden);
  auto tanh_cells = std::make_shared<std::vector<double>>(steps * hidden);
  std::vector<double> h(steps * hidden);
  std::vector<double> z(g4);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* hp = t ? h.data() + (t - 1) * hidden : nullptr;
    for (std::size_t r = 0; r < g4; ++r) {
      double acc = zin[t * g4 + r];
      if (hp) {
        const double* hr = wh.data() + r * hidden;
        for (std::size_t j = 0; j < hidden; ++j) acc += hr[j] * hp[j];
      }
      z[r] = acc;
    }
    double* gt = gates->data() + t * g4;
    for (std::size_t j = 0; j < hidden; ++j) {
      gt[j] = Sigmoid(z[j]);
      gt[hidden + j] = Sigmoid(z[hidden + j]);
      gt[2 * hidden + j] = std::tanh(z[2 * hidden + j]);
      gt[3 * hidden + j] = Sigmoid(z[3 * hidden + j]);
      const double c_prev = t ? (*cells)[(t - 1) * hidden + j] : 0.0;
      const double c = gt[hidden + j] * c_prev + gt[j] * gt[2 * hidden + j];
      (*cells)[t * hidden + j] = c;
      const double tc = std::tanh(c);
      (*tanh_cells)[t * hidden + j] = tc;
      h[t * hidden + j] = gt[3 * hidden + j] * tc;
    }
  }
  return Tensor::MakeResult(
      {steps, hidden}, std::move(h), {x, w_ih, w_hh, b},
      [steps, in, hidden, g4, dense, gates, cells, tanh_cells](Node& self) {
        Node& xn = *self.parents[0];
        Node& win = *self.parents[1];
        Node& whn = *self.parents[2];
        Node& bn = *self.parents[3];
        double* dx = xn.requires_grad ? xn.EnsureGrad().data() : nullptr;
        double* dwi = win.requires_grad ? win.EnsureGrad().data() : nullptr;
        double* dwh = whn.requires_grad ? whn.EnsureGrad().data() : nullptr;
        double* db = bn.requires_grad ? bn.EnsureGrad().data() : nullptr;
        const auto& hv = self.value;
        // Backpropagation through time; gate pre-activation gradients for
        // all steps are kept so the input-side products run once at the end.
        std::vector<double> dz_all(steps * g4);
        std::vector<double> dh_next(hidden, 0.0), dc_next(hidden, 0.0);
        for (std::size_t step = steps; step-- > 0;) {
          const double* gt = gates->data() + step * g4;
          double* dz = dz_all.data() + step * g4;
          for (std::size_t j = 0; j < hidden; ++j) {
            const double i = gt[j], f = gt[hidden + j], g = gt[2 * hidden + j],
                         o = gt[3 * hidden + j];
            const double tc = (*tanh_cells)[step * hidden + j];
            const double c_prev = step ? (*cells)[(step - 1) * hidden + j] : 0.0;
            const double dh = self.grad[step * hidden + j] + dh_next[j];
            const double d_o = dh * tc;
            const double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
            dz[j] = dc * g * i * (1.0 - i);
            dz[hidden + j] = dc * c_prev * f * (1.0 - f);
            dz[2 * hidden + j] = dc * i * (1.0 - g * g);
            dz[3 * hidden + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
          }
          std::fill(dh_next.begin(), dh_next.end(), 0.0);
          if (step == 0) continue;
          const double* hp = hv.data() + (step - 1) * hidden;
          for (std::size_t r = 0; r < g4; ++r) {
            const double g = dz[r];
            if (g == 0.0) continue;
            const double* hr = whn.value.data() + r * hidden;
            double* dhr = dwh ? dwh + r * hidden : nullptr;
            for (std::size_t j = 0; j < hidden; ++j) {
              if (dhr) dhr[j] += g * hp[j];
              dh_next[j] += g * hr[j];
            }
          }
        }
        if (db) {
          for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t r = 0; r < g4; ++r) db[r] += dz_all[t * g4 + r];
        }
        ConstRowMap dZ(dz_all.data(), steps, g4);
        ConstRowMap X(xn.value.data(), steps, in);
        if (dwi) {
          if (dense) {
            RowMap dW(dwi, g4, in);
            dW.noalias() += dZ.transpose() * X;
          } else {
            std::vector<std::size_t> nz;
            for (std::size_t t = 0; t < steps; ++t) {
              const double* xt = xn.value.data() + t * in;
              NonZeros(xt, in, nz);
              for (std::size_t r = 0; r < g4; ++r) {
                const double g = dz_all[t * g4 + r];
                if (g == 0.0) continue;
                double* row = dwi + r * in;
                for (std::size_t j : nz) row[j] += g * xt[j];
              }
            }
          }
        }
        if (dx) {
          RowMap dX(dx, steps, in);
          ConstRowMap W(win.value.data(), g4, in);
          dX.noalias() += dZ * W;
        }
      });
}

Tensor Row(const Tensor& x, std::size_t t) {
  ExpectRank(x, 2, "row", "input");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (t >= rows) {
    throw ValidationError("row: index " + std::to_string(t) + " out of range for " +
                          ShapeString(x.shape()));
  }
  std::vector<double> y(x.data().begin() + t * cols, x.data().begin() + (t + 1) * cols);
  return Tensor::MakeResult({1, cols}, std::move(y), {x}, [t, cols](Node& self) {
    auto& dx = self.parents[0]->EnsureGrad();
    for (std::size_t j = 0; j < cols; ++j) dx[t * cols + j] += self.grad[j];
  });
}

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat: no inputs");
  const std::size_t batch = parts[0].dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    ExpectRank(p, 2, "concat", "part");
    if (p.dim(0) != batch) {
      throw ValidationError("concat: batch mismatch, expected " + std::to_string(batch) +
                            ", got " + ShapeString(p.shape()));
    }
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  std::vector<double> y(batch * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].data();
    for (std::size_t r = 0; r < batch; ++r) {
      std::copy(v.begin() + r * widths[k], v.begin() + (r + 1) * widths[k],
                y.begin() + r * total + offset);
    }
    offset += widths[k];
  }
  return Tensor::MakeResult({batch, total}, std::move(y), parts,
                            [batch, total, widths](Node& self) {
                              std::size_t off = 0;
                              for (std::size_t k = 0; k < widths.size(); ++k) {
                                Node& p = *self.parents[k];
                                if (p.requires_grad) {
                                  auto& dp = p.EnsureGrad();
                                  for (std::size_t r = 0; r < batch; ++r)
                                    for (std::size_t j = 0; j < widths[k]; ++j)
                                      dp[r * widths[k] + j] += self.grad[r * total + off + j];
                                }
                                off += widths[k];
                              }
                            });
}

Tensor StackRows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ValidationError("stack: no inputs");
  const std::size_t cols = rows[0].size();
  std::vector<double> y;
  y.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) {
      throw ValidationError("stack: row width mismatch, expected " + std::to_string(cols) +
                            ", got " + ShapeString(r.shape()));
    }
    y.insert(y.end(), r.data().begin(), r.data().end());
  }
  return Tensor::MakeResult({rows.size(), cols}, std::move(y), rows, [cols](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& dp = p.EnsureGrad();
      for (std::size_t j = 0; j < cols; ++j) dp[j] += self.grad[k * cols + j];
    }
  });
}

Tensor ToChannels(const Tensor& x, std::size_t length) {
  ExpectRank(x, 2, "to_channels", "input");
  const std::size_t steps = x.dim(0), cols = x.dim(1);
  const std::size_t used = std::min(steps, length);
  std::vector<double> y(cols * length, 0.0);
  const auto v = x.data();
  for (std::size_t t = 0; t < used; ++t)
    for (std::size_t j = 0; j < cols; ++j) y[j * length + t] = v[t * cols + j];
  return Tensor::MakeResult({1, cols, length}, std::move(y), {x},
                            [used, cols, length](Node& self) {
                              auto& dx = self.parents[0]->EnsureGrad();
                              for (std::size_t t = 0; t < used; ++t)
                                for (std::size_t j = 0; j < cols; ++j)
                                  dx[t * cols + j] += self.grad[j * length + t];
                            });
}

Tensor MeanRows(const Tensor& x) {
  ExpectRank(x, 2, "mean_rows", "input");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (rows == 0) throw ValidationError("mean_rows: no rows");
  std::vector<double> y(cols, 0.0);
  const auto v = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) y[j] += v[r * cols + j];
  for (double& e : y) e /= static_cast<double>(rows);
  return Tensor::MakeResult({1, cols}, std::move(y), {x}, [rows, cols](Node& self) {
    auto& dx = self.parents[0]->EnsureGrad();
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) dx[r * cols + j] += self.grad[j] * inv;
  });
}

Tensor Softmax(const Tensor& x) {
  ExpectRank(x, 2, "softmax", "input");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  std::vector<double> y(x.data().begin(), x.data().end());
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = y.data() + r * cols;
    const double m = *std::max_element(row, row + cols);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += (row[j] = std::exp(row[j] - m));
    for (std::size_t j = 0; j < cols; ++j) row[j] /= s;
  }
  return Tensor::MakeResult(x.shape(), std::move(y), {x}, [rows, cols](Node& self) {
    auto& dx = self.parents[0]->EnsureGrad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = self.value.data() + r * cols;
      const double* gr = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += yr[j] * gr[j];
      for (std::size_t j = 0; j < cols; ++j) dx[r * cols + j] += yr[j] * (gr[j] - dot);
    }
  });
}

Tensor CrossEntropy(const Tensor& probs, const std::vector<int>& labels) {
  ExpectRank(probs, 2, "cross_entropy", "probabilities");
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  if (labels.size() != batch) {
    throw ValidationError("cross_entropy: " + std::to_string(labels.size()) +
                          " labels for batch of " + std::to_string(batch));
  }
  constexpr double kEps = 1e-12;
  const auto p = probs.data();
  double loss = 0.0;
  bool clamped = false;
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= classes) {
      throw ValidationError("cross_entropy: label " + std::to_string(labels[r]) +
                            " out of range");
    }
    const double v = p[r * classes + labels[r]];
    if (v < kEps) clamped = true;
    loss -= std::log(std::max(v, kEps));
  }
  if (clamped) Warn("cross_entropy: probability at label below 1e-12 was clamped");
  loss /= static_cast<double>(batch);
  return Tensor::MakeResult({1}, {loss}, {probs}, [labels, batch, classes](Node& self) {
    Node& pn = *self.parents[0];
    auto& dp = pn.EnsureGrad();
    const double scale = self.grad[0] / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      const std::size_t idx = r * classes + labels[r];
      if (pn.value[idx] >= kEps) dp[idx] -= scale / pn.value[idx];
    }
  });
}

Tensor Pick(const Tensor& x, std::size_t flat_index) {
  if (flat_index >= x.size()) throw ValidationError("pick: index out of range");
  return Tensor::MakeResult({1}, {x.data()[flat_index]}, {x}, [flat_index](Node& self) {
    self.parents[0]->EnsureGrad()[flat_index] += self.grad[0];
  });
}

Tensor WeightedSum(const Tensor& x, const std::vector<double>& weights) {
  if (weights.size() != x.size()) throw ValidationError("weighted_sum: weight count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x.data()[i];
  return Tensor::MakeResult({1}, {s}, {x}, [weights](Node& self) {
    auto& dx = self.parents[0]->EnsureGrad();
    for (std::size_t i = 0; i < weights.size(); ++i) dx[i] += self.grad[0] * weights[i];
  });
}

Tensor Sum(const Tensor& x) {
  return WeightedSum(x, std::vector<double>(x.size(), 1.0));
}

}  // namespace mmfuse::nn
