#pragma once

#include <map>
#include <string>
#include <vector>

#include "sepgan/core.hpp"

namespace sepgan {

// Named tensors living in one flat vector, so optimizer steps, gradient
// checks and checkpointing all see a single contiguous parameter vector.
// Matrices are stored column-major inside the flat storage.
template <class S>
class ParamPack {
 public:
  struct Entry {
    std::string name;
    std::vector<int> dims;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
  };

  void add(const std::string& name, std::vector<int> dims) {
    Entry e;
    e.name = name;
    e.dims = std::move(dims);
    e.size = 1;
    for (int d : e.dims) e.size *= d;
    e.offset = total_;
    total_ += e.size;
    index_[e.name] = entries_.size();
    entries_.push_back(std::move(e));
  }

  void finalize() { data_ = VectorT<S>::Zero(total_); }

  Eigen::Index size() const { return total_; }
  VectorT<S>& flat() { return data_; }
  const VectorT<S>& flat() const { return data_; }
  const std::vector<Entry>& entries() const { return entries_; }

  const Entry& entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("ParamPack: no tensor named " + name);
    return entries_[it->second];
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  // Views over any storage with this pack's layout (own data, grads, Adam
  // moments, ...).
  Eigen::Map<MatrixT<S>> mat(VectorT<S>& storage, const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dims.size() != 2) throw Error("ParamPack: " + name + " is not 2-D");
    return {storage.data() + e.offset, e.dims[0], e.dims[1]};
  }
  Eigen::Map<const MatrixT<S>> mat(const VectorT<S>& storage,
                                   const std::string& name) const {
    const Entry& e = entry(name);
    if (e.dims.size() != 2) throw Error("ParamPack: " + name + " is not 2-D");
    return {storage.data() + e.offset, e.dims[0], e.dims[1]};
  }
  Eigen::Map<VectorT<S>> vec(VectorT<S>& storage, const std::string& name) const {
    const Entry& e = entry(name);
    return {storage.data() + e.offset, e.size};
  }
  Eigen::Map<const VectorT<S>> vec(const VectorT<S>& storage,
                                   const std::string& name) const {
    const Entry& e = entry(name);
    return {storage.data() + e.offset, e.size};
  }

  Eigen::Map<MatrixT<S>> mat(const std::string& name) { return mat(data_, name); }
  Eigen::Map<const MatrixT<S>> mat(const std::string& name) const {
    return mat(data_, name);
  }
  Eigen::Map<VectorT<S>> vec(const std::string& name) { return vec(data_, name); }
  Eigen::Map<const VectorT<S>> vec(const std::string& name) const {
    return vec(data_, name);
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  Eigen::Index total_ = 0;
  VectorT<S> data_;
};

namespace nn {

template <class S> using CMatRef = Eigen::Ref<const MatrixT<S>>;
template <class S> using CVecRef = Eigen::Ref<const VectorT<S>>;
template <class S> using MatRef = Eigen::Ref<MatrixT<S>>;
template <class S> using VecRef = Eigen::Ref<VectorT<S>>;

// TensorFlow-style SAME padding. Output spatial size ceil(in/stride).
struct ConvGeom {
  int in_h = 0, in_w = 0, k = 0, stride = 1;
  int out_h = 0, out_w = 0, pad_top = 0, pad_left = 0;
};

inline ConvGeom same_conv_geom(int in_h, int in_w, int k, int stride) {
  ConvGeom g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.k = k;
  g.stride = stride;
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  const int pad_h = std::max((g.out_h - 1) * stride + k - in_h, 0);
  const int pad_w = std::max((g.out_w - 1) * stride + k - in_w, 0);
  g.pad_top = pad_h / 2;
  g.pad_left = pad_w / 2;
  return g;
}

// x: C channel planes, each row-major in_h*in_w. M: [C*k*k, out_h*out_w].
template <class S>
void im2col(const S* x, int C, const ConvGeom& g, MatrixT<S>& M) {
  M.resize(Eigen::Index(C) * g.k * g.k, Eigen::Index(g.out_h) * g.out_w);
  for (int oy = 0; oy < g.out_h; ++oy)
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Eigen::Index p = Eigen::Index(oy) * g.out_w + ox;
      for (int c = 0; c < C; ++c) {
        const S* plane = x + std::size_t(c) * g.in_h * g.in_w;
        for (int ki = 0; ki < g.k; ++ki) {
          const int iy = oy * g.stride - g.pad_top + ki;
          for (int kj = 0; kj < g.k; ++kj) {
            const int ix = ox * g.stride - g.pad_left + kj;
            const Eigen::Index row = (Eigen::Index(c) * g.k + ki) * g.k + kj;
            M(row, p) = (iy >= 0 && iy < g.in_h && ix >= 0 && ix < g.in_w)
                            ? plane[std::size_t(iy) * g.in_w + ix]
                            : S(0);
          }
        }
      }
    }
}

// Scatter-add transpose of im2col; caller zeroes x beforehand.
template <class S>
void col2im(const MatrixT<S>& M, int C, const ConvGeom& g, S* x) {
  for (int oy = 0; oy < g.out_h; ++oy)
    for (int ox = 0; ox < g.out_w; ++ox) {
      const Eigen::Index p = Eigen::Index(oy) * g.out_w + ox;
      for (int c = 0; c < C; ++c) {
        S* plane = x + std::size_t(c) * g.in_h * g.in_w;
        for (int ki = 0; ki < g.k; ++ki) {
          const int iy = oy * g.stride - g.pad_top + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kj = 0; kj < g.k; ++kj) {
            const int ix = ox * g.stride - g.pad_left + kj;
            if (ix < 0 || ix >= g.in_w) continue;
            const Eigen::Index row = (Eigen::Index(c) * g.k + ki) * g.k + kj;
            plane[std::size_t(iy) * g.in_w + ix] += M(row, p);
          }
        }
      }
    }
}

// Y = X W + 1 b^T. X: [B, in] batch rows, W: [in, out].
template <class S>
BatchT<S> fc_forward(const BatchT<S>& X, const CMatRef<S>& W,
                     const CVecRef<S>& b) {
  BatchT<S> Y = X * W;
  Y.rowwise() += b.transpose();
  return Y;
}

template <class S>
void fc_backward(const BatchT<S>& X, const CMatRef<S>& W, const BatchT<S>& dY,
                 BatchT<S>& dX, MatRef<S> dW, VecRef<S> db) {
  dX = dY * W.transpose();
  dW += X.transpose() * dY;
  db += dY.colwise().sum().transpose();
}

// Convolution over a batch. X rows: C*H*W flat samples. Wmat: [O, C*k*k].
template <class S>
BatchT<S> conv_forward(const BatchT<S>& X, int C, const ConvGeom& g,
                       const CMatRef<S>& Wmat, const CVecRef<S>& b) {
  const int B = int(X.rows());
  const int O = int(Wmat.rows());
  const Eigen::Index P = Eigen::Index(g.out_h) * g.out_w;
  BatchT<S> Y(B, O * P);
  MatrixT<S> M;
  for (int i = 0; i < B; ++i) {
    im2col(X.row(i).data(), C, g, M);
    // channel-major output row viewed as col-major [P, O]
    Eigen::Map<MatrixT<S>> Ym(Y.row(i).data(), P, O);
    Ym = (Wmat * M).transpose();
    for (int o = 0; o < O; ++o) Ym.col(o).array() += b(o);
  }
  return Y;
}

template <class S>
void conv_backward(const BatchT<S>& X, int C, const ConvGeom& g,
                   const CMatRef<S>& Wmat, const BatchT<S>& dY, BatchT<S>& dX,
                   MatRef<S> dW, VecRef<S> db) {
  const int B = int(X.rows());
  const int O = int(Wmat.rows());
  const Eigen::Index P = Eigen::Index(g.out_h) * g.out_w;
  dX.setZero(B, X.cols());
  MatrixT<S> M, dYm(O, P), dM;
  for (int i = 0; i < B; ++i) {
    for (int o = 0; o < O; ++o) dYm.row(o) = dY.row(i).segment(o * P, P);
    im2col(X.row(i).data(), C, g, M);
    dW += dYm * M.transpose();
    db += dYm.rowwise().sum();
    dM = Wmat.transpose() * dYm;
    col2im(dM, C, g, dX.row(i).data());
  }
}

// Transposed convolution: maps (I, h, w) up to (O, H, W) where the SAME conv
// with geometry g would map (H, W) down to (h, w). Vmat: [I, O*k*k].
template <class S>
BatchT<S> deconv_forward(const BatchT<S>& X, int I, int O, const ConvGeom& g,
                         const CMatRef<S>& Vmat, const CVecRef<S>& b) {
  const int B = int(X.rows());
  const Eigen::Index P = Eigen::Index(g.out_h) * g.out_w;  // small side
  const Eigen::Index big = Eigen::Index(g.in_h) * g.in_w;
  BatchT<S> Y = BatchT<S>::Zero(B, O * big);
  MatrixT<S> Xm(I, P), M;
  for (int i = 0; i < B; ++i) {
    for (int c = 0; c < I; ++c) Xm.row(c) = X.row(i).segment(c * P, P);
    M = Vmat.transpose() * Xm;  // [O*k*k, P]
    col2im(M, O, g, Y.row(i).data());
    for (int o = 0; o < O; ++o) Y.row(i).segment(o * big, big).array() += b(o);
  }
  return Y;
}

template <class S>
void deconv_backward(const BatchT<S>& X, int I, int O, const ConvGeom& g,
                     const CMatRef<S>& Vmat, const BatchT<S>& dY, BatchT<S>& dX,
                     MatRef<S> dV, VecRef<S> db) {
  const int B = int(X.rows());
  const Eigen::Index P = Eigen::Index(g.out_h) * g.out_w;
  const Eigen::Index big = Eigen::Index(g.in_h) * g.in_w;
  dX.resize(B, X.cols());
  MatrixT<S> Xm(I, P), Mdy, dXm;
  for (int i = 0; i < B; ++i) {
    im2col(dY.row(i).data(), O, g, Mdy);  // [O*k*k, P]
    dXm = Vmat * Mdy;                     // [I, P]
    for (int c = 0; c < I; ++c) dX.row(i).segment(c * P, P) = dXm.row(c);
    for (int c = 0; c < I; ++c) Xm.row(c) = X.row(i).segment(c * P, P);
    dV += Xm * Mdy.transpose();
    for (int o = 0; o < O; ++o) db(o) += dY.row(i).segment(o * big, big).sum();
  }
}

// Batch normalization over (batch, spatial) per channel. Rows of X are
// channel-major: feature (c, s) at column c*Sp + s.
template <class S>
struct BnCache {
  BatchT<S> xhat;
  VectorT<S> inv_std;
  int C = 0, Sp = 0;
  bool train = true;
};

template <class S>
BatchT<S> bn_forward(const BatchT<S>& X, int C, int Sp, const CVecRef<S>& gamma,
                     const CVecRef<S>& beta, VecRef<S> running_mean,
                     VecRef<S> running_var, bool train, S eps, S momentum,
                     BnCache<S>* cache) {
  const int B = int(X.rows());
  const double N = double(B) * Sp;
  BatchT<S> Y(B, X.cols());
  if (cache) {
    cache->xhat.resize(B, X.cols());
    cache->inv_std.resize(C);
    cache->C = C;
    cache->Sp = Sp;
    cache->train = train;
  }
  for (int c = 0; c < C; ++c) {
    auto xc = X.middleCols(c * Sp, Sp);
    S mean, var;
    if (train) {
      mean = S(xc.sum() / N);
      var = S((xc.array() - mean).square().sum() / N);
      running_mean(c) = momentum * running_mean(c) + (S(1) - momentum) * mean;
      running_var(c) = momentum * running_var(c) + (S(1) - momentum) * var;
    } else {
      mean = running_mean(c);
      var = running_var(c);
    }
    const S inv = S(1) / std::sqrt(var + eps);
    auto xhat = ((xc.array() - mean) * inv).eval();
    Y.middleCols(c * Sp, Sp) = (gamma(c) * xhat + beta(c)).matrix();
    if (cache) {
      cache->xhat.middleCols(c * Sp, Sp) = xhat.matrix();
      cache->inv_std(c) = inv;
    }
  }
  return Y;
}

template <class S>
BatchT<S> bn_backward(const BnCache<S>& cache, const CVecRef<S>& gamma,
                      const BatchT<S>& dY, VecRef<S> dgamma, VecRef<S> dbeta) {
  const int B = int(dY.rows());
  const double N = double(B) * cache.Sp;
  BatchT<S> dX(B, dY.cols());
  for (int c = 0; c < cache.C; ++c) {
    auto dyc = dY.middleCols(c * cache.Sp, cache.Sp);
    auto xh = cache.xhat.middleCols(c * cache.Sp, cache.Sp);
    const S sum_dy = S(dyc.sum());
    const S sum_dy_xh = S((dyc.array() * xh.array()).sum());
    dbeta(c) += sum_dy;
    dgamma(c) += sum_dy_xh;
    if (cache.train) {
      dX.middleCols(c * cache.Sp, cache.Sp) =
          (gamma(c) * cache.inv_std(c) *
           (dyc.array() - S(sum_dy / N) - xh.array() * S(sum_dy_xh / N)))
              .matrix();
    } else {
      // frozen statistics: BN is a plain affine map
      dX.middleCols(c * cache.Sp, cache.Sp) =
          (gamma(c) * cache.inv_std(c) * dyc.array()).matrix();
    }
  }
  return dX;
}

template <class S>
BatchT<S> relu(const BatchT<S>& X) {
  return X.cwiseMax(S(0));
}

template <class S>
BatchT<S> relu_backward(const BatchT<S>& X_pre, const BatchT<S>& dY) {
  return (X_pre.array() > S(0)).select(dY.array(), S(0)).matrix();
}

template <class S>
BatchT<S> leaky_relu(const BatchT<S>& X, S slope) {
  return X.cwiseMax(X * slope);
}

template <class S>
BatchT<S> leaky_relu_backward(const BatchT<S>& X_pre, const BatchT<S>& dY,
                              S slope) {
  return (X_pre.array() > S(0)).select(dY.array(), dY.array() * slope).matrix();
}

template <class S>
BatchT<S> sigmoid(const BatchT<S>& X) {
  return (S(1) / (S(1) + (-X.array()).exp())).matrix();
}

using ArgmaxMat =
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// 2x2 max pooling with stride 2 (even spatial dims assumed). argmax indices
// cached for the backward routing.
template <class S>
BatchT<S> maxpool2_forward(const BatchT<S>& X, int C, int H, int W,
                           ArgmaxMat* argmax) {
  const int B = int(X.rows());
  const int oh = H / 2, ow = W / 2;
  BatchT<S> Y(B, Eigen::Index(C) * oh * ow);
  argmax->resize(B, Y.cols());
  for (int i = 0; i < B; ++i) {
    const S* x = X.row(i).data();
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          int best = -1;
          S bv = std::numeric_limits<S>::lowest();
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const int idx =
                  int((std::size_t(c) * H + oy * 2 + dy) * W + ox * 2 + dx);
              if (x[idx] > bv) {
                bv = x[idx];
                best = idx;
              }
            }
          const Eigen::Index out = (Eigen::Index(c) * oh + oy) * ow + ox;
          Y(i, out) = bv;
          (*argmax)(i, out) = best;
        }
  }
  return Y;
}

template <class S>
BatchT<S> maxpool2_backward(const ArgmaxMat& argmax, Eigen::Index in_cols,
                            const BatchT<S>& dY) {
  BatchT<S> dX = BatchT<S>::Zero(dY.rows(), in_cols);
  for (Eigen::Index i = 0; i < dY.rows(); ++i)
    for (Eigen::Index j = 0; j < dY.cols(); ++j)
      dX(i, argmax(i, j)) += dY(i, j);
  return dX;
}

}  // namespace nn
}  // namespace sepgan
