#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepgan {

// Images are stored row-major so that raw IDX payloads and flattened vectors
// share one pixel order: pixel (r,c) lives at index r*w + c.
template <class S>
using ImageT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Batches: one sample per row, each row a row-major flattened image/tensor.
template <class S>
using BatchT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Image = ImageT<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dataset-io
struct BadMagic : Error { using Error::Error; };
struct Truncated : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// corruption
struct TooManyLines : Error { using Error::Error; };
struct UnsupportedAngle : Error { using Error::Error; };

// nets / inversion / sensing
struct DimMismatch : Error { using Error::Error; };
struct NonFiniteObjective : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };

// gan-training
struct ConfigInvalid : Error { using Error::Error; };
struct NumericalDivergence : Error { using Error::Error; };

// evaluation
struct ZeroMse : Error { using Error::Error; };
struct BatchSizeMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct BadCount : Error { using Error::Error; };

// spectral-theory
struct SupportMismatch : Error { using Error::Error; };
struct IllPosed : Error {
  IllPosed(const std::string& msg, std::vector<int> freqs)
      : Error(msg), frequencies(std::move(freqs)) {}
  std::vector<int> frequencies;
};

// cli-harness
struct UnknownSubcommand : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct UnknownKey : Error { using Error::Error; };
struct TypeError : Error { using Error::Error; };

template <class S>
VectorT<S> flatten(const ImageT<S>& img) {
  return Eigen::Map<const VectorT<S>>(img.data(), img.size());
}

template <class S>
ImageT<S> unflatten(const VectorT<S>& v, int h, int w) {
  if (v.size() != static_cast<Eigen::Index>(h) * w)
    throw DimMismatch("unflatten: vector length " + std::to_string(v.size()) +
                      " != " + std::to_string(h) + "x" + std::to_string(w));
  ImageT<S> img(h, w);
  Eigen::Map<VectorT<S>>(img.data(), img.size()) = v;
  return img;
}

}  // namespace sepgan
