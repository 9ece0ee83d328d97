#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sepgan/core.hpp"
#include "sepgan/dataset.hpp"

namespace sepgan {

template <class S>
double mse(const ImageT<S>& a, const ImageT<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch("mse: shapes differ");
  return (a - b).array().square().sum() / double(a.size());
}

// PSNR in dB for peak value 1 (all pipeline images live in [0,1]).
inline double psnr(double mse_value) {
  if (mse_value <= 0.0)
    throw ZeroMse("psnr: zero MSE gives infinite PSNR");
  return 10.0 * std::log10(1.0 / mse_value);
}

inline constexpr int kErrorBatch = 16;

// Total squared error normalized by 16 images and the pixel count; equal to
// the mean of the 16 per-image MSEs.
template <class S>
double per_pixel_error(const std::vector<ImageT<S>>& recon,
                       const std::vector<ImageT<S>>& truth) {
  if (recon.size() != kErrorBatch || truth.size() != kErrorBatch)
    throw BatchSizeMismatch("per_pixel_error: batches must hold exactly 16 images");
  double total = 0.0;
  std::size_t pixels = 0;
  for (int i = 0; i < kErrorBatch; ++i) {
    if (recon[i].rows() != truth[i].rows() || recon[i].cols() != truth[i].cols())
      throw ShapeMismatch("per_pixel_error: image shapes differ");
    total += (recon[i] - truth[i]).array().square().sum();
    pixels = std::size_t(recon[i].size());
  }
  return total / (double(kErrorBatch) * double(pixels));
}

struct MetricReport {
  std::vector<double> mse_per_image;
  std::vector<double> psnr_per_image;
  double mean_mse = 0.0;
  double mean_psnr = 0.0;
  std::optional<double> per_pixel;  // set for 16-image batches
  std::optional<double> classifier_accuracy;
  std::string experiment;
};

template <class S>
MetricReport metric_report(const std::vector<ImageT<S>>& recon,
                           const std::vector<ImageT<S>>& truth,
                           const std::string& experiment = "") {
  if (recon.size() != truth.size())
    throw LengthMismatch("metric_report: batch sizes differ");
  MetricReport r;
  r.experiment = experiment;
  for (std::size_t i = 0; i < recon.size(); ++i) {
    const double m = mse(recon[i], truth[i]);
    r.mse_per_image.push_back(m);
    r.psnr_per_image.push_back(m > 0.0 ? psnr(m)
                                       : std::numeric_limits<double>::infinity());
    r.mean_mse += m;
  }
  if (!recon.empty()) r.mean_mse /= double(recon.size());
  if (r.mean_mse > 0.0) r.mean_psnr = psnr(r.mean_mse);
  if (recon.size() == kErrorBatch) r.per_pixel = per_pixel_error(recon, truth);
  return r;
}

}  // namespace sepgan
