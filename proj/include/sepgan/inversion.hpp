#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sepgan/adam.hpp"
#include "sepgan/core.hpp"
#include "sepgan/nets.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

// Defaults follow the compressed-sensing appendix: lambda 0.1, 10 restarts,
// 10000 Adam iterations at step 0.01. Latent descent is unconstrained; the
// l2 regularizer stands in for the box projection.
struct InversionOptions {
  double lambda = 0.1;   // also lambda1 for demixing
  double lambda2 = 0.1;  // demixing only
  int restarts = 10;
  int iterations = 10000;
  double step_size = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int block_size = 100;  // demixing alternation: inner steps per latent block
  std::uint64_t seed = 0;

  void validate() const {
    if (restarts < 1) throw ConfigInvalid("inversion: restarts must be >= 1");
    if (iterations < 1) throw ConfigInvalid("inversion: iterations must be >= 1");
    if (lambda < 0 || lambda2 < 0)
      throw ConfigInvalid("inversion: lambdas must be nonnegative");
    if (block_size < 1) throw ConfigInvalid("inversion: block_size must be >= 1");
  }
};

template <class S>
struct InversionResult {
  VectorT<S> best_z;
  VectorT<S> best_z2;  // demixing only
  std::vector<std::vector<double>> objective_trace;  // per restart
  std::vector<double> restart_objectives;  // best-of-trace per restart
  int selected_restart = 0;
  VectorT<S> reconstruction;   // flattened G(best_z)
  VectorT<S> reconstruction2;  // demixing: G2(best_z2)
};

// Latent models are duck-typed: latent_dim(), output_dim(), and
// eval(z) returning an object with .output and .pullback(w) = J^T w.
// Generator-backed model; batch norm runs in inference mode so the map is
// deterministic.
template <class S>
class GeneratorModel {
 public:
  explicit GeneratorModel(Generator<S>& g) : g_(&g) {}

  int latent_dim() const { return g_->arch.latent_dim; }
  int output_dim() const { return g_->arch.image_h * g_->arch.image_w; }
  int image_h() const { return g_->arch.image_h; }
  int image_w() const { return g_->arch.image_w; }

  struct Eval {
    Generator<S>* g = nullptr;
    typename Generator<S>::Cache cache;
    VectorT<S> output;

    VectorT<S> pullback(const VectorT<S>& w) const {
      BatchT<S> dout(1, w.size());
      dout.row(0) = w.transpose();
      BatchT<S> dz;
      g->backward(cache, dout, nullptr, &dz);
      return dz.row(0).transpose();
    }
  };

  Eval eval(const VectorT<S>& z) const {
    Eval e;
    e.g = g_;
    BatchT<S> zb(1, z.size());
    zb.row(0) = z.transpose();
    e.output = g_->forward(zb, /*train=*/false, &e.cache).row(0).transpose();
    return e;
  }

 private:
  Generator<S>* g_;
};

namespace detail {

template <class S>
VectorT<S> random_latent(int dim, RngStream& rng) {
  VectorT<S> z(dim);
  for (int i = 0; i < dim; ++i) z(i) = S(rng.uniform(-1.0, 1.0));
  return z;
}

inline void check_finite(double obj, int restart, int iter) {
  if (!std::isfinite(obj))
    throw NonFiniteObjective("inversion: non-finite objective at restart " +
                             std::to_string(restart) + " iteration " +
                             std::to_string(iter));
}

}  // namespace detail

// min_z ||u - G(z)||^2 + lambda ||z||^2 from several uniform random starts;
// each restart reports its best-of-trace iterate, the argmin restart wins
// (ties to the lowest index).
template <class S, class Model>
InversionResult<S> invert_denoise_flat(const Model& model, const VectorT<S>& u,
                                       const InversionOptions& opts) {
  opts.validate();
  if (u.size() != model.output_dim())
    throw ShapeMismatch("invert_denoise: target size " +
                        std::to_string(u.size()) + " != generator output " +
                        std::to_string(model.output_dim()));
  InversionResult<S> res;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    RngStream rng = RngStream::derive(opts.seed, "inversion-restart", r);
    VectorT<S> z = detail::random_latent<S>(model.latent_dim(), rng);
    Adam<S> adam(S(opts.step_size), S(opts.adam_beta1), S(opts.adam_beta2));
    std::vector<double> trace;
    trace.reserve(opts.iterations + 1);
    double r_best = std::numeric_limits<double>::infinity();
    VectorT<S> r_best_z = z;
    for (int it = 0; it <= opts.iterations; ++it) {
      auto e = model.eval(z);
      const VectorT<S> resid = e.output - u;
      const double obj =
          double(resid.squaredNorm()) + opts.lambda * double(z.squaredNorm());
      detail::check_finite(obj, r, it);
      trace.push_back(obj);
      if (obj < r_best) {
        r_best = obj;
        r_best_z = z;
      }
      if (it == opts.iterations) break;
      VectorT<S> grad = e.pullback(S(2) * resid) + S(2 * opts.lambda) * z;
      adam.step(z, grad);
    }
    res.objective_trace.push_back(std::move(trace));
    res.restart_objectives.push_back(r_best);
    if (r_best < best) {
      best = r_best;
      res.selected_restart = r;
      res.best_z = r_best_z;
    }
  }
  res.reconstruction = model.eval(res.best_z).output;
  return res;
}

// min_{z1,z2} ||y - G1(z1) - G2(z2)||^2 + l1||z1||^2 + l2||z2||^2 by
// block-alternating descent: block_size Adam steps on z1 with z2 frozen,
// then the roles swap, until the iteration budget is spent.
template <class S, class M1, class M2>
InversionResult<S> invert_demix_flat(const M1& g1, const M2& g2,
                                     const VectorT<S>& y,
                                     const InversionOptions& opts) {
  opts.validate();
  if (y.size() != g1.output_dim() || y.size() != g2.output_dim())
    throw ShapeMismatch("invert_demix: target size does not match generators");
  InversionResult<S> res;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    RngStream rng = RngStream::derive(opts.seed, "inversion-restart", r);
    VectorT<S> z1 = detail::random_latent<S>(g1.latent_dim(), rng);
    VectorT<S> z2 = detail::random_latent<S>(g2.latent_dim(), rng);
    Adam<S> adam1(S(opts.step_size), S(opts.adam_beta1), S(opts.adam_beta2));
    Adam<S> adam2(S(opts.step_size), S(opts.adam_beta1), S(opts.adam_beta2));
    std::vector<double> trace;
    trace.reserve(opts.iterations + 1);
    double r_best = std::numeric_limits<double>::infinity();
    VectorT<S> r_best_z1 = z1, r_best_z2 = z2;
    VectorT<S> frozen = g2.eval(z2).output;  // inactive branch, refreshed per block
    bool active_is_z1 = true;
    for (int it = 0; it <= opts.iterations; ++it) {
      if (it > 0 && it % opts.block_size == 0 && it != opts.iterations) {
        active_is_z1 = !active_is_z1;
        frozen = active_is_z1 ? g2.eval(z2).output : g1.eval(z1).output;
      }
      auto e = active_is_z1 ? g1.eval(z1) : g2.eval(z2);
      const VectorT<S> resid = e.output + frozen - y;
      const double obj = double(resid.squaredNorm()) +
                         opts.lambda * double(z1.squaredNorm()) +
                         opts.lambda2 * double(z2.squaredNorm());
      detail::check_finite(obj, r, it);
      trace.push_back(obj);
      if (obj < r_best) {
        r_best = obj;
        r_best_z1 = z1;
        r_best_z2 = z2;
      }
      if (it == opts.iterations) break;
      if (active_is_z1) {
        VectorT<S> grad = e.pullback(S(2) * resid) + S(2 * opts.lambda) * z1;
        adam1.step(z1, grad);
      } else {
        VectorT<S> grad = e.pullback(S(2) * resid) + S(2 * opts.lambda2) * z2;
        adam2.step(z2, grad);
      }
    }
    res.objective_trace.push_back(std::move(trace));
    res.restart_objectives.push_back(r_best);
    if (r_best < best) {
      best = r_best;
      res.selected_restart = r;
      res.best_z = r_best_z1;
      res.best_z2 = r_best_z2;
    }
  }
  res.reconstruction = g1.eval(res.best_z).output;
  res.reconstruction2 = g2.eval(res.best_z2).output;
  return res;
}

// min_z ||y - A vec(G(z))||^2 + lambda ||z||^2. The regularized objective
// drives the descent and picks each restart's best-of-trace iterate; among
// restarts the one with the lowest measurement error at that iterate wins
// ("choose the one gives the best measurement error"), and
// restart_objectives records those measurement errors.
template <class S, class Model>
InversionResult<S> invert_cs(const Model& model, const MatrixT<S>& A,
                             const VectorT<S>& y, const InversionOptions& opts) {
  opts.validate();
  if (A.rows() < 1 || A.cols() < 1)
    throw DimMismatch("invert_cs: degenerate measurement operator");
  if (A.cols() != model.output_dim())
    throw DimMismatch("invert_cs: operator columns " + std::to_string(A.cols()) +
                      " != generator output " +
                      std::to_string(model.output_dim()));
  if (y.size() != A.rows())
    throw DimMismatch("invert_cs: measurement length " +
                      std::to_string(y.size()) + " != operator rows " +
                      std::to_string(A.rows()));
  InversionResult<S> res;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    RngStream rng = RngStream::derive(opts.seed, "inversion-restart", r);
    VectorT<S> z = detail::random_latent<S>(model.latent_dim(), rng);
    Adam<S> adam(S(opts.step_size), S(opts.adam_beta1), S(opts.adam_beta2));
    std::vector<double> trace;
    trace.reserve(opts.iterations + 1);
    double r_best_obj = std::numeric_limits<double>::infinity();
    double r_best_meas = std::numeric_limits<double>::infinity();
    VectorT<S> r_best_z = z;
    for (int it = 0; it <= opts.iterations; ++it) {
      auto e = model.eval(z);
      const VectorT<S> resid = A * e.output - y;
      const double meas_err = double(resid.squaredNorm());
      const double obj = meas_err + opts.lambda * double(z.squaredNorm());
      detail::check_finite(obj, r, it);
      trace.push_back(obj);
      if (obj < r_best_obj) {
        r_best_obj = obj;
        r_best_meas = meas_err;
        r_best_z = z;
      }
      if (it == opts.iterations) break;
      VectorT<S> grad =
          e.pullback(S(2) * (A.transpose() * resid)) + S(2 * opts.lambda) * z;
      adam.step(z, grad);
    }
    res.objective_trace.push_back(std::move(trace));
    res.restart_objectives.push_back(r_best_meas);
    if (r_best_meas < best) {
      best = r_best_meas;
      res.selected_restart = r;
      res.best_z = r_best_z;
    }
  }
  res.reconstruction = model.eval(res.best_z).output;
  return res;
}

// Image-facing wrappers.
template <class S, class Model>
InversionResult<S> invert_denoise(const Model& model, const ImageT<S>& u,
                                  const InversionOptions& opts) {
  return invert_denoise_flat<S>(model, flatten(u), opts);
}

template <class S, class M1, class M2>
InversionResult<S> invert_demix(const M1& g1, const M2& g2, const ImageT<S>& y,
                                const InversionOptions& opts) {
  return invert_demix_flat<S>(g1, g2, flatten(y), opts);
}

}  // namespace sepgan
