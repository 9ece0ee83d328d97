#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sepgan/adam.hpp"
#include "sepgan/checkpoint.hpp"
#include "sepgan/core.hpp"
#include "sepgan/corruption.hpp"
#include "sepgan/dataset.hpp"
#include "sepgan/grid.hpp"
#include "sepgan/nets.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

enum class TrainMode { denoise, demix };
enum class ZLink { independent, shared, scaled };

struct TrainConfig {
  TrainMode mode = TrainMode::denoise;
  int batch_size = 64;
  int epochs = 64;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int d_steps_per_g_step = 1;  // the paper trains each net once per iteration
  ZLink z_link = ZLink::independent;
  double z_scale = 0.1;          // the "aligned vectors" ablation factor
  bool non_saturating = true;    // literal minimax generator loss when false
  CorruptionSpec corruption;     // denoise mode
  std::uint64_t seed = 0;
  std::vector<int> sample_epochs = {1, 2, 5, 64};  // grid snapshot cadence
  int checkpoint_every = 0;  // additionally every N epochs; 0 = final only

  void validate(std::size_t dataset_size) const {
    if (batch_size < 1) throw ConfigInvalid("train: batch_size must be >= 1");
    if (epochs < 1) throw ConfigInvalid("train: epochs must be >= 1");
    if (d_steps_per_g_step != 1)
      throw ConfigInvalid("train: d_steps_per_g_step is fixed at 1");
    if (dataset_size < std::size_t(batch_size))
      throw ConfigInvalid("train: dataset smaller than one batch");
    if (z_scale <= 0) throw ConfigInvalid("train: z_scale must be positive");
  }
};

// loss_d = -mean log s(real) - mean log(1 - s(fake));
// loss_g = -mean log s(fake) (non-saturating) or +mean log(1 - s(fake)).
template <class S>
std::pair<double, double> gan_losses(const VectorT<S>& d_real_logits,
                                     const VectorT<S>& d_fake_logits,
                                     bool non_saturating = true) {
  auto softplus = [](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  };
  double loss_d = 0.0;
  for (Eigen::Index i = 0; i < d_real_logits.size(); ++i)
    loss_d += softplus(-double(d_real_logits(i)));
  loss_d /= double(d_real_logits.size());
  double fake_term = 0.0, loss_g = 0.0;
  for (Eigen::Index i = 0; i < d_fake_logits.size(); ++i) {
    fake_term += softplus(double(d_fake_logits(i)));
    loss_g += non_saturating ? softplus(-double(d_fake_logits(i)))
                             : -softplus(double(d_fake_logits(i)));
  }
  loss_d += fake_term / double(d_fake_logits.size());
  loss_g /= double(d_fake_logits.size());
  return {loss_d, loss_g};
}

struct EpochStats {
  int epoch = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
};

// Observer for artifacts; the trainer itself never touches the filesystem.
template <class S>
struct TrainSink {
  virtual ~TrainSink() = default;
  virtual void on_samples(int /*epoch*/, const std::vector<ImageT<S>>& /*g1*/,
                          const std::vector<ImageT<S>>& /*g2*/) {}
  virtual void on_checkpoint(int /*epoch*/, const Checkpoint& /*ck*/) {}
  virtual void on_latents(long /*step*/, const BatchT<S>& /*z1*/,
                          const BatchT<S>& /*z2*/) {}
};

template <class S>
struct TrainResult {
  Generator<S> g1;
  std::optional<Generator<S>> g2;  // demix mode
  Discriminator<S> d;
  std::vector<EpochStats> epochs;
  long steps = 0;
  long d_updates = 0;
  long g_updates = 0;
};

namespace detail {

template <class S>
std::vector<ImageT<S>> rows_to_images(const BatchT<S>& rows, int h, int w) {
  std::vector<ImageT<S>> out;
  out.reserve(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.push_back(unflatten<S>(rows.row(i).transpose(), h, w));
  return out;
}

inline nlohmann::json gen_arch_json(const GeneratorArch& a) {
  return {{"family", a.family},       {"latent_dim", a.latent_dim},
          {"image_h", a.image_h},     {"image_w", a.image_w},
          {"fc1_width", a.fc1_width}, {"fc2_channels", a.fc2_channels},
          {"base_h", a.base_h},       {"base_w", a.base_w},
          {"deconv_filters", a.deconv_filters},
          {"kernel", a.kernel},       {"batchnorm", a.batchnorm}};
}

inline GeneratorArch gen_arch_from_json(const nlohmann::json& j) {
  GeneratorArch a;
  a.family = j.at("family");
  a.latent_dim = j.at("latent_dim");
  a.image_h = j.at("image_h");
  a.image_w = j.at("image_w");
  a.fc1_width = j.at("fc1_width");
  a.fc2_channels = j.at("fc2_channels");
  a.base_h = j.at("base_h");
  a.base_w = j.at("base_w");
  a.deconv_filters = j.at("deconv_filters");
  a.kernel = j.at("kernel");
  a.batchnorm = j.at("batchnorm");
  return a;
}

inline nlohmann::json disc_arch_json(const DiscriminatorArch& a) {
  return {{"family", a.family},
          {"image_h", a.image_h},
          {"image_w", a.image_w},
          {"conv1_filters", a.conv1_filters},
          {"conv2_filters", a.conv2_filters},
          {"kernel", a.kernel},
          {"batchnorm", a.batchnorm}};
}

inline DiscriminatorArch disc_arch_from_json(const nlohmann::json& j) {
  DiscriminatorArch a;
  a.family = j.at("family");
  a.image_h = j.at("image_h");
  a.image_w = j.at("image_w");
  a.conv1_filters = j.at("conv1_filters");
  a.conv2_filters = j.at("conv2_filters");
  a.kernel = j.at("kernel");
  a.batchnorm = j.at("batchnorm");
  return a;
}

template <class S>
void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const std::size_t j = i + rng.uniform_int(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
}

template <class S>
BatchT<S> uniform_latent_batch(int b, int dim, RngStream& rng) {
  BatchT<S> z(b, dim);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z.data()[i] = S(rng.uniform(-1.0, 1.0));
  return z;
}

}  // namespace detail

// One GAN iteration trains the discriminator once and each generator once.
// A fresh corruption sample is drawn per fake image every step (denoise);
// the demixing fake is the unclamped generator sum, exactly like the real
// mixtures. Deterministic given the seed in single-threaded mode.
template <class S>
class GanTrainer {
 public:
  GanTrainer(const TrainConfig& cfg, const GeneratorArch& ga1,
             const std::optional<GeneratorArch>& ga2,
             const DiscriminatorArch& da)
      : cfg_(cfg),
        g1_(init_generator<S>(ga1, RngStream::mix(cfg.seed, "gen1"))),
        d_(init_discriminator<S>(da, RngStream::mix(cfg.seed, "disc"))),
        adam_g1_(S(cfg.lr), S(cfg.beta1), S(cfg.beta2)),
        adam_g2_(S(cfg.lr), S(cfg.beta1), S(cfg.beta2)),
        adam_d_(S(cfg.lr), S(cfg.beta1), S(cfg.beta2)),
        data_rng_(RngStream::derive(cfg.seed, "train.data")),
        latent1_rng_(RngStream::derive(cfg.seed, "train.latent1")),
        latent2_rng_(RngStream::derive(cfg.seed, "train.latent2")),
        corruption_rng_(RngStream::derive(cfg.seed, "train.corruption")) {
    if (ga2) g2_.emplace(init_generator<S>(*ga2, RngStream::mix(cfg.seed, "gen2")));
    if (cfg.mode == TrainMode::demix && !g2_)
      throw ConfigInvalid("train: demix mode needs two generator descriptors");
    if (cfg.z_link != ZLink::independent && g2_ &&
        g1_.arch.latent_dim != g2_->arch.latent_dim)
      throw ConfigInvalid("train: z alignment needs equal latent dims");
    adam_g1_.reset(g1_.params.size());
    if (g2_) adam_g2_.reset(g2_->params.size());
    adam_d_.reset(d_.params.size());
    // fixed z for the evolution grids, drawn once per run
    RngStream grid_rng = RngStream::derive(cfg.seed, "train.gridz");
    grid_z1_ = detail::uniform_latent_batch<S>(kGridSide * kGridSide,
                                               g1_.arch.latent_dim, grid_rng);
    if (g2_)
      grid_z2_ = detail::uniform_latent_batch<S>(kGridSide * kGridSide,
                                                 g2_->arch.latent_dim, grid_rng);
  }

  // flat observations, one per row
  TrainResult<S> run(const BatchT<S>& observed, TrainSink<S>* sink,
                     const Checkpoint* resume) {
    cfg_.validate(std::size_t(observed.rows()));
    const int B = cfg_.batch_size;
    const Eigen::Index n = observed.rows();
    const long iters_per_epoch = long(n / B);
    int start_epoch = 0;
    if (resume) start_epoch = restore(*resume);

    std::vector<EpochStats> stats = resumed_stats_;
    std::vector<std::size_t> order(n);
    for (int epoch = start_epoch; epoch < cfg_.epochs; ++epoch) {
      // rebuilt every epoch so the permutation is a pure function of the
      // stream state and checkpoints replay exactly
      for (Eigen::Index i = 0; i < n; ++i) order[std::size_t(i)] = std::size_t(i);
      detail::shuffle_indices<S>(order, data_rng_);
      double sum_ld = 0.0, sum_lg = 0.0;
      for (long it = 0; it < iters_per_epoch; ++it) {
        BatchT<S> real(B, observed.cols());
        for (int b = 0; b < B; ++b)
          real.row(b) = observed.row(Eigen::Index(order[it * B + b]));
        const auto [ld, lg] = train_step(real, sink);
        sum_ld += ld;
        sum_lg += lg;
        if (!std::isfinite(ld) || !std::isfinite(lg))
          throw NumericalDivergence(
              "train: non-finite loss at epoch " + std::to_string(epoch + 1) +
              " step " + std::to_string(steps_) + " (loss_d=" +
              std::to_string(ld) + ", loss_g=" + std::to_string(lg) + ")");
      }
      const int e1 = epoch + 1;
      stats.push_back({e1, sum_ld / double(iters_per_epoch),
                       sum_lg / double(iters_per_epoch)});
      if (sink) {
        if (want_samples(e1)) emit_samples(e1, sink);
        if (want_checkpoint(e1)) sink->on_checkpoint(e1, snapshot(e1, stats));
      }
      // one D update and one (per-)G update per iteration, never more
      if (d_updates_ != g_updates_ || d_updates_ != steps_)
        throw Error("train: update counters out of step");
    }

    TrainResult<S> res{std::move(g1_), std::move(g2_), std::move(d_),
                       std::move(stats), steps_, d_updates_, g_updates_};
    return res;
  }

  const BatchT<S>& grid_z1() const { return grid_z1_; }

  Checkpoint snapshot(int epoch, const std::vector<EpochStats>& stats) const {
    Checkpoint ck;
    ck.manifest["format"] = "sepgan-train";
    ck.manifest["version"] = 1;
    ck.manifest["mode"] = cfg_.mode == TrainMode::denoise ? "denoise" : "demix";
    ck.manifest["seed"] = cfg_.seed;
    ck.manifest["epoch"] = epoch;
    ck.manifest["step"] = steps_;
    ck.manifest["g1_arch"] = detail::gen_arch_json(g1_.arch);
    if (g2_) ck.manifest["g2_arch"] = detail::gen_arch_json(g2_->arch);
    ck.manifest["d_arch"] = detail::disc_arch_json(d_.arch);
    ck.manifest["rng"] = {{"data", data_rng_.save_state()},
                          {"latent1", latent1_rng_.save_state()},
                          {"latent2", latent2_rng_.save_state()},
                          {"corruption", corruption_rng_.save_state()}};
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& s : stats)
      hist.push_back({{"epoch", s.epoch}, {"loss_d", s.loss_d},
                      {"loss_g", s.loss_g}});
    ck.manifest["epoch_losses"] = hist;
    auto add_vec = [&ck](const std::string& name, const VectorT<S>& v) {
      ck.add(name, v.template cast<double>());
    };
    add_vec("g1.params", g1_.params.flat());
    add_vec("g1.stats", g1_.stats.flat());
    add_vec("g1.adam.m", adam_g1_.m);
    add_vec("g1.adam.v", adam_g1_.v);
    ck.manifest["g1.adam.t"] = adam_g1_.t;
    if (g2_) {
      add_vec("g2.params", g2_->params.flat());
      add_vec("g2.stats", g2_->stats.flat());
      add_vec("g2.adam.m", adam_g2_.m);
      add_vec("g2.adam.v", adam_g2_.v);
      ck.manifest["g2.adam.t"] = adam_g2_.t;
    }
    add_vec("d.params", d_.params.flat());
    add_vec("d.stats", d_.stats.flat());
    add_vec("d.adam.m", adam_d_.m);
    add_vec("d.adam.v", adam_d_.v);
    ck.manifest["d.adam.t"] = adam_d_.t;
    Eigen::VectorXd gz1 = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(
                              grid_z1_.data(), grid_z1_.size())
                              .template cast<double>();
    ck.add("grid.z1", gz1);
    if (g2_) {
      Eigen::VectorXd gz2 =
          Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(grid_z2_.data(),
                                                                grid_z2_.size())
              .template cast<double>();
      ck.add("grid.z2", gz2);
    }
    return ck;
  }

 private:
  bool want_samples(int epoch) const {
    if (epoch == cfg_.epochs) return true;
    return std::find(cfg_.sample_epochs.begin(), cfg_.sample_epochs.end(),
                     epoch) != cfg_.sample_epochs.end();
  }

  bool want_checkpoint(int epoch) const {
    if (epoch == cfg_.epochs) return true;
    return cfg_.checkpoint_every > 0 && epoch % cfg_.checkpoint_every == 0;
  }

  void emit_samples(int epoch, TrainSink<S>* sink) {
    const auto imgs1 = detail::rows_to_images<S>(
        g1_.forward(grid_z1_, false, nullptr), g1_.arch.image_h,
        g1_.arch.image_w);
    std::vector<ImageT<S>> imgs2;
    if (g2_)
      imgs2 = detail::rows_to_images<S>(g2_->forward(grid_z2_, false, nullptr),
                                        g2_->arch.image_h, g2_->arch.image_w);
    sink->on_samples(epoch, imgs1, imgs2);
  }

  int restore(const Checkpoint& ck) {
    g1_.params.flat() = ck.vec("g1.params").cast<S>();
    g1_.stats.flat() = ck.vec("g1.stats").cast<S>();
    adam_g1_.m = ck.vec("g1.adam.m").cast<S>();
    adam_g1_.v = ck.vec("g1.adam.v").cast<S>();
    adam_g1_.t = ck.manifest.at("g1.adam.t");
    if (g2_) {
      g2_->params.flat() = ck.vec("g2.params").cast<S>();
      g2_->stats.flat() = ck.vec("g2.stats").cast<S>();
      adam_g2_.m = ck.vec("g2.adam.m").cast<S>();
      adam_g2_.v = ck.vec("g2.adam.v").cast<S>();
      adam_g2_.t = ck.manifest.at("g2.adam.t");
    }
    d_.params.flat() = ck.vec("d.params").cast<S>();
    d_.stats.flat() = ck.vec("d.stats").cast<S>();
    adam_d_.m = ck.vec("d.adam.m").cast<S>();
    adam_d_.v = ck.vec("d.adam.v").cast<S>();
    adam_d_.t = ck.manifest.at("d.adam.t");
    data_rng_.restore_state(ck.manifest.at("rng").at("data"));
    latent1_rng_.restore_state(ck.manifest.at("rng").at("latent1"));
    latent2_rng_.restore_state(ck.manifest.at("rng").at("latent2"));
    corruption_rng_.restore_state(ck.manifest.at("rng").at("corruption"));
    {
      Eigen::VectorXd gz = ck.vec("grid.z1");
      Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(grid_z1_.data(),
                                                      grid_z1_.size()) =
          gz.cast<S>();
    }
    if (g2_ && ck.has("grid.z2")) {
      Eigen::VectorXd gz = ck.vec("grid.z2");
      Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(grid_z2_.data(),
                                                      grid_z2_.size()) =
          gz.cast<S>();
    }
    steps_ = ck.manifest.at("step");
    d_updates_ = steps_;
    g_updates_ = steps_;
    resumed_stats_.clear();
    for (const auto& e : ck.manifest.at("epoch_losses"))
      resumed_stats_.push_back({e.at("epoch"), e.at("loss_d"), e.at("loss_g")});
    return ck.manifest.at("epoch");
  }

  std::pair<double, double> train_step(const BatchT<S>& real, TrainSink<S>* sink) {
    const int B = int(real.rows());
    const int h1 = g1_.arch.latent_dim;

    // --- assemble the fake batch ---
    BatchT<S> z1 = detail::uniform_latent_batch<S>(B, h1, latent1_rng_);
    BatchT<S> z2;
    if (cfg_.mode == TrainMode::demix) {
      switch (cfg_.z_link) {
        case ZLink::independent:
          z2 = detail::uniform_latent_batch<S>(B, g2_->arch.latent_dim,
                                               latent2_rng_);
          break;
        case ZLink::shared:
          z2 = z1;
          break;
        case ZLink::scaled:
          z2 = S(cfg_.z_scale) * z1;
          break;
      }
      if (sink) sink->on_latents(steps_, z1, z2);
    }

    typename Generator<S>::Cache gc1, gc2;
    BatchT<S> fake = g1_.forward(z1, true, &gc1);
    if (cfg_.mode == TrainMode::demix) {
      fake += g2_->forward(z2, true, &gc2);
    } else {
      const int h = g1_.arch.image_h, w = g1_.arch.image_w;
      for (int b = 0; b < B; ++b) {
        const ImageT<S> n =
            sample_corruption<S>(h, w, cfg_.corruption, corruption_rng_);
        fake.row(b) += flatten(n).transpose();
      }
    }

    // --- discriminator update ---
    typename Discriminator<S>::Cache dc_real, dc_fake;
    VectorT<S> lr_logits = d_.forward(real, true, &dc_real);
    VectorT<S> lf_logits = d_.forward(fake, true, &dc_fake);
    const auto [loss_d, loss_g_pre] =
        gan_losses<S>(lr_logits, lf_logits, cfg_.non_saturating);

    auto logistic = [](const VectorT<S>& v) -> VectorT<S> {
      return (S(1) / (S(1) + (-v.array()).exp())).matrix();
    };
    VectorT<S> dreal = (logistic(lr_logits).array() - S(1)) / S(B);
    VectorT<S> dfake = logistic(lf_logits) / S(B);
    VectorT<S> grads_real, grads_fake;
    d_.backward(dc_real, dreal, &grads_real, nullptr);
    d_.backward(dc_fake, dfake, &grads_fake, nullptr);
    VectorT<S> dgrads = grads_real + grads_fake;
    adam_d_.step(d_.params.flat(), dgrads);
    ++d_updates_;

    // --- generator update(s): same z batch through the updated D ---
    typename Discriminator<S>::Cache dc_g;
    VectorT<S> g_logits = d_.forward(fake, true, &dc_g);
    VectorT<S> sig = logistic(g_logits);
    VectorT<S> dlogit = cfg_.non_saturating
                            ? ((sig.array() - S(1)) / S(B)).matrix().eval()
                            : (-sig.array() / S(B)).matrix().eval();
    BatchT<S> dfake_img;
    d_.backward(dc_g, dlogit, nullptr, &dfake_img);

    VectorT<S> g1_grads;
    g1_.backward(gc1, dfake_img, &g1_grads, nullptr);
    adam_g1_.step(g1_.params.flat(), g1_grads);
    if (cfg_.mode == TrainMode::demix) {
      VectorT<S> g2_grads;
      g2_->backward(gc2, dfake_img, &g2_grads, nullptr);
      adam_g2_.step(g2_->params.flat(), g2_grads);
    }
    ++g_updates_;
    ++steps_;

    const auto [ld2, lg] = gan_losses<S>(lr_logits, g_logits, cfg_.non_saturating);
    (void)ld2;
    (void)loss_g_pre;
    return {loss_d, lg};
  }

  TrainConfig cfg_;
  Generator<S> g1_;
  std::optional<Generator<S>> g2_;
  Discriminator<S> d_;
  Adam<S> adam_g1_, adam_g2_, adam_d_;
  RngStream data_rng_, latent1_rng_, latent2_rng_, corruption_rng_;
  BatchT<S> grid_z1_, grid_z2_;
  long steps_ = 0, d_updates_ = 0, g_updates_ = 0;
  std::vector<EpochStats> resumed_stats_;
};

template <class S>
BatchT<S> images_to_rows(const std::vector<ImageT<S>>& images) {
  if (images.empty()) throw ShapeMismatch("images_to_rows: empty set");
  BatchT<S> rows(Eigen::Index(images.size()), images.front().size());
  for (std::size_t i = 0; i < images.size(); ++i)
    rows.row(Eigen::Index(i)) = flatten(images[i]).transpose();
  return rows;
}

// Observed corrupted samples y_i against generator outputs corrupted by the
// same noise model (Fig. 2a wiring).
template <class S>
TrainResult<S> train_denoising_gan(const TrainConfig& cfg,
                                   const ImageSetT<S>& observed,
                                   const GeneratorArch& ga,
                                   const DiscriminatorArch& da,
                                   TrainSink<S>* sink = nullptr,
                                   const Checkpoint* resume = nullptr) {
  if (cfg.mode != TrainMode::denoise)
    throw ConfigInvalid("train_denoising_gan: config mode is not denoise");
  GanTrainer<S> trainer(cfg, ga, std::nullopt, da);
  return trainer.run(images_to_rows<S>(observed.images), sink, resume);
}

// Observed mixtures against summed generator outputs (Fig. 2b wiring).
template <class S>
TrainResult<S> train_demixing_gan(const TrainConfig& cfg,
                                  const MixtureSetT<S>& observed,
                                  const GeneratorArch& ga1,
                                  const GeneratorArch& ga2,
                                  const DiscriminatorArch& da,
                                  TrainSink<S>* sink = nullptr,
                                  const Checkpoint* resume = nullptr) {
  if (cfg.mode != TrainMode::demix)
    throw ConfigInvalid("train_demixing_gan: config mode is not demix");
  GanTrainer<S> trainer(cfg, ga1, ga2, da);
  return trainer.run(images_to_rows<S>(observed.mixtures), sink, resume);
}

// Rebuild a generator from a training checkpoint (g1 by default).
template <class S>
Generator<S> generator_from_checkpoint(const Checkpoint& ck,
                                       const std::string& which = "g1") {
  const auto arch = detail::gen_arch_from_json(ck.manifest.at(which + "_arch"));
  Generator<S> g = Generator<S>::build(arch);
  g.params.flat() = ck.vec(which + ".params").cast<S>();
  g.stats.flat() = ck.vec(which + ".stats").cast<S>();
  return g;
}

template <class S>
Discriminator<S> discriminator_from_checkpoint(const Checkpoint& ck) {
  const auto arch = detail::disc_arch_from_json(ck.manifest.at("d_arch"));
  Discriminator<S> d = Discriminator<S>::build(arch);
  d.params.flat() = ck.vec("d.params").cast<S>();
  d.stats.flat() = ck.vec("d.stats").cast<S>();
  return d;
}

}  // namespace sepgan
