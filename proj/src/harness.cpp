#include "sepgan/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sepgan/classifier.hpp"
#include "sepgan/config.hpp"
#include "sepgan/gan.hpp"
#include "sepgan/grid.hpp"
#include "sepgan/ica.hpp"
#include "sepgan/inversion.hpp"
#include "sepgan/manifest.hpp"
#include "sepgan/metrics.hpp"
#include "sepgan/sensing.hpp"
#include "sepgan/spectral.hpp"
#include "sepgan/synthetic.hpp"

namespace sepgan {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string device;
  std::vector<std::string> checkpoints;
  std::optional<std::uint64_t> seed;
};

Config resolve_config(const CommonArgs& args) {
  Config cfg = args.config_path.empty() ? Config() : Config::load(args.config_path);
  if (args.seed) cfg.set("run.seed", std::to_string(*args.seed));
  if (!args.out_dir.empty()) cfg.set("run.out", args.out_dir);
  if (!args.device.empty()) cfg.set("run.device", args.device);
  return cfg;
}

ImageSetT<double> load_images(const Config& cfg, const std::string& images_key,
                              const std::string& labels_key = "") {
  const std::string path = cfg.get_string(images_key);
  if (path.empty())
    throw ConfigInvalid("config: key '" + images_key + "' is required here");
  ImageSetT<double> set = images_from_idx<double>(read_idx_file(path));
  if (!labels_key.empty()) {
    const std::string lpath = cfg.get_string(labels_key);
    if (!lpath.empty()) set.labels = labels_from_idx(read_idx_file(lpath));
  }
  const auto limit = std::size_t(cfg.get_int("dataset.limit"));
  if (limit > 0 && limit < set.size()) set = subset(set, 0, limit);
  if (cfg.get_bool("dataset.binarize"))
    set = binarize(set, cfg.get_double("dataset.binarize_threshold"));
  return set;
}

CorruptionSpec corruption_from(const Config& cfg) {
  CorruptionSpec spec;
  spec.kind = cfg.get_string("corruption.kind") == "sine" ? CorruptionKind::sine
                                                          : CorruptionKind::lines;
  spec.lc = int(cfg.get_int("corruption.lc"));
  spec.n_vertical = int(cfg.get_int("corruption.n_vertical"));
  spec.n_horizontal = int(cfg.get_int("corruption.n_horizontal"));
  auto range = [&](const std::string& key, std::array<double, 2>& dst) {
    const auto v = cfg.get_double_list(key);
    if (v.size() != 2)
      throw ConfigInvalid("config: key '" + key + "' expects exactly two values");
    dst = {v[0], v[1]};
  };
  range("corruption.amplitude", spec.amplitude_range);
  range("corruption.frequency", spec.frequency_range);
  range("corruption.phase", spec.phase_range);
  return spec;
}

GeneratorArch gen_arch_from(const Config& cfg, const std::string& prefix) {
  const std::string family = cfg.get_string("nets." + prefix + "_family");
  GeneratorArch a;
  if (family == "dcgan28")
    a = GeneratorArch::dcgan28();
  else if (family == "infogan28")
    a = GeneratorArch::infogan28();
  else {
    a.family = "custom";
    a.latent_dim = int(cfg.get_int("nets." + prefix + "_latent"));
    a.fc1_width = int(cfg.get_int("nets." + prefix + "_fc1"));
    a.fc2_channels = int(cfg.get_int("nets." + prefix + "_fc2_channels"));
    a.deconv_filters = int(cfg.get_int("nets." + prefix + "_filters"));
    a.kernel = int(cfg.get_int("nets." + prefix + "_kernel"));
  }
  const int image = int(cfg.get_int("nets.image"));
  a.image_h = a.image_w = image;
  a.base_h = a.base_w = image / 4;
  a.batchnorm = cfg.get_bool("nets.batchnorm");
  a.validate();
  return a;
}

DiscriminatorArch disc_arch_from(const Config& cfg) {
  DiscriminatorArch a;
  a.conv1_filters = int(cfg.get_int("nets.d_conv1"));
  a.conv2_filters = int(cfg.get_int("nets.d_conv2"));
  a.kernel = int(cfg.get_int("nets.d_kernel"));
  const int image = int(cfg.get_int("nets.image"));
  a.image_h = a.image_w = image;
  a.batchnorm = cfg.get_bool("nets.batchnorm");
  a.validate();
  return a;
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig tc;
  tc.mode = cfg.get_string("train.mode") == "demix" ? TrainMode::demix
                                                    : TrainMode::denoise;
  tc.batch_size = int(cfg.get_int("train.batch_size"));
  tc.epochs = int(cfg.get_int("train.epochs"));
  tc.lr = cfg.get_double("train.lr");
  tc.beta1 = cfg.get_double("train.beta1");
  tc.beta2 = cfg.get_double("train.beta2");
  tc.d_steps_per_g_step = int(cfg.get_int("train.d_steps_per_g_step"));
  const std::string zl = cfg.get_string("train.z_link");
  tc.z_link = zl == "shared" ? ZLink::shared
                             : (zl == "scaled" ? ZLink::scaled : ZLink::independent);
  tc.z_scale = cfg.get_double("train.z_scale");
  tc.non_saturating = cfg.get_bool("train.non_saturating");
  tc.corruption = corruption_from(cfg);
  tc.seed = cfg.get_u64("run.seed");
  tc.sample_epochs.clear();
  for (long long e : cfg.get_int_list("train.sample_epochs"))
    tc.sample_epochs.push_back(int(e));
  tc.checkpoint_every = int(cfg.get_int("train.checkpoint_every"));
  return tc;
}

InversionOptions inversion_from(const Config& cfg) {
  InversionOptions o;
  o.lambda = cfg.get_double("inversion.lambda");
  o.lambda2 = cfg.get_double("inversion.lambda2");
  o.restarts = int(cfg.get_int("inversion.restarts"));
  o.iterations = int(cfg.get_int("inversion.iterations"));
  o.step_size = cfg.get_double("inversion.step_size");
  o.block_size = int(cfg.get_int("inversion.block_size"));
  o.seed = cfg.get_u64("run.seed");
  return o;
}

// Collects grids and checkpoints under the run directory.
struct FileSink : TrainSink<double> {
  fs::path dir;
  std::string tag1 = "", tag2 = "_g2";
  bool two = false;
  std::vector<std::string>* artifacts = nullptr;

  void on_samples(int epoch, const std::vector<Image>& g1,
                  const std::vector<Image>& g2) override {
    const std::string n1 = two ? "epoch_" + std::to_string(epoch) + "_g1.png"
                               : "epoch_" + std::to_string(epoch) + ".png";
    write_sample_grid(g1, dir / n1);
    if (artifacts) artifacts->push_back(n1);
    if (two && !g2.empty()) {
      const std::string n2 = "epoch_" + std::to_string(epoch) + "_g2.png";
      write_sample_grid(g2, dir / n2);
      if (artifacts) artifacts->push_back(n2);
    }
  }

  void on_checkpoint(int epoch, const Checkpoint& ck) override {
    const std::string name = "checkpoint_epoch_" + std::to_string(epoch) + ".bin";
    save_checkpoint(dir / name, ck);
    if (artifacts) artifacts->push_back(name);
  }
};

json epoch_losses_json(const std::vector<EpochStats>& stats) {
  json arr = json::array();
  for (const auto& s : stats)
    arr.push_back({{"epoch", s.epoch}, {"loss_d", s.loss_d}, {"loss_g", s.loss_g}});
  return arr;
}

// y_i = x_i + n_i, one fresh corruption per image.
ImageSetT<double> corrupt_images(const ImageSetT<double>& clean,
                                 const CorruptionSpec& spec, std::uint64_t seed,
                                 ImageSetT<double>* noise_out = nullptr) {
  RngStream rng = RngStream::derive(seed, "dataset.corruption");
  ImageSetT<double> out;
  out.labels = clean.labels;
  out.images.reserve(clean.size());
  for (const auto& x : clean.images) {
    const Image n = sample_corruption<double>(int(x.rows()), int(x.cols()), spec, rng);
    if (noise_out) noise_out->images.push_back(n);
    out.images.push_back(superpose(x, n));
  }
  return out;
}

void write_image_png(const fs::path& path, const Image& img) {
  std::vector<std::uint8_t> px(std::size_t(img.rows()) * img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const double v = std::min(std::max(img(r, c), 0.0), 1.0);
      px[std::size_t(r) * img.cols() + c] = std::uint8_t(std::lround(v * 255.0));
    }
  write_png_gray8(path, int(img.rows()), int(img.cols()), px);
}

void write_traces_csv(const fs::path& path,
                      const std::vector<std::vector<double>>& traces) {
  std::ofstream os(path, std::ios::trunc);
  os << "iteration";
  for (std::size_t r = 0; r < traces.size(); ++r) os << ",restart_" << r;
  os << "\n";
  std::size_t len = 0;
  for (const auto& t : traces) len = std::max(len, t.size());
  os.precision(12);
  for (std::size_t i = 0; i < len; ++i) {
    os << i;
    for (const auto& t : traces) {
      os << ",";
      if (i < t.size()) os << t[i];
    }
    os << "\n";
  }
}

// ---------------------------------------------------------------- commands

int cmd_train_denoise(const Config& cfg, RunManifest& man, const fs::path& out) {
  ImageSetT<double> clean = load_images(cfg, "dataset.images");
  const auto spec = corruption_from(cfg);
  ImageSetT<double> observed =
      corrupt_images(clean, spec, cfg.get_u64("run.seed"));

  TrainConfig tc = train_config_from(cfg);
  tc.mode = TrainMode::denoise;
  FileSink sink;
  sink.dir = out;
  sink.artifacts = &man.artifacts;
  auto res = train_denoising_gan<double>(tc, observed, gen_arch_from(cfg, "g"),
                                         disc_arch_from(cfg), &sink);
  man.metrics["epoch_losses"] = epoch_losses_json(res.epochs);
  man.metrics["steps"] = res.steps;
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_train_demix(const Config& cfg, RunManifest& man, const fs::path& out) {
  ImageSetT<double> a = load_images(cfg, "dataset.images");
  ImageSetT<double> b;
  if (!cfg.get_string("dataset.images_b").empty()) {
    b = load_images(cfg, "dataset.images_b");
  } else {
    b = make_corruption_set<double>(a.height(), a.width(), corruption_from(cfg),
                                    a.size(), cfg.get_u64("run.seed"));
  }
  std::size_t k = std::size_t(cfg.get_int("dataset.mixture_count"));
  if (k == 0) k = std::max(a.size(), b.size());
  MixtureSetT<double> mix =
      make_mixture_dataset(a, b, k, cfg.get_u64("run.seed"));

  TrainConfig tc = train_config_from(cfg);
  tc.mode = TrainMode::demix;
  FileSink sink;
  sink.dir = out;
  sink.two = true;
  sink.artifacts = &man.artifacts;
  auto res = train_demixing_gan<double>(tc, mix, gen_arch_from(cfg, "g"),
                                        gen_arch_from(cfg, "g2"),
                                        disc_arch_from(cfg), &sink);
  man.metrics["epoch_losses"] = epoch_losses_json(res.epochs);
  man.metrics["steps"] = res.steps;
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_invert_denoise(const Config& cfg, RunManifest& man, const fs::path& out,
                       const std::vector<std::string>& ckpts) {
  if (ckpts.empty())
    throw ConfigInvalid("invert-denoise: --checkpoint is required");
  Checkpoint ck = load_checkpoint(ckpts[0]);
  Generator<double> g = generator_from_checkpoint<double>(ck);
  GeneratorModel<double> model(g);

  ImageSetT<double> clean = load_images(cfg, "dataset.images");
  const int count =
      int(std::min<std::size_t>(clean.size(), cfg.get_int("inversion.count")));
  const auto spec = corruption_from(cfg);
  RngStream crng =
      RngStream::derive(cfg.get_u64("run.seed"), "test.corruption");
  InversionOptions opts = inversion_from(cfg);

  std::vector<Image> recon, corrupted, truth;
  for (int i = 0; i < count; ++i) {
    const Image& x = clean.images[i];
    const Image u = superpose(
        x, sample_corruption<double>(int(x.rows()), int(x.cols()), spec, crng));
    auto res = invert_denoise<double>(model, u, opts);
    const Image rec = unflatten(res.reconstruction, int(x.rows()), int(x.cols()));
    recon.push_back(rec);
    corrupted.push_back(u);
    truth.push_back(x);
    write_image_png(out / ("recon_" + std::to_string(i) + ".png"), rec);
    write_image_png(out / ("corrupted_" + std::to_string(i) + ".png"), u);
    write_image_png(out / ("clean_" + std::to_string(i) + ".png"), x);
    write_traces_csv(out / ("trace_" + std::to_string(i) + ".csv"),
                     res.objective_trace);
    man.artifacts.push_back("recon_" + std::to_string(i) + ".png");
  }
  MetricReport rep = metric_report(recon, truth, "invert-denoise");
  MetricReport base = metric_report(corrupted, truth, "corrupted-baseline");
  man.metrics["mean_mse"] = rep.mean_mse;
  man.metrics["mean_psnr"] = rep.mean_psnr;
  man.metrics["baseline_mean_mse"] = base.mean_mse;
  if (rep.per_pixel) man.metrics["per_pixel_error"] = *rep.per_pixel;
  if (base.per_pixel) man.metrics["baseline_per_pixel_error"] = *base.per_pixel;
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_invert_demix(const Config& cfg, RunManifest& man, const fs::path& out,
                     const std::vector<std::string>& ckpts) {
  if (ckpts.empty())
    throw ConfigInvalid("invert-demix: --checkpoint is required");
  Checkpoint ck1 = load_checkpoint(ckpts[0]);
  Generator<double> g1 = generator_from_checkpoint<double>(ck1, "g1");
  Generator<double> g2 =
      ckpts.size() > 1
          ? generator_from_checkpoint<double>(load_checkpoint(ckpts[1]), "g1")
          : generator_from_checkpoint<double>(ck1, "g2");
  GeneratorModel<double> m1(g1), m2(g2);

  ImageSetT<double> a = load_images(cfg, "dataset.images");
  ImageSetT<double> b;
  if (!cfg.get_string("dataset.images_b").empty())
    b = load_images(cfg, "dataset.images_b");
  else
    b = make_corruption_set<double>(a.height(), a.width(), corruption_from(cfg),
                                    a.size(), cfg.get_u64("run.seed") + 1);
  const int count = int(std::min(
      {a.size(), b.size(), std::size_t(cfg.get_int("inversion.count"))}));
  InversionOptions opts = inversion_from(cfg);

  std::vector<Image> rec1, rec2, truth1, truth2;
  for (int i = 0; i < count; ++i) {
    const Image y = superpose(a.images[i], b.images[i]);
    auto res = invert_demix<double>(m1, m2, y, opts);
    const int h = int(y.rows()), w = int(y.cols());
    rec1.push_back(unflatten(res.reconstruction, h, w));
    rec2.push_back(unflatten(res.reconstruction2, h, w));
    truth1.push_back(a.images[i]);
    truth2.push_back(b.images[i]);
    write_image_png(out / ("recon1_" + std::to_string(i) + ".png"), rec1.back());
    write_image_png(out / ("recon2_" + std::to_string(i) + ".png"), rec2.back());
    write_image_png(out / ("mixed_" + std::to_string(i) + ".png"), y);
    write_traces_csv(out / ("trace_" + std::to_string(i) + ".csv"),
                     res.objective_trace);
  }
  // components are recovered up to order; report the better assignment
  MetricReport direct1 = metric_report(rec1, truth1, "part1");
  MetricReport direct2 = metric_report(rec2, truth2, "part2");
  MetricReport swapped1 = metric_report(rec2, truth1, "part1-swapped");
  MetricReport swapped2 = metric_report(rec1, truth2, "part2-swapped");
  const bool swap =
      swapped1.mean_mse + swapped2.mean_mse < direct1.mean_mse + direct2.mean_mse;
  const MetricReport& r1 = swap ? swapped1 : direct1;
  const MetricReport& r2 = swap ? swapped2 : direct2;
  man.metrics["mse_part1"] = r1.mean_mse;
  man.metrics["mse_part2"] = r2.mean_mse;
  man.metrics["psnr_part1"] = r1.mean_psnr;
  man.metrics["psnr_part2"] = r2.mean_psnr;
  man.metrics["components_swapped"] = swap;
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_cs_invert(const Config& cfg, RunManifest& man, const fs::path& out,
                  const std::vector<std::string>& ckpts) {
  if (ckpts.empty()) throw ConfigInvalid("cs-invert: --checkpoint is required");
  Generator<double> g =
      generator_from_checkpoint<double>(load_checkpoint(ckpts[0]));
  GeneratorModel<double> model(g);

  ImageSetT<double> clean = load_images(cfg, "dataset.images");
  const int count =
      int(std::min<std::size_t>(clean.size(), cfg.get_int("inversion.count")));
  const int p = model.output_dim();
  const int m = int(cfg.get_int("sensing.m"));
  const auto op = make_gaussian_operator(m, p, cfg.get_u64("run.seed"));
  const auto spec = corruption_from(cfg);
  const bool corrupt = cfg.get_bool("sensing.corrupt");
  RngStream crng = RngStream::derive(cfg.get_u64("run.seed"), "test.corruption");
  InversionOptions opts = inversion_from(cfg);

  std::vector<Image> recon, truth;
  double per_pixel_sum = 0;
  for (int i = 0; i < count; ++i) {
    const Image& x = clean.images[i];
    Image observed_img = x;
    if (corrupt)
      observed_img = superpose(
          x, sample_corruption<double>(int(x.rows()), int(x.cols()), spec, crng));
    const Eigen::VectorXd y = op.A * flatten(observed_img);
    auto res = invert_cs<double>(model, op.A, y, opts);
    const Image rec = unflatten(res.reconstruction, int(x.rows()), int(x.cols()));
    recon.push_back(rec);
    truth.push_back(x);
    per_pixel_sum += (flatten(rec) - flatten(x)).squaredNorm() / double(p);
    write_image_png(out / ("recon_" + std::to_string(i) + ".png"), rec);
    write_traces_csv(out / ("trace_" + std::to_string(i) + ".csv"),
                     res.objective_trace);
  }
  MetricReport rep = metric_report(recon, truth, "cs-invert");
  man.metrics["m"] = m;
  man.metrics["mean_mse"] = rep.mean_mse;
  man.metrics["per_pixel_error"] = per_pixel_sum / count;
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_cs_lasso(const Config& cfg, RunManifest& man, const fs::path& out) {
  const int image = int(cfg.get_int("nets.image"));
  std::vector<Eigen::VectorXd> signals;
  int p = image * image;
  if (!cfg.get_string("dataset.images").empty()) {
    ImageSetT<double> set = load_images(cfg, "dataset.images");
    const int count =
        int(std::min<std::size_t>(set.size(), cfg.get_int("sensing.signal_count")));
    p = set.height() * set.width();
    for (int i = 0; i < count; ++i) signals.push_back(flatten(set.images[i]));
  } else {
    for (auto& s : make_sparse_signals<double>(
             p, int(cfg.get_int("sensing.sparsity")),
             std::size_t(cfg.get_int("sensing.signal_count")),
             cfg.get_u64("run.seed")))
      signals.push_back(std::move(s));
  }
  const bool corrupt = cfg.get_bool("sensing.corrupt");
  const auto spec = corruption_from(cfg);
  RngStream crng = RngStream::derive(cfg.get_u64("run.seed"), "test.corruption");
  const double lambda = cfg.get_double("sensing.lasso_lambda");
  const int iterations = int(cfg.get_int("sensing.lasso_iterations"));

  json per_m = json::array();
  std::ofstream csv(out / "errors.csv", std::ios::trunc);
  csv << "m,per_pixel_error\n";
  csv.precision(12);
  for (long long m : cfg.get_int_list("sensing.measurements")) {
    const auto op = make_gaussian_operator(int(m), p, cfg.get_u64("run.seed"));
    double err = 0;
    for (const auto& x : signals) {
      Eigen::VectorXd observed = x;
      if (corrupt) {
        const Image n = sample_corruption<double>(image, image, spec, crng);
        observed += flatten(n);
      }
      const Eigen::VectorXd y = op.A * observed;
      const auto sol = lasso_solve(op.A, y, lambda, iterations);
      err += (sol.x - x).squaredNorm() / double(p);
    }
    err /= double(signals.size());
    per_m.push_back({{"m", m}, {"per_pixel_error", err}});
    csv << m << "," << err << "\n";
  }
  man.metrics["lasso_sweep"] = per_m;
  man.artifacts.push_back("errors.csv");
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_ica_demix(const Config& cfg, RunManifest& man, const fs::path& out) {
  ImageSetT<double> a = load_images(cfg, "dataset.images");
  ImageSetT<double> b;
  if (!cfg.get_string("dataset.images_b").empty())
    b = load_images(cfg, "dataset.images_b");
  else
    b = make_corruption_set<double>(a.height(), a.width(), corruption_from(cfg),
                                    a.size(), cfg.get_u64("run.seed") + 1);
  if (a.empty() || b.empty()) throw ConfigInvalid("ica-demix: empty sources");
  const MixingLaw law = cfg.get_string("sensing.mixing_law") ==
                                "normal_mean_neg_half"
                            ? MixingLaw::normal_mean_neg_half
                            : MixingLaw::truncated_std_normal;

  const int h = a.height(), w = a.width();
  Eigen::MatrixXd X(h * w, 2);
  X.col(0) = flatten(a.images[0]);
  X.col(1) = flatten(b.images[0]);
  const Eigen::MatrixXd Y = simulate_ica_mixing(X, cfg.get_u64("run.seed"), law);
  const IcaResult ica = fast_ica(Y, 2, cfg.get_u64("run.seed"));
  const auto corr = align_abs_correlation(ica.sources, X);

  // scale/offset each recovered source onto [0,1] image range for display
  std::vector<Image> est;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd s = ica.sources.col(c);
    const double lo = s.minCoeff(), hi = s.maxCoeff();
    if (hi > lo) s = (s.array() - lo) / (hi - lo);
    est.push_back(unflatten<double>(s, h, w));
    write_image_png(out / ("ica_est_" + std::to_string(c) + ".png"), est.back());
  }
  write_image_png(out / "mixed_0.png", unflatten<double>(Y.col(0), h, w));
  man.metrics["converged"] = ica.converged;
  man.metrics["sweeps"] = ica.sweeps;
  man.metrics["abs_correlation"] = corr;
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_eval_metrics(const Config& cfg, RunManifest& man, const fs::path& out,
                     const std::vector<std::string>& ckpts) {
  ImageSetT<double> recon = load_images(cfg, "dataset.images");
  ImageSetT<double> truth =
      load_images(cfg, "dataset.images_b", "dataset.labels_b");
  if (recon.size() != truth.size())
    throw LengthMismatch("eval-metrics: set sizes differ");
  MetricReport rep = metric_report(recon.images, truth.images, "eval-metrics");
  man.metrics["mean_mse"] = rep.mean_mse;
  man.metrics["mean_psnr"] = rep.mean_psnr;
  man.metrics["mse_per_image"] = rep.mse_per_image;
  if (rep.per_pixel) man.metrics["per_pixel_error"] = *rep.per_pixel;
  if (!ckpts.empty() && !truth.labels.empty()) {
    Checkpoint ck = load_checkpoint(ckpts[0]);
    // classifier checkpoints carry their architecture in the manifest
    ClassifierArch ca;
    ca.image_h = ck.manifest.at("arch").at("image_h");
    ca.image_w = ck.manifest.at("arch").at("image_w");
    ca.classes = ck.manifest.at("arch").at("classes");
    ca.conv1_filters = ck.manifest.at("arch").at("conv1_filters");
    ca.conv2_filters = ck.manifest.at("arch").at("conv2_filters");
    ca.kernel = ck.manifest.at("arch").at("kernel");
    ca.fc_width = ck.manifest.at("arch").at("fc_width");
    ca.dropout = ck.manifest.at("arch").at("dropout");
    Classifier<double> clf = Classifier<double>::build(ca);
    clf.params.flat() = ck.vec("params");
    man.metrics["classifier_accuracy"] =
        classify_accuracy(clf, recon.images, truth.labels);
  }
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_train_classifier(const Config& cfg, RunManifest& man,
                         const fs::path& out) {
  ImageSetT<double> train = load_images(cfg, "dataset.images", "dataset.labels");
  if (train.labels.empty())
    throw ConfigInvalid("train-classifier: dataset.labels is required");
  ClassifierArch ca;
  ca.image_h = train.height();
  ca.image_w = train.width();
  ca.conv1_filters = int(cfg.get_int("classifier.conv1"));
  ca.conv2_filters = int(cfg.get_int("classifier.conv2"));
  ca.fc_width = int(cfg.get_int("classifier.fc_width"));
  ca.dropout = cfg.get_double("classifier.dropout");
  ClassifierTrainConfig tc;
  tc.epochs = int(cfg.get_int("classifier.epochs"));
  tc.batch_size = int(cfg.get_int("classifier.batch_size"));
  tc.lr = cfg.get_double("classifier.lr");

  Classifier<double> clf =
      train_probe_classifier(train, cfg.get_u64("run.seed"), ca, tc);
  man.metrics["train_accuracy"] =
      classify_accuracy(clf, train.images, train.labels);
  if (!cfg.get_string("dataset.images_b").empty()) {
    ImageSetT<double> eval =
        load_images(cfg, "dataset.images_b", "dataset.labels_b");
    if (!eval.labels.empty())
      man.metrics["test_accuracy"] =
          classify_accuracy(clf, eval.images, eval.labels);
  }

  Checkpoint ck;
  ck.manifest["format"] = "sepgan-classifier";
  ck.manifest["arch"] = {{"image_h", ca.image_h},
                         {"image_w", ca.image_w},
                         {"classes", ca.classes},
                         {"conv1_filters", ca.conv1_filters},
                         {"conv2_filters", ca.conv2_filters},
                         {"kernel", ca.kernel},
                         {"fc_width", ca.fc_width},
                         {"dropout", ca.dropout}};
  ck.manifest["seed"] = cfg.get_u64("run.seed");
  ck.add("params", clf.params.flat());
  save_checkpoint(out / "classifier.bin", ck);
  man.artifacts.push_back("classifier.bin");
  write_metrics(out, man.metrics);
  return 0;
}

int cmd_theory_check(const Config& cfg, RunManifest& man, const fs::path& out) {
  const int n = int(cfg.get_int("theory.support"));
  const int trials = int(cfg.get_int("theory.trials"));
  RngStream rng = RngStream::derive(cfg.get_u64("run.seed"), "theory");
  int failures = 0;
  auto line = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "  pass  " : "  FAIL  ") << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
    man.metrics["checks"].push_back({{"name", name}, {"pass", ok}});
  };

  auto random_dist = [&](double floor) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = floor + rng.uniform();
    return DiscreteDistribution::from_weights(w);
  };

  // convolution identity and commutativity
  {
    bool ok = true;
    for (int t = 0; t < trials; ++t) {
      auto dx = random_dist(0.0);
      auto dn = random_dist(0.0);
      auto ab = convolve(dx, dn);
      auto ba = convolve(dn, dx);
      if ((ab.mass() - ba.mass()).cwiseAbs().maxCoeff() > 1e-12) ok = false;
      if (total_variation(convolve(dx, DiscreteDistribution::delta(n, 0)), dx) >
          1e-12)
        ok = false;
    }
    line("convolve: commutative, delta identity", ok, "");
  }
  // convolution theorem
  {
    bool ok = true;
    for (int t = 0; t < trials; ++t) {
      auto dx = random_dist(0.0);
      auto dn = random_dist(0.0);
      auto lhs = char_fn(convolve(dx, dn));
      auto rhs = (char_fn(dx).array() * char_fn(dn).array()).matrix().eval();
      if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-10) ok = false;
    }
    line("char_fn: convolution theorem within 1e-10", ok, "");
  }
  // deconvolution round trip
  {
    bool ok = true;
    double worst = 0;
    for (int t = 0; t < trials; ++t) {
      auto dx = random_dist(0.0);
      auto dn = random_dist(0.05);  // mass floor keeps Phi_n away from zero
      const auto phi = char_fn(dn);
      double mn = 1e9;
      for (int k = 0; k < n; ++k) mn = std::min(mn, std::abs(phi(k)));
      if (mn <= 1e-6) continue;
      const double tv = total_variation(deconvolve(convolve(dx, dn), dn), dx);
      worst = std::max(worst, tv);
      if (tv > 1e-9) ok = false;
    }
    line("deconvolve(convolve(x,n), n) == x within 1e-9 TV", ok,
         "worst " + std::to_string(worst));
  }
  // uniform noise is ill-posed
  {
    bool ok = false;
    try {
      deconvolve(random_dist(0.0), DiscreteDistribution::uniform(n));
    } catch (const IllPosed& e) {
      ok = int(e.frequencies.size()) == n - 1;
    }
    line("uniform noise raises IllPosed at all nonzero frequencies", ok, "");
  }
  // optimal discriminator identities
  {
    bool ok = true;
    for (int t = 0; t < trials; ++t) {
      auto dy = random_dist(0.0);
      auto dg = random_dist(0.0);
      const auto d1 = optimal_discriminator(dy, dg);
      const auto d2 = optimal_discriminator(dg, dy);
      for (int u = 0; u < n; ++u) {
        if (d1[u] < 0.0 || d1[u] > 1.0) ok = false;
        if (std::abs(d1[u] + d2[u] - 1.0) > 1e-12) ok = false;
      }
      const auto deq = optimal_discriminator(dy, dy);
      for (int u = 0; u < n; ++u)
        if (std::abs(deq[u] - 0.5) > 1e-12) ok = false;
    }
    line("optimal discriminator: equilibrium 0.5, complement identity", ok, "");
  }
  // ambiguity witnesses
  {
    bool ok = true;
    int produced = 0;
    for (int t = 0; t < trials; ++t) {
      auto dx = random_dist(0.0);
      auto dn = random_dist(0.0);
      const auto target = convolve(dx, dn);
      for (const auto& [g1, g2] : demix_ambiguity_witness(dx, dn)) {
        ++produced;
        if (total_variation(convolve(g1, g2), target) > 1e-12) ok = false;
      }
    }
    line("every ambiguity witness matches the mixture law", ok,
         std::to_string(produced) + " witnesses");
  }
  write_metrics(out, man.metrics);
  std::cout << (failures == 0 ? "theory-check: all checks passed\n"
                              : "theory-check: FAILURES\n");
  return failures == 0 ? 0 : 1;
}

int cmd_make_corruption(const Config& cfg, RunManifest& man,
                        const fs::path& out) {
  const auto spec = corruption_from(cfg);
  const int image = int(cfg.get_int("nets.image"));
  std::size_t count = std::size_t(cfg.get_int("dataset.mixture_count"));
  if (count == 0) count = 64;
  ImageSetT<double> noise;
  if (!cfg.get_string("dataset.images").empty()) {
    ImageSetT<double> clean = load_images(cfg, "dataset.images");
    ImageSetT<double> observed =
        corrupt_images(clean, spec, cfg.get_u64("run.seed"), &noise);
    write_idx_file(out / "observed.idx", images_to_idx(observed));
    man.artifacts.push_back("observed.idx");
  } else {
    noise = make_corruption_set<double>(image, image, spec, count,
                                        cfg.get_u64("run.seed"));
  }
  write_idx_file(out / "corruption.idx", images_to_idx(noise));
  man.artifacts.push_back("corruption.idx");
  if (noise.size() >= 64) {
    std::vector<Image> first64(noise.images.begin(), noise.images.begin() + 64);
    write_sample_grid(first64, out / "corruption_grid.png");
    man.artifacts.push_back("corruption_grid.png");
  }
  man.metrics["count"] = noise.size();
  write_metrics(out, man.metrics);
  return 0;
}

// The appendix failure study: three z-alignment modes and the rotation
// sweep, identical seeds, side-by-side sample grids.
int cmd_failure_ablation(const Config& cfg, RunManifest& man,
                         const fs::path& out) {
  ImageSetT<double> a = load_images(cfg, "dataset.images");
  ImageSetT<double> b;
  if (!cfg.get_string("dataset.images_b").empty())
    b = load_images(cfg, "dataset.images_b");
  else
    b = make_corruption_set<double>(a.height(), a.width(), corruption_from(cfg),
                                    a.size(), cfg.get_u64("run.seed"));
  std::size_t k = std::size_t(cfg.get_int("dataset.mixture_count"));
  if (k == 0) k = std::max(a.size(), b.size());

  const GeneratorArch ga1 = gen_arch_from(cfg, "g");
  const GeneratorArch ga2 = gen_arch_from(cfg, "g2");
  const DiscriminatorArch da = disc_arch_from(cfg);

  struct GridSink : TrainSink<double> {
    fs::path dir;
    std::vector<Image> last1, last2;
    void on_samples(int epoch, const std::vector<Image>& g1,
                    const std::vector<Image>& g2) override {
      write_sample_grid(g1, dir / ("epoch_" + std::to_string(epoch) + "_g1.png"));
      if (!g2.empty())
        write_sample_grid(g2, dir / ("epoch_" + std::to_string(epoch) + "_g2.png"));
      last1 = g1;
      last2 = g2;
    }
  };

  auto run_one = [&](const MixtureSetT<double>& mix, ZLink link,
                     const fs::path& dir) {
    fs::create_directories(dir);
    TrainConfig tc = train_config_from(cfg);
    tc.mode = TrainMode::demix;
    tc.z_link = link;
    GridSink sink;
    sink.dir = dir;
    train_demixing_gan<double>(tc, mix, ga1, ga2, da, &sink);
    return demix_purity(sink.last1, sink.last2);
  };

  // z-link modes over one mixture set
  MixtureSetT<double> mix = make_mixture_dataset(a, b, k, cfg.get_u64("run.seed"));
  json zlink_metrics = json::object();
  for (auto [link, name] : {std::pair{ZLink::independent, "independent"},
                            std::pair{ZLink::shared, "shared"},
                            std::pair{ZLink::scaled, "scaled"}}) {
    const auto purity = run_one(mix, link, out / ("zlink_" + std::string(name)));
    zlink_metrics[name] = {{"score", purity.score},
                           {"g1_purity", purity.g1_purity},
                           {"g2_purity", purity.g2_purity},
                           {"opposite", purity.opposite}};
  }
  man.metrics["zlink"] = zlink_metrics;

  // rotation sweep: second component is the first one rotated
  json rot_metrics = json::object();
  for (int deg : {0, 10, 30, 60, 90}) {
    ImageSetT<double> rotated;
    rotated.images.reserve(a.size());
    for (const auto& img : a.images) rotated.images.push_back(rotate(img, deg));
    MixtureSetT<double> rmix =
        make_mixture_dataset(a, rotated, k, cfg.get_u64("run.seed"));
    const auto purity = run_one(rmix, ZLink::independent,
                                out / ("rotation_" + std::to_string(deg)));
    rot_metrics[std::to_string(deg)] = {{"score", purity.score},
                                        {"g1_purity", purity.g1_purity},
                                        {"g2_purity", purity.g2_purity}};
  }
  man.metrics["rotation"] = rot_metrics;
  write_metrics(out, man.metrics);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"GANs for learning structured components from superposed "
               "observations: training, latent-space inversion, baselines"};
  app.require_subcommand(1);

  static const std::vector<std::string> names = {
      "train-denoise",  "train-demix",      "invert-denoise", "invert-demix",
      "cs-invert",      "cs-lasso",         "ica-demix",      "eval-metrics",
      "train-classifier", "theory-check",   "make-corruption",
      "failure-ablation"};

  std::map<std::string, CommonArgs> parsed;
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name);
    auto& c = parsed[name];
    sub->add_option("--config", c.config_path, "configuration file (ini)");
    sub->add_option("--seed", c.seed, "root seed override");
    sub->add_option("--out", c.out_dir, "run directory");
    sub->add_option("--device", c.device, "compute device (cpu)");
    sub->add_option("--checkpoint", c.checkpoints, "checkpoint path(s)");
  }

  std::vector<std::string> argv_r(args.rbegin(), args.rend());
  try {
    app.parse(argv_r);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  const CommonArgs& cargs = parsed[sub];
  try {
    Config cfg = resolve_config(cargs);
    const fs::path out = cfg.get_string("run.out");
    fs::create_directories(out);

    RunManifest man;
    man.subcommand = sub;
    man.config = cfg;
    man.seed = cfg.get_u64("run.seed");
    man.code_version = SEPGAN_VERSION;
    man.started = iso_timestamp_utc();

    int rc = 0;
    if (sub == "train-denoise") rc = cmd_train_denoise(cfg, man, out);
    else if (sub == "train-demix") rc = cmd_train_demix(cfg, man, out);
    else if (sub == "invert-denoise")
      rc = cmd_invert_denoise(cfg, man, out, cargs.checkpoints);
    else if (sub == "invert-demix")
      rc = cmd_invert_demix(cfg, man, out, cargs.checkpoints);
    else if (sub == "cs-invert")
      rc = cmd_cs_invert(cfg, man, out, cargs.checkpoints);
    else if (sub == "cs-lasso") rc = cmd_cs_lasso(cfg, man, out);
    else if (sub == "ica-demix") rc = cmd_ica_demix(cfg, man, out);
    else if (sub == "eval-metrics")
      rc = cmd_eval_metrics(cfg, man, out, cargs.checkpoints);
    else if (sub == "train-classifier") rc = cmd_train_classifier(cfg, man, out);
    else if (sub == "theory-check") rc = cmd_theory_check(cfg, man, out);
    else if (sub == "make-corruption") rc = cmd_make_corruption(cfg, man, out);
    else if (sub == "failure-ablation") rc = cmd_failure_ablation(cfg, man, out);
    else
      throw UnknownSubcommand("unknown subcommand: " + sub);

    man.finished = iso_timestamp_utc();
    write_manifest(out, man);
    return rc;
  } catch (const Error& e) {
    std::cerr << "sepgan " << sub << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sepgan " << sub << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sepgan
