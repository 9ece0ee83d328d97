#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sepgan/config.hpp"
#include "sepgan/dataset.hpp"
#include "sepgan/harness.hpp"
#include "sepgan/idx.hpp"
#include "sepgan/synthetic.hpp"

using namespace sepgan;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc);
  os << text;
}

}  // namespace

TEST_CASE("config: empty file gives all defaults and is valid") {
  const Config empty = Config::parse("");
  const Config defaults;
  CHECK(empty == defaults);
  CHECK(empty.get_int("train.epochs") == 64);
  CHECK(empty.get_int("train.batch_size") == 64);
  CHECK(empty.get_double("train.lr") == doctest::Approx(2e-4));
  CHECK(empty.get_double("inversion.lambda") == doctest::Approx(0.1));
  CHECK(empty.get_int("inversion.restarts") == 10);
  CHECK(empty.get_int("inversion.iterations") == 10000);
  CHECK(empty.get_double("inversion.step_size") == doctest::Approx(0.01));
}

TEST_CASE("config: type errors name the offending key") {
  try {
    Config::parse("[train]\nepochs = sixty\n");
    FAIL("expected TypeError");
  } catch (const TypeError& e) {
    CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse("[train]\nepoch = 3\n"), UnknownKey);
  CHECK_THROWS_AS(Config::parse("[nope]\nx = 1\n"), UnknownKey);
  CHECK_THROWS_AS(Config::parse("[train]\nmode = purple\n"), TypeError);
  CHECK_THROWS_AS(Config::parse("epochs = 3\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("[train\nepochs = 3\n"), ParseError);
  CHECK_THROWS_AS(Config::parse("[train]\nno_equals_here\n"), ParseError);
}

TEST_CASE("config: round trip through serialize") {
  Config cfg = Config::parse(
      "[train]\nepochs = 7\nlr = 3e-3\nz_link = scaled\n"
      "[corruption]\nkind = lines\nlc = 2\namplitude = 0.25, 0.75\n"
      "[run]\nseed = 99\n");
  const Config back = Config::parse(cfg.serialize());
  CHECK(back == cfg);
  CHECK(back.get_int("train.epochs") == 7);
  CHECK(back.get_string("train.z_link") == "scaled");
  const auto amp = back.get_double_list("corruption.amplitude");
  REQUIRE(amp.size() == 2);
  CHECK(amp[0] == doctest::Approx(0.25));
  CHECK(amp[1] == doctest::Approx(0.75));
  CHECK(back.get_u64("run.seed") == 99);
  // comments and blank lines are tolerated
  const Config c2 = Config::parse("# comment\n\n[train]\n; also comment\nepochs = 3\n");
  CHECK(c2.get_int("train.epochs") == 3);
}

TEST_CASE("dispatch: unknown subcommand and missing config are nonzero") {
  CHECK(dispatch({"definitely-not-a-subcommand"}) != 0);
  CHECK(dispatch({}) != 0);
  CHECK(dispatch({"theory-check", "--config", "/nonexistent/path.ini"}) != 0);
}

TEST_CASE("dispatch: theory-check runs the spectral suite and exits 0") {
  const fs::path out = fresh_dir("sepgan_cli_theory");
  CHECK(dispatch({"theory-check", "--out", out.string(), "--seed", "5"}) == 0);
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "metrics.json"));
  CHECK(fs::exists(out / "config.ini"));
}

TEST_CASE("dispatch: make-corruption emits idx + grid and replays bit-exactly") {
  const fs::path out1 = fresh_dir("sepgan_cli_corr1");
  const fs::path out2 = fresh_dir("sepgan_cli_corr2");
  const fs::path cfg_path = fs::temp_directory_path() / "sepgan_corr.ini";
  write_file(cfg_path, "[corruption]\nkind = lines\nlc = 2\n"
                       "[nets]\nimage = 28\n"
                       "[dataset]\nmixture_count = 64\n");
  CHECK(dispatch({"make-corruption", "--config", cfg_path.string(), "--seed",
                  "11", "--out", out1.string()}) == 0);
  CHECK(dispatch({"make-corruption", "--config", cfg_path.string(), "--seed",
                  "11", "--out", out2.string()}) == 0);
  for (const char* name : {"corruption.idx", "corruption_grid.png", "metrics.json"})
    CHECK(file_bytes(out1 / name) == file_bytes(out2 / name));

  // emitted idx parses back to binary images of the requested shape
  const auto set = images_from_idx<double>(read_idx_file(out1 / "corruption.idx"));
  REQUIRE(set.size() == 64);
  CHECK(set.height() == 28);
  for (const auto& img : set.images)
    for (int i = 0; i < img.size(); ++i)
      CHECK((img.data()[i] == 0.0 || img.data()[i] == 1.0));

  // different seed, different bytes
  const fs::path out3 = fresh_dir("sepgan_cli_corr3");
  CHECK(dispatch({"make-corruption", "--config", cfg_path.string(), "--seed",
                  "12", "--out", out3.string()}) == 0);
  CHECK(file_bytes(out1 / "corruption.idx") != file_bytes(out3 / "corruption.idx"));
}

TEST_CASE("dispatch: train-demix manifests are identical modulo timestamps") {
  // tiny synthetic dataset on disk
  const fs::path data = fresh_dir("sepgan_cli_data");
  const auto a = make_line_image_set<double>(16, 16, 48, true, 2, 7);
  const auto b = make_line_image_set<double>(16, 16, 48, false, 2, 8);
  write_idx_file(data / "a.idx", images_to_idx(a));
  write_idx_file(data / "b.idx", images_to_idx(b));

  const fs::path cfg_path = data / "train.ini";
  write_file(cfg_path,
             "[dataset]\nimages = " + (data / "a.idx").string() +
                 "\nimages_b = " + (data / "b.idx").string() +
                 "\nmixture_count = 32\n"
                 "[nets]\nimage = 16\ng_family = custom\ng_latent = 8\n"
                 "g_fc1 = 24\ng_fc2_channels = 6\ng_filters = 4\ng_kernel = 4\n"
                 "g2_family = custom\ng2_latent = 8\ng2_fc1 = 24\n"
                 "g2_fc2_channels = 6\ng2_filters = 4\ng2_kernel = 4\n"
                 "d_conv1 = 4\nd_conv2 = 6\nd_kernel = 4\nbatchnorm = false\n"
                 "[train]\nmode = demix\nbatch_size = 16\nepochs = 1\n"
                 "sample_epochs = 1\n");

  const fs::path out1 = fresh_dir("sepgan_cli_train1");
  const fs::path out2 = fresh_dir("sepgan_cli_train2");
  CHECK(dispatch({"train-demix", "--config", cfg_path.string(), "--seed", "7",
                  "--out", out1.string()}) == 0);
  CHECK(dispatch({"train-demix", "--config", cfg_path.string(), "--seed", "7",
                  "--out", out2.string()}) == 0);

  // artifacts are byte-identical across runs (config.ini differs only in the
  // out-directory override, so it is compared after the same-dir rerun below)
  for (const char* name : {"checkpoint_epoch_1.bin", "epoch_1_g1.png",
                           "epoch_1_g2.png", "metrics.json"})
    CHECK(file_bytes(out1 / name) == file_bytes(out2 / name));

  // rerun into the same directory: manifests agree modulo timestamps
  auto strip = [&](const nlohmann::json& in) {
    auto j = in;
    j.erase("started");
    j.erase("finished");
    return j;
  };
  const auto man1 = nlohmann::json::parse(std::ifstream(out1 / "manifest.json"));
  const auto cfg1 = file_bytes(out1 / "config.ini");
  CHECK(dispatch({"train-demix", "--config", cfg_path.string(), "--seed", "7",
                  "--out", out1.string()}) == 0);
  const auto man1b = nlohmann::json::parse(std::ifstream(out1 / "manifest.json"));
  CHECK(strip(man1) == strip(man1b));
  CHECK(file_bytes(out1 / "config.ini") == cfg1);
}
