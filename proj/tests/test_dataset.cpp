#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sepgan/dataset.hpp"
#include "sepgan/idx.hpp"
#include "sepgan/rng.hpp"

using namespace sepgan;

namespace {

std::vector<std::uint8_t> idx_bytes(std::uint32_t magic,
                                    std::vector<std::uint32_t> dims,
                                    std::vector<std::uint8_t> payload) {
  std::vector<std::uint8_t> b;
  auto be = [&](std::uint32_t v) {
    b.push_back(std::uint8_t(v >> 24));
    b.push_back(std::uint8_t(v >> 16));
    b.push_back(std::uint8_t(v >> 8));
    b.push_back(std::uint8_t(v));
  };
  be(magic);
  for (auto d : dims) be(d);
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

}  // namespace

TEST_CASE("parse_idx: hand-computed byte scaling") {
  const auto bytes = idx_bytes(0x00000803, {1, 2, 2}, {0, 255, 128, 0});
  const IdxData d = parse_idx(bytes);
  REQUIRE(d.is_images());
  const auto set = images_from_idx<double>(d);
  REQUIRE(set.size() == 1);
  const Image& img = set.images[0];
  CHECK(img(0, 0) == doctest::Approx(0.0));
  CHECK(img(0, 1) == doctest::Approx(1.0));
  CHECK(img(1, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(img(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("parse_idx: zero-item set") {
  const auto bytes = idx_bytes(0x00000803, {0, 28, 28}, {});
  const auto set = images_from_idx<double>(parse_idx(bytes));
  CHECK(set.empty());
}

TEST_CASE("parse_idx: errors") {
  CHECK_THROWS_AS(parse_idx(idx_bytes(0x12345678, {1}, {0})), BadMagic);
  CHECK_THROWS_AS(parse_idx(idx_bytes(0x00000803, {1, 2, 2}, {0, 1})), Truncated);
  CHECK_THROWS_AS(parse_idx(idx_bytes(0x00000803, {1, 2, 2}, {0, 1, 2, 3, 4})),
                  Truncated);
  CHECK_THROWS_AS(parse_idx({0x00, 0x00}), Truncated);
  // labels
  const auto lbytes = idx_bytes(0x00000801, {3}, {7, 1, 9});
  CHECK(labels_from_idx(parse_idx(lbytes)) == std::vector<int>({7, 1, 9}));
}

TEST_CASE("idx round trip: serialize(parse(b)) == b on random well-formed input") {
  RngStream rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    const std::uint32_t n = std::uint32_t(rng.uniform_int(5));
    const std::uint32_t h = 1 + std::uint32_t(rng.uniform_int(6));
    const std::uint32_t w = 1 + std::uint32_t(rng.uniform_int(6));
    std::vector<std::uint8_t> payload(n * h * w);
    for (auto& p : payload) p = std::uint8_t(rng.uniform_int(256));
    const auto bytes = idx_bytes(0x00000803, {n, h, w}, payload);
    CHECK(serialize_idx(parse_idx(bytes)) == bytes);
    // and through the image conversion, pixels k/255 survive exactly
    // (empty sets carry no shape, so this leg needs n >= 1)
    if (n >= 1) {
      const auto set = images_from_idx<double>(parse_idx(bytes));
      CHECK(serialize_idx(images_to_idx(set)) == bytes);
    }
  }
}

TEST_CASE("binarize: boundary inclusive, idempotent") {
  ImageSet set;
  Image img(1, 4);
  img << 0.7, 0.5, 0.49999, 0.0;
  set.images.push_back(img);
  const auto bin = binarize(set, 0.5);
  CHECK(bin.images[0](0, 0) == 1.0);
  CHECK(bin.images[0](0, 1) == 1.0);  // boundary maps to 1
  CHECK(bin.images[0](0, 2) == 0.0);
  CHECK(bin.images[0](0, 3) == 0.0);
  const auto twice = binarize(bin, 0.5);
  CHECK(twice.images[0] == bin.images[0]);

  ImageSet zeros;
  zeros.images.push_back(Image::Zero(3, 3));
  CHECK(binarize(zeros, 0.5).images[0] == Image::Zero(3, 3));

  CHECK_THROWS_AS(binarize(set, 0.0), ConfigInvalid);
  CHECK_THROWS_AS(binarize(set, 1.0), ConfigInvalid);
}

TEST_CASE("make_mixture_dataset: forced pairing and zero sources") {
  ImageSet a, b;
  a.images.push_back(Image::Zero(2, 2));
  b.images.push_back(Image::Zero(2, 2));
  const auto zeros = make_mixture_dataset(a, b, 3, 1);
  REQUIRE(zeros.size() == 3);
  for (const auto& m : zeros.mixtures) CHECK(m == Image::Zero(2, 2));

  Image i1(1, 2), j1(1, 2);
  i1 << 0.25, 1.0;
  j1 << 0.5, 1.0;
  ImageSet sa, sb;
  sa.images.push_back(i1);
  sb.images.push_back(j1);
  const auto forced = make_mixture_dataset(sa, sb, 5, 9);
  for (const auto& m : forced.mixtures) {
    CHECK(m(0, 0) == doctest::Approx(0.75));
    CHECK(m(0, 1) == doctest::Approx(2.0));  // sums are not clamped
  }
}

TEST_CASE("make_mixture_dataset: determinism replay and provenance") {
  RngStream rng(7);
  ImageSet a, b;
  for (int i = 0; i < 17; ++i) {
    Image img(3, 3);
    for (int j = 0; j < 9; ++j) img.data()[j] = rng.uniform();
    a.images.push_back(img);
    Image img2(3, 3);
    for (int j = 0; j < 9; ++j) img2.data()[j] = rng.uniform();
    b.images.push_back(img2);
  }
  const auto m1 = make_mixture_dataset(a, b, 1000, 42);
  const auto m2 = make_mixture_dataset(a, b, 1000, 42);
  REQUIRE(m1.size() == 1000);
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1.provenance[i].a == m2.provenance[i].a);
    CHECK(m1.provenance[i].b == m2.provenance[i].b);
    CHECK(m1.mixtures[i] == m2.mixtures[i]);
    // provenance reconstructs the mixture exactly
    CHECK(m1.mixtures[i] ==
          Image(a.images[m1.provenance[i].a] + b.images[m1.provenance[i].b]));
  }
  const auto m3 = make_mixture_dataset(a, b, 1000, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < m1.size(); ++i)
    if (m1.provenance[i].a != m3.provenance[i].a ||
        m1.provenance[i].b != m3.provenance[i].b)
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("make_mixture_dataset: shape errors") {
  ImageSet a, b, empty;
  a.images.push_back(Image::Zero(2, 2));
  b.images.push_back(Image::Zero(3, 3));
  CHECK_THROWS_AS(make_mixture_dataset(a, b, 1, 0), ShapeMismatch);
  CHECK_THROWS_AS(make_mixture_dataset(a, empty, 1, 0), ShapeMismatch);
}

TEST_CASE("rng streams: deterministic, named, serializable") {
  auto s1 = RngStream::derive(123, "alpha");
  auto s2 = RngStream::derive(123, "alpha");
  auto s3 = RngStream::derive(123, "beta");
  CHECK(s1.raw() == s2.raw());
  auto v1 = s1.uniform();
  auto v3 = s3.uniform();
  CHECK(v1 != v3);

  const std::string state = s1.save_state();
  const double next = s1.uniform();
  RngStream restored(0);
  restored.restore_state(state);
  CHECK(restored.uniform() == next);
}
