#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "rulebo/dataset.hpp"
#include "rulebo/errors.hpp"

using namespace rulebo;

namespace {

std::vector<std::uint8_t> idx_bytes(std::vector<std::uint32_t> dims, std::vector<std::uint8_t> payload) {
  std::vector<std::uint8_t> b{0, 0, 0x08, static_cast<std::uint8_t>(dims.size())};
  for (auto d : dims)
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(d >> s));
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

}  // namespace

TEST_CASE("blobs sizes and stratified split") {
  const auto d = make_blobs(50, 3, 4, 1.0, 5);
  CHECK(d.features.rows() == 150);
  CHECK(d.features.cols() == 4);
  CHECK(d.train.size() == 120);
  CHECK(d.validation.size() == 30);
  CHECK_NOTHROW(validate(d));
  for (int c = 0; c < 3; ++c)
    CHECK(std::count_if(d.validation.begin(), d.validation.end(), [&](auto i) { return d.labels[i] == c; }) == 10);
}

TEST_CASE("blobs with zero spread sit on their centers") {
  const auto d = make_blobs(5, 2, 3, 0.0, 1);
  for (int i = 1; i < 5; ++i) CHECK(d.features.row(i) == d.features.row(0));
  CHECK_FALSE(d.features.row(0) == d.features.row(5));
}

TEST_CASE("blobs are deterministic") {
  const auto a = make_blobs(10, 3, 2, 2.0, 9);
  const auto b = make_blobs(10, 3, 2, 2.0, 9);
  CHECK(a.features == b.features);
  CHECK(a.train == b.train);
  CHECK_THROWS_AS(make_blobs(0, 3, 2, 1.0, 1), InvalidInput);
  CHECK_THROWS_AS(make_blobs(5, 3, 2, -1.0, 1), InvalidInput);
}

TEST_CASE("IDX: 2x2x2 tensor") {
  const auto bytes = idx_bytes({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 255});
  const auto t = parse_idx(std::span<const std::uint8_t>(bytes));
  CHECK(t.dims == std::vector<std::uint32_t>{2, 2, 2});
  CHECK(t.data.size() == 8);
  CHECK(t.data[7] == 255);
}

TEST_CASE("IDX: rank-1 labels") {
  const auto bytes = idx_bytes({3}, {1, 0, 1});
  const auto t = parse_idx(std::span<const std::uint8_t>(bytes));
  CHECK(t.dims == std::vector<std::uint32_t>{3});
  CHECK(t.data == std::vector<std::uint8_t>{1, 0, 1});
}

TEST_CASE("IDX: malformed inputs") {
  const std::vector<std::uint8_t> empty;
  CHECK_THROWS_AS(parse_idx(std::span<const std::uint8_t>(empty)), FormatError);
  auto bad_magic = idx_bytes({1}, {0});
  bad_magic[0] = 1;
  CHECK_THROWS_AS(parse_idx(std::span<const std::uint8_t>(bad_magic)), FormatError);
  auto bad_type = idx_bytes({1}, {0});
  bad_type[2] = 0x0D;
  CHECK_THROWS_AS(parse_idx(std::span<const std::uint8_t>(bad_type)), FormatError);
  const auto truncated = idx_bytes({2, 2}, {1, 2, 3});
  CHECK_THROWS_AS(parse_idx(std::span<const std::uint8_t>(truncated)), FormatError);
  auto short_header = idx_bytes({2, 2}, {});
  short_header.resize(9);
  CHECK_THROWS_AS(parse_idx(std::span<const std::uint8_t>(short_header)), FormatError);
  CHECK_THROWS_AS(parse_idx(std::filesystem::path("/nonexistent.idx")), Error);
}

TEST_CASE("IDX: file round-trip and dataset construction") {
  const auto dir = std::filesystem::temp_directory_path() / "rulebo_idx_test";
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> pixels(10 * 4);
  std::iota(pixels.begin(), pixels.end(), 0);
  const auto img = idx_bytes({10, 2, 2}, pixels);
  const auto lbl = idx_bytes({10}, {0, 1, 2, 0, 1, 2, 0, 1, 2, 0});
  std::ofstream(dir / "img", std::ios::binary).write(reinterpret_cast<const char*>(img.data()), img.size());
  std::ofstream(dir / "lbl", std::ios::binary).write(reinterpret_cast<const char*>(lbl.data()), lbl.size());

  const auto d = dataset_from_idx(parse_idx(dir / "img"), parse_idx(dir / "lbl"), 0, 0.2, 3);
  CHECK(d.features.rows() == 10);
  CHECK(d.features.cols() == 4);
  CHECK(d.n_classes == 3);
  CHECK(d.validation.size() == 2);
  CHECK(d.features.maxCoeff() <= 1.0);
  CHECK(d.features(0, 1) == doctest::Approx(1.0 / 255.0));

  const auto limited = dataset_from_idx(parse_idx(dir / "img"), parse_idx(dir / "lbl"), 5, 0.2, 3);
  CHECK(limited.features.rows() == 5);

  const auto wrong = idx_bytes({9}, std::vector<std::uint8_t>(9, 0));
  CHECK_THROWS_AS(dataset_from_idx(parse_idx(dir / "img"), parse_idx(std::span<const std::uint8_t>(wrong)), 0, 0.2, 3),
                  FormatError);
}
