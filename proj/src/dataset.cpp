#include "rulebo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "rulebo/errors.hpp"
#include "rulebo/random.hpp"

namespace rulebo {

namespace {

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

void validate(const Dataset& data) {
  const auto n = static_cast<std::size_t>(data.features.rows());
  if (data.labels.size() != n) throw InvalidInput("dataset: label count differs from sample count");
  if (data.n_classes < 1) throw InvalidInput("dataset: needs at least one class");
  for (int l : data.labels)
    if (l < 0 || l >= data.n_classes) throw InvalidInput("dataset: label out of range");
  if (data.train.empty() || data.validation.empty()) throw InvalidInput("dataset: both split parts must be non-empty");
  std::vector<int> seen(n, 0);
  for (const auto* part : {&data.train, &data.validation})
    for (auto i : *part) {
      if (i >= n) throw InvalidInput("dataset: split index out of range");
      ++seen[i];
    }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
    throw InvalidInput("dataset: split must be disjoint and cover every sample");
}

Dataset make_blobs(int n_per_class, int n_classes, int n_features, double spread, std::uint64_t seed) {
  if (n_per_class < 1 || n_classes < 1 || n_features < 1) throw InvalidInput("make_blobs: counts must be >= 1");
  if (!(spread >= 0.0)) throw InvalidInput("make_blobs: spread must be non-negative");
  Rng rng(seed);
  Eigen::MatrixXd centers(n_classes, n_features);
  for (int c = 0; c < n_classes; ++c)
    for (int f = 0; f < n_features; ++f) centers(c, f) = rng.uniform(-10.0, 10.0);

  Dataset d;
  d.n_classes = n_classes;
  d.features.resize(static_cast<Eigen::Index>(n_per_class) * n_classes, n_features);
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      for (int f = 0; f < n_features; ++f) d.features(row, f) = centers(c, f) + spread * rng.normal();
      d.labels.push_back(c);
    }
  }

  const auto n_val = static_cast<std::size_t>(std::llround(0.2 * n_per_class));
  for (int c = 0; c < n_classes; ++c) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n_per_class));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::size_t>(c) * idx.size() + i;
    shuffle(idx, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) (i < n_val ? d.validation : d.train).push_back(idx[i]);
  }
  // Tiny classes can round the hold-out to zero; keep both parts non-empty.
  if (d.validation.empty() && d.train.size() > 1) {
    d.validation.push_back(d.train.back());
    d.train.pop_back();
  }
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.validation.begin(), d.validation.end());
  return d;
}

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("IDX: file shorter than the 4-byte magic");
  if (bytes[0] != 0 || bytes[1] != 0) throw FormatError("IDX: bad magic (first two bytes must be zero)");
  if (bytes[2] != 0x08) throw FormatError("IDX: only the unsigned-byte type (0x08) is supported");
  const std::size_t rank = bytes[3];
  if (rank == 0) throw FormatError("IDX: rank must be >= 1");
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header)
    throw FormatError("IDX: truncated header, expected " + std::to_string(header) + " bytes, got " +
                      std::to_string(bytes.size()));
  IdxTensor t;
  std::size_t count = 1;
  for (std::size_t r = 0; r < rank; ++r) {
    const auto* p = bytes.data() + 4 + 4 * r;
    const std::uint32_t dim = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                              (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
    t.dims.push_back(dim);
    count *= dim;
  }
  const std::size_t actual = bytes.size() - header;
  if (actual < count)
    throw FormatError("IDX: truncated payload, expected " + std::to_string(count) + " bytes, got " +
                      std::to_string(actual));
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                bytes.begin() + static_cast<std::ptrdiff_t>(header + count));
  return t;
}

IdxTensor parse_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("IDX: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

Dataset dataset_from_idx(const IdxTensor& images, const IdxTensor& labels, std::size_t limit,
                         double val_fraction, std::uint64_t seed) {
  if (images.dims.empty() || labels.dims.size() != 1) throw FormatError("IDX: expected images (N x ...) and rank-1 labels");
  const std::size_t n_all = images.dims[0];
  if (labels.dims[0] != n_all) throw FormatError("IDX: image and label counts differ");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidInput("val_fraction must lie in (0,1)");
  const std::size_t n = limit == 0 ? n_all : std::min(limit, n_all);
  if (n < 2) throw InvalidInput("IDX dataset needs at least two samples");
  const std::size_t width = images.data.size() / n_all;

  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j)
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = images.data[i * width + j] / 255.0;
    d.labels.push_back(labels.data[i]);
    max_label = std::max<int>(max_label, labels.data[i]);
  }
  d.n_classes = max_label + 1;

  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(idx, rng);
  const auto n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(val_fraction * n)), 1, n - 1);
  d.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  d.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.validation.begin(), d.validation.end());
  validate(d);
  return d;
}

}  // namespace rulebo
