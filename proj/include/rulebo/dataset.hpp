#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rulebo {

struct Dataset {
  Eigen::MatrixXd features;  // one row per sample
  std::vector<int> labels;
  int n_classes = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Throws InvalidInput if labels are out of range or the split is not a
/// disjoint cover with two non-empty parts.
void validate(const Dataset& data);

/// Isotropic Gaussian clusters around seeded centers in [-10, 10]^f, with a
/// stratified 80/20 train/validation split.
Dataset make_blobs(int n_per_class, int n_classes, int n_features, double spread,
                   std::uint64_t seed);

/// Raw IDX container (the MNIST file format), unsigned-byte payloads only.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
IdxTensor parse_idx(const std::filesystem::path& path);

/// Builds a dataset from an image tensor (N x ...) and a rank-1 label
/// tensor. Pixels are scaled to [0,1]; at most `limit` samples are used
/// (0 = all); the split is a seeded shuffle with `val_fraction` held out.
Dataset dataset_from_idx(const IdxTensor& images, const IdxTensor& labels, std::size_t limit,
                         double val_fraction, std::uint64_t seed);

}  // namespace rulebo
