#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "common.hpp"

namespace adec {

struct Dataset {
  std::vector<double> X;  // N x n row-major
  std::size_t N = 0;
  std::size_t n = 0;
  std::optional<std::vector<int>> y_true;
  std::size_t image_h = 0;  // 0 when samples are not images
  std::size_t image_w = 0;
  std::string name;
  double norm_scale = 1.0;  // scalar applied by normalize()

  bool has_images() const { return image_h > 0 && image_w > 0; }
  const double* row(std::size_t i) const { return X.data() + i * n; }
  std::size_t num_classes() const;
};

// IDX ingestion (big-endian header per the published convention). Pixels are
// scaled to [0,1]; normalize() is applied afterwards by the caller.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

// Delimited numeric table; label column last when has_labels. Missing cells
// are imputed with the column mean. '#' comment lines are skipped.
Dataset load_table(const std::string& path, bool has_labels,
                   char delimiter = ',');

// Single global scalar s = sqrt(N*n / sum_i ||x_i||^2); X <- s*X. Returns s.
double normalize(Dataset& ds);

// Rotation about the image center followed by a translation of
// (shift_y, shift_x) pixels, bilinear resampling, zero fill outside the
// frame, output clamped to the input's value range.
void warp_image(const double* img, double* out, std::size_t image_h,
                std::size_t image_w, double angle_rad, double shift_y,
                double shift_x);

// Random rotation in [-max_deg, max_deg] and translation in
// [-max_shift, max_shift] pixels per axis, bilinear resampling, zero fill,
// clamped to the per-sample value range. No-op when shape is not given.
void augment(std::vector<double>& batch, std::size_t batch_rows,
             std::size_t image_h, std::size_t image_w, std::mt19937_64& rng,
             double max_deg = 10.0, double max_shift = 2.0);

class BatchIterator {
 public:
  BatchIterator(std::size_t count, std::size_t batch_size, std::uint64_t seed);

  // Returns the source row indices of the next batch, reshuffling at each
  // epoch boundary. Sizes are batch_size except possibly the epoch tail.
  std::vector<std::size_t> next_indices();
  std::size_t batch_size() const { return batch_size_; }

 private:
  void reshuffle();
  std::size_t count_;
  std::size_t batch_size_;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> perm_;
  std::mt19937_64 rng_;
};

// Copies the given rows into a dense batch matrix.
std::vector<double> gather_rows(const Dataset& ds,
                                const std::vector<std::size_t>& idx);

}  // namespace adec
