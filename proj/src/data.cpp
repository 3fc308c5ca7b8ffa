#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace adec {

std::size_t Dataset::num_classes() const {
  if (!y_true) return 0;
  int mx = -1;
  for (int v : *y_true) mx = std::max(mx, v);
  return static_cast<std::size_t>(mx + 1);
}

namespace {

std::uint32_t read_be32(std::ifstream& f, const std::string& path,
                        std::size_t offset) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(path + ": truncated at byte offset " +
                      std::to_string(offset));
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw FormatError("cannot open " + images_path);
  std::uint32_t magic = read_be32(fi, images_path, 0);
  if (magic != 0x00000803u)
    throw FormatError(images_path + ": bad image magic at byte offset 0");
  std::uint32_t count = read_be32(fi, images_path, 4);
  std::uint32_t h = read_be32(fi, images_path, 8);
  std::uint32_t w = read_be32(fi, images_path, 12);

  Dataset ds;
  ds.N = count;
  ds.n = std::size_t(h) * w;
  ds.image_h = h;
  ds.image_w = w;
  ds.name = images_path;
  ds.X.resize(ds.N * ds.n);
  std::vector<unsigned char> buf(ds.n);
  for (std::size_t i = 0; i < ds.N; ++i) {
    if (!fi.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(ds.n)))
      throw FormatError(images_path + ": truncated payload at byte offset " +
                        std::to_string(16 + i * ds.n));
    for (std::size_t k = 0; k < ds.n; ++k)
      ds.X[i * ds.n + k] = buf[k] / 255.0;
  }

  if (labels_path.empty()) return ds;
  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw FormatError("cannot open " + labels_path);
  std::uint32_t lmagic = read_be32(fl, labels_path, 0);
  if (lmagic != 0x00000801u)
    throw FormatError(labels_path + ": bad label magic at byte offset 0");
  std::uint32_t lcount = read_be32(fl, labels_path, 4);
  if (lcount != count)
    throw FormatError(labels_path + ": label count " + std::to_string(lcount) +
                      " != image count " + std::to_string(count) +
                      " at byte offset 4");
  std::vector<unsigned char> lab(lcount);
  if (!fl.read(reinterpret_cast<char*>(lab.data()), lcount))
    throw FormatError(labels_path + ": truncated payload at byte offset 8");
  ds.y_true = std::vector<int>(lab.begin(), lab.end());
  return ds;
}

Dataset load_table(const std::string& path, bool has_labels, char delimiter) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> present;
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0, width = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    std::vector<double> vals;
    std::vector<bool> have;
    std::size_t start = 0;
    bool more = true;
    while (more) {
      std::size_t pos = line.find(delimiter, start);
      std::string cell = pos == std::string::npos
                             ? line.substr(start)
                             : line.substr(start, pos - start);
      more = pos != std::string::npos;
      start = pos + 1;
      cell.erase(0, cell.find_first_not_of(" \t"));
      cell.erase(cell.find_last_not_of(" \t") + 1);
      if (cell.empty()) {
        vals.push_back(0.0);
        have.push_back(false);
        continue;
      }
      try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        vals.push_back(v);
        have.push_back(true);
      } catch (const std::exception&) {
        throw FormatError(path + ": non-numeric cell '" + cell + "' at row " +
                          std::to_string(lineno));
      }
    }
    if (width == 0) width = vals.size();
    if (vals.size() != width)
      throw FormatError(path + ": ragged row at row " + std::to_string(lineno));
    if (has_labels) {
      if (!have.back())
        throw FormatError(path + ": missing label at row " +
                          std::to_string(lineno));
      labels.push_back(static_cast<int>(vals.back()));
      vals.pop_back();
      have.pop_back();
    }
    rows.push_back(std::move(vals));
    present.push_back(std::move(have));
  }
  if (rows.empty()) throw FormatError(path + ": empty table");

  std::size_t n = rows[0].size();
  // Column-mean imputation for missing cells.
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (present[i][j]) {
        sum += rows[i][j];
        ++cnt;
      }
    double mean = cnt ? sum / static_cast<double>(cnt) : 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (!present[i][j]) rows[i][j] = mean;
  }

  Dataset ds;
  ds.N = rows.size();
  ds.n = n;
  ds.name = path;
  ds.X.resize(ds.N * ds.n);
  for (std::size_t i = 0; i < ds.N; ++i)
    std::copy(rows[i].begin(), rows[i].end(), ds.X.begin() + i * n);
  if (has_labels) ds.y_true = std::move(labels);
  return ds;
}

double normalize(Dataset& ds) {
  if (ds.N == 0 || ds.n == 0) throw ContractError("normalize: empty dataset");
  double total = 0.0;
  for (double v : ds.X) total += v * v;
  if (total == 0.0) throw DomainError("normalize: all-zero dataset");
  double s = std::sqrt(static_cast<double>(ds.N) * static_cast<double>(ds.n) /
                       total);
  for (double& v : ds.X) v *= s;
  ds.norm_scale *= s;
  return s;
}

void warp_image(const double* img, double* out, std::size_t image_h,
                std::size_t image_w, double angle_rad, double shift_y,
                double shift_x) {
  double cy = (static_cast<double>(image_h) - 1.0) / 2.0;
  double cx = (static_cast<double>(image_w) - 1.0) / 2.0;
  double ca = std::cos(angle_rad), sa = std::sin(angle_rad);
  std::size_t n = image_h * image_w;
  double lo = img[0], hi = img[0];
  for (std::size_t k = 1; k < n; ++k) {
    lo = std::min(lo, img[k]);
    hi = std::max(hi, img[k]);
  }
  for (std::size_t r = 0; r < image_h; ++r) {
    for (std::size_t c = 0; c < image_w; ++c) {
      // Inverse map: undo the shift, then rotate about the center.
      double yr = static_cast<double>(r) - cy - shift_y;
      double xr = static_cast<double>(c) - cx - shift_x;
      double ys = ca * yr + sa * xr + cy;
      double xs = -sa * yr + ca * xr + cx;
      double v = 0.0;
      if (ys > -1.0 && ys < static_cast<double>(image_h) && xs > -1.0 &&
          xs < static_cast<double>(image_w)) {
        auto at = [&](long rr, long cc) -> double {
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(image_h) ||
              cc >= static_cast<long>(image_w))
            return 0.0;
          return img[static_cast<std::size_t>(rr) * image_w +
                     static_cast<std::size_t>(cc)];
        };
        long y0 = static_cast<long>(std::floor(ys));
        long x0 = static_cast<long>(std::floor(xs));
        double fy = ys - static_cast<double>(y0);
        double fx = xs - static_cast<double>(x0);
        v = at(y0, x0) * (1 - fy) * (1 - fx) + at(y0, x0 + 1) * (1 - fy) * fx +
            at(y0 + 1, x0) * fy * (1 - fx) + at(y0 + 1, x0 + 1) * fy * fx;
      }
      out[r * image_w + c] = std::clamp(v, lo, hi);
    }
  }
}

void augment(std::vector<double>& batch, std::size_t batch_rows,
             std::size_t image_h, std::size_t image_w, std::mt19937_64& rng,
             double max_deg, double max_shift) {
  if (image_h == 0 || image_w == 0) return;
  std::size_t n = image_h * image_w;
  std::uniform_real_distribution<double> ud(-max_deg, max_deg);
  std::uniform_real_distribution<double> us(-max_shift, max_shift);
  std::vector<double> out(n);
  for (std::size_t b = 0; b < batch_rows; ++b) {
    double* img = batch.data() + b * n;
    double angle = ud(rng) * M_PI / 180.0;
    double sy = us(rng), sx = us(rng);
    warp_image(img, out.data(), image_h, image_w, angle, sy, sx);
    std::copy(out.begin(), out.end(), img);
  }
}

BatchIterator::BatchIterator(std::size_t count, std::size_t batch_size,
                             std::uint64_t seed)
    : count_(count), batch_size_(batch_size), rng_(seed) {
  if (count == 0 || batch_size == 0)
    throw ContractError("batch iterator needs count and batch size > 0");
  perm_.resize(count);
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  reshuffle();
}

void BatchIterator::reshuffle() {
  std::shuffle(perm_.begin(), perm_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchIterator::next_indices() {
  if (cursor_ >= count_) reshuffle();
  std::size_t take = std::min(batch_size_, count_ - cursor_);
  std::vector<std::size_t> out(perm_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               perm_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
  cursor_ += take;
  return out;
}

std::vector<double> gather_rows(const Dataset& ds,
                                const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size() * ds.n);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy(ds.row(idx[i]), ds.row(idx[i]) + ds.n, out.begin() + i * ds.n);
  return out;
}

}  // namespace adec
