#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/errors.hpp"
#include "leosim/textio.hpp"

namespace leosim {

struct QualityPoint {
  double psnr_db = 0.0;
  double msssim = 0.0;
};

// Tabulated reconstruction quality of the learned codec: one row per
// channel count, columns over an SNR grid. Piecewise-linear in SNR,
// exact match required in C. Both surfaces must be non-decreasing along
// both axes; that monotonicity is what makes rate decisions meaningful.
class QualityTable {
 public:
  QualityTable(std::vector<double> snr_grid, std::vector<std::uint32_t> channel_grid,
               std::vector<std::vector<double>> psnr, std::vector<std::vector<double>> msssim)
      : snr_grid_(std::move(snr_grid)),
        channel_grid_(std::move(channel_grid)),
        psnr_(std::move(psnr)),
        msssim_(std::move(msssim)) {
    validate();
  }

  QualityPoint lookup(std::uint32_t channel, double snr_db) const {
    const auto it = std::find(channel_grid_.begin(), channel_grid_.end(), channel);
    if (it == channel_grid_.end())
      throw ConfigError("quality lookup: channel " + std::to_string(channel) +
                        " not in the table");
    const std::size_t row = static_cast<std::size_t>(it - channel_grid_.begin());
    return {interp(psnr_[row], snr_db), interp(msssim_[row], snr_db)};
  }

  const std::vector<double>& snr_grid() const { return snr_grid_; }
  const std::vector<std::uint32_t>& channel_grid() const { return channel_grid_; }
  const std::vector<std::vector<double>>& psnr_rows() const { return psnr_; }
  const std::vector<std::vector<double>>& msssim_rows() const { return msssim_; }

 private:
  double interp(const std::vector<double>& row, double snr_db) const {
    // clamp outside the grid: the codec neither improves past its best
    // point nor degrades past its worst measured one
    if (snr_db <= snr_grid_.front()) return row.front();
    if (snr_db >= snr_grid_.back()) return row.back();
    auto hi = std::upper_bound(snr_grid_.begin(), snr_grid_.end(), snr_db);
    const std::size_t i = static_cast<std::size_t>(hi - snr_grid_.begin());
    const double x0 = snr_grid_[i - 1], x1 = snr_grid_[i];
    const double w = (snr_db - x0) / (x1 - x0);
    return row[i - 1] + w * (row[i] - row[i - 1]);
  }

  void validate() const {
    if (snr_grid_.size() < 2) throw ConfigError("quality table: need at least 2 SNR points");
    if (channel_grid_.empty()) throw ConfigError("quality table: empty channel grid");
    for (std::size_t i = 1; i < snr_grid_.size(); ++i)
      if (!(snr_grid_[i] > snr_grid_[i - 1]))
        throw ConfigError("quality table: SNR grid not strictly ascending at index " +
                          std::to_string(i));
    for (std::size_t i = 1; i < channel_grid_.size(); ++i)
      if (channel_grid_[i] <= channel_grid_[i - 1])
        throw ConfigError("quality table: channel grid not strictly ascending at index " +
                          std::to_string(i));
    check_surface(psnr_, "psnr", 1.0, 100.0);
    check_surface(msssim_, "msssim", 0.0, 1.0);
  }

  void check_surface(const std::vector<std::vector<double>>& s, const char* name, double lo,
                     double hi) const {
    if (s.size() != channel_grid_.size())
      throw ConfigError(std::string("quality table: ") + name + " row count mismatch");
    for (std::size_t r = 0; r < s.size(); ++r) {
      if (s[r].size() != snr_grid_.size())
        throw ConfigError(std::string("quality table: ") + name + " row " + std::to_string(r) +
                          " has wrong length");
      for (std::size_t c = 0; c < s[r].size(); ++c) {
        const double v = s[r][c];
        if (!(v > lo && v <= hi))
          throw ConfigError(std::string("quality table: ") + name + " value out of range at row " +
                            std::to_string(r) + " col " + std::to_string(c));
        if (c > 0 && s[r][c] < s[r][c - 1])
          throw ConfigError(std::string("quality table: ") + name +
                            " not monotone in SNR at row " + std::to_string(r) + " col " +
                            std::to_string(c));
        if (r > 0 && s[r][c] < s[r - 1][c])
          throw ConfigError(std::string("quality table: ") + name +
                            " not monotone in channel at row " + std::to_string(r) + " col " +
                            std::to_string(c));
      }
    }
  }

  std::vector<double> snr_grid_;
  std::vector<std::uint32_t> channel_grid_;
  std::vector<std::vector<double>> psnr_;
  std::vector<std::vector<double>> msssim_;
};

// Generator of the shipped default surface (data/quality_table_default.csv
// is its exact serialization; a test pins the two together). Curves are
// saturating in SNR and ordered in C. The PSNR=32 crossings sit at
// SNR {26.67, 23.375, 20.2, 18.25, 14.67} dB for C {32..192}, placed in
// the gaps between consecutive step SNRs of the default 49-step sweep.
inline QualityTable default_table() {
  std::vector<double> grid = {1,  3,  5,  8,  11, 14, 16, 17, 18, 19, 20, 21,
                              22, 23, 24, 25, 26, 27, 28, 29, 31, 34, 38};
  std::vector<std::uint32_t> chans = {32, 64, 96, 128, 192};
  std::vector<std::vector<double>> psnr = {
      {17.5, 19.0, 20.0, 21.0, 21.9, 22.5, 22.9, 23.1, 23.8, 24.6, 25.4, 26.2,
       27.0, 27.8, 28.6, 29.5, 30.8, 32.6, 33.4, 34.0, 34.6, 34.9, 35.2},
      {22.0, 24.5, 26.0, 27.2, 28.0, 28.6, 29.0, 29.2, 29.5, 29.9, 30.3, 30.8,
       31.3, 31.7, 32.5, 33.0, 33.4, 33.8, 34.2, 34.5, 35.0, 35.5, 36.0},
      {27.0, 29.2, 30.8, 31.1, 31.3, 31.5, 31.6, 31.65, 31.7, 31.8, 31.95, 32.2,
       32.5, 32.8, 33.1, 33.4, 34.2, 34.7, 35.1, 35.5, 36.1, 36.7, 37.2},
      {27.8, 29.9, 31.2, 31.5, 31.65, 31.75, 31.8, 31.85, 31.9, 32.3, 32.6, 32.9,
       33.2, 33.5, 33.8, 34.1, 34.5, 35.0, 35.4, 35.8, 36.4, 37.0, 37.5},
      {28.5, 30.5, 31.6, 31.8, 31.9, 31.95, 32.1, 32.35, 32.6, 32.9, 33.2, 33.5,
       33.8, 34.1, 34.4, 34.7, 35.0, 35.4, 35.8, 36.2, 36.8, 37.4, 38.0}};
  std::vector<std::vector<double>> msssim = {
      {0.880, 0.900, 0.915, 0.925, 0.933, 0.940, 0.943, 0.9445, 0.946, 0.9475, 0.949, 0.950,
       0.9515, 0.953, 0.954, 0.9555, 0.957, 0.958, 0.9595, 0.961, 0.963, 0.966, 0.968},
      {0.910, 0.930, 0.945, 0.955, 0.962, 0.968, 0.971, 0.9725, 0.974, 0.9755, 0.977, 0.978,
       0.979, 0.980, 0.981, 0.982, 0.983, 0.984, 0.985, 0.986, 0.9875, 0.989, 0.990},
      {0.930, 0.944, 0.952, 0.962, 0.970, 0.976, 0.979, 0.9805, 0.982, 0.983, 0.984, 0.985,
       0.9858, 0.9865, 0.9872, 0.9878, 0.9884, 0.989, 0.9895, 0.990, 0.991, 0.992, 0.993},
      {0.938, 0.950, 0.958, 0.967, 0.974, 0.980, 0.9825, 0.9838, 0.985, 0.986, 0.9868, 0.9875,
       0.9882, 0.9888, 0.9894, 0.9899, 0.9904, 0.9909, 0.9913, 0.9917, 0.9924, 0.9931, 0.9937},
      {0.945, 0.956, 0.963, 0.971, 0.977, 0.983, 0.9855, 0.9866, 0.9876, 0.9884, 0.9891, 0.9897,
       0.9903, 0.9908, 0.9913, 0.9917, 0.9921, 0.9925, 0.9929, 0.9932, 0.9938, 0.9944, 0.9950}};
  return QualityTable(std::move(grid), std::move(chans), std::move(psnr), std::move(msssim));
}

// File format: '#' comments, a "psnr" block then an "msssim" block, each
// holding a "snr,<C>,<C>,..." header and one row per SNR grid point.
inline QualityTable load_quality_table(const std::string& text) {
  const auto lines = split_lines(text);
  std::vector<double> grid;
  std::vector<std::uint32_t> chans;
  std::vector<std::vector<double>> psnr_cols, mss_cols;  // [snr][channel], transposed later
  int block = 0;                                         // 0 none, 1 psnr, 2 msssim
  bool want_header = false;

  auto ctx = [](std::size_t ln) { return "quality table line " + std::to_string(ln + 1); };

  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    if (line == "psnr") {
      block = 1;
      want_header = true;
      continue;
    }
    if (line == "msssim") {
      block = 2;
      want_header = true;
      continue;
    }
    if (block == 0) throw ConfigError(ctx(ln) + ": data before a block header");
    auto cells = split_csv(line);
    if (want_header) {
      if (cells.empty() || trim(cells[0]) != "snr")
        throw ConfigError(ctx(ln) + ": expected 'snr,<channels...>' header");
      std::vector<std::uint32_t> hdr;
      for (std::size_t i = 1; i < cells.size(); ++i)
        hdr.push_back(static_cast<std::uint32_t>(parse_int(trim(cells[i]), ctx(ln))));
      if (chans.empty())
        chans = hdr;
      else if (hdr != chans)
        throw ConfigError(ctx(ln) + ": channel header differs between blocks");
      want_header = false;
      continue;
    }
    if (cells.size() != chans.size() + 1)
      throw ConfigError(ctx(ln) + ": expected " + std::to_string(chans.size() + 1) + " cells");
    const double snr = parse_double(trim(cells[0]), ctx(ln));
    std::vector<double> vals;
    for (std::size_t i = 1; i < cells.size(); ++i)
      vals.push_back(parse_double(trim(cells[i]), ctx(ln)));
    if (block == 1) {
      grid.push_back(snr);
      psnr_cols.push_back(std::move(vals));
    } else {
      const std::size_t r = mss_cols.size();
      if (r >= grid.size() || grid[r] != snr)
        throw ConfigError(ctx(ln) + ": msssim SNR grid differs from psnr block");
      mss_cols.push_back(std::move(vals));
    }
  }
  if (psnr_cols.empty() || mss_cols.size() != psnr_cols.size())
    throw ConfigError("quality table: missing or unbalanced psnr/msssim blocks");

  auto transpose = [&](const std::vector<std::vector<double>>& cols) {
    std::vector<std::vector<double>> rows(chans.size(), std::vector<double>(grid.size()));
    for (std::size_t s = 0; s < grid.size(); ++s)
      for (std::size_t c = 0; c < chans.size(); ++c) rows[c][s] = cols[s][c];
    return rows;
  };
  return QualityTable(grid, chans, transpose(psnr_cols), transpose(mss_cols));
}

inline QualityTable load_quality_table_file(const std::string& path) {
  try {
    return load_quality_table(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::string save_quality_table(const QualityTable& t) {
  std::ostringstream out;
  auto block = [&](const char* name, const std::vector<std::vector<double>>& rows) {
    out << name << "\nsnr";
    for (auto c : t.channel_grid()) out << ',' << c;
    out << '\n';
    for (std::size_t s = 0; s < t.snr_grid().size(); ++s) {
      out << fmt_double(t.snr_grid()[s]);
      for (std::size_t r = 0; r < rows.size(); ++r) out << ',' << fmt_double(rows[r][s]);
      out << '\n';
    }
  };
  out << "# reconstruction quality of the learned codec, tabulated over (SNR, C)\n";
  block("psnr", t.psnr_rows());
  block("msssim", t.msssim_rows());
  return out.str();
}

}  // namespace leosim
