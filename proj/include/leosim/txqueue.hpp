#pragma once

#include <cstdint>
#include <deque>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/errors.hpp"

namespace leosim {

// One encoded image waiting in the satellite transmit buffer. Sizes are
// exact symbol counts; the queue never does floating point.
struct FrameRecord {
  std::uint64_t frame_id = 0;
  std::uint32_t channel = 0;           // latent channel count C
  std::uint64_t symbols_total = 0;
  std::uint64_t symbols_left = 0;
  int encode_step = 0;
  double snr_at_encode_db = 0.0;       // SNR carried in the encode command
  double psnr_jitter_db = 0.0;         // per-frame content jitter, 0 when disabled
  double msssim_jitter = 0.0;
};

// Symbols for one image: (H/2^i)*(W/2^i)/2 * C. The half comes from
// pairing real latents into complex symbols.
inline std::uint64_t symbols_per_image(std::uint32_t channel, int height, int width, int stages) {
  if (height <= 0 || width <= 0 || stages < 0)
    throw ConfigError("symbols_per_image: non-positive dimensions");
  const std::int64_t scale = std::int64_t{1} << stages;
  if (height % scale != 0 || width % scale != 0)
    throw ConfigError("symbols_per_image: dimensions not divisible by 2^stages");
  const std::int64_t grid = (height / scale) * (width / scale);
  if (grid % 2 != 0)
    throw ConfigError("symbols_per_image: latent grid must pair into complex symbols");
  return static_cast<std::uint64_t>(grid / 2) * channel;
}

struct QueueSizing {
  std::uint64_t q_max = 0;             // capacity, symbols
  std::uint64_t drain_budget = 0;      // symbols transmittable per decision interval
  int qci = 0;                         // capacity factor: q_max = qci * batch * max_symbols
  int qdi = 0;                         // drain factor: qdi = ceil(q_max / drain_budget)
  int batch = 0;
  std::uint64_t max_symbols_per_image = 0;
};

inline QueueSizing compute_sizing(int qci, int batch, std::uint64_t max_symbols_per_image,
                                  std::uint64_t drain_budget) {
  if (qci <= 0 || batch <= 0 || max_symbols_per_image == 0 || drain_budget == 0)
    throw ConfigError("compute_sizing: all sizing inputs must be positive");
  QueueSizing s;
  s.qci = qci;
  s.batch = batch;
  s.max_symbols_per_image = max_symbols_per_image;
  s.q_max = static_cast<std::uint64_t>(qci) * batch * max_symbols_per_image;
  s.drain_budget = drain_budget;
  s.qdi = static_cast<int>((s.q_max + drain_budget - 1) / drain_budget);
  return s;
}

struct EnqueueResult {
  int admitted = 0;
  int dropped = 0;
};

struct DrainResult {
  std::vector<FrameRecord> forwarded;  // frames whose last symbol left this interval
  std::uint64_t symbols_drained = 0;
};

struct QueueLogRow {
  int step = 0;
  std::uint64_t q_len_pre = 0;
  std::uint64_t q_len_post_enqueue = 0;
  std::uint64_t q_len_post_drain = 0;
  int admitted = 0;
  int dropped = 0;
  int forwarded = 0;
};

// FIFO symbol buffer with whole-frame admission and symbol-level drain.
class TransmitQueue {
 public:
  explicit TransmitQueue(std::uint64_t q_max) : q_max_(q_max) {
    if (q_max == 0) throw ConfigError("TransmitQueue: q_max must be positive");
  }

  // Admission is sequential-stop: the first frame that does not fit is
  // dropped along with every frame behind it in the batch.
  EnqueueResult enqueue_batch(const std::vector<FrameRecord>& batch) {
    EnqueueResult r;
    bool blocked = false;
    for (const auto& f : batch) {
      if (!blocked && q_len_ + f.symbols_total <= q_max_) {
        frames_.push_back(f);
        q_len_ += f.symbols_total;
        ++r.admitted;
        ++enqueued_frames_;
      } else {
        blocked = true;
        ++r.dropped;
        ++dropped_frames_;
      }
    }
    return r;
  }

  // Removes up to `budget` symbols front-to-back. A frame is forwarded
  // only when its final symbol leaves; a partially drained head stays.
  DrainResult drain(std::uint64_t budget) {
    DrainResult r;
    while (budget > 0 && !frames_.empty()) {
      FrameRecord& head = frames_.front();
      const std::uint64_t take = head.symbols_left < budget ? head.symbols_left : budget;
      head.symbols_left -= take;
      budget -= take;
      q_len_ -= take;
      r.symbols_drained += take;
      if (head.symbols_left == 0) {
        r.forwarded.push_back(head);
        frames_.pop_front();
        ++forwarded_frames_;
      }
    }
    return r;
  }

  std::uint64_t q_len() const { return q_len_; }
  std::uint64_t q_max() const { return q_max_; }
  std::size_t frames_queued() const { return frames_.size(); }
  std::uint64_t enqueued_frames() const { return enqueued_frames_; }
  std::uint64_t dropped_frames() const { return dropped_frames_; }
  std::uint64_t forwarded_frames() const { return forwarded_frames_; }

 private:
  std::deque<FrameRecord> frames_;
  std::uint64_t q_len_ = 0;
  std::uint64_t q_max_;
  std::uint64_t enqueued_frames_ = 0;
  std::uint64_t dropped_frames_ = 0;
  std::uint64_t forwarded_frames_ = 0;
};

// Strict long-run stability: mean arrival must stay below the drain.
inline bool stability_check(double mean_arrival_symbols, std::uint64_t drain_budget) {
  return mean_arrival_symbols < static_cast<double>(drain_budget);
}

inline std::string queue_log_csv(const std::vector<QueueLogRow>& rows) {
  std::ostringstream out;
  out << "step,q_len_pre,q_len_post_enqueue,q_len_post_drain,admitted,dropped,forwarded\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.q_len_pre << ',' << r.q_len_post_enqueue << ','
        << r.q_len_post_drain << ',' << r.admitted << ',' << r.dropped << ',' << r.forwarded
        << '\n';
  }
  return out.str();
}

}  // namespace leosim
