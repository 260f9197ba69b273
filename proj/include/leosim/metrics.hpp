#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/env.hpp"
#include "leosim/errors.hpp"
#include "leosim/textio.hpp"

namespace leosim {

struct EpisodeReport {
  std::string policy;
  int qualified = 0;
  int forwarded = 0;
  int dropped = 0;
  int offered = 0;
  int residual_queued = 0;
  double mean_channel = 0.0;
  double mean_cbr = 0.0;                    // mean over decision epochs of C/denominator
  std::optional<double> qual_over_fwd_pct;  // empty when nothing was forwarded
  double total_return = 0.0;
  double peak_occupancy_post_enqueue = 0.0;
  std::vector<double> occupancy_post_drain;
};

inline EpisodeReport summarize(const std::string& policy_name,
                               const std::vector<StepTraceRow>& trace,
                               const std::vector<QueueLogRow>& queue_log, std::uint64_t q_max,
                               double cbr_denominator) {
  if (trace.empty()) throw SimError("summarize: empty trace");
  EpisodeReport r;
  r.policy = policy_name;
  double c_sum = 0.0;
  int admitted = 0;
  for (const auto& row : trace) {
    r.qualified += row.qualified;
    r.forwarded += row.forwarded;
    r.dropped += row.dropped;
    admitted += row.admitted;
    c_sum += row.action_c;
    r.total_return += row.r_tilde;
    r.occupancy_post_drain.push_back(static_cast<double>(row.q_post) /
                                     static_cast<double>(q_max));
  }
  r.offered = admitted + r.dropped;
  r.residual_queued = admitted - r.forwarded;
  r.mean_channel = c_sum / static_cast<double>(trace.size());
  r.mean_cbr = r.mean_channel / cbr_denominator;
  if (r.forwarded > 0)
    r.qual_over_fwd_pct = 100.0 * r.qualified / static_cast<double>(r.forwarded);
  for (const auto& q : queue_log)
    r.peak_occupancy_post_enqueue =
        std::max(r.peak_occupancy_post_enqueue,
                 static_cast<double>(q.q_len_post_enqueue) / static_cast<double>(q_max));
  return r;
}

namespace detail {
// rl_dqn first, then the fixed baselines high to low; anything else keeps
// its insertion order behind the known names.
inline int policy_rank(const std::string& name) {
  if (name == "rl_dqn") return 0;
  if (name == "max_rate") return 1;
  if (name == "mid_rate") return 2;
  if (name == "min_rate") return 3;
  return 4;
}

inline std::vector<const EpisodeReport*> ordered(const std::vector<EpisodeReport>& reports) {
  std::vector<const EpisodeReport*> out;
  for (const auto& r : reports) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(), [](const EpisodeReport* a, const EpisodeReport* b) {
    return policy_rank(a->policy) < policy_rank(b->policy);
  });
  return out;
}

inline std::string pct_or_na(const std::optional<double>& v) {
  return v ? fmt_fixed(*v, 2) : std::string("n/a");
}
}  // namespace detail

inline std::string compare_csv(const std::vector<EpisodeReport>& reports) {
  std::ostringstream out;
  out << "policy,qualified,forwarded,dropped,mean_channel,mean_cbr,qual_over_fwd_pct\n";
  for (const auto* r : detail::ordered(reports)) {
    out << r->policy << ',' << r->qualified << ',' << r->forwarded << ',' << r->dropped << ','
        << fmt_fixed(r->mean_channel, 2) << ',' << fmt_fixed(r->mean_cbr, 6) << ','
        << (r->qual_over_fwd_pct ? fmt_fixed(*r->qual_over_fwd_pct, 2) : std::string()) << '\n';
  }
  return out.str();
}

inline std::string compare_text(const std::vector<EpisodeReport>& reports) {
  std::ostringstream out;
  out << "policy     qualified  forwarded  dropped  mean_ch   mean_cbr  qual/fwd%\n";
  for (const auto* r : detail::ordered(reports)) {
    std::ostringstream line;
    line << r->policy;
    std::string name = line.str();
    name.resize(name.size() < 11 ? 11 : name.size() + 1, ' ');
    out << name;
    auto pad = [&](const std::string& s, std::size_t w) {
      std::string t = s;
      if (t.size() < w) t.insert(0, w - t.size(), ' ');
      out << t;
    };
    pad(std::to_string(r->qualified), 9);
    pad(std::to_string(r->forwarded), 11);
    pad(std::to_string(r->dropped), 9);
    pad(fmt_fixed(r->mean_channel, 2), 9);
    pad(fmt_fixed(r->mean_cbr, 6), 11);
    pad(detail::pct_or_na(r->qual_over_fwd_pct), 11);
    out << '\n';
  }
  return out.str();
}

// Ablation layout: metrics as rows, one column per arm, arm order as given.
inline std::string ablation_csv(const std::vector<EpisodeReport>& arms) {
  std::ostringstream out;
  out << "metric";
  for (const auto& a : arms) out << ',' << a.policy;
  out << '\n';
  auto row = [&](const std::string& name, auto get) {
    out << name;
    for (const auto& a : arms) out << ',' << get(a);
    out << '\n';
  };
  row("qualified", [](const EpisodeReport& r) { return std::to_string(r.qualified); });
  row("forwarded", [](const EpisodeReport& r) { return std::to_string(r.forwarded); });
  row("dropped", [](const EpisodeReport& r) { return std::to_string(r.dropped); });
  row("mean_channel", [](const EpisodeReport& r) { return fmt_fixed(r.mean_channel, 2); });
  row("mean_cbr", [](const EpisodeReport& r) { return fmt_fixed(r.mean_cbr, 6); });
  row("qual_over_fwd_pct",
      [](const EpisodeReport& r) { return detail::pct_or_na(r.qual_over_fwd_pct); });
  return out.str();
}

inline std::string report_details_text(const EpisodeReport& r) {
  std::ostringstream out;
  out << "policy: " << r.policy << '\n'
      << "offered: " << r.offered << '\n'
      << "qualified: " << r.qualified << '\n'
      << "forwarded: " << r.forwarded << '\n'
      << "dropped: " << r.dropped << '\n'
      << "residual_queued: " << r.residual_queued << '\n'
      << "mean_channel: " << fmt_fixed(r.mean_channel, 2) << '\n'
      << "mean_cbr: " << fmt_fixed(r.mean_cbr, 6) << '\n'
      << "qual_over_fwd_pct: " << detail::pct_or_na(r.qual_over_fwd_pct) << '\n'
      << "total_return: " << fmt_double(r.total_return) << '\n'
      << "peak_occupancy_post_enqueue: " << fmt_double(r.peak_occupancy_post_enqueue) << '\n';
  return out.str();
}

}  // namespace leosim
