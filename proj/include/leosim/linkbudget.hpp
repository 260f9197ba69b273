#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "leosim/errors.hpp"
#include "leosim/textio.hpp"

namespace leosim {

constexpr double kBoltzmannTermDb = 228.6;     // -10*log10(k), dB(W/K/Hz)
constexpr double kLightSpeedKmPerS = 299792.458;

struct LinkParams {
  double carrier_freq_ghz = 20.0;
  double orbit_altitude_km = 900.0;
  double earth_radius_km = 6371.0;
  double eirp_dbw = 35.0;
  double g_over_t_db = 25.0;
  double noise_bandwidth_hz = 100e6;
  double extra_loss_db = 2.5;
  double signal_bandwidth_hz = 200e6;  // metadata only, never enters the dynamics
};

// Ground-station slant range [km] for a circular orbit at the given
// elevation. Spherical earth; elevation measured from the local horizon.
inline double slant_range_km(const LinkParams& p, double elevation_deg) {
  if (!(elevation_deg >= 0.0 && elevation_deg <= 90.0))
    throw SimError("slant_range: elevation out of [0, 90]: " + fmt_double(elevation_deg));
  const double re = p.earth_radius_km;
  const double r = re + p.orbit_altitude_km;
  const double th = elevation_deg * 3.14159265358979323846 / 180.0;
  const double c = re * std::cos(th);
  return std::sqrt(r * r - c * c) - re * std::sin(th);
}

// Free-space path loss [dB], d in km, f in GHz.
inline double fspl_db(double distance_km, double freq_ghz) {
  if (!(distance_km > 0.0)) throw SimError("fspl: non-positive distance");
  if (!(freq_ghz > 0.0)) throw SimError("fspl: non-positive frequency");
  return 92.45 + 20.0 * std::log10(freq_ghz) + 20.0 * std::log10(distance_km);
}

// Carrier-to-noise density [dBHz]: EIRP - L + G/T + 228.6.
inline double cn0_dbhz(const LinkParams& p, double total_loss_db) {
  return p.eirp_dbw - total_loss_db + p.g_over_t_db + kBoltzmannTermDb;
}

// SNR in the noise bandwidth [dB] at one elevation sample.
inline double snr_db_at(const LinkParams& p, double elevation_deg) {
  if (!(p.noise_bandwidth_hz > 0.0)) throw SimError("snr_at: non-positive noise bandwidth");
  const double loss =
      fspl_db(slant_range_km(p, elevation_deg), p.carrier_freq_ghz) + p.extra_loss_db;
  return cn0_dbhz(p, loss) - 10.0 * std::log10(p.noise_bandwidth_hz);
}

struct OverpassSample {
  int step = 0;
  double elevation_deg = 0.0;
  double slant_range_km = 0.0;
  double snr_db = 0.0;
};

struct SweepShape {
  double min_elevation_deg = 0.0;  // elevation at the first and last sample
};

struct OverpassProfile {
  std::vector<OverpassSample> samples;
  double decision_interval_s = 5.0;
  LinkParams link;

  int num_steps() const { return static_cast<int>(samples.size()); }
  double min_snr_db() const { return samples.front().snr_db; }
  double max_snr_db() const { return samples[(samples.size() - 1) / 2].snr_db; }
};

// Piecewise-linear elevation sweep min -> 90 -> min sampled once per
// decision interval. Odd counts only, so the single 90-degree peak lands
// exactly on the middle sample.
inline OverpassProfile build_overpass(const LinkParams& p, int num_steps,
                                      double decision_interval_s, SweepShape sweep = {}) {
  if (num_steps < 3) throw ConfigError("build_overpass: num_steps must be >= 3");
  if (num_steps % 2 == 0)
    throw ConfigError("build_overpass: num_steps must be odd so the peak lands on a sample");
  if (!(decision_interval_s > 0.0)) throw ConfigError("build_overpass: decision interval <= 0");
  if (!(sweep.min_elevation_deg >= 0.0 && sweep.min_elevation_deg < 90.0))
    throw ConfigError("build_overpass: min elevation out of [0, 90)");

  OverpassProfile prof;
  prof.decision_interval_s = decision_interval_s;
  prof.link = p;
  prof.samples.resize(num_steps);
  const int half = (num_steps - 1) / 2;
  for (int t = 0; t < num_steps; ++t) {
    const int leg = t <= half ? t : num_steps - 1 - t;
    const double el =
        sweep.min_elevation_deg + (90.0 - sweep.min_elevation_deg) * static_cast<double>(leg) / half;
    auto& s = prof.samples[t];
    s.step = t;
    s.elevation_deg = el;
    s.slant_range_km = slant_range_km(p, el);
    s.snr_db = snr_db_at(p, el);
  }
  return prof;
}

// SNR the link will see one decision interval ahead. The geometry is
// known exactly, so this is a profile lookup; past the end it holds the
// final sample.
inline double predict_snr(const OverpassProfile& prof, int current_step) {
  const int n = prof.num_steps();
  if (current_step < 0 || current_step >= n)
    throw SimError("predict_snr: step out of range");
  const int next = current_step + 1 < n ? current_step + 1 : n - 1;
  return prof.samples[next].snr_db;
}

inline std::string profile_csv(const OverpassProfile& prof) {
  std::ostringstream out;
  out << "step,elevation_deg,slant_range_km,snr_db\n";
  for (const auto& s : prof.samples) {
    out << s.step << ',' << fmt_double(s.elevation_deg) << ',' << fmt_double(s.slant_range_km)
        << ',' << fmt_double(s.snr_db) << '\n';
  }
  return out.str();
}

}  // namespace leosim
