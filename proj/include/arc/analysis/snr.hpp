#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "arc/core/errors.hpp"
#include "arc/core/rng.hpp"

namespace arc {

/// Signal strengths of the reward gradient (s_r), the true C gradient (s_c)
/// and their cross term E[dr dC] (s_rc), plus the SNRs of the two critics.
struct SnrInputs {
  double s_r = 0.0;
  double s_c = 0.0;
  double s_rc = 0.0;
  double snr_c = 1.0;
  double snr_q = 1.0;
};

/// (s_r + s_c + 2 s_rc) / s_c
inline double decomposition_factor(const SnrInputs& in) {
  require(in.s_c > 0.0, "snr: s_c must be positive");
  return in.s_r / in.s_c + 1.0 + 2.0 * in.s_rc / in.s_c;
}

/// SNR of dr + dC_hat when only the C part carries noise.
inline double net_snr(const SnrInputs& in) { return in.snr_c * decomposition_factor(in); }

/// Smallest snr_c at which the decomposed gradient is at least as clean as
/// the direct Q gradient. Empty when the factor vanishes (dr = -dC).
inline std::optional<double> snr_threshold(const SnrInputs& in) {
  const double f = decomposition_factor(in);
  if (f == 0.0) return std::nullopt;
  return in.snr_q / f;
}

enum class SnrCase { positive_correlation = 1, mild_negative = 2, strong_negative = 3 };

inline SnrCase classify(const SnrInputs& in) {
  if (in.s_rc >= 0.0) return SnrCase::positive_correlation;
  if (in.s_rc >= -in.s_r / 2.0) return SnrCase::mild_negative;
  return SnrCase::strong_negative;
}

/// Samples correlated scalar gradients (dr, dC) with the given second moments,
/// adds N(0, s_c / snr_c) noise to dC and returns E[(dr + dC)^2] / E[noise^2].
/// snr_c = +inf means noiseless and yields +inf.
inline double monte_carlo_snr(const SnrInputs& in, long n_samples, std::uint64_t seed) {
  require(n_samples >= 10000, "monte_carlo_snr: need at least 1e4 samples");
  require(in.s_r >= 0.0 && in.s_c > 0.0, "monte_carlo_snr: strengths must be non-negative and s_c positive");
  require(in.s_rc * in.s_rc <= in.s_r * in.s_c * (1.0 + 1e-12), "monte_carlo_snr: cross term exceeds Cauchy-Schwarz bound");
  require(in.snr_c > 0.0, "monte_carlo_snr: snr_c must be positive");
  // dC = sqrt(s_c) z1; dr = rho sqrt(s_r) z1 + sqrt(s_r (1 - rho^2)) z2
  const double sc = std::sqrt(in.s_c);
  const double rho_sr = in.s_rc / sc;  // rho * sqrt(s_r)
  const double resid = std::sqrt(std::max(0.0, in.s_r - rho_sr * rho_sr));
  const double noise_sd = std::isinf(in.snr_c) ? 0.0 : std::sqrt(in.s_c / in.snr_c);
  Rng rng(seed);
  double signal = 0.0, noise = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
    const double dc = sc * z1;
    const double dr = rho_sr * z1 + resid * z2;
    const double e = noise_sd * z3;
    signal += (dr + dc) * (dr + dc);
    noise += e * e;
  }
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return signal / noise;
}

}  // namespace arc
