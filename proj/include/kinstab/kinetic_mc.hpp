#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kinstab/model.hpp"
#include "kinstab/numerics.hpp"
#include "kinstab/rng.hpp"

namespace kinstab {

/// Hard cap on the number of scattering steps per trajectory.
inline constexpr std::uint64_t kMaxPathSteps = 100'000'000;

/// K_0 = k0 and K_1, K_2, ... i.i.d. with density R2, with unit
/// exponential waits. S and t_bar are cached as drawn.
struct FrequencyChain {
  double k0 = 0.0;
  std::vector<double> states;  // K_0 .. K_{n-1}
  std::vector<double> taus;    // tau_0 .. tau_{n-1}
  std::vector<double> S;       // S(K_j)
  std::vector<double> t_bar;   // t_bar(K_j)
};

FrequencyChain sample_chain(Rng& rng, const Model& m, double k0, std::size_t n);

/// One trajectory of the rescaled kinetic process. Nodes n = 0..N carry the
/// physical time T_n / lambda and the position Z_n^lambda.
struct PathSample {
  double lambda = 1.0;
  double y = 0.0;
  std::vector<double> jump_times;  // T_n / lambda, n = 0..N
  std::vector<double> positions;   // Z_n, n = 0..N
  std::vector<double> freqs;       // K_n, n = 0..N-1
  std::vector<std::size_t> crossing_index;  // n_m, m = 1..
  std::vector<double> crossing_times;       // interpolated crossing time of Z~
  std::vector<int> signs;                   // sigma_m, filled by apply_interface
  std::optional<double> absorbed_at;        // physical time of absorption
  std::optional<std::size_t> absorbed_crossing;  // m with sigma_m = 0

  /// Interpolated position Z~(t) without the interface mechanism.
  double free_position_at(double t) const;
  /// Y°(t): the signed, possibly absorbed position.
  double position_at(double t) const;
  /// K°(t).
  double frequency_at(double t) const;
  /// Product of sigma_1..sigma_m for the crossings that happened by time t.
  int sign_at(double t) const;
};

/// Positions Z_n^lambda = y - lambda^(-1/alpha) sum_{j<n} S(K_j) tau_j and
/// the discrete-skeleton crossing indices.
PathSample build_path(const Model& m, const FrequencyChain& chain, double y, double lambda);

/// Draws sigma_m with P(sigma_m = i) = p_i(K_{n_m - 1}) and records the
/// absorption time at the first sigma = 0.
void apply_interface(Rng& rng, const Model& m, PathSample& path);

struct KineticDraw {
  double position = 0.0;  // 0 when absorbed
  double k = 0.0;         // K°(t)
  bool absorbed = false;
  std::uint32_t crossings = 0;
  std::uint64_t steps = 0;
};

/// Streams the process up to physical time t without storing the path.
/// `chain_rng` drives K and tau; `iface_rng` drives sigma.
KineticDraw sample_Y_o(Rng& chain_rng, Rng& iface_rng, const Model& m, double lambda, double t,
                       double y, double k);

/// N draws of Y°_lambda(t, y, k) with counter-based seeding by sample index.
std::vector<KineticDraw> sample_Y_o_batch(const Model& m, double lambda, double t, double y,
                                          double k, std::size_t n, std::uint64_t seed,
                                          std::uint64_t first_index = 0);

using PhaseFn = std::function<double(double, double)>;  // W0(y, k)

struct PhasePoint {
  double y, k;
};

/// W(t, y, k) = E[W0(Y°, K°)], absorbed paths contribute T_o.
std::vector<MeanStderr> estimate_W(const Model& m, double lambda, const PhaseFn& W0, double t,
                                   const std::vector<PhasePoint>& points, std::size_t N,
                                   std::uint64_t seed);

/// sup over [0, t_star] of |S_lambda(t, k) - theta_bar t|.
double clock_lln_gap(Rng& rng, const Model& m, double lambda, double t_star, double k);

struct CrossingEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  double bound = 0.0;
};

/// MC estimate of P(y Z_1^lambda < 0) with the analytic bound.
CrossingEstimate first_crossing_vs_bound(const Model& m, double lambda, double y, double k,
                                         std::size_t N, std::uint64_t seed);

}  // namespace kinstab
