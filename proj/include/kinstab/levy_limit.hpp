#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kinstab/empirical.hpp"
#include "kinstab/grid.hpp"
#include "kinstab/model.hpp"
#include "kinstab/numerics.hpp"
#include "kinstab/rng.hpp"

namespace kinstab {

inline constexpr std::uint64_t kMaxLevySteps = 100'000'000;

/// Scale sigma of a symmetric alpha-stable variable whose Levy density is
/// C / |z|^(1+alpha) over a time step dt.
double stable_sigma(double alpha, double C, double dt);

/// Increment of the symmetric stable process with Levy density C/|z|^(1+alpha)
/// over dt (Chambers-Mallows-Stuck).
double sample_stable_increment(Rng& rng, double alpha, double C, double dt);

/// Median of |X| for the unit-scale symmetric stable law, cached per alpha.
double stable_abs_median(double alpha);

/// Jump kernel of the proxy generator: r^_lambda(y, y'). Reflected jumps land
/// on the starting side.
double hat_r_lambda(const Model& m, double lambda, double y, double yp);

/// Envelope data of the proxy sampler. Jumps are proposed from r_bar_lambda
/// at total rate lambda and a crossing is accepted as a transmission, a
/// reflection or a kill with the probabilities p~ at the jump size.
struct JumpKernelTable {
  double lambda = 0.0;
  double envelope_rate = 0.0;     // total proposal rate
  std::vector<double> y;          // log grid
  std::vector<double> kill_rate;  // k_lambda(y)
  double max_acceptance = 0.0;    // largest p~+ + p~- + p~0 seen
  std::size_t proposals = 0;
};

/// Tabulates k_lambda and checks the acceptance split on sampled proposals.
/// Throws RateEnvelopeViolation when a split exceeds one.
JumpKernelTable make_jump_table(const Model& m, double lambda, std::size_t proposals = 1'000'000,
                                std::uint64_t seed = 1);

struct LevyDraw {
  double position = 0.0;  // 0 when killed
  bool killed = false;
  std::uint64_t events = 0;  // jumps or time steps
};

enum class HatZMethod { kAuto, kExact, kHybrid };

struct HybridOptions {
  double eps = 0.05;         // jumps below eps |x| are aggregated
  double eta = 0.1;          // Gaussian leaps stay below eta |x| in sd
  double exact_below = 30.0; // threshold on lambda^(1/alpha) eps |x|
  double chunk = 64.0;       // expected jumps per exact chunk
};

/// Proxy process at time t from y. Exact mode draws a Poisson number of jumps
/// from r_bar_lambda; hybrid mode replaces jumps far below the distance to the
/// interface by a Gaussian leap with matching variance. kAuto picks hybrid
/// for lambda > 2e5.
LevyDraw sample_hat_Z_o(Rng& rng, const Model& m, double lambda, double t, double y,
                        HatZMethod method = HatZMethod::kAuto, const HybridOptions& opt = {});

/// Recorded exact proxy path, driven by the same jumps as the free process.
struct HatZPath {
  std::vector<double> times;    // 0 and jump epochs
  std::vector<double> free;     // Z^_lambda after each epoch
  std::vector<double> coupled;  // Z^o_lambda after each epoch (0 once killed)
  double killed_at = -1.0;
};
HatZPath sample_hat_Z_path(Rng& rng, const Model& m, double lambda, double t, double y);

/// Limit process parameters.
struct StablePathConfig {
  double alpha = 1.5;
  double scale = 1.0;             // Levy density scale/|z|^(1+alpha)
  double p_plus = 1.0;
  double p_minus = 0.0;
  double step_fraction = 1.0 / 64.0;  // median step / |x|
  double h = 1e-3;                    // hitting tolerance
  double time_scale = 1.0;            // samples zeta(time_scale * t)
};

/// Limit configuration of a model: scale r_bar_*, p_pm at k = 0.
StablePathConfig limit_config(const Model& m);

LevyDraw sample_zeta_o(Rng& rng, const StablePathConfig& cfg, double t, double y);

/// zeta° observed at several increasing times; killed entries are NaN.
std::vector<double> sample_zeta_o_path(Rng& rng, const StablePathConfig& cfg,
                                       const std::vector<double>& times, double y);

using LevySampler = std::function<LevyDraw(Rng&, double t, double y)>;

LevySampler hat_z_sampler(const Model& m, double lambda, HatZMethod method = HatZMethod::kAuto);
LevySampler zeta_sampler(const StablePathConfig& cfg);

/// Draws of a sampler at (t, y) with counter-based seeding.
std::vector<LevyDraw> sample_batch(const LevySampler& s, double t, double y, std::size_t n,
                                   std::uint64_t seed, Stream stream,
                                   std::uint64_t first_index = 0);

/// Killed positions mapped to the atom 0.
EmpiricalMeasure to_measure(const std::vector<LevyDraw>& draws);

struct SemigroupEstimate {
  std::vector<double> y;
  std::vector<double> mean;
  std::vector<double> stderr_;
};

/// P_t u(y) = E[u(Z(t, y)); t < killing time] at each query point.
SemigroupEstimate semigroup_apply(const LevySampler& s, const GridFunction& u, double t,
                                  const std::vector<double>& query, std::size_t N,
                                  std::uint64_t seed);

/// P(t < killing time) at each query point.
SemigroupEstimate survival_curve(const LevySampler& s, double t, const std::vector<double>& grid,
                                 std::size_t N, std::uint64_t seed);

struct DefectEstimate {
  double defect = 0.0;  // <P_t u, v> - <u, P_t v>
  double stderr_ = 0.0;
  double uv = 0.0;      // <P_t u, v>
  double vu = 0.0;      // <u, P_t v>
};

/// Symmetry defect for nonnegative u, v. Starting points are drawn from the
/// normalized weight functions so that each pairing is a plain average.
DefectEstimate symmetry_defect(const LevySampler& s, const GridFunction& u, const GridFunction& v,
                               double t, std::size_t N, std::uint64_t seed);

/// Psi_lambda(xi) = int (1 - cos 2 pi xi y) r_bar_lambda(y) dy.
double levy_symbol(const Model& m, double lambda, double xi);

struct ThetaStar {
  double value = 0.0;
  double argmin = 1.0;
  double refinement_change = 0.0;  // relative change under doubled resolution
};

/// inf over z >= 1 of z^alpha int_z^inf sin^2(pi y) / y^(1+alpha) dy.
ThetaStar theta_star(double alpha);
/// Same quantity at a fixed z with `sub` Gauss-Legendre panels per half period.
double theta_star_profile(double alpha, double z, int sub = 1);

/// D-modulus of a right-continuous step path given by its epochs and values.
double d_modulus(const std::vector<double>& times, const std::vector<double>& values,
                 double delta, double t_star);

/// KS distance between a Richardson-extrapolated CDF (from two hitting
/// tolerances h1 > h2) and a reference measure.
double extrapolated_ks(const EmpiricalMeasure& coarse, const EmpiricalMeasure& fine,
                       double h_ratio, double alpha, const EmpiricalMeasure& reference);

}  // namespace kinstab
