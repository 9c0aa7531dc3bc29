#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "milb/gmm.hpp"
#include "milb/rng.hpp"

namespace milb {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // suite-specific worst statistic (slack, relative error, ...)
  [[nodiscard]] bool passed() const { return failures == 0; }
};

/// K ~ U{1..max_k}, N ~ U{1..max_n}, Dirichlet(1) weights, N(0, 9) means,
/// LogNormal(0, 1) variances.
DiagGaussianMixture random_mixture(RngStream& stream, std::size_t max_k, std::size_t max_n);
/// n_ens ~ U{1..max_ens} members sharing N ~ U{1..max_n}, each random_mixture-like with K <= max_k.
EnsemblePrediction random_ensemble(RngStream& stream, std::size_t max_ens, std::size_t max_k, std::size_t max_n);

/// lower <= MC + 3 se and upper >= MC - 3 se; worst = largest violation margin.
SuiteResult verify_entropy_sandwich(std::size_t n_mixtures, std::size_t n_samples, const RngStream& stream);
/// MI-LB <= MC mutual information + 3 se; also checks the boxed and explicit forms agree to 1e-10.
SuiteResult verify_milb_certificate(std::size_t n_ensembles, std::size_t n_samples, const RngStream& stream);
/// Central differences (h = 1e-5) against grad_nll on random small MDNs;
/// relative error |g - fd| / max(|g|, |fd|, 1e-6), pass below 1e-4.
SuiteResult verify_gradients(std::size_t n_draws, const RngStream& stream);
/// SBAL(T = 1e-9) == top-k and MaxDist(w = 0) == farthest-point, exact set equality.
SuiteResult verify_selection_limits(std::size_t n_instances, const RngStream& stream);
/// Identical-member and separated-member MI-LB closed forms.
SuiteResult verify_closed_forms();
SuiteResult verify_variance_demo(const RngStream& stream);

/// Every suite at CLI scale.
std::vector<SuiteResult> run_verify(std::uint64_t seed, bool quick);

}  // namespace milb
