#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "invlp/iop.hpp"
#include "invlp/rng.hpp"
#include "invlp/space.hpp"

namespace invlp {

// V-representation of a polyhedral cone: cone(rays) + span(lineality). Columns have unit 2-norm.
struct ConeRays {
  Mat rays;
  Mat lineality;
  int dim() const { return static_cast<int>(rays.rows()); }
  bool zero() const { return rays.cols() == 0 && lineality.cols() == 0; }
  // rays followed by +l and -l for every lineality vector
  Mat box_generators() const;
};

// Extreme rays of {x : H x <= 0} by double description.
ConeRays cone_rays(const Mat& H, double tol = 1e-9);

// Facet normals of cone(G): rows of H with cone(G) = {x : H x <= 0}.
Mat cone_facets(const ConeGenerators& g, double tol = 1e-9);

// Rays of the intersection of all cones with the sign half-spaces. A bound lower_p >= 0 becomes
// c_p >= 0 and upper_p <= 0 becomes c_p <= 0; other finite bounds do not cut a cone and are ignored.
ConeRays intersection_rays(const AdmissibleCone& cone);

// Random member of the cone with unit 1-norm: a random experiment's generators with weights in
// (0,1], rejected unless every cone holds it. After max_tries it mixes `rays` when given, then
// returns `fallback`, then an FP witness. Throws std::invalid_argument when the cone is {0}.
Vec sample_probe_cost(const AdmissibleCone& cone, Rng& rng, const Vec& fallback = {},
                      int max_tries = 100, const ConeRays* rays = nullptr);

// z_k = 1 for rows active at the forward optimum under c (min convention).
std::vector<char> predicted_active_flags(const Vec& c, const Polytope& poly);

// cone{-a_k / |a_k| : z_k = 1}
ConeGenerators candidate_cone(const Polytope& poly, const std::vector<char>& z);

struct EtaOptions {
  double epsilon = 1.0;
  int cap = 20;                    // largest generator count enumerated exactly
  bool ascent_beyond_cap = false;  // else exceeding the cap throws
  int ascent_starts = 16;
  std::uint64_t ascent_seed = 0;
};

struct EtaResult {
  double eta = 0.0;
  Vec y;              // maximiser
  bool exact = true;  // false when the ascent produced it
  long evaluated = 0; // distance LPs solved
};

// max over y = eps * Y gamma, 0 <= gamma <= 1, of the 1-norm distance from y to `candidate`.
// Columns of Y are normalised first.
EtaResult eta_max(const Mat& Y, const ConeGenerators& candidate, const EtaOptions& opt = {});

struct AspCandidate {
  Polytope poly;
  Vec theta;
  Vec probe;
  std::vector<char> z;
  double eta = 0.0;
  bool exact = true;
  int index = 0;
};

EtaResult eta_of_candidate(const AdmissibleCone& cone, const AspCandidate& cand,
                           const EtaOptions& opt = {});
EtaResult eta_of_candidate(const ConeRays& current, const AspCandidate& cand,
                           const EtaOptions& opt = {});

// Scores S draws from `space` and returns the one with the largest eta (lowest index on ties).
// Draw 0 comes from the experiment stream of `step`, so S = 1 is plain random sampling; the rest
// and all probe costs come from the adaptive stream of `step`.
AspCandidate adaptive_select(const AdmissibleCone& cone, const ParameterSpace& space, int S,
                             std::uint64_t seed, int step, const Vec& fallback = {},
                             const EtaOptions& opt = {},
                             std::vector<AspCandidate>* evaluated = nullptr);

struct AdaptiveConfig {
  int S = 1;
  int experiments = 30;
  int J = 5;
  double sigma = 0.01;
  std::uint64_t seed = 0;
  EtaOptions eta{1.0, 20, true};
};

struct AdaptiveStep {
  DecompositionStep step;
  double eta = 0.0;
  bool eta_exact = true;
  Vec theta;
};

// Online estimation where every experiment is picked by adaptive_select and observed under
// `hidden`. `base` supplies sign bounds, norm and reference. The callback sees each step.
std::vector<AdaptiveStep> adaptive_online(
    const IopInstance& base, const ParameterSpace& space, const Vec& hidden,
    const AdaptiveConfig& cfg, const IopOptions& options = {},
    const std::function<void(const AdaptiveStep&, const OnlineState&)>& on_step = {});

}  // namespace invlp
