#pragma once

// Step-size presets following the convergence guarantees. The constants
// hidden inside the O(.) rates are exposed as scale knobs.

#include <cstddef>

#include "alexr/algorithms/alexr.hpp"

namespace alexr {

/// Strongly convex, smooth outer functions:
///   eta = mu theta / (1 - theta),  tau = S / (n (1 - theta)).
/// Bounds the last iterate, so averaging is `last`.
inline AlexrConfig strongly_convex_preset(const ProblemInstance& p, std::size_t S,
                                          std::size_t B, double theta,
                                          PsiMode mode = PsiMode::quadratic) {
  const double mu = p.regularizer.mu();
  if (!(mu > 0.0)) throw InvalidArgument("strongly convex preset needs mu > 0");
  if (!(theta > 0.0 && theta < 1.0))
    throw InvalidArgument("strongly convex preset needs theta in (0,1)");
  AlexrConfig cfg;
  cfg.S = S;
  cfg.B = B;
  cfg.theta = theta;
  cfg.eta = mu * theta / (1.0 - theta);
  cfg.tau = static_cast<double>(S) / (static_cast<double>(p.n()) * (1.0 - theta));
  cfg.psi_mode = mode;
  cfg.averaging = Averaging::last;
  return cfg;
}

/// theta = 1 - theta_scale * epsilon for a target accuracy epsilon.
inline AlexrConfig strongly_convex_preset_for(const ProblemInstance& p, std::size_t S,
                                              std::size_t B, double epsilon,
                                              double theta_scale,
                                              PsiMode mode = PsiMode::quadratic) {
  return strongly_convex_preset(p, S, B, 1.0 - theta_scale * epsilon, mode);
}

/// Merely convex, possibly non-smooth outer functions (quadratic psi):
///   eta = eta_scale / epsilon,  tau = tau_scale / (B epsilon).
/// theta = 0 for non-smooth inner functions, 1 for smooth ones. Bounds the
/// uniform average of the iterates.
inline AlexrConfig convex_preset(double epsilon, std::size_t S, std::size_t B,
                                 double eta_scale, double tau_scale, double theta = 0.0) {
  if (!(epsilon > 0.0)) throw InvalidArgument("convex preset needs epsilon > 0");
  AlexrConfig cfg;
  cfg.S = S;
  cfg.B = B;
  cfg.theta = theta;
  cfg.eta = eta_scale / epsilon;
  cfg.tau = tau_scale / (static_cast<double>(B) * epsilon);
  cfg.psi_mode = PsiMode::quadratic;
  cfg.averaging = Averaging::uniform;
  return cfg;
}

}  // namespace alexr
