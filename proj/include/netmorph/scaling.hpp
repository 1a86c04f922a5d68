#pragma once

namespace netmorph {

/// Physical coefficients and characteristic scales of an unscaled problem.
struct PhysicalParams {
  double D = 0.0;
  double c = 1.0;
  double alpha = 1.0;  // relaxation coefficient
  double r = 1.0;
  double gamma = 1.0;
  double x_bar = 1.0;  // domain diameter
  double m_bar = 1.0;  // sup |m⁰|
  double S_bar = 1.0;  // sup |S|
};

struct ScaledParams {
  double t_bar = 1.0;
  double p_bar = 1.0;
  double D = 0.0;
  double c = 1.0;
  double r = 1.0;
};

/// t̄ = 1/(α m̄^{2(γ−1)}), p̄ = x̄² S̄/m̄², r_s = r/m̄²,
/// c_s² = c² p̄²/(α x̄² m̄^{2(γ−1)}), D_s² = D² t̄/x̄².
/// Throws std::invalid_argument for nonpositive scales.
ScaledParams nondimensionalize(const PhysicalParams& raw);

}  // namespace netmorph
