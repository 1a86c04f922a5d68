#include "netmorph/scaling.hpp"

#include <cmath>
#include <stdexcept>

namespace netmorph {

ScaledParams nondimensionalize(const PhysicalParams& raw) {
  if (!(raw.m_bar > 0.0)) throw std::invalid_argument("nondimensionalize: sup|m0| must be > 0");
  if (!(raw.S_bar > 0.0)) throw std::invalid_argument("nondimensionalize: sup|S| must be > 0");
  if (!(raw.x_bar > 0.0)) throw std::invalid_argument("nondimensionalize: domain diameter must be > 0");
  if (!(raw.alpha > 0.0)) throw std::invalid_argument("nondimensionalize: alpha must be > 0");
  if (!(raw.D >= 0.0) || !(raw.c > 0.0) || !(raw.r > 0.0)) {
    throw std::invalid_argument("nondimensionalize: need D >= 0, c > 0, r > 0");
  }
  ScaledParams s;
  const double relax = raw.alpha * std::pow(raw.m_bar, 2.0 * (raw.gamma - 1.0));
  s.t_bar = 1.0 / relax;
  s.p_bar = raw.x_bar * raw.x_bar * raw.S_bar / (raw.m_bar * raw.m_bar);
  s.r = raw.r / (raw.m_bar * raw.m_bar);
  s.c = raw.c * s.p_bar / (raw.x_bar * std::sqrt(relax));
  s.D = raw.D * std::sqrt(s.t_bar) / raw.x_bar;
  return s;
}

}  // namespace netmorph
