// Uncertainty component of the risk-free rate and welfare cost of consumption risk
// for a linear stochastic-volatility growth model, Gaussian versus three-component shocks.
#include <cstdio>

#include "sievesmm/sievesmm.hpp"

int main() {
  using namespace sievesmm;
  const SvLinearParams gaussian_fit{0.21 * (1.0 - 0.33), 0.33, 0.39, 0.65, 0.15};
  const SvLinearParams mixture_fit{0.21 * (1.0 - 0.32), 0.32, 0.43, 0.75, 0.13};
  const auto normal = standard_normal_mixture();
  const auto skewed = make_gaussian_mixture({0.8437947344813388, 0.11419519938459323, 0.04201006613406802},
                                            {0.02145015645097188, 0.2687463194155016, -1.161366145936493},
                                            {0.8148560906789439, 1.0899872013017171, 2.383979790900396});

  UncertaintyOptions uo;
  uo.units = {0.01, true};
  WelfareOptions wo;
  wo.units = uo.units;
  PreferenceParams pref;
  pref.horizon = 1200;
  pref.reps = 500;

  std::printf("%6s %14s %14s %12s %12s\n", "gamma", "rf normal", "rf mixture", "lambda nrm", "lambda mix");
  for (double g : {2.0, 4.0, 6.0, 10.0}) {
    pref.gamma = g;
    const double a = uncertainty_component(gaussian_fit, normal, g, uo).effect;
    const double b = uncertainty_component(mixture_fit, skewed, g, uo).effect;
    const double la = 100.0 * welfare_cost(gaussian_fit, normal, pref, wo).lambda;
    const double lb = 100.0 * welfare_cost(mixture_fit, skewed, pref, wo).lambda;
    std::printf("%6.0f %14.4f %14.4f %12.4f %12.4f\n", g, a, b, la, lb);
  }
  return 0;
}
