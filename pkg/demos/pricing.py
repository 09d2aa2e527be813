"""Price a European call on an 8-bin unary grid, noiseless and with depolarizing noise."""

from nisqkit.iqae import SchedulePolicy, estimate
from nisqkit.market import DEFAULT_OPTION as S, analytic_payoff, binned_payoff, discretize
from nisqkit.sim import NoiseModel
from nisqkit.unary import build_bundle, run_priced

grid = discretize(S, 8)
bundle = build_bundle(grid, S.k)
exact = binned_payoff(grid, S.k)
print(f"analytic (discounted) {analytic_payoff(S):.5f}   binned reference {exact:.5f}")

for eps in (0.0, 0.001, 0.003):
    noise = NoiseModel(eps) if eps else None
    plain = run_priced(bundle, 10_000, noise, 0, seed=1)
    rec = estimate(bundle, SchedulePolicy("linear", 3), 10_000, noise, seed=1)
    print(f"eps={eps:<6} sampling {plain.payoff_estimate:.5f} (acceptance {plain.acceptance:.3f})"
          f"   amplitude estimation {rec.payoff:.5f} +- {rec.payoff_err:.5f}")
