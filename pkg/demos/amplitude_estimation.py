"""How the fused angle uncertainty shrinks as Grover powers are added."""

from nisqkit.iqae import SchedulePolicy, estimate, precision_law
from nisqkit.market import DEFAULT_OPTION as S, discretize
from nisqkit.unary import build_bundle, exact_ancilla_probability

bundle = build_bundle(discretize(S, 8), S.k)
a = exact_ancilla_probability(bundle)
print(f"exact ancilla probability {a:.6f}")
for kind in ("linear", "exponential"):
    for J in (0, 2, 4):
        pol = SchedulePolicy(kind, J)
        rec = estimate(bundle, pol, 10_000, None, seed=J)
        print(f"{kind:11s} J={J}  a={rec.fused_a:.6f} +- {rec.fused_da:.2e}"
              f"  (law {precision_law(pol, 10_000):.2e} on theta)")
