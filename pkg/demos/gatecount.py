"""Closed-form gate counts: where does the binary encoding overtake the unary one?"""

import math

from nisqkit.unary import GateCountModel, crossover_bins, gate_counts

for native in ("CNOT", "PARTIAL_ISWAP", "BEST"):
    print(f"\n{native}: crossover at {crossover_bins(native)} bins")
    for n in (8, 32, 128, 512):
        u = gate_counts(GateCountModel("unary", native, n))["total"]
        b = gate_counts(GateCountModel("binary", native, math.log2(n)))["total"]
        print(f"  {n:4d} bins  unary {u:8.0f}  binary {b:8.0f}")
