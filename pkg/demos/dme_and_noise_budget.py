"""Density-matrix exponentiation, repeat-until-success swaps and the noisy-reflection error budget.

Run: python3 demos/dme_and_noise_budget.py
"""

import numpy as np

from uqemu import generate_instance, noisy_emulation_run, rus_swap_exponential
from uqemu.dme import dme_error_curve, loglog_slope
from uqemu.instances import random_density

sigma = random_density(2, seed=1)
curve = dme_error_curve(sigma, 1.0, [8, 16, 32, 64, 128, 256])
for n, err in curve:
    print(f"n={n:4d}  DME error {err:.3e}")
print(f"log-log slope {loglog_slope(*zip(*curve)):.3f}")

hits = [rus_swap_exponential(0.3, 6, seed=i).success for i in range(4000)]
print(f"\nrepeat-until-success within 6 rounds: {np.mean(hits):.4f} (expected {1 - 2**-6:.4f})")

problem = generate_instance(4, 2, 3, 2)
psi = problem.samples.basis_in @ np.array([1, 1j]) / np.sqrt(2)
print("\n   n   realized   eps_ref   eps_id   budget")
for n in (16, 64, 256):
    rec, budget = noisy_emulation_run(problem, psi, 3, n, seed=4)
    print(f"{n:4d}   {rec.trace_distance:.4f}    {budget.eps_ref:.4f}   {budget.eps_id:.4f}   {budget.eps_tot:.4f}")
