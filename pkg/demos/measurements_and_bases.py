"""Projective measurements from samples, and exact emulation from two conjugate bases.

Run: python3 demos/measurements_and_bases.py
"""

import numpy as np

from uqemu.extensions import (
    conjugate_basis_emulation,
    out_branch_probability,
    projective_fidelity_check,
    random_conjugate_basis_set,
    random_measurement_problem,
    sample_out_frequency,
    two_outcome_sequence,
)
from uqemu.instances import random_ket
from uqemu.numerics import basis

mp = random_measurement_problem(6, 3, 6, seed=2, rank=2)
psi = mp.basis @ random_ket(2, 3)
p_wrong = out_branch_probability(mp, psi)
print(f"lambda_min={mp.lambda_min:.4f}  wrong branch {p_wrong:.2e} <= {(1 - mp.lambda_min) ** mp.T:.2e}")
print(f"sampled wrong-branch frequency {sample_out_frequency(mp, psi, 5000, 1):.4f}")
rep = projective_fidelity_check(mp, psi)
print(f"fidelity {rep.fidelity:.6f}  label probabilities {rep.label_probabilities}")

rng = np.random.default_rng(0)
fams = [[basis(4, 0), basis(4, 1)], [basis(4, 2), basis(4, 3)]]
labels = [two_outcome_sequence(fams, np.ones(4) / 2, rng, T=10)[0] for _ in range(400)]
print(f"\ntwo-outcome sequence on the uniform state: {[labels.count(x) for x in (0, 1, 'residual')]}")

cb = random_conjugate_basis_set(8, 4, seed=5)
phi = cb.theta_in.T @ random_ket(4, 6)
out = conjugate_basis_emulation(cb, phi)
print(f"\nconjugate-basis emulation |<U phi|out>| = {abs(np.vdot(cb.hidden_unitary @ phi, out)):.12f}")
