"""Emulate a hidden unitary on a random input subspace and watch the error shrink with T.

Run: python3 demos/emulate_hidden_unitary.py
"""

import numpy as np

from uqemu import (
    EXACT,
    MonteCarlo,
    build_D,
    channel_estimate,
    erase_probability,
    generate_instance,
    lambda_D,
    lambda_perp,
    postselected_output,
    required_T,
    run_circuit_sampled,
    trace_norm_distance,
    uhlmann_fidelity,
)
from uqemu.numerics import projector

rng = np.random.default_rng(11)
problem = generate_instance(4, 2, 3, rng)
s = problem.samples
psi = s.basis_in @ np.array([0.6, 0.8j])
target = s.hidden_unitary @ psi

dchan = build_D(s)
lam = lambda_D(dchan)
print(f"D=4 d=2 K=3  |lambda_D|={lam:.4f}  lambda_perp={lambda_perp(dchan, projector(problem.anchor_in)):.4f}")
print(f"steps needed for trace distance 0.1: {required_T(2, 0.1, lam)}")

print("\n T  p_erase   fidelity  post-fid  trace-dist")
for T in range(1, 7):
    est = channel_estimate(problem, psi, T, EXACT)
    post, _ = postselected_output(problem, psi, T)
    print(
        f"{T:2d}  {erase_probability(problem, psi, T):.6f}  {uhlmann_fidelity(est.state, target):.6f}"
        f"  {uhlmann_fidelity(post, target):.6f}  {trace_norm_distance(est.state, target):.6f}"
    )

# sampling is what a lab would see: one run at a time
T = 10
mc = channel_estimate(problem, psi, T, MonteCarlo(5000, 3))
print(f"\nMonte Carlo T={T}: trace distance {trace_norm_distance(mc.state, target):.4f} +- {mc.stderr_trace_norm:.4f}")
rec = run_circuit_sampled(problem, psi, T, seed=5)
print(f"single run: draws={rec.k_draws} erased={rec.erased} fidelity={uhlmann_fidelity(rec.output_state, target):.6f}")
