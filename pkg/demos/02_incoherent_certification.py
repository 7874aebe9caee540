"""The random-state test and its error-probability curves.

A single round prepares a Haar-random state, applies the channel, and
measures against the same state.  The identity channel always passes; any
other unitary fails a round with probability 1 - (d + |tr U|^2)/(d(d+1)),
so the miss probability decays geometrically in the query count.
"""

import numpy as np

from ucert import certify, ensembles

rng = np.random.default_rng(7)
d, eps_val = 4, 0.01
eps = ensembles.PerturbationParams(eps_val)

# closed-form curves for a handful of typical channels
print(f"d = {d}, epsilon = {eps_val}")
Ns = np.geomspace(1e2, 1e7, 40).astype(int)
for k in range(4):
    U = ensembles.eps_cue_unitary(d, eps, rng=rng)
    curve = certify.error_curve(U, Ns, eps_val)
    n_star = certify.queries_to_target(U, 1 / 3)
    print(f"channel {k}: |tr U| = {curve.trace_abs:.6f}  p = {curve.pass_prob:.8f}  N* = {n_star}")

# Monte-Carlo of the actual measurement sequence agrees with the curve
U = ensembles.eps_cue_unitary(d, ensembles.PerturbationParams(0.5), rng=rng)
p = certify.per_query_pass_probability(U)
N = 20
runs = 2000
rejected = sum(
    certify.simulate_incoherent(U, N, rng).verdict == certify.H1_FAR for _ in range(runs)
)
print(f"\nat epsilon = 0.5: predicted rejection rate {1 - p**N:.4f}, "
      f"observed {rejected / runs:.4f} over {runs} runs")

# the worst-case channel hides from the test: its pass probability stays high
psi = ensembles.haar_state(256, rng)
U_w = ensembles.single_basis_rotation(256, ensembles.PerturbationParams(0.5), psi)
print(f"\nsingle-basis rotation at d=256: p = {certify.per_query_pass_probability(U_w):.8f}"
      f"  (N* = {certify.queries_to_target(U_w, 1/3)} queries)")
print("the same perturbation strength on an arc-confined CUE channel at d=256")
U_a = ensembles.eps_cue_unitary(256, ensembles.PerturbationParams(0.5), rng=rng)
print(f"needs only N* = {certify.queries_to_target(U_a, 1/3)} queries")
