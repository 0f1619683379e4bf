"""
Estimating a GHZ fidelity from one fixed measurement
====================================================

Each input qubit is swapped into its own two-node reservoir.  After a fixed
evolution both nodes are read out in the occupation basis, which gives four
outcomes per qubit.  Training on six reference states fixes a linear map from
outcomes to expectation values, and that map turns every snapshot into an
unbiased single-shot estimate of any observable.
"""

import numpy as np

from qrpe import analysis as an, estimators as es, statelib as sl, training as tr
from qrpe.reservoir import QUBIT_SETTING, pair_effects
from qrpe.sampling import sample_snapshots

# reservoir dynamics for one input qubit; the four effects must span the
# operator space, which the condition number of their matrix reports
pd = pair_effects(QUBIT_SETTING)
print(f"condition number of the readout map: {pd.cond:.2f}")

# %%
# A three-qubit GHZ state, slightly dephased so that the fidelity is below one.
n = 3
target = sl.ghz(n)
rho = sl.dephase(target.dm(), 0.1)
exact = float(np.real(np.trace(target.projector() @ rho.matrix)))

# the projector is a short sum of Pauli products, so its weights factorize
weights = tr.weights_factored(sl.ghz_projector_terms(n), [pd] * n)

# %%
# Worst-case variance of a single snapshot and the resulting sample plan
# for error 0.05 with 95% confidence.
f = an.f_res_weights(weights, [pd] * n)
plan = an.plan_linear(0.05, 0.05, 1, f)
print(f"variance bound {f:.2f}: {plan.n_total} snapshots in {plan.k_batches} batches")

# %%
# Draw the snapshots and form the median of batch means.
ss = sample_snapshots(rho, [pd] * n, plan.n_total, seed=7)
est = es.mom_estimate(weights, ss, plan.k_batches)
print(f"estimated fidelity {est:.4f}, exact {exact:.4f}, error {abs(est - exact):.4f}")
