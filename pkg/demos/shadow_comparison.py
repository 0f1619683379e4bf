"""
Reservoir snapshots next to Pauli classical shadows
===================================================

Both schemes give unbiased single-shot estimators, so the worst-case
single-snapshot variance is a fair figure of merit.  The reservoir reads out
in one fixed setting, while Pauli shadows draw a new random basis per shot.
"""

import numpy as np

from qrpe import analysis as an, qla, shadows as sh
from qrpe.reservoir import QUBIT_SETTING, pair_effects

pd = pair_effects(QUBIT_SETTING)
rng = np.random.default_rng(0)

print(" n  reservoir  shadows  ratio")
for n in range(1, 5):
    q, s = [], []
    for _ in range(100):
        proj = qla.haar_pure((2,) * n, rng).projector()
        q.append(an.f_res(proj, [pd] * n).f_res)
        s.append(sh.shadow_worst_case_bound(proj))
    print(f"{n:2d}  {np.mean(q):9.3f}  {np.mean(s):7.3f}  {np.mean(q) / np.mean(s):5.3f}")

# %%
# The ratio hardly moves with n.  The shadow protocol still needs one random
# setting per snapshot, and the reservoir needs just one in total.
psi = qla.haar_pure((2, 2), rng)
snaps = sh.sample_pauli_shadows(psi, 20000, seed=1)
print(f"distinct Pauli settings used by 20000 two-qubit shadows: "
      f"{len({tuple(b) for b in snaps.bases})}")
