# %% [markdown]
# # Randomized checks of the inequalities behind the bounds
#
# Each check draws random weights and inputs, evaluates both sides of an
# inequality and counts violations.  The margin and LSTM checks also count
# violations of the uncorrected forms, which do fail.

# %%
from rnnbounds import verify_conv_orthogonality, verify_hidden_norm, verify_margin_lipschitz
from rnnbounds import verify_output_lipschitz

for cell in ("vanilla", "mgu", "lstm", "conv"):
    h = verify_hidden_norm(cell, trials=200, seed=0)
    lip = verify_output_lipschitz(cell, trials=200, seed=0)
    print(f"{cell:>8}: hidden {h.violations}/{h.trials}, lipschitz {lip.violations}/{lip.trials}",
          lip.extra.get("uncorrected_violations", ""))

# %%
m = verify_margin_lipschitz(trials=2000, seed=0)
print(f"margin, factor 2: {m.violations}/{m.trials}; constant 1 fails on {m.extra['uncorrected_violations']}")

# %% [markdown]
# Orthogonal filter banks need the 1/sqrt(k) scaling; without it the
# operator norm exceeds 1.

# %%
for scaled in (True, False):
    r = verify_conv_orthogonality(3, 8, trials=50, seed=0, scaled=scaled)
    print(scaled, r.violations, r.extra["pooling_norm"])

# %% [markdown]
# A Monte Carlo estimate of the empirical Rademacher complexity of a small
# norm-capped class sits far below the bound.

# %%
import numpy as np

from rnnbounds import BoundQuery, ModelWeights, audit, estimate_erc_mc, gen_synthetic, vanilla_erc_bound
from rnnbounds.verify import VanillaClass

data = gen_synthetic(20, 3, 2, 2, "running-sign", seed=0)
est = estimate_erc_mc(VanillaClass(data, d_h=2, t=3, gamma=1.0), draws=50, candidates=200, seed=0)
w = ModelWeights("vanilla", {"U": np.eye(2), "V": np.eye(2), "W": np.eye(2)})
print(est.estimate, vanilla_erc_bound(BoundQuery(audit(w, B_x=1.0), t=3, m=20, gamma=1.0)).value)
