# %% [markdown]
# # Growth of the complexity term with the horizon
#
# The recurrent gain B_U decides how the complexity term grows with the
# sequence length t: flat below 1, linear at 1 (while B_W t stays below
# sqrt(d)), and square-root growth above 1 once the min saturates.

# %%
import numpy as np

from rnnbounds import regime_classify
from rnnbounds.experiments import loglog_slope, ours_growth, synthetic_profile

ts = 2 ** np.arange(4, 11)
cases = {"I": synthetic_profile(0.5), "II": synthetic_profile(1.0, B_W=1e-3), "III": synthetic_profile(1.5)}
for label, profile in cases.items():
    values = ours_growth(profile, ts)
    regime = regime_classify(profile.B("U"))
    print(f"regime {label} ({regime.order}): slope {loglog_slope(ts, values):.3f}")

# %% [markdown]
# Geometric sums near base 1 are where naive evaluation loses digits.

# %%
from rnnbounds import geometric_ratio

for base in (1 - 1e-9, 1.0, 1 + 1e-9, 1.5):
    r = geometric_ratio(base, 1000)
    print(base, r.value, r.computed_in_log_domain)
print(geometric_ratio(10.0, 400))
