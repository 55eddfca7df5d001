# %% [markdown]
# # Convergence of the three couplings
#
# Strain and density errors of the symmetric, Johnson-Nedelec and
# Bielak-MacCamy couplings on the unit square, for the polynomial interior
# field with a Kelvin dipole outside.  Plotting is left out on purpose; the
# tables are what the CLI writes to `results.csv`.

# %%
import numpy as np

from lamecouple.analysis import convergence_study, observed_rates
from lamecouple.manufactured import build_manufactured

problem = build_manufactured("kelvin-exterior")

# %% [markdown]
# Four uniform refinements starting from h = 1/4.  The energy error of P1
# elements should halve with h; the density error in the single-layer norm
# converges faster, close to h^(3/2) or better.

# %%
for method in ("symmetric", "jn", "bmc"):
    res = convergence_study(problem, method, levels=4)
    eps = [r.err_eps for r in res]
    print(method)
    for r, rate in zip(res, observed_rates(eps)):
        print(f"  h={r.h:.4f}  dofs={r.dofs:5d}  err_eps={r.err_eps:.3e}  rate={rate:.2f}")

# %% [markdown]
# The affine patch field is reproduced to rounding error by every coupling.

# %%
patch = build_manufactured("linear-patch")
for method in ("symmetric", "jn", "bmc"):
    res = convergence_study(patch, method, levels=2)
    print(method, max(max(r.err_eps, r.err_phi) for r in res))
