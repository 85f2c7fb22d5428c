"""
Empirical cross-correlation of a VAR(1) path
============================================

A bivariate VAR(1) process has a cross-correlation function available in
closed form, which makes it a convenient check on the estimator. Here we
simulate one long path, estimate its CCF on the default lag grid and draw it
next to the population curve.
"""

# %%
# Set up a stable coefficient matrix. The second component is driven by the
# lagged first one, so correlation should build up at positive lags.
import numpy as np
import matplotlib.pyplot as plt

from ccfcompare import LagGrid, Var1Spec, ccf_curve, simulate_var1_path, theoretical_var1_ccf

spec = Var1Spec(A=[[0.7, 0.0], [0.4, 0.5]], Sigma=[[1.0, 0.2], [0.2, 1.0]], T=50_000)
rate = 20.0  # Hz; lags of -1..1 s become -20..20 samples
grid = LagGrid()

path = simulate_var1_path(spec, seed=1)
empirical = ccf_curve(path[:, 0], path[:, 1], grid, rate)
theory = theoretical_var1_ccf(spec, grid, rate)
print("max |empirical - theory| =", np.max(np.abs(empirical.rho - theory.rho)))

# %%
# The correlogram.
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.axhline(0, color="0.7", lw=0.8)
ax.plot(grid.values, theory.rho, "k-", label="population")
ax.plot(grid.values, empirical.rho, "o", ms=4, label="estimate")
ax.set_xlabel("lag (s)")
ax.set_ylabel("cross-correlation")
ax.legend()
fig.tight_layout()
fig.savefig("ccf_var1.png", dpi=120)
