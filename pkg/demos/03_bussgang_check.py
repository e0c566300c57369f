"""Checking the linear-gain model of the quantizer bank.

When the branch inputs are uncorrelated and Gaussian, each quantizer acts
like a gain 1 - rho plus noise uncorrelated with its input. This demo
measures the gain matrix from samples and compares.
"""
# %%
import numpy as np

from tbq import design_theorem1, estimate_bussgang, gaussian_linear_model
from tbq.linear_task import branch_quantize

rng = np.random.default_rng(0)
Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
Sigma = (Q * np.linspace(1, 10, 6)) @ Q.T
model = gaussian_linear_model(rng.standard_normal((3, 6)), Sigma)
design = design_theorem1(model, P=3, M=4**3)

# %%
_, x = model.sample(rng, 1_000_000)
Y = x @ design.A.T
bg = estimate_bussgang(Y, branch_quantize(design.quantizers, Y))
print("estimated B\n", np.round(bg.B, 4))
print("1 - rho      ", np.round(1 - design.rho, 4))
print("max |z| off-diagonal:", np.abs(bg.B / bg.B_stderr)[~np.eye(3, dtype=bool)].max().round(2))
