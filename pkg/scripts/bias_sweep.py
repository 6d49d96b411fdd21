"""Bias against stencil width for Chebyshev-interpolation Greeks of the Asian call."""
import numpy as np

from rqmc_greeks.experiments import Reference, bias_variance_sweep
from rqmc_greeks.greeks import CI, default_request
from rqmc_greeks.paths import MarketSpec

spec = MarketSpec()
print("greek,width,bias,bias_error,rqmc_error,total")
for greek in ("delta", "gamma", "vega", "vomma"):
    req = default_request("asian_call", greek, CI, spec)
    widths = req.ci_width * np.array([0.25, 0.5, 1.0, 1.5, 2.0])
    res = bias_variance_sweep(req, widths, Reference("asian_call", spec, greek, budget=2**16), budget=2**14)
    for row in zip(res.widths, res.bias, res.bias_error, res.rqmc_error, res.total):
        print(greek + "," + ",".join(f"{x:.4g}" for x in row), flush=True)
