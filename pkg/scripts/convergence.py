"""Fitted error decay N^-alpha for prices and Greeks under MC+Euler and RQMC+bridge."""
from rqmc_greeks.config import RunConfig
from rqmc_greeks.experiments import convergence_study

budgets = tuple(2**p for p in range(10, 17))
print("instrument,greek,method,sampler,scheme,alpha,eps0")
for instrument, barrier in (("asian_call", None), ("down_out_call", 90.0)):
    for greek, method in ((None, "fd"), ("delta", "cpw"), ("gamma", "ci"), ("vega", "fd")):
        for sampler, scheme in (("mc", "euler"), ("rqmc", "bbd")):
            cfg = RunConfig(instrument=instrument, barrier=barrier, greek=greek, method=method,
                            sampler=sampler, scheme=scheme, budgets=budgets)
            res = convergence_study(cfg)
            print(f"{instrument},{greek or 'price'},{method if greek else '-'},{sampler},{scheme},"
                  f"{res.alpha:.3f},{res.eps0:.3e}", flush=True)
