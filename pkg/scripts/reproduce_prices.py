"""Price table: our MC/RQMC estimates beside the published ones, budgets 2^10..2^18."""
import sys

from rqmc_greeks.experiments import table_reproduction

budgets = [2**p for p in range(10, 19)] if len(sys.argv) < 2 else [2**int(p) for p in sys.argv[1:]]
print("instrument,sampler,N,value,std_error,ref_value,ref_error")
for r in table_reproduction("prices", budgets=budgets):
    print(f"{r['instrument']},{r['sampler']},{r['N']},{r['value']:.6f},{r['std_error']:.3e},"
          f"{r['ref_value']:.6f},{r['ref_error']:.3e}")
