"""Main-effect sums, average dimensions and types for every Greek/scheme/method row.

Usage: python scripts/gsa_tables.py [gsa_do|gsa_asian] [log2 budget]
Full tables at 2^16 take a long while on one core.
"""
import sys

from rqmc_greeks.experiments import table_reproduction

tables = [sys.argv[1]] if len(sys.argv) > 1 else ["gsa_asian", "gsa_do"]
budget = 2**int(sys.argv[2]) if len(sys.argv) > 2 else 2**14
print("table,instrument,greek,scheme,method,is,main_sum,d_A,type,ref_main_sum,ref_d_A,ref_type")
for table in tables:
    for r in table_reproduction(table, budget=budget):
        print(f"{table},{r['instrument']},{r['greek']},{r['scheme']},{r['method']},{r['importance_sampling']},"
              f"{r['main_sum']:.3f},{r['d_A']:.3f},{r['type']},{r['ref_main_sum']},{r['ref_d_A']},"
              f"{r['ref_type']}", flush=True)
