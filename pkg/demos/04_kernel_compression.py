"""Low-rank kernels: how much rank does k_eff need?

The collision kernels are compressed by truncated SVD over
((cell, node), node').  The error estimate is the first discarded singular
value; at full rank the compression is exact.
"""
from slabkeff import compress_problem, degenerate_approx, solve_keff_rootfind
from slabkeff.corpus import random_transport

problem = random_transport(11, cells=16, nodes_per_sign=4)
k = solve_keff_rootfind(problem).k_eff
n = problem.shape[1]
print(f"full kernels: k_eff = {k:.12f}\n")
print(f"{'rank':>4} {'fission err est':>16} {'k_eff':>16} {'rel change':>11}")
for r in range(1, n + 1):
    est = degenerate_approx(problem.cross_sections.sigma_f, r).error_estimate
    kr = solve_keff_rootfind(compress_problem(problem, r)).k_eff
    print(f"{r:4d} {est:16.3e} {kr:16.12f} {abs(kr - k) / k:11.2e}")
