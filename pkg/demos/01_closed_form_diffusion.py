"""Grid convergence of k_eff for one-group diffusion on (0, pi).

With D = 1, sigma = 1, a scattering row sum of 0.3 and a fission row sum of
1.4 the fundamental mode is sin(x), lambda0 = 1, and separation of variables
gives k = 1.4 / (1 + 1 - 0.3).  The cell-centred scheme converges at second
order, which the error ratio between successive grids shows.
"""
import math

from slabkeff import diffusion_problem, solve_keff_direct, solve_keff_rootfind

EXACT = 1.4 / 1.7

print(f"exact k_eff = {EXACT:.12f}")
print(f"{'Nx':>6} {'rootfind':>16} {'direct':>16} {'error':>10} {'ratio':>7}")
prev = None
for nx in (25, 50, 100, 200, 400, 800):
    p = diffusion_problem(math.pi, nx, sigma=1.0, sigma_s=0.3, sigma_f=1.4)
    a = solve_keff_rootfind(p)
    b = solve_keff_direct(p)
    err = abs(a.k_eff - EXACT)
    ratio = f"{prev / err:7.3f}" if prev else ""
    print(f"{nx:6d} {a.k_eff:16.12f} {b.k_eff:16.12f} {err:10.2e} {ratio}")
    prev = err

print(f"classification at Nx=800: {a.classification.value}")
