"""Exact rank pooling versus the closed-form approximation.

The exact image is the weight vector of a small ranking SVM fitted to the
prefix means; the approximate image is one subgradient step of that
problem, taken from zero with a particular step size.
"""
import numpy as np

from dynimage import approx_rank_pool, build_problem, rank_pool_accumulate, solve, subgradient, suggest_step0
from _phantom import phantom

vol = phantom(24)
T = vol.depth

# --- the first-step identity -----------------------------------------------------
p0 = build_problem(vol, lam=0.0)
step = -(T * (T - 1) / 2) * subgradient(np.zeros(p0.dim), p0)
approx = rank_pool_accumulate(vol).ravel()
print("first-step vs approximate, relative error:",
      np.linalg.norm(step - approx) / np.linalg.norm(approx))

# the solver reproduces it with a single iteration
one = solve(p0, iterations=1, step0=T * (T - 1) / 2)
print("solve(iterations=1) matches:", np.allclose(one.d, approx, rtol=1e-6))

# --- running the solver to convergence -----------------------------------------------
p = build_problem(vol, lam=1e-3)
sol = solve(p, iterations=300, step0=suggest_step0(p))
print(f"objective: start {sol.initial_objective:.4f} -> best {sol.objective:.4f} at iteration {sol.best_iteration}")

# the raw trace may wiggle; the running minimum never goes up
trace, best = sol.objective_trace, sol.best_so_far
print("trace increases at", int((np.diff(trace) > 0).sum()), "steps; best-so-far increases at",
      int((np.diff(best) > 0).sum()))

# --- how alike are the two images? -------------------------------------------------------
exact = sol.plane(vol.height, vol.width).ravel()
cos = exact @ approx / (np.linalg.norm(exact) * np.linalg.norm(approx))
print(f"cosine(exact, approximate) = {cos:.4f}")

# how well does each image order the prefix means by depth?
for name, d in (("exact", sol.d), ("approximate", approx)):
    s = p.features @ d
    print(f"{name:12s} orders {np.mean(np.diff(s) > 0):.0%} of consecutive prefix means correctly")
