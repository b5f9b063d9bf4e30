"""How many fits each search needs.

A joint search over m candidate covariates for both submodels fits every
pair of subsets, 4^m models.  The two-step scheme fits 2^m mean models and
then 2^m dispersion models.  Both are run here on the reading data with a
counting fitter, and the winners are compared.

    python demos/selection_cost.py
"""
import time

from betaselect import FitOptions, SearchSpace, fit_mle, joint_select, load_reading_skills, two_step_select


class CountingFitter:
    def __init__(self):
        self.calls = 0

    def __call__(self, ds, spec):
        self.calls += 1
        return fit_mle(ds, spec, FitOptions(std_errors=False))


ds = load_reading_skills()
for m in (2, 3, 4, 5):
    pool = ("x2", "x3", "x4", "x5", "x6")[:m]
    space = SearchSpace(pool, pool)
    cj, ct = CountingFitter(), CountingFitter()
    t0 = time.perf_counter()
    joint = joint_select(ds, space, "sicc", fitter=cj)
    t1 = time.perf_counter()
    two = two_step_select(ds, space, "PS5", fitter=ct)
    t2 = time.perf_counter()
    print(f"m={m}: joint {cj.calls:5d} fits {t1 - t0:6.2f} s | two-step {ct.calls:3d} fits {t2 - t1:5.2f} s "
          f"| ratio {cj.calls // ct.calls}")
    print(f"      joint SICc   -> {joint.winner.label()}")
    print(f"      two-step PS5 -> {two.winner.label()}")
