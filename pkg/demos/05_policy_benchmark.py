"""Benchmarking the test-selection policies on paired seeds: open-loop, the
improved version of it, greedy, one-step look-ahead, and the exact optimum.

Run:  python demos/05_policy_benchmark.py
"""

from epitest import OpenLoopPlan, make_policy, monte_carlo_eval, paired_difference
from epitest.presets import scenario_a

cfg = scenario_a()
plan = OpenLoopPlan((1, 2, 3, 0))
n_runs = 4000

print(f"scenario A, {n_runs} paired-seed episodes per policy\n")
print(f"{'policy':>10} {'mean cost':>10} {'std err':>8} {'tests':>6} {'final inf':>9}")
results = {}
for name in ("never", "open_loop", "improved", "greedy", "lookahead", "exact"):
    policy = make_policy(name, cfg, plan=plan)
    res = monte_carlo_eval(cfg, policy, n_runs, workers=4)
    results[name] = res
    print(f"{name:>10} {res.mean_cost:>10.4f} {res.std_error:>8.4f} "
          f"{res.mean_tests:>6.3f} {res.mean_final_infections:>9.3f}")

print("\npaired differences (negative means the left policy is cheaper):")
for a, b in (("exact", "improved"), ("improved", "open_loop"), ("exact", "lookahead")):
    diff, se = paired_difference(results[a].costs, results[b].costs)
    print(f"  {a} vs {b}: {diff:+.4f} +- {se:.4f}")

print("\nNotes: the open-loop plan pays for three tests it cannot re-plan;")
print("one improvement step already recovers most of that. Greedy and")
print("look-ahead skip testing here because a single prevented crossing is")
print("worth less than the test cost on this instance; the exact optimum")
print("tests once, at the right moment, and beats them all.")
