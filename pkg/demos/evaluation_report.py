"""Score a noisy crowd run the way a benchmark table would.

The recognizer here is a noise model tuned to realistic error rates, so the
report lands near them. Timing columns come straight from the trace.
"""

from rtface import run
from rtface.evaluation import evaluate
from rtface.synthetic import bundled_scenarios, load_scenario

for name in ("noisy_crowd", "overload"):
    sc = load_scenario(bundled_scenarios()[name])
    result = run(sc)
    report = evaluate(result.trace, sc)
    print(f"== {name}")
    for stage, metric in report.table_rows():
        print(f"  {stage:<11}{metric}")
    print(f"  identity switches {report.identity_switches}, drops {report.drop_count}, "
          f"fps {report.achieved_fps:.2f}, staleness p95 "
          + ("n/a" if report.staleness_p95_ms is None else f"{report.staleness_p95_ms:.0f} ms"))
