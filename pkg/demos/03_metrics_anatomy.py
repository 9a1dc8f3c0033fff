"""Walkthrough: what the two evaluation tiers reward and punish.

Three constructed cells on one ground truth show the trade-off the metric
suite is built to expose: a decisive model that collapses onto the majority
mode scores tolerable accuracy but terrible calibration (JSD up,
cross-entropy spiking on the dropped class), while a conservative model with
the right aggregate shares can beat it on every distribution metric despite
losing on accuracy.
"""

import math

from modebench import DecisionRecord, evaluate_run
from modebench.metrics import ShareDistribution, cross_entropy, jsd, smooth_distribution

LABELS = ("TRAIN", "SM", "CAR")


def cell(predictions, truths):
    records = [
        DecisionRecord(agent_id=f"a{i}", config_fingerprint="demo",
                       predicted_mode=p, reasoning="", raw_response="",
                       latency=0.0, attempt_count=1)
        for i, p in enumerate(predictions)
    ]
    return evaluate_run(records, truths, LABELS)


truths = ["TRAIN"] * 10 + ["SM"] * 6 + ["CAR"] * 4

perfect = cell(truths, truths)
collapsed = cell(["TRAIN"] * 20, truths)
calibrated = cell(["TRAIN"] * 8 + ["SM"] * 8 + ["CAR"] * 4, truths)

print(f"{'cell':12s} {'acc':>6s} {'f1_w':>6s} {'mae':>7s} {'jsd':>9s} {'ce':>7s}")
for name, report in (("perfect", perfect), ("collapsed", collapsed),
                     ("calibrated", calibrated)):
    print(f"{name:12s} {report.accuracy:6.3f} {report.f1_weighted:6.3f} "
          f"{report.dist_mae:7.4f} {report.jsd:9.6f} {report.cross_entropy:7.3f}")

print("\nwhy the collapsed cell's cross-entropy explodes:")
p = ShareDistribution((0.5, 0.3, 0.2))
q = ShareDistribution((1.0, 0.0, 0.0))
print("  truth shares   ", p.probs)
print("  predicted      ", q.probs)
print("  smoothed pred  ", tuple(round(v, 12) for v in smooth_distribution(q).probs))
print(f"  -0.3*ln(1e-9) - 0.2*ln(1e-9) = "
      f"{-(0.3 + 0.2) * math.log(1e-9):.2f} nats dominates CE = "
      f"{cross_entropy(p, q):.2f}")

print("\nJSD stays bounded by ln 2 =", round(math.log(2), 6), "nats:")
print("  identical shares ->", jsd(p, p))
print("  disjoint supports ->",
      round(jsd(ShareDistribution((1.0, 0.0)), ShareDistribution((0.0, 1.0))), 6))
