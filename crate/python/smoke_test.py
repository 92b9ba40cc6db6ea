"""Smoke test for the ficnull_py extension.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import json
import math
import os
import sys
import tempfile

import ficnull_py as fn


def check(cond, msg):
    if not cond:
        print("FAIL:", msg)
        sys.exit(1)
    print("ok  ", msg)


def main():
    heat = fn.Operator.heat()
    check(heat.shape == (20, 20), "heat matrix is 20x20")
    s = heat.sigma()
    check(s[3] / s[0] < 1e-4, "heat spectrum decays fast")

    # one-sparse recovery with the modified fidelity
    a = fn.Operator([[1.0, 0.2, 0.0, 0.3], [0.0, 1.0, 0.5, 0.1], [0.2, 0.0, 1.0, 0.7]])
    w = a.weights(2)
    j = max(range(4), key=lambda i: w.proj_norms[i])
    alpha = 0.3 * w.proj_norms[j]
    y = [row[j] for row in a.matrix()]
    rec = a.solve(y, "W_L1_MODFID", 2, alpha=alpha)
    gamma = 1.0 - alpha / w.proj_norms[j]
    check(rec.support == [j], f"support {{{j}}} recovered")
    check(abs(rec.x[j] - gamma) < 1e-6, "magnitude matches 1 - alpha/||P_k phi_j||")

    # noise is deterministic and scaled by the data range
    b = heat.apply([math.exp(-((2.3 - (i + 0.5) * math.pi / 20) ** 2) / 0.02) for i in range(20)])
    y1, eta1, d1 = fn.add_noise(b, 0.001, 7)
    y2, eta2, d2 = fn.add_noise(b, 0.001, 7)
    check(eta1 == eta2 and d1 == d2, "seeded noise is reproducible")
    k = heat.select_truncation(b, eta1)
    rec = heat.solve(y1, "W_L1_STDFID", k, delta=d1)
    check(abs(rec.residual - d1) <= 1e-3 * d1, "discrepancy principle hits delta")
    try:
        heat.solve(y1, "NOPE", k, alpha=1.0)
        check(False, "unknown formulation rejected")
    except ValueError:
        check(True, "unknown formulation rejected")

    report = json.loads(fn.verify([0, 1, 2]))
    check(report["passed"], "verification sweep passes")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "a.txt")
        a.save(path)
        check(fn.Operator.load(path).matrix() == a.matrix(), "matrix file round trip")
        cfg = os.path.join(tmp, "heat.cfg")
        with open(cfg, "w") as f:
            f.write("experiment = heat\nlevels = 0.01\nseeds = 0\nformulations = W_L1_STDFID\noutput = out\n")
        out = fn.run(cfg)
        check(os.path.isfile(os.path.join(out, "index.csv")), "experiment bundle written")
        check(len(fn.plot(out)) > 0, "plots rendered")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
