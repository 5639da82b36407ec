"""Regenerates the frozen reference values used by the core test suites.

Acceptance probabilities are evaluated with mpmath at 60 significant digits.
Paired t-test references come from scipy.stats.ttest_rel.
"""
import json
import pathlib

import mpmath
import numpy as np
from scipy import stats

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "fixtures"


def acceptance(k, alpha):
    mpmath.mp.dps = 60
    a = mpmath.mpf(alpha)
    w = [mpmath.e ** (a * r) for r in range(1, k + 1)]
    s = mpmath.fsum(w)
    return [mpmath.nstr(x / s, 30) for x in w]


def ttest_cases():
    rng = np.random.default_rng(20240611)
    cases = [{
        "before": [0.1, 0.2, 0.3],
        "after": [0.15, 0.40, 0.25],
    }]
    while len(cases) < 100:
        n = int(rng.integers(2, 60))
        before = rng.uniform(0.0, 1.0, n)
        shift = rng.normal(0.0, 0.1)
        after = np.clip(before + shift + rng.normal(0.0, rng.uniform(0.01, 0.3), n), 0.0, 1.0)
        cases.append({"before": [float(x) for x in before], "after": [float(x) for x in after]})
    for c in cases:
        res = stats.ttest_rel(c["after"], c["before"])
        c["t"] = float(res.statistic)
        c["p"] = float(res.pvalue)
        c["df"] = len(c["before"]) - 1
    return cases


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    probs = {
        "k10_alpha-0.1": acceptance(10, "-0.1"),
        "k2_alpha-0.1": acceptance(2, "-0.1"),
        "k5_alpha-1.5": acceptance(5, "-1.5"),
    }
    (OUT / "acceptance_probabilities.json").write_text(json.dumps(probs, indent=2) + "\n")
    (OUT / "ttest_reference.json").write_text(json.dumps(ttest_cases(), indent=1) + "\n")


if __name__ == "__main__":
    main()
