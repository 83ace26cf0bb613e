"""Reference values for the derived constants, computed with mpmath.

Run from the repository root:

    python3 tools/oracle.py > crates/core/tests/fixtures/oracle.json
"""

import json

import mpmath as mp

mp.mp.dps = 40


def block_norm_two_level(n, s):
    """Block norm of (1, c, ..., c) in R^{n+1}, c = 1/sqrt(ns), blocks by hand."""
    c = 1 / mp.sqrt(n * s)
    total = n + 1
    head = 1 + (s - 1) * c
    rest = total - s
    full, rem = divmod(rest, s)
    sq = head**2 + full * (s * c) ** 2 + (rem * c) ** 2
    return mp.sqrt(sq)


def block_norm_generic(x, s):
    mags = sorted((abs(mp.mpf(v)) for v in x), reverse=True)
    blocks = [sum(mags[i : i + s]) for i in range(0, len(mags), s)]
    return mp.sqrt(sum(b * b for b in blocks))


def main():
    beta0 = mp.sqrt(2 / mp.pi)
    s, n = 100, 10**6
    bn = block_norm_two_level(n, s)
    x9 = [1] + [1 / mp.sqrt(18)] * 9
    out = {
        "beta0": beta0,
        "upper_constant": mp.sqrt(mp.mpf("2.625")),
        "rip_lower_constant": 1 - 2 / mp.e,
        "two_level_n9_s2_block_norm_sq": block_norm_generic(x9, 2) ** 2,
        "two_level_n9_s2_closed_form": 2 + 2 / mp.sqrt(18) - mp.mpf(1) / 9 + mp.mpf(1) / 18,
        "counterexample_block_norm": bn,
        # proof's lower bound with delta -> 0, exact denominator
        "counterexample_ratio_floor": (2 - mp.mpf(1) / s) / bn,
        # every row fully loaded at its mean: d rows see 1 + 1/s^2, the rest 1/s^2
        "counterexample_ratio_mean_field": (mp.sqrt(1 + mp.mpf(1) / s**2) + mp.mpf(s - 1) / s) / bn,
        "sqrt2_minus_0_05": mp.sqrt(2) - mp.mpf("0.05"),
        "q_expectation_m100_d10_k1": (1 - mp.mpf(1) / 100) ** 10,
        "halfnormal_lambda1_d2_norm1": 2 * mp.e ** (-1),
        "bins_failure_bound_s10_m1000_eps0_3": 2 * 10 * mp.e ** (-mp.mpf("0.09") * 1000 / 2),
        "slack_unit_pair": 1 / mp.sqrt(2) + mp.sqrt(2) / 4 - 1,
        "cauchy_success_m400_eps0_2_asymptotic": cauchy_median_success(400, mp.mpf("0.2")),
    }
    print(json.dumps({k: float(v) for k, v in out.items()}, indent=2, sort_keys=True))


def cauchy_median_success(m, eps):
    """P[the (m/2)-th order statistic of m i.i.d. |Cauchy| lies in (1-eps, 1+eps)]."""
    cdf = lambda t: 2 / mp.pi * mp.atan(t)
    lo, hi = cdf(1 - eps), cdf(1 + eps)
    k = m // 2
    p = lambda u: mp.betainc(k, m - k + 1, 0, u, regularized=True)
    return p(hi) - p(lo)


if __name__ == "__main__":
    main()
