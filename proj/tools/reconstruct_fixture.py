"""Rebuild data/fixture_cohort.csv and data/fixture_fit.json.

The published material gives the descriptive table (events/totals by exposure
cell, overall and split by age <= 67, sex and residence), the fitted
coefficients and a covariance matrix rounded to two decimals, plus Monte Carlo
summaries of the effect distribution. Individual records are not available.

Steps:
  1. Place subjects so that every descriptive-table count holds exactly.
     male/urban are spread evenly inside each (z1, z2, y) group; ages are
     evenly spaced inside per-group ranges fitted to the score equations.
  2. Round ages to integers in [30, 95] without crossing the 67 split.
  3. Anneal within (z1, z2, y) groups (swap male, urban or age between two
     subjects, or nudge one age) toward the published plug-in effects and
     Monte Carlo summaries. Every move preserves the descriptive counts.
  4. Choose the covariance inside the rounding box of the printed matrix
     (|diff| < 0.005, printed -0.00 entries kept <= 0) by least squares on
     the same summaries, subject to positive definiteness.
  Steps 3-4 alternate for --rounds rounds.

The result is a calibrated stand-in, not the original data.

usage: python tools/reconstruct_fixture.py --out data [--seed 1] [--rounds 2]
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

# (z1, z2): overall, age <= 67, female, rural as (events, total)
TABLE = {
    (1, 1): ((23, 75), (12, 41), (4, 22), (11, 32)),
    (0, 1): ((4, 36), (2, 13), (1, 8), (4, 26)),
    (1, 0): ((23, 31), (11, 13), (3, 5), (13, 15)),
    (0, 0): ((5, 8), (2, 2), (0, 1), (3, 6)),
}
TERMS = ["intercept", "z1", "z2", "z1*z2", "age", "male", "urban", "z1*age"]
PI = np.array([3.92, -3.82, -2.63, 0.87, -0.06, 0.95, -0.66, 0.07])
S = np.array([
    [12.25, -11.68, -1.10, 1.08, -0.16, -0.37, -0.10, 0.16],
    [-11.68, 13.25, 1.10, -1.36, 0.16, 0.04, 0.01, -0.18],
    [-1.10, 1.10, 0.90, -0.90, 0.01, -0.00, 0.01, -0.01],
    [1.08, -1.36, -0.90, 1.14, -0.01, 0.02, -0.00, 0.01],
    [-0.16, 0.16, 0.01, -0.01, 0.00, 0.00, 0.00, -0.00],
    [-0.37, 0.04, -0.00, 0.02, 0.00, 0.27, -0.03, -0.00],
    [-0.10, 0.01, 0.01, -0.00, 0.00, -0.03, 0.17, -0.00],
    [0.16, -0.18, -0.01, 0.01, -0.00, -0.00, -0.00, 0.00],
])
POINT = np.array([0.12, -0.48, 0.01])
# INT 95% and 50% limits; then per conditioning effect: tercile cut points,
# stratum means, stratum 95% limits.
TARGET = np.array([-0.31, 0.34, -0.10, 0.14,
                   0.105, 0.246, 0.18, 0.03, -0.15, -0.05, 0.40, -0.20, 0.21, -0.40, 0.04,
                   -0.508, -0.374, 0.18, 0.01, -0.14, -0.04, 0.40, -0.20, 0.23, -0.40, 0.14])
TOL = np.array([0.05] * 4 + ([0.03] * 2 + [0.05] * 3 + [0.06] * 6) * 2)
SPLIT = 67


def spread(i, k, m, reverse=False):
    j = m - 1 - i if reverse else i
    return ((j + 1) * k) // m > (j * k) // m


def base_cohort(ranges):
    rows = []
    g = 0
    for (z1, z2), ((ev, tot), (yev, ytot), (fev, ftot), (rev, rtot)) in TABLE.items():
        for y, m, a, f, r in ((1, ev, yev, fev, rev), (0, tot - ev, ytot - yev, ftot - fev, rtot - rev)):
            lo, hi = ranges[g]
            g += 1
            for i in range(m):
                young = i < a
                rank, cnt = (i, a) if young else (i - a, m - a)
                age = lo + (SPLIT - lo) * (rank + 0.5) / cnt if young else SPLIT + (hi - SPLIT) * (rank + 0.5) / cnt
                male = 0 if spread(i, f, m) else 1
                urban = 0 if spread(i, r, m, True) else 1
                rows.append((y, z1, z2, age, male, urban))
    return np.array(rows, float)


def design(D):
    y, z1, z2, a, m, u = D.T
    return np.column_stack([np.ones_like(y), z1, z2, z1 * z2, a, m, u, z1 * a])


def eta_at(P, D, z1, z2):
    a, m, u = D[:, 3], D[:, 4], D[:, 5]
    return (P[:, [0]] + P[:, [1]] * z1 + P[:, [2]] * z2 + P[:, [3]] * z1 * z2 + np.outer(P[:, 4], a)
            + np.outer(P[:, 5], m) + np.outer(P[:, 6], u) + np.outer(P[:, 7], z1 * a))


def triple_from(R):
    r00, r10, r01, r11 = (R[k].mean(axis=1) for k in ((0, 0), (1, 0), (0, 1), (1, 1)))
    return r10 - r00, r01 - r00, r11 - r01 - r10 + r00


def risks(P, D):
    return {(z1, z2): expit(eta_at(P, D, z1, z2)) for z1 in (0, 1) for z2 in (0, 1)}


def summaries(te1, te2, it):
    q = np.quantile
    out = list(q(it, [0.025, 0.975, 0.25, 0.75]))
    for c in (te1, te2):
        b1, b2 = q(c, [1 / 3, 2 / 3])
        strata = [it[c <= b1], it[(c > b1) & (c <= b2)], it[c > b2]]
        out += [b1, b2] + [s.mean() for s in strata]
        for s in strata:
            out += list(q(s, [0.025, 0.975]))
    return np.array(out)


def fit_ranges():
    def res(p):
        D = base_cohort(p.reshape(8, 2))
        X = design(D)
        s = X.T @ (D[:, 0] - expit(X @ PI))
        s[4] /= SPLIT
        s[7] /= SPLIT
        mu = expit(X @ PI)
        info = X.T @ (X * (mu * (1 - mu))[:, None])
        iu = np.triu_indices(8)
        t = np.array(triple_from(risks(PI[None, :], D))).ravel() - POINT
        return np.concatenate([s, ((np.linalg.inv(info) - S) / 0.005)[iu] * 0.1, t * 10])
    r = least_squares(res, np.array([45, 88] * 8, float), bounds=([20, 67.5] * 8, [66.9, 105] * 8))
    return r.x.reshape(8, 2)


def anneal(D, sigma, iters, rng, n_draws=4000):
    P = PI + np.random.default_rng(11).standard_normal((n_draws, 8)) @ np.linalg.cholesky(sigma).T
    R = risks(P, D)
    R0 = risks(PI[None, :], D)
    groups = {}
    for i, row in enumerate(D):
        groups.setdefault((row[1], row[2], row[0]), []).append(i)
    groups = [np.array(v) for v in groups.values()]

    def objective(R, R0):
        o = (summaries(*triple_from(R)) - TARGET) / TOL
        t = (np.array(triple_from(R0)).ravel() - POINT) / 0.08
        return np.sum(o ** 4) + np.sum(t ** 4)

    def update(R, E, idx, P):
        out = {}
        for k, v in R.items():
            w = v.copy()
            w[:, idx] = expit(eta_at(P, E[idx], *k))
            out[k] = w
        return out

    cur = objective(R, R0)
    best, best_D = cur, D.copy()
    for it in range(iters):
        temp = 0.5 * 0.002 ** (it / iters)
        E = D.copy()
        g = groups[rng.integers(len(groups))]
        move = rng.integers(4)
        if move < 3:
            if len(g) < 2:
                continue
            i, j = rng.choice(g, 2, replace=False)
            col = (4, 5, 3)[move]
            E[i, col], E[j, col] = D[j, col], D[i, col]
            idx = np.array([i, j])
        else:
            i = rng.choice(g)
            a = E[i, 3] + rng.choice([-5, -3, -2, -1, 1, 2, 3, 5])
            if (D[i, 3] <= SPLIT) != (a <= SPLIT) or a < 30 or a > 95:
                continue
            E[i, 3] = a
            idx = np.array([i])
        RE, RE0 = update(R, E, idx, P), update(R0, E, idx, PI[None, :])
        v = objective(RE, RE0)
        if v < cur or rng.random() < np.exp((cur - v) / temp):
            D, R, R0, cur = E, RE, RE0, v
            if v < best:
                best, best_D = v, D.copy()
    return best_D


def covariance_box():
    lo, hi = S - 0.0049, S + 0.0049
    zero = S == 0
    hi[zero & np.signbit(S)] = 0.0
    lo[zero & ~np.signbit(S)] = 0.0
    return lo, hi


def fit_covariance(D, start, nfev, n_draws=20000):
    iu = np.triu_indices(8)
    lo, hi = covariance_box()
    lo_u, hi_u = lo[iu], hi[iu]
    Z = np.random.default_rng(5).standard_normal((n_draws, 8))

    def mat(u):
        M = np.zeros((8, 8))
        M[iu] = lo_u + (hi_u - lo_u) / (1 + np.exp(-u))
        return M + np.triu(M, 1).T

    def res(u):
        M = mat(u)
        if np.linalg.eigvalsh(M).min() <= 2e-6:
            return np.full(len(TARGET), 10.0)
        P = PI + Z @ np.linalg.cholesky(M).T
        return (summaries(*triple_from(risks(P, D))) - TARGET) / TOL

    f = np.clip((start[iu] - lo_u) / np.maximum(hi_u - lo_u, 1e-12), 0.02, 0.98)
    r = least_squares(res, np.log(f / (1 - f)), diff_step=1e-1, max_nfev=nfev)
    return mat(r.x)


def make_pd(M, floor=5e-6):
    lo, hi = covariance_box()
    for _ in range(1000):
        M = (np.clip(M, lo, hi) + np.clip(M, lo, hi).T) / 2
        w, V = np.linalg.eigh(M)
        if w.min() > 2e-6:
            return M
        M = V @ np.diag(np.maximum(w, floor)) @ V.T
    raise RuntimeError("no positive definite matrix in the rounding box")


def inverse_information(D):
    X = design(D)
    mu = expit(X @ PI)
    return np.linalg.inv(X.T @ (X * (mu * (1 - mu))[:, None]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--rounds", type=int, default=2)
    ap.add_argument("--iters", type=int, default=30000)
    ap.add_argument("--nfev", type=int, default=300)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    D = base_cohort(fit_ranges())
    young = D[:, 3] <= SPLIT
    D[:, 3] = np.where(young, np.clip(np.round(D[:, 3]), 30, SPLIT), np.clip(np.round(D[:, 3]), SPLIT + 1, 95))
    sigma = make_pd(inverse_information(D))
    for _ in range(args.rounds):
        D = anneal(D, sigma, args.iters, rng)
        sigma = make_pd(fit_covariance(D, sigma, args.nfev))

    args.out.mkdir(parents=True, exist_ok=True)
    lines = ["y,z1,z2,age,male,urban"] + ["%d,%d,%d,%d,%d,%d" % tuple(r) for r in D]
    (args.out / "fixture_cohort.csv").write_text("\n".join(lines) + "\n")
    fit = {
        "terms": TERMS,
        "coefficients": PI.tolist(),
        "covariance": [[float(x) for x in row] for row in sigma],
        "loglik": None,
        "n": len(D),
        "source": "published coefficients; covariance completed within print rounding",
    }
    (args.out / "fixture_fit.json").write_text(json.dumps(fit, indent=2) + "\n")


if __name__ == "__main__":
    main()
