"""Independent reference computations used by the tests.

Everything here is plain Python loops over dicts, written without the
package's einsum or closed-form paths, so agreement is a real cross-check.
"""

import itertools
import math

SIGNS = (1, -1)


def joint_sum_m3(left_bg, right_bg, xi, left, right, x, y):
    """Triple sum over (l1, l2, k) of the five factors, tables given as nested dicts.

    left_bg[x][l1], right_bg[y][l2], xi[(l1, l2)][k], left[(k, l1, x)][s1], right[(k, l2, y)][s2].
    Returns {(s1, s2): p}.
    """
    out = {(s1, s2): 0.0 for s1 in SIGNS for s2 in SIGNS}
    for l1, l2, k in itertools.product((1, 2), repeat=3):
        w = left_bg[x][l1] * right_bg[y][l2] * xi[(l1, l2)][k]
        for s1, s2 in out:
            out[(s1, s2)] += w * left[(k, l1, x)][s1] * right[(k, l2, y)][s2]
    return out


def correlator(joint):
    return sum(s1 * s2 * p for (s1, s2), p in joint.items())


def chsh_from(corr):
    return corr[("a", "b")] + corr[("a'", "b")] + corr[("a", "b'")] - corr[("a'", "b'")]


def alpha_tables_by_hand(alphas, unused=0.5):
    """Hand-written tables of the alpha construction.

    Backgrounds: a -> l1=1, a' -> l1=2, b -> l2=1, b' -> l2=2.
    Pair value: (1,1) -> 1, (1,2) -> 2, (2,1) -> 2, (2,2) -> 1.
    """
    left_bg = {"a": {1: 1.0, 2: 0.0}, "a'": {1: 0.0, 2: 1.0}}
    right_bg = {"b": {1: 1.0, 2: 0.0}, "b'": {1: 0.0, 2: 1.0}}
    pick = {(1, 1): 1, (1, 2): 2, (2, 1): 2, (2, 2): 1}
    xi = {key: {k: 1.0 if k == v else 0.0 for k in (1, 2)} for key, v in pick.items()}
    left = {(k, l1, x): unused for k in (1, 2) for l1 in (1, 2) for x in ("a", "a'")}
    right = {(k, l2, y): unused for k in (1, 2) for l2 in (1, 2) for y in ("b", "b'")}
    pairs = [("a", "b"), ("a", "b'"), ("a'", "b"), ("a'", "b'")]
    for i, (x, y) in enumerate(pairs):
        l1 = 1 if x == "a" else 2
        l2 = 1 if y == "b" else 2
        k = pick[(l1, l2)]
        left[(k, l1, x)] = alphas[2 * i]
        right[(k, l2, y)] = alphas[2 * i + 1]
    left = {key: {1: p, -1: 1.0 - p} for key, p in left.items()}
    right = {key: {1: p, -1: 1.0 - p} for key, p in right.items()}
    return left_bg, right_bg, xi, left, right


def chsh_of_tables(tables):
    corr = {
        (x, y): correlator(joint_sum_m3(*tables, x, y))
        for x in ("a", "a'")
        for y in ("b", "b'")
    }
    return chsh_from(corr)


def mixed(tables, kappa):
    left_bg, right_bg, xi, left, right = tables

    def mix(bg):
        return {s: {v: kappa * p + (1 - kappa) * 0.5 for v, p in row.items()} for s, row in bg.items()}

    return mix(left_bg), mix(right_bg), xi, left, right


def brute_force_chsh(correlation, resolution):
    """Max over every planar quadruple of the grid, pure loops."""
    angles = [2 * math.pi * k / resolution for k in range(resolution)]
    m = [[correlation(a, b) for b in angles] for a in angles]
    best = -math.inf
    for i, j, k, l in itertools.product(range(resolution), repeat=4):
        best = max(best, m[i][k] + m[j][k] + m[i][l] - m[j][l])
    return best


def disagreement_arcs(phi):
    """Azimuth arcs where sgn(cos psi) != sgn(cos(psi - phi)) for equatorial settings 0 and phi in (0, pi)."""
    return [(-math.pi / 2, phi - math.pi / 2), (math.pi / 2, phi + math.pi / 2)]


def azimuth_bin_probabilities(phi, n_bins):
    """Exact probability of each azimuth bin on [-pi, pi) under the biased density for settings 0 and phi.

    With both settings in the equatorial plane the density depends on the
    azimuth alone, so the azimuth has density 2 rho(psi) and z stays uniform.
    """
    c = math.cos(phi)
    agree = (1 + c) / (8 * (math.pi - phi))
    disagree = (1 - c) / (8 * phi)
    edges = [-math.pi + 2 * math.pi * i / n_bins for i in range(n_bins + 1)]
    probs = []
    for lo, hi in zip(edges, edges[1:]):
        inside = 0.0
        for a0, a1 in disagreement_arcs(phi):
            for shift in (-2 * math.pi, 0.0, 2 * math.pi):
                inside += max(0.0, min(hi, a1 + shift) - max(lo, a0 + shift))
        probs.append(2 * (disagree * inside + agree * (hi - lo - inside)))
    return probs
