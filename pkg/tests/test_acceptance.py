"""Acceptance criteria, one ``criterion`` marker per check.

The terminal summary prints a PASS/FAIL line for each criterion.
"""

import math

import numpy as np
import pytest

from burgbias.estimators import burg_ar1_def, burg_ar2_def, burg_fit, ls_ar_def
from burgbias.expansion import differentiate, evaluate, leaves
from burgbias.model import ArModel, MomentContext, acvf_recursion, acvf_root_formula, admissible, char_roots
from burgbias.simulator import McConfig, mc_bias, simulate_batch
from burgbias.statdsl import MeanMode, StatAtom, lbias, lcov

from oracles import central_diff
from test_estimators import closed_form_burg, stats_by_hand
from test_expansion import ATOMS, random_tree

SHAPE = (-0.8, -0.4, 0.0, 0.4, 0.8)
GRID = [(round((1 - b) * u, 10), b) for b in SHAPE for u in SHAPE] + [
    (1.0, -0.25),
    (1.3, -0.6),
    (-1.4, -0.7),
    (0.1, -0.9),
    (1.8, -0.85),
    (-0.6, 0.3),
    (0.5, 0.2),
]
RHOS = (-0.9, -0.5, 0.0, 0.3, 0.5, 0.9)


def test_grid_shape():
    assert len(GRID) >= 25
    assert all(admissible(ArModel(p)) for p in GRID)
    kinds = {char_roots(ArModel(p)).kind for p in GRID}
    assert kinds == {"distinct", "complex", "equal"}


def _burg_bias(phi, mode):
    return [r.bias_coefficient for r in burg_ar2_def(mode).expand(MomentContext(ArModel(phi)))]


@pytest.mark.criterion(1, "AR(2) Burg bias, known mean")
@pytest.mark.parametrize("phi", GRID)
def test_ar2_known_mean_closed_form(phi):
    p1, p2 = phi
    np.testing.assert_allclose(_burg_bias(phi, "known"), [-p1, -(1 + 3 * p2)], rtol=0, atol=1e-6)


@pytest.mark.criterion(2, "AR(2) Burg bias, unknown mean")
@pytest.mark.parametrize("phi", GRID)
def test_ar2_unknown_mean_closed_form(phi):
    p1, p2 = phi
    np.testing.assert_allclose(_burg_bias(phi, "unknown"), [-(1 + p1 + p2), -(2 + 4 * p2)], rtol=0, atol=1e-6)


@pytest.mark.criterion(3, "AR(1) Burg bias")
@pytest.mark.parametrize("rho", RHOS)
def test_ar1_closed_form(rho):
    ctx = MomentContext(ArModel((rho,)))
    known = burg_ar1_def("known").expand(ctx)[0].bias_coefficient
    unknown = burg_ar1_def("unknown").expand(ctx)[0].bias_coefficient
    assert abs(known - (-2 * rho)) <= 1e-6
    assert abs(unknown - (-(1 + 3 * rho))) <= 1e-6


@pytest.mark.criterion(4, "Burg and least-squares bias agree")
@pytest.mark.parametrize("mode", ["known", "unknown"])
@pytest.mark.parametrize("order", [1, 2])
def test_burg_equals_ls(order, mode):
    points = GRID if order == 2 else [(r,) for r in RHOS]
    dev = 0.0
    for phi in points:
        ctx = MomentContext(ArModel(phi))
        burg = (burg_ar1_def(mode) if order == 1 else burg_ar2_def(mode)).expand(ctx)
        ls = ls_ar_def(order, mode).expand(ctx)
        dev = max(dev, max(abs(a.bias_coefficient - b.bias_coefficient) for a, b in zip(burg, ls)))
    assert dev <= 1e-6


@pytest.mark.criterion(5, "C..H closed form equals the Burg recursion")
def test_closed_form_equals_burg_recursion():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(100):
        z = rng.standard_normal(100)
        C, D, E, _, F, G, H = stats_by_hand(z)
        worst = max(worst, np.max(np.abs(closed_form_burg(C, D, E, F, G, H) - burg_fit(z, 2))))
    assert worst <= 1e-10


@pytest.mark.slow
@pytest.mark.criterion(6, "Monte Carlo concordance, n=50")
@pytest.mark.parametrize("mode", ["known", "unknown"])
@pytest.mark.parametrize("phi", [(0.5, 0.2), (-0.6, 0.3)])
def test_monte_carlo_concordance(phi, mode):
    report = mc_bias(McConfig(ArModel(phi), 50, 200_000, "burg", mode, seed=2024))
    assert report.status == "ok"
    z = {c.name: round(c.z, 2) for c in report.coefficients}
    assert all(abs(v) <= 3.0 for v in z.values()), z


LCOV_PAIRS = [
    ((0, 0, 3), (0, 0, 3)),
    ((0, 1, 3), (0, 1, 3)),
    ((0, 2, 3), (0, 2, 3)),
    ((2, 0, 3), (0, 1, 2)),
    ((1, 0, 2), (0, 2, 3)),
    ((0, 0, 1), (2, 0, 3)),
    ((0, 1, 2), (1, 0, 2)),
    ((2, 1, 3), (0, 0, 2)),
    ((0, 2, 3), (2, 0, 3)),
    ((1, 1, 3), (0, 1, 3)),
]
BIAS_ATOMS = [(0, 0, 1), (0, 1, 2), (0, 2, 3), (1, 1, 3), (2, 0, 3)]
LIMIT_MODEL = ArModel((0.5, 0.2))
LIMIT_N, LIMIT_R, LIMIT_CHUNK = 2000, 100_000, 2000


@pytest.fixture(scope="module")
def limit_statistics():
    """Per-replication atom values at n = 2000 in both mean modes."""
    atoms = sorted({StatAtom(*a) for pair in LCOV_PAIRS for a in pair})
    unknown = [StatAtom(*a) for a in BIAS_ATOMS]
    known_vals = {a: [] for a in atoms}
    unknown_vals = {a: [] for a in unknown}
    for first in range(0, LIMIT_R, LIMIT_CHUNK):
        z = simulate_batch(LIMIT_MODEL, LIMIT_N, LIMIT_CHUNK, seed=777, first=first)
        for a in atoms:
            known_vals[a].append(a.statistic(z))
        for a in unknown:
            unknown_vals[a].append(a.statistic(z, MeanMode.UNKNOWN))
    return (
        {a: np.concatenate(v) for a, v in known_vals.items()},
        {a: np.concatenate(v) for a, v in unknown_vals.items()},
    )


def test_lcov_pairs_span_lags():
    p = {StatAtom(*a).lag for a, _ in LCOV_PAIRS}
    q = {StatAtom(*b).lag for _, b in LCOV_PAIRS}
    assert p == q == set(range(-2, 3))


@pytest.mark.slow
@pytest.mark.criterion(7, "limiting covariance and bias against simulation")
@pytest.mark.parametrize("pair", LCOV_PAIRS, ids=lambda p: f"S{list(p[0])}-S{list(p[1])}")
def test_lcov_against_simulation(limit_statistics, pair):
    known, _ = limit_statistics
    a, b = StatAtom(*pair[0]), StatAtom(*pair[1])
    x, y = known[a] - known[a].mean(), known[b] - known[b].mean()
    prod = x * y
    est = LIMIT_N * prod.sum() / (prod.size - 1)
    se = LIMIT_N * prod.std(ddof=1) / math.sqrt(prod.size)
    assert abs(est - lcov(a, b, MomentContext(LIMIT_MODEL))) <= 3 * se


@pytest.mark.slow
@pytest.mark.criterion(7, "limiting covariance and bias against simulation")
@pytest.mark.parametrize("atom", BIAS_ATOMS, ids=lambda a: f"S{list(a)}")
def test_lbias_against_simulation(limit_statistics, atom):
    _, unknown = limit_statistics
    a = StatAtom(*atom)
    ctx = MomentContext(LIMIT_MODEL)
    vals = unknown[a]
    est = LIMIT_N * (vals.mean() - ctx.gamma(a.lag))
    se = LIMIT_N * vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(est - lbias(a, ctx, MeanMode.UNKNOWN)) <= 3 * se


@pytest.mark.criterion(8, "numerical hygiene")
def test_derivatives_match_finite_differences():
    models = [(0.5,), (0.5, 0.2), (0.4, -0.5), (-0.6, 0.3), (1.0, -0.25)]
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        ctx = MomentContext(ArModel(models[seed % len(models)]))
        point = {a: ctx.gamma(a.lag) for a in ATOMS}
        node = random_tree(rng, point, 5)
        while not leaves(node):
            node = random_tree(rng, point, 5)
        atoms = leaves(node)
        g, H = differentiate(node, ctx)
        g_fd, H_fd = central_diff(lambda y: evaluate(node, dict(zip(atoms, y))), [point[a] for a in atoms])
        scale = max(1.0, np.abs(H_fd).max(), np.abs(g_fd).max())
        np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-6 * scale)
        np.testing.assert_allclose(H, H_fd, rtol=1e-6, atol=1e-6 * scale)


@pytest.mark.criterion(8, "numerical hygiene")
@pytest.mark.parametrize("phi", [(0.5, 0.2), (0.3, 0.4), (-0.6, 0.3), (1.2, -0.3), (-1.1, -0.2), (0.1, 0.8)])
def test_acvf_matches_root_formula(phi):
    model = ArModel(phi)
    r = char_roots(model)
    assert r.kind == "distinct"
    formula = [acvf_root_formula(r.zeta1, r.zeta2, h).real for h in range(30)]
    np.testing.assert_allclose(acvf_recursion(model, 29), formula, rtol=1e-10)


@pytest.mark.criterion(8, "numerical hygiene")
@pytest.mark.parametrize("phi, sigma2", [((0.5, 0.2), 1.0), ((-0.6, 0.3), 2.5), ((1.3, -0.6), 0.4), ((0.9,), 1.0)])
def test_acvf_sum_matches_spectral_value(phi, sigma2):
    model = ArModel(phi, sigma2)
    expected = sigma2 / (1 - model.phi1 - model.phi2) ** 2
    assert MomentContext(model).gamma_sum() == pytest.approx(expected, rel=1e-8)
