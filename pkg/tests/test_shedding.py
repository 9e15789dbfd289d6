import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import PchipInterpolator

from iceshed.forces import ForceCurve, ForceSample
from iceshed.mesh_core import empty_mesh
from iceshed.shedding import (Criterion, MonotoneCubic, SheddingConfig, check_shedding,
                              find_shedding, force_fit, forces_at, iterative_cut)
from iceshed.strength import constant_model

from slab_oracle import Slab, oracle_root, random_shedding_slabs, window_slab

R = 1.18


@pytest.mark.parametrize("fc, coh, adh, crit, expected", [
    (3.0, 1.0, 1.0, "sum", True),
    (2.0, 1.0, 1.0, "sum", False),          # equality holds the ice
    (1.5, 1.0, 1.0, "sum", False),
    (1.5, 1.0, 1.0, "either", True),
    (1.0, 1.0, 0.5, "either", False),
    (0.0, 0.0, 0.0, "sum", False),
])
def test_check_shedding(fc, coh, adh, crit, expected):
    assert check_shedding(fc, coh, adh, crit) is expected


def test_config_validation():
    with pytest.raises(ValueError):
        SheddingConfig(n_subdivisions=9)
    with pytest.raises(ValueError):
        SheddingConfig(z_tolerance=0.0)
    assert SheddingConfig(criterion="either").criterion is Criterion.EITHER


# scipy overflows internally on denormal secants; the result is still finite
@pytest.mark.filterwarnings("ignore:overflow encountered:RuntimeWarning")
@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=15),
       st.lists(st.floats(0.01, 1.0), min_size=14, max_size=14))
def test_monotone_cubic_matches_pchip(ys, gaps):
    y = np.array(ys)
    x = np.concatenate([[0.0], np.cumsum(gaps[:len(y) - 1])])
    ours = MonotoneCubic(x, y)
    ref = PchipInterpolator(x, y)
    xq = np.linspace(x[0], x[-1], 97)
    scale = max(1.0, np.abs(y).max())
    assert np.allclose(ours(xq), ref(xq), rtol=1e-9, atol=1e-9 * scale)


def test_monotone_cubic_preserves_monotone_data():
    x = np.linspace(0, 1, 8)
    y = np.array([0, 0.1, 0.1, 0.5, 2.0, 2.1, 5.0, 5.0])
    f = MonotoneCubic(x, y)
    assert np.all(np.diff(f(np.linspace(0, 1, 400))) >= -1e-12)


def _curve(slab, z):
    return ForceCurve([ForceSample(float(v), float(slab.F_C(v)), float(slab.F_coh(v)),
                                   float(slab.F_adh(v))) for v in z])


def test_force_fit_slab():
    s = Slab()
    root = oracle_root(s.balance, s.r0, s.R)
    z = np.linspace(s.r0, s.R, 11)
    assert force_fit(_curve(s, z)) == pytest.approx(root, abs=0.005 * R)


def test_force_fit_absent():
    s = Slab(sigma_c=1e8)
    assert force_fit(_curve(s, np.linspace(s.r0, s.R, 11))) is None


def test_force_fit_needs_four_samples():
    s = Slab()
    with pytest.raises(ValueError):
        force_fit(_curve(s, [0.7, 0.8, 0.9]))


def test_force_fit_narrow_window_between_samples():
    # positive balance only on (0.83R, 0.86R); no sample lands inside it
    s = window_slab(0.83 * R, 0.86 * R)
    z = np.linspace(s.r0, s.R, 11)
    assert not any(s.balance(v) > 0 for v in z)
    assert force_fit(_curve(s, z)) == pytest.approx(0.86 * R, abs=0.005 * R)


def test_force_fit_cohesion_only_target():
    # adhesion so strong that the sum never crosses; F_C beats cohesion near the root
    s = Slab(tau_a=1e9)
    z = np.linspace(s.r0, s.R, 11)
    expected = oracle_root(lambda v: s.F_C(v) - s.F_coh(v), s.r0, s.R)
    assert oracle_root(s.balance, s.r0, s.R) is None
    assert force_fit(_curve(s, z)) == pytest.approx(expected, abs=0.005 * R)


def test_force_fit_ignores_samples_outside_ice():
    s = Slab()
    inside = np.linspace(s.r0, s.R, 11)
    beyond = np.concatenate([inside, [1.3, 1.4, 1.5]])
    curve = _curve(s, inside)
    extra = ForceCurve(curve.samples + [ForceSample(v, 0.0, 0.0, 0.0) for v in beyond[11:]])
    assert force_fit(extra) == force_fit(curve)


def _solve(slab, fitting=True, cells=40, **kw):
    cfg = SheddingConfig(force_fitting=fitting, **kw)
    return find_shedding(slab.mesh(cells=cells), slab.omega,
                         constant_model(slab.sigma_c, slab.tau_a), -8.0, cfg)


def test_worked_case():
    s = Slab()
    res = _solve(s)
    assert res.shed and res.basis == "plane" and not res.fallback_used
    assert res.z_s == pytest.approx(1.080814, abs=1e-3 * R)
    assert res.shed_mass == pytest.approx(s.rho * s.A * (s.R - res.z_s), rel=1e-9)


def test_zero_omega_never_sheds():
    s = Slab(omega=0.0)
    assert not _solve(s).shed


def test_empty_mesh():
    res = find_shedding(empty_mesh(), 60.0, constant_model(1e5, 1e5), -8.0)
    assert not res.shed and res.z_s is None


def test_first_pass_hits_plane_inside_window():
    # ice over [0.5R, R]: the 0.75R plane of the first pass falls in (0.72R, 0.77R)
    s = window_slab(0.72 * R, 0.77 * R, r0_frac=0.5)
    res = iterative_cut(s.mesh(), s.omega, constant_model(s.sigma_c, s.tau_a), -8.0)
    first = res.iterations[0]
    assert first.action == "refine"
    flagged = [p.z for p, f in zip(first.samples, first.shed_flags) if f]
    assert flagged == [pytest.approx(0.75 * R)]
    assert res.shed and not res.fallback_used
    assert res.z_s == pytest.approx(0.77 * R, abs=1e-3 * R)


def test_fallback_is_necessary():
    s = window_slab(0.83 * R, 0.86 * R)
    mesh = s.mesh()
    model = constant_model(s.sigma_c, s.tau_a)
    plain = iterative_cut(mesh, s.omega, model, -8.0)
    assert not plain.shed
    res = find_shedding(mesh, s.omega, model, -8.0)
    assert res.shed and res.fallback_used
    assert res.iterations[0].action == "fit"
    assert res.z_s == pytest.approx(0.86 * R, abs=max(1e-3 * R, 0.005 * R))


def test_cohesion_target_alone_does_not_shed():
    # F_C crosses cohesion mid-span but adhesion always holds the ice
    s = Slab(sigma_c=1.2e6, tau_a=1e9)
    assert oracle_root(s.balance, s.r0, s.R) is None
    res = _solve(s)
    assert not res.shed and res.z_s is None
    assert res.fallback_used
    assert {p.candidate_kind for p in res.iterations if p.action == "fit"} == {"cohesion_fit"}


def test_either_criterion():
    # the sum criterion never holds here, the either criterion does near 0.85 m
    s = Slab(sigma_c=1.2e6, tau_a=1e5)
    assert oracle_root(s.balance, s.r0, s.R) is None
    expected = oracle_root(lambda z: np.minimum(s.F_C(z) - s.F_coh(z), s.F_C(z) - s.F_adh(z)),
                           s.r0, s.R)
    assert not _solve(s, fitting=False).shed
    res = _solve(s, fitting=False, criterion="either")
    assert res.shed and res.basis == "plane"
    assert res.z_s == pytest.approx(expected, abs=1e-3 * R)


def test_deterministic():
    s = Slab()
    a, b = _solve(s), _solve(s)
    assert a.z_s == b.z_s and a.bracket == b.bracket
    assert [p.samples for p in a.iterations] == [p.samples for p in b.iterations]


def test_max_refinements_caps_passes():
    res = _solve(Slab(), max_refinements=2)
    assert len(res.iterations) == 2


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_bracket_and_refinement_invariants(seed):
    for s, root in random_shedding_slabs(seed, 3):
        res = _solve(s, cells=30)
        assert res.shed
        lo, hi = res.bracket
        if res.basis == "plane":
            a, b = forces_at(s.mesh(cells=30), [lo, hi], s.omega, s.sigma_c, s.tau_a)
            assert check_shedding(a.F_C, a.F_coh, a.F_adh)
            assert not check_shedding(b.F_C, b.F_coh, b.F_adh)
        widths = [p.hi - p.lo for p in res.iterations]
        for prev, nxt, rec in zip(widths, widths[1:], res.iterations):
            if rec.action == "refine":
                assert nxt == pytest.approx(prev / 10, rel=1e-9)
        assert res.z_s == pytest.approx(root, abs=max(1e-3 * s.R, 0.005 * s.R))
