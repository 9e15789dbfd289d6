"""Shedding search: iterative cutting with a force-fitting fallback.

The ice domain is cut into ``n_subdivisions`` pieces by planes normal to the
span. Planes are visited from the tip towards the root, accumulating the
centrifugal and adhesion contributions of the ice tipward of each plane. The
tipmost plane where the centrifugal force beats the resistance brackets the
shedding location together with its tipward neighbour; that piece becomes the
new domain and is cut again, with everything tipward of it carried along as
fixed contributions.

When no plane in a pass satisfies the criterion, the sampled forces are
interpolated with monotone cubics and the tipmost crossing is used to pick
a smaller domain (the piece holding the crossing plus its neighbours). If the
fitted centrifugal force never beats the fitted resistance, its crossing with
cohesion alone is used to steer the domain instead; such a target does not by
itself mean the ice sheds, so a search that ends on one reports no shedding.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .clipping import PlaneTotals, plane_totals, snap_tolerance
from .forces import ForceCurve, ForceSample, samples_from_totals
from .mesh_core import IceMesh
from .strength import StrengthModel

LOG = logging.getLogger(__name__)


class Criterion(str, enum.Enum):
    SUM = "sum"          # F_C > F_coh + F_adh
    EITHER = "either"    # F_C > F_coh and F_C > F_adh


def check_shedding(F_C: float, F_coh: float, F_adh: float,
                   criterion: Criterion | str = Criterion.SUM) -> bool:
    """Strict comparison; equality means the ice holds."""
    if Criterion(criterion) is Criterion.SUM:
        return F_C > F_coh + F_adh
    return F_C > F_coh and F_C > F_adh


@dataclass(frozen=True)
class SheddingConfig:
    """Search settings.

    ``z_tolerance`` of ``None`` means ``1e-3`` times the tip radius of the
    mesh. ``force_fitting=False`` gives plain iterative cutting.
    """

    n_subdivisions: int = 10
    z_tolerance: float | None = None
    max_refinements: int = 12
    criterion: Criterion = Criterion.SUM
    force_fitting: bool = True

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if self.n_subdivisions < 10:
            raise ValueError("n_subdivisions must be at least 10")
        if self.z_tolerance is not None and not self.z_tolerance > 0:
            raise ValueError("z_tolerance must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be at least 1")

    def tolerance_for(self, mesh: IceMesh) -> float:
        if self.z_tolerance is not None:
            return self.z_tolerance
        return 1e-3 * abs(mesh.span_bounds()[1])


@dataclass
class PassRecord:
    """One cutting pass over the domain ``[lo, hi]``."""

    lo: float
    hi: float
    samples: list
    shed_flags: list
    action: str                 # "refine", "fit", "stop"
    candidate: float | None = None
    candidate_kind: str | None = None


@dataclass
class SheddingResult:
    shed: bool = False
    z_s: float | None = None
    shed_mass: float | None = None
    iterations: list = field(default_factory=list)
    fallback_used: bool = False
    basis: str | None = None    # "plane", "fit" or "cohesion_fit"
    bracket: tuple | None = None


# -- monotone cubic interpolation ------------------------------------------

def _edge_slope(h0, h1, m0, m1):
    d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if np.sign(m0) != np.sign(m1) and abs(d) > abs(3 * m0):
        return 3 * m0
    return d


class MonotoneCubic:
    """Piecewise cubic Hermite interpolant with Fritsch-Carlson style slopes.

    Interior slopes are weighted harmonic means of the adjacent secants (zero
    at local extrema), so monotone data stays monotone between knots.
    """

    def __init__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if len(x) < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("need at least two strictly increasing abscissae")
        h = np.diff(x)
        m = np.diff(y) / h
        n = len(x)
        d = np.zeros(n)
        if n == 2:
            d[:] = m[0]
        else:
            for k in range(1, n - 1):
                if m[k - 1] * m[k] <= 0:
                    d[k] = 0.0
                else:
                    w1 = 2 * h[k] + h[k - 1]
                    w2 = h[k] + 2 * h[k - 1]
                    d[k] = (w1 + w2) / (w1 / m[k - 1] + w2 / m[k])
            d[0] = _edge_slope(h[0], h[1], m[0], m[1])
            d[-1] = _edge_slope(h[-1], h[-2], m[-1], m[-2])
        self.x, self.y, self.d = x, y, d
        # local power basis per interval: c0 + c1 s + c2 s^2 + c3 s^3, s = x - x_i
        c0 = y[:-1]
        c1 = d[:-1]
        c2 = (3 * m - 2 * d[:-1] - d[1:]) / h
        c3 = (d[:-1] + d[1:] - 2 * m) / h ** 2
        self.coef = np.column_stack([c0, c1, c2, c3])

    def __call__(self, xq):
        xq = np.asarray(xq, float)
        i = np.clip(np.searchsorted(self.x, xq, side="right") - 1, 0, len(self.x) - 2)
        s = xq - self.x[i]
        c = self.coef[i]
        out = ((c[..., 3] * s + c[..., 2]) * s + c[..., 1]) * s + c[..., 0]
        return out if out.ndim else float(out)


def _poly_roots_in(coef, lo, hi):
    """Real roots of a cubic (ascending coefficients) strictly inside (lo, hi)."""
    c = np.trim_zeros(np.asarray(coef, float)[::-1], "f")
    if len(c) < 2:
        return []
    r = np.roots(c)
    r = r[np.abs(r.imag) <= 1e-12 * max(1.0, hi - lo)].real
    return [float(v) for v in r if lo < v < hi]


def _tipmost_crossing(x, coefs, scale):
    """Tipmost z where ``min_j p_j(z)`` goes from <= 0 (tip side) to > 0.

    ``coefs`` is a list of (n-1, 4) local cubic coefficient arrays on the
    knots ``x``. Each interval is split at critical points and pairwise
    crossings so that the minimum is monotone on every sub-interval.
    """
    def H(i, s):
        return min(((c[i, 3] * s + c[i, 2]) * s + c[i, 1]) * s + c[i, 0] for c in coefs)

    for i in range(len(x) - 2, -1, -1):
        h = x[i + 1] - x[i]
        brk = {0.0, h}
        for c in coefs:
            brk.update(_poly_roots_in([c[i, 1], 2 * c[i, 2], 3 * c[i, 3]], 0.0, h))
        for a in range(len(coefs)):
            for b in range(a + 1, len(coefs)):
                brk.update(_poly_roots_in(coefs[a][i] - coefs[b][i], 0.0, h))
        pts = sorted(brk, reverse=True)
        vals = [H(i, s) for s in pts]
        for (s_tip, v_tip), (s_root, v_root) in zip(zip(pts, vals), zip(pts[1:], vals[1:])):
            if v_tip <= 0 < v_root:
                lo, hi = s_root, s_tip
                while hi - lo > 1e-12 * scale:
                    mid = 0.5 * (lo + hi)
                    if mid <= lo or mid >= hi:
                        break
                    if H(i, mid) > 0:
                        lo = mid
                    else:
                        hi = mid
                return float(x[i] + 0.5 * (lo + hi))
    return None


def _fit_candidate(curve: ForceCurve, criterion: Criterion):
    """Return ``(z, kind)`` of the force-fitting target or ``None``."""
    if len(curve) < 4:
        raise ValueError("force fitting needs at least 4 samples")
    keep = [s for s in curve.samples if s.F_C > 0 or s.F_coh > 0 or s.F_adh > 0]
    if len(keep) < 2:
        return None
    fit = ForceCurve(keep, curve.omega, curve.temperature)
    z = fit.z
    scale = max(abs(z).max(), z[-1] - z[0])
    fc = MonotoneCubic(z, fit.F_C)
    if criterion is Criterion.SUM:
        primary = [fc.coef - MonotoneCubic(z, fit.F_coh + fit.F_adh).coef]
    else:
        primary = [fc.coef - MonotoneCubic(z, fit.F_coh).coef,
                   fc.coef - MonotoneCubic(z, fit.F_adh).coef]
    root = _tipmost_crossing(z, primary, scale)
    if root is not None:
        return root, "fit"
    root = _tipmost_crossing(z, [fc.coef - MonotoneCubic(z, fit.F_coh).coef], scale)
    if root is not None:
        return root, "cohesion_fit"
    return None


def force_fit(curve: ForceCurve, cfg: SheddingConfig | None = None) -> float | None:
    """Shedding-location candidate from span-wise fits of the force samples.

    The tipmost crossing of the fitted centrifugal force over the fitted
    resistance is returned; failing that, the tipmost crossing of the
    centrifugal force over cohesion alone; failing both, ``None``. Samples
    where all three forces vanish (cuts outside the ice) are ignored.
    """
    cfg = cfg or SheddingConfig()
    found = _fit_candidate(curve, cfg.criterion)
    return None if found is None else found[0]


# -- search ------------------------------------------------------------------

class _Domain:
    """Evaluates force samples on a sub-range of the mesh.

    ``offset`` holds the moment and adhesion totals of the ice tipward of
    ``hi``; contributions inside the domain are clipped to ``[z, hi]``.
    """

    def __init__(self, mesh, lo, hi, offset, known):
        self.mesh, self.lo, self.hi = mesh, lo, hi
        self.offset = offset
        self.known = known
        eps = snap_tolerance(mesh)
        r = mesh.radial()
        if mesh.n_tets:
            rt = r[mesh.tets]
            self.tets = np.flatnonzero((rt.max(axis=1) >= lo - eps) & (rt.min(axis=1) <= hi + eps))
        else:
            self.tets = np.zeros(0, np.int64)
        adh = mesh.adhesion_faces()
        rf = r[mesh.faces[adh]] if len(adh) else np.zeros((0, 3))
        sel = (rf.max(axis=1) >= lo - eps) & (rf.min(axis=1) <= hi + eps) if len(adh) else []
        self.faces = adh[sel] if len(adh) else adh

    def totals(self, z) -> PlaneTotals:
        sub = plane_totals(self.mesh, z, tets=self.tets, faces=self.faces)
        m_off, a_off = self.offset
        mom = m_off + (sub.moment_above - sub.moment_above[-1])
        adh = a_off + (sub.adhesion_above - sub.adhesion_above[-1])
        vol = sub.volume_above - sub.volume_above[-1]
        out = PlaneTotals(np.asarray(z, float), vol, mom, sub.cut_area.copy(), adh)
        for i, zi in enumerate(out.radii):
            if zi in self.known:
                out.moment_above[i], out.cut_area[i], out.adhesion_above[i] = self.known[zi]
        return out


def _search(mesh: IceMesh, omega: float, model: StrengthModel, T: float,
            cfg: SheddingConfig, fitting: bool) -> SheddingResult:
    result = SheddingResult()
    if mesh.n_tets == 0 or not mesh.volume() > 0:
        return result
    if omega < 0:
        raise ValueError("omega must be non-negative")
    sigma_c = model.cohesion_strength(T)
    tau_a = model.adhesion_strength(T)
    N = cfg.n_subdivisions
    tol = cfg.tolerance_for(mesh)
    crit = cfg.criterion

    lo, hi = mesh.span_bounds()
    offset = (0.0, 0.0)
    known: dict = {}
    state = None            # "plane" bracket or "fit" candidate after last pass
    candidate = None
    refinements = 0

    while True:
        z = np.linspace(lo, hi, N + 1)
        z[0], z[-1] = lo, hi
        dom = _Domain(mesh, lo, hi, offset, known)
        tot = dom.totals(z)
        samples = samples_from_totals(tot, omega, mesh.density, sigma_c, tau_a)
        flags = [check_shedding(s.F_C, s.F_coh, s.F_adh, crit) for s in samples]
        record = PassRecord(float(lo), float(hi), samples, flags, "stop")
        result.iterations.append(record)

        hit = next((k for k in range(N, -1, -1) if flags[k]), None)
        if hit is not None:
            k = min(hit, N - 1)
            new_lo, new_hi = z[k], z[k + 1]
            state = "plane"
            result.basis = "plane"
            record.action = "refine"
        elif fitting:
            found = _fit_candidate(ForceCurve(samples, omega, T), crit)
            if found is None:
                LOG.debug("no fitted crossing on [%g, %g]; ice holds", lo, hi)
                state = None
                break
            candidate, kind = found
            j = int(np.clip(np.searchsorted(z, candidate, side="right") - 1, 0, N - 1))
            new_lo, new_hi = z[max(j - 1, 0)], z[min(j + 2, N)]
            state = "fit"
            result.fallback_used = True
            result.basis = kind
            record.action = "fit"
            record.candidate, record.candidate_kind = candidate, kind
        else:
            state = None
            break

        i_hi = int(np.flatnonzero(z == new_hi)[0])
        i_lo = int(np.flatnonzero(z == new_lo)[0])
        offset = (tot.moment_above[i_hi], tot.adhesion_above[i_hi])
        known = {float(z[i]): (tot.moment_above[i], tot.cut_area[i], tot.adhesion_above[i])
                 for i in (i_lo, i_hi)}
        lo, hi = float(new_lo), float(new_hi)
        refinements += 1
        if hi - lo <= tol or refinements >= cfg.max_refinements:
            break

    # a cohesion-only target narrows the search but never confirms shedding
    if state is None or result.basis == "cohesion_fit":
        result.basis = None
        return result
    result.shed = True
    result.bracket = (lo, hi)
    result.z_s = 0.5 * (lo + hi) if state == "plane" else float(candidate)
    vol = plane_totals(mesh, [result.z_s]).volume_above[0]
    result.shed_mass = float(mesh.density * vol)
    return result


def iterative_cut(mesh: IceMesh, omega: float, model: StrengthModel, T: float,
                  cfg: SheddingConfig | None = None) -> SheddingResult:
    """Iterative cutting alone, without the force-fitting fallback."""
    return _search(mesh, omega, model, T, cfg or SheddingConfig(), fitting=False)


def find_shedding(mesh: IceMesh, omega: float, model: StrengthModel, T: float,
                  cfg: SheddingConfig | None = None) -> SheddingResult:
    """Iterative cutting, falling back to force fitting when a pass finds no plane.

    Returns ``shed=False`` when neither the cutting planes nor the fitted
    curves show the criterion being met. ``z_s`` is the midpoint of the final
    plane bracket, or the fitted crossing if the search ended on a fitted
    target.
    """
    cfg = cfg or SheddingConfig()
    return _search(mesh, omega, model, T, cfg, fitting=cfg.force_fitting)


def forces_at(mesh: IceMesh, z, omega: float, sigma_c: float, tau_a: float) -> list:
    """Force samples at arbitrary planes on the whole mesh."""
    return samples_from_totals(plane_totals(mesh, np.atleast_1d(z)), omega,
                               mesh.density, sigma_c, tau_a)
