"""H-infinity norms of DDAE systems and the delay-insensitive strong variants.

Three quantities are computed:

* ``strong_norm_Ta`` -- the strong norm of the asymptotic transfer function,
  a maximum of ``sigma_1`` over the delay torus.  It does not depend on the
  delay values at all, which is why :class:`BlockDecomposition` (and not a
  system plus delays) is its input.
* ``hinf_norm_T`` -- the plain H-infinity norm of the transfer function for
  fixed delays, by dense scanning plus a level-set iteration with golden
  section polishing.
* ``strong_hinf_norm_T`` -- their maximum, which is the smallest upper bound
  of the H-infinity norm that is insensitive to arbitrarily small delay
  perturbations, and is continuous in the delays (the plain norm is not).

The plain norm reports the smallest frequency whose peak value lies within
the relative level tolerance of the best value found; peaks that agree at
that tolerance are treated as ties and the lowest frequency wins.  This keeps
results deterministic even when near-equal peaks recur at high frequency,
which is exactly what happens for weakly perturbed commensurate delays.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AssumptionError,
    ConvergenceError,
    EvaluationError,
    InstabilityError,
    UnboundedNormError,
)
from .response import (
    eval_T,
    eval_Ta_torus,
    sigma_T_samples,
    sigma_Ta_samples,
)
from .system_model import (
    BlockDecomposition,
    DdaeSystem,
    _sigma_min,
    _spectral_norm,
    _torus_grid,
    check_assumption1,
    check_difference_stability,
    decompose,
)

__all__ = [
    "NormResult",
    "LevelSetState",
    "strong_norm_Ta",
    "hinf_norm_T",
    "strong_hinf_norm_T",
    "frequency_bound",
    "BRANCH_PLAIN",
    "BRANCH_ASYMPTOTIC",
]

BRANCH_PLAIN = "plain-T"
BRANCH_ASYMPTOTIC = "asymptotic-Ta"

# Relative level tolerance of the plain-norm search (also the tie window).
DEFAULT_BISECT_TOL = 1e-4
# The first level sits just below the asymptotic strong norm, so crossings
# near the asymptotic plateau are found whenever the plain norm exceeds it.
DEFAULT_LEVEL_MARGIN = 1e-3
# Scan points per oscillation scale 2*pi/sum(tau) of the frequency response.
DEFAULT_SCAN_DENSITY = 64
DEFAULT_MAX_SCAN_POINTS = 2_000_000
# Commensurate-delay detection: smallest common denominator up to this cap.
COMMENSURATE_S_CAP = 20000
COMMENSURATE_REL_TOL = 1e-9

_MAX_LEVEL_ITER = 40
_MAX_DENSIFY = 3


@dataclass(frozen=True)
class NormResult:
    """A computed norm with its attainment certificate.

    ``attained_at`` is a frequency (plain branch) or a torus point tuple
    (asymptotic branch) and re-evaluates to ``value`` within ``rel_tol``.
    ``diagnostics`` carries iteration counts, grid sizes and certification
    details; numbers there are informational, ``value`` is the result.
    """

    value: float
    attained_at: object
    branch: str
    abs_tol: float
    rel_tol: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        at = self.attained_at
        if isinstance(at, tuple):
            at = list(at)
        return {
            "value": self.value,
            "attained_at": at,
            "branch": self.branch,
            "abs_tol": self.abs_tol,
            "rel_tol": self.rel_tol,
            "diagnostics": _jsonable(self.diagnostics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None  # keep the JSON strictly parseable
    return obj


@dataclass
class LevelSetState:
    """Mutable bookkeeping of the plain-norm level iteration.

    ``level`` is the current evaluation-backed candidate norm and never
    decreases; ``crossings`` are the frequencies where ``sigma_1`` crossed the
    last tested level, all below ``omega_cap``.
    """

    level: float
    crossings: tuple = ()
    omega_cap: float = math.inf
    iteration: int = 0

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "crossings": list(self.crossings),
            "omega_cap": self.omega_cap,
            "iteration": self.iteration,
        }


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section_max(f, lo, hi, xtol):
    """Derivative-free maximization on [lo, hi]; returns the best point seen.

    The x tolerance is floored at a few ulps of the interval location so the
    shrink loop terminates even when ``xtol`` is below floating resolution.
    """
    xtol = max(xtol, 16.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0))
    best_x, best_f = lo, f(lo)
    f_hi = f(hi)
    if f_hi > best_f:
        best_x, best_f = hi, f_hi
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        for x, fx in ((x1, f1), (x2, f2)):
            if fx > best_f:
                best_x, best_f = x, fx
    return best_x, best_f


def _default_torus_points(m: int) -> int:
    if m <= 2:
        return 400
    if m == 3:
        return 64
    if m == 4:
        return 16
    raise ValueError(
        f"torus grids grow exponentially; pass grid_per_dim explicitly for m={m} > 4"
    )


def _sigma1(M) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def _sigma1_torus(dec, theta):
    try:
        return _sigma1(eval_Ta_torus(dec, theta))
    except EvaluationError:
        return -math.inf


def _torus_sigma_stack(dec, thetas):
    """sigma_1 of the torus function on a stack of points, or raise if singular."""
    nu = dec.nu
    A22c = [Ai.astype(complex) for Ai in dec.A22]
    out = np.empty(thetas.shape[0])
    chunk = 131072
    for lo in range(0, thetas.shape[0], chunk):
        th = thetas[lo : lo + chunk]
        M = np.broadcast_to(-A22c[0], (th.shape[0], nu, nu)).copy()
        phases = np.exp(-1j * th)
        for i in range(dec.m):
            M -= phases[:, i, None, None] * A22c[i + 1]
        s = np.linalg.svd(M, compute_uv=False)
        bad = (s[:, 0] == 0.0) | (s[:, -1] <= 1e-14 * s[:, 0])
        if bad.any():
            j = int(np.argmax(bad)) + lo
            raise UnboundedNormError(
                f"torus matrix singular at theta={tuple(thetas[j].tolist())}; "
                "the delay-difference part is not strongly stable"
            )
        X = np.linalg.solve(M, np.broadcast_to(dec.B2.astype(complex),
                                               (th.shape[0],) + dec.B2.shape))
        out[lo : lo + chunk] = np.linalg.svd(dec.C2 @ X, compute_uv=False)[:, 0]
    return out


def strong_norm_Ta(
    dec: BlockDecomposition,
    grid_per_dim: int | None = None,
    refine_tol: float = 1e-8,
) -> NormResult:
    """Strong H-infinity norm of the asymptotic transfer function.

    Equals the maximum of ``sigma_1`` of the torus function over
    ``[0, 2*pi]^m`` -- the smallest upper bound of ``||T_a||_inf`` that is
    insensitive to arbitrarily small delay perturbations.  Because the torus
    sweep ranges over all phase combinations, the result is independent of
    the delay values; delays are deliberately not an argument.

    A uniform grid (``grid_per_dim`` points per dimension, default 400 for
    m <= 2, 64 for m = 3, 16 for m = 4, refusal beyond without an explicit
    override) seeds a coordinate-wise golden-section ascent that runs until
    the step is below ``refine_tol``.  Grid points tie-break to the
    lexicographically smallest torus point.

    Raises
    ------
    AssumptionError
        If the undelayed algebraic block is singular.
    UnboundedNormError
        If a singular torus matrix is encountered (gamma_a >= 1 regime).
    """
    m = dec.m
    if dec.nu == 0:
        return NormResult(
            value=0.0, attained_at=tuple([0.0] * m), branch=BRANCH_ASYMPTOTIC,
            abs_tol=0.0, rel_tol=1e-12,
            diagnostics={"note": "nonsingular E: asymptotic transfer function is zero"},
        )
    ok, margin = check_assumption1(dec)
    if not ok:
        raise AssumptionError(
            f"A22[0] singular to tolerance (sigma_min={margin:.3e})"
        )
    gamma_a = check_difference_stability(dec) if m else 0.0
    if gamma_a >= 1.0:
        warnings.warn(
            f"gamma_a={gamma_a:.4f} >= 1: strong norm of T_a may be unbounded",
            RuntimeWarning,
            stacklevel=2,
        )
    if m == 0:
        value = _sigma1_torus(dec, np.zeros(0))
        return NormResult(
            value=value, attained_at=(), branch=BRANCH_ASYMPTOTIC,
            abs_tol=1e-12 * max(value, 1.0), rel_tol=1e-12,
            diagnostics={"gamma_a": gamma_a, "note": "no delays: constant T_a"},
        )
    g = grid_per_dim if grid_per_dim is not None else _default_torus_points(m)
    if g < 2:
        raise ValueError("grid_per_dim must be at least 2")
    thetas = _torus_grid(m, g)
    values = _torus_sigma_stack(dec, thetas)
    i_best = int(np.argmax(values))  # first occurrence = lexicographically smallest
    grid_max = float(values[i_best])
    theta = thetas[i_best].copy()
    best = grid_max
    h = 2.0 * np.pi / g
    cycles = 0
    for cycles in range(1, 61):
        moved = 0.0
        for i in range(m):
            def f(t, _i=i):
                point = theta.copy()
                point[_i] = t
                return _sigma1_torus(dec, point)
            x, fx = _golden_section_max(f, theta[i] - h, theta[i] + h, refine_tol)
            if fx > best:
                moved = max(moved, abs(x - theta[i]))
                theta[i] = x
                best = fx
        h = max(h * 0.5, 4.0 * refine_tol)
        if moved < refine_tol:
            break
    theta = np.mod(theta, 2.0 * np.pi)
    return NormResult(
        value=best,
        attained_at=tuple(float(t) for t in theta),
        branch=BRANCH_ASYMPTOTIC,
        abs_tol=max(best - grid_max, 0.0) + 1e-12 * max(best, 1.0),
        rel_tol=1e-12,
        diagnostics={
            "grid_per_dim": g,
            "grid_max": grid_max,
            "refine_cycles": cycles,
            "gamma_a": gamma_a,
        },
    )


def _block_norm_sums(dec: BlockDecomposition):
    a11 = sum(_spectral_norm(M) for M in dec.A11)
    a12 = sum(_spectral_norm(M) for M in dec.A12)
    a21 = sum(_spectral_norm(M) for M in dec.A21)
    a22 = sum(_spectral_norm(M) for M in dec.A22)
    return a11, a12, a21, a22


def _torus_matrix_min_sigma(dec: BlockDecomposition, grid_per_dim: int = 64) -> float:
    """min over the theta grid of sigma_min(-A22[0] - sum A22[i] e^{-j theta_i})."""
    if dec.m == 0:
        return _sigma_min(dec.A22[0])
    g = grid_per_dim if dec.m <= 2 else (24 if dec.m == 3 else 8)
    thetas = _torus_grid(dec.m, g)
    phases = np.exp(-1j * thetas)
    M = np.broadcast_to(-dec.A22[0].astype(complex), (thetas.shape[0], dec.nu, dec.nu)).copy()
    for i in range(dec.m):
        M -= phases[:, i, None, None] * dec.A22[i + 1]
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[:, -1].min())


@dataclass(frozen=True)
class _BoundParams:
    e: float          # sigma_min(E11)
    a11: float
    K: float          # constant of the O(1/omega) envelope
    omega_valid: float  # validity threshold of the Schur expansion


def _bound_params(dec: BlockDecomposition, safety: float = 2.0) -> _BoundParams:
    """Constants of the high-frequency envelope sigma_1(T - T_a) <= K / (w*e - a11).

    Derived from the two-by-two block form of the transfer function: the
    differential-block resolvent decays like ``1/(w*e - a11)`` while the
    algebraic block stays bounded by ``beta = safety / min_theta
    sigma_min(-A22(theta))``; the Schur-complement correction terms are valid
    once ``beta * a21 * a12 / (w*e - a11) <= 1/2``.
    """
    e = _sigma_min(dec.E11)
    a11, a12, a21, _ = _block_norm_sums(dec)
    c1 = _spectral_norm(dec.C1)
    c2 = _spectral_norm(dec.C2)
    b1 = _spectral_norm(dec.B1)
    b2 = _spectral_norm(dec.B2)
    if dec.nu == 0:
        return _BoundParams(e=e, a11=a11, K=c1 * b1, omega_valid=a11 / e if e else math.inf)
    smin = _torus_matrix_min_sigma(dec)
    if smin <= 0.0:
        raise UnboundedNormError("torus matrix singular: no finite frequency bound")
    beta = safety / smin
    coupling = a21 * a12
    omega_valid = (2.0 * beta * coupling + a11) / e if e else math.inf
    r_valid = 1.0 / (2.0 * beta * coupling) if coupling > 0.0 else 0.0
    K = (
        c1 * b1
        + 2.0 * beta * (c1 * a12 * b2 + c2 * a21 * b1)
        + 2.0 * beta * beta * c2 * coupling * b2
        + 2.0 * beta * c1 * coupling * b1 * r_valid
    )
    return _BoundParams(e=e, a11=a11, K=K, omega_valid=omega_valid)


def _bound_value_at(params: _BoundParams, omega: float) -> float:
    if params.e <= 0.0 or omega <= params.omega_valid or omega * params.e <= params.a11:
        return math.inf
    return params.K / (omega * params.e - params.a11)


def frequency_bound(dec: BlockDecomposition, tau, gamma: float, safety: float = 2.0) -> float:
    """Frequency cap Omega with ``sigma_1(T(jw) - T_a(jw)) < gamma`` for w > Omega.

    The bound decays like ``O(1/w)``; the torus resolvent estimate is
    inflated by ``safety`` (default 2).  Larger gamma gives a smaller cap,
    down to the validity threshold of the underlying expansion.

    Raises
    ------
    UnboundedNormError
        If the delay-difference part is not strongly stable (gamma_a >= 1):
        no finite bound exists.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if dec.nu and dec.m:
        gamma_a = check_difference_stability(dec)
        if gamma_a >= 1.0:
            raise UnboundedNormError(
                f"gamma_a={gamma_a:.4f} >= 1: frequency bound does not exist"
            )
    if dec.nd == 0:
        return 0.0  # no differential part: T coincides with T_a
    params = _bound_params(dec, safety)
    if params.e <= 0.0:
        raise UnboundedNormError("E11 is singular; no frequency bound")
    return max(params.omega_valid, (params.K / gamma + params.a11) / params.e)


def _commensurate_denominator(tau: np.ndarray, s_cap: int = COMMENSURATE_S_CAP,
                              rel_tol: float = COMMENSURATE_REL_TOL):
    """Smallest s <= s_cap with every tau_i within tolerance of n_i / s, else None."""
    if tau.size == 0:
        return None
    svals = np.arange(1, s_cap + 1)
    prods = tau[:, None] * svals[None, :]
    err = np.abs(prods - np.round(prods))
    ok = (err <= rel_tol * np.maximum(1.0, prods)).all(axis=0)
    hits = np.nonzero(ok)[0]
    return int(svals[hits[0]]) if hits.size else None


def _sigma1_Ta_scalar(dec, omega, tau):
    sig, ok = sigma_Ta_samples(dec, np.array([omega]), tau)
    if not ok[0]:
        return -math.inf
    return float(sig[0, 0])


def _tail_sup_Ta(dec: BlockDecomposition, tau: np.ndarray, step: float,
                 max_points: int) -> dict:
    """Supremum of sigma_1(T_a(jw)) over all frequencies.

    For commensurate delays ``n_i / s`` the curve is periodic with period
    ``2*pi*s`` and the supremum is the (refined) maximum over one period,
    marked exact.  Otherwise a budgeted sweep yields a lower bound; the
    strong norm of T_a is always an upper bound.
    """
    if dec.nu == 0:
        return {"value": 0.0, "omega": 0.0, "exact": True, "s": None, "period": None}
    if dec.m == 0:
        val = _sigma1_Ta_scalar(dec, 0.0, tau)
        return {"value": val, "omega": 0.0, "exact": True, "s": None, "period": None}
    if dec.m == 1:
        # A single phase makes T_a periodic regardless of rationality.
        s = _commensurate_denominator(tau)
        period = 2.0 * math.pi / float(tau[0])
    elif (s := _commensurate_denominator(tau)) is not None:
        period = 2.0 * math.pi * s
    else:
        period = None
    if period is not None:
        npts = max(int(period / step) + 1, 512)
        exact = npts <= max_points
        if not exact:
            npts = max_points
        omegas = np.linspace(0.0, period, npts, endpoint=False)
    else:
        width = min(1000.0 * 2.0 * math.pi / float(tau.sum()), step * max_points)
        omegas = np.arange(0.0, width, step)
        exact = False
    sig, ok = sigma_Ta_samples(dec, omegas, tau)
    if not ok.all():
        bad = omegas[~ok][0]
        raise UnboundedNormError(
            f"A22(j*omega) singular at omega={bad:.6g}: difference part unstable"
        )
    i = int(np.argmax(sig[:, 0]))
    h = omegas[1] - omegas[0] if omegas.size > 1 else step
    w, v = _golden_section_max(
        lambda x: _sigma1_Ta_scalar(dec, x, tau),
        max(omegas[i] - h, 0.0), omegas[i] + h, 1e-10,
    )
    return {"value": v, "omega": w, "exact": exact, "s": s, "period": period}


def _sigma1_T_scalar(sys, omega, tau):
    try:
        return _sigma1(eval_T(sys, omega, tau))
    except EvaluationError:
        return -math.inf


def _local_max_indices(values: np.ndarray) -> np.ndarray:
    if values.size == 1:
        return np.array([0])
    left = np.empty(values.size, dtype=bool)
    right = np.empty(values.size, dtype=bool)
    left[0] = True
    left[1:] = values[1:] >= values[:-1]
    right[-1] = True
    right[:-1] = values[:-1] >= values[1:]
    return np.nonzero(left & right)[0]


def _bisect_crossing(f, lo, hi, flo, xtol):
    """Locate a sign change of f on [lo, hi]; flo is the sign at lo."""
    for _ in range(60):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if (fmid > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hinf_norm_T(
    sys: DdaeSystem,
    dec: BlockDecomposition | None = None,
    tau=None,
    *,
    bisect_tol: float = DEFAULT_BISECT_TOL,
    level_margin: float = DEFAULT_LEVEL_MARGIN,
    scan_density: int = DEFAULT_SCAN_DENSITY,
    max_scan_points: int = DEFAULT_MAX_SCAN_POINTS,
    max_iter: int = _MAX_LEVEL_ITER,
    rank_tol=None,
    ta_result: NormResult | None = None,
) -> NormResult:
    """Plain H-infinity norm ``sup_{w >= 0} sigma_1(T(jw))`` for fixed delays.

    The search scans ``sigma_1`` on a delay-scale linear grid (``scan_density``
    points per oscillation scale ``2*pi / sum(tau)``), covering at least the
    low-frequency resonance range and -- for commensurate delays -- two full
    periods of the asymptotic part, then polishes candidate peaks by golden
    section and certifies the level by a crossing search: the iteration stops
    once ``sigma_1`` nowhere crosses ``value * (1 + bisect_tol)``.  When the
    certified cap requires it (and the budget allows), the scan is extended to
    the rigorous frequency bound; otherwise the remaining tail uncertainty is
    reported in the diagnostics.

    Peaks whose values agree within ``bisect_tol`` (relative) are ties and the
    smallest frequency wins, so weakly separated recurring peaks yield the
    first, lowest-frequency attainment point.

    Raises
    ------
    AssumptionError
        Undelayed algebraic block singular.
    InstabilityError
        A characteristic root was detected on the scanned axis.
    UnboundedNormError
        gamma_a >= 1: the asymptotic branch dominates with no finite cap.
    ConvergenceError
        The level iteration exhausted its budget without certifying.
    """
    if dec is None:
        dec = decompose(sys) if rank_tol is None else decompose(sys, rank_tol)
    tau = np.atleast_1d(np.asarray(sys.tau if tau is None else tau, dtype=float))
    if tau.size != sys.m:
        raise ValueError(f"expected {sys.m} delays, got {tau.size}")
    if dec.nu:
        ok, margin = check_assumption1(dec)
        if not ok:
            raise AssumptionError(f"A22[0] singular (sigma_min={margin:.3e})")
    gamma_a = check_difference_stability(dec) if (dec.nu and dec.m) else 0.0
    if gamma_a >= 1.0:
        raise UnboundedNormError(
            f"gamma_a={gamma_a:.4f} >= 1: no finite frequency cap exists "
            "(asymptotic branch dominates)"
        )
    ta = ta_result if ta_result is not None else strong_norm_Ta(dec)

    params = _bound_params(dec)
    tau_sum = float(tau.sum())
    lobe = 2.0 * math.pi / tau_sum if tau_sum > 0.0 else None
    if params.e > 0.0:
        a11, a12, a21, a22 = _block_norm_sums(dec)
        scale = (a11 + a12 + a21 + (a22 if dec.nu else 0.0)) / params.e
    else:
        scale = 0.0
    omega_low = 10.0 * (1.0 + scale)
    step = lobe / scan_density if lobe else omega_low / 10000.0

    tail = _tail_sup_Ta(dec, tau, step, max_scan_points // 2)

    omega_scan = omega_low
    if tail["period"] is not None:
        # Two periods of T_a expose the recurring peak structure; the point
        # budget clamp below keeps huge periods affordable.
        omega_scan = max(omega_scan, 2.05 * tail["period"])
    elif lobe:
        omega_scan = max(omega_scan, 1000.0 * lobe)
    if lobe:
        omega_scan = max(omega_scan, 20.0 * lobe)
    truncated = False
    if omega_scan / step > max_scan_points:
        omega_scan = step * max_scan_points
        truncated = True

    omegas = np.arange(0.0, omega_scan, step)
    sig, ok = sigma_T_samples(sys, omegas, tau)
    if not ok.all():
        w_bad = float(omegas[~ok][0])
        raise InstabilityError(
            f"characteristic root detected on the imaginary axis near omega={w_bad:.6g}"
        )
    sigma1 = sig[:, 0]
    xi_grid = float(sigma1.max())

    # Rigorous tail cap: beyond Omega_r the response cannot rise above the
    # current level unless the asymptotic branch already dominates.
    tail_ub = tail["value"] * (1.0 + 1e-6) if tail["exact"] else ta.value
    tail_certified = False
    omega_cap = omega_scan
    gamma_cap = xi_grid * (1.0 + bisect_tol) - tail_ub
    if gamma_cap > 0.0:
        omega_rig = frequency_bound(dec, tau, gamma_cap)
        if omega_rig <= omega_scan:
            tail_certified = True
            omega_cap = omega_rig
        elif (omega_rig - omega_scan) / step + omegas.size <= max_scan_points:
            ext = np.arange(omega_scan, omega_rig + step, step)
            sig_ext, ok_ext = sigma_T_samples(sys, ext, tau)
            if not ok_ext.all():
                w_bad = float(ext[~ok_ext][0])
                raise InstabilityError(
                    f"characteristic root detected on the imaginary axis near omega={w_bad:.6g}"
                )
            omegas = np.concatenate([omegas, ext])
            sigma1 = np.concatenate([sigma1, sig_ext[:, 0]])
            xi_grid = float(sigma1.max())
            omega_scan = float(omegas[-1]) + step
            tail_certified = True
            omega_cap = omega_rig

    def refine_peak(w_center, h):
        lo = max(w_center - h, 0.0)
        return _golden_section_max(
            lambda x: _sigma1_T_scalar(sys, x, tau), lo, w_center + h, 1e-10
        )

    capture = max(0.02, 8.0 * bisect_tol)
    idx = _local_max_indices(sigma1)
    idx = idx[sigma1[idx] >= xi_grid * (1.0 - capture)]
    if idx.size > 400:
        order = np.argsort(sigma1[idx])[::-1]
        idx = idx[order[:400]]
    catalog = [(0.0, float(sigma1[0]))]
    for i in idx:
        w, v = refine_peak(float(omegas[i]), step)
        catalog.append((w, v))
    xi = max(v for _, v in catalog)

    state = LevelSetState(level=xi, omega_cap=omega_cap)
    levels = [xi]
    seed = ta.value * (1.0 - level_margin)
    densify_left = _MAX_DENSIFY
    converged = False
    for iteration in range(1, max_iter + 1):
        state.iteration = iteration
        level = xi * (1.0 + bisect_tol)
        above = sigma1 > level
        if not above.any():
            converged = True
            break
        # Bracket the crossings of the current level.
        flips = np.nonzero(above[:-1] != above[1:])[0]
        crossings = []
        for i in flips:
            g = lambda x: _sigma1_T_scalar(sys, x, tau) - level
            crossings.append(
                _bisect_crossing(g, float(omegas[i]), float(omegas[i + 1]),
                                 float(sigma1[i]) - level, step * 1e-3)
            )
        if above[0]:
            crossings.insert(0, 0.0)
        if above[-1]:
            crossings.append(float(omegas[-1]))
        state.crossings = tuple(crossings)
        new_xi = xi
        for lo_w, hi_w in zip(crossings[::2], crossings[1::2]):
            mid = 0.5 * (lo_w + hi_w)
            v_mid = _sigma1_T_scalar(sys, mid, tau)
            w, v = refine_peak(mid, max(0.5 * (hi_w - lo_w), step))
            if v_mid > v:
                w, v = mid, v_mid
            catalog.append((w, v))
            new_xi = max(new_xi, v)
        if new_xi > xi * (1.0 + 1e-12):
            xi = new_xi
            state.level = xi
            levels.append(xi)
            continue
        if densify_left > 0:
            densify_left -= 1
            step *= 0.5
            omegas = np.arange(0.0, omega_scan, step)
            sig, ok2 = sigma_T_samples(sys, omegas, tau)
            if not ok2.all():
                raise InstabilityError("characteristic root detected while densifying")
            sigma1 = sig[:, 0]
            continue
        raise ConvergenceError(
            "level iteration stalled with crossings remaining; "
            f"level={xi:.6g}, crossings={len(crossings)}"
        )
    if not converged:
        raise ConvergenceError(f"no convergence within {max_iter} level iterations")

    certified = xi * (1.0 + bisect_tol)
    window = xi * (1.0 - bisect_tol)
    eligible = [(w, v) for w, v in catalog if v >= window]
    w_sel, v_sel = min(eligible, key=lambda t: t[0])

    tail_gap = 0.0
    if not tail_certified:
        g_at = _bound_value_at(params, omega_scan)
        if tail["exact"]:
            tail_gap = max(tail_ub + g_at - certified, 0.0)
        else:
            tail_gap = max(ta.value - certified, 0.0) + (g_at if math.isfinite(g_at) else 0.0)

    diagnostics = {
        "iterations": state.iteration,
        "scan_points": int(omegas.size),
        "scan_step": step,
        "omega_scan": omega_scan,
        "omega_cap": omega_cap,
        "levels": levels,
        "seed_level": seed,
        "gamma_a": gamma_a,
        "strong_ta": ta.value,
        "ta_tail_sup": tail["value"],
        "ta_tail_exact": tail["exact"],
        "commensurate_s": tail["s"],
        "tail_certified": tail_certified,
        "tail_gap": tail_gap,
        "scan_truncated": truncated,
        "global_peak": xi,
        "level_state": state.to_dict(),
    }
    return NormResult(
        value=v_sel,
        attained_at=float(w_sel),
        branch=BRANCH_PLAIN,
        abs_tol=(certified - v_sel) + tail_gap,
        rel_tol=bisect_tol,
        diagnostics=diagnostics,
    )


def strong_hinf_norm_T(
    sys: DdaeSystem,
    dec: BlockDecomposition | None = None,
    tau=None,
    *,
    grid_per_dim: int | None = None,
    refine_tol: float = 1e-8,
    **hinf_opts,
) -> NormResult:
    """Strong H-infinity norm: ``max(||T||_inf, strong norm of T_a)``.

    The result is exactly the maximum of the two component values.  The
    branch records which argument attained it; values that agree within the
    plain norm's relative tolerance are ties, resolved to the asymptotic
    branch with a tie flag in the diagnostics.  Unlike the plain norm, this
    quantity is continuous in the delay parameters.
    """
    if dec is None:
        rank_tol = hinf_opts.get("rank_tol")
        dec = decompose(sys) if rank_tol is None else decompose(sys, rank_tol)
    ta = strong_norm_Ta(dec, grid_per_dim=grid_per_dim, refine_tol=refine_tol)
    plain = hinf_norm_T(sys, dec, tau, ta_result=ta, **hinf_opts)
    value = max(plain.value, ta.value)
    tie = abs(plain.value - ta.value) <= plain.rel_tol * max(plain.value, ta.value)
    asymptotic = ta.value >= plain.value or tie
    chosen = ta if asymptotic else plain
    return NormResult(
        value=value,
        attained_at=chosen.attained_at,
        branch=BRANCH_ASYMPTOTIC if asymptotic else BRANCH_PLAIN,
        abs_tol=chosen.abs_tol,
        rel_tol=chosen.rel_tol,
        diagnostics={
            "tie": tie,
            "plain": {"value": plain.value, "attained_at": plain.attained_at,
                      "abs_tol": plain.abs_tol},
            "asymptotic": {"value": ta.value, "attained_at": list(ta.attained_at)
                           if isinstance(ta.attained_at, tuple) else ta.attained_at},
            "plain_diagnostics": plain.diagnostics,
        },
    )
