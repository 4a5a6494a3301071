"""Frequency responses of DDAE systems.

Evaluates the transfer function ``T``, the asymptotic transfer function
``T_a`` (the response of the delay-difference part alone, which ``T``
approaches at high frequency) and its torus form, and produces sampled
maximum-singular-value curves for plotting and oracle checks.

All evaluations solve linear systems with partial pivoting; matrices are
never inverted explicitly.  Since ``T(-j w)`` is the complex conjugate of
``T(j w)``, singular value curves are even in ``w`` and sweeps cover
``w >= 0`` only.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EvaluationError
from .system_model import BlockDecomposition, DdaeSystem, decompose

__all__ = [
    "FrequencyGrid",
    "SvCurve",
    "eval_T",
    "eval_Ta",
    "eval_Ta_torus",
    "sweep",
    "system_hash",
    "RCOND_MIN",
]

# Reciprocal-condition threshold separating near-characteristic-root samples
# from ordinary roundoff.
RCOND_MIN = 1e-14

_CHUNK = 131072


@dataclass(frozen=True)
class FrequencyGrid:
    """Sampling grid on the nonnegative frequency axis."""

    kind: str
    omega_min: float
    omega_max: float
    count: int

    def __post_init__(self):
        if self.kind not in ("linear", "logarithmic"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.count < 2:
            raise ValueError("count must be at least 2")
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be smaller than omega_max")
        if self.omega_min < 0.0:
            raise ValueError("sweeps cover omega >= 0 (curves are even in omega)")
        if self.kind == "logarithmic" and self.omega_min <= 0.0:
            raise ValueError("logarithmic grids require omega_min > 0")

    def values(self) -> np.ndarray:
        if self.kind == "linear":
            return np.linspace(self.omega_min, self.omega_max, self.count)
        return np.geomspace(self.omega_min, self.omega_max, self.count)


def _resolve_tau(tau, m: int) -> np.ndarray:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.size != m:
        raise DimensionError(f"expected {m} delays, got {tau.size}")
    return tau


def _char_matrix(sys: DdaeSystem, omega: float, tau: np.ndarray) -> np.ndarray:
    lam = 1j * float(omega)
    M = lam * sys.E - sys.A[0].astype(complex)
    for i in range(sys.m):
        M -= np.exp(-lam * tau[i]) * sys.A[i + 1]
    return M


def _solve_checked(M, B, C, point, what):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0:
        return np.zeros((C.shape[0], B.shape[1]), dtype=complex)
    if s[0] == 0.0 or s[-1] <= RCOND_MIN * s[0]:
        raise EvaluationError(
            f"{what} is singular at {point} (rcond ~ {s[-1] / max(s[0], 1e-300):.1e})",
            point=point,
        )
    return C @ np.linalg.solve(M, B.astype(complex))


def eval_T(sys: DdaeSystem, omega: float, tau=None) -> np.ndarray:
    """Transfer function ``C (j w E - A_0 - sum A_i e^{-j w tau_i})^{-1} B``.

    Parameters
    ----------
    sys : DdaeSystem
    omega : float
        Frequency in rad/time.
    tau : array_like, optional
        Delay vector overriding ``sys.tau`` (used by perturbation studies).

    Raises
    ------
    EvaluationError
        If ``j*omega`` is (numerically) a characteristic root.
    """
    tau = _resolve_tau(sys.tau if tau is None else tau, sys.m)
    M = _char_matrix(sys, omega, tau)
    return _solve_checked(M, sys.B, sys.C, float(omega), "characteristic matrix")


def _A22_at(dec: BlockDecomposition, phases: np.ndarray) -> np.ndarray:
    M = dec.A22[0].astype(complex).copy()
    for i in range(dec.m):
        M += phases[i] * dec.A22[i + 1]
    return M


def eval_Ta(dec: BlockDecomposition, omega: float, tau) -> np.ndarray:
    """Asymptotic transfer function ``-C2 A22(j w)^{-1} B2``.

    ``A22(j w) = A22[0] + sum_{i>=1} A22[i] e^{-j w tau_i}``.  Equivalent to
    :func:`eval_Ta_torus` at ``theta = (w tau_1 mod 2 pi, ...)``.
    """
    tau = _resolve_tau(tau, dec.m)
    phases = np.exp(-1j * float(omega) * tau)
    M = _A22_at(dec, phases)
    return -_solve_checked(M, dec.B2, dec.C2, float(omega), "A22(j*omega)")


def eval_Ta_torus(dec: BlockDecomposition, theta) -> np.ndarray:
    """Torus form ``C2 (-A22[0] - sum A22[i] e^{-j theta_i})^{-1} B2``.

    A singular torus matrix signals that the delay-difference part is not
    strongly stable (gamma_a >= 1 territory).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size != dec.m:
        raise DimensionError(f"expected theta of length {dec.m}, got {theta.size}")
    M = -_A22_at(dec, np.exp(-1j * theta))
    return _solve_checked(M, dec.B2, dec.C2, tuple(theta.tolist()), "torus matrix")


def _sigma_of_stacks(Ms: np.ndarray, B: np.ndarray, C: np.ndarray, sign: float):
    """Per-sample singular values of ``sign * C M^{-1} B`` with an ok mask."""
    N = Ms.shape[0]
    k = min(C.shape[0], B.shape[1])
    sigmas = np.full((N, max(k, 1)), np.nan)
    if k == 0 or Ms.shape[1] == 0:
        sigmas[:] = 0.0
        return sigmas[:, : max(k, 1)], np.ones(N, dtype=bool)
    s = np.linalg.svd(Ms, compute_uv=False)
    ok = (s[:, 0] > 0.0) & (s[:, -1] > RCOND_MIN * s[:, 0])
    if ok.any():
        X = np.linalg.solve(Ms[ok], np.broadcast_to(B.astype(complex), (int(ok.sum()),) + B.shape))
        Tvals = sign * (C @ X)
        sigmas[ok] = np.linalg.svd(Tvals, compute_uv=False)
    return sigmas, ok


def sigma_T_samples(sys: DdaeSystem, omegas, tau=None):
    """Singular values of ``T(j w)`` on a frequency grid.

    Returns ``(sigmas, ok)`` where ``sigmas`` has one descending row of
    singular values per frequency and ``ok`` flags samples where the
    characteristic matrix was safely invertible; failed rows are NaN.
    """
    tau = _resolve_tau(sys.tau if tau is None else tau, sys.m)
    omegas = np.asarray(omegas, dtype=float)
    k = max(min(sys.p_out, sys.p_in), 1)
    sigmas = np.empty((omegas.size, k))
    ok = np.empty(omegas.size, dtype=bool)
    E = sys.E.astype(complex)
    A0 = sys.A[0].astype(complex)
    for lo in range(0, omegas.size, _CHUNK):
        w = omegas[lo : lo + _CHUNK]
        M = 1j * w[:, None, None] * E - A0
        if sys.m:
            phases = np.exp(-1j * np.outer(w, tau))
            for i in range(sys.m):
                M -= phases[:, i, None, None] * sys.A[i + 1]
        sig, good = _sigma_of_stacks(M, sys.B, sys.C, 1.0)
        sigmas[lo : lo + _CHUNK] = sig
        ok[lo : lo + _CHUNK] = good
    return sigmas, ok


def sigma_Ta_samples(dec: BlockDecomposition, omegas, tau):
    """Singular values of ``T_a(j w)`` on a frequency grid (NaN where singular)."""
    tau = _resolve_tau(tau, dec.m)
    omegas = np.asarray(omegas, dtype=float)
    k = max(min(dec.C2.shape[0], dec.B2.shape[1]), 1)
    sigmas = np.empty((omegas.size, k))
    ok = np.empty(omegas.size, dtype=bool)
    if dec.nu == 0:
        sigmas[:] = 0.0
        return sigmas, np.ones(omegas.size, dtype=bool)
    A22c = [Ai.astype(complex) for Ai in dec.A22]
    for lo in range(0, omegas.size, _CHUNK):
        w = omegas[lo : lo + _CHUNK]
        M = np.broadcast_to(A22c[0], (w.size,) + A22c[0].shape).copy()
        if dec.m:
            phases = np.exp(-1j * np.outer(w, tau))
            for i in range(dec.m):
                M += phases[:, i, None, None] * A22c[i + 1]
        sig, good = _sigma_of_stacks(M, dec.B2, dec.C2, -1.0)
        sigmas[lo : lo + _CHUNK] = sig
        ok[lo : lo + _CHUNK] = good
    return sigmas, ok


def sigma_Ta_torus_samples(dec: BlockDecomposition, thetas):
    """Singular values of the torus function on points ``thetas`` (N, m)."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas.reshape(-1, max(dec.m, 1))
    k = max(min(dec.C2.shape[0], dec.B2.shape[1]), 1)
    sigmas = np.empty((thetas.shape[0], k))
    ok = np.empty(thetas.shape[0], dtype=bool)
    if dec.nu == 0:
        sigmas[:] = 0.0
        return sigmas, np.ones(thetas.shape[0], dtype=bool)
    A22c = [Ai.astype(complex) for Ai in dec.A22]
    for lo in range(0, thetas.shape[0], _CHUNK):
        th = thetas[lo : lo + _CHUNK]
        M = np.broadcast_to(-A22c[0], (th.shape[0],) + A22c[0].shape).copy()
        phases = np.exp(-1j * th)
        for i in range(dec.m):
            M -= phases[:, i, None, None] * A22c[i + 1]
        sig, good = _sigma_of_stacks(M, dec.B2, dec.C2, 1.0)
        sigmas[lo : lo + _CHUNK] = sig
        ok[lo : lo + _CHUNK] = good
    return sigmas, ok


def system_hash(sys: DdaeSystem) -> str:
    """Short content hash of a system, used as curve provenance."""
    payload = {
        "E": sys.E.tolist(),
        "A": [Ai.tolist() for Ai in sys.A],
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
        "tau": sys.tau.tolist(),
    }
    blob = json.dumps(payload, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SvCurve:
    """Sampled singular value curve over a frequency axis or torus grid.

    ``params`` holds the evaluated sample points (strictly increasing for
    frequency curves), ``sigmas`` one descending row of singular values per
    sample.  Samples where the evaluation hit a singular matrix are excluded
    and listed in ``gaps`` instead of carrying fabricated values.
    """

    kind: str
    params: np.ndarray
    sigmas: np.ndarray
    gaps: tuple
    meta: dict

    def max_point(self):
        """Sample point and value of the largest sigma_1 on the curve."""
        i = int(np.argmax(self.sigmas[:, 0]))
        p = self.params[i]
        return (float(p) if np.ndim(p) == 0 else tuple(p.tolist()), float(self.sigmas[i, 0]))

    def _columns(self):
        if self.kind == "frequency":
            param_cols = ["omega"]
            params = self.params.reshape(-1, 1)
        else:
            params = np.atleast_2d(self.params)
            param_cols = [f"theta_{i + 1}" for i in range(params.shape[1])]
        sigma_cols = [f"sigma_{i + 1}" for i in range(self.sigmas.shape[1])]
        return param_cols + sigma_cols, np.hstack([params, self.sigmas])

    def to_csv(self, path_or_buf) -> None:
        """Write ``omega,sigma_1,...`` rows (full-precision decimals)."""
        cols, data = self._columns()
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in data:
                writer.writerow([repr(float(x)) for x in row])
        finally:
            if own:
                fh.close()

    def to_dict(self) -> dict:
        cols, data = self._columns()
        return {
            "kind": self.kind,
            "columns": cols,
            "rows": [[float(x) for x in row] for row in data],
            "gaps": [{"param": p, "reason": r} for p, r in self.gaps],
            "meta": self.meta,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def sweep(
    sys: DdaeSystem,
    grid: FrequencyGrid,
    which: str = "T",
    dec: BlockDecomposition | None = None,
    tau=None,
    rank_tol=None,
) -> SvCurve:
    """Sample all singular values of ``T`` or ``T_a`` over a frequency grid.

    Singular samples become gaps, never fabricated values.  The sample order
    is the deterministic grid order regardless of any internal chunking.
    """
    if which not in ("T", "Ta"):
        raise ValueError("which must be 'T' or 'Ta'")
    omegas = grid.values()
    tau = _resolve_tau(sys.tau if tau is None else tau, sys.m)
    if which == "T":
        sigmas, ok = sigma_T_samples(sys, omegas, tau)
    else:
        if dec is None:
            dec = decompose(sys) if rank_tol is None else decompose(sys, rank_tol)
        sigmas, ok = sigma_Ta_samples(dec, omegas, tau)
    gaps = tuple(
        (float(w), "singular matrix (near characteristic root)")
        for w in omegas[~ok]
    )
    meta = {
        "system": system_hash(sys),
        "which": which,
        "grid": {"kind": grid.kind, "omega_min": grid.omega_min,
                 "omega_max": grid.omega_max, "count": grid.count},
        "tau": tau.tolist(),
    }
    return SvCurve(kind="frequency", params=omegas[ok], sigmas=sigmas[ok], gaps=gaps, meta=meta)
