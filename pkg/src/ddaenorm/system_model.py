"""DDAE data model, nullspace block decomposition and standing-assumption checks.

A system is

    E x'(t) = A_0 x(t) + sum_i A_i x(t - tau_i) + B w(t),   z(t) = C x(t)

with E allowed to be singular.  Splitting the state along the nullspace of E
separates the dynamics into a delay differential part and a delay difference
(algebraic) part; most of the analysis in :mod:`ddaenorm.response` and
:mod:`ddaenorm.norms` operates on that block decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionError, DecompositionError, DimensionError

__all__ = [
    "DdaeSystem",
    "BlockDecomposition",
    "ValidationReport",
    "nullspace_bases",
    "decompose",
    "check_assumption1",
    "check_difference_stability",
    "imaginary_axis_margin",
    "validate_system",
    "DEFAULT_RANK_TOL",
    "DEFAULT_ASSUMPTION_TOL",
]

# Relative rank tolerance: singular values >= tol * sigma_1 count toward rank(E).
DEFAULT_RANK_TOL = 1e-10
# Absolute floor on sigma_min(A22[0]) for Assumption 1.
DEFAULT_ASSUMPTION_TOL = 1e-10


def _as_matrix(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    return M


def _spectral_norm(M):
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def _sigma_min(M):
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])


@dataclass(frozen=True, eq=False)
class DdaeSystem:
    """Immutable delay differential algebraic system.

    Parameters
    ----------
    E : (n, n) array
        Possibly singular descriptor matrix.
    A : sequence of (n, n) arrays
        ``A[0]`` is the undelayed coefficient, ``A[i]`` belongs to delay
        ``tau[i-1]``.
    B : (n, p_in) array
        Input matrix (a 1-D vector is treated as a single column).
    C : (p_out, n) array
        Output matrix (a 1-D vector is treated as a single row).
    tau : sequence of float
        Strictly positive delays, one per delayed coefficient.
    """

    E: np.ndarray
    A: tuple
    B: np.ndarray
    C: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        E = _as_matrix(self.E, "E")
        n = E.shape[0]
        if E.shape != (n, n):
            raise DimensionError(f"E must be square, got {E.shape}")
        A = tuple(_as_matrix(Ai, f"A[{i}]") for i, Ai in enumerate(self.A))
        if not A:
            raise DimensionError("A must contain at least A_0")
        for i, Ai in enumerate(A):
            if Ai.shape != (n, n):
                raise DimensionError(f"A[{i}] has shape {Ai.shape}, expected {(n, n)}")
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(n, 1)
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got shape {B.shape}")
        C = np.asarray(self.C, dtype=float)
        if C.ndim == 1:
            C = C.reshape(1, n)
        if C.ndim != 2 or C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got shape {C.shape}")
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if tau.ndim != 1 or len(tau) != len(A) - 1:
            raise DimensionError(
                f"tau has {tau.size} entries for {len(A) - 1} delayed coefficients"
            )
        if tau.size and tau.min() <= 0.0:
            raise ValueError("delays must be strictly positive")
        for arr in (E, *A, B, C, tau):
            arr.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "tau", tau)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def m(self) -> int:
        return len(self.A) - 1

    @property
    def p_in(self) -> int:
        return self.B.shape[1]

    @property
    def p_out(self) -> int:
        return self.C.shape[0]


def nullspace_bases(E, rank_tol: float = DEFAULT_RANK_TOL):
    """Orthonormal bases of the left/right nullspaces of E and their complements.

    Returns ``(U, V, Uperp, Vperp)`` with ``U^T E = 0`` and ``E V = 0``.  The
    rank is decided from the singular values of E: values ``>= rank_tol *
    sigma_1`` count toward the rank (boundary values included, so the split is
    deterministic).

    Parameters
    ----------
    E : (n, n) array
    rank_tol : float
        Relative singular value threshold, must be positive.
    """
    E = _as_matrix(E, "E")
    if E.shape[0] != E.shape[1]:
        raise DimensionError(f"E must be square, got {E.shape}")
    if rank_tol <= 0.0:
        raise ValueError("rank_tol must be positive")
    P, s, Qt = np.linalg.svd(E)
    if s.size and s[0] > 0.0:
        rank = int(np.count_nonzero(s >= rank_tol * s[0]))
    else:
        rank = 0
    Q = Qt.T
    return P[:, rank:], Q[:, rank:], P[:, :rank], Q[:, :rank]


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Nullspace-aligned block form of a :class:`DdaeSystem`.

    ``A11[i] = Uperp^T A_i Vperp`` couples the differential states,
    ``A22[i] = U^T A_i V`` governs the delay difference part, and ``A12``/
    ``A21`` are the cross couplings.  ``E11 = Uperp^T E Vperp`` is invertible
    by construction.  The decomposition carries no delay values: everything
    here depends on the coefficient matrices only.
    """

    U: np.ndarray
    V: np.ndarray
    Uperp: np.ndarray
    Vperp: np.ndarray
    E11: np.ndarray
    A11: tuple
    A12: tuple
    A21: tuple
    A22: tuple
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    rank_tol: float

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def nu(self) -> int:
        """Dimension of the nullspace of E (size of the algebraic part)."""
        return self.U.shape[1]

    @property
    def nd(self) -> int:
        """Number of differential states."""
        return self.n - self.nu

    @property
    def m(self) -> int:
        return len(self.A22) - 1


def decompose(sys: DdaeSystem, rank_tol: float = DEFAULT_RANK_TOL) -> BlockDecomposition:
    """Compute the nullspace block decomposition of a system.

    Raises
    ------
    DecompositionError
        If ``E11`` is numerically singular, which signals an inconsistent
        rank decision.
    """
    U, V, Uperp, Vperp = nullspace_bases(sys.E, rank_tol)
    E11 = Uperp.T @ sys.E @ Vperp
    norm_E = _spectral_norm(sys.E)
    if E11.size:
        # Boundary singular values count toward the rank, hence ">=" with slack.
        smin = _sigma_min(E11)
        if smin < rank_tol * norm_E * (1.0 - 1e-12):
            raise DecompositionError(
                f"E11 numerically singular (sigma_min={smin:.3e}, "
                f"threshold={rank_tol * norm_E:.3e})"
            )
    A11 = tuple(Uperp.T @ Ai @ Vperp for Ai in sys.A)
    A12 = tuple(Uperp.T @ Ai @ V for Ai in sys.A)
    A21 = tuple(U.T @ Ai @ Vperp for Ai in sys.A)
    A22 = tuple(U.T @ Ai @ V for Ai in sys.A)
    dec = BlockDecomposition(
        U=U, V=V, Uperp=Uperp, Vperp=Vperp, E11=E11,
        A11=A11, A12=A12, A21=A21, A22=A22,
        B1=Uperp.T @ sys.B, B2=U.T @ sys.B,
        C1=sys.C @ Vperp, C2=sys.C @ V,
        rank_tol=rank_tol,
    )
    for arr in (dec.E11, *A11, *A12, *A21, *A22, dec.B1, dec.B2, dec.C1, dec.C2):
        arr.setflags(write=False)
    return dec


def check_assumption1(dec: BlockDecomposition, tol: float = DEFAULT_ASSUMPTION_TOL):
    """Check that the undelayed algebraic block ``A22[0]`` is nonsingular.

    Returns ``(ok, margin)`` with ``margin = sigma_min(A22[0])``.  For a
    nonsingular E (no algebraic part) the assumption is vacuous and the margin
    is ``inf``.
    """
    if dec.nu == 0:
        return True, math.inf
    margin = _sigma_min(dec.A22[0])
    return margin > tol, margin


def _torus_grid(m: int, grid_per_dim: int) -> np.ndarray:
    """Uniform grid on [0, 2*pi)^m, shape (grid_per_dim**m, m), C-order."""
    theta = 2.0 * np.pi * np.arange(grid_per_dim) / grid_per_dim
    mesh = np.meshgrid(*([theta] * m), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, m)


def _default_diff_grid(m: int) -> int:
    if m <= 2:
        return 64
    if m == 3:
        return 24
    return 8


def check_difference_stability(
    dec: BlockDecomposition,
    tau=None,
    grid_per_dim: int | None = None,
) -> float:
    """Spectral-radius margin gamma_a of the delay-difference part.

    gamma_a is the maximum over a uniform grid on ``[0, 2*pi)^m`` of the
    spectral radius of ``A22[0]^{-1} sum_{i>=1} A22[i] e^{-j theta_i}``.  The
    difference part is strongly exponentially stable only if gamma_a < 1; the
    quantity does not depend on the delay values.  ``tau`` is accepted for
    interface symmetry and only cross-checked for length.

    The grid estimate is monotone nondecreasing under refinement by doubling
    (each coarse grid is contained in its doubled version).
    """
    if tau is not None and len(np.atleast_1d(tau)) != dec.m:
        raise DimensionError("tau length does not match the number of delays")
    if dec.nu == 0 or dec.m == 0:
        return 0.0
    ok, margin = check_assumption1(dec)
    if not ok:
        raise AssumptionError(
            f"A22[0] is singular to tolerance (sigma_min={margin:.3e}); "
            "the difference part is ill-posed"
        )
    g = grid_per_dim if grid_per_dim is not None else _default_diff_grid(dec.m)
    if g < 1:
        raise ValueError("grid_per_dim must be >= 1")
    thetas = _torus_grid(dec.m, g)
    phases = np.exp(-1j * thetas)  # (N, m)
    nu = dec.nu
    M = np.zeros((thetas.shape[0], nu, nu), dtype=complex)
    for i in range(dec.m):
        M += phases[:, i, None, None] * dec.A22[i + 1]
    G = np.linalg.solve(dec.A22[0].astype(complex), M)
    eig = np.linalg.eigvals(G)
    return float(np.abs(eig).max())


def imaginary_axis_margin(sys: DdaeSystem, omega_max: float, count: int = 2001, tau=None) -> float:
    """Best-effort stability diagnostic: min over a frequency grid of
    ``sigma_min(j*omega*E - A_0 - sum A_i e^{-j*omega*tau_i})``.

    A small value flags a characteristic root close to the scanned part of the
    imaginary axis; a comfortable margin proves nothing by itself.
    """
    tau = np.asarray(sys.tau if tau is None else tau, dtype=float)
    omegas = np.linspace(0.0, float(omega_max), count)
    M = 1j * omegas[:, None, None] * sys.E - sys.A[0]
    if sys.m:
        phases = np.exp(-1j * np.outer(omegas, tau))
        for i in range(sys.m):
            M -= phases[:, i, None, None] * sys.A[i + 1]
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[:, -1].min())


@dataclass
class ValidationReport:
    """Outcome of the standing-assumption checks for one system."""

    rank_E: int
    nu: int
    assumption1_ok: bool
    assumption1_margin: float
    difference_stability_margin: float
    messages: list = field(default_factory=list)
    axis_margin: float | None = None

    @property
    def ok(self) -> bool:
        gamma = self.difference_stability_margin
        return self.assumption1_ok and math.isfinite(gamma) and gamma < 1.0

    def to_dict(self) -> dict:
        def num(x):
            return x if (x is None or math.isfinite(x)) else None
        return {
            "rank_E": self.rank_E,
            "nu": self.nu,
            "assumption1_ok": self.assumption1_ok,
            "assumption1_margin": num(self.assumption1_margin),
            "difference_stability_margin": num(self.difference_stability_margin),
            "axis_margin": num(self.axis_margin),
            "messages": list(self.messages),
        }


def validate_system(
    sys: DdaeSystem,
    rank_tol: float = DEFAULT_RANK_TOL,
    assumption_tol: float = DEFAULT_ASSUMPTION_TOL,
    grid_per_dim: int | None = None,
    axis_scan_omega_max: float | None = None,
) -> ValidationReport:
    """Run the assumption checks and collect a human-readable report.

    The strong-stability check is a diagnostic, not a certificate: it verifies
    gamma_a < 1 for the delay-difference part and, optionally, scans
    ``sigma_min`` of the characteristic matrix along part of the imaginary
    axis.  Full characteristic-root analysis is out of scope.
    """
    dec = decompose(sys, rank_tol)
    messages = []
    ok1, margin1 = check_assumption1(dec, assumption_tol)
    if dec.nu == 0:
        messages.append("E is nonsingular: no algebraic part, assumption on A22[0] is vacuous")
    elif not ok1:
        messages.append(
            f"U^T A_0 V is singular to tolerance (sigma_min={margin1:.3e}); system is ill-posed"
        )
    gamma_a = math.nan
    if ok1:
        gamma_a = check_difference_stability(dec, grid_per_dim=grid_per_dim)
        if gamma_a >= 1.0:
            messages.append(
                f"delay-difference part not strongly stable (gamma_a={gamma_a:.4f} >= 1); "
                "H-infinity norms may be unbounded"
            )
        elif gamma_a >= 0.95:
            messages.append(f"gamma_a={gamma_a:.4f} is close to 1; results may be fragile")
    axis_margin = None
    if axis_scan_omega_max is not None and ok1:
        axis_margin = imaginary_axis_margin(sys, axis_scan_omega_max)
        if axis_margin < 1e-8:
            messages.append(
                f"characteristic matrix nearly singular on the scanned axis "
                f"(min sigma_min={axis_margin:.3e}); system may be unstable"
            )
    return ValidationReport(
        rank_E=dec.nd,
        nu=dec.nu,
        assumption1_ok=ok1,
        assumption1_margin=margin1,
        difference_stability_margin=gamma_a,
        messages=messages,
        axis_margin=axis_margin,
    )

