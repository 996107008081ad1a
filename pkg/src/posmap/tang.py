"""The Tang two-parameter family of nondecomposable maps and its normalization.

For parameters ``0 < mu < 1`` and ``0 < eps <= mu^2 / 6`` the raw map
``phi0`` sends a 2x2 matrix ``[[a, b], [c, d]]`` to the 4x4 matrix

    [[(1-eps) a + mu^2 d,  -b,      mu c,      -mu d],
     [-c,                  a + 2d,  -2b,        0   ],
     [mu b,                -2c,     2a + 2d,   -2b  ],
     [-mu d,                0,      -2c,        a + d]].

The normalization pipeline rescales to the unital map
``phi1 = R phi0(.) R`` with ``R = phi0(I)^{-1/2}`` and then rotates by an
orthogonal involution ``W`` so that the final map ``A -> W* phi1(A) W`` lands
in the face normalized by ``phi(P_{e2}) f1 = 0``.  ``R`` is determined by
constants ``alpha, beta > 0`` and ``gamma < 0`` solving

    alpha^2 + gamma^2 = rho^2,   beta^2 + gamma^2 = 2,
    (alpha + beta) gamma = -mu,

with ``rho = sqrt(1 - eps + mu^2)`` and ``delta = sqrt(2 - 2 eps + mu^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .choi import ChoiMatrix, choi_from_map, conjugate_choi, extract_blocks
from .cpdecomp import ccp_check, cp_check, witness_search
from .exceptions import BadParamsError, NoConvergenceError, PosmapError
from .matkernel import as_matrix, frobenius, psd_inv_sqrt
from .positivity import (
    CERTIFIED,
    certify_positivity,
    coupling_bound_check,
    face_membership,
)

SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class TangParams:
    """Admissible parameter pair: 0 < mu < 1 and 0 < eps <= mu^2 / 6."""

    mu: float
    eps: float

    def __post_init__(self):
        if not (0.0 < self.mu < 1.0):
            raise BadParamsError(f"mu must lie in (0, 1), got {self.mu}")
        if not (0.0 < self.eps <= self.mu**2 / 6.0):
            raise BadParamsError(
                f"eps must lie in (0, mu^2/6] = (0, {self.mu**2 / 6.0}], got {self.eps}"
            )

    @property
    def rho(self) -> float:
        return float(np.sqrt(1.0 - self.eps + self.mu**2))

    @property
    def delta(self) -> float:
        return float(np.sqrt(2.0 - 2.0 * self.eps + self.mu**2))


def phi0_apply(params: TangParams, A) -> np.ndarray:
    """Action of the raw map on a 2x2 matrix."""
    M = as_matrix(A)
    if M.shape != (2, 2):
        raise BadParamsError(f"expected a 2x2 argument, got shape {M.shape}")
    a, b = M[0, 0], M[0, 1]
    c, d = M[1, 0], M[1, 1]
    mu, eps = params.mu, params.eps
    return np.array(
        [
            [(1 - eps) * a + mu**2 * d, -b, mu * c, -mu * d],
            [-c, a + 2 * d, -2 * b, 0],
            [mu * b, -2 * c, 2 * a + 2 * d, -2 * b],
            [-mu * d, 0, -2 * c, a + d],
        ],
        dtype=np.complex128,
    )


def tang_choi(params: TangParams) -> ChoiMatrix:
    """Choi matrix of the raw map, assembled entrywise.

    Agrees exactly with ``choi_from_map(phi0_apply)``; the direct assembly
    keeps construction independent of the generic path for cross-checks.
    """
    mu, eps = params.mu, params.eps
    H = np.zeros((8, 8), dtype=np.complex128)
    H[0, 0] = 1 - eps
    H[1, 1] = 1.0
    H[2, 2] = 2.0
    H[3, 3] = 1.0
    H[4, 4] = mu**2
    H[5, 5] = 2.0
    H[6, 6] = 2.0
    H[7, 7] = 1.0
    H[0, 5] = H[5, 0] = -1.0
    H[1, 6] = H[6, 1] = -2.0
    H[2, 4] = H[4, 2] = mu
    H[2, 7] = H[7, 2] = -2.0
    H[4, 7] = H[7, 4] = -mu
    return ChoiMatrix.from_array(H)


def inv_sqrt_constants(params: TangParams, tol: float = 1e-13) -> tuple[float, float, float]:
    """Solve the corner system for (alpha, beta, gamma).

    With ``alpha = sqrt(rho^2 - g^2)`` and ``beta = sqrt(2 - g^2)`` forced by
    the first two equations, the third becomes
    ``g (alpha(g) + beta(g)) + mu = 0``.  On ``(-1/2, 0)`` the left side is
    strictly monotone with a guaranteed sign change, so bisection seeds a
    Newton polish.  Signs: alpha, beta > 0 and gamma < 0.
    """
    mu = params.mu
    rho2 = params.rho**2

    def f(g):
        return g * (np.sqrt(rho2 - g * g) + np.sqrt(2.0 - g * g)) + mu

    def fprime(g):
        a = np.sqrt(rho2 - g * g)
        b = np.sqrt(2.0 - g * g)
        return (rho2 - 2 * g * g) / a + (2.0 - 2 * g * g) / b

    lo, hi = -0.5, 0.0
    if not (f(lo) < 0.0 < f(hi)):
        raise NoConvergenceError("corner system lost its sign-change bracket")
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    for _ in range(50):
        step = f(g) / fprime(g)
        g -= step
        if abs(step) < tol:
            break
    else:
        raise NoConvergenceError("Newton polish of the corner system did not settle")
    alpha = float(np.sqrt(rho2 - g * g))
    beta = float(np.sqrt(2.0 - g * g))
    gamma = float(g)
    resid = max(
        abs(alpha**2 + gamma**2 - rho2),
        abs(beta**2 + gamma**2 - 2.0),
        abs((alpha + beta) * gamma + mu),
    )
    if resid > 1e-10:
        raise NoConvergenceError(f"corner system residual {resid:.3e} too large")
    return alpha, beta, gamma


def closed_form_constants(params: TangParams) -> tuple[float, float, float]:
    """Closed-form solution of the corner system (used as an oracle).

    With ``D = sqrt(2 + rho^2 + 2 delta)``:
    ``alpha = (rho^2 + delta)/D``, ``beta = (2 + delta)/D``,
    ``gamma = -mu/D``.
    """
    rho2 = params.rho**2
    delta = params.delta
    D = np.sqrt(2.0 + rho2 + 2.0 * delta)
    return float((rho2 + delta) / D), float((2.0 + delta) / D), float(-params.mu / D)


#: Nonzero positions of the normalized Choi matrix (upper triangle, 0-based).
NORMALIZED_PATTERN = (
    (0, 0), (1, 1), (2, 2), (3, 3), (5, 5), (6, 6), (7, 7),
    (0, 5), (1, 6), (2, 4), (2, 7), (3, 5),
)


def normalized_zero_mask() -> np.ndarray:
    """Boolean 8x8 mask of the printed-zero positions of the normalized form."""
    mask = np.ones((8, 8), dtype=bool)
    for i, j in NORMALIZED_PATTERN:
        mask[i, j] = False
        mask[j, i] = False
    return mask


@dataclass(frozen=True)
class TangPipeline:
    """All quantities produced by normalizing the raw map into face form."""

    params: TangParams
    rho: float
    delta: float
    alpha: float
    beta: float
    gamma: float
    inv_sqrt: np.ndarray
    W: np.ndarray
    H0: ChoiMatrix
    Hfinal: ChoiMatrix

    def residuals(self) -> dict[str, float]:
        """Self-check residuals: unitality, the constant identities, W, zeros."""
        mu = self.params.mu
        abc = max(
            abs(self.alpha**2 + self.gamma**2 - self.rho**2),
            abs(self.beta**2 + self.gamma**2 - 2.0),
            abs((self.alpha + self.beta) * self.gamma + mu),
        )
        w_id = abs(
            (mu * self.gamma + self.alpha) ** 2
            + (mu * self.beta + self.gamma) ** 2
            - self.rho**2
        )
        unitary = frobenius(self.W.conj().T @ self.W - np.eye(4))
        unital = frobenius(self.Hfinal.map_of_identity() - np.eye(4))
        zeros = float(np.max(np.abs(self.Hfinal.H[normalized_zero_mask()])))
        return {
            "corner_system": abc,
            "rotation_identity": w_id,
            "W_unitarity": unitary,
            "unitality": unital,
            "zero_pattern": zeros,
        }


def build_pipeline(params: TangParams) -> TangPipeline:
    """Run the full normalization: constants, R, W, and both Choi matrices."""
    rho, delta = params.rho, params.delta
    alpha, beta, gamma = inv_sqrt_constants(params)
    R = np.array(
        [
            [beta / delta, 0, 0, -gamma / delta],
            [0, 1 / SQRT3, 0, 0],
            [0, 0, 0.5, 0],
            [-gamma / delta, 0, 0, alpha / delta],
        ],
        dtype=np.complex128,
    )
    direct = psd_inv_sqrt(phi0_apply(params, np.eye(2)))
    if frobenius(R - direct) > 1e-9:
        raise PosmapError(
            "assembled inverse square root disagrees with the spectral one"
        )
    c = (params.mu * gamma + alpha) / rho
    s = (params.mu * beta + gamma) / rho
    W = np.array(
        [[c, 0, 0, s], [0, 1, 0, 0], [0, 0, 1, 0], [s, 0, 0, -c]],
        dtype=np.complex128,
    )

    def phi_final(A):
        return W.conj().T @ (R @ phi0_apply(params, A) @ R) @ W

    return TangPipeline(
        params=params,
        rho=rho,
        delta=delta,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        inv_sqrt=R,
        W=W,
        H0=tang_choi(params),
        Hfinal=choi_from_map(phi_final, 3),
    )


def blockwise_final_choi(pipeline: TangPipeline) -> ChoiMatrix:
    """The normalized Choi matrix by conjugating each raw Choi block.

    ``H -> (I (x) (RW))* H (I (x) RW)`` applied blockwise; agrees with the
    map-action route and serves as an independent construction.
    """
    return conjugate_choi(conjugate_choi(pipeline.H0, pipeline.inv_sqrt), pipeline.W)


@dataclass(frozen=True)
class YEntryResolution:
    """Which closed form matches the computed top-right coupling entry.

    The candidates are ``-1/(sqrt(3) rho)`` and ``-1/(sqrt(3) delta)``;
    ``variant`` is ``"rho"``, ``"delta"`` or ``"neither"`` at tolerance 1e-9.
    """

    variant: str
    observed: complex
    rho_candidate: float
    delta_candidate: float


def resolve_y_entry(pipeline: TangPipeline, tol: float = 1e-9) -> YEntryResolution:
    observed = complex(pipeline.Hfinal.H[0, 5])
    rho_c = -1.0 / (SQRT3 * pipeline.rho)
    delta_c = -1.0 / (SQRT3 * pipeline.delta)
    if abs(observed - rho_c) <= tol:
        variant = "rho"
    elif abs(observed - delta_c) <= tol:
        variant = "delta"
    else:
        variant = "neither"
    return YEntryResolution(variant, observed, rho_c, delta_c)


def param_grid(k: int, mu_lo: float = 0.1, mu_hi: float = 0.9) -> list[TangParams]:
    """A k x k sweep of the admissible region, including the eps boundary."""
    if k == 1:
        return [TangParams(0.9, 0.12)]
    grid = []
    for mu in np.linspace(mu_lo, mu_hi, k):
        for frac in np.linspace(0.2, 1.0, k):
            grid.append(TangParams(float(mu), float(frac * mu**2 / 6.0)))
    return grid


@dataclass(frozen=True)
class TangCheck:
    passed: bool
    detail: str


@dataclass(frozen=True)
class TangReport:
    """Consolidated verification of one parameter point."""

    params: TangParams
    pipeline: TangPipeline
    checks: dict[str, TangCheck]
    y_entry: YEntryResolution

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks.values())


def verify_tang(
    params: TangParams,
    budget: int = 64,
    witness_restarts: int = 16,
    seed: int = 0,
    zero_tol: float = 1e-9,
) -> TangReport:
    """Run the whole battery of structural checks on one parameter point.

    Covers: C = 0 with C, Y, Z mutually orthogonal; B and U diagonal; T
    supported exactly on its three printed slots; membership in the face of
    (e2, f1); the strict coupling bound; a positivity certificate; failure of
    both complete positivity and complete copositivity; and a PPT witness
    against decomposability.
    """
    pipe = build_pipeline(params)
    blocks = extract_blocks(pipe.Hfinal)
    checks: dict[str, TangCheck] = {}

    c_norm = float(np.linalg.norm(blocks.C))
    checks["C_zero"] = TangCheck(c_norm <= zero_tol, f"||C|| = {c_norm:.2e}")
    ortho = max(
        abs(np.vdot(blocks.Y, blocks.Z)),
        abs(np.vdot(blocks.Y, blocks.C)),
        abs(np.vdot(blocks.Z, blocks.C)),
    )
    checks["rows_orthogonal"] = TangCheck(ortho <= zero_tol, f"max overlap {ortho:.2e}")
    for name, M in (("B_diagonal", blocks.B), ("U_diagonal", blocks.U)):
        off = float(np.max(np.abs(M - np.diag(np.diagonal(M)))))
        checks[name] = TangCheck(off <= zero_tol, f"max off-diagonal {off:.2e}")
    T = blocks.T
    support = {(0, 1), (1, 2), (2, 0)}
    worst_zero = max(
        abs(T[i, j]) for i in range(3) for j in range(3) if (i, j) not in support
    )
    smallest = min(abs(T[i, j]) for i, j in support)
    checks["T_support"] = TangCheck(
        worst_zero <= zero_tol and smallest > 1e-6,
        f"off-support {worst_zero:.2e}, smallest slot {smallest:.2e}",
    )
    fm = face_membership(pipe.Hfinal, np.array([0.0, 1.0]), np.eye(4)[:, 0])
    checks["face_member"] = TangCheck(fm.member, f"residual {fm.residual:.2e}")
    cb = coupling_bound_check(blocks)
    checks["coupling_strict"] = TangCheck(
        cb.holds and cb.strict, f"margin {cb.margin:.3e}"
    )
    pos = certify_positivity(blocks, budget=budget, seed=seed)
    checks["positive"] = TangCheck(pos.status == CERTIFIED, f"margin {pos.margin:.3e}")
    cp = cp_check(blocks)
    checks["not_cp"] = TangCheck(not cp.holds, f"min eig {cp.direct_min_eig:.3e}")
    ccp = ccp_check(blocks)
    checks["not_ccp"] = TangCheck(not ccp.holds, f"min eig {ccp.direct_min_eig:.3e}")
    wit = witness_search(pipe.Hfinal, restarts=witness_restarts, seed=seed)
    checks["witnessed_nondecomposable"] = TangCheck(
        wit.found, f"best value {wit.best_value:.3e}"
    )
    return TangReport(params, pipe, checks, resolve_y_entry(pipe))
