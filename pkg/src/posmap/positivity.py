"""Positivity criteria for maps given by face-form Choi matrices.

Two notions drive everything here:

* block-positivity of a 2x2 block matrix ``[[P, S], [S*, Q]]``, equivalent to
  ``|<eta, S eta>|^2 <= <eta, P eta> <eta, Q eta>`` on the unit sphere, and
* positivity of a unital face-form map, equivalent to positive semidefiniteness
  of the bordered matrix built from every admissible scalar triple
  ``(p, q, s)`` with ``p, q >= 0`` and ``|s|^2 <= p q``.

Violations are always returned with a witness that reproduces a negative
value of the defining inequality; certificates are "no violation found"
statements qualified by the searched budget, never proofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .choi import ChoiBlocks, ChoiMatrix, apply_map, row_abs
from .exceptions import (
    BadScalarsError,
    NotPSDError,
    NotUnitalFaceFormError,
    SingularBlockError,
)
from .matkernel import as_matrix, psd_check, psd_sqrt, require_hermitian
from .rand import rng_for

CERTIFIED = "certified"
VIOLATION_FOUND = "violation_found"
INCONCLUSIVE = "inconclusive"

#: Margins above this threshold count as strict ("proper") inequalities.
STRICT_TOL = 1e-7

#: Residual below which a vector is accepted as lying in a face kernel.
FACE_TOL = 1e-8


# ---------------------------------------------------------------------------
# block-positivity of [[P, S], [S*, Q]]
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockPosWitness:
    """Product vector violating block-positivity.

    ``value`` is the determinant-form value ``<e,Pe><e,Qe> - |<e,Se>|^2`` at
    ``eta``; ``lam`` are scalars such that the full quadratic form
    ``sum conj(lam_i) lam_j <eta, A_ij eta>`` is negative.
    """

    eta: np.ndarray
    lam: tuple[complex, complex]
    value: float


@dataclass(frozen=True)
class BlockPosVerdict:
    status: str
    margin: float
    witness: BlockPosWitness | None = None


def _quad_forms(etas: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Batched quadratic forms <eta, M eta> for unit rows ``etas``."""
    return np.einsum("mi,mi->m", etas.conj(), etas @ M.T)


def _gap_values(P, S, Q, etas):
    p = _quad_forms(etas, P).real
    q = _quad_forms(etas, Q).real
    s = _quad_forms(etas, S)
    return p * q - np.abs(s) ** 2


def _sphere_grid(n: int) -> np.ndarray | None:
    """Deterministic unit-sphere sample (modulo global phase) for n <= 3."""
    if n == 1:
        return np.ones((1, 1), dtype=np.complex128)
    if n == 2:
        theta = np.linspace(0.0, np.pi / 2, 33)
        phi = np.linspace(0.0, 2 * np.pi, 126, endpoint=False)
        T, F = np.meshgrid(theta, phi, indexing="ij")
        etas = np.stack(
            [np.cos(T), np.sin(T) * np.exp(1j * F)], axis=-1
        ).reshape(-1, 2)
        return etas
    if n == 3:
        theta1 = np.linspace(0.0, np.pi / 2, 12)
        theta2 = np.linspace(0.0, np.pi / 2, 12)
        phi1 = np.linspace(0.0, 2 * np.pi, 42, endpoint=False)
        phi2 = np.linspace(0.0, 2 * np.pi, 42, endpoint=False)
        T1, T2, F1, F2 = np.meshgrid(theta1, theta2, phi1, phi2, indexing="ij")
        etas = np.stack(
            [
                np.cos(T1),
                np.sin(T1) * np.cos(T2) * np.exp(1j * F1),
                np.sin(T1) * np.sin(T2) * np.exp(1j * F2),
            ],
            axis=-1,
        ).reshape(-1, 3)
        return etas
    return None


def _descend(P, S, Q, starts: np.ndarray, max_steps: int = 500):
    """Batched projected gradient descent of the gap on the unit sphere."""
    etas = starts / np.linalg.norm(starts, axis=1, keepdims=True)
    scale = max(
        np.linalg.norm(P), np.linalg.norm(Q), 2 * np.linalg.norm(S), 1e-12
    )
    steps = np.full(etas.shape[0], 0.1 / scale)
    Sstar = S.conj().T
    g = _gap_values(P, S, Q, etas)
    for _ in range(max_steps):
        Pe = etas @ P.T
        Qe = etas @ Q.T
        Se = etas @ S.T
        SHe = etas @ Sstar.T
        p = np.einsum("mi,mi->m", etas.conj(), Pe).real
        q = np.einsum("mi,mi->m", etas.conj(), Qe).real
        s = np.einsum("mi,mi->m", etas.conj(), Se)
        grad = (
            Pe * q[:, None]
            + Qe * p[:, None]
            - (s.conj()[:, None] * Se + s[:, None] * SHe)
        )
        prop = etas - steps[:, None] * grad
        prop /= np.linalg.norm(prop, axis=1, keepdims=True)
        gp = _gap_values(P, S, Q, prop)
        accept = gp < g
        etas[accept] = prop[accept]
        g[accept] = gp[accept]
        steps[accept] *= 1.25
        steps[~accept] *= 0.5
        if steps.max() < 1e-16:
            break
    k = int(np.argmin(g))
    return float(g[k]), etas[k].copy()


def block_positive_2x2(
    P,
    S,
    Q,
    budget: int = 64,
    tol: float = 1e-9,
    seed: int = 0,
    max_steps: int = 500,
) -> BlockPosVerdict:
    """Search for a violation of ``|<e,Se>|^2 <= <e,Pe><e,Qe>`` on the sphere.

    ``P`` and ``Q`` must be Hermitian PSD (raises :class:`NotPSDError`
    otherwise).  The search combines a deterministic sphere grid (n <= 3)
    with ``budget`` restarts of projected gradient descent.  ``margin`` is
    the smallest gap value found; a violation is returned with a product
    vector witness whose quadratic form is negative.
    """
    Pm = require_hermitian(as_matrix(P))
    Qm = require_hermitian(as_matrix(Q))
    Sm = as_matrix(S)
    for name, M in (("P", Pm), ("Q", Qm)):
        v = psd_check(M, tol=tol)
        if not v.is_psd:
            raise NotPSDError(f"{name} is not PSD (min eigenvalue {v.min_eigenvalue:.3e})")
    n = Pm.shape[0]
    if Sm.shape != (n, n) or Qm.shape != (n, n):
        raise NotPSDError("P, S, Q must share one square shape")

    best_val = np.inf
    best_eta = None
    evaluated = False

    grid = _sphere_grid(n)
    if grid is not None:
        vals = _gap_values(Pm, Sm, Qm, grid)
        k = int(np.argmin(vals))
        best_val, best_eta = float(vals[k]), grid[k].copy()
        evaluated = True

    if budget > 0:
        rng = rng_for(seed, "block-positive-2x2")
        starts = rng.standard_normal((budget, n)) + 1j * rng.standard_normal((budget, n))
        informed = []
        for M in (Pm, Qm, (Sm + Sm.conj().T) / 2, (Sm - Sm.conj().T) / 2j):
            w, V = np.linalg.eigh(require_hermitian(M, tol=np.inf))
            informed.append(V[:, 0])
            informed.append(V[:, -1])
        starts = np.vstack([starts, np.array(informed)])
        if grid is not None:
            starts = np.vstack([starts, best_eta[None, :]])
        val, eta = _descend(Pm, Sm, Qm, starts, max_steps=max_steps)
        if val < best_val:
            best_val, best_eta = val, eta
        evaluated = True

    if not evaluated:
        return BlockPosVerdict(INCONCLUSIVE, np.inf, None)

    if best_val < -tol:
        p = float(np.real(np.vdot(best_eta, Pm @ best_eta)))
        q = float(np.real(np.vdot(best_eta, Qm @ best_eta)))
        s = complex(np.vdot(best_eta, Sm @ best_eta))
        little = np.array([[p, s], [np.conj(s), q]])
        w, V = np.linalg.eigh(little)
        lam = V[:, 0]
        witness = BlockPosWitness(
            eta=best_eta, lam=(complex(lam[0]), complex(lam[1])), value=best_val
        )
        return BlockPosVerdict(VIOLATION_FOUND, best_val, witness)
    return BlockPosVerdict(CERTIFIED, best_val, None)


def admissible_combination(P, S, Q, p: float, q: float, s: complex) -> np.ndarray:
    """The matrix ``p P + s S + conj(s) S* + q Q`` for an admissible triple.

    Admissible means ``p, q >= 0`` and ``|s|^2 <= p q``; block-positivity of
    ``[[P, S], [S*, Q]]`` is equivalent to all such combinations being PSD.
    """
    if p < -1e-12 or q < -1e-12:
        raise BadScalarsError(f"p, q must be nonnegative, got p={p}, q={q}")
    if abs(s) ** 2 > p * q + 1e-12 * max(1.0, abs(p * q)):
        raise BadScalarsError(f"|s|^2 = {abs(s)**2:.6e} exceeds p*q = {p * q:.6e}")
    Pm, Sm, Qm = as_matrix(P), as_matrix(S), as_matrix(Q)
    return p * Pm + s * Sm + np.conj(s) * Sm.conj().T + q * Qm


def block_positive_choi(
    choi: ChoiMatrix, budget: int = 64, tol: float = 1e-9, seed: int = 0
) -> BlockPosVerdict:
    """Block-positivity of a full Choi matrix, i.e. positivity of the map.

    Delegates to :func:`block_positive_2x2` on the blocks
    ``(phi(E_11), phi(E_12), phi(E_22))``.  A non-PSD diagonal block is an
    immediate violation (the map is already negative on a rank-one input).
    """
    P = choi.block(1, 1)
    S = choi.block(1, 2)
    Q = choi.block(2, 2)
    for M, lam in ((P, (1.0 + 0j, 0j)), (Q, (0j, 1.0 + 0j))):
        v = psd_check(M, tol=tol)
        if not v.is_psd:
            witness = BlockPosWitness(eta=v.witness, lam=lam, value=v.min_eigenvalue)
            return BlockPosVerdict(VIOLATION_FOUND, v.min_eigenvalue, witness)
    return block_positive_2x2(P, S, Q, budget=budget, tol=tol, seed=seed)


# ---------------------------------------------------------------------------
# structural relations forced on positive face-form maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelationCheck:
    passed: bool
    margin: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class FaceStructureReport:
    """Pass/fail record of the structural relations of positive face-form maps."""

    relations: dict[str, RelationCheck] = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.relations.values())


def face_structure_report(
    blocks: ChoiBlocks,
    tol: float = 1e-9,
    budget: int = 16,
    seed: int = 0,
) -> FaceStructureReport:
    """Check the relations every positive face-form map must satisfy.

    Reported (never raised): ``a >= 0``; ``B`` and ``U`` PSD; ``C = 0`` when
    ``a = 0``; ``C* C <= a B`` when ``a > 0``; ``x = 0``; and
    block-positivity of ``[[B, T], [T*, U]]``.
    """
    rel: dict[str, RelationCheck] = {}
    a = blocks.a
    rel["a_nonnegative"] = RelationCheck(a >= -tol, float(a))
    for name, M in (("B_psd", blocks.B), ("U_psd", blocks.U)):
        v = psd_check(M, tol=tol)
        rel[name] = RelationCheck(v.is_psd, v.min_eigenvalue)
    c_norm = float(np.linalg.norm(blocks.C))
    if a <= tol:
        rel["C_zero_when_a_zero"] = RelationCheck(c_norm <= max(tol, 1e-9), -c_norm)
        rel["C_dominated"] = RelationCheck(True, None, "vacuous at a = 0")
    else:
        rel["C_zero_when_a_zero"] = RelationCheck(True, -c_norm, "vacuous at a > 0")
        gap = a * blocks.B - np.outer(blocks.C.conj(), blocks.C)
        m = float(np.linalg.eigvalsh(require_hermitian(gap, tol=np.inf))[0])
        rel["C_dominated"] = RelationCheck(m >= -tol, m)
    rel["x_zero"] = RelationCheck(abs(blocks.x) <= max(tol, 1e-9), -abs(blocks.x))
    try:
        verdict = block_positive_2x2(
            blocks.B, blocks.T, blocks.U, budget=budget, tol=tol, seed=seed
        )
        rel["BT_block_positive"] = RelationCheck(
            verdict.status != VIOLATION_FOUND, verdict.margin, verdict.status
        )
    except NotPSDError as exc:
        rel["BT_block_positive"] = RelationCheck(False, None, str(exc))
    return FaceStructureReport(rel)


# ---------------------------------------------------------------------------
# positivity of unital face-form maps via admissible scalar triples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PositivityWitness:
    """Admissible triple and unit vector exhibiting a positivity violation.

    ``kind`` is ``"combination"`` when ``p B + s T + conj(s) T* + q U`` fails
    to be PSD and ``"bordered"`` when the Schur-style inequality
    ``(conj(s) Y* + s Z*)(s Y + conj(s) Z) <= p^2 B + p(sT + conj(s)T*) + pq U``
    fails.  ``value = <eta, M eta>`` for the corresponding matrix.
    """

    p: float
    q: float
    s: complex
    eta: np.ndarray
    value: float
    kind: str


@dataclass(frozen=True)
class PositivityVerdict:
    status: str
    margin: float
    witness: PositivityWitness | None = None


def _require_unital_face(blocks: ChoiBlocks, form_tol: float = 1e-8) -> None:
    bad = []
    if abs(blocks.a - 1.0) > form_tol:
        bad.append(f"a = {blocks.a!r}")
    if np.linalg.norm(blocks.C) > form_tol:
        bad.append(f"||C|| = {np.linalg.norm(blocks.C):.3e}")
    if abs(blocks.x) > form_tol:
        bad.append(f"|x| = {abs(blocks.x):.3e}")
    if bad:
        raise NotUnitalFaceFormError(
            "blocks are not in unital face form (need a = 1, C = 0, x = 0): "
            + ", ".join(bad)
        )


def _positivity_matrices(blocks: ChoiBlocks, p, q, s):
    """Stacked (combination, bordered) matrices over triples arrays."""
    B, T, U = blocks.B, blocks.T, blocks.U
    Tstar = T.conj().T
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    s = np.asarray(s, dtype=np.complex128)
    sT = s[:, None, None] * T + s.conj()[:, None, None] * Tstar
    K = p[:, None, None] * B + q[:, None, None] * U + sT
    v = s[:, None] * blocks.Y[None, :] + s.conj()[:, None] * blocks.Z[None, :]
    vv = v.conj()[:, :, None] * v[:, None, :]
    D = (
        (p**2)[:, None, None] * B
        + p[:, None, None] * sT
        + (p * q)[:, None, None] * U
        - vv
    )
    return K, D


def _point_margin(blocks: ChoiBlocks, p: float, q: float, s: complex):
    K, D = _positivity_matrices(blocks, [p], [q], [s])
    mk = float(np.linalg.eigvalsh(K[0])[0])
    md = float(np.linalg.eigvalsh(D[0])[0])
    return min(mk, md), ("combination" if mk <= md else "bordered")


def _triple_grid(budget: int, rng: np.random.Generator):
    ts = np.logspace(-3.0, 3.0, 13)
    ps = list(ts / (1.0 + ts)) + [1.0, 0.0]
    thetas = np.linspace(0.0, 2 * np.pi, 64, endpoint=False)
    radii = (0.5, 0.9, 1.0)
    triples = []
    for p in ps:
        q = 1.0 - p
        triples.append((p, q, 0.0 + 0.0j))
        smax = np.sqrt(p * q)
        if smax == 0.0:
            continue
        for r in radii:
            for th in thetas:
                triples.append((p, q, r * smax * np.exp(1j * th)))
    for _ in range(budget):
        t = 10.0 ** rng.uniform(-3.0, 3.0)
        p = t / (1.0 + t)
        q = 1.0 - p
        r = 1.0 if rng.random() < 0.5 else rng.random()
        th = rng.uniform(0.0, 2 * np.pi)
        triples.append((p, q, r * np.sqrt(p * q) * np.exp(1j * th)))
    return triples


def certify_positivity(
    blocks: ChoiBlocks,
    budget: int = 64,
    tol: float = 1e-9,
    seed: int = 0,
) -> PositivityVerdict:
    """Positivity test for a unital face-form map (a = 1, C = 0, x = 0).

    The map is positive iff for every admissible ``(p, q, s)`` both the
    combination ``p B + s T + conj(s) T* + q U`` and the bordered gap matrix
    are PSD.  Both families are homogeneous, so the scan normalizes
    ``p + q = 1``: a deterministic grid over the ``p/q`` ratio, the phase of
    ``s`` and its radius, ``budget`` random triples, and a pattern-search
    refinement of the worst point.  A violation returns the triple, the unit
    vector and the negative value; certification means no violation found.
    """
    _require_unital_face(blocks)
    rng = rng_for(seed, "certify-positivity")
    triples = _triple_grid(budget, rng)
    p = np.array([t[0] for t in triples])
    q = np.array([t[1] for t in triples])
    s = np.array([t[2] for t in triples])
    K, D = _positivity_matrices(blocks, p, q, s)
    mk = np.linalg.eigvalsh(K)[:, 0]
    md = np.linalg.eigvalsh(D)[:, 0]
    stacked = np.minimum(mk, md)
    k = int(np.argmin(stacked))
    best = (float(stacked[k]), float(p[k]), float(q[k]), complex(s[k]))

    # Pattern-search refinement in (log ratio, phase, radius) around the
    # worst grid point; corners p = 0 / q = 0 are already on the grid.
    pb, qb, sb = best[1], best[2], best[3]
    if 0.0 < pb < 1.0:
        t0 = np.log10(pb / qb)
        r0 = abs(sb) / np.sqrt(pb * qb) if pb * qb > 0 else 0.0
        th0 = float(np.angle(sb)) if sb != 0 else 0.0
        deltas = np.array([0.5, 0.2, 0.05])
        cur = (t0, th0, min(r0, 1.0))
        cur_val = best[0]
        for dt in deltas:
            improved = True
            while improved:
                improved = False
                for move in (
                    (dt, 0, 0), (-dt, 0, 0),
                    (0, dt, 0), (0, -dt, 0),
                    (0, 0, dt), (0, 0, -dt),
                ):
                    t1 = cur[0] + move[0]
                    th1 = cur[1] + move[1]
                    r1 = min(max(cur[2] + move[2], 0.0), 1.0)
                    pp = 10.0**t1 / (1.0 + 10.0**t1)
                    qq = 1.0 - pp
                    ss = r1 * np.sqrt(pp * qq) * np.exp(1j * th1)
                    val, _ = _point_margin(blocks, pp, qq, ss)
                    if val < cur_val:
                        cur = (t1, th1, r1)
                        cur_val = val
                        improved = True
        if cur_val < best[0]:
            pp = 10.0 ** cur[0] / (1.0 + 10.0 ** cur[0])
            best = (
                cur_val,
                pp,
                1.0 - pp,
                cur[2] * np.sqrt(pp * (1.0 - pp)) * np.exp(1j * cur[1]),
            )

    margin, pb, qb, sb = best
    if margin < -tol:
        Kb, Db = _positivity_matrices(blocks, [pb], [qb], [sb])
        wk, Vk = np.linalg.eigh(Kb[0])
        wd, Vd = np.linalg.eigh(Db[0])
        if wk[0] <= wd[0]:
            kind, eta, value = "combination", Vk[:, 0], float(wk[0])
        else:
            kind, eta, value = "bordered", Vd[:, 0], float(wd[0])
        # Paranoia: the witness must reproduce the violation on re-evaluation.
        if value >= -tol:
            return PositivityVerdict(INCONCLUSIVE, margin, None)
        witness = PositivityWitness(pb, qb, complex(sb), eta.copy(), value, kind)
        return PositivityVerdict(VIOLATION_FOUND, margin, witness)
    return PositivityVerdict(CERTIFIED, margin, None)


# ---------------------------------------------------------------------------
# the operator bound on the coupling rows, and the scalar (n = 1) conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingBound:
    """Verdict of the Hermitian-order bound |Y| + |Z| <= sqrt(a) U^{1/2}."""

    holds: bool
    margin: float
    strict: bool


def coupling_bound_check(
    blocks: ChoiBlocks, tol: float = 1e-9, strict_tol: float = STRICT_TOL
) -> CouplingBound:
    """Check ``|Y| + |Z| <= a^{1/2} U^{1/2}``, necessary for positivity.

    ``margin`` is the smallest eigenvalue of the difference; ``strict``
    requires it to clear :data:`STRICT_TOL`.
    """
    if blocks.a < -tol:
        raise BadScalarsError(f"a must be nonnegative, got {blocks.a}")
    root = np.sqrt(max(blocks.a, 0.0)) * psd_sqrt(blocks.U)
    gap = root - row_abs(blocks.Y) - row_abs(blocks.Z)
    margin = float(np.linalg.eigvalsh(require_hermitian(gap, tol=np.inf))[0])
    return CouplingBound(margin >= -tol, margin, margin > strict_tol)


@dataclass(frozen=True)
class ConditionCheck:
    holds: bool
    margin: float


@dataclass(frozen=True)
class ScalarConditions:
    """The three scalar conditions of the n = 1 (2x2 codomain corner) case."""

    c_bound: ConditionCheck      # |c|^2 <= a b
    t_bound: ConditionCheck      # |t|^2 <= b u
    coupling: ConditionCheck     # |y| + |z| <= sqrt(a u)

    @property
    def all_hold(self) -> bool:
        return self.c_bound.holds and self.t_bound.holds and self.coupling.holds


def scalar_choi_conditions(
    a: float, b: float, u: float, c: complex, y: complex, z: complex, t: complex,
    tol: float = 1e-9,
) -> ScalarConditions:
    """Evaluate the scalar necessary conditions with margins."""
    if a < -tol or b < -tol or u < -tol:
        raise BadScalarsError(f"a, b, u must be nonnegative, got {(a, b, u)}")
    m1 = a * b - abs(c) ** 2
    m2 = b * u - abs(t) ** 2
    m3 = np.sqrt(max(a, 0.0) * max(u, 0.0)) - abs(y) - abs(z)
    return ScalarConditions(
        ConditionCheck(m1 >= -tol, float(m1)),
        ConditionCheck(m2 >= -tol, float(m2)),
        ConditionCheck(m3 >= -tol, float(m3)),
    )


# ---------------------------------------------------------------------------
# face membership and the derived block-positive triple
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FaceMembership:
    member: bool
    residual: float


def face_membership(
    choi: ChoiMatrix, xi, eta, face_tol: float = FACE_TOL
) -> FaceMembership:
    """Test membership in the maximal face {phi : phi(P_xi) eta = 0}.

    ``xi`` (length 2) and ``eta`` (length n+1) are expected unit;
    ``residual = ||phi(P_xi) eta||_2``.
    """
    x = np.asarray(xi, dtype=np.complex128).ravel()
    e = np.asarray(eta, dtype=np.complex128).ravel()
    P = np.outer(x, x.conj())
    out = apply_map(choi, P)
    residual = float(np.linalg.norm(out @ e))
    return FaceMembership(residual <= face_tol, residual)


def positivity_slack_triple(
    blocks: ChoiBlocks, rank_tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The triple ``(2B, T, U - Y*Y - Z*Z)`` that positivity forces block-positive.

    Requires ``B`` invertible (raises :class:`SingularBlockError` otherwise).
    ``|Y|^2`` means the square of the row absolute value, which equals
    ``Y* Y = outer(conj(Y), Y)``.
    """
    evals = np.linalg.eigvalsh(require_hermitian(blocks.B, tol=np.inf))
    if evals[0] <= rank_tol:
        raise SingularBlockError(
            f"B has eigenvalue {evals[0]:.3e} <= rank tolerance {rank_tol:.1e}"
        )
    Q = (
        blocks.U
        - np.outer(blocks.Y.conj(), blocks.Y)
        - np.outer(blocks.Z.conj(), blocks.Z)
    )
    return 2.0 * blocks.B, blocks.T.copy(), Q
