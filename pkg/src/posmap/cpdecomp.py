"""Complete (co)positivity, decomposability certificates, and PPT witnesses.

A map is completely positive iff its Choi matrix is PSD, completely
copositive iff the partially transposed Choi matrix is PSD, and decomposable
iff the Choi matrix splits as ``H = H1 + H2`` with ``H1`` PSD and ``H2``
PSD after partial transposition.  Decomposability is treated as convex
feasibility (Dykstra alternating projections); nondecomposability is
certified dually by a PPT state ``rho`` with ``Tr(H rho) < 0``.  Every
verdict carries re-checkable evidence, and a failed search is reported as
"not found", never as a proof.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .choi import ChoiBlocks, ChoiMatrix, assemble_blocks
from .exceptions import InvalidCertificateError, SingularBlockError
from .matkernel import (
    as_matrix,
    frobenius,
    hermitian_norm,
    partial_transpose,
    psd_check,
    psd_project,
    psd_sqrt,
    require_hermitian,
)
from .rand import random_psd, rng_for

FEAS_TOL = 1e-7
WITNESS_TOL = 1e-6

#: Structural tolerance deciding whether an off-diagonal row counts as zero.
ZERO_ROW_TOL = 1e-9


# ---------------------------------------------------------------------------
# complete positivity / complete copositivity from face-form blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CpVerdict:
    """Outcome of a complete (co)positivity test.

    The structural route (vanishing off-diagonal row plus PSD condensed
    matrix) decides the verdict; the direct spectral test of the full Choi
    matrix (partially transposed for the copositive variant) is recorded
    alongside for cross-validation.  ``factor`` is a PSD square root of the
    condensed matrix when the verdict is positive; ``witness`` is a violating
    unit vector of the condensed matrix otherwise (``None`` when the failure
    is the nonzero row itself, whose norm is ``row_norm``).
    """

    holds: bool
    row_norm: float
    condensed_min_eig: float
    direct_min_eig: float
    factor: np.ndarray | None = None
    witness: np.ndarray | None = None


def condensed_matrix(blocks: ChoiBlocks, variant: str) -> np.ndarray:
    """The (2n+1)-square matrix whose positivity characterizes CP or coCP.

    ``variant="cp"`` builds ``[[a, C, Y], [C*, B, T], [Y*, T*, U]]``;
    ``variant="ccp"`` swaps ``Y -> Z`` and ``T -> T*``.
    """
    n = blocks.n
    if variant == "cp":
        row, mid = blocks.Y, blocks.T
    elif variant == "ccp":
        row, mid = blocks.Z, blocks.T.conj().T
    else:
        raise ValueError(f"variant must be 'cp' or 'ccp', got {variant!r}")
    K = np.zeros((2 * n + 1, 2 * n + 1), dtype=np.complex128)
    K[0, 0] = blocks.a
    K[0, 1 : n + 1] = blocks.C
    K[1 : n + 1, 0] = blocks.C.conj()
    K[0, n + 1 :] = row
    K[n + 1 :, 0] = row.conj()
    K[1 : n + 1, 1 : n + 1] = blocks.B
    K[1 : n + 1, n + 1 :] = mid
    K[n + 1 :, 1 : n + 1] = mid.conj().T
    K[n + 1 :, n + 1 :] = blocks.U
    return K


def _cp_like_check(blocks: ChoiBlocks, variant: str, tol: float,
                   struct_tol: float) -> CpVerdict:
    row = blocks.Z if variant == "cp" else blocks.Y
    row_norm = float(np.linalg.norm(row))
    K = condensed_matrix(blocks, variant)
    kv = psd_check(K, tol=tol)
    H = assemble_blocks(blocks)
    direct = H.H if variant == "cp" else partial_transpose(H.H, H.dim)
    dv = psd_check(direct, tol=tol)
    holds = row_norm <= struct_tol and kv.is_psd
    factor = psd_sqrt(psd_project(K)) if holds else None
    witness = None if kv.is_psd else kv.witness
    return CpVerdict(
        holds=holds,
        row_norm=row_norm,
        condensed_min_eig=kv.min_eigenvalue,
        direct_min_eig=dv.min_eigenvalue,
        factor=factor,
        witness=witness,
    )


def cp_check(blocks: ChoiBlocks, tol: float = 1e-9,
             struct_tol: float = ZERO_ROW_TOL) -> CpVerdict:
    """Complete positivity: Z = 0 and the condensed matrix PSD.

    Equivalently the full Choi matrix is PSD; both routes are computed and
    reported (the structural route decides, the spectral route cross-checks).
    """
    return _cp_like_check(blocks, "cp", tol, struct_tol)


def ccp_check(blocks: ChoiBlocks, tol: float = 1e-9,
              struct_tol: float = ZERO_ROW_TOL) -> CpVerdict:
    """Complete copositivity: Y = 0 and the mirrored condensed matrix PSD.

    Cross-validated against the PSD test of the partially transposed Choi
    matrix.
    """
    return _cp_like_check(blocks, "ccp", tol, struct_tol)


@dataclass(frozen=True)
class CondensedRelations:
    """Schur-complement consequences of the condensed matrix being PSD.

    ``t_dominated`` is ``U - T* B^{-1} T >= 0`` (mirrored for the copositive
    variant) and is ``None`` when ``B`` is singular at ``rank_tol``;
    ``c_dominated`` is ``a B - C* C >= 0``; ``row_dominated`` is
    ``a U - Y* Y >= 0`` (resp. ``Z``).  Values are minimum eigenvalues.
    """

    t_dominated: float | None
    c_dominated: float
    row_dominated: float
    b_singular: bool

    def all_hold(self, tol: float = 1e-10) -> bool:
        checks = [self.c_dominated, self.row_dominated]
        if self.t_dominated is not None:
            checks.append(self.t_dominated)
        return all(m >= -tol for m in checks)


def condensed_psd_relations(
    blocks: ChoiBlocks, variant: str = "cp", rank_tol: float = 1e-10
) -> CondensedRelations:
    """Margins of the block inequalities implied by complete (co)positivity."""
    if variant == "cp":
        row, mid = blocks.Y, blocks.T
    elif variant == "ccp":
        row, mid = blocks.Z, blocks.T.conj().T
    else:
        raise ValueError(f"variant must be 'cp' or 'ccp', got {variant!r}")
    evals = np.linalg.eigvalsh(require_hermitian(blocks.B, tol=np.inf))
    if evals[0] <= rank_tol:
        t_margin = None
        singular = True
    else:
        X = np.linalg.solve(blocks.B, mid)
        gap = blocks.U - mid.conj().T @ X
        t_margin = float(np.linalg.eigvalsh(require_hermitian(gap, tol=np.inf))[0])
        singular = False
    c_gap = blocks.a * blocks.B - np.outer(blocks.C.conj(), blocks.C)
    r_gap = blocks.a * blocks.U - np.outer(row.conj(), row)
    return CondensedRelations(
        t_dominated=t_margin,
        c_dominated=float(np.linalg.eigvalsh(require_hermitian(c_gap, tol=np.inf))[0]),
        row_dominated=float(np.linalg.eigvalsh(require_hermitian(r_gap, tol=np.inf))[0]),
        b_singular=singular,
    )


# ---------------------------------------------------------------------------
# decomposability as convex feasibility (Dykstra alternating projections)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionCertificate:
    """Feasible split ``H ~ H1 + H2`` with ``H1`` PSD and ``H2^G`` PSD.

    ``residual = ||H1 + H2 - H||_F``; the two minimum eigenvalues quantify
    cone membership of the parts.
    """

    H1: np.ndarray
    H2: np.ndarray
    residual: float
    min_eig_H1: float
    min_eig_H2_pt: float


@dataclass(frozen=True)
class DecomposeResult:
    decomposed: bool
    certificate: DecompositionCertificate | None
    residual: float
    iterations: int


def _face_zero_masks(choi: ChoiMatrix, struct_tol: float):
    """Pin masks for the structural zeros a face-form split must carry.

    For face-form ``H`` any valid split has the whole row/column at index
    ``n+1`` of ``H1`` equal to zero (so ``H2`` inherits ``Z``) and the top-row
    couplings of ``H2`` into the second block equal to zero (so ``H1``
    inherits ``Y``); the remaining pinned slots sit inside the shared zero
    pattern.  Returns ``None`` when ``H`` is not in face form.
    """
    d = choi.dim
    H = choi.H
    Q = choi.block(2, 2)
    face = abs(H[0, d]) <= struct_tol and (
        np.max(np.abs(Q[0, :])) <= struct_tol
        and np.max(np.abs(Q[:, 0])) <= struct_tol
    )
    if not face:
        return None
    size = 2 * d
    pin1 = np.zeros((size, size), dtype=bool)
    pin2 = np.zeros((size, size), dtype=bool)
    pin1[d, :] = True
    pin1[:, d] = True
    pin2[0, d] = pin2[d, 0] = True
    pin2[d, d] = True
    for j in range(d + 1, size):
        pin2[0, j] = pin2[j, 0] = True
        pin2[d, j] = pin2[j, d] = True
    return pin1, pin2


def decompose(
    choi: ChoiMatrix,
    max_iters: int = 20000,
    feas_tol: float = FEAS_TOL,
    struct_tol: float = ZERO_ROW_TOL,
) -> DecomposeResult:
    """Search for a completely positive / completely copositive split of H.

    Dykstra alternating projections run on the pair ``(H1, H2)`` between the
    affine set ``{H1 + H2 = H}`` and the product cone ``PSD x (PSD after
    partial transpose)``, with cone correction terms retained so the iterates
    converge to the projection onto the intersection and a residual plateau
    is meaningful.  For face-form inputs the structural zeros of any valid
    split are pinned inside the affine projection, so certificates carry them
    exactly.  A failure to converge is reported as ``decomposed=False`` with
    the last residual; it is *not* a proof of nondecomposability.
    """
    H = require_hermitian(choi.H)
    d = choi.dim
    masks = _face_zero_masks(choi, struct_tol)
    stop_tol = feas_tol / 10.0

    G1 = psd_project(H)
    G2 = H - G1
    P1 = np.zeros_like(H)
    P2 = np.zeros_like(H)
    residual = frobenius(G1 + G2 - H)
    iterations = 0
    for iterations in range(1, max_iters + 1):
        # Projection onto the affine set (with structural pins when present).
        r = (H - G1 - G2) / 2.0
        G1 = G1 + r
        G2 = G2 + r
        if masks is not None:
            pin1, pin2 = masks
            both = pin1 & pin2
            only1 = pin1 & ~pin2
            only2 = pin2 & ~pin1
            G1[both] = 0.0
            G2[both] = 0.0
            G2[only1] = H[only1] - 0.0
            G1[only1] = 0.0
            G1[only2] = H[only2] - 0.0
            G2[only2] = 0.0
        # Dykstra-corrected projection onto the product cone.
        A1 = G1 + P1
        G1 = psd_project(A1)
        P1 = A1 - G1
        A2 = G2 + P2
        G2 = partial_transpose(psd_project(partial_transpose(A2, d)), d)
        P2 = A2 - G2
        residual = frobenius(G1 + G2 - H)
        if residual <= stop_tol:
            break
    if residual <= feas_tol:
        if masks is not None:
            # The cone projections leave ~1e-15 eigensolver dust in the
            # pinned slots; scrub it so certificates carry the structural
            # zeros exactly (the cone margins below account for the change).
            pin1, pin2 = masks
            G1 = G1.copy()
            G2 = G2.copy()
            G1[pin1] = 0.0
            G2[pin2] = 0.0
            residual = frobenius(G1 + G2 - H)
        cert = DecompositionCertificate(
            H1=G1,
            H2=G2,
            residual=residual,
            min_eig_H1=float(np.linalg.eigvalsh(require_hermitian(G1, tol=np.inf))[0]),
            min_eig_H2_pt=float(
                np.linalg.eigvalsh(
                    require_hermitian(partial_transpose(G2, d), tol=np.inf)
                )[0]
            ),
        )
        return DecomposeResult(True, cert, residual, iterations)
    return DecomposeResult(False, None, residual, iterations)


def validate_certificate(
    choi: ChoiMatrix, cert: DecompositionCertificate, feas_tol: float = FEAS_TOL
) -> None:
    """Independently re-validate a decomposition certificate.

    Raises :class:`InvalidCertificateError` if the residual or either cone
    membership fails at ``feas_tol``.
    """
    H1 = as_matrix(cert.H1)
    H2 = as_matrix(cert.H2)
    problems = []
    res = frobenius(H1 + H2 - choi.H)
    if res > feas_tol:
        problems.append(f"residual {res:.3e} > {feas_tol:.1e}")
    m1 = float(np.linalg.eigvalsh(require_hermitian(H1, tol=1e-8))[0])
    if m1 < -feas_tol:
        problems.append(f"H1 min eigenvalue {m1:.3e}")
    m2 = float(
        np.linalg.eigvalsh(
            require_hermitian(partial_transpose(H2, choi.dim), tol=1e-8)
        )[0]
    )
    if m2 < -feas_tol:
        problems.append(f"H2 partial-transpose min eigenvalue {m2:.3e}")
    if problems:
        raise InvalidCertificateError("; ".join(problems))


# ---------------------------------------------------------------------------
# PPT witness search (dual certification of nondecomposability)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessCertificate:
    """PPT state with ``value = Tr(H rho) < 0``, re-validated from scratch."""

    rho: np.ndarray
    value: float


@dataclass(frozen=True)
class WitnessResult:
    found: bool
    certificate: WitnessCertificate | None
    best_value: float


def ppt_project(
    X, block_dim: int, tol: float = 1e-10, max_cycles: int = 200
) -> np.ndarray:
    """Dykstra projection onto the PPT states (PSD, PT-PSD, trace one)."""
    M = require_hermitian(as_matrix(X), tol=np.inf)
    size = M.shape[0]
    P1 = np.zeros_like(M)
    P2 = np.zeros_like(M)
    for _ in range(max_cycles):
        prev = M
        A1 = M + P1
        M = psd_project(A1)
        P1 = A1 - M
        A2 = M + P2
        M = partial_transpose(psd_project(partial_transpose(A2, block_dim)), block_dim)
        P2 = A2 - M
        M = M + (1.0 - np.trace(M).real) / size * np.eye(size)
        if frobenius(M - prev) <= tol:
            break
    return M


def random_ppt_state(block_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random PPT state: normalized projection of a random PSD matrix."""
    W = random_psd(2 * block_dim, rng)
    W = W / np.trace(W).real
    return ppt_project(W, block_dim)


def _tr(H: np.ndarray, rho: np.ndarray) -> float:
    return float(np.trace(H @ rho).real)


def witness_search(
    choi: ChoiMatrix,
    restarts: int = 16,
    witness_tol: float = WITNESS_TOL,
    seed: int = 0,
    max_iters: int = 120,
) -> WitnessResult:
    """Minimize ``Tr(H rho)`` over PPT states by projected subgradient.

    Steps ``rho <- Pi_PPT(rho - t H)`` start at ``t = 1 / ||H||_F`` and halve
    on non-decrease.  Half the restarts resume from the best state found so
    far (with the step reset), the others start from random PPT states; the
    search also seeds from the most negative eigenvectors of ``H`` and of its
    partial transpose.  Projections run at a loose tolerance during the
    search; a candidate below ``-witness_tol`` is re-projected tightly and
    re-validated from scratch against all three constraints before being
    returned as a certificate.  ``found=False`` is a valid outcome and not a
    decomposability proof.  Restarts stop early once the best value is two
    orders of magnitude below the witness threshold.
    """
    H = require_hermitian(choi.H)
    d = choi.dim
    rng = rng_for(seed, "witness-search")
    t0 = 1.0 / max(frobenius(H), 1e-12)

    def seeded_starts():
        w, V = np.linalg.eigh(H)
        yield np.outer(V[:, 0], V[:, 0].conj())
        wg, Vg = np.linalg.eigh(partial_transpose(H, d))
        yield partial_transpose(np.outer(Vg[:, 0], Vg[:, 0].conj()), d)
        while True:
            yield None

    best_val = np.inf
    best_rho = None
    starts = seeded_starts()
    for k in range(restarts):
        cand = next(starts)
        if cand is not None:
            rho = ppt_project(cand, d)
        elif best_rho is not None and k % 2 == 0:
            rho = best_rho.copy()
        else:
            rho = random_ppt_state(d, rng)
        t = t0
        val = _tr(H, rho)
        for _ in range(max_iters):
            prop = ppt_project(rho - t * H, d, tol=5e-9, max_cycles=60)
            v = _tr(H, prop)
            if v < val - 1e-15:
                rho, val = prop, v
            else:
                t *= 0.5
                if t < 1e-6 * t0:
                    break
        if val < best_val:
            best_val, best_rho = val, rho
        if k >= 3 and best_val < -100.0 * witness_tol:
            break

    if best_rho is not None and best_val < -witness_tol:
        rho = ppt_project(best_rho, d, tol=1e-12, max_cycles=2000)
        value = _tr(H, rho)
        trace_err = abs(np.trace(rho).real - 1.0)
        m_rho = float(np.linalg.eigvalsh(require_hermitian(rho, tol=1e-8))[0])
        m_pt = float(
            np.linalg.eigvalsh(
                require_hermitian(partial_transpose(rho, d), tol=1e-8)
            )[0]
        )
        if (
            value < -witness_tol
            and trace_err <= 1e-9
            and m_rho >= -1e-8
            and m_pt >= -1e-8
        ):
            return WitnessResult(True, WitnessCertificate(rho, value), value)
        return WitnessResult(False, None, min(best_val, value))
    return WitnessResult(False, None, best_val)


# ---------------------------------------------------------------------------
# Kadison-Schwarz constraints on genuine decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KadisonReport:
    """Margins of the Schwarz-type constraints a genuine split must satisfy.

    ``entry_margins[(i, j)]`` is the minimum eigenvalue of
    ``||phi(I)|| (phi1(E_jj) + phi2(E_ii)) - phi(E_ij)* phi(E_ij)``;
    ``block_margins`` repeats the two off-diagonal constraints assembled from
    the named face-form blocks (present only for face-form inputs).
    """

    norm_phi_identity: float
    entry_margins: dict[tuple[int, int], float]
    block_margins: dict[str, float]

    def all_pass(self, tol: float = 1e-8) -> bool:
        vals = list(self.entry_margins.values()) + list(self.block_margins.values())
        return all(v >= -tol for v in vals)


def _positional_blocks(M: np.ndarray, d: int):
    return {
        (i, j): M[(i - 1) * d : i * d, (j - 1) * d : j * d]
        for i in (1, 2)
        for j in (1, 2)
    }


def kadison_constraints(
    choi: ChoiMatrix,
    cert: DecompositionCertificate,
    feas_tol: float = FEAS_TOL,
    struct_tol: float = ZERO_ROW_TOL,
) -> KadisonReport:
    """Evaluate the Schwarz constraints of a decomposition certificate.

    The certificate is re-validated first (:class:`InvalidCertificateError`
    on failure).  For every pair ``(i, j)`` the Schwarz inequality for the
    split map bounds ``phi(E_ij)* phi(E_ij)`` by
    ``||phi(I)|| (phi1(E_jj) + phi2(E_ii))``; margins must be nonnegative up
    to the certificate's feasibility error.  For face-form inputs the two
    off-diagonal constraints are additionally assembled from the named blocks
    ``(Y, Z, T, ...)`` of ``H`` and of the certificate parts.
    """
    validate_certificate(choi, cert, feas_tol=feas_tol)
    d = choi.dim
    H = _positional_blocks(choi.H, d)
    H1 = _positional_blocks(as_matrix(cert.H1), d)
    H2 = _positional_blocks(as_matrix(cert.H2), d)
    norm = hermitian_norm(H[(1, 1)] + H[(2, 2)])
    entry = {}
    for i in (1, 2):
        for j in (1, 2):
            L = H[(i, j)].conj().T @ H[(i, j)]
            R = norm * (H1[(j, j)] + H2[(i, i)])
            entry[(i, j)] = float(
                np.linalg.eigvalsh(require_hermitian(R - L, tol=np.inf))[0]
            )

    block = {}
    try:
        from .choi import extract_blocks

        blocks = extract_blocks(choi, struct_tol=struct_tol)
    except Exception:
        blocks = None
    if blocks is not None:
        n = blocks.n
        Y, Z, T = blocks.Y, blocks.Z, blocks.T
        a1 = float(H1[(1, 1)][0, 0].real)
        C1 = H1[(1, 1)][0, 1:]
        B1 = H1[(1, 1)][1:, 1:]
        U1 = H1[(2, 2)][1:, 1:]
        a2 = float(H2[(1, 1)][0, 0].real)
        C2 = H2[(1, 1)][0, 1:]
        B2 = H2[(1, 1)][1:, 1:]
        U2 = H2[(2, 2)][1:, 1:]

        def bordered(scalar, row, mat):
            M = np.zeros((n + 1, n + 1), dtype=np.complex128)
            M[0, 0] = scalar
            M[0, 1:] = row
            M[1:, 0] = np.conj(row)
            M[1:, 1:] = mat
            return M

        lhs12 = bordered(
            np.linalg.norm(Z) ** 2, Z @ T, np.outer(Y.conj(), Y) + T.conj().T @ T
        )
        rhs12 = norm * bordered(a2, C2, B2 + U1)
        lhs21 = bordered(
            np.linalg.norm(Y) ** 2,
            Y @ T.conj().T,
            np.outer(Z.conj(), Z) + T @ T.conj().T,
        )
        rhs21 = norm * bordered(a1, C1, B1 + U2)
        block["offdiag_12"] = float(
            np.linalg.eigvalsh(require_hermitian(rhs12 - lhs12, tol=np.inf))[0]
        )
        block["offdiag_21"] = float(
            np.linalg.eigvalsh(require_hermitian(rhs21 - lhs21, tol=np.inf))[0]
        )
    return KadisonReport(norm, entry, block)
