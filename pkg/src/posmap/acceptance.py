"""Built-in verification battery reproducing the library's headline claims.

Each criterion is a standalone check with pinned tolerances; the battery is
what ``posmap verify`` runs and what the acceptance test suite asserts.
All randomness is derived from one seed, stage by stage.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .choi import (
    ChoiBlocks,
    ChoiMatrix,
    assemble_blocks,
    choi_from_map,
    extract_blocks,
    row_abs,
    row_abs_product,
)
from .cpdecomp import (
    ccp_check,
    cp_check,
    decompose,
    kadison_constraints,
    witness_search,
)
from .exceptions import PosmapError
from .matkernel import frobenius, partial_transpose, psd_check, require_hermitian
from .positivity import (
    CERTIFIED,
    VIOLATION_FOUND,
    admissible_combination,
    block_positive_2x2,
    certify_positivity,
    coupling_bound_check,
)
from .rand import random_psd, random_unitary, rng_for
from .tang import (
    TangParams,
    build_pipeline,
    param_grid,
    phi0_apply,
    resolve_y_entry,
    tang_choi,
)
from .extremal import (
    CanonicalForm,
    canonicalize,
    check_row_dependence,
    classify_degenerate,
    compress,
    random_equality_blocks,
    scramble_blocks,
)

REFERENCE_PARAMS = (
    TangParams(0.9, 0.12),
    TangParams(0.5, 1.0 / 24.0),
    TangParams(0.3, 0.01),
)


@dataclass(frozen=True)
class CriterionResult:
    key: str
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(key, name, passed, detail, started) -> CriterionResult:
    return CriterionResult(key, name, bool(passed), detail, time.perf_counter() - started)


def _raw_choi_table(mu: float, eps: float) -> np.ndarray:
    """The printed raw Choi matrix, restated entry by entry."""
    H = np.zeros((8, 8), dtype=np.complex128)
    for k, v in enumerate((1 - eps, 1, 2, 1, mu**2, 2, 2, 1)):
        H[k, k] = v
    for (i, j), v in {
        (0, 5): -1, (1, 6): -2, (2, 4): mu, (2, 7): -2, (4, 7): -mu,
    }.items():
        H[i, j] = v
        H[j, i] = v
    return H


def criterion_choi_reproduction() -> CriterionResult:
    """C1: the raw Choi matrix reproduces its closed form, in under 1 ms."""
    started = time.perf_counter()
    tang_choi(REFERENCE_PARAMS[0])  # warm-up outside the timed window
    worst = 0.0
    for params in REFERENCE_PARAMS:
        t0 = time.perf_counter()
        built = tang_choi(params)
        elapsed = time.perf_counter() - t0
        worst = max(worst, elapsed)
        table = _raw_choi_table(params.mu, params.eps)
        if not np.array_equal(built.H, table):
            return _result(
                "C1", "raw Choi reproduction", False,
                f"entrywise mismatch at mu={params.mu}, eps={params.eps}", started,
            )
        generic = choi_from_map(lambda A: phi0_apply(params, A), 3)
        if not np.array_equal(built.H, generic.H):
            return _result(
                "C1", "raw Choi reproduction", False,
                "direct assembly differs from the map-action route", started,
            )
        if elapsed >= 1e-3:
            return _result(
                "C1", "raw Choi reproduction", False,
                f"construction took {elapsed * 1e3:.3f} ms >= 1 ms", started,
            )
    return _result(
        "C1", "raw Choi reproduction", True,
        f"3 parameter points exact; worst build {worst * 1e6:.0f} us", started,
    )


def criterion_pipeline(grid_k: int = 5) -> CriterionResult:
    """C2: normalization residuals across the parameter grid, under 1 s."""
    started = time.perf_counter()
    bounds = {
        "unitality": 1e-9,
        "W_unitarity": 1e-10,
        "corner_system": 1e-10,
        "rotation_identity": 1e-10,
        "zero_pattern": 1e-9,
    }
    worst = {k: 0.0 for k in bounds}
    for params in param_grid(grid_k):
        res = build_pipeline(params).residuals()
        for k in bounds:
            worst[k] = max(worst[k], res[k])
    elapsed = time.perf_counter() - started
    failures = [k for k in bounds if worst[k] > bounds[k]]
    if elapsed >= 1.0:
        failures.append(f"runtime {elapsed:.2f}s >= 1s")
    detail = ", ".join(f"{k}={worst[k]:.2e}" for k in bounds) + f"; {elapsed:.2f}s"
    return _result("C2", "normalization pipeline", not failures, detail, started)


def criterion_positivity(grid_k: int = 5, budget: int = 64, seed: int = 0) -> CriterionResult:
    """C3: positivity certified on the grid; neither CP nor coCP."""
    started = time.perf_counter()
    worst_margin = np.inf
    for params in param_grid(grid_k):
        pipe = build_pipeline(params)
        blocks = extract_blocks(pipe.Hfinal)
        verdict = certify_positivity(blocks, budget=budget, seed=seed)
        if verdict.status != CERTIFIED:
            return _result(
                "C3", "positivity of the family", False,
                f"not certified at mu={params.mu:.3f}, eps={params.eps:.4f} "
                f"(margin {verdict.margin:.3e})", started,
            )
        worst_margin = min(worst_margin, verdict.margin)
        if cp_check(blocks).holds or ccp_check(blocks).holds:
            return _result(
                "C3", "positivity of the family", False,
                f"CP/coCP unexpectedly holds at mu={params.mu:.3f}", started,
            )
    pipe = build_pipeline(TangParams(0.9, 0.12))
    h_min = psd_check(pipe.Hfinal.H).min_eigenvalue
    g_min = psd_check(partial_transpose(pipe.Hfinal.H, 4)).min_eigenvalue
    ok = h_min < -1e-3 and g_min < -1e-3
    return _result(
        "C3", "positivity of the family", ok,
        f"certified margin >= {worst_margin:.2e}; min eig H {h_min:.4f}, "
        f"min eig H^G {g_min:.4f}", started,
    )


def criterion_nondecomposability(
    seed: int = 0, restarts: int = 16, max_iters: int = 20000
) -> CriterionResult:
    """C4: PPT witness plus a failed split search on the reference point."""
    started = time.perf_counter()
    H0 = tang_choi(TangParams(0.9, 0.12))
    wit = witness_search(H0, restarts=restarts, seed=seed)
    if not wit.found:
        return _result(
            "C4", "nondecomposability certificate", False,
            f"no witness found (best value {wit.best_value:.3e})", started,
        )
    rho = wit.certificate.rho
    value = float(np.trace(H0.H @ rho).real)
    checks = {
        "value": value < -1e-6,
        "trace": abs(np.trace(rho).real - 1.0) <= 1e-9,
        "psd": np.linalg.eigvalsh(require_hermitian(rho))[0] >= -1e-8,
        "ppt": np.linalg.eigvalsh(require_hermitian(partial_transpose(rho, 4)))[0]
        >= -1e-8,
    }
    dec = decompose(H0, max_iters=max_iters)
    exclusivity = not (dec.decomposed and wit.found)
    ok = all(checks.values()) and not dec.decomposed and exclusivity
    elapsed = time.perf_counter() - started
    if elapsed >= 60.0:
        return _result("C4", "nondecomposability certificate", False,
                       f"runtime {elapsed:.1f}s >= 60s", started)
    return _result(
        "C4", "nondecomposability certificate", ok,
        f"witness value {value:.4e}; split residual {dec.residual:.2e} after "
        f"{dec.iterations} iterations; {elapsed:.1f}s", started,
    )


def criterion_strictness(grid_k: int = 5) -> CriterionResult:
    """C5: the coupling bound is strict everywhere on the grid."""
    started = time.perf_counter()
    worst = np.inf
    for params in param_grid(grid_k):
        blocks = extract_blocks(build_pipeline(params).Hfinal)
        bound = coupling_bound_check(blocks)
        if not bound.holds or bound.margin <= 1e-7:
            return _result(
                "C5", "strict coupling bound", False,
                f"margin {bound.margin:.3e} at mu={params.mu:.3f}", started,
            )
        worst = min(worst, bound.margin)
    return _result("C5", "strict coupling bound", True,
                   f"smallest margin {worst:.3e}", started)


def criterion_row_calculus(trials: int = 200, seed: int = 0) -> CriterionResult:
    """C6: the row-vector absolute-value identities over random trials."""
    started = time.perf_counter()
    rng = rng_for(seed, "criterion-row-calculus")
    worst1 = worst2 = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        X = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        X2 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        xi = X.conj() / np.linalg.norm(X)
        lhs = row_abs(X)
        rhs = np.linalg.norm(X) * np.outer(xi, xi.conj())
        worst1 = max(worst1, frobenius(lhs - rhs))
        prod = row_abs_product(X, X2)
        direct = row_abs(X) @ row_abs(X2)
        worst2 = max(worst2, frobenius(prod - direct))
    ok = worst1 <= 1e-11 and worst2 <= 1e-11
    return _result(
        "C6", "row-vector calculus", ok,
        f"{trials} trials; projector identity {worst1:.2e}, product identity "
        f"{worst2:.2e}", started,
    )


def _certified_triple(n, rng):
    """Triple block-positive by construction (S small against P, Q floors)."""
    P = random_psd(n, rng) + 0.3 * np.eye(n)
    Q = random_psd(n, rng) + 0.3 * np.eye(n)
    floor = np.sqrt(
        np.linalg.eigvalsh(P)[0] * np.linalg.eigvalsh(Q)[0]
    )
    S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S *= 0.4 * floor / max(np.linalg.norm(S, 2), 1e-12)
    return P, S, Q


def _violating_triple(n, rng):
    P = random_psd(n, rng, rank=max(1, n - 1)) + 0.05 * np.eye(n)
    Q = random_psd(n, rng, rank=max(1, n - 1)) + 0.05 * np.eye(n)
    S = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S *= 4.0 * max(np.linalg.norm(P, 2), np.linalg.norm(Q, 2)) / np.linalg.norm(S, 2)
    return P, S, Q


def criterion_blockpos_equivalence(
    certified: int = 50, combos: int = 100, seed: int = 0
) -> CriterionResult:
    """C7: the scalar-combination form of block-positivity, both directions."""
    started = time.perf_counter()
    rng = rng_for(seed, "criterion-blockpos")
    done = 0
    violations = 0
    worst = np.inf
    while done < certified:
        n = int(rng.integers(2, 4))
        P, S, Q = _certified_triple(n, rng)
        verdict = block_positive_2x2(P, S, Q, budget=32, seed=int(rng.integers(2**31)))
        if verdict.status != CERTIFIED:
            return _result(
                "C7", "block-positivity equivalence", False,
                "constructed-safe triple was not certified "
                f"(margin {verdict.margin:.3e})", started,
            )
        for _ in range(combos):
            p = float(rng.uniform(0.0, 2.0))
            q = float(rng.uniform(0.0, 2.0))
            r = 1.0 if rng.random() < 0.5 else float(rng.random())
            s = r * np.sqrt(p * q) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            combo = admissible_combination(P, S, Q, p, q, s)
            v = psd_check(combo, tol=1e-9)
            worst = min(worst, v.min_eigenvalue)
            if not v.is_psd:
                return _result(
                    "C7", "block-positivity equivalence", False,
                    f"certified triple produced a combination with min "
                    f"eigenvalue {v.min_eigenvalue:.3e}", started,
                )
        done += 1
    for _ in range(15):
        n = int(rng.integers(2, 4))
        P, S, Q = _violating_triple(n, rng)
        verdict = block_positive_2x2(P, S, Q, budget=32, seed=int(rng.integers(2**31)))
        if verdict.status != VIOLATION_FOUND:
            continue
        lam1, lam2 = verdict.witness.lam
        p, q = abs(lam1) ** 2, abs(lam2) ** 2
        s = np.conj(lam1) * lam2
        combo = admissible_combination(P, S, Q, p, q, s)
        if psd_check(combo, tol=1e-9).is_psd:
            return _result(
                "C7", "block-positivity equivalence", False,
                "violation witness failed to produce a non-PSD combination",
                started,
            )
        violations += 1
    if violations == 0:
        return _result("C7", "block-positivity equivalence", False,
                       "no violating triples were exercised", started)
    return _result(
        "C7", "block-positivity equivalence", True,
        f"{certified} certified triples x {combos} combos (min eig {worst:.2e}); "
        f"{violations} violations cross-checked", started,
    )


def _random_face_blocks(n, rng, kind):
    """Random face-form blocks: generic, CP-shaped, or coCP-shaped."""
    if kind == "generic":
        B = random_psd(n, rng) - 0.3 * np.eye(n)
        U = random_psd(n, rng) - 0.3 * np.eye(n)
        T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return ChoiBlocks(
            a=float(rng.uniform(0.0, 2.0)),
            x=0j,
            C=rng.standard_normal(n) + 1j * rng.standard_normal(n),
            Y=rng.standard_normal(n) + 1j * rng.standard_normal(n),
            Z=rng.standard_normal(n) + 1j * rng.standard_normal(n),
            B=(B + B.conj().T) / 2,
            T=T,
            U=(U + U.conj().T) / 2,
        )
    K = random_psd(2 * n + 1, rng)
    a = float(K[0, 0].real)
    C = K[0, 1 : n + 1].copy()
    row = K[0, n + 1 :].copy()
    B = K[1 : n + 1, 1 : n + 1].copy()
    mid = K[1 : n + 1, n + 1 :].copy()
    U = K[n + 1 :, n + 1 :].copy()
    zero = np.zeros(n, dtype=np.complex128)
    if kind == "cp":
        return ChoiBlocks(a=a, x=0j, C=C, Y=row, Z=zero, B=B, T=mid, U=U)
    return ChoiBlocks(a=a, x=0j, C=C, Y=zero, Z=row, B=B, T=mid.conj().T, U=U)


def criterion_cp_crossvalidation(trials: int = 100, seed: int = 0) -> CriterionResult:
    """C8: structural CP/coCP tests agree with the direct spectral tests."""
    started = time.perf_counter()
    rng = rng_for(seed, "criterion-cp-crossval")
    kinds = ["generic", "cp", "ccp"]
    for k in range(trials):
        n = int(rng.integers(2, 5))
        blocks = _random_face_blocks(n, rng, kinds[k % 3])
        H = assemble_blocks(blocks)
        cp = cp_check(blocks)
        ccp = ccp_check(blocks)
        direct_cp = psd_check(H.H).is_psd
        direct_ccp = psd_check(partial_transpose(H.H, H.dim)).is_psd
        if cp.holds != direct_cp or ccp.holds != direct_ccp:
            return _result(
                "C8", "complete (co)positivity cross-validation", False,
                f"disagreement on trial {k} (kind {kinds[k % 3]})", started,
            )
    return _result(
        "C8", "complete (co)positivity cross-validation", True,
        f"{trials} random face-form matrices, zero disagreements", started,
    )


def criterion_decomposition_roundtrip(
    instances: int = 50, seed: int = 0
) -> CriterionResult:
    """C9: random PSD + PT-PSD inputs are split back with valid constraints."""
    started = time.perf_counter()
    rng = rng_for(seed, "criterion-decompose")
    worst_res = 0.0
    worst_margin = np.inf
    for k in range(instances):
        d = int(rng.integers(2, 5))
        A = random_psd(2 * d, rng)
        Bm = partial_transpose(random_psd(2 * d, rng), d)
        H = ChoiMatrix.from_array(A + Bm)
        out = decompose(H, max_iters=20000)
        if not out.decomposed or out.residual > 1e-7:
            return _result(
                "C9", "decomposable round trip", False,
                f"instance {k} (dim {2 * d}) residual {out.residual:.3e}", started,
            )
        worst_res = max(worst_res, out.residual)
        report = kadison_constraints(H, out.certificate)
        margins = list(report.entry_margins.values()) + list(
            report.block_margins.values()
        )
        worst_margin = min(worst_margin, min(margins))
        if not report.all_pass(tol=1e-7):
            return _result(
                "C9", "decomposable round trip", False,
                f"instance {k} has constraint margin {min(margins):.3e}", started,
            )
    return _result(
        "C9", "decomposable round trip", True,
        f"{instances} instances; residual <= {worst_res:.2e}, "
        f"constraint margins >= {worst_margin:.2e}", started,
    )


def _degenerate_fixture(n, rng, kind):
    norm = rng.uniform(0.3, 0.8)
    row = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    row *= norm / np.linalg.norm(row)
    gram = np.outer(row.conj(), row)
    zero = np.zeros(n, dtype=np.complex128)
    eye = np.eye(n, dtype=np.complex128)
    if kind == "cp":
        return ChoiBlocks(a=1.0, x=0j, C=zero.copy(), Y=row, Z=zero.copy(),
                          B=eye - gram, T=np.zeros((n, n), np.complex128), U=gram)
    return ChoiBlocks(a=1.0, x=0j, C=zero.copy(), Y=zero.copy(), Z=row,
                      B=eye - gram, T=np.zeros((n, n), np.complex128), U=gram)


def criterion_equality_suite(
    fixtures: int = 100, compressions: int = 20, seed: int = 0
) -> CriterionResult:
    """C10: the saturated-bound structure theory on scrambled fixtures."""
    started = time.perf_counter()
    rng = rng_for(seed, "criterion-equality")
    for k in range(fixtures):
        n = int(rng.integers(2, 5))
        blocks, truth = random_equality_blocks(n, rng)
        scrambled, _ = scramble_blocks(blocks, rng)
        dep = check_row_dependence(scrambled)
        if not dep.dependent or dep.singular_values[1] > 1e-8:
            return _result(
                "C10", "saturated-bound structure suite", False,
                f"fixture {k}: dependence failed (s2 = "
                f"{dep.singular_values[1]:.2e})", started,
            )
        canon = canonicalize(scrambled)
        errs = (
            abs(abs(canon.y) - abs(truth["y"])),
            abs(abs(canon.z) - abs(truth["z"])),
            abs(canon.u - truth["u"]),
            abs(abs(canon.t) - abs(truth["t"])),
        )
        if max(errs) > 1e-8:
            return _result(
                "C10", "saturated-bound structure suite", False,
                f"fixture {k}: canonical recovery error {max(errs):.2e}", started,
            )
        for _ in range(compressions):
            r = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            r /= np.linalg.norm(r)
            res = compress(canon, r)
            if res.margin < -1e-9:
                return _result(
                    "C10", "saturated-bound structure suite", False,
                    f"fixture {k}: compression margin {res.margin:.3e}", started,
                )
    for kind in ("cp", "cocp"):
        for _ in range(5):
            n = int(rng.integers(2, 5))
            fix = _degenerate_fixture(n, rng, "cp" if kind == "cp" else "ccp")
            fix, _ = scramble_blocks(fix, rng)
            cls = classify_degenerate(fix)
            if cls.verdict != kind:
                return _result(
                    "C10", "saturated-bound structure suite", False,
                    f"degenerate fixture classified {cls.verdict!r}, "
                    f"expected {kind!r}", started,
                )
    elapsed = time.perf_counter() - started
    if elapsed >= 30.0:
        return _result("C10", "saturated-bound structure suite", False,
                       f"runtime {elapsed:.1f}s >= 30s", started)
    return _result(
        "C10", "saturated-bound structure suite", True,
        f"{fixtures} scrambled fixtures x {compressions} compressions; "
        f"degenerate classes confirmed; {elapsed:.1f}s", started,
    )


def criterion_coupling_entry() -> CriterionResult:
    """C11: which printed closed form the computed coupling entry matches."""
    started = time.perf_counter()
    variants = []
    worst = 0.0
    for params in REFERENCE_PARAMS:
        res = resolve_y_entry(build_pipeline(params))
        variants.append(res.variant)
        worst = max(worst, abs(res.observed - res.rho_candidate))
    consistent = len(set(variants)) == 1 and variants[0] != "neither"
    return _result(
        "C11", "coupling-entry variant resolution", consistent and variants[0] == "rho",
        f"variant {variants[0]!r} at all three points (residual {worst:.2e}); "
        "the matrix display wins over the block list", started,
    )


def run_battery(grid_k: int = 3, seed: int = 0, smoke: bool = False) -> list[CriterionResult]:
    """Run every criterion; ``smoke`` shrinks the stochastic batteries."""
    if smoke:
        sizes = dict(c6=50, c7=(10, 20), c8=24, c9=8, c10=(12, 5), restarts=8,
                     iters=4000)
    else:
        sizes = dict(c6=200, c7=(50, 100), c8=100, c9=50, c10=(100, 20),
                     restarts=16, iters=20000)
    results = [
        criterion_choi_reproduction(),
        criterion_pipeline(grid_k=max(grid_k, 2) if grid_k > 1 else 1),
        criterion_positivity(grid_k=grid_k, seed=seed),
        criterion_nondecomposability(seed=seed, restarts=sizes["restarts"],
                                     max_iters=sizes["iters"]),
        criterion_strictness(grid_k=grid_k),
        criterion_row_calculus(trials=sizes["c6"], seed=seed),
        criterion_blockpos_equivalence(certified=sizes["c7"][0],
                                       combos=sizes["c7"][1], seed=seed),
        criterion_cp_crossvalidation(trials=sizes["c8"], seed=seed),
        criterion_decomposition_roundtrip(instances=sizes["c9"], seed=seed),
        criterion_equality_suite(fixtures=sizes["c10"][0],
                                 compressions=sizes["c10"][1], seed=seed),
        criterion_coupling_entry(),
    ]
    return results
