"""Cone membership machinery: sphere minimization, SOS feasibility, powers.

Nonnegativity of a multihomogeneous form is equivalent to nonnegativity on
the product of unit spheres, so membership in the nonnegative cone reduces
to global minimization over that compact set (multistart projected descent
with a coarse grid pass and Newton polish).  SOS membership restricted to
half the support polytope is a PSD/affine feasibility problem handled by
reflection-accelerated alternating projections, with a projected-gradient
search for a separating moment functional when the primal stalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as _iterproduct

import numpy as np

from .errors import DomainError, ParityError
from .harmonics import check_on_spheres, reproducing_kernel
from .measures import axis_moment, usual_ip
from .numeric import FloatForm, block_normalize, sphere_points, tangent_project
from .poly import Poly, Shape, monomial_basis, unit_form
from .transform import apply_spectral

# -- global minimization over the product of spheres ------------------------


@dataclass(frozen=True)
class PosMinResult:
    value: float
    point: np.ndarray
    starts: int


def _grid_axis(n: int, count: int) -> np.ndarray:
    """Deterministic coarse covering of one sphere factor."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        theta = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if n == 3:
        # spherical Fibonacci spiral
        idx = np.arange(count) + 0.5
        phi = math.pi * (1 + math.sqrt(5)) * idx
        z = 1 - 2 * idx / count
        rad = np.sqrt(np.maximum(0.0, 1 - z * z))
        return np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)
    gen = np.random.Generator(np.random.Philox(key=20240501 + n))
    pts = gen.standard_normal((count, n))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _product_grid(shape: Shape, cap: int = 4096) -> np.ndarray | None:
    if any(n > 4 for n in shape.ns):
        return None
    per_block = max(2, int(cap ** (1.0 / shape.m)))
    axes = []
    for n, _ in shape.blocks:
        count = 2 if n == 1 else min(per_block, 64 if n == 2 else 256)
        axes.append(_grid_axis(n, count))
    total = math.prod(len(a) for a in axes)
    if total > 4 * cap:
        axes = [a[:: max(1, len(a) * len(axes) // (2 * cap))] for a in axes]
    combos = list(_iterproduct(*axes))
    return np.array([np.concatenate(c) for c in combos])


def _newton_polish(form: FloatForm, x: np.ndarray, iters: int) -> np.ndarray:
    shape = form.shape
    n, m = shape.n, shape.m
    best = x.copy()
    best_val = float(form.eval(best))
    cur = best.copy()
    for _ in range(iters):
        g = form.grad(cur)
        hess = form.hessian(cur)
        lams = np.array(
            [float(np.dot(g[sl], cur[sl])) for sl in shape.slices]
        )
        jac = np.zeros((n + m, n + m))
        res = np.zeros(n + m)
        jac[:n, :n] = hess
        for i, sl in enumerate(shape.slices):
            idx = np.arange(sl.start, sl.stop)
            jac[idx, idx] -= lams[i]
            jac[idx, n + i] = -cur[sl]
            jac[n + i, idx] = cur[sl]
            res[idx] = g[sl] - lams[i] * cur[sl]
            res[n + i] = 0.5 * (np.dot(cur[sl], cur[sl]) - 1.0)
        if np.max(np.abs(res)) < 1e-15:
            break
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
        dx = step[:n]
        norm = np.linalg.norm(dx)
        if norm > 0.5:
            dx *= 0.5 / norm
        cur = block_normalize(cur + dx, shape)
        val = float(form.eval(cur))
        if val < best_val:
            best_val, best = val, cur.copy()
    return best


def pos_min(
    p: Poly | FloatForm,
    budget: int = 64,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> PosMinResult:
    """Global minimum of the form over the product of unit spheres.

    Multistart projected gradient with Armijo backtracking, warmed by a
    random sample plus a coarse product grid for small blocks, finished by
    Newton polish on the best starts.  Deterministic given (seed, budget);
    never worse than the best sampled candidate.
    """
    if budget <= 0:
        raise DomainError("budget must be positive")
    form = p if isinstance(p, FloatForm) else FloatForm.from_poly(p)
    shape = form.shape
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
    pools = [sphere_points(rng, shape, max(256, 32 * budget))]
    grid = _product_grid(shape)
    if grid is not None:
        pools.append(grid)
    cand = np.vstack(pools)
    vals = form.eval(cand)
    order = np.argsort(vals, kind="stable")
    nstart = min(budget, len(order))
    x = cand[order[:nstart]].copy()
    fx = vals[order[:nstart]].copy()
    best_sample = float(vals[order[0]])
    best_sample_pt = cand[order[0]].copy()

    step = np.full(nstart, 0.1)
    scale = 1.0 + np.abs(fx)
    for _ in range(150):
        g = form.grad(x)
        gt = tangent_project(g, x, shape)
        gn2 = np.sum(gt * gt, axis=1)
        active = gn2 > 1e-26 * scale * scale
        if not active.any():
            break
        pending = active.copy()
        for _ in range(25):
            if not pending.any():
                break
            trial = block_normalize(
                x[pending] - step[pending, None] * gt[pending], shape
            )
            ftrial = form.eval(trial)
            ok = ftrial <= fx[pending] - 1e-4 * step[pending] * gn2[pending]
            idx = np.flatnonzero(pending)
            accepted = idx[ok]
            x[accepted] = trial[ok]
            fx[accepted] = ftrial[ok]
            step[accepted] *= 1.25
            rejected = idx[~ok]
            step[rejected] *= 0.5
            pending[accepted] = False
            pending[np.flatnonzero(pending)[step[pending] < 1e-18]] = False

    polish_order = np.argsort(fx, kind="stable")[: min(8, nstart)]
    best_val = best_sample
    best_pt = best_sample_pt
    for i in range(nstart):
        if fx[i] < best_val:
            best_val, best_pt = float(fx[i]), x[i].copy()
    for i in polish_order:
        polished = _newton_polish(form, x[i], 20)
        val = float(form.eval(polished))
        if val < best_val:
            best_val, best_pt = val, polished
    return PosMinResult(value=best_val, point=best_pt, starts=nstart)


def sphere_min_batch(
    shape: Shape,
    exponents: np.ndarray,
    coeff_rows: np.ndarray,
    rng: np.random.Generator,
    starts: int = 4,
    iters: int = 60,
    polish_iters: int = 8,
    pool: int = 256,
) -> np.ndarray:
    """Minimum over the sphere product for a batch of same-support forms.

    Same scheme as `pos_min` (sample + grid warm starts, projected Armijo
    descent, Newton polish) but vectorized across the batch, which is what
    makes desk-scale Monte Carlo volume runs affordable.  Returns one
    minimum per coefficient row.
    """
    exponents = np.asarray(exponents, dtype=np.int64)
    coeff_rows = np.asarray(coeff_rows, dtype=np.float64)
    count, n = coeff_rows.shape[0], shape.n
    pools = [sphere_points(rng, shape, pool)]
    grid = _product_grid(shape, cap=1024)
    if grid is not None:
        pools.append(grid)
    cand = np.vstack(pools)
    mono_vals = np.prod(cand[:, None, :] ** exponents[None, :, :], axis=2)
    cand_vals = mono_vals @ coeff_rows.T  # [grid, batch]
    order = np.argsort(cand_vals, axis=0, kind="stable")
    k = min(starts, cand.shape[0])
    sel = order[:k].T.reshape(-1)
    x = cand[sel].copy()
    sample_of = np.repeat(np.arange(count), k)
    coeffs = coeff_rows[sample_of]
    best = cand_vals[order[0], np.arange(count)].copy()

    grad_tables = []
    for j in range(n):
        mask = exponents[:, j] > 0
        lowered = exponents[mask].copy()
        factors = lowered[:, j].astype(np.float64)
        lowered[:, j] -= 1
        grad_tables.append((mask, lowered, factors))

    def feval(points, crows):
        mv = np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)
        return np.einsum("rt,rt->r", mv, crows)

    def geval(points, crows):
        out = np.zeros_like(points)
        for j, (mask, lowered, factors) in enumerate(grad_tables):
            if mask.any():
                mv = np.prod(points[:, None, :] ** lowered[None, :, :], axis=2)
                out[:, j] = np.einsum("rt,rt->r", mv, crows[:, mask] * factors)
        return out

    fx = feval(x, coeffs)
    step = np.full(len(x), 0.1)
    for _ in range(iters):
        g = geval(x, coeffs)
        gt = tangent_project(g, x, shape)
        gn2 = np.sum(gt * gt, axis=1)
        active = gn2 > 1e-26 * (1.0 + fx * fx)
        if not active.any():
            break
        pending = active.copy()
        for _ in range(20):
            ids = np.flatnonzero(pending)
            if not len(ids):
                break
            trial = block_normalize(x[ids] - step[ids, None] * gt[ids], shape)
            ftrial = feval(trial, coeffs[ids])
            ok = ftrial <= fx[ids] - 1e-4 * step[ids] * gn2[ids]
            good, bad = ids[ok], ids[~ok]
            x[good] = trial[ok]
            fx[good] = ftrial[ok]
            step[good] *= 1.25
            step[bad] *= 0.5
            pending[good] = False
            pending[bad[step[bad] < 1e-18]] = False

    # Newton polish the best row per sample, batched.
    hess_tables = {}
    for i in range(n):
        mask_i, low_i, fac_i = grad_tables[i]
        for j in range(i, n):
            mask_j = low_i[:, j] > 0
            if not mask_j.any():
                continue
            lowered = low_i[mask_j].copy()
            factors = fac_i[mask_j] * lowered[:, j]
            lowered[:, j] -= 1
            full_mask = np.flatnonzero(mask_i)[mask_j]
            hess_tables[(i, j)] = (full_mask, lowered, factors)

    rows_value = fx.reshape(count, k)
    top = np.argmin(rows_value, axis=1)
    pick = np.arange(count) * k + top
    px = x[pick].copy()
    pc = coeff_rows
    pf = fx[pick].copy()
    m = shape.m
    if hess_tables and polish_iters > 0:
        cur = px.copy()
        for _ in range(polish_iters):
            g = geval(cur, pc)
            hess = np.zeros((count, n, n))
            for (i, j), (cols, lowered, factors) in hess_tables.items():
                mv = np.prod(cur[:, None, :] ** lowered[None, :, :], axis=2)
                vals = np.einsum("rt,rt->r", mv, pc[:, cols] * factors)
                hess[:, i, j] = vals
                if i != j:
                    hess[:, j, i] = vals
            jac = np.zeros((count, n + m, n + m))
            res = np.zeros((count, n + m))
            jac[:, :n, :n] = hess
            for b, sl in enumerate(shape.slices):
                idx = np.arange(sl.start, sl.stop)
                lam = np.sum(g[:, sl] * cur[:, sl], axis=1)
                jac[:, idx, idx] -= lam[:, None]
                jac[:, idx, n + b] = -cur[:, sl]
                jac[:, n + b, idx] = cur[:, sl]
                res[:, idx] = g[:, sl] - lam[:, None] * cur[:, sl]
                res[:, n + b] = 0.5 * (np.sum(cur[:, sl] ** 2, axis=1) - 1.0)
            try:
                delta = np.linalg.solve(jac, -res[..., None])[..., 0]
            except np.linalg.LinAlgError:
                delta = np.linalg.pinv(jac) @ (-res[..., None])
                delta = delta[..., 0]
            dx = delta[:, :n]
            norms = np.linalg.norm(dx, axis=1, keepdims=True)
            dx = np.where(norms > 0.5, dx * (0.5 / np.maximum(norms, 1e-30)), dx)
            cur = block_normalize(cur + dx, shape)
            vals = feval(cur, pc)
            improved = vals < pf
            px[improved] = cur[improved]
            pf[improved] = vals[improved]
            cur[~improved] = px[~improved]
    return np.minimum(best, np.minimum(rows_value.min(axis=1), pf))


# -- SOS feasibility ---------------------------------------------------------


@dataclass
class SosStatus:
    verdict: str  # feasible | infeasible | undecided
    gram: np.ndarray | None = None
    gram_min_eig: float | None = None
    residual: float | None = None
    certificate: np.ndarray | None = None
    certificate_min_eig: float | None = None
    pairing: float | None = None
    iterations: int = 0
    message: str = ""
    half_basis: list = field(default_factory=list)


class _SosProblem:
    def __init__(self, shape: Shape):
        if not shape.is_even:
            raise ParityError(
                f"SOS needs even block degrees, got {shape.literal()}"
            )
        self.shape = shape
        self.half = shape.with_degrees(shape.half_degrees)
        self.half_basis = monomial_basis(self.half)
        self.full_basis = monomial_basis(shape)
        index = {mono: i for i, mono in enumerate(self.full_basis)}
        side = len(self.half_basis)
        cls = np.empty((side, side), dtype=np.int64)
        for i, a in enumerate(self.half_basis):
            for j, b in enumerate(self.half_basis):
                cls[i, j] = index[tuple(x + y for x, y in zip(a, b))]
        self.cls = cls
        self.sizes = np.bincount(cls.ravel(), minlength=len(self.full_basis))
        self.diag_cls = np.array([cls[i, i] for i in range(side)])
        self.side = side

    def coeffs(self, p: Poly) -> np.ndarray:
        return np.array(
            [float(p.terms.get(m, 0)) for m in self.full_basis]
        )

    def apply(self, gram_mat: np.ndarray) -> np.ndarray:
        return np.bincount(
            self.cls.ravel(),
            weights=gram_mat.ravel(),
            minlength=len(self.full_basis),
        )

    def lift(self, vec: np.ndarray) -> np.ndarray:
        return vec[self.cls]

    def project_affine(self, gram_mat: np.ndarray, target: np.ndarray) -> np.ndarray:
        gap = (self.apply(gram_mat) - target) / self.sizes
        return gram_mat - self.lift(gap)


def _project_psd(mat: np.ndarray) -> tuple[np.ndarray, float]:
    sym = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(sym)
    clipped = np.clip(vals, 0.0, None)
    return (vecs * clipped) @ vecs.T, float(vals[0])


def verify_sos_witness(p: Poly, gram_mat: np.ndarray) -> tuple[float, float]:
    """Independent check of a feasibility witness: (residual, min eig)."""
    prob = _SosProblem(p.shape)
    resid = float(np.max(np.abs(prob.apply(gram_mat) - prob.coeffs(p))))
    return resid, float(np.linalg.eigvalsh(0.5 * (gram_mat + gram_mat.T))[0])


def verify_certificate(p: Poly, mu: np.ndarray) -> tuple[float, float]:
    """Independent check of a dual certificate: (pairing, min eig)."""
    prob = _SosProblem(p.shape)
    pairing = float(prob.coeffs(p) @ mu)
    min_eig = float(np.linalg.eigvalsh(prob.lift(mu))[0])
    return pairing, min_eig


def _primal_search(
    prob: _SosProblem, target: np.ndarray, iters: int, tol: float
) -> tuple[np.ndarray | None, float, int]:
    z = prob.lift(target / prob.sizes)
    best_resid = math.inf
    best = None
    stall_mark = best_resid
    used = 0
    for it in range(iters):
        used = it + 1
        psd, _ = _project_psd(z)
        resid = float(np.max(np.abs(prob.apply(psd) - target)))
        if resid < best_resid:
            best_resid, best = resid, psd
        if resid <= tol:
            return psd, resid, used
        z = z + prob.project_affine(2 * psd - z, target) - psd
        if it % 400 == 399:
            if best_resid > stall_mark * 0.98 and best_resid > 50 * tol:
                break
            stall_mark = best_resid
    return (best if best_resid <= tol else None), best_resid, used


def _trace_weights(prob: _SosProblem) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(prob.diag_cls, minlength=len(prob.sizes)).astype(float)
    correction = (counts / prob.sizes) / float(np.sum(counts**2 / prob.sizes))
    return counts, correction


def _project_feasible(
    prob: _SosProblem,
    mu: np.ndarray,
    counts: np.ndarray,
    correction: np.ndarray,
    passes: int = 120,
    tol: float = 1e-13,
) -> np.ndarray:
    """Frobenius projection onto {structured, trace 1, PSD} moment vectors.

    Dykstra between the PSD cone (with correction term) and the affine set
    of class-constant matrices with unit trace (plain projection).
    """
    x = prob.lift(mu)
    cone_corr = np.zeros_like(x)
    out = mu
    for _ in range(passes):
        y, min_eig = _project_psd(x + cone_corr)
        cone_corr = x + cone_corr - y
        out = prob.apply(y) / prob.sizes
        out = out + (1.0 - float(counts @ out)) * correction
        x_new = prob.lift(out)
        delta = float(np.max(np.abs(x_new - x)))
        x = x_new
        if delta < tol and min_eig > -1e-12:
            break
    return out


def _dual_search(
    prob: _SosProblem,
    target: np.ndarray,
    iters: int,
) -> tuple[np.ndarray | None, float, float]:
    """Projected gradient for a separating moment functional.

    The gradient step and the Dykstra projection both live in the matrix
    Frobenius geometry, so the objective direction is the class-size
    weighted lift of the coefficients.
    """
    side = prob.side
    counts, correction = _trace_weights(prob)
    mu = prob.apply(np.eye(side) / side) / prob.sizes
    mu = mu + (1.0 - float(counts @ mu)) * correction
    grad = target / prob.sizes
    grad = grad / math.sqrt(float(np.sum(grad**2 * prob.sizes)))
    best_mu, best_pair, best_eig = None, 0.0, 0.0
    for t in range(iters):
        eta = 0.05 / (1.0 + t / 60.0)
        mu = _project_feasible(prob, mu - eta * grad, counts, correction)
        if t % 10 == 9 or t == iters - 1:
            min_eig = float(np.linalg.eigvalsh(prob.lift(mu))[0])
            pairing = float(target @ mu)
            if min_eig >= -1e-9 and pairing < best_pair:
                best_pair, best_mu, best_eig = pairing, mu.copy(), min_eig
                if pairing <= -1e-4:
                    break
    if best_mu is not None and best_pair <= -1e-6:
        return best_mu, best_pair, best_eig
    return None, best_pair, best_eig


def sos_feasibility(p: Poly, budget: int = 50_000, seed: int = 0) -> SosStatus:
    """Decide SOS membership with supports in half the degree box.

    Feasible comes with a PSD Gram witness reconstructing the coefficients;
    infeasible comes with a separating moment functional; `undecided` is a
    legal outcome when the boundary is too tight for the projection scheme.
    """
    prob = _SosProblem(p.shape)
    target = prob.coeffs(p)
    tol = 1e-9

    primal_iters = min(budget, 20_000)
    witness, resid, used = _primal_search(prob, target, primal_iters, tol)
    if witness is not None:
        min_eig = float(np.linalg.eigvalsh(witness)[0])
        return SosStatus(
            verdict="feasible",
            gram=witness,
            gram_min_eig=min_eig,
            residual=resid,
            iterations=used,
            half_basis=prob.half_basis,
        )

    dual_iters = max(200, min(budget // 4, 8_000))
    mu, pairing, min_eig = _dual_search(prob, target, dual_iters)
    if mu is not None:
        return SosStatus(
            verdict="infeasible",
            certificate=mu,
            certificate_min_eig=min_eig,
            pairing=pairing,
            residual=resid,
            iterations=used,
            half_basis=prob.half_basis,
            message="separating moment functional found",
        )

    # Distinguish a boundary stall from true infeasibility: nudge strictly
    # inside by a small multiple of the unit form and retry the primal.
    nudged = p + unit_form(p.shape) * Fraction(1, 10**6)
    target2 = prob.coeffs(nudged)
    witness2, resid2, used2 = _primal_search(
        prob, target2, min(budget, 10_000), tol
    )
    note = (
        "primal stalled; nudged problem feasible (boundary stall)"
        if witness2 is not None
        else "primal stalled; no certificate found either way"
    )
    return SosStatus(
        verdict="undecided",
        residual=resid,
        pairing=pairing,
        iterations=used + used2,
        half_basis=prob.half_basis,
        message=note,
    )


# -- powers of linear forms --------------------------------------------------


def linear_power_kernel(shape: Shape, v) -> Poly:
    """Blockwise power of the linear form pinned at v, expanded exactly."""
    if not shape.is_even:
        raise ParityError(f"kernel powers need even degrees: {shape.literal()}")
    v = check_on_spheres(shape, v)
    out = Poly.constant(shape, 1)
    for i, (sl, (_, d)) in enumerate(zip(shape.slices, shape.blocks)):
        degrees = tuple(1 if b == i else 0 for b in range(shape.m))
        linear = Poly(
            shape.with_degrees(degrees),
            {
                tuple(1 if t == j else 0 for t in range(shape.n)): v[j]
                for j in range(sl.start, sl.stop)
                if v[j] != 0
            },
        )
        out = out * linear**d
    return out


def kernel_image_check(shape: Shape, v) -> Fraction:
    """Exact identity: averaging the reproducing kernel yields the
    normalized power kernel, which pairs to 1 with the unit form.

    Returns 0 on success; raises on any deviation (regression guard).
    """
    v = check_on_spheres(shape, v)
    averaged = apply_spectral(reproducing_kernel(shape, v))
    scaled = linear_power_kernel(shape, v) * (1 / axis_moment(shape))
    diff = averaged - scaled
    deviation = max((abs(c) for c in diff.terms.values()), default=Fraction(0))
    if deviation != 0:
        raise DomainError(
            f"averaged kernel deviates from the normalized power kernel by {deviation}"
        )
    pairing = usual_ip(scaled, unit_form(shape))
    if pairing != 1:
        raise DomainError(f"normalized power kernel pairs to {pairing}, not 1")
    return Fraction(0)
