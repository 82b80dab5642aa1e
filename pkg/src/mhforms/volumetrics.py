"""Monte Carlo estimation of section volumes, mean width, and isotropy.

Directions are drawn uniformly from the unit sphere of the hyperplane
orthogonal to the unit form, in orthonormal frame coordinates.  The gauge of
the shifted nonnegative-cone section at a direction f is |min f| over the
product of spheres, so the volume ratio is the Monte Carlo mean of the gauge
raised to minus the section dimension, rooted back.  Heavy tails near the
cone boundary are clipped at a guard and both estimates are reported.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cones import pos_min, sphere_min_batch
from .errors import DomainError, ParityError
from .harmonics import (
    alpha_indices,
    check_on_spheres,
    harmonic_basis,
    harmonic_norms,
    reproducing_kernel,
)
from .measures import usual_ip
from .numeric import (
    FloatForm,
    Frame,
    build_frame,
    coeff_vector,
    orthonormal_basis_rows,
    sphere_points,
    worker_streams,
)
from .poly import Poly, Shape, monomial_basis, radial_power, unit_form

DEFAULT_VOLUME_SAMPLES = 10_000
DEFAULT_ISOTROPY_SAMPLES = 100_000
GAUGE_GUARD = 1e-9


@dataclass
class SectionFrame:
    """Orthonormal basis of the hyperplane orthogonal to the unit form."""

    shape: Shape
    frame: Frame

    @property
    def M(self) -> int:
        return self.shape.M

    @property
    def orthobasis(self) -> np.ndarray:
        return self.frame.section_rows

    @property
    def unit_vec(self) -> np.ndarray:
        return self.frame.rows[0]


def build_section_frame(shape: Shape) -> SectionFrame:
    if shape.M < 1:
        raise DomainError(
            f"section of {shape.literal()} is a point; nothing to sample"
        )
    return SectionFrame(shape=shape, frame=build_frame(shape))


def sample_direction(
    section: SectionFrame, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform unit direction in the section; returns (frame coords, coeffs)."""
    z = rng.standard_normal(section.M)
    z /= np.linalg.norm(z)
    return z, z @ section.orthobasis


@dataclass
class EstimateReport:
    quantity: str
    estimate: float
    stderr: float
    samples: int
    seed: int
    workers: int
    wall_time_s: float
    extras: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "quantity": self.quantity,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "samples": self.samples,
            "seed": self.seed,
            "workers": self.workers,
        }
        if include_timing:
            out["wall_time_s"] = self.wall_time_s
        out.update(self.extras)
        return out


def _batch_mean_se(values: np.ndarray, batches: int = 50) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    mean = float(values.mean())
    batches = max(2, min(batches, n))
    cut = (n // batches) * batches
    if cut >= 2 * batches:
        means = values[:cut].reshape(batches, -1).mean(axis=1)
        se = float(means.std(ddof=1) / math.sqrt(batches))
    else:
        se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def _split_counts(total: int, workers: int) -> list[int]:
    base, extra = divmod(total, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _run_workers(fn, seed: int, workers: int, counts: list[int]):
    streams = worker_streams(seed, workers)
    if workers == 1:
        return [fn(streams[0], counts[0])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(fn, streams[w], counts[w]) for w in range(workers)
        ]
        return [f.result() for f in futures]


def sup_norm(
    f: Poly | FloatForm,
    budget: int = 16,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> float:
    """Maximum absolute value over the product of spheres."""
    form = f if isinstance(f, FloatForm) else FloatForm.from_poly(f)
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
    low = pos_min(form, budget=budget, rng=rng).value
    high = -pos_min(-form, budget=budget, rng=rng).value
    return max(abs(low), abs(high))


def estimate_mu_pos(
    shape: Shape,
    samples: int = DEFAULT_VOLUME_SAMPLES,
    budget: int = 6,
    seed: int = 0,
    workers: int = 1,
    clip: float = GAUGE_GUARD,
    subspace_dim: int | None = None,
    return_samples: bool = False,
):
    """Root-volume of the shifted nonnegative section via the gauge integral.

    At every sampled unit direction f in the section the gauge is |min f|;
    the estimate is (mean gauge^-M)^(1/M) with M the integration dimension
    (the full section, or a fixed random slice when subspace_dim is given).
    A Jensen companion lower bound 1/mean(sup|f|) guards the heavy tail.
    """
    t0 = time.perf_counter()
    section = build_section_frame(shape)
    m_int = section.M if subspace_dim is None else int(subspace_dim)
    if not 1 <= m_int <= section.M:
        raise DomainError(f"subspace dimension {m_int} out of range")
    basis = monomial_basis(shape)
    exps = np.array(basis, dtype=np.int64)

    slice_map = None
    if subspace_dim is not None:
        pick = np.random.Generator(np.random.Philox(key=int(seed)))
        raw = pick.standard_normal((m_int, section.M))
        q, _ = np.linalg.qr(raw.T)
        slice_map = q.T[:m_int]

    def run(stream: np.random.Generator, count: int):
        z = stream.standard_normal((count, m_int))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        if slice_map is not None:
            z = z @ slice_map
        coeffs = z @ section.orthobasis
        mins = sphere_min_batch(
            shape,
            exps,
            np.vstack([coeffs, -coeffs]),
            stream,
            starts=budget,
        )
        low, low_neg = mins[:count], mins[count:]
        gauges = np.maximum(-low, 0.0)
        sups = np.maximum(np.abs(low), np.abs(low_neg))
        return gauges, sups

    counts = _split_counts(samples, workers)
    results = _run_workers(run, seed, workers, counts)
    gauges = np.concatenate([r[0] for r in results])
    sups = np.concatenate([r[1] for r in results])

    clipped = np.maximum(gauges, clip)
    integrand = clipped ** (-float(m_int))
    mean, se_mean = _batch_mean_se(integrand)
    estimate = mean ** (1.0 / m_int)
    stderr = estimate * se_mean / (m_int * mean) if mean > 0 else 0.0

    raw = np.maximum(gauges, 1e-300) ** (-float(m_int))
    mean_raw = float(raw.mean())
    sup_mean, sup_se = _batch_mean_se(sups)
    jensen = 1.0 / sup_mean if sup_mean > 0 else math.inf

    extras = {
        "estimate_unclipped": mean_raw ** (1.0 / m_int),
        "jensen_lower": jensen,
        "jensen_lower_stderr": jensen * sup_se / sup_mean if sup_mean > 0 else 0.0,
        "exponent": m_int,
        "gauge_guard": clip,
    }
    if subspace_dim is None:
        extras["estimate_dim_normalized"] = estimate ** (
            section.M / shape.dim_P
        )
    report = EstimateReport(
        quantity="pos_section_root_volume",
        estimate=estimate,
        stderr=stderr,
        samples=samples,
        seed=seed,
        workers=workers,
        wall_time_s=time.perf_counter() - t0,
        extras=extras,
    )
    if return_samples:
        return report, {"gauge": gauges, "sup": sups}
    return report


def _half_product_table(shape: Shape, frame: Frame):
    """Orthonormal half-degree basis and the pairing tensor against it.

    Returns (half dimension, W) with W[i, j, :] the Gram image of the
    product of the i-th and j-th orthonormal half-basis elements, so that
    the support-function matrix at a direction f is f . W.
    """
    if not shape.is_even:
        raise ParityError(f"odd half-degrees: {shape.literal()}")
    half = shape.with_degrees(shape.half_degrees)
    half_monos, half_rows = orthonormal_basis_rows(half)
    dim_h = len(half_monos)
    half_polys = []
    for row in half_rows:
        terms = {
            mono: float(row[i])
            for i, mono in enumerate(half_monos)
            if row[i] != 0.0
        }
        half_polys.append(terms)
    # Products are formed in float; the half basis is orthonormal to frame
    # accuracy, which is all the support function needs.
    full_index = {m: i for i, m in enumerate(frame.monomials)}
    table = np.zeros((dim_h, dim_h, len(frame.monomials)))
    for i in range(dim_h):
        for j in range(i, dim_h):
            prod = np.zeros(len(frame.monomials))
            for ma, ca in half_polys[i].items():
                for mb, cb in half_polys[j].items():
                    mono = tuple(x + y for x, y in zip(ma, mb))
                    prod[full_index[mono]] += ca * cb
            table[i, j] = prod
            table[j, i] = prod
    weighted = table @ frame.gram
    return dim_h, weighted


def mean_width_sq(
    shape: Shape,
    samples: int = DEFAULT_VOLUME_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    return_samples: bool = False,
):
    """Half mean width of the shifted SOS section.

    The support function at a unit direction f is the largest eigenvalue of
    the matrix pairing f with products of orthonormal half-degree basis
    elements; the estimate is its Monte Carlo mean over the section sphere.
    """
    t0 = time.perf_counter()
    section = build_section_frame(shape)
    dim_h, weighted = _half_product_table(shape, section.frame)

    def run(stream: np.random.Generator, count: int):
        z = stream.standard_normal((count, section.M))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        coeffs = z @ section.orthobasis
        mats = np.einsum("pd,ijd->pij", coeffs, weighted)
        return np.linalg.eigvalsh(mats)[:, -1]

    counts = _split_counts(samples, workers)
    results = _run_workers(run, seed, workers, counts)
    lam = np.concatenate(results)
    mean, se = _batch_mean_se(lam)
    report = EstimateReport(
        quantity="sq_section_half_mean_width",
        estimate=mean,
        stderr=se,
        samples=samples,
        seed=seed,
        workers=workers,
        wall_time_s=time.perf_counter() - t0,
        extras={"half_dim": dim_h, "lambda_max_min": float(lam.min())},
    )
    if return_samples:
        return report, {"lambda_max": lam}
    return report


class KernelEvaluator:
    """Vectorized reproducing-kernel coefficients at float sphere points."""

    def __init__(self, shape: Shape):
        self.shape = shape
        self.basis = monomial_basis(shape)
        index = {m: i for i, m in enumerate(self.basis)}
        forms: list[FloatForm] = []
        rows: list[np.ndarray] = []
        weights: list[float] = []
        for alpha in alpha_indices(shape):
            lift = tuple(d - a for d, a in zip(shape.degrees, alpha))
            rad = radial_power(shape, lift)
            for h, nrm in zip(
                harmonic_basis(shape, alpha), harmonic_norms(shape, alpha)
            ):
                forms.append(FloatForm.from_poly(h))
                expanded = rad * h
                row = np.zeros(len(self.basis))
                for mono, c in expanded.terms.items():
                    row[index[mono]] = float(c)
                rows.append(row)
                weights.append(1.0 / float(nrm))
        self.forms = forms
        self.rows = np.array(rows)
        self.weights = np.array(weights)

    def kernel_coeffs(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        vals = np.stack([f.eval(points) for f in self.forms], axis=-1)
        return (vals * self.weights) @ self.rows

    def kernel_value(self, v: np.ndarray, w: np.ndarray) -> float:
        """Kernel pinned at v, evaluated at the on-sphere point w."""
        vv = np.stack([f.eval(np.asarray(v, dtype=np.float64)) for f in self.forms])
        ww = np.stack([f.eval(np.asarray(w, dtype=np.float64)) for f in self.forms])
        return float(np.sum(self.weights * vv * ww))


def kernel_profile(shape: Shape, ts) -> float:
    """Kernel value as a function of the blockwise inner products.

    Built from axis-aligned representatives; a single scalar profile exists
    only for one block, so the multi-block version takes one t per block.
    """
    ts = tuple(float(t) for t in ts)
    if len(ts) != shape.m:
        raise DomainError("need one inner product per block")
    v = np.zeros(shape.n)
    w = np.zeros(shape.n)
    for t, sl, (n, _) in zip(ts, shape.slices, shape.blocks):
        if not -1.0 <= t <= 1.0:
            raise DomainError(f"inner product {t} outside [-1, 1]")
        v[sl.stop - 1] = 1.0
        if n == 1:
            if abs(abs(t) - 1.0) > 1e-12:
                raise DomainError("one-variable blocks only admit t = ±1")
            w[sl.stop - 1] = math.copysign(1.0, t)
        else:
            w[sl.stop - 1] = t
            w[sl.stop - 2] = math.sqrt(max(0.0, 1.0 - t * t))
    return KernelEvaluator(shape).kernel_value(v, w)


def phi_norm_exact(shape: Shape, v) -> Fraction:
    """Exact squared length of the centered, scaled kernel at a rational v."""
    v = check_on_spheres(shape, v)
    p_v = reproducing_kernel(shape, v)
    centered = p_v - unit_form(shape)
    return usual_ip(centered, centered) / shape.M


def isotropy_check(
    shape: Shape,
    samples: int = DEFAULT_ISOTROPY_SAMPLES,
    seed: int = 0,
    workers: int = 1,
    probes: int = 20,
):
    """Second-moment identity of the pushforward of centered kernels.

    Draws sphere points, forms the centered scaled kernel direction, and
    checks that M times the squared pairing with fixed unit probes in the
    section averages to 1; also reports the centroid length against its
    standard error.
    """
    t0 = time.perf_counter()
    section = build_section_frame(shape)
    evaluator = KernelEvaluator(shape)
    m_dim = section.M
    probe_rng = np.random.Generator(np.random.Philox(key=int(seed)).jumped(10**6))
    probe_z = probe_rng.standard_normal((probes, m_dim))
    probe_z /= np.linalg.norm(probe_z, axis=1, keepdims=True)

    to_section = section.frame.gram @ section.orthobasis.T
    r_vec = coeff_vector(unit_form(shape), section.frame.monomials)

    def run(stream: np.random.Generator, count: int):
        pts = sphere_points(stream, shape, count)
        coeffs = evaluator.kernel_coeffs(pts)
        phi = (coeffs - r_vec) / math.sqrt(m_dim)
        z = phi @ to_section  # section coordinates of each direction
        pairings = z @ probe_z.T  # [count, probes]
        return pairings, z

    counts = _split_counts(samples, workers)
    results = _run_workers(run, seed, workers, counts)
    pairings = np.concatenate([r[0] for r in results])
    zs = np.concatenate([r[1] for r in results])

    deviations = []
    probe_se = []
    for q in range(probes):
        vals = m_dim * pairings[:, q] ** 2
        mean, se = _batch_mean_se(vals)
        deviations.append(abs(mean - 1.0))
        probe_se.append(se)
    centroid = zs.mean(axis=0)
    coord_se = zs.std(axis=0, ddof=1) / math.sqrt(len(zs))
    centroid_norm = float(np.linalg.norm(centroid))
    centroid_se = float(np.linalg.norm(coord_se))
    max_dev = float(max(deviations))
    report = EstimateReport(
        quantity="kernel_pushforward_isotropy",
        estimate=max_dev,
        stderr=float(max(probe_se)),
        samples=samples,
        seed=seed,
        workers=workers,
        wall_time_s=time.perf_counter() - t0,
        extras={
            "probes": probes,
            "deviations": [float(d) for d in deviations],
            "probe_stderr": [float(s) for s in probe_se],
            "centroid_norm": centroid_norm,
            "centroid_stderr": centroid_se,
            "direction_norm_mean": float(np.linalg.norm(zs, axis=1).mean()),
        },
    )
    return report
