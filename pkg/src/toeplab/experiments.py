"""Seeded Monte Carlo trials, deterministic sweeps and result writers."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence
from xml.sax.saxutils import escape

import numpy as np
from scipy import stats

from .domains import CurveTube, Plane, Region, annulus_bounds_jordan
from .errors import NoConvergence, PreconditionViolated
from .grushin import alpha, grushin_blocks, perturbed_effective, phi, singular_values_E_pm
from .linalg import eigenvalues, lu_log_abs_det, operator_norm_estimate, smallest_singular_value
from .operators import OperatorSpec, build_toeplitz, eigenvalue_spacing_check
from .quasimode import build_quasimode
from .randmat import SeededStream, perturb, sample_gaussian_matrix
from .symbol import LaurentSymbol, dist_to_curve, dist_to_curve_many, eval_curve, preimage_measure
from .symparse import format_symbol

SCHEMA_VERSION = 1
TWO_PI = 2.0 * math.pi
QUANTILES = (("q50", 0.5), ("q90", 0.9), ("q99", 0.99))


def symbol_id(sym: LaurentSymbol) -> str:
    return sym.name or format_symbol(sym)


def check_delta_window(N: int, delta: float, band: int, eps0: float = 0.9, C: float = 1.0) -> bool:
    """Warn unless ``C exp(-N^eps0 / (2M)) <= delta <= N^-4 / C``."""
    lower = C * math.exp(-(N**eps0) / (2 * band))
    upper = N**-4 / C
    ok = lower <= delta <= upper
    if not ok:
        warnings.warn(
            f"delta = {delta:g} outside the admissible window [{lower:.3g}, {upper:.3g}] "
            f"for N = {N}, M = {band}, eps0 = {eps0}",
            RuntimeWarning,
            stacklevel=2,
        )
    return ok


@dataclass
class TrialRecord:
    master_seed: int
    trial_index: int
    symbol_id: str
    N: int
    delta: float
    region: str
    observed_count: int
    predicted_count: float
    hs_norm: float
    distance_quantiles: dict
    log_det_Eminusplus: dict = field(default_factory=dict)
    out_of_tube: int | None = None
    runtime_ms: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def to_json(self, include_timing: bool = False) -> str:
        d = asdict(self)
        if not include_timing:
            d.pop("runtime_ms")
        return json.dumps(d, sort_keys=True)


@dataclass
class TrialResult:
    """A record plus the raw spectrum it was computed from."""

    record: TrialRecord
    eigenvalues: np.ndarray
    dist: np.ndarray
    theta: np.ndarray


def distance_quantiles(dist: np.ndarray) -> dict:
    q = np.quantile(dist, [p for _, p in QUANTILES])
    q = np.maximum.accumulate(q)
    return {name: float(v) for (name, _), v in zip(QUANTILES, q)}


def perturbed_spectrum(spec: OperatorSpec, delta: float, stream: SeededStream) -> tuple[np.ndarray, np.ndarray]:
    Q = sample_gaussian_matrix(spec.N, stream)
    return eigenvalues(perturb(build_toeplitz(spec), delta, Q)), Q


def _probe_key(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{z.imag:+}j"


def weyl_trial(spec: OperatorSpec, delta: float, region: Region, stream: SeededStream,
               probes: Sequence[complex] = ()) -> TrialResult:
    """One perturbed eigensolve counted against ``(N / 2 pi) * arc measure``."""
    t0 = time.perf_counter()
    sym = spec.symbol
    eig, Q = perturbed_spectrum(spec, delta, stream)
    dist, theta = dist_to_curve_many(sym, eig)
    observed = int(np.sum(region.contains(eig)))
    predicted = spec.N / TWO_PI * preimage_measure(sym, region)
    logdets = {}
    for z in probes:
        eff = perturbed_effective(spec, z, Q, delta)
        logdets[_probe_key(z)] = lu_log_abs_det(eff.E_minus_plus_delta)
    out_of_tube = None
    if isinstance(region, CurveTube):
        out_of_tube = spec.N - observed
    rec = TrialRecord(
        master_seed=stream.master_seed,
        trial_index=stream.trial_index,
        symbol_id=symbol_id(sym),
        N=spec.N,
        delta=float(delta),
        region=region.to_literal(),
        observed_count=observed,
        predicted_count=float(predicted),
        hs_norm=float(np.linalg.norm(Q)),
        distance_quantiles=distance_quantiles(dist),
        log_det_Eminusplus=logdets,
        out_of_tube=out_of_tube,
        runtime_ms=1e3 * (time.perf_counter() - t0),
    )
    return TrialResult(rec, eig, dist, theta)


def tube_radius(N: int, epsilon: float) -> float:
    return N ** (-1.0 + epsilon)


def thin_tube_trial(spec: OperatorSpec, delta: float, epsilon: float, stream: SeededStream) -> TrialResult:
    """Weyl trial for the tube ``dist(z, curve) < N^{-1+epsilon}``."""
    tube = CurveTube(spec.symbol, tube_radius(spec.N, epsilon))
    return weyl_trial(spec, delta, tube, stream)


def run_trials(task: Callable[[SeededStream], TrialResult], master_seed: int, n_trials: int,
               workers: int = 1) -> list:
    """Run ``task`` on streams ``(master_seed, 0..n_trials-1)``; results sorted by index."""
    streams = [SeededStream(master_seed, i) for i in range(n_trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, streams))
    else:
        results = [task(s) for s in streams]
    return sorted(results, key=lambda r: r.record.trial_index)


# ----------------------------------------------------------------------------
# logarithmic potentials


@dataclass(frozen=True)
class PotentialProbe:
    z: complex
    U_xi_N: float
    U_xi: float
    phi: float
    phi_tilde: float  # phi rescaled by N / Ntilde: the mean over circulant eigenvalues


def log_potential_curve(sym: LaurentSymbol, z: complex, tol: float = 1e-10, n0: int = 64,
                        n_max: int = 2**22) -> float:
    """``-(1/2 pi) int log|z - f(theta)| dtheta`` by trapezoid doubling."""
    z = complex(z)
    n = n0
    prev = None
    while n <= n_max:
        theta = TWO_PI * np.arange(n) / n
        val = -float(np.mean(np.log(np.abs(z - eval_curve(sym, theta)))))
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        n *= 2
    raise NoConvergence("trapezoidal potential did not settle")


def potential_compare(spec: OperatorSpec, delta: float, probes: Sequence[complex],
                      stream: SeededStream, min_dist: float = 0.1) -> list[PotentialProbe]:
    sym = spec.symbol
    for z in probes:
        d, _ = dist_to_curve(sym, z)
        if d < min_dist:
            raise PreconditionViolated(f"probe {z} is {d:.3g} < {min_dist} from the curve")
    Q = sample_gaussian_matrix(spec.N, stream)
    P = perturb(build_toeplitz(spec), delta, Q)
    out = []
    eye = np.eye(spec.N)
    for z in probes:
        z = complex(z)
        U_N = -lu_log_abs_det(P - z * eye) / spec.N
        ph = phi(spec, z)
        out.append(PotentialProbe(z, U_N, log_potential_curve(sym, z), ph, ph * spec.N / spec.n_tilde))
    return out


# ----------------------------------------------------------------------------
# effective Hamiltonian tail


@dataclass
class TailTable:
    N: int
    delta: float
    epsilon0: float
    threshold: float  # t = N^eps0
    probes: list
    values: np.ndarray  # log|det E_mp^delta|^2, shape (trials, probes)

    def frequency(self, t: float | None = None) -> np.ndarray:
        t = self.threshold if t is None else t
        return np.mean(self.values >= -t, axis=0)

    def histogram(self, bins: int = 20):
        return [np.histogram(self.values[:, i], bins=bins) for i in range(self.values.shape[1])]


def effective_tail_experiment(spec: OperatorSpec, delta: float, z_probes: Sequence[complex],
                              trials: int, epsilon0: float, master_seed: int,
                              C_alpha: float = 1.0, C1: float = 2.0) -> TailTable:
    """Frequency of ``log|det E_mp^delta(z)|^2 >= -N^eps0`` over Gaussian draws."""
    N = spec.N
    probes = [complex(z) for z in z_probes]
    blocks = []
    for z in probes:
        a = alpha(spec, z)
        if a < 1.0 / (C_alpha * N):
            raise PreconditionViolated(f"alpha({z}) = {a:.3g} < 1/(C N) = {1 / (C_alpha * N):.3g}")
        if delta >= a / (C1 * N) ** 3:
            warnings.warn(
                f"delta = {delta:g} is not small against alpha/(C1 N)^3 = {a / (C1 * N) ** 3:.3g} at z = {z}",
                RuntimeWarning,
                stacklevel=2,
            )
        b = grushin_blocks(spec, z)
        blocks.append((b, operator_norm_estimate(b.E)))
    values = np.empty((trials, len(probes)))
    for i in range(trials):
        Q = sample_gaussian_matrix(N, SeededStream(master_seed, i))
        for k, z in enumerate(probes):
            b, nE = blocks[k]
            eff = perturbed_effective(spec, z, Q, delta, b, norm_E=nE)
            values[i, k] = 2.0 * lu_log_abs_det(eff.E_minus_plus_delta)
    return TailTable(N, float(delta), epsilon0, N**epsilon0, probes, values)


# ----------------------------------------------------------------------------
# pseudospectra


@dataclass
class PseudoGrid:
    xs: np.ndarray
    ys: np.ndarray
    smin: np.ndarray  # shape (ny, nx); nan where the iteration failed
    meta: dict


def pseudospectrum_grid(spec: OperatorSpec, bbox: tuple[float, float, float, float], nx: int, ny: int,
                        delta: float = 0.0, stream: SeededStream | None = None) -> PseudoGrid:
    """``s_min(P - z)`` on a grid over ``bbox = (xmin, xmax, ymin, ymax)``."""
    if nx > 512 or ny > 512:
        raise PreconditionViolated("pseudospectrum grid larger than 512 x 512")
    P = build_toeplitz(spec)
    if delta:
        if stream is None:
            raise PreconditionViolated("a perturbed grid needs a seeded stream")
        P = perturb(P, delta, sample_gaussian_matrix(spec.N, stream))
    xs = np.linspace(bbox[0], bbox[1], nx)
    ys = np.linspace(bbox[2], bbox[3], ny)
    smin = np.full((ny, nx), np.nan)
    eye = np.eye(spec.N)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            try:
                smin[iy, ix] = smallest_singular_value(P - complex(x, y) * eye)
            except NoConvergence:
                pass
    meta = {
        "bbox": list(map(float, bbox)),
        "nx": nx,
        "ny": ny,
        "N": spec.N,
        "delta": float(delta),
        "symbol": symbol_id(spec.symbol),
        "master_seed": None if stream is None else stream.master_seed,
        "missing": int(np.isnan(smin).sum()),
    }
    return PseudoGrid(xs, ys, smin, meta)


# ----------------------------------------------------------------------------
# deterministic sweeps


def loglinear_fit(x, y) -> tuple[float, float]:
    """Slope and ``R^2`` of ``y`` against ``x``."""
    res = stats.linregress(np.asarray(x, float), np.asarray(y, float))
    return float(res.slope), float(res.rvalue**2)


def spacing_experiment(sym: LaurentSymbol, Ns: Sequence[int], z0: complex, radius: float) -> list[dict]:
    rows = []
    for N in Ns:
        spec = OperatorSpec(sym, N)
        for seg in eigenvalue_spacing_check(spec, z0, radius):
            rows.append({"N": N, "n_tilde": spec.n_tilde, "theta_star": seg.theta_star,
                         "count": seg.count, "min_gap": seg.min_gap, "gap_times_n": seg.gap_times_n})
    return rows


def resolvent_stability_experiment(sym: LaurentSymbol, z: complex, Ns: Sequence[int]) -> dict:
    smins = []
    for N in Ns:
        P = build_toeplitz(OperatorSpec(sym, N))
        smins.append(smallest_singular_value(P - complex(z) * np.eye(N)))
    smins = np.array(smins)
    return {"N": list(Ns), "s_min": smins.tolist(), "ratio": float(smins.max() / smins.min())}


def quasimode_decay_experiment(sym: LaurentSymbol, z: complex, Ns: Sequence[int]) -> dict:
    residuals, smins = [], []
    for N in Ns:
        spec = OperatorSpec(sym, N)
        q = build_quasimode(spec, z)
        residuals.append(q.residual)
        smins.append(smallest_singular_value(build_toeplitz(spec) - complex(z) * np.eye(N)))
    slope, r2 = loglinear_fit(Ns, np.log(residuals))
    return {"N": list(Ns), "residual": residuals, "s_min": smins, "slope": slope, "r2": r2}


def singular_value_uniformity(sym: LaurentSymbol, z: complex, Ns: Sequence[int]) -> dict:
    s_plus, s_minus = [], []
    for N in Ns:
        sp, sm = singular_values_E_pm(grushin_blocks(OperatorSpec(sym, N), z))
        s_plus.append(float(sp.min()))
        s_minus.append(float(sm.min()))
    return {"N": list(Ns), "min_s_plus": s_plus, "min_s_minus": s_minus}


def jordan_annulus_trial(N: int, delta: float, sigma: float, stream: SeededStream) -> dict:
    sym = LaurentSymbol.from_coeffs({-1: 1.0})
    eig, _ = perturbed_spectrum(OperatorSpec(sym, N), delta, stream)
    r_lo, r_hi = annulus_bounds_jordan(N, delta, sigma)
    r = np.abs(eig)
    outside = int(np.sum((r < r_lo) | (r > r_hi)))
    return {"trial_index": stream.trial_index, "r_lo": r_lo, "r_hi": r_hi, "outside": outside}


def theta_bin_counts(theta: np.ndarray, bins: int = 32) -> np.ndarray:
    idx = np.floor(np.mod(theta, TWO_PI) / TWO_PI * bins).astype(int)
    return np.bincount(np.minimum(idx, bins - 1), minlength=bins)


def distance_scaling(sym: LaurentSymbol, Ns: Sequence[int], delta: float, trials: int,
                     master_seed: int, quantile: str = "q90") -> dict:
    medians = []
    for N in Ns:
        spec = OperatorSpec(sym, N)
        qs = [weyl_trial(spec, delta, Plane(), SeededStream(master_seed, N * 1000 + i))
              .record.distance_quantiles[quantile] for i in range(trials)]
        medians.append(float(np.median(qs)))
    slope, r2 = loglinear_fit(np.log(Ns), np.log(medians))
    return {"N": list(Ns), quantile: medians, "slope": slope, "r2": r2}


# ----------------------------------------------------------------------------
# writers


def write_jsonl(path, records: Sequence[TrialRecord], include_timing: bool = False) -> Path:
    path = Path(path)
    records = sorted(records, key=lambda r: r.trial_index)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json(include_timing) + "\n")
    return path


def read_jsonl(path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_eigen_csv(path, results: Sequence[TrialResult]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "re", "im", "dist_to_curve", "theta_star"])
        for res in sorted(results, key=lambda r: r.record.trial_index):
            for lam, d, t in zip(res.eigenvalues, res.dist, res.theta):
                w.writerow([res.record.trial_index, repr(float(lam.real)), repr(float(lam.imag)),
                            repr(float(d)), repr(float(t))])
    return path


def write_grid(path, grid: PseudoGrid) -> tuple[Path, Path]:
    """CSV of ``log10 s_min`` (rows = y) and a sidecar JSON with the metadata."""
    path = Path(path)
    with np.errstate(divide="ignore"):
        logs = np.log10(grid.smin)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in logs:
            w.writerow(["nan" if not np.isfinite(v) else repr(float(v)) for v in row])
    side = path.with_suffix(".json")
    meta = dict(grid.meta, xs=grid.xs.tolist(), ys=grid.ys.tolist())
    side.write_text(json.dumps(meta, sort_keys=True, indent=1), encoding="utf-8")
    return path, side


def write_svg(path, eigs: np.ndarray, sym: LaurentSymbol, title: str = "", size: int = 640,
              n_curve: int = 2048) -> Path:
    """Scatter of ``eigs`` over the sampled symbol curve."""
    path = Path(path)
    curve = eval_curve(sym, np.linspace(0.0, TWO_PI, n_curve + 1))
    pts = np.concatenate([np.asarray(eigs, complex), curve])
    xmin, xmax = pts.real.min(), pts.real.max()
    ymin, ymax = pts.imag.min(), pts.imag.max()
    span = max(xmax - xmin, ymax - ymin, 1e-12) * 1.08
    cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2
    pad = 20

    def tx(z):
        x = pad + (z.real - cx + span / 2) / span * (size - 2 * pad)
        y = pad + (cy + span / 2 - z.imag) / span * (size - 2 * pad)
        return x, y

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        lines.append(f'<title>{escape(title)}</title>')
    poly = " ".join("{:.2f},{:.2f}".format(*tx(z)) for z in curve)
    lines.append(f'<polyline points="{poly}" fill="none" stroke="#d62728" stroke-width="1"/>')
    for z in np.asarray(eigs, complex):
        x, y = tx(z)
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.6" fill="#1f77b4"/>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
