"""Spectral sweeps, pole/zero extraction, motional averaging, loss location.

The driven response of a strictly dissipative mode network is a rational
function of the probe frequency: its poles are the complex eigenvalues of
the full mode matrix, while the zeros seen on the *driven* mode are the
eigenvalues of the submatrix with the driven row and column deleted.  Each
complex eigenvalue ``z`` maps to a spectral feature at ``center = Re z``
with amplitude half-width ``-Im z`` (our sign convention places eigenvalues
in the lower half plane).

Antiresonances -- the zeros -- are the workhorse here: their half-widths
reflect only the decay of the *undriven* modes, so comparing zero widths
across drive ports localises where in a network the loss lives.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.signal import find_peaks

from .network import ModeNetwork, ProbeGrid, steady_state_batch

_MAG_FLOOR = 1e-300  # keeps log magnitudes finite at an exact zero crossing


class AmbiguityError(RuntimeError):
    """Loss localisation could not separate the leading candidates.

    Attributes
    ----------
    candidates : tuple[str, ...]
        Drive labels whose mean antiresonance widths are within tolerance
        of the minimum, in ascending width order.
    """

    def __init__(self, candidates: tuple[str, ...], widths: dict[str, float]):
        self.candidates = candidates
        self.widths = widths
        msg = ", ".join(f"{c}: {widths[c]:.6g} MHz" for c in candidates)
        super().__init__(f"ambiguous loss localisation, tied candidates -> {msg}")


@dataclass(frozen=True)
class ComplexSpectrum:
    """Complex amplitudes of every mode over a probe grid.

    Derived channels (magnitude, excitation, unwrapped phase) are computed
    on demand from the stored complex amplitudes; they are never stored, so
    they cannot drift out of sync.
    """

    grid: ProbeGrid
    labels: tuple[str, ...]
    amplitudes: np.ndarray  # (points, n_modes) complex

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.points, len(self.labels)):
            raise ValueError(
                f"amplitudes must have shape ({self.grid.points}, {len(self.labels)}), "
                f"got {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def probes(self) -> np.ndarray:
        return self.grid.frequencies()

    def column(self, label: str) -> np.ndarray:
        return self.amplitudes[:, self.labels.index(label)]

    def magnitude(self, label: str) -> np.ndarray:
        return np.abs(self.column(label))

    def excitation(self, label: str) -> np.ndarray:
        return np.abs(self.column(label)) ** 2

    def phase_unwrapped(self, label: str) -> np.ndarray:
        """Unwrapped phase in radians, anchored at the low-frequency end."""
        return np.unwrap(np.angle(self.column(label)))


@dataclass(frozen=True)
class ResonancePole:
    center: float
    half_width: float
    multiplicity: int = 1


@dataclass(frozen=True)
class AntiresonanceZero:
    drive_label: str
    center: float
    half_width: float
    at_boundary: bool = False


def sweep(network: ModeNetwork, grid: ProbeGrid) -> ComplexSpectrum:
    """Steady-state spectrum of every mode over the grid."""
    amps = steady_state_batch(network, grid.frequencies())
    return ComplexSpectrum(grid=grid, labels=network.labels, amplitudes=amps)


def _group_eigenvalues(
    values: np.ndarray, tol: float = 1e-6
) -> list[tuple[float, float, int]]:
    order = np.argsort(values.real, kind="stable")
    grouped: list[tuple[float, float, int]] = []
    for z in values[order]:
        c, w = float(z.real), float(-z.imag)
        if grouped and abs(grouped[-1][0] - c) <= tol and abs(grouped[-1][1] - w) <= tol:
            pc, pw, m = grouped[-1]
            grouped[-1] = (pc, pw, m + 1)
        else:
            grouped.append((c, w, 1))
    return grouped


def resonances(network: ModeNetwork) -> list[ResonancePole]:
    """Poles of the driven response: eigenvalues of the full mode matrix.

    The matrix whose eigenvalues we take is ``probe*I - M(probe)``, which is
    probe-independent; every strictly dissipative network therefore has all
    its poles strictly below the real axis (half_width > 0).  Degenerate
    eigenvalues (within 1e-6 in both center and width) are merged with a
    multiplicity count.
    """
    a = np.diag(network.frequencies - 1j * network.decays).astype(complex)
    a += network.couplings
    vals = np.linalg.eigvals(a)
    return [ResonancePole(c, w, m) for c, w, m in _group_eigenvalues(vals)]


def antiresonances(network: ModeNetwork, drive_label: str) -> list[AntiresonanceZero]:
    """Zeros of the driven-mode response when driving ``drive_label``.

    These are the eigenvalues of the mode matrix with the driven row and
    column deleted, i.e. the complex frequencies of the undriven subnetwork.
    An N-mode network therefore shows N-1 zeros (counted with multiplicity),
    and their widths involve only the decays of the undriven modes.
    """
    i = network.index(drive_label)
    keep = [j for j in range(len(network)) if j != i]
    if not keep:
        return []
    a = np.diag(network.frequencies - 1j * network.decays).astype(complex)
    a += network.couplings
    sub = a[np.ix_(keep, keep)]
    vals = np.linalg.eigvals(sub)
    out = []
    for c, w, m in _group_eigenvalues(vals):
        out.extend([AntiresonanceZero(drive_label, c, w)] * m)
    return out


def cancel_pole_zero_pairs(
    poles: Sequence[ResonancePole],
    zeros: Sequence[AntiresonanceZero],
    tol: float = 1e-9,
) -> tuple[list[ResonancePole], list[AntiresonanceZero]]:
    """Drop pole/zero pairs that coincide within ``tol`` (both center and width).

    A zero sitting exactly on a pole cancels out of the driven response and
    produces no observable feature -- e.g. a decoupled emitter contributes a
    pole and a zero at its own complex frequency.  Reports of *observable*
    structure should use the reduced sets.
    """
    zs = list(zeros)
    out_poles: list[ResonancePole] = []
    for p in poles:
        mult = p.multiplicity
        survivors = []
        for z in zs:
            if mult > 0 and abs(z.center - p.center) <= tol and abs(z.half_width - p.half_width) <= tol:
                mult -= 1
            else:
                survivors.append(z)
        zs = survivors
        if mult > 0:
            out_poles.append(ResonancePole(p.center, p.half_width, mult))
    return out_poles, zs


# ---------------------------------------------------------------------------
# Numeric antiresonance detection
# ---------------------------------------------------------------------------

def _parabolic_vertex(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Vertex abscissa of the parabola through points i-1, i, i+1."""
    if i <= 0 or i >= len(x) - 1:
        return float(x[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom <= 0.0:
        return float(x[i])
    delta = 0.5 * (y0 - y2) / denom
    return float(x[i] + np.clip(delta, -1.0, 1.0) * (x[i + 1] - x[i]))


def _crossing_halfwidth(
    probes: np.ndarray, phase: np.ndarray, center: float
) -> float | None:
    """Half-width estimate from the probe span of the pi/2 phase fall.

    Across an isolated zero the unwrapped phase drops by pi following
    ``-atan((probe - center)/half_width)``; the quarter-period points where
    the phase has fallen by pi/4 on each side of the center sit one
    half-width away.  Returns None when either crossing leaves the grid.
    """
    phi_c = float(np.interp(center, probes, phase))
    lo = phase - (phi_c + np.pi / 4.0)  # positive side: left of center
    hi = phase - (phi_c - np.pi / 4.0)  # negative side: right of center
    start = min(int(np.searchsorted(probes, center)), len(probes) - 1)
    left = None
    for j in range(start, 0, -1):
        if lo[j - 1] >= 0.0 >= lo[j] or lo[j - 1] <= 0.0 <= lo[j]:
            left = probes[j - 1] + (probes[j] - probes[j - 1]) * (
                (0.0 - lo[j - 1]) / (lo[j] - lo[j - 1])
            )
            break
    right = None
    for j in range(start, len(probes) - 1):
        if hi[j] >= 0.0 >= hi[j + 1] or hi[j] <= 0.0 <= hi[j + 1]:
            right = probes[j] + (probes[j + 1] - probes[j]) * (
                (0.0 - hi[j]) / (hi[j + 1] - hi[j])
            )
            break
    if left is not None and right is not None:
        return float((right - left) / 2.0)
    if left is not None:
        return float(center - left)
    if right is not None:
        return float(right - center)
    return None


def _doubling_halfwidth(probes: np.ndarray, excitation: np.ndarray, i: int) -> float | None:
    """Half-width estimate from the excitation doubling points.

    Near a simple zero ``|a|^2 = B((probe-c)^2 + w^2)``, so the excitation
    reaches twice its dip value one half-width away on either side.  Taking
    the smaller of the two offsets keeps slanted backgrounds from inflating
    the estimate.  Unlike the phase-fall span, this stays usable in crowded
    spectra where neighbouring features distort the local phase.
    """
    base = excitation[i]
    left = None
    for j in range(i - 1, -1, -1):
        if excitation[j] >= 2.0 * base:
            left = probes[i] - probes[j]
            break
    right = None
    for j in range(i + 1, len(probes)):
        if excitation[j] >= 2.0 * base:
            right = probes[j] - probes[i]
            break
    offsets = [o for o in (left, right) if o is not None]
    return float(min(offsets)) if offsets else None


def _rational_zero_refine(
    probes: np.ndarray,
    column: np.ndarray,
    center0: float,
    width0: float,
    span_factor: float = 2.0,
) -> tuple[float, float] | None:
    """Refine (center, half_width) with a local degree-[2/2] rational fit.

    Within a window of a few half-widths the driven response is accurately
    ``(n0 + n1 x + n2 x^2) / (1 + d1 x + d2 x^2)`` with ``x`` the probe
    offset from the crude center.  Multiplying through by the denominator
    turns this into a *linear* least-squares problem for the five
    coefficients; the zero is the numerator root nearest the window center.
    Exact for two-mode networks, and pole contamination stays quadratic
    rather than biasing the extracted width as interval rules do.
    """
    mask = np.abs(probes - center0) <= span_factor * width0
    if mask.sum() < 7:
        # widen to the 7 nearest grid points so the system stays overdetermined
        idx = np.argsort(np.abs(probes - center0))[:7]
        mask = np.zeros_like(mask)
        mask[idx] = True
    x = probes[mask] - center0
    a = column[mask]
    span = float(np.max(np.abs(x)))
    design = np.column_stack(
        [np.ones_like(a), x.astype(complex), (x * x).astype(complex), -x * a, -(x * x) * a]
    )
    coef, *_ = np.linalg.lstsq(design, a, rcond=None)
    n0, n1, n2 = coef[:3]
    if abs(n2) < 1e-14 * max(abs(n0), abs(n1), 1e-30):
        if abs(n1) == 0.0:
            return None
        root = -n0 / n1
    else:
        roots = np.roots([n2, n1, n0])
        root = roots[np.argmin(np.abs(roots))]
    if not np.isfinite(root) or abs(root) > 2.0 * span or root.imag >= 0.0:
        return None
    return center0 + float(root.real), float(-root.imag)


def _refine_iteratively(
    probes: np.ndarray,
    column: np.ndarray,
    center0: float,
    width0: float,
    step: float,
) -> tuple[float, float] | None:
    """Repeat the rational refinement, re-sizing the window from each result.

    The initial width estimate only has to be the right order of magnitude:
    each pass re-centres the fit window on the previous answer, which walks
    the estimate onto the true zero even when the dip minimum is displaced
    by a sloping background (common in dense networks).
    """
    c, w = center0, max(width0, step)
    best = None
    for _ in range(4):
        ref = _rational_zero_refine(probes, column, c, w)
        if ref is None:
            break
        c_new, w_new = ref
        if not (probes[0] <= c_new <= probes[-1]):
            break
        moved = abs(c_new - c)
        c, w = c_new, max(w_new, 0.5 * step)
        best = (c, w)
        if moved <= 0.02 * max(w, step):
            break
    return best


def detect_antiresonances_numeric(
    spectrum: ComplexSpectrum,
    drive_label: str,
    prominence_db: float = 3.0,
) -> list[AntiresonanceZero]:
    """Locate antiresonance dips in a sampled spectrum of the driven mode.

    Pipeline: dips are candidate minima of the log-magnitude with at least
    ``prominence_db`` of prominence; each candidate gets a parabolic center
    estimate plus a width seed (the phase-fall span when it agrees with the
    excitation-doubling span, the doubling span otherwise), then both are
    walked onto the zero by an iterated local rational fit of the complex
    amplitude (see :func:`_rational_zero_refine`).  Minima pressed against
    either end of the grid are reported with ``at_boundary=True``, a NaN
    width, and no refinement -- the grid does not contain enough of the
    feature.

    Zeros nearly cancelled by a pole leave sub-prominence wiggles rather
    than dips and are invisible to any magnitude-based detector; callers
    comparing against algebraic zero lists must expect those to be absent.

    The grid should resolve the narrowest expected feature with at least
    ~10 points per half-width; coarser grids degrade the initial estimates
    the refinement starts from.
    """
    probes = spectrum.probes
    col = spectrum.column(drive_label)
    logmag = 20.0 * np.log10(np.maximum(np.abs(col), _MAG_FLOOR))
    dips, _ = find_peaks(-logmag, prominence=prominence_db)
    phase = np.unwrap(np.angle(col))

    found: list[AntiresonanceZero] = []
    step = spectrum.grid.step
    excitation = np.abs(col) ** 2
    for i in dips:
        center0 = _parabolic_vertex(probes, logmag, int(i))
        w_double = _doubling_halfwidth(probes, excitation, int(i))
        w_phase = _crossing_halfwidth(probes, phase, center0)
        if w_double is None:
            width0 = w_phase if (w_phase and w_phase > 0.0) else 2.0 * step
        elif w_phase is not None and w_double / 3.0 <= w_phase <= 3.0 * w_double:
            width0 = w_phase
        else:
            width0 = w_double
        refined = _refine_iteratively(probes, col, center0, width0, step)
        if refined is None:
            found.append(AntiresonanceZero(drive_label, center0, width0))
        else:
            found.append(AntiresonanceZero(drive_label, refined[0], refined[1]))

    # A dip bottom cut off by the grid edge: the lowest sample of the scan
    # sits on the boundary AND the phase there falls steeply (the zero's
    # signature -- pole tails and plain rolloff have rising or gentle phase).
    slopes = np.gradient(phase, probes)
    steep = 2.0 * float(np.median(np.abs(slopes)))
    imin = int(np.argmin(logmag))
    if imin == 0 and slopes[0] < -steep:
        found.insert(
            0, AntiresonanceZero(drive_label, float(probes[0]), math.nan, at_boundary=True)
        )
    elif imin == logmag.size - 1 and slopes[-1] < -steep:
        found.append(
            AntiresonanceZero(drive_label, float(probes[-1]), math.nan, at_boundary=True)
        )
    return found


# ---------------------------------------------------------------------------
# Motional ensemble averaging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MotionEnsemble:
    """Quasi-static motional blur of the emitter modes.

    Each ensemble member rescales every emitter coupling by a single scale
    factor drawn from a Gaussian truncated to ``scale_bounds`` (rejection
    sampling: thermal position spread samples the standing-wave envelope,
    which can only reduce the coupling), and shifts each emitter frequency
    by an independent Gaussian of width ``frequency_jitter`` (residual
    differential light shifts).  Averaging the complex amplitudes over the
    ensemble models a measurement slow compared to the motion.

    Defaults reproduce the phase-swing compression seen on the reference
    emitter/resonator system: full contrast 150 deg reduced to ~140 deg.
    """

    scale_mean: float = 0.80
    scale_sigma: float = 0.12
    scale_bounds: tuple[float, float] = (0.5, 1.0)
    frequency_jitter: float = 1.0
    samples: int = 512
    seed: int = 2024

    def __post_init__(self) -> None:
        lo, hi = self.scale_bounds
        if not (0.0 < lo < hi <= 1.0):
            raise ValueError(
                f"scale_bounds must satisfy 0 < lo < hi <= 1 (a coupling can only be "
                f"reduced), got {self.scale_bounds}"
            )
        if self.scale_sigma < 0.0 or self.frequency_jitter < 0.0:
            raise ValueError("spread parameters must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be positive")

    def draw(self, network: ModeNetwork, index: int) -> ModeNetwork:
        """The ``index``-th perturbed network; deterministic in (seed, index)."""
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, index)))
        lo, hi = self.scale_bounds
        if self.scale_sigma == 0.0:
            scale = min(max(self.scale_mean, lo), hi)
        else:
            while True:  # rejection sampling of the truncated Gaussian
                scale = rng.normal(self.scale_mean, self.scale_sigma)
                if lo < scale <= hi:
                    break
        shifts = {
            m.label: rng.normal(0.0, self.frequency_jitter) if self.frequency_jitter else 0.0
            for m in network.modes
            if m.kind == "emitter"
        }
        return network.with_emitter_perturbation(scale, shifts)


def _worker_count() -> int:
    raw = os.environ.get("ANTIRES_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"ANTIRES_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"ANTIRES_THREADS must be >= 1, got {n}")
    return n


def _map_ordered(fn: Callable, items: Sequence) -> list:
    """Map preserving order; threads if ANTIRES_THREADS > 1 (numpy releases the GIL)."""
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def ensemble_mean_amplitudes(
    network: ModeNetwork, probes: np.ndarray, ensemble: MotionEnsemble
) -> np.ndarray:
    """Mean complex amplitudes over the motional ensemble, shape (P, N)."""
    probes = np.asarray(probes, dtype=float)

    def one(k: int) -> np.ndarray:
        return steady_state_batch(ensemble.draw(network, k), probes)

    chunks = _map_ordered(one, range(ensemble.samples))
    return np.mean(chunks, axis=0)


def motion_average(
    network: ModeNetwork, grid: ProbeGrid, ensemble: MotionEnsemble
) -> ComplexSpectrum:
    """Like :func:`sweep`, but averaged over the motional ensemble."""
    amps = ensemble_mean_amplitudes(network, grid.frequencies(), ensemble)
    return ComplexSpectrum(grid=grid, labels=network.labels, amplitudes=amps)


# ---------------------------------------------------------------------------
# Loss localisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossyVerdict:
    label: str
    mean_widths: dict[str, float]
    widths: dict[str, tuple[float, ...]]


def lossy_component_identify(
    network: ModeNetwork,
    candidates: Sequence[str] | None = None,
    *,
    spectra: Mapping[str, ComplexSpectrum] | None = None,
    rel_tol: float = 1e-3,
) -> LossyVerdict:
    """Identify the lossiest mode by driving each candidate in turn.

    The mean antiresonance half-width under drive port p equals the mean
    decay of the *other* modes (the trace of the reduced mode matrix), so it
    is smallest when the lossy mode itself is driven.  Widths come from the
    algebraic zeros of ``network``, or -- when ``spectra`` maps drive labels
    to measured spectra -- from numeric dip detection on those spectra.

    Raises :class:`AmbiguityError` when the runner-up mean width is within
    ``rel_tol`` (relative) of the minimum.
    """
    if candidates is None:
        candidates = network.labels
    if len(candidates) < 2:
        raise ValueError("need at least two candidate drive ports to compare")

    widths: dict[str, tuple[float, ...]] = {}
    for label in candidates:
        if spectra is not None:
            if label not in spectra:
                raise KeyError(f"no spectrum supplied for drive port {label!r}")
            zeros = detect_antiresonances_numeric(spectra[label], label)
            ws = tuple(z.half_width for z in zeros if not z.at_boundary)
            if not ws:
                raise ValueError(
                    f"no interior antiresonances detected for drive {label!r}; "
                    "grid too coarse or too narrow"
                )
        else:
            ws = tuple(z.half_width for z in antiresonances(network, label))
            if not ws:
                raise ValueError(f"network has no antiresonances under drive {label!r}")
        widths[label] = ws

    means = {lab: float(np.mean(ws)) for lab, ws in widths.items()}
    ranked = sorted(means, key=means.get)
    best = ranked[0]
    tied = tuple(lab for lab in ranked if means[lab] <= means[best] * (1.0 + rel_tol))
    if len(tied) > 1:
        raise AmbiguityError(tied, means)
    return LossyVerdict(label=best, mean_widths=means, widths=widths)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def write_spectrum_csv(spectrum: ComplexSpectrum, path: str | Path) -> None:
    """Write the spectrum with all derived channels; floats carry 17
    significant digits so the complex amplitudes round-trip exactly."""
    header = ["probe_mhz"]
    for lab in spectrum.labels:
        header += [
            f"{lab}_re",
            f"{lab}_im",
            f"{lab}_magnitude",
            f"{lab}_excitation",
            f"{lab}_phase_unwrapped_rad",
        ]
    cols = [spectrum.probes]
    for lab in spectrum.labels:
        col = spectrum.column(lab)
        cols += [
            col.real,
            col.imag,
            spectrum.magnitude(lab),
            spectrum.excitation(lab),
            spectrum.phase_unwrapped(lab),
        ]
    table = np.column_stack(cols)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table:
            writer.writerow([f"{v:.17g}" for v in row])


def read_spectrum_csv(path: str | Path) -> ComplexSpectrum:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if header[0] != "probe_mhz" or (len(header) - 1) % 5 != 0:
        raise ValueError(f"unrecognised spectrum CSV header: {header[:6]}...")
    labels = tuple(h[: -len("_re")] for h in header[1::5])
    data = np.asarray(rows)
    probes = data[:, 0]
    amps = np.empty((len(rows), len(labels)), dtype=complex)
    for i in range(len(labels)):
        amps[:, i] = data[:, 1 + 5 * i] + 1j * data[:, 2 + 5 * i]
    grid = ProbeGrid(start=float(probes[0]), stop=float(probes[-1]), points=len(probes))
    return ComplexSpectrum(grid=grid, labels=labels, amplitudes=amps)


def poles_zeros_report(
    poles: Sequence[ResonancePole], zeros: Sequence[AntiresonanceZero]
) -> dict:
    return {
        "poles": [
            {"center_mhz": p.center, "half_width_mhz": p.half_width, "multiplicity": p.multiplicity}
            for p in poles
        ],
        "antiresonances": [
            {
                "drive_label": z.drive_label,
                "center_mhz": z.center,
                "half_width_mhz": None if math.isnan(z.half_width) else z.half_width,
                "at_boundary": z.at_boundary,
            }
            for z in zeros
        ],
    }
