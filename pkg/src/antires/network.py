"""Driven, damped coupled-mode networks and their linear steady state.

All frequencies and rates are cyclic quantities (omega / 2 pi) expressed in
MHz.  ``decay`` is the amplitude half-width of a mode: the emitter dipole
decay rate or the resonator field decay rate.  The steady state of the
linear equations of motion solves ``M(probe) @ amplitudes = drive`` with

    M[j, j] = (probe - frequency_j) + 1j * decay_j
    M[j, k] = -couplings[j, k]          for j != k

so a two-mode emitter/resonator system driven on the resonator reduces to

    a = eta * (d_pe + 1j*gamma) / ((d_pe + 1j*gamma)*(d_pr + 1j*kappa) - g**2)

with ``d_pe``/``d_pr`` the probe detunings from the emitter and resonator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

MODE_KINDS = ("emitter", "resonator")


class InvalidNetworkError(ValueError):
    """Raised when a network description violates a structural constraint."""


class SingularResponseError(RuntimeError):
    """Raised when the steady-state solve hits an exactly singular matrix."""


@dataclass(frozen=True)
class Mode:
    """A single bosonic or two-level mode in the linear (weak drive) regime.

    Parameters
    ----------
    label : str
        Unique name used in drive vectors, reports, and CSV headers.
    kind : str
        Either ``"emitter"`` or ``"resonator"``.  The distinction matters
        only to motion/ensemble averaging, which perturbs emitter couplings
        and frequencies.
    frequency : float
        Mode frequency in MHz, relative to the common rotating frame.
    decay : float
        Amplitude decay half-width in MHz; must be positive so the network
        is strictly dissipative and the steady state unique.
    """

    label: str
    kind: str
    frequency: float
    decay: float

    def __post_init__(self) -> None:
        if not self.label:
            raise InvalidNetworkError("mode label must be a non-empty string")
        if self.kind not in MODE_KINDS:
            raise InvalidNetworkError(
                f"mode {self.label!r}: kind must be one of {MODE_KINDS}, got {self.kind!r}"
            )
        if not math.isfinite(self.frequency):
            raise InvalidNetworkError(f"mode {self.label!r}: frequency must be finite")
        if not (math.isfinite(self.decay) and self.decay > 0.0):
            raise InvalidNetworkError(
                f"mode {self.label!r}: decay must be positive (got {self.decay})"
            )


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeNetwork:
    """An N-mode network: mode list, symmetric coupling matrix, drive vector.

    ``couplings[j, k]`` is the coherent exchange rate between modes j and k
    in MHz; the matrix must be real symmetric with zero diagonal.  ``drive``
    is the complex drive amplitude applied to each mode.  Instances are
    immutable; use :meth:`with_drive_on` / ``dataclasses.replace`` to derive
    variants.
    """

    modes: tuple[Mode, ...]
    couplings: np.ndarray
    drive: np.ndarray

    def __post_init__(self) -> None:
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        n = len(modes)
        if n == 0:
            raise InvalidNetworkError("network must contain at least one mode")
        labels = [m.label for m in modes]
        if len(set(labels)) != n:
            raise InvalidNetworkError(f"duplicate mode labels: {sorted(labels)}")

        c = np.asarray(self.couplings, dtype=float)
        if c.shape != (n, n):
            raise InvalidNetworkError(
                f"couplings must be ({n}, {n}) for {n} modes, got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise InvalidNetworkError("couplings must be finite")
        if np.any(np.diagonal(c) != 0.0):
            raise InvalidNetworkError("self couplings (nonzero diagonal) are not allowed")
        if not np.array_equal(c, c.T):
            raise InvalidNetworkError("coupling matrix must be symmetric")

        d = np.asarray(self.drive, dtype=complex)
        if d.shape != (n,):
            raise InvalidNetworkError(f"drive must have shape ({n},), got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise InvalidNetworkError("drive amplitudes must be finite")

        object.__setattr__(self, "couplings", _as_readonly(c))
        object.__setattr__(self, "drive", _as_readonly(d))

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([m.frequency for m in self.modes])

    @property
    def decays(self) -> np.ndarray:
        return np.array([m.decay for m in self.modes])

    def index(self, label: str) -> int:
        for i, m in enumerate(self.modes):
            if m.label == label:
                return i
        raise KeyError(f"no mode labelled {label!r} (have {self.labels})")

    def driven_label(self) -> str:
        """Label of the most strongly driven mode (ties: first in order)."""
        d = np.abs(self.drive)
        if not d.any():
            raise InvalidNetworkError("drive vector is identically zero")
        return self.modes[int(np.argmax(d))].label

    def with_drive_on(self, label: str, amplitude: complex = 1.0) -> "ModeNetwork":
        """Copy of the network driven only on ``label`` with ``amplitude``."""
        d = np.zeros(len(self), dtype=complex)
        d[self.index(label)] = amplitude
        return replace(self, drive=d)

    def with_emitter_perturbation(
        self, coupling_scale: float, frequency_shifts: dict[str, float]
    ) -> "ModeNetwork":
        """Scale all emitter couplings and shift emitter frequencies.

        Every coupling touching at least one emitter mode is multiplied by
        ``coupling_scale``; emitter frequencies are shifted by the entries of
        ``frequency_shifts`` (labels not listed are left alone).  Used by the
        motional-ensemble averaging in :mod:`antires.spectra`.
        """
        is_em = np.array([m.kind == "emitter" for m in self.modes])
        mask = is_em[:, None] | is_em[None, :]
        c = np.where(mask, coupling_scale * self.couplings, self.couplings)
        modes = tuple(
            replace(m, frequency=m.frequency + frequency_shifts.get(m.label, 0.0))
            if m.kind == "emitter"
            else m
            for m in self.modes
        )
        return replace(self, modes=modes, couplings=c)


@dataclass(frozen=True)
class ProbeGrid:
    """Uniform probe-frequency grid in MHz: ``points`` samples on [start, stop]."""

    start: float
    stop: float
    points: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("grid endpoints must be finite")
        if self.stop <= self.start:
            raise ValueError(f"grid requires stop > start, got [{self.start}, {self.stop}]")
        if self.points < 2:
            raise ValueError(f"grid requires at least 2 points, got {self.points}")

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.points - 1)

    def frequencies(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SteadyState:
    """Steady-state complex amplitudes of every mode at one probe frequency."""

    probe: float
    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.labels.index(label)])


def build_dynamical_matrix(network: ModeNetwork, probe: float) -> np.ndarray:
    """Dense complex matrix M(probe) of the linear steady-state equations."""
    m = -network.couplings.astype(complex)
    np.fill_diagonal(m, (probe - network.frequencies) + 1j * network.decays)
    return m


def steady_state(network: ModeNetwork, probe: float) -> SteadyState:
    """Solve M(probe) @ a = drive for the complex mode amplitudes."""
    network.driven_label()  # validates the drive is not identically zero
    m = build_dynamical_matrix(network, probe)
    try:
        amps = np.linalg.solve(m, network.drive)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - strictly lossy => regular
        raise SingularResponseError(f"singular response matrix at probe={probe}") from exc
    return SteadyState(probe=float(probe), labels=network.labels, amplitudes=amps)


def steady_state_batch(network: ModeNetwork, probes: np.ndarray) -> np.ndarray:
    """Steady-state amplitudes for many probe frequencies at once.

    Returns a complex array of shape ``(len(probes), n_modes)``.  The solve
    is stacked so numpy's batched LAPACK path does the heavy lifting.
    """
    network.driven_label()
    probes = np.asarray(probes, dtype=float)
    n = len(network)
    base = -network.couplings.astype(complex)
    diag = 1j * network.decays - network.frequencies
    ms = np.broadcast_to(base, (probes.size, n, n)).copy()
    idx = np.arange(n)
    ms[:, idx, idx] = probes[:, None] + diag[None, :]
    try:
        sols = np.linalg.solve(ms, np.broadcast_to(network.drive, (probes.size, n))[..., None])
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularResponseError("singular response matrix in batch solve") from exc
    return sols[..., 0]


def closed_form_two_mode(
    delta_pe: np.ndarray | float,
    delta_pr: np.ndarray | float,
    gamma: float,
    kappa: float,
    g: float,
    eta: complex = 1.0,
) -> np.ndarray | complex:
    """Resonator amplitude of the emitter/resonator pair, driven on the resonator.

    ``delta_pe`` / ``delta_pr`` are probe detunings from the emitter and the
    resonator.  Broadcasts over array arguments.  This closed form is the
    independent cross-check for the generic matrix solve.
    """
    num = eta * (np.asarray(delta_pe) + 1j * gamma)
    den = (np.asarray(delta_pe) + 1j * gamma) * (np.asarray(delta_pr) + 1j * kappa) - g * g
    out = num / den
    if np.isscalar(delta_pe) and np.isscalar(delta_pr):
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def network_to_dict(network: ModeNetwork) -> dict:
    pairs = []
    n = len(network)
    for j in range(n):
        for k in range(j + 1, n):
            g = network.couplings[j, k]
            if g != 0.0:
                pairs.append(
                    {"a": network.modes[j].label, "b": network.modes[k].label, "g_mhz": g}
                )
    drive = [
        {"label": m.label, "re": network.drive[i].real, "im": network.drive[i].imag}
        for i, m in enumerate(network.modes)
        if network.drive[i] != 0.0
    ]
    return {
        "modes": [
            {
                "label": m.label,
                "kind": m.kind,
                "frequency_mhz": m.frequency,
                "decay_mhz": m.decay,
            }
            for m in network.modes
        ],
        "couplings": pairs,
        "drive": drive,
    }


def network_from_dict(data: dict) -> ModeNetwork:
    try:
        raw_modes = data["modes"]
    except (KeyError, TypeError):
        raise InvalidNetworkError("network description must contain a 'modes' list")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise InvalidNetworkError("'modes' must be a non-empty list")
    modes = []
    for entry in raw_modes:
        try:
            modes.append(
                Mode(
                    label=entry["label"],
                    kind=entry["kind"],
                    frequency=float(entry["frequency_mhz"]),
                    decay=float(entry["decay_mhz"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidNetworkError(f"bad mode entry {entry!r}: {exc}") from exc
    labels = [m.label for m in modes]
    if len(set(labels)) != len(labels):
        raise InvalidNetworkError(f"duplicate mode labels: {labels}")
    lut = {lab: i for i, lab in enumerate(labels)}

    n = len(modes)
    c = np.zeros((n, n))
    for entry in data.get("couplings", ()):
        try:
            a, b, g = entry["a"], entry["b"], float(entry["g_mhz"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidNetworkError(f"bad coupling entry {entry!r}: {exc}") from exc
        if a not in lut or b not in lut:
            raise InvalidNetworkError(f"coupling references unknown mode: {entry!r}")
        if a == b:
            raise InvalidNetworkError(f"self coupling on {a!r} is not allowed")
        j, k = lut[a], lut[b]
        if c[j, k] != 0.0:
            raise InvalidNetworkError(f"duplicate coupling between {a!r} and {b!r}")
        c[j, k] = c[k, j] = g

    d = np.zeros(n, dtype=complex)
    for entry in data.get("drive", ()):
        try:
            lab = entry["label"]
            amp = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidNetworkError(f"bad drive entry {entry!r}: {exc}") from exc
        if lab not in lut:
            raise InvalidNetworkError(f"drive references unknown mode {lab!r}")
        d[lut[lab]] += amp

    return ModeNetwork(modes=tuple(modes), couplings=c, drive=d)


def save_network(network: ModeNetwork, path: str | Path | IO[str]) -> None:
    payload = json.dumps(network_to_dict(network), indent=2, sort_keys=True)
    if hasattr(path, "write"):
        path.write(payload + "\n")
    else:
        Path(path).write_text(payload + "\n")


def load_network(path: str | Path | IO[str]) -> ModeNetwork:
    if hasattr(path, "read"):
        data = json.load(path)
    else:
        data = json.loads(Path(path).read_text())
    return network_from_dict(data)
