"""Pulse-level compilation of the two-ion tomography protocol.

The experiment owns two kinds of coherent control: global half-pi rotations
``G`` acting on both ions, and local half-pi rotations ``L`` acting only on
ion 2 (the ion displaced from the rf null, whose micromotion sideband makes
it individually addressable).  Single-ion readout additionally uses transfer
pulses that force one ion bright before fluorescence detection; those act
after all coherent analysis and are modeled as classical relabelings of the
count outcomes, not as unitaries.

Rotation convention
-------------------
A pulse labelled with axis ``alpha`` applies ``exp(+i (pi/4) sigma_alpha)``
per addressed qubit.  The +i sign (rather than the right-handed
``exp(-i theta/2 sigma)`` convention) is what makes the emitted analysis
rotations conjugate the target observable onto ``sigma_z (x) sigma_z`` with
a plus sign; under the right-handed convention every axis label below would
need its sign flipped.

Measurement semantics
---------------------
A joint setting for observable ``sigma_i (x) sigma_j`` compiles to a
rotation ``R`` (matrix product ``G_alpha . L_beta``, i.e. the local pulse
earlier in the sequence) satisfying

    R^H (sigma_i (x) sigma_j) R = sigma_z (x) sigma_z        (exactly).

The three-outcome bright-ion count POVM is then ``E_k = R P_k R^H`` with
``P_k`` projecting on the subspaces with k bright ions, so that
``P0 + P2 - P1`` estimates ``<sigma_i (x) sigma_j>`` with no sign fixups.
Equivalently, the hardware applies ``R^H`` to the state and then counts
bright ions in the computational basis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import product
from typing import Mapping

import numpy as np

from .qcore import KET, PAULIS_1Q, state_tensor

__all__ = [
    "Pulse",
    "PulseSequence",
    "MeasurementSetting",
    "DesignEntry",
    "ExperimentDesign",
    "CountsRecord",
    "AXES",
    "PREP_LABELS",
    "OBSERVABLES",
    "pulse_unitary",
    "sequence_unitary",
    "compile_preparation",
    "compile_measurement_setting",
    "compile_single_ion_setting",
    "readout_projectors",
    "expectation_from_counts",
    "design_experiment",
    "rho_from_expectations",
]

GLOBAL_HALFPI = "global_halfpi"
LOCAL_HALFPI = "local_halfpi"
TRANSFER_RF = "transfer_rf"
TRANSFER_SIDEBAND = "transfer_sideband"
GLOBAL_CARRIER_PI = "global_carrier_pi"

ROTATION_KINDS = (GLOBAL_HALFPI, LOCAL_HALFPI)
TRANSFER_KINDS = (TRANSFER_RF, TRANSFER_SIDEBAND, GLOBAL_CARRIER_PI)

AXES = ("+x", "-x", "+y", "-y")
# deterministic search preference; reproduces the named decompositions
# R_zx = L_-y, R_xy = G_-y.L_x, R_xz = G_-y.L_y
_AXIS_ORDER = (None, "-y", "+x", "+y", "-x")

PREP_LABELS = ("x", "y", "z", "zbar")
_OBS_AXES = ("0", "x", "y", "z")
#: the 15 measured observables, lexicographic over ("0", "x", "y", "z")
OBSERVABLES = tuple(
    (i, j) for i in _OBS_AXES for j in _OBS_AXES if (i, j) != ("0", "0")
)

_AXIS_SIGMA = {
    "+x": PAULIS_1Q[1],
    "-x": -PAULIS_1Q[1],
    "+y": PAULIS_1Q[2],
    "-y": -PAULIS_1Q[2],
}
_OBS_SIGMA = {"x": PAULIS_1Q[1], "y": PAULIS_1Q[2], "z": PAULIS_1Q[3]}


@dataclass(frozen=True)
class Pulse:
    """One abstract pulse; ``axis`` is meaningful for rotation kinds only."""

    kind: str
    axis: str | None = None

    def __post_init__(self) -> None:
        if self.kind in ROTATION_KINDS:
            if self.axis not in AXES:
                raise ValueError(f"rotation pulse needs an axis in {AXES}")
        elif self.kind in TRANSFER_KINDS:
            if self.axis is not None:
                raise ValueError(f"{self.kind} pulse carries no axis")
        else:
            raise ValueError(f"unknown pulse kind {self.kind!r}")


PulseSequence = tuple[Pulse, ...]


def _halfpi(axis: str, dim_scale: float = 1.0) -> np.ndarray:
    """exp(+i (pi/4) * dim_scale * sigma_axis) as a closed form."""
    half = (np.pi / 4.0) * dim_scale
    return np.cos(half) * np.eye(2) + 1j * np.sin(half) * _AXIS_SIGMA[axis]


def pulse_unitary(pulse: Pulse) -> np.ndarray:
    """Ideal 4x4 unitary of one pulse; transfer pulses act as identity here."""
    if pulse.kind == GLOBAL_HALFPI:
        u = _halfpi(pulse.axis)
        return np.kron(u, u)
    if pulse.kind == LOCAL_HALFPI:
        return np.kron(np.eye(2), _halfpi(pulse.axis))
    return np.eye(4, dtype=complex)


def sequence_unitary(seq: PulseSequence) -> np.ndarray:
    """Composite unitary of a pulse list given in time order.

    Later pulses multiply on the left, so a sequence ``(L, G)`` yields the
    matrix product ``G . L``.
    """
    u = np.eye(4, dtype=complex)
    for pulse in seq:
        u = pulse_unitary(pulse) @ u
    return u


@dataclass(frozen=True)
class MeasurementSetting:
    """Compiled analysis for one observable.

    ``readout_mode`` is ``"joint"`` when both ions are counted, otherwise
    ``"ion1"``/``"ion2"`` names the ion whose state survives the transfer
    construction (the other ion is forced bright, so zero-bright events
    cannot occur and the expectation comes from the two-bright fraction).
    """

    observable: tuple[str, str]
    analysis: PulseSequence
    readout_mode: str

    def rotation(self) -> np.ndarray:
        """The conjugating rotation R built from the rotation pulses."""
        return sequence_unitary(self.analysis)


@dataclass(frozen=True)
class DesignEntry:
    index: int
    prep: tuple[str, str]
    setting: MeasurementSetting


@dataclass(frozen=True)
class ExperimentDesign:
    entries: tuple[DesignEntry, ...]
    shots_per_setting: int


@dataclass(frozen=True)
class CountsRecord:
    """Tallies of realizations with 0, 1 and 2 bright ions for one setting."""

    setting_index: int
    n0: int
    n1: int
    n2: int

    def __post_init__(self) -> None:
        if min(self.n0, self.n1, self.n2) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def shots(self) -> int:
        return self.n0 + self.n1 + self.n2


# ---------------------------------------------------------------------------
# preparation


_PREP_GLOBALS = {
    "z": (),
    "x": (Pulse(GLOBAL_HALFPI, "-y"),),
    "y": (Pulse(GLOBAL_HALFPI, "+x"),),
    # |z> -> |zbar| needs a pi rotation, i.e. two half-pi pulses
    "zbar": (Pulse(GLOBAL_HALFPI, "-y"), Pulse(GLOBAL_HALFPI, "-y")),
}


def _single_qubit_sequence_product(axes: tuple[str, ...]) -> np.ndarray:
    u = np.eye(2, dtype=complex)
    for axis in axes:
        u = _halfpi(axis) @ u
    return u


def compile_preparation(label1: str, label2: str) -> PulseSequence:
    """Pulses (time order) preparing |label1> (x) |label2> from |z>|z>.

    Local fix-up pulses on ion 2 come first, then the global pulses that set
    ion 1, so the composite unitary has the form ``G_part . L_part``.  The
    search below is deterministic and the result is verified exactly; labels
    with ``zbar`` on ion 1 need up to four half-pi pulses since the only
    addressed ion is ion 2.
    """
    for lab in (label1, label2):
        if lab not in PREP_LABELS:
            raise ValueError(f"unknown preparation label {lab!r}")
    globals_ = _PREP_GLOBALS[label1]
    g = _single_qubit_sequence_product(tuple(p.axis for p in globals_))
    target2 = KET[label2]
    local_axes = ("-y", "+x", "+y", "-x")
    candidates = (
        [()]
        + [(a,) for a in local_axes]
        + [pair for pair in product(local_axes, repeat=2)]
    )
    for axes in candidates:
        l = _single_qubit_sequence_product(axes)
        if abs(np.vdot(target2, g @ l @ KET["z"])) ** 2 > 1.0 - 1e-12:
            locals_ = tuple(Pulse(LOCAL_HALFPI, a) for a in axes)
            return locals_ + globals_
    raise AssertionError(f"no preparation found for ({label1}, {label2})")


# ---------------------------------------------------------------------------
# measurement


def _conjugates_to_zz(rot: np.ndarray, obs: np.ndarray) -> bool:
    target = np.kron(PAULIS_1Q[3], PAULIS_1Q[3])
    return bool(np.allclose(rot.conj().T @ obs @ rot, target, atol=1e-12))


def compile_measurement_setting(i: str, j: str) -> MeasurementSetting:
    """Compile the setting measuring sigma_i (x) sigma_j.

    For two nonzero axes the result is a joint setting whose rotation
    ``R = G_alpha . L_beta`` satisfies the conjugation identity in the
    module docstring; a ``"0"`` axis delegates to the single-ion transfer
    construction.
    """
    if i not in _OBS_AXES or j not in _OBS_AXES:
        raise ValueError(f"observable axes must be in {_OBS_AXES}")
    if (i, j) == ("0", "0"):
        raise ValueError("observable (0, 0) is not measurable")
    if j == "0":
        return compile_single_ion_setting("ion1", i)
    if i == "0":
        return compile_single_ion_setting("ion2", j)
    obs = np.kron(_OBS_SIGMA[i], _OBS_SIGMA[j])
    for alpha in _AXIS_ORDER:
        for beta in _AXIS_ORDER:
            seq: PulseSequence = ()
            if beta is not None:
                seq += (Pulse(LOCAL_HALFPI, beta),)
            if alpha is not None:
                seq += (Pulse(GLOBAL_HALFPI, alpha),)
            if _conjugates_to_zz(sequence_unitary(seq), obs):
                return MeasurementSetting((i, j), seq, "joint")
    raise AssertionError(f"no G.L decomposition found for ({i}, {j})")


def compile_single_ion_setting(target: str, axis: str) -> MeasurementSetting:
    """Setting reading a single ion along ``axis`` via the transfer trick.

    An optional pre-rotation maps sigma_axis onto sigma_z on the surviving
    ion (a global pulse when reading ion 1, which has no local handle; a
    local pulse when reading ion 2).  The transfer pulses then force the
    other ion bright: rf pi-pulse moving S to the auxiliary ground level in
    both ions, sideband pi-pulse returning the addressed ion's D population
    to S, plus a global carrier pi-pulse when ion 2 is the one being read.
    After the transfers, two-bright events tag the surviving ion as S.
    """
    if target not in ("ion1", "ion2"):
        raise ValueError("target must be 'ion1' or 'ion2'")
    if axis not in ("x", "y", "z"):
        raise ValueError("axis must be one of x, y, z")
    pre: PulseSequence = ()
    if axis != "z":
        kind = GLOBAL_HALFPI if target == "ion1" else LOCAL_HALFPI
        slot = 0 if target == "ion1" else 1
        single = _OBS_SIGMA[axis]
        want = np.kron(PAULIS_1Q[3], np.eye(2)) if slot == 0 else np.kron(
            np.eye(2), PAULIS_1Q[3]
        )
        obs = np.kron(single, np.eye(2)) if slot == 0 else np.kron(
            np.eye(2), single
        )
        for cand in _AXIS_ORDER[1:]:
            rot = pulse_unitary(Pulse(kind, cand))
            if np.allclose(rot.conj().T @ obs @ rot, want, atol=1e-12):
                pre = (Pulse(kind, cand),)
                break
        else:
            raise AssertionError(f"no pre-rotation for axis {axis}")
    transfers: PulseSequence = (Pulse(TRANSFER_RF), Pulse(TRANSFER_SIDEBAND))
    if target == "ion2":
        transfers += (Pulse(GLOBAL_CARRIER_PI),)
    observable = (axis, "0") if target == "ion1" else ("0", axis)
    return MeasurementSetting(observable, pre + transfers, target)


# product-basis projectors |SS>,|SD>,|DS>,|DD| grouped by bright-ion count
_BRIGHT_BINS = {2: (0,), 1: (1, 2), 0: (3,)}


def readout_projectors(setting: MeasurementSetting) -> tuple[np.ndarray, ...]:
    """POVM elements (E0, E1, E2) with P(k bright) = Tr[rho E_k].

    For single-ion modes the forced-bright ion makes E0 = 0 and the k=2
    element projects the surviving ion (pre-rotated) onto S.
    """
    rot = setting.rotation()
    if setting.readout_mode == "joint":
        elements = []
        for k in (0, 1, 2):
            proj = np.zeros((4, 4), dtype=complex)
            for idx in _BRIGHT_BINS[k]:
                proj[idx, idx] = 1.0
            elements.append(rot @ proj @ rot.conj().T)
        return tuple(elements)
    bright = np.diag([1.0, 0.0]).astype(complex)
    dark = np.diag([0.0, 1.0]).astype(complex)
    if setting.readout_mode == "ion1":
        e2 = np.kron(bright, np.eye(2))
        e1 = np.kron(dark, np.eye(2))
    elif setting.readout_mode == "ion2":
        e2 = np.kron(np.eye(2), bright)
        e1 = np.kron(np.eye(2), dark)
    else:
        raise ValueError(f"unknown readout mode {setting.readout_mode!r}")
    zero = np.zeros((4, 4), dtype=complex)
    return (zero, rot @ e1 @ rot.conj().T, rot @ e2 @ rot.conj().T)


def expectation_from_counts(rec: CountsRecord, mode: str) -> float:
    """Observable expectation in [-1, 1] from bright-ion tallies.

    Joint mode: (n0 + n2 - n1) / N, the parity of the rotated state under
    the bright = sigma_z = +1 convention.  Single-ion modes: the other ion
    is forced bright, so the two-bright fraction is the probability of the
    surviving ion being S and the expectation is (2 n2 - N) / N.
    """
    total = rec.shots
    if total <= 0:
        raise ValueError("counts record has zero shots")
    if mode == "joint":
        return (rec.n0 + rec.n2 - rec.n1) / total
    if mode in ("ion1", "ion2"):
        return (2 * rec.n2 - total) / total
    raise ValueError(f"unknown readout mode {mode!r}")


# ---------------------------------------------------------------------------
# experiment design


def design_experiment(shots: int) -> ExperimentDesign:
    """The canonical 240-setting design: 16 product inputs x 15 observables.

    Ordering is normative so counts files are positionally unambiguous:
    preparations outer (lexicographic over x, y, z, zbar per ion),
    observables inner (lexicographic over 0, x, y, z).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    entries = []
    index = 0
    for l1 in PREP_LABELS:
        for l2 in PREP_LABELS:
            for (i, j) in OBSERVABLES:
                entries.append(
                    DesignEntry(index, (l1, l2), compile_measurement_setting(i, j))
                )
                index += 1
    design = ExperimentDesign(tuple(entries), shots)
    assert len(design.entries) == 240
    return design


def prepared_state(prep: tuple[str, str]) -> np.ndarray:
    """Ideal pure state for a preparation label pair."""
    return state_tensor(KET[prep[0]], KET[prep[1]])


def rho_from_expectations(values: Mapping[tuple[str, str], float]) -> np.ndarray:
    """Reconstruct rho = (1/4) sum_ij <sigma_i sigma_j> sigma_i (x) sigma_j.

    All 15 observables must be present; <I (x) I> is fixed at 1.  The result
    is Hermitian with unit trace but shot noise can push eigenvalues
    negative, in which case a warning is emitted and the matrix returned
    unchanged.
    """
    missing = [obs for obs in OBSERVABLES if obs not in values]
    if missing:
        raise ValueError(f"missing observables: {missing}")
    rho = np.eye(4, dtype=complex)
    for (i, j), val in values.items():
        if (i, j) not in OBSERVABLES:
            raise ValueError(f"unknown observable {(i, j)}")
        s1 = np.eye(2) if i == "0" else _OBS_SIGMA[i]
        s2 = np.eye(2) if j == "0" else _OBS_SIGMA[j]
        rho = rho + float(val) * np.kron(s1, s2)
    rho /= 4.0
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -1e-10:
        warnings.warn(
            f"reconstructed state has negative eigenvalue {lo:.3e}",
            stacklevel=2,
        )
    return rho
