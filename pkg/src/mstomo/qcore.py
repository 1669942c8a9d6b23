"""Dense complex linear algebra for the two-qubit space.

Conventions, normative for every module and file format in this package:

* Qubit basis: ``|z> = (1, 0)`` is the bright ``S`` state and carries
  sigma_z eigenvalue +1; ``|zbar> = (0, 1)`` is the dark ``D`` state.
  Two-qubit kets are ordered ``|SS>, |SD>, |DS>, |DD>`` with ion 1 the
  left tensor factor.
* Operator basis: ``A[a] = sigma_i (x) sigma_j`` with ``i, j`` running
  over ``(I, X, Y, Z)`` and ``a = 4*i + j``.  The Paulis are kept
  unnormalized, so ``Tr[A[a]^H A[b]] = 4 delta_ab``.
* A process ``E`` is stored as a 16x16 matrix ``chi`` with
  ``E(rho) = sum_ab chi[a, b] A[a] rho A[b]^H``.  In this convention the
  identity process is ``chi[0, 0] = 1`` and zero elsewhere, and a unitary
  ``U = sum_a c_a A[a]`` maps to the rank-1 matrix ``chi = c c^H``.

Superoperators use row-major (C-order) vectorization throughout:
``vec(A rho B) = (A kron B^T) vec(rho)``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PAULIS",
    "PAULI_LABELS",
    "KET",
    "pauli_element",
    "pauli_label",
    "pauli_index",
    "state_tensor",
    "identity_chi",
    "chi_to_super",
    "super_to_chi",
    "apply_chi",
    "unitary_to_chi",
    "tp_map_matrix",
    "tp_residual",
    "min_chi_eigenvalue",
    "is_cptp",
    "require_cptp",
    "validate_density_matrix",
    "fidelity",
    "purity",
]

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS_1Q = (SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z)
PAULI_LABELS = tuple(
    "".join(p) for p in ((i + j) for i in "IXYZ" for j in "IXYZ")
)

#: The 16 two-qubit Pauli products, index a = 4*i + j over (I, X, Y, Z).
PAULIS = np.stack(
    [np.kron(PAULIS_1Q[a // 4], PAULIS_1Q[a % 4]) for a in range(16)]
)
PAULIS.setflags(write=False)

#: Cardinal single-qubit states; keys are the preparation/measurement labels.
KET = {
    "z": np.array([1, 0], dtype=complex),
    "zbar": np.array([0, 1], dtype=complex),
    "x": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "xbar": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "y": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "ybar": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}
for _k in KET:
    KET[_k].setflags(write=False)

# K[a*16+b] = (A_a kron conj(A_b)).ravel(): the superoperator of the map
# rho -> A_a rho A_b^H under row-major vectorization.
_KRON_AB = np.stack(
    [
        np.kron(PAULIS[a], PAULIS[b].conj()).ravel()
        for a in range(16)
        for b in range(16)
    ]
)
# PROD[a*16+b] = (A_b A_a).ravel(), used by the trace-preservation sum.
_PROD_BA = np.stack(
    [(PAULIS[b] @ PAULIS[a]).ravel() for a in range(16) for b in range(16)]
)


def pauli_element(a: int) -> np.ndarray:
    """Return the two-qubit Pauli product A_a = sigma_i (x) sigma_j, a = 4i+j."""
    if not 0 <= a <= 15:
        raise ValueError(f"Pauli index must be in 0..15, got {a}")
    return PAULIS[a].copy()


def pauli_label(a: int) -> str:
    """Two-letter label of basis element a, e.g. 10 -> 'YY'."""
    if not 0 <= a <= 15:
        raise ValueError(f"Pauli index must be in 0..15, got {a}")
    return PAULI_LABELS[a]


def pauli_index(label: str) -> int:
    """Inverse of :func:`pauli_label`."""
    try:
        return PAULI_LABELS.index(label.upper())
    except ValueError:
        raise ValueError(f"unknown Pauli label {label!r}") from None


def state_tensor(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Kronecker product of two unit-norm single-qubit pure states."""
    q1 = np.asarray(q1, dtype=complex)
    q2 = np.asarray(q2, dtype=complex)
    for q in (q1, q2):
        if q.shape != (2,):
            raise ValueError("single-qubit states must be length-2 vectors")
        if abs(np.linalg.norm(q) - 1.0) > 1e-12:
            raise ValueError("input states must be unit norm")
    return np.kron(q1, q2)


def identity_chi() -> np.ndarray:
    """chi matrix of the identity process: chi[0, 0] = 1."""
    chi = np.zeros((16, 16), dtype=complex)
    chi[0, 0] = 1.0
    return chi


def chi_to_super(chi: np.ndarray) -> np.ndarray:
    """16x16 superoperator S with vec(E(rho)) = S vec(rho) (row-major vec)."""
    return (np.asarray(chi, dtype=complex).ravel() @ _KRON_AB).reshape(16, 16)


def super_to_chi(sup: np.ndarray) -> np.ndarray:
    """Inverse of :func:`chi_to_super`; uses Tr[K_ab^H S] / 16."""
    chi = (_KRON_AB.conj() @ np.asarray(sup, dtype=complex).ravel()) / 16.0
    return chi.reshape(16, 16)


def _check_hermitian(mat: np.ndarray, tol: float, what: str) -> None:
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev > tol:
        raise ValueError(f"{what} is not Hermitian (max deviation {dev:.3e})")


def apply_chi(chi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply the process chi to a density matrix: sum_ab chi_ab A_a rho A_b^H."""
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (16, 16):
        raise ValueError("chi must be 16x16")
    _check_hermitian(chi, 1e-10, "chi")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("rho must be 4x4")
    out = (chi_to_super(chi) @ rho.ravel()).reshape(4, 4)
    # the exact result is Hermitian for Hermitian chi; remove rounding dust
    return 0.5 * (out + out.conj().T)


def unitary_to_chi(unitary: np.ndarray) -> np.ndarray:
    """chi matrix of a unitary map rho -> U rho U^H.

    Expands U = sum_a c_a A_a with c_a = Tr[A_a U] / 4 and returns the
    rank-1 matrix chi = c c^H.  Global phases of U cancel.
    """
    unitary = np.asarray(unitary, dtype=complex)
    if unitary.shape != (4, 4):
        raise ValueError("unitary must be 4x4")
    dev = np.max(np.abs(unitary.conj().T @ unitary - np.eye(4)))
    if dev > 1e-10:
        raise ValueError(f"matrix is not unitary (max deviation {dev:.3e})")
    coeff = np.einsum("aij,ji->a", PAULIS, unitary) / 4.0
    return np.outer(coeff, coeff.conj())


def tp_map_matrix(chi: np.ndarray) -> np.ndarray:
    """The 4x4 matrix sum_ab chi_ab A_b^H A_a; equals I for a TP map."""
    return (np.asarray(chi, dtype=complex).ravel() @ _PROD_BA).reshape(4, 4)


def tp_residual(chi: np.ndarray) -> float:
    """Max-element deviation of the trace-preservation sum from identity."""
    return float(np.max(np.abs(tp_map_matrix(chi) - np.eye(4))))


def min_chi_eigenvalue(chi: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (chi + chi.conj().T))[0])


def is_cptp(
    chi: np.ndarray, *, eig_floor: float = -1e-8, tp_tol: float = 1e-6
) -> bool:
    """True if chi is Hermitian, PSD down to eig_floor, and TP within tp_tol."""
    chi = np.asarray(chi, dtype=complex)
    if np.max(np.abs(chi - chi.conj().T)) > 1e-8:
        return False
    if min_chi_eigenvalue(chi) < eig_floor:
        return False
    return tp_residual(chi) <= tp_tol


def require_cptp(
    chi: np.ndarray,
    *,
    eig_floor: float = -1e-8,
    tp_tol: float = 1e-6,
    what: str = "chi",
) -> None:
    if not is_cptp(chi, eig_floor=eig_floor, tp_tol=tp_tol):
        raise ValueError(
            f"{what} is not CPTP (min eig {min_chi_eigenvalue(chi):.3e}, "
            f"TP residual {tp_residual(chi):.3e})"
        )


def validate_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    eig_floor: float = -1e-10,
) -> None:
    """Raise ValueError unless rho is a valid two-qubit density matrix.

    Eigenvalues down to ``eig_floor`` are tolerated (linear inversion of
    shot-noise data routinely produces slightly negative eigenvalues);
    anything more negative is an error.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("density matrix must be 4x4")
    _check_hermitian(rho, herm_tol, "density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr} != 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < eig_floor:
        raise ValueError(f"density matrix has eigenvalue {lo:.3e} < {eig_floor:.0e}")


def _clamped_psd(rho: np.ndarray, eig_floor: float) -> np.ndarray:
    """Hermitize, reject eigenvalues below eig_floor, clamp the rest at 0."""
    rho = 0.5 * (np.asarray(rho, dtype=complex) + np.asarray(rho).conj().T)
    w, v = np.linalg.eigh(rho)
    if w[0] < eig_floor:
        raise ValueError(f"matrix has eigenvalue {w[0]:.3e} < {eig_floor:.0e}")
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray, *, eig_floor: float = -1e-8) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    Matrix square roots are taken through Hermitian eigendecompositions with
    eigenvalue clamping at zero, which is robust for the near-pure states
    this package produces.  Inputs are accepted with small Hermiticity/trace
    slack (outputs of maps that are TP only to ~1e-6 must remain usable) but
    are rejected when an eigenvalue falls below ``eig_floor``.
    """
    for mat, name in ((rho, "rho"), (sigma, "sigma")):
        mat = np.asarray(mat)
        if mat.shape != (4, 4):
            raise ValueError(f"{name} must be 4x4")
        _check_hermitian(np.asarray(mat, dtype=complex), 1e-8, name)
        if abs(np.trace(mat).real - 1.0) > 1e-5:
            raise ValueError(f"{name} trace {np.trace(mat).real} != 1")
    r = _clamped_psd(rho, eig_floor)
    s = _clamped_psd(sigma, eig_floor)
    w, v = np.linalg.eigh(r)
    sqrt_r = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt_r @ s @ sqrt_r
    ev = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    val = float(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2)
    return min(max(val, 0.0), 1.0)


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2]; 1 for pure states, 1/4 for the two-qubit maximally mixed."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("rho must be 4x4")
    _check_hermitian(rho, 1e-8, "rho")
    return float(np.trace(rho @ rho).real)
