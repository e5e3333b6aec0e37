"""Anisotropic spin Hamiltonians for Kramers ions.

The Hilbert space is ordered electron-first, ``S (x) I``.  The Hamiltonian is

    H = mu_B B.g.S  +  I.A.S  +  I.Q.I

in MHz, with B in tesla in the crystal frame (D1, D2, b).  The nuclear
Zeeman term is not included.  For even isotopes (I = 0) only the
electronic Zeeman term remains.

Quadrupole tensors follow the usual convention: symmetric and traceless.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import kernels
from .constants import MU_B_MHZ_PER_T
from .errors import CapacityError, InvalidSpinError, ValidationError

KINDS = ("zeeman_g", "hyperfine_A", "quadrupole_Q")
DEFAULT_MAX_DIM = 64
_UNIT_TOL = 1e-9


def as_spin(j):
    """Parse a spin quantum number (``0.5``, ``"7/2"``, ``Fraction``...).

    Returns a :class:`fractions.Fraction` with denominator 1 or 2.
    """
    try:
        if isinstance(j, str):
            value = Fraction(j.strip())
        else:
            value = Fraction(j).limit_denominator(1000)
    except (ValueError, TypeError, ZeroDivisionError):
        raise InvalidSpinError(f"cannot interpret spin {j!r}") from None
    if value < 0 or (2 * value).denominator != 1:
        raise InvalidSpinError(f"spin must be a non-negative half-integer, got {j!r}")
    if isinstance(j, float) and abs(float(value) - j) > 1e-12:
        raise InvalidSpinError(f"spin must be a non-negative half-integer, got {j!r}")
    return value


@lru_cache(maxsize=None)
def _spin_operators(two_j):
    j = two_j / 2.0
    m = j - np.arange(two_j + 1)
    # <m+1|J+|m> on the superdiagonal (basis ordered m = j ... -j)
    jp = np.diag(np.sqrt(j * (j + 1.0) - m[1:] * (m[1:] + 1.0)), 1).astype(np.complex128)
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    jz = np.diag(m).astype(np.complex128)
    for op in (jx, jy, jz):
        op.setflags(write=False)
    return jx, jy, jz


def spin_operators(j):
    """Return ``(Jx, Jy, Jz)`` for spin ``j`` in the ``|j, m>`` basis, m descending."""
    return _spin_operators(int(2 * as_spin(j)))


@dataclass(frozen=True)
class InteractionTensor:
    """3x3 real coupling tensor.

    ``kind`` is one of ``zeeman_g`` (dimensionless), ``hyperfine_A`` (MHz)
    or ``quadrupole_Q`` (MHz).
    """

    matrix: np.ndarray
    kind: str = "zeeman_g"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown tensor kind {self.kind!r}")
        m = np.array(self.matrix, dtype=float)
        if m.shape == ():
            m = float(m) * np.eye(3)
        if m.shape != (3, 3):
            raise ValidationError(f"{self.kind} tensor must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError(f"{self.kind} tensor has non-finite entries")
        if self.kind == "quadrupole_Q":
            scale = max(np.abs(m).max(), 1.0)
            if np.abs(m - m.T).max() > 1e-9 * scale or abs(np.trace(m)) > 1e-9 * scale:
                raise ValidationError("quadrupole tensor must be symmetric and traceless")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def isotropic(cls, value, kind="zeeman_g"):
        return cls(float(value) * np.eye(3), kind)

    def rotated(self, rot):
        """Tensor in a frame rotated by ``rot``: R T R^T."""
        return InteractionTensor(rot @ self.matrix @ rot.T, self.kind)


def _as_tensor(t, kind):
    if t is None or isinstance(t, InteractionTensor):
        if t is not None and t.kind != kind:
            raise ValidationError(f"expected a {kind} tensor, got {t.kind}")
        return t
    return InteractionTensor(np.asarray(t, dtype=float), kind)


@dataclass(frozen=True)
class SpinSystem:
    """One ion site (or subclass): electron spin S, nuclear spin I and tensors."""

    g: InteractionTensor
    S: Fraction = Fraction(1, 2)
    I: Fraction = Fraction(0)
    A: InteractionTensor = None
    Q: InteractionTensor = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "S", as_spin(self.S))
        object.__setattr__(self, "I", as_spin(self.I))
        if self.S == 0:
            raise InvalidSpinError("electron spin S must be at least 1/2")
        object.__setattr__(self, "g", _as_tensor(self.g, "zeeman_g"))
        object.__setattr__(self, "A", _as_tensor(self.A, "hyperfine_A"))
        object.__setattr__(self, "Q", _as_tensor(self.Q, "quadrupole_Q"))
        if self.I == 0 and (self.A is not None or self.Q is not None):
            raise ValidationError("A and Q tensors require a nonzero nuclear spin I")

    @property
    def dim(self):
        return int(2 * self.S + 1) * int(2 * self.I + 1)

    def rotated(self, rot, label=None):
        """Rotate every tensor by ``rot`` (3x3 orthogonal)."""
        rot = np.asarray(rot, dtype=float)
        return SpinSystem(
            g=self.g.rotated(rot),
            S=self.S,
            I=self.I,
            A=None if self.A is None else self.A.rotated(rot),
            Q=None if self.Q is None else self.Q.rotated(rot),
            label=self.label if label is None else label,
        )


def unit_vector(v, name="direction"):
    """Validate that ``v`` is a finite 3-vector of unit length (1e-9)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} must be a finite 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise ValidationError(f"{name} must have unit length, |{name}| = {np.linalg.norm(v):.12g}")
    return v


def field_vector(b):
    b = np.asarray(b, dtype=float)
    if b.shape != (3,) or not np.all(np.isfinite(b)):
        raise ValidationError("field must be a finite 3-vector in tesla")
    return b


def build_hamiltonian(sys, field, max_dim=DEFAULT_MAX_DIM):
    """Hermitian spin Hamiltonian (MHz) of ``sys`` in the field ``field`` (T)."""
    b = field_vector(field)
    if sys.dim > max_dim:
        raise CapacityError(f"Hilbert dimension {sys.dim} exceeds the cap of {max_dim}")
    s_ops = spin_operators(sys.S)
    n_i = int(2 * sys.I + 1)
    one_i = np.eye(n_i)
    one_s = np.eye(int(2 * sys.S + 1))

    # mu_B B.g.S : effective field seen by the electron spin is g^T B
    beff = MU_B_MHZ_PER_T * (sys.g.matrix.T @ b)
    h_s = sum(beff[k] * s_ops[k] for k in range(3))
    h = np.kron(h_s, one_i)

    if sys.I > 0:
        i_ops = spin_operators(sys.I)
        if sys.A is not None:
            a = sys.A.matrix
            for ia in range(3):
                for sb in range(3):
                    if a[ia, sb] != 0.0:
                        h = h + a[ia, sb] * np.kron(s_ops[sb], i_ops[ia])
        if sys.Q is not None:
            q = sys.Q.matrix
            h_q = sum(
                (
                    q[ia, ib] * (i_ops[ia] @ i_ops[ib])
                    for ia in range(3)
                    for ib in range(3)
                    if q[ia, ib] != 0.0
                ),
                np.zeros((n_i, n_i), dtype=np.complex128),
            )
            h = h + np.kron(one_s, h_q)
    return np.asarray(h, dtype=np.complex128)


@dataclass(frozen=True)
class EigenSystem:
    """Ascending energies (MHz) and the unitary whose columns are eigenvectors."""

    energies: np.ndarray
    states: np.ndarray
    sweeps: int = field(default=0, compare=False)

    def reconstruct(self):
        u = self.states
        return (u * self.energies) @ u.conj().T


def _fix_phases(v):
    # largest-magnitude component of each column made real and positive;
    # the lowest index wins among near-ties so the choice is reproducible
    mags = np.abs(v)
    for k in range(v.shape[1]):
        col = mags[:, k]
        idx = int(np.flatnonzero(col >= col.max() * (1.0 - 1e-12))[0])
        z = v[idx, k]
        v[:, k] *= z.conjugate() / abs(z)
        v[idx, k] = v[idx, k].real  # drop rounding residue in the pivot
    return v


def diagonalize(h, backend=None):
    """Diagonalize a Hermitian matrix with the cyclic Jacobi kernel.

    Energies are returned in ascending order (stable for ties); each
    eigenvector's largest-magnitude component is real and positive.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValidationError("matrix has non-finite entries")
    norm = np.linalg.norm(h)
    if np.linalg.norm(h - h.conj().T) > 1e-10 * norm:
        raise ValidationError("matrix is not Hermitian to 1e-10 relative tolerance")
    h = 0.5 * (h + h.conj().T)
    eigh = kernels.jacobi_eigh if backend is None else backend.jacobi_eigh
    w, v, sweeps = eigh(h)
    order = np.argsort(w, kind="stable")
    w = np.ascontiguousarray(w[order])
    v = _fix_phases(np.ascontiguousarray(v[:, order]))
    return EigenSystem(w, v, sweeps)


def effective_g(g, direction):
    """Effective g-factor for a field along ``direction``: |g^T n|.

    With the Zeeman term written as mu_B B.g.S this is the factor for which
    the S = 1/2 splitting equals g_eff mu_B |B| / h.  For symmetric tensors it
    equals sqrt(n^T g^T g n).
    """
    n = unit_vector(direction)
    m = g.matrix if isinstance(g, InteractionTensor) else np.asarray(g, dtype=float)
    return float(np.linalg.norm(m.T @ n))


@dataclass(frozen=True)
class Transition:
    lower: int
    upper: int
    frequency: float  # MHz
    strength: float


class TransitionTable(tuple):
    """Immutable, frequency-sorted sequence of :class:`Transition`."""

    def frequencies(self):
        return np.array([t.frequency for t in self])

    def strongest(self):
        return max(self, key=lambda t: t.strength) if self else None


def transitions(sys, field, drive_direction=(0.0, 1.0, 0.0), strength_floor=0.0, eig=None):
    """Enumerate level pairs i < j with dipole strength >= ``strength_floor``.

    The strength is ``|<j| n.g.S |i>|^2`` with ``n`` the microwave drive
    direction, evaluated in the eigenbasis at ``field``.
    """
    n = unit_vector(drive_direction, "drive_direction")
    if eig is None:
        eig = diagonalize(build_hamiltonian(sys, field))
    s_ops = spin_operators(sys.S)
    coupling = sys.g.matrix.T @ n
    op = np.kron(sum(coupling[k] * s_ops[k] for k in range(3)), np.eye(int(2 * sys.I + 1)))
    u = eig.states
    m = u.conj().T @ op @ u
    e = eig.energies
    rows = []
    for i in range(len(e)):
        for j in range(i + 1, len(e)):
            strength = float(abs(m[j, i]) ** 2)
            if strength >= strength_floor:
                rows.append(Transition(i, j, float(max(e[j] - e[i], 0.0)), strength))
    rows.sort(key=lambda t: (t.frequency, t.lower, t.upper))
    return TransitionTable(rows)


def c2_rotation(axis):
    """Matrix of the 180 degree rotation about ``axis``: 2 n n^T - 1."""
    n = unit_vector(axis, "axis")
    return 2.0 * np.outer(n, n) - np.eye(3)


def c2_subclass(tensor, axis):
    """Tensor of the C2-related subclass: R T R^T."""
    return tensor.rotated(c2_rotation(axis))


def c2_partner(sys, axis, label=None):
    """Spin system of the magnetically inequivalent partner site."""
    return sys.rotated(c2_rotation(axis), label=label)


def rotation_matrix(axis, angle):
    """Rodrigues rotation by ``angle`` (rad) about ``axis``."""
    n = unit_vector(axis, "axis")
    k = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def resonance_field_along(sys, direction, f_mhz):
    """Field magnitude (T) along ``direction`` at which an S = 1/2, I = 0
    system is resonant with ``f_mhz``."""
    if sys.I != 0 or sys.S != Fraction(1, 2):
        raise ValidationError("closed-form resonance field needs S = 1/2, I = 0")
    geff = effective_g(sys.g, direction)
    if geff == 0.0:
        raise ValidationError("effective g vanishes along this direction")
    return f_mhz / (geff * MU_B_MHZ_PER_T)
