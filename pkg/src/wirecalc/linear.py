"""Linear open systems, linearisation at steady states, and stability verdicts.

A linear system on a Euclidean box with state dimension ``n`` is the triple
``(M_in, M_mid, M_out)`` of shapes ``n x k``, ``n x n`` and ``l x n`` where
``k`` and ``l`` are the total input and output dimensions.  Column order of
``M_in`` follows the declared input ports.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .continuous import (
    ContinuousSystem,
    NewtonConfig,
    steady_states_affine,
    steady_states_newton,
)
from .core import Box, box_sum
from .errors import BoxMismatch, NotDifferentiable, NumericalFailure, SizeUnsupported
from .wiring import WiringDiagram, derivative

MAX_EIGEN_DIM = 64
MAX_SWEEPS = 1000


@dataclass(frozen=True, eq=False)
class LinearSystem:
    box: Box
    m_in: np.ndarray
    m_mid: np.ndarray
    m_out: np.ndarray

    def __post_init__(self):
        if self.box.kind == "finite":
            raise NotDifferentiable("linear systems need Euclidean ports")
        m_mid = np.asarray(self.m_mid, dtype=float)
        n = math.isqrt(m_mid.size)
        if n * n != m_mid.size:
            raise ValueError(f"M_mid with {m_mid.size} entries is not square")
        k, l = self.box.inputs.dim, self.box.outputs.dim
        m_mid = m_mid.reshape(n, n)
        m_in = np.asarray(self.m_in, dtype=float).reshape(n, k)
        m_out = np.asarray(self.m_out, dtype=float).reshape(l, n)
        for m in (m_in, m_mid, m_out):
            m.flags.writeable = False
        object.__setattr__(self, "m_in", m_in)
        object.__setattr__(self, "m_mid", m_mid)
        object.__setattr__(self, "m_out", m_out)

    @classmethod
    def zero(cls, box: Box, n: int) -> "LinearSystem":
        return cls(box, np.zeros((n, box.inputs.dim)), np.zeros((n, n)), np.zeros((box.outputs.dim, n)))

    @property
    def n(self) -> int:
        return self.m_mid.shape[0]

    def block(self) -> np.ndarray:
        """The block matrix ``[[M_mid, M_in], [M_out, 0]]``."""
        top = np.hstack([self.m_mid, self.m_in])
        bottom = np.hstack([self.m_out, np.zeros((self.m_out.shape[0], self.m_in.shape[1]))])
        return np.vstack([top, bottom])

    def allclose(self, other: "LinearSystem", tol: float = 1e-12) -> bool:
        if not self.box.same_types(other.box) or self.n != other.n:
            return False
        return all(np.allclose(a, b, rtol=0, atol=tol) for a, b in
                   zip((self.m_in, self.m_mid, self.m_out), (other.m_in, other.m_mid, other.m_out)))

    def __eq__(self, other):
        if not isinstance(other, LinearSystem):
            return NotImplemented
        return (self.box.same_types(other.box) and np.array_equal(self.m_in, other.m_in)
                and np.array_equal(self.m_mid, other.m_mid) and np.array_equal(self.m_out, other.m_out))

    __hash__ = None

    def __repr__(self):
        return (f"LinearSystem(n={self.n}, in={self.m_in.tolist()}, mid={self.m_mid.tolist()}, "
                f"out={self.m_out.tolist()})")


def direct_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
    out[:a.shape[0], :a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def ls_parallel(l1: LinearSystem, l2: LinearSystem) -> LinearSystem:
    return LinearSystem(box_sum(l1.box, l2.box), direct_sum(l1.m_in, l2.m_in),
                        direct_sum(l1.m_mid, l2.m_mid), direct_sum(l1.m_out, l2.m_out))


def ls_apply(w: WiringDiagram, l: LinearSystem) -> LinearSystem:
    """``N_in = M_in Φ_in``, ``N_mid = M_mid + M_in Φ_mid M_out``, ``N_out = Φ_out M_out``."""
    if not l.box.same_types(w.inner):
        raise BoxMismatch(f"system box {l.box} does not match inner box {w.inner}")
    d = derivative(w)
    return LinearSystem(w.outer, l.m_in @ d.phi_in, l.m_mid + l.m_in @ d.phi_mid @ l.m_out,
                        d.phi_out @ l.m_out)


def linearize_at(f: ContinuousSystem, a: Sequence[float], s0: Sequence[float]) -> LinearSystem:
    """Jacobians of the dynamics (input, state) and of the readout (state) at ``(a, s0)``."""
    a, s0 = tuple(float(x) for x in a), tuple(float(x) for x in s0)
    env = dict(zip(f.input_names, a)) | dict(zip(f.state_vars, s0))
    d_in, d_mid, d_out = f.jacobian_exprs()

    def ev(rows, ncols):
        return np.array([[ex.evaluate(e, env, strict=True) for e in row] for row in rows],
                        dtype=float).reshape(len(rows), ncols)

    return LinearSystem(f.box, ev(d_in, len(f.input_names)), ev(d_mid, f.n), ev(d_out, f.n))


@dataclass(frozen=True)
class LinearizedSteadyState:
    input: tuple
    output: tuple
    state: tuple
    system: LinearSystem


def stst_linearization(f: ContinuousSystem, inputs: Sequence[Sequence[float]], mode: str = "exact-affine",
                       config: NewtonConfig = NewtonConfig()) -> list[LinearizedSteadyState]:
    """Steady states at each input with the linearisation attached.

    In exact-affine mode a continuum of steady states is reported by its
    particular solution and one extra point along each null direction.
    """
    out = []
    for a in inputs:
        a = tuple(float(x) for x in a)
        if mode == "exact-affine":
            sol = steady_states_affine(f, a)
            states = [] if sol.empty else [sol.particular] + [sol.particular + v for v in sol.basis]
        else:
            states = [np.array(r.state) for r in steady_states_newton(f, a, config).roots]
        for s in states:
            s = tuple(float(x) for x in s)
            out.append(LinearizedSteadyState(a, f.read(s), s, linearize_at(f, a, s)))
    return out


# -- eigenvalues and stability ---------------------------------------------------

def hessenberg(a: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity transforms."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0
    return h


def _wilkinson(a, b, c, d):
    tr, det = a + d, a * d - b * c
    disc = cmath.sqrt(tr * tr / 4 - det)
    mu1, mu2 = tr / 2 + disc, tr / 2 - disc
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _qr_eigenvalues(a: np.ndarray) -> list[complex]:
    h = hessenberg(a)
    n = h.shape[0]
    eps = np.finfo(float).eps
    eigs: list[complex] = []
    m = n
    sweeps = since_deflation = 0
    while m > 0:
        if m == 1:
            eigs.append(complex(h[0, 0]))
            break
        sub = abs(h[m - 1, m - 2])
        if sub <= eps * (abs(h[m - 1, m - 1]) + abs(h[m - 2, m - 2])) or sub < 1e-300:
            eigs.append(complex(h[m - 1, m - 1]))
            m -= 1
            since_deflation = 0
            continue
        sweeps += 1
        since_deflation += 1
        if sweeps > MAX_SWEEPS:
            raise NumericalFailure(f"QR iteration did not converge in {MAX_SWEEPS} sweeps")
        if since_deflation % 11 == 10:
            # exceptional shift to break cycles
            mu = h[m - 1, m - 1] + 0.75 * sub
        else:
            mu = _wilkinson(h[m - 2, m - 2], h[m - 2, m - 1], h[m - 1, m - 2], h[m - 1, m - 1])
        blk = h[:m, :m]
        blk -= mu * np.eye(m)
        rots = []
        for k in range(m - 1):
            x, y = blk[k, k], blk[k + 1, k]
            r = math.hypot(abs(x), abs(y))
            c, s = (1.0, 0.0) if r == 0 else (x / r, y / r)
            rk, rk1 = blk[k, k:].copy(), blk[k + 1, k:].copy()
            blk[k, k:] = np.conj(c) * rk + np.conj(s) * rk1
            blk[k + 1, k:] = -s * rk + c * rk1
            rots.append((c, s))
        for k, (c, s) in enumerate(rots):
            top = min(k + 2, m)
            ck, ck1 = blk[:top, k].copy(), blk[:top, k + 1].copy()
            blk[:top, k] = c * ck + s * ck1
            blk[:top, k + 1] = -np.conj(s) * ck + np.conj(c) * ck1
        blk += mu * np.eye(m)
    return eigs


def eigenvalues(a: np.ndarray) -> list[complex]:
    """Closed form up to 2x2, shifted QR iteration up to 64x64."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0] if a.size else 0
    if n > MAX_EIGEN_DIM:
        raise SizeUnsupported(f"eigenvalues of a {n}x{n} matrix exceed the supported {MAX_EIGEN_DIM}")
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("matrix has non-finite entries")
    if n == 0:
        return []
    if n == 1:
        return [complex(a[0, 0])]
    if n == 2:
        tr, det = a[0, 0] + a[1, 1], a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        disc = tr * tr / 4 - det
        if disc >= 0:
            r = math.sqrt(disc)
            return [complex(tr / 2 + r), complex(tr / 2 - r)]
        r = math.sqrt(-disc)
        return [complex(tr / 2, r), complex(tr / 2, -r)]
    return _qr_eigenvalues(a)


def classify_stability(l: LinearSystem | np.ndarray, tol: float = 1e-9) -> str:
    """``"stable"``, ``"unstable"`` or ``"marginal"`` from the spectrum of ``M_mid``."""
    m = l.m_mid if isinstance(l, LinearSystem) else np.asarray(l, dtype=float)
    re = [z.real for z in eigenvalues(m)]
    if any(x > tol for x in re):
        return "unstable"
    if all(x < -tol for x in re):
        return "stable"
    return "marginal"
