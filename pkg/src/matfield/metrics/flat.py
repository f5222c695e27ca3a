"""
Flat metrics built from a rotating frame.

Given an antisymmetric matrix function ``F(t)`` and a distinguished axis
``k``, the frame

    e0(x) = I + F(x_k) x_perp e_k^T,     x_perp = x with component k zeroed

together with the rotation ``Omega`` solving ``dOmega/dt = Omega F(t)`` makes
``Omega e0 dx`` an exact differential ``dQ``. The metric ``g = e0^T e0`` is
therefore flat even though it is far from constant.
"""

import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..geometry import MetricField

__all__ = [
    "FlatFrameSpec",
    "FlatFrame",
    "flat_frame_metric",
    "random_antisymmetric",
    "random_flat_spec",
]

ANTISYMMETRY_TOL = 1e-12
ORTHOGONALITY_TOL = 1e-12
RK4_STEP = 1e-3
REORTHO_EVERY = 100


@dataclass(frozen=True)
class FlatFrameSpec:
    """Axis ``k`` (0-based), antisymmetric ``F(t)`` and the initial rotation.

    ``F`` may be a constant array or a callable; ``dF`` is its derivative
    and defaults to a finite difference.
    """

    k: int
    F: object
    omega0: np.ndarray
    dF: Optional[Callable] = None

    def __post_init__(self):
        omega0 = np.asarray(self.omega0, dtype=float)
        n = omega0.shape[0]
        if omega0.shape != (n, n):
            raise ValueError("omega0 must be square")
        if np.max(np.abs(omega0.T @ omega0 - np.eye(n))) > ORTHOGONALITY_TOL:
            raise ValueError("omega0 is not orthogonal")
        if not 0 <= self.k < n:
            raise ValueError(f"axis k={self.k} out of range for dimension {n}")
        object.__setattr__(self, "omega0", omega0)
        for t in (-1.0, 0.0, 0.5, 1.0):
            a = self.F_at(t)
            if a.shape != (n, n):
                raise ValueError(f"F has shape {a.shape}, expected {(n, n)}")
            if np.max(np.abs(a + a.T)) > ANTISYMMETRY_TOL * max(1.0, np.max(np.abs(a))):
                raise ValueError(f"F is not antisymmetric at t={t}")

    @property
    def dim(self):
        return self.omega0.shape[0]

    def F_at(self, t):
        if callable(self.F):
            return np.asarray(self.F(t), dtype=float)
        return np.asarray(self.F, dtype=float)

    def dF_at(self, t):
        if not callable(self.F):
            return np.zeros((self.dim, self.dim))
        if self.dF is not None:
            return np.asarray(self.dF(t), dtype=float)
        h = 1e-4 * max(1.0, abs(t))
        F = self.F_at
        return (-F(t + 2 * h) + 8 * F(t + h) - 8 * F(t - h) + F(t - 2 * h)) / (12 * h)


def _frame(spec, x):
    x = np.asarray(x, dtype=float)
    k = spec.k
    perp = x.copy()
    perp[k] = 0.0
    e0 = np.eye(spec.dim)
    e0[:, k] += spec.F_at(x[k]) @ perp
    return e0, perp


def _frame_derivatives(spec, x):
    x = np.asarray(x, dtype=float)
    k, n = spec.k, spec.dim
    F = spec.F_at(x[k])
    _, perp = _frame(spec, x)
    de = np.zeros((n, n, n))
    for c in range(n):
        if c == k:
            de[c, :, k] = spec.dF_at(x[k]) @ perp
        else:
            de[c, :, k] = F[:, c]
    return de


def flat_frame_metric(spec):
    """``g = e0^T e0`` with analytic derivatives."""

    def metric(x):
        e0, _ = _frame(spec, x)
        return e0.T @ e0

    def d_metric(x):
        e0, _ = _frame(spec, x)
        de = _frame_derivatives(spec, x)
        prod = np.einsum("cji,jk->cik", de, e0)
        return prod + np.einsum("cik->cki", prod)

    n = spec.dim
    return MetricField(
        name="flat-frame",
        dim=n,
        eval=metric,
        d_eval=d_metric,
        chart="rectilinear",
        params={"k": spec.k},
        domain=(-np.ones(n), np.ones(n)),
    )


def _reorthonormalize(omega):
    q, r = np.linalg.qr(omega)
    return q * np.sign(np.diag(r))


class FlatFrame:
    """Integrates the rotation ``Omega(t)`` and the flat coordinates ``Q(x)``.

    RK4 with a fixed step runs along the grid ``t_j = j h`` from 0, with a
    final partial step to the requested ``t``. Checkpoints every
    ``REORTHO_EVERY`` steps are re-orthonormalized and cached; the cache is
    guarded by a lock so concurrent readers see complete entries only.
    """

    def __init__(self, spec, step=RK4_STEP, reortho_every=REORTHO_EVERY):
        self.spec = spec
        self.step = step
        self.reortho_every = reortho_every
        n = spec.dim
        self._cache = {0: (spec.omega0.copy(), np.zeros(n), 0.0)}
        self._lock = threading.Lock()

    def _rhs(self, t, omega):
        return omega @ self.spec.F_at(t)

    def _rk4(self, t, omega, acc, h):
        ek = np.eye(self.spec.dim)[:, self.spec.k]
        k1 = self._rhs(t, omega)
        a1 = omega @ ek
        o2 = omega + 0.5 * h * k1
        k2 = self._rhs(t + 0.5 * h, o2)
        a2 = o2 @ ek
        o3 = omega + 0.5 * h * k2
        k3 = self._rhs(t + 0.5 * h, o3)
        a3 = o3 @ ek
        o4 = omega + h * k3
        k4 = self._rhs(t + h, o4)
        a4 = o4 @ ek
        return omega + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4), acc + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)

    def _checkpoint(self, j):
        """State after ``j`` re-orthonormalization blocks (negative j runs backwards)."""
        with self._lock:
            if j in self._cache:
                return self._cache[j]
            known = max((i for i in self._cache if i * j >= 0 and abs(i) <= abs(j)), key=abs)
            omega, acc, drift = self._cache[known]
        sign = 1 if j > 0 else -1
        h = sign * self.step
        i = known
        while i != j:
            t = i * self.reortho_every * self.step
            for m in range(self.reortho_every):
                omega, acc = self._rk4(t + m * h, omega, acc, h)
            n = omega.shape[0]
            drift = max(drift, float(np.max(np.abs(omega.T @ omega - np.eye(n)))))
            omega = _reorthonormalize(omega)
            i += sign
            with self._lock:
                self._cache.setdefault(i, (omega, acc, drift))
        return omega, acc, drift

    def state(self, t):
        """``(Omega(t), integral_0^t Omega e_k dt, max orthogonality drift)``."""
        block = self.reortho_every * self.step
        j = int(np.trunc(t / block))
        omega, acc, drift = self._checkpoint(j)
        t0 = j * block
        remaining = t - t0
        steps = int(np.ceil(abs(remaining) / self.step - 1e-9))
        if steps:
            h = remaining / steps
            for m in range(steps):
                omega, acc = self._rk4(t0 + m * h, omega, acc, h)
            n = omega.shape[0]
            drift = max(drift, float(np.max(np.abs(omega.T @ omega - np.eye(n)))))
        return omega, acc, drift

    def omega(self, t):
        return self.state(t)[0]

    def orthogonality_drift(self, t):
        return self.state(t)[2]

    def q(self, x):
        """Flat coordinates ``Q(x) = int_0^{x_k} Omega e_k dt + Omega(x_k) x_perp``."""
        x = np.asarray(x, dtype=float)
        omega, acc, _ = self.state(x[self.spec.k])
        perp = x.copy()
        perp[self.spec.k] = 0.0
        return acc + omega @ perp

    def frame(self, x):
        """Full frame ``Omega(x_k) e0(x)``; its Gram matrix is the metric."""
        e0, _ = _frame(self.spec, x)
        return self.omega(np.asarray(x, dtype=float)[self.spec.k]) @ e0


def random_antisymmetric(rng, n, norm=1.0):
    a = rng.normal(size=(n, n))
    a = a - a.T
    return norm * a / np.linalg.norm(a, 2)


def random_flat_spec(rng, n=4, k=None, norm=1.0):
    """Spec with ``F(t) = A + B sin(t)`` and spectral norm at most ``norm``."""
    k = int(rng.integers(n)) if k is None else k
    A = random_antisymmetric(rng, n, 0.6 * norm)
    B = random_antisymmetric(rng, n, 0.4 * norm)
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    omega0 = q * np.sign(np.diag(r))
    return FlatFrameSpec(k=k, F=lambda t: A + B * np.sin(t), dF=lambda t: B * np.cos(t), omega0=omega0)
