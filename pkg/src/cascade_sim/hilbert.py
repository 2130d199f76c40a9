"""Composite Hilbert space and elementary operators as dense complex matrices.

Factor ordering is fixed: 4-level dot, H-mode Fock space, optional V-mode
Fock space, optional sensor Fock space.  Dot basis ordering is
(G, X_H, X_V, XX); Fock levels ascend.  Total dimensions stay small (<= 108)
so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import SimConfig, VModeTreatment, InitialState

QD_DIM = 4
G, XH, XV, XX = 0, 1, 2, 3
QD_LABELS = ("G", "XH", "XV", "XX")


@dataclass(frozen=True)
class SpaceLayout:
    """Dimensions of the tensor factors; n_v / n_s are 0 when the factor is absent."""
    qd_dim: int
    n_h: int
    n_v: int
    n_s: int

    @property
    def factor_dims(self) -> tuple[int, ...]:
        dims = [self.qd_dim, self.n_h]
        if self.n_v:
            dims.append(self.n_v)
        if self.n_s:
            dims.append(self.n_s)
        return tuple(dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def has_v(self) -> bool:
        return self.n_v > 0

    @property
    def has_sensor(self) -> bool:
        return self.n_s > 0


def layout_for(config: SimConfig) -> SpaceLayout:
    n_v = config.fock_cutoff + 1 if config.cavity.v_mode == VModeTreatment.EXPLICIT else 0
    n_s = config.sensor_cutoff + 1 if config.filter.enabled else 0
    return SpaceLayout(qd_dim=QD_DIM, n_h=config.fock_cutoff + 1, n_v=n_v, n_s=n_s)


def annihilator(n: int) -> np.ndarray:
    """Truncated bosonic annihilation operator on n levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def kron_embed(op: np.ndarray, layout: SpaceLayout, factor: int) -> np.ndarray:
    """Embed a single-factor operator into the full space (identity elsewhere)."""
    dims = layout.factor_dims
    if factor < 0 or factor >= len(dims):
        raise ValueError(f"factor index {factor} out of range for {len(dims)} factors")
    if op.shape != (dims[factor], dims[factor]):
        raise ValueError(f"operator shape {op.shape} does not match factor dim {dims[factor]}")
    result = np.eye(1, dtype=complex)
    for i, d in enumerate(dims):
        result = np.kron(result, op if i == factor else np.eye(d, dtype=complex))
    return result


@dataclass(frozen=True)
class OperatorSet:
    """All elementary operators embedded in the composite space."""
    layout: SpaceLayout
    a_h: np.ndarray
    a_v: Optional[np.ndarray]
    s: Optional[np.ndarray]
    sigma: dict            # transition lowering ops keyed by (lower, upper) labels
    projectors: dict       # dot projectors keyed by label
    n_h: np.ndarray
    n_v: Optional[np.ndarray]
    n_s: Optional[np.ndarray]
    identity: np.ndarray

    def ladder_b(self, pol: str) -> np.ndarray:
        """Cascade ladder operator b_i = a_i + |X_i><XX| + |G><X_i| for i in {H, V}."""
        x = "XH" if pol.upper() == "H" else "XV"
        a = self.a_h if pol.upper() == "H" else self.a_v
        if a is None:
            raise ValueError("cascade ladder requires an explicit mode for this polarization")
        return a + self.sigma[(x, "XX")] + self.sigma[("G", x)]

    def mode_op(self, pol: str) -> np.ndarray:
        ops = {"H": self.a_h, "V": self.a_v, "S": self.s}
        op = ops[pol.upper()]
        if op is None:
            raise ValueError(f"mode '{pol}' not present in this layout")
        return op


def qd_matrix_unit(i: int, j: int) -> np.ndarray:
    m = np.zeros((QD_DIM, QD_DIM), dtype=complex)
    m[i, j] = 1.0
    return m


def build_operators(layout: SpaceLayout) -> OperatorSet:
    dims = layout.factor_dims
    fac_h = 1
    fac_v = 2 if layout.has_v else None
    fac_s = (2 + int(layout.has_v)) if layout.has_sensor else None

    a_h = kron_embed(annihilator(layout.n_h), layout, fac_h)
    a_v = kron_embed(annihilator(layout.n_v), layout, fac_v) if fac_v is not None else None
    s = kron_embed(annihilator(layout.n_s), layout, fac_s) if fac_s is not None else None

    idx = {"G": G, "XH": XH, "XV": XV, "XX": XX}
    sigma = {}
    for lower, upper in [("G", "XH"), ("G", "XV"), ("XH", "XX"), ("XV", "XX")]:
        sigma[(lower, upper)] = kron_embed(qd_matrix_unit(idx[lower], idx[upper]), layout, 0)
    projectors = {lbl: kron_embed(qd_matrix_unit(i, i), layout, 0) for lbl, i in idx.items()}

    return OperatorSet(
        layout=layout,
        a_h=a_h, a_v=a_v, s=s,
        sigma=sigma, projectors=projectors,
        n_h=a_h.conj().T @ a_h,
        n_v=(a_v.conj().T @ a_v) if a_v is not None else None,
        n_s=(s.conj().T @ s) if s is not None else None,
        identity=np.eye(int(np.prod(dims)), dtype=complex),
    )


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    """tr(rho @ op); real part only survives for Hermitian op on Hermitian rho."""
    if rho.shape != op.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {op.shape}")
    return complex(np.sum(rho.T * op))


def basis_state(layout: SpaceLayout, qd: int, n_h: int = 0, n_v: int = 0, n_s: int = 0) -> np.ndarray:
    """Density matrix of a product basis state |qd, n_h, n_v, n_s>."""
    dims = layout.factor_dims
    index = [qd, n_h]
    if layout.has_v:
        index.append(n_v)
    if layout.has_sensor:
        index.append(n_s)
    flat = 0
    for i, d in zip(index, dims):
        if not (0 <= i < d):
            raise ValueError(f"basis index {index} out of range for dims {dims}")
        flat = flat * d + i
    rho = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
    rho[flat, flat] = 1.0
    return rho


def initial_density_matrix(config: SimConfig, layout: SpaceLayout) -> np.ndarray:
    qd = XX if config.initial_state == InitialState.EXCITED_XX else G
    return basis_state(layout, qd)


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10,
                         trace_tol: float = 1e-6, eig_floor: float = -1e-8) -> None:
    """Raise if rho violates Hermiticity, unit trace, or positivity tolerances."""
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {np.trace(rho):.3e} deviates from 1")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < eig_floor:
        raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3e}")
