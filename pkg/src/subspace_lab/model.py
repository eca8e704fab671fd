"""Spiked covariance data model, microscopic/macroscopic states and initialization.

A sample from a :class:`SpikedModel` is ``y = U c + sqrt(eta) a`` with
``c = Lambda^{1/2} g``.  The generator of the GAN uses the same structure with
its own (non-orthonormal) basis, see :mod:`subspace_lab.gan`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import orthonormalize

# Counter-based bit generator; Gaussian variates come from Generator.standard_normal.
RNG_ALGORITHM = "numpy.random.Philox(4x64) + Generator.standard_normal (ziggurat)"


def make_rng(seed) -> np.random.Generator:
    """Seeded, splittable, counter-based random stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split_rng(rng: np.random.Generator, k: int) -> list[np.random.Generator]:
    """``k`` independent child streams of ``rng``."""
    return rng.spawn(k)


def _as_diag_vector(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2:
        if arr.shape[0] != arr.shape[1] or np.any(arr - np.diag(np.diag(arr))):
            raise ValueError(f"{name} must be diagonal")
        arr = np.diag(arr).copy()
    elif arr.ndim == 0:
        arr = arr.reshape(1)
    if np.any(arr < 0):
        raise ValueError(f"{name} entries must be non-negative")
    return arr


@dataclass(frozen=True)
class SpikedModel:
    """``y = U c + sqrt(noise_level) a`` with ``Cov(c) = diag(signal_cov_sqrt)**2``.

    ``signal_cov_sqrt`` holds the diagonal of Lambda^{1/2}; a diagonal matrix is
    accepted and flattened.
    """

    basis: np.ndarray
    signal_cov_sqrt: np.ndarray
    noise_level: float

    def __post_init__(self):
        u = np.asarray(self.basis, dtype=float)
        if u.ndim != 2:
            raise ValueError("basis must be an n x d matrix")
        dev = np.linalg.norm(u.T @ u - np.eye(u.shape[1]))
        if dev > 1e-10:
            raise ValueError(f"basis must be column-orthonormal (||U^T U - I|| = {dev:.2e})")
        s = _as_diag_vector(self.signal_cov_sqrt, "signal_cov_sqrt")
        if s.shape != (u.shape[1],):
            raise ValueError(f"signal_cov_sqrt has {s.size} entries, basis has {u.shape[1]} columns")
        if self.noise_level < 0:
            raise ValueError("noise_level must be non-negative")
        object.__setattr__(self, "basis", u)
        object.__setattr__(self, "signal_cov_sqrt", s)
        object.__setattr__(self, "noise_level", float(self.noise_level))

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def signal_cov(self) -> np.ndarray:
        """Lambda as a diagonal matrix."""
        return np.diag(self.signal_cov_sqrt**2)

    def covariance(self) -> np.ndarray:
        """Population covariance ``U Lambda U^T + eta I``."""
        u = self.basis
        return (u * self.signal_cov_sqrt**2) @ u.T + self.noise_level * np.eye(self.n)


def compose_sample(model: SpikedModel, g, a):
    """Deterministic core of :func:`sample`: maps standard normals to ``(y, c)``.

    ``g`` has trailing size ``d`` and ``a`` trailing size ``n``; leading batch
    dimensions are allowed.
    """
    c = np.asarray(g, dtype=float) * model.signal_cov_sqrt
    y = c @ model.basis.T + np.sqrt(model.noise_level) * np.asarray(a, dtype=float)
    return y, c


def sample(model: SpikedModel, rng: np.random.Generator):
    """One draw ``(y, c)``: latent normals first, then the ambient noise."""
    g = rng.standard_normal(model.d)
    a = rng.standard_normal(model.n)
    return compose_sample(model, g, a)


def sample_batch(model: SpikedModel, rng: np.random.Generator, count: int):
    """``count`` draws as rows, ``(Y (count x n), C (count x d))``."""
    g = rng.standard_normal((count, model.d))
    a = rng.standard_normal((count, model.n))
    return compose_sample(model, g, a)


@dataclass(frozen=True)
class MicroState:
    true_basis: np.ndarray
    generator: np.ndarray
    discriminator: np.ndarray

    def __post_init__(self):
        rows = {np.shape(self.true_basis)[0], np.shape(self.generator)[0], np.shape(self.discriminator)[0]}
        if len(rows) != 1:
            raise ValueError("U, V and W must share the ambient dimension n")


@dataclass(frozen=True)
class MacroState:
    """Overlap matrices ``P=U^T V, Q=U^T W, R=V^T W, S=V^T V, Z=W^T W``."""

    P: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        for name in ("P", "Q", "R", "S", "Z"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        d, p = self.P.shape
        q = self.Q.shape[1]
        expected = {"Q": (d, q), "R": (p, q), "S": (p, p), "Z": (q, q)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.P.shape[0], self.P.shape[1], self.Q.shape[1]

    @classmethod
    def zeros(cls, d: int, p: int, q: int) -> "MacroState":
        return cls(np.zeros((d, p)), np.zeros((d, q)), np.zeros((p, q)), np.zeros((p, p)), np.zeros((q, q)))

    @classmethod
    def from_block(cls, m, d: int, p: int, q: int) -> "MacroState":
        """Inverse of :meth:`block` (the leading ``U^T U`` block is dropped)."""
        m = np.asarray(m, dtype=float)
        a, b = d, d + p
        return cls(m[:a, a:b], m[:a, b:], m[a:b, b:], m[a:b, a:b], m[b:, b:])

    def block(self) -> np.ndarray:
        """The Gram matrix ``[[I, P, Q], [P^T, S, R], [Q^T, R^T, Z]]``."""
        d = self.P.shape[0]
        return np.block(
            [
                [np.eye(d), self.P, self.Q],
                [self.P.T, self.S, self.R],
                [self.Q.T, self.R.T, self.Z],
            ]
        )

    def parts(self) -> tuple[np.ndarray, ...]:
        return self.P, self.Q, self.R, self.S, self.Z

    def flat(self) -> np.ndarray:
        """Row-major concatenation of P, Q, R, S, Z (the CSV column order)."""
        return np.concatenate([m.ravel() for m in self.parts()])

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(m**2) for m in self.parts())))

    def __sub__(self, other: "MacroState") -> "MacroState":
        return MacroState(*(a - b for a, b in zip(self.parts(), other.parts())))

    @classmethod
    def column_names(cls, d: int, p: int, q: int) -> list[str]:
        names = []
        for sym, (r, c) in zip("PQRSZ", [(d, p), (d, q), (p, q), (p, p), (q, q)]):
            names += [f"{sym}_{i + 1}_{j + 1}" for i in range(r) for j in range(c)]
        return names

    @classmethod
    def from_flat(cls, vec, d: int, p: int, q: int) -> "MacroState":
        vec = np.asarray(vec, dtype=float)
        shapes = [(d, p), (d, q), (p, q), (p, p), (q, q)]
        out, pos = [], 0
        for r, c in shapes:
            out.append(vec[pos : pos + r * c].reshape(r, c))
            pos += r * c
        return cls(*out)


def macro_state(x: MicroState) -> MacroState:
    u, v, w = (np.asarray(m, dtype=float) for m in (x.true_basis, x.generator, x.discriminator))
    return MacroState(u.T @ v, u.T @ w, v.T @ w, v.T @ v, w.T @ w)


@dataclass
class Trajectory:
    """Append-only record of ``(t, MacroState)`` pairs."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def append(self, t: float, state: MacroState) -> None:
        self.times.append(float(t))
        self.states.append(state)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.states))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    def stack(self, name: str) -> np.ndarray:
        """Array of shape ``(len, rows, cols)`` for one of ``"PQRSZ"``."""
        return np.stack([getattr(s, name) for s in self.states])

    def diagonals(self, name: str = "P") -> np.ndarray:
        return np.diagonal(self.stack(name), axis1=1, axis2=2)

    def as_matrix(self) -> np.ndarray:
        """Rows ``[t, flat(M)]`` matching the trajectory CSV schema."""
        return np.column_stack([self.t, np.stack([s.flat() for s in self.states])])


def scaled_random_init(n: int, d: int, scale: float, rng: np.random.Generator, orthonormal: bool = False) -> np.ndarray:
    """Gaussian ``n x d`` matrix with entry variance ``scale**2 / n``.

    With ``orthonormal=True`` the columns are orthonormalized and rescaled to
    norm ``scale`` exactly.
    """
    if scale < 0:
        raise ValueError("scale must be non-negative")
    x = rng.standard_normal((n, d)) / np.sqrt(n)
    if scale == 0:
        return np.zeros((n, d))
    if orthonormal:
        return scale * orthonormalize(x)
    return scale * x


def _psd_factor(m, tol=1e-10):
    """``F`` with ``F^T F = m`` for a symmetric PSD ``m`` (eigenvalue clipping within ``tol``)."""
    m = 0.5 * (m + m.T)
    if m.size == 0:
        return m
    evals, evecs = np.linalg.eigh(m)
    if evals.min() < -tol * max(1.0, abs(evals).max()):
        raise ValueError(f"target macroscopic state is not PSD (min eigenvalue {evals.min():.3e})")
    # eigenvalues at round-off level are exact zeros; keeping them would leave sqrt(eps)-sized rows
    floor = 16 * np.finfo(float).eps * max(1.0, abs(evals).max()) * len(evals)
    evals = np.where(evals > floor, evals, 0.0)
    return np.sqrt(evals)[:, None] * evecs.T


def matched_init(u, target: MacroState, rng: np.random.Generator):
    """Build ``(V0, W0)`` whose overlaps with ``u`` reproduce ``target`` exactly.

    ``[V W] = U [P Q] + O F`` where ``O`` is a random orthonormal frame in the
    complement of ``span(U)`` and ``F^T F`` is the Schur complement of the
    target Gram matrix, so all five overlap matrices match to round-off.
    """
    u = np.asarray(u, dtype=float)
    n, d = u.shape
    d_, p, q = target.dims
    if d_ != d:
        raise ValueError("target P has the wrong number of rows for this basis")
    pq = np.hstack([target.P, target.Q])
    gram_vw = np.block([[target.S, target.R], [target.R.T, target.Z]])
    factor = _psd_factor(gram_vw - pq.T @ pq)
    k = p + q
    if n < d + k:
        raise ValueError(f"n={n} too small to embed d+p+q={d + k} directions")
    g = rng.standard_normal((n, k))
    g -= u @ (u.T @ g)
    frame = orthonormalize(g)
    frame -= u @ (u.T @ frame)  # re-project; QR round-off can leak back into span(U)
    vw = u @ pq + frame @ factor
    return vw[:, :p], vw[:, p:]


def coordinates_from_gram(m) -> np.ndarray:
    """Square ``C`` with ``C^T C = m``: a coordinate realization of a Gram matrix."""
    return _psd_factor(np.asarray(m, dtype=float))
