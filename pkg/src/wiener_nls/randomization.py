"""Unit-scale Wiener randomization with counter-based Gaussian coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FREQUENCY, Field, Grid, apply_multiplier, fft, spectral
from .norms import sobolev_multiplier
from .projections import default_extent, unit_bump_1d
from .stats import TailFit, fit_tail

_OFFSET = 2**31


class SupportError(ValueError):
    """Datum has Fourier mass outside the declared lattice extent."""


@dataclass(frozen=True)
class CoefficientStream:
    """Standard complex Gaussians ``g_k`` addressed by ``(seed, sample, k)``.

    Each coefficient is drawn from a Philox generator whose key comes from
    ``(seed, sample)`` and whose counter encodes ``k``; no draw depends on
    which other coefficients were requested.
    """

    seed: int

    def _key(self, sample: int) -> np.ndarray:
        return np.random.SeedSequence([self.seed, sample]).generate_state(2, np.uint64)

    def coefficient(self, sample: int, k) -> complex:
        return complex(self.coefficients(sample, [k])[0])

    def coefficients(self, sample: int, points) -> np.ndarray:
        key = self._key(sample)
        out = np.empty(len(points), dtype=np.complex128)
        for i, k in enumerate(points):
            ctr = np.zeros(4, dtype=np.uint64)
            for j, c in enumerate(k):
                ctr[j + 1] = int(c) + _OFFSET
            gen = np.random.Generator(np.random.Philox(key=key, counter=ctr))
            re, im = gen.standard_normal(2)
            out[i] = (re + 1j * im) / np.sqrt(2.0)
        return out


def _axis_weights(grid: Grid, K: int) -> np.ndarray:
    """``A[m, k] = psi_1(freq_m - k)`` for ``k = -K..K``."""
    ks = np.arange(-K, K + 1)
    return unit_bump_1d(grid.freq_1d[:, None] - ks[None, :])


def _active_axis_points(hat: np.ndarray, grid: Grid, K: int, rtol: float) -> list[np.ndarray]:
    """Per-axis lattice indices whose bump touches the datum support."""
    mag = np.abs(hat)
    top = mag.max()
    A = _axis_weights(grid, K)
    out = []
    for j in range(grid.d):
        other = tuple(a for a in range(grid.d) if a != j)
        marg = mag.max(axis=other) if other else mag
        live = marg > rtol * top
        hit = (A[live] > 0).any(axis=0)
        out.append(np.flatnonzero(hit))
    return out


def check_support(f: Field, K: int, rtol: float = 1e-12) -> None:
    g = f.grid
    hat = spectral(f.physical_values(), g)
    top = np.abs(hat).max()
    if top == 0:
        return
    outside = np.zeros(g.shape, dtype=bool)
    for c in g.xi:
        outside = outside | (np.abs(c) > K + 1e-12)
    if np.any(np.abs(hat[outside]) > rtol * top):
        raise SupportError(f"datum has Fourier mass beyond the lattice extent K={K}")


def randomization_multiplier(grid: Grid, K: int, G: np.ndarray) -> np.ndarray:
    """``sum_k G[k] psi(xi - k)`` for a coefficient tensor ``G`` of shape ``(2K+1,)*d``."""
    A = _axis_weights(grid, K)
    out = G
    # contract one lattice axis at a time; the frequency axis lands last
    for _ in range(grid.d):
        out = np.tensordot(out, A, axes=([0], [1]))
    return out


def coefficient_tensor(stream: CoefficientStream, sample: int, grid: Grid, K: int, active=None) -> np.ndarray:
    """Dense ``(2K+1)^d`` tensor of ``g_k``; entries outside ``active`` stay zero."""
    size = 2 * K + 1
    G = np.zeros((size,) * grid.d, dtype=np.complex128)
    axes = active if active is not None else [np.arange(size)] * grid.d
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.d)
    pts = idx - K
    G[tuple(idx.T)] = stream.coefficients(sample, [tuple(p) for p in pts])
    return G


def randomize(
    f: Field,
    seed: int,
    sample: int,
    K: int | None = None,
    coefficients=None,
    rtol: float = 1e-12,
) -> Field:
    """``sum_{|k|_inf <= K} g_k Q_k f``.

    ``coefficients`` overrides the Gaussian stream with an explicit
    ``(2K+1)^d`` tensor, or the scalar ``1`` for the trivial partition check.
    """
    g = f.grid
    K = default_extent(g) if K is None else int(K)
    check_support(f, K, rtol)
    vals = f.physical_values()
    hat = spectral(vals, g)
    if not np.any(hat):
        return Field.zeros(g)
    if coefficients is None:
        active = _active_axis_points(hat, g, K, rtol)
        G = coefficient_tensor(CoefficientStream(seed), sample, g, K, active)
    elif np.isscalar(coefficients):
        G = np.full((2 * K + 1,) * g.d, complex(coefficients))
    else:
        G = np.asarray(coefficients, dtype=np.complex128)
    mult = randomization_multiplier(g, K, G)
    out = Field(g, apply_multiplier(vals, mult, g))
    return fft(out) if f.rep == FREQUENCY else out


# -- moments ----------------------------------------------------------------------


def unit_pieces(f: Field, K: int | None = None, sigma: float = 0.0, rtol: float = 1e-12):
    """Active lattice points and the weighted spectra ``<D>^sigma Q_k f``."""
    g = f.grid
    K = default_extent(g) if K is None else int(K)
    check_support(f, K, rtol)
    hat = spectral(f.physical_values(), g) * sobolev_multiplier(g, sigma)
    active = _active_axis_points(spectral(f.physical_values(), g), g, K, rtol)
    A = _axis_weights(g, K)
    pts, pieces = [], []
    for idx in np.stack(np.meshgrid(*active, indexing="ij"), axis=-1).reshape(-1, g.d):
        w = np.ones(g.shape)
        for j, kj in enumerate(idx):
            sh = [1] * g.d
            sh[j] = g.n
            w = w * A[:, kj].reshape(sh)
        piece = hat * w
        if np.any(piece):
            pts.append(tuple(int(c) - K for c in idx))
            pieces.append(piece.ravel())
    return pts, pieces


def gram_matrix(f: Field, K: int | None = None, sigma: float = 0.0):
    """Lattice points and Gram matrix ``<Q_k f, Q_k' f>_{H^sigma}``."""
    g = f.grid
    pts, pieces = unit_pieces(f, K, sigma)
    if not pieces:
        return pts, np.zeros((0, 0))
    B = np.stack(pieces)
    gram = (B.conj() @ B.T) * g.cell_volume / g.n**g.d
    return pts, gram


def sample_sobolev_norms(f: Field, sigma: float, seed: int, samples, K: int | None = None) -> np.ndarray:
    """``||f^omega||_{H^sigma}`` for each sample, via the Gram matrix."""
    pts, gram = gram_matrix(f, K, sigma)
    stream = CoefficientStream(seed)
    out = np.empty(len(samples))
    for i, s in enumerate(samples):
        c = stream.coefficients(s, pts)
        out[i] = np.sqrt(max(np.real(c.conj() @ gram @ c), 0.0))
    return out


@dataclass
class MomentReport:
    n_samples: int
    sigma: float
    mean: float
    variance: float
    expected: float
    base: float
    relative_deviation: float
    tail: TailFit

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "tail"}
        out["tail"] = self.tail.to_dict()
        return out


def moment_check(f: Field, S: float, n_samples: int, seed: int = 0, K: int | None = None) -> MomentReport:
    """Empirical moments and tail exponent of ``||f^omega||_{H^S}^2``.

    ``expected`` is the exact mean ``sum_k ||Q_k f||^2_{H^S}``; ``base`` is
    ``||f||^2_{H^S}``, which it matches when the datum sits where the bumps
    are flat.
    """
    if n_samples < 100:
        raise ValueError("moment_check needs n_samples >= 100")
    norms = sample_sobolev_norms(f, S, seed, range(n_samples), K)
    sq = norms**2
    _, gram = gram_matrix(f, K, S)
    expected = float(np.real(np.trace(gram)))
    hat = spectral(f.physical_values(), f.grid) * sobolev_multiplier(f.grid, S)
    base = float(np.sum(np.abs(hat) ** 2) * f.grid.cell_volume / f.grid.n**f.grid.d)
    return MomentReport(
        n_samples=n_samples,
        sigma=S,
        mean=float(sq.mean()),
        variance=float(sq.var()),
        expected=expected,
        base=base,
        relative_deviation=float(abs(sq.mean() - base) / base) if base > 0 else 0.0,
        tail=fit_tail(norms),
    )
