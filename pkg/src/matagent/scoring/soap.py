"""Averaged SOAP power spectrum and cosine similarity.

Neighbour densities are sums of Gaussians of width ``sigma`` weighted by a
cosine cutoff, the centre atom included with weight 1. They are expanded in
``n_max`` radial functions (Gaussians centred on an even grid over
``[0, cutoff)``, multiplied by the cosine cutoff and Loewdin-orthonormalised
on ``r^2 dr``) times real spherical harmonics up to ``l_max``. The angular
integral of a Gaussian is done analytically,

    int dOmega Y_lm(rhat) exp(-|r - d|^2 / 2 s^2)
        = 4 pi exp(-(r - d)^2 / 2 s^2) [i_l(r d / s^2) exp(-r d / s^2)] Y_lm(dhat),

and the radial integral by Gauss-Legendre quadrature. Site power spectra
``p[ab, n, n', l] = sum_m c[a, n, l, m] c[b, n', l, m]`` are formed for every
unordered species pair ``a <= b`` (lexicographic) and averaged over all sites.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import ive, sph_harm_y

from matagent.errors import EmptyStructure, LayoutMismatch, ZeroNorm
from matagent.vasp_files.structure import CrystalStructure

N_QUAD = 200
N_TABLE = 801


@dataclass(frozen=True)
class SoapParams:
    cutoff: float = 5.0
    n_max: int = 8
    l_max: int = 6
    sigma: float = 0.5

    def __post_init__(self):
        if not (self.cutoff > 0 and self.sigma > 0):
            raise ValueError("cutoff and sigma must be positive")
        if self.n_max < 1 or self.l_max < 0:
            raise ValueError("need n_max >= 1 and l_max >= 0")


@dataclass(frozen=True)
class SoapVector:
    components: np.ndarray
    species_pairs: tuple
    params: SoapParams

    def __post_init__(self):
        expected = len(self.species_pairs) * self.block_size(self.params)
        if self.components.shape != (expected,):
            raise ValueError(f"expected {expected} components, got {self.components.shape}")
        if not np.all(np.isfinite(self.components)):
            raise ValueError("non-finite SOAP components")

    @staticmethod
    def block_size(p: SoapParams) -> int:
        return p.n_max * p.n_max * (p.l_max + 1)

    def block(self, pair) -> np.ndarray:
        k = self.species_pairs.index(tuple(pair))
        size = self.block_size(self.params)
        return self.components[k * size:(k + 1) * size]

    def aligned(self, pairs) -> "SoapVector":
        """Same vector on a wider layout, absent pairs zero-filled."""
        size = self.block_size(self.params)
        out = np.zeros(len(pairs) * size)
        for k, pair in enumerate(pairs):
            if pair in self.species_pairs:
                out[k * size:(k + 1) * size] = self.block(pair)
        return SoapVector(out, tuple(pairs), self.params)


def cutoff_function(r, rc):
    return np.where(r < rc, 0.5 * (np.cos(np.pi * r / rc) + 1.0), 0.0)


@lru_cache(maxsize=16)
def _basis(p: SoapParams):
    """Quadrature nodes, weights and orthonormal radial functions on them."""
    x, w = np.polynomial.legendre.leggauss(N_QUAD)
    r = 0.5 * p.cutoff * (x + 1.0)
    w = 0.5 * p.cutoff * w
    prim = _primitives(r, p)
    overlap = (prim * (w * r**2)) @ prim.T
    vals, vecs = np.linalg.eigh(overlap)
    transform = vecs @ np.diag(vals**-0.5) @ vecs.T
    return r, w, transform


def _primitives(r, p: SoapParams):
    centers = p.cutoff * np.arange(p.n_max) / p.n_max
    width = p.cutoff / p.n_max
    return np.exp(-((r[None, :] - centers[:, None]) ** 2) / (2 * width**2)) * cutoff_function(r, p.cutoff)


def radial_basis(r, p: SoapParams) -> np.ndarray:
    """Orthonormal radial functions R_n(r), shape (n_max, len(r))."""
    _, _, transform = _basis(p)
    return transform @ _primitives(np.asarray(r, dtype=float), p)


def real_sph_harm(l_max, theta, phi) -> np.ndarray:
    """Real spherical harmonics, shape (..., (l_max+1)^2), ordered l then m."""
    out = []
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            y = sph_harm_y(l, abs(m), theta, phi)
            if m > 0:
                out.append(np.sqrt(2) * (-1) ** m * y.real)
            elif m < 0:
                out.append(np.sqrt(2) * (-1) ** m * y.imag)
            else:
                out.append(y.real)
    return np.stack(out, axis=-1)


def _radial_integrals(d, p: SoapParams):
    """I[k, l, n] = 4 pi int r^2 R_n(r) exp(-(r-d_k)^2/2s^2) i_l(r d_k/s^2) e^{-r d_k/s^2} dr."""
    r, w, _ = _basis(p)
    rn = radial_basis(r, p)  # (N, Q)
    s2 = p.sigma**2
    d = np.asarray(d, dtype=float)[:, None]
    x = d * r[None, :] / s2
    gauss = np.exp(-((r[None, :] - d) ** 2) / (2 * s2))
    out = np.empty((len(d), p.l_max + 1, p.n_max))
    safe = np.maximum(x, 1e-300)
    for l in range(p.l_max + 1):
        # scaled modified spherical Bessel function i_l(x) e^{-x}
        il = np.sqrt(np.pi / (2 * safe)) * ive(l + 0.5, safe)
        if l == 0:
            il = np.where(x > 0, il, 1.0)
        else:
            il = np.where(x > 0, il, 0.0)
        integrand = gauss * il * (w * r**2)[None, :]
        out[:, l, :] = 4 * np.pi * integrand @ rn.T
    return out


@lru_cache(maxsize=16)
def _radial_table(p: SoapParams):
    """Cubic spline of the radial integrals over neighbour distance.

    The integrals depend on the distance alone, so one table per parameter
    set replaces per-pair quadrature; the spline error is far below 1e-8.
    """
    grid = np.linspace(0.0, p.cutoff, N_TABLE)
    return CubicSpline(grid, _radial_integrals(grid, p), axis=0)


def _neighbours(s: CrystalStructure, rc: float):
    """All (centre, neighbour, displacement) within rc over periodic images,
    excluding each atom's own zero-shift copy."""
    cell = s.cell
    cart = s.cartesian()
    heights = s.heights()
    reach = [int(np.ceil(rc / h)) for h in heights]
    shifts = np.array(list(itertools.product(*(range(-k, k + 1) for k in reach))), dtype=float) @ cell
    n = len(cart)
    d = cart[None, :, None, :] - cart[:, None, None, :] + shifts[None, None, :, :]
    dist = np.linalg.norm(d, axis=-1)
    zero = np.all(shifts == 0, axis=1)
    self_mask = np.eye(n, dtype=bool)[:, :, None] & zero[None, None, :]
    keep = (dist < rc) & ~self_mask
    i, j, _ = np.nonzero(keep)
    return i, j, d[keep], dist[keep]


def species_pairs(species) -> tuple:
    kinds = sorted(set(species))
    return tuple((a, b) for a, b in itertools.combinations_with_replacement(kinds, 2))


def site_coefficients(s: CrystalStructure, p: SoapParams):
    """Expansion coefficients c[site, species, n, lm] and the sorted species list."""
    kinds = sorted(set(s.symbols))
    kind_of = np.array([kinds.index(x) for x in s.symbols])
    n_sites = s.n_atoms
    n_lm = (p.l_max + 1) ** 2
    coeffs = np.zeros((n_sites, len(kinds), p.n_max, n_lm))
    l_of_lm = np.repeat(np.arange(p.l_max + 1), 2 * np.arange(p.l_max + 1) + 1)

    # centre atom: only l = 0 survives, Y_00 = 1/sqrt(4 pi)
    centre = _radial_integrals([0.0], p)[0, 0] / np.sqrt(4 * np.pi)
    coeffs[np.arange(n_sites), kind_of, :, 0] += centre

    i, j, d, dist = _neighbours(s, p.cutoff)
    if len(i):
        theta = np.arccos(np.clip(d[:, 2] / dist, -1.0, 1.0))
        phi = np.arctan2(d[:, 1], d[:, 0])
        ylm = real_sph_harm(p.l_max, theta, phi)  # (P, n_lm)
        radial = _radial_table(p)(dist)  # (P, L, N)
        weight = cutoff_function(dist, p.cutoff)
        contrib = weight[:, None, None] * radial[:, l_of_lm, :].transpose(0, 2, 1) * ylm[:, None, :]
        np.add.at(coeffs, (i, kind_of[j]), contrib)
    return coeffs, kinds


def power_spectrum(coeffs, kinds, p: SoapParams) -> np.ndarray:
    """Site power spectra, shape (sites, pairs * n_max^2 * (l_max+1))."""
    l_of_lm = np.repeat(np.arange(p.l_max + 1), 2 * np.arange(p.l_max + 1) + 1)
    blocks = []
    for a, b in itertools.combinations_with_replacement(range(len(kinds)), 2):
        prod = np.einsum("snk,smk->snmk", coeffs[:, a], coeffs[:, b])
        per_l = np.zeros(prod.shape[:3] + (p.l_max + 1,))
        for l in range(p.l_max + 1):
            per_l[..., l] = prod[..., l_of_lm == l].sum(axis=-1)
        blocks.append(per_l.reshape(len(coeffs), -1))
    return np.concatenate(blocks, axis=1)


def soap_descriptor(s: CrystalStructure, p: SoapParams = SoapParams()) -> SoapVector:
    if s.n_atoms == 0:
        raise EmptyStructure("structure has no atoms")
    coeffs, kinds = site_coefficients(s, p)
    spectra = power_spectrum(coeffs, kinds, p)
    return SoapVector(spectra.mean(axis=0), species_pairs(kinds), p)


def soap_similarity(a: SoapVector, b: SoapVector) -> float:
    if a.species_pairs != b.species_pairs or a.params != b.params:
        raise LayoutMismatch(f"layouts differ: {a.species_pairs} vs {b.species_pairs}")
    na, nb = np.linalg.norm(a.components), np.linalg.norm(b.components)
    if na == 0 or nb == 0:
        raise ZeroNorm("cannot take the cosine of a zero vector")
    return float(np.clip(np.dot(a.components, b.components) / (na * nb), 0.0, 1.0))


def structure_similarity(x: CrystalStructure, y: CrystalStructure, p: SoapParams = SoapParams()) -> float:
    """Cosine similarity of averaged SOAP vectors over the union species-pair layout."""
    a, b = soap_descriptor(x, p), soap_descriptor(y, p)
    if a.species_pairs != b.species_pairs:
        union = species_pairs({k for pair in a.species_pairs + b.species_pairs for k in pair})
        a, b = a.aligned(union), b.aligned(union)
    return soap_similarity(a, b)
