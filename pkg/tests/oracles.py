"""Brute-force reference computations used by the property and acceptance tests."""

import numpy as np
from scipy.special import sph_harm_y

from matagent.scoring.soap import cutoff_function, radial_basis
from matagent.sim.potential import energy_forces_cartesian
from matagent.vasp_files.structure import CrystalStructure


def grid_soap(s, p, nr=64, nt=40, nphi=80):
    """Site-averaged power spectrum by direct quadrature of each site's
    neighbour density on a spherical grid (Gauss-Legendre in r and cos(theta),
    uniform in phi) against R_n(r) Y_lm*(theta, phi), complex harmonics.

    Only for isolated clusters: neighbours are taken from the listed atoms,
    with no periodic images.
    """
    x, wr = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * p.cutoff * (x + 1)
    wr = 0.5 * p.cutoff * wr
    ct, wt = np.polynomial.legendre.leggauss(nt)
    theta = np.arccos(ct)
    phi = np.arange(nphi) * 2 * np.pi / nphi
    R, T, P = np.meshgrid(r, theta, phi, indexing="ij")
    weight = (wr * r**2)[:, None, None] * wt[None, :, None] * (2 * np.pi / nphi)
    points = np.stack([R * np.sin(T) * np.cos(P), R * np.sin(T) * np.sin(P), R * np.cos(T)], axis=-1)
    rn = radial_basis(r, p)
    cart = s.cartesian()
    species = s.symbols
    kinds = sorted(set(species))
    spectra = []
    for i in range(len(cart)):
        # per-species density around site i
        dens = {k: np.zeros(R.shape) for k in kinds}
        for j in range(len(cart)):
            d = cart[j] - cart[i]
            w = 1.0 if i == j else float(cutoff_function(np.linalg.norm(d), p.cutoff))
            dens[species[j]] += w * np.exp(-np.sum((points - d) ** 2, axis=-1) / (2 * p.sigma**2))
        coeff = {}
        for k in kinds:
            per_l = []
            for l in range(p.l_max + 1):
                ylm = np.stack([sph_harm_y(l, m, T, P) for m in range(-l, l + 1)])
                proj = np.einsum("mabc,abc->ma", np.conj(ylm), dens[k] * weight)
                per_l.append(proj @ rn.T)  # (2l+1, n)
            coeff[k] = per_l
        blocks = []
        for ia, a in enumerate(kinds):
            for b in kinds[ia:]:
                blk = np.zeros((p.n_max, p.n_max, p.l_max + 1))
                for l in range(p.l_max + 1):
                    blk[:, :, l] = np.real(coeff[a][l].T @ np.conj(coeff[b][l]))
                blocks.append(blk.reshape(-1))
        spectra.append(np.concatenate(blocks))
    return np.mean(spectra, axis=0)


def cluster(positions, species, counts, box=20.0):
    """Isolated cluster centred in a large cubic box."""
    pos = np.asarray(positions, float)
    pos = pos - pos.mean(axis=0) + box / 2
    return CrystalStructure("cluster", 1.0, np.eye(3) * box, list(species), list(counts), pos,
                            coordinate_mode="Cartesian")


def dense_scan_saddle(energy, x_a, x_b, n=20001):
    """Highest energy along a straight 1D path minus the start energy."""
    xs = np.linspace(x_a, x_b, n)
    values = np.array([energy(x) for x in xs])
    return float(values.max() - values[0])


def numeric_forces(s, p, h=1e-5):
    """Central-difference forces, -dE/dx, one Cartesian component at a time."""
    cart = s.cartesian()
    out = np.zeros_like(cart)
    for i in range(len(cart)):
        for k in range(3):
            plus, minus = cart.copy(), cart.copy()
            plus[i, k] += h
            minus[i, k] -= h
            ep, _ = energy_forces_cartesian(plus, s.cell, s.symbols, p)
            em, _ = energy_forces_cartesian(minus, s.cell, s.symbols, p)
            out[i, k] = -(ep - em) / (2 * h)
    return out
