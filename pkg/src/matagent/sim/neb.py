"""Linear image interpolation and (climbing-image) nudged elastic band.

Band forces follow the usual recipe: the upwind tangent of Henkelman and
Jonsson, perpendicular component of the true force, spring force along the
tangent. The climbing image drops its spring force and has the tangential
component of the true force inverted. Images are moved with FIRE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from matagent.errors import CellMismatch, NumericalBlowup, SpeciesMismatch
from matagent.sim.potential import ToyPotentialParams, check_cell, energy_forces_cartesian
from matagent.sim.relax import ConvergenceCriteria, max_force
from matagent.vasp_files.structure import CrystalStructure

CELL_TOL = 1e-8


def check_compatible(initial: CrystalStructure, final: CrystalStructure, tol=CELL_TOL):
    if initial.species != final.species or initial.counts != final.counts:
        raise SpeciesMismatch(
            f"endpoint compositions differ: {initial.species}{initial.counts} "
            f"vs {final.species}{final.counts}"
        )
    diff = np.abs(initial.cell - final.cell).max()
    if diff > tol:
        raise CellMismatch(
            f"endpoint cells differ by up to {diff:.3e} A (tolerance {tol:.0e} A); "
            "were the endpoints relaxed with a changing cell (ISIF>=3)?"
        )


def neb_interpolate(initial: CrystalStructure, final: CrystalStructure, n_images: int):
    """Interior images (endpoints excluded), linear in fractional coordinates
    along the minimum-image displacement."""
    if n_images < 1:
        raise ValueError("need at least one image")
    check_compatible(initial, final)
    f0 = initial.fractional()
    step = final.fractional() - f0
    step -= np.round(step)
    images = []
    for k in range(1, n_images + 1):
        img = initial.with_fractional(f0 + step * (k / (n_images + 1)))
        img.comment = f"image {k:02d}"
        images.append(img)
    return images


@dataclass
class NebResult:
    band: list  # (structure, energy) including both endpoints
    converged: bool
    barrier_ev: float
    delta_e_ev: float
    image_forces: list  # max NEB force per band entry, endpoints 0
    n_steps: int
    climbing_index: int | None


def _tangent(prev, cur, nxt, e_prev, e_cur, e_next):
    t_plus, t_minus = nxt - cur, cur - prev
    if e_next > e_cur > e_prev:
        tau = t_plus
    elif e_next < e_cur < e_prev:
        tau = t_minus
    else:
        dmax = max(abs(e_next - e_cur), abs(e_prev - e_cur))
        dmin = min(abs(e_next - e_cur), abs(e_prev - e_cur))
        if e_next > e_prev:
            tau = t_plus * dmax + t_minus * dmin
        else:
            tau = t_plus * dmin + t_minus * dmax
    norm = np.linalg.norm(tau)
    return tau / norm if norm > 0 else tau


def neb_forces(coords, energies, true_forces, spring, climb, mask):
    """NEB force on each interior image.

    ``coords``/``energies`` include the endpoints; ``true_forces`` covers the
    interior images only.
    """
    n = len(coords) - 2
    out = np.zeros_like(true_forces)
    i_climb = None
    if climb and n > 0:
        i_climb = 1 + int(np.argmax(energies[1:-1]))
    for i in range(1, n + 1):
        tau = _tangent(coords[i - 1], coords[i], coords[i + 1],
                       energies[i - 1], energies[i], energies[i + 1])
        f = true_forces[i - 1]
        f_par = np.vdot(f, tau) * tau
        if i == i_climb:
            out[i - 1] = f - 2 * f_par
        else:
            stretch = np.linalg.norm(coords[i + 1] - coords[i]) - np.linalg.norm(coords[i] - coords[i - 1])
            out[i - 1] = f - f_par + spring * stretch * tau
    out = np.where(mask[None], out, 0.0)
    return out, i_climb


def run_neb(images, endpoints, p: ToyPotentialParams, crit: ConvergenceCriteria,
            spring_const: float = 5.0, climb: bool = True) -> NebResult:
    if not images:
        raise ValueError("need at least one image")
    initial, final = endpoints
    for img in images:
        check_compatible(initial, img)
    check_compatible(initial, final)
    check_cell(initial, p)
    cell, symbols = initial.cell, initial.symbols
    mask = initial.movable_mask()

    def evaluate(x):
        e, f = energy_forces_cartesian(x, cell, symbols, p)
        if not np.isfinite(e):
            raise NumericalBlowup("non-finite energy on the band")
        return e, f

    e_initial, _ = evaluate(initial.cartesian())
    e_final, _ = evaluate(final.cartesian())
    x = np.array([img.cartesian() for img in images])
    fixed_ends = (initial.cartesian(), final.cartesian())

    def band_state(x):
        results = [evaluate(xi) for xi in x]
        energies = np.array([e_initial] + [e for e, _ in results] + [e_final])
        coords = [fixed_ends[0], *x, fixed_ends[1]]
        true_f = np.array([f for _, f in results])
        f_neb, i_climb = neb_forces(coords, energies, true_f, spring_const, climb, mask)
        return energies, f_neb, i_climb

    # FIRE parameters (unit masses)
    dt, dt_max, n_min = 0.05, 0.3, 5
    f_inc, f_dec, a_start, f_alpha = 1.1, 0.5, 0.1, 0.99
    alpha, since_negative = a_start, 0
    v = np.zeros_like(x)

    energies, f_neb, i_climb = band_state(x)
    steps = 0
    while max_force(f_neb.reshape(-1, 3)) > crit.force_tol and steps < crit.max_ionic_steps:
        power = np.vdot(f_neb, v)
        if power > 0:
            fn = np.linalg.norm(f_neb)
            v = (1 - alpha) * v + alpha * np.linalg.norm(v) * f_neb / fn
            since_negative += 1
            if since_negative > n_min:
                dt = min(dt * f_inc, dt_max)
                alpha *= f_alpha
        else:
            v[:] = 0.0
            alpha, since_negative = a_start, 0
            dt *= f_dec
        v = v + dt * f_neb
        dx = dt * v
        biggest = np.linalg.norm(dx.reshape(-1, 3), axis=1).max()
        if biggest > 0.1:
            dx *= 0.1 / biggest
        x = x + dx
        energies, f_neb, i_climb = band_state(x)
        steps += 1

    per_image = [0.0] + [max_force(f) for f in f_neb] + [0.0]
    converged = max(per_image) <= crit.force_tol
    band = [(initial.copy(), float(e_initial))]
    band += [(img.with_cartesian(xi), float(e)) for img, xi, e in zip(images, x, energies[1:-1])]
    band.append((final.copy(), float(e_final)))
    return NebResult(
        band=band,
        converged=converged,
        barrier_ev=float(np.max(energies) - e_initial),
        delta_e_ev=float(e_final - e_initial),
        image_forces=per_image,
        n_steps=steps,
        climbing_index=i_climb,
    )
