"""OUTCAR text in the subset of VASP's layout that the extractors read.

No timestamps or host details are printed, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

from matagent.vasp_files.incar import write_incar
from matagent.vasp_files.outcar import CONVERGED_LINE, FERMI_LINE, TOTEN_LINE

RULE = " " + "-" * 83


def header(incar=None, structure=None, mode=None):
    out = [" vasp.sim 0.1 (simulated backend, toy pair potential)", ""]
    if mode:
        out.append(f" run mode: {mode}")
    if structure is not None:
        out.append(f" POSCAR = {structure.comment}")
        out.append("   ions per type = " + " ".join(str(c) for c in structure.counts))
        out.append("   species       = " + " ".join(structure.species))
    if incar is not None:
        out.append(" INCAR:")
        out.extend("   " + line for line in write_incar(incar).splitlines())
    out.append("")
    return out


def ionic_step(index, cart, forces, energy):
    out = [
        "",
        "-" * 39 + f" Ionic step {index:6d}  " + "-" * 43,
        "",
        " POSITION                                       TOTAL-FORCE (eV/Angst)",
        RULE,
    ]
    for (x, y, z), (fx, fy, fz) in zip(cart, forces):
        out.append(f" {x:12.5f} {y:12.5f} {z:12.5f}    {fx:14.6f} {fy:14.6f} {fz:14.6f}")
    out += [
        RULE,
        "",
        "  FREE ENERGIE OF THE ION-ELECTRON SYSTEM (eV)",
        "  ---------------------------------------------------",
        TOTEN_LINE.format(energy=energy),
        "",
    ]
    return out


def eigenvalues(rows, fermi):
    out = ["", FERMI_LINE.format(fermi=fermi), ""]
    current = None
    for k, b, e, occ in rows:
        if k != current:
            current = k
            out += ["", f" k-point {k + 1:5d} :       0.0000    0.0000    0.0000",
                    "  band No.  band energies     occupation"]
        out.append(f"  {b + 1:6d}   {e:12.6f}   {occ:9.5f}")
    out.append("")
    return out


def converged():
    return ["", CONVERGED_LINE, ""]


def error(message):
    return ["", " ERROR: the calculation was not started", *(f"   {m}" for m in message.splitlines()), ""]


def render(lines) -> str:
    return "\n".join(lines) + "\n"
