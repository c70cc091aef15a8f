"""Regenerate the bundled toy benchmark and its mock LLM scripts.

Six entries (2 SR, 2 BS, 1 AE, 1 TS) built on the toy pair potential.
Reference labels come from a tighter protocol than the golden decks use:
force tolerance 0.005 eV/A, and five climbing images for the barrier. The
scores of a golden run therefore sit just below full marks rather than
at exactly 100 by construction.

    python scripts/make_toy_benchmark.py [--out src/matagent/data]
"""

import argparse
import shutil
import textwrap
from pathlib import Path

import numpy as np
import yaml

from matagent.scoring.tasks import AE, BS, SR, TS
from matagent.sim import ConvergenceCriteria, neb_interpolate, relax_structure, run_neb
from matagent.sim.backend import default_potential
from matagent.sim.bands import load_band_fixtures
from matagent.vasp_files.poscar import write_poscar
from matagent.vasp_files.potcar import make_potcar_stub
from matagent.vasp_files.structure import CrystalStructure

REFERENCE = ConvergenceCriteria(force_tol=0.005, max_ionic_steps=2000, step_size=0.5, ibrion=2)
REFERENCE_IMAGES = 5

GAMMA = "Gamma only\n0\nGamma\n1 1 1\n"
MESH = "Automatic mesh\n0\nGamma\n2 2 2\n"
LINE = textwrap.dedent("""\
    G-X-L path
    20
    Line-mode
    Reciprocal
    0.0 0.0 0.0 ! G
    0.5 0.0 0.5 ! X
    0.5 0.0 0.5 ! X
    0.5 0.5 0.5 ! L
    """)

FCC = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])


def supercell(basis, a, n):
    frac = np.array([(b + np.array([i, j, k])) / n
                     for i in range(n) for j in range(n) for k in range(n) for b in basis])
    return frac, np.eye(3) * a * n


def rattle(cart, sigma, seed):
    return cart + np.random.default_rng(seed).normal(0.0, sigma, cart.shape)


def cuni_alloy():
    frac, lat = supercell(FCC, 3.58, 3)
    is_ni = np.zeros(108, dtype=bool)
    is_ni[np.random.default_rng(3).choice(108, 36, replace=False)] = True
    order = np.concatenate([np.nonzero(~is_ni)[0], np.nonzero(is_ni)[0]])
    return CrystalStructure("Cu2Ni random fcc 3x3x3 rattled", 1.0, lat, ["Cu", "Ni"], [72, 36],
                            rattle((frac @ lat)[order], 0.05, 4), "Cartesian")


def cu_fcc():
    frac, lat = supercell(FCC, 3.61, 3)
    return CrystalStructure("Cu fcc 3x3x3 rattled", 1.0, lat, ["Cu"], [108],
                            rattle(frac @ lat, 0.05, 2), "Cartesian")


def zincblende(a, cation, anion, comment):
    # cations first, then anions, so species stay contiguous
    fa, lat = supercell(FCC, a, 2)
    fb, _ = supercell(FCC + 0.25, a, 2)
    species = [cation] if cation == anion else [cation, anion]
    counts = [64] if cation == anion else [32, 32]
    return CrystalStructure(comment, 1.0, lat, species, counts, np.vstack([fa, fb]), "Direct")


def pt_slab(with_co, site="hollow"):
    """Three-layer Pt(100) slab, 4x4 surface cell, bottom layer frozen."""
    a0, n, dz = 3.92 / np.sqrt(2), 4, 3.92 / 2
    pt = np.array([[(i + 0.5 * (z % 2)) * a0, (j + 0.5 * (z % 2)) * a0, 2.0 + z * dz]
                   for z in range(3) for i in range(n) for j in range(n)])
    lat = np.diag([n * a0, n * a0, 22.0])
    flags = np.ones((len(pt), 3), dtype=bool)
    flags[:n * n] = False
    if not with_co:
        return CrystalStructure("Pt(100) 4x4 slab", 1.0, lat, ["Pt"], [len(pt)], pt, "Cartesian",
                                selective_flags=flags)
    top = pt[-n * n:]
    anchor = top[n + 1] + ([0.5 * a0, 0.5 * a0, 0.0] if site == "hollow" else 0.0)
    c = anchor + [0.05, -0.03, 1.6]
    o = c + [0.03, 0.0, 1.18]
    flags = np.vstack([flags, np.ones((2, 3), dtype=bool)])
    return CrystalStructure(f"CO on Pt(100) {site} site", 1.0, lat, ["Pt", "C", "O"], [len(pt), 1, 1],
                            np.vstack([pt, c, o]), "Cartesian", selective_flags=flags)


def co_gas():
    lat = np.eye(3) * 12.0
    pos = np.array([[6.0, 6.0, 5.4], [6.0, 6.0, 6.62]])
    return CrystalStructure("CO molecule", 1.0, lat, ["C", "O"], [1, 1], pos, "Cartesian")


def h_hop(x_h):
    lat = np.diag([12.0, 11.0, 11.0])
    pos = np.array([[2.0, 5.5, 5.5], [7.0, 5.5, 5.5], [x_h, 5.52, 5.49]])
    flags = np.array([[False] * 3, [False] * 3, [True] * 3])
    return CrystalStructure("H hop Pd -> Ag", 1.0, lat, ["Pd", "Ag", "H"], [1, 1, 1], pos, "Cartesian",
                            selective_flags=flags)


# -- decks --------------------------------------------------------------------------

SR_DECK = """SYSTEM = relaxation
PREC = Accurate
ENCUT = 520
EDIFF = 1E-6
ISMEAR = 0
SIGMA = 0.05
IBRION = 2
POTIM = 0.5
NSW = 100
ISIF = 2
EDIFFG = -0.02"""

BS_DECK = """SYSTEM = HSE06 band structure
ICHARG = 11
LHFCALC = .TRUE.
HFSCREEN = 0.2
AEXX = 0.25
ALGO = Normal
ENCUT = 400
ISMEAR = 0
SIGMA = 0.01
LORBIT = 11"""

BS_DECK_SEMILOCAL = """SYSTEM = PBE band structure
ICHARG = 11
ALGO = Normal
ENCUT = 400
ISMEAR = 0
SIGMA = 0.01
LORBIT = 11"""

AE_DECK = """SYSTEM = adsorption
ENCUT = 450
EDIFF = 1E-5
ISMEAR = 1
SIGMA = 0.1
IVDW = 12
IBRION = 2
POTIM = 0.5
NSW = 300
ISIF = 2
EDIFFG = -0.02"""

TS_RELAX_DECK = """SYSTEM = endpoint relaxation
ENCUT = 450
EDIFF = 1E-6
ISMEAR = 0
SIGMA = 0.05
IBRION = 2
POTIM = 0.5
NSW = 300
ISIF = 2
EDIFFG = -0.01"""

TS_NEB_DECK = """SYSTEM = CI-NEB
IMAGES = 3
SPRING = -5
LCLIMB = .TRUE.
ENCUT = 450
EDIFF = 1E-6
ISMEAR = 0
SIGMA = 0.05
IBRION = 3
POTIM = 0.1
NSW = 500
ISIF = 2
EDIFFG = -0.02"""


def fence(deck):
    return f"```\n{deck}\n```"


# -- entries ------------------------------------------------------------------------


def relaxed(s, p):
    res = relax_structure(s, p, REFERENCE)
    assert res.converged, s.comment
    return res.structure, res.trace[-1]


def build_entries(p):
    gaps = load_band_fixtures()
    alloy_ref, _ = relaxed(cuni_alloy(), p)
    cu_ref, _ = relaxed(cu_fcc(), p)
    _, e_gas = relaxed(co_gas(), p)
    _, e_surf = relaxed(pt_slab(False), p)
    _, e_ads = relaxed(pt_slab(True), p)
    is_ref, e_is = relaxed(h_hop(3.4), p)
    fs_ref, e_fs = relaxed(h_hop(5.6), p)
    band = run_neb(neb_interpolate(is_ref, fs_ref, REFERENCE_IMAGES), (is_ref, fs_ref), p,
                   ConvergenceCriteria(0.005, 5000, 0.1, 3), spring_const=5.0, climb=True)
    assert band.converged

    def sr(id_, s, ref, elements, request):
        return id_, SR, request, {"POSCAR": write_poscar(s), "KPOINTS": MESH, "POTCAR": make_potcar_stub(elements)}, \
            {"reference": ("POSCAR_ref", write_poscar(ref))}

    def bs(id_, s, elements, request):
        return id_, BS, request, {"POSCAR": write_poscar(s), "KPOINTS": LINE, "POTCAR": make_potcar_stub(elements)}, \
            {"band_gap": gaps[s.reduced_formula()].gap_ev}

    return [
        sr("cuni_alloy", cuni_alloy(), alloy_ref, ["Cu", "Ni"],
           "Relax the atomic positions of this distorted Cu-Ni solid solution at fixed cell."),
        sr("cu_fcc", cu_fcc(), cu_ref, ["Cu"],
           "Optimise the geometry of this fcc copper supercell; keep the lattice fixed."),
        bs("si_bands", zincblende(5.43, "Si", "Si", "Si diamond 2x2x2"), ["Si"],
           "Calculate the band structure of silicon along G-X-L and report the band gap."),
        bs("gaas_bands", zincblende(5.65, "Ga", "As", "GaAs zincblende 2x2x2"), ["Ga", "As"],
           "What is the band gap of zincblende GaAs? Compute its band structure."),
        ("pt_co", AE, "Compute the adsorption energy of CO in the fourfold hollow site of Pt(100).",
         {"POSCAR_gas": write_poscar(co_gas()), "POSCAR_surface": write_poscar(pt_slab(False)),
          "POSCAR_adsorbate": write_poscar(pt_slab(True)), "KPOINTS": GAMMA,
          "POTCAR": make_potcar_stub(["Pt", "C", "O"])},
         {"e_ads": e_ads - e_surf - e_gas}),
        ("h_pd_ag", TS, "Find the transition state and energy barrier for H hopping from the Pd site to the Ag site.",
         {"POSCAR_initial": write_poscar(h_hop(3.4)), "POSCAR_final": write_poscar(h_hop(5.6)),
          "KPOINTS": GAMMA, "POTCAR": make_potcar_stub(["Pd", "Ag", "H"])},
         {"delta_e": e_fs - e_is, "barrier": band.barrier_ev}),
    ]


def write_entries(entries, root: Path):
    if root.exists():
        shutil.rmtree(root)
    for id_, task, request, inputs, labels in entries:
        d = root / id_
        d.mkdir(parents=True)
        for role, text in inputs.items():
            (d / role).write_text(text)
        label_doc = {}
        for key, value in labels.items():
            if isinstance(value, tuple):
                (d / value[0]).write_text(value[1])
                label_doc[key] = value[0]
            else:
                label_doc[key] = round(float(value), 8)
        doc = {"id": id_, "task_type": task, "request": request,
               "inputs": {role: role for role in inputs}, "labels": label_doc}
        (d / "entry.yaml").write_text(yaml.safe_dump(doc, sort_keys=False, width=100))


# -- mock scripts -----------------------------------------------------------------------

WORKFLOW_OF = {"cuni_alloy": "structure_relaxation", "cu_fcc": "structure_relaxation",
               "si_bands": "band_structure", "gaas_bands": "band_structure",
               "pt_co": "adsorption_energy", "h_pd_ag": "transition_state"}


def agent_script(note, overrides=None):
    answers = {}
    for id_, wf in WORKFLOW_OF.items():
        answers[f"{id_}/select_workflow"] = f"```{wf}```"
    answers.update({
        "sr_params": "Settings for an ionic relaxation:\n\n" + fence(SR_DECK),
        "bs_params": "HSE06 is needed for a reliable gap:\n\n" + fence(BS_DECK),
        "ae_params": fence(AE_DECK),
        "ts_relax_params": fence(TS_RELAX_DECK),
        "ts_neb_params": fence(TS_NEB_DECK),
    })
    answers.update(overrides or {})
    return render_script(note, answers)


def render_script(note, answers):
    lines = [f"# {line}" if line else "#" for line in note.strip().splitlines()]
    for header, body in answers.items():
        lines += ["", f"=== {header} ===", body]
    return "\n".join(lines) + "\n"


def baseline_script():
    answers = {
        "cuni_alloy/monolithic": fence(SR_DECK),
        "cu_fcc/monolithic": fence(SR_DECK),
        "si_bands/monolithic": fence(BS_DECK_SEMILOCAL),
        "gaas_bands/monolithic": fence(BS_DECK_SEMILOCAL),
        "pt_co/monolithic": fence(AE_DECK.replace("POTIM = 0.5\n", "")),
        "h_pd_ag/monolithic": fence(TS_RELAX_DECK),
    }
    return render_script("Single-shot answers for the no-agent baseline: one deck per entry,\n"
                         "applied unchanged to every structure of the entry.", answers)


SCRIPTS = {
    "golden.txt": lambda: agent_script("Golden answers: every step of every toy entry succeeds."),
    "faulty_unknown_tag.txt": lambda: agent_script(
        "cuni_alloy receives a deck with a misspelt tag (EDIFG). The backend rejects it\n"
        "with rule unknown_tag and the SR item loses completion and accuracy.",
        {"cuni_alloy/sr_params": fence(SR_DECK.replace("EDIFFG", "EDIFG"))}),
    "faulty_potim.txt": lambda: agent_script(
        "pt_co receives IBRION = 2 without POTIM. All three relaxations are rejected\n"
        "with rule ibrion_potim, so the AE item earns no points.",
        {"pt_co/ae_params": fence(AE_DECK.replace("POTIM = 0.5\n", ""))}),
    "faulty_isif.txt": lambda: agent_script(
        "h_pd_ag relaxes its endpoints with ISIF = 3. The cells drift apart, the\n"
        "interpolation fails with CellMismatch and the TS item loses the 2\n"
        "interpolation and 6 NEB points.",
        {"h_pd_ag/ts_relax_params": fence(TS_RELAX_DECK.replace("ISIF = 2", "ISIF = 3"))}),
    "faulty_no_hybrid.txt": lambda: agent_script(
        "si_bands receives a semilocal deck. The run completes but the gap comes out\n"
        "at 0.6 of the reference, costing 40% of the item's accuracy points.",
        {"si_bands/bs_params": fence(BS_DECK_SEMILOCAL)}),
    "faulty_format.txt": lambda: agent_script(
        "gaas_bands answers in prose twice, so the format-correction retry also\n"
        "fails and the BS item stops at its first step.",
        {"gaas_bands/bs_params": "Use HSE06 with ICHARG = 11 and LHFCALC on."}),
    "baseline.txt": baseline_script,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/matagent/data")
    args = ap.parse_args()
    entries = build_entries(default_potential())
    write_entries(entries, args.out / "toy_benchmark")
    mock = args.out / "mock"
    mock.mkdir(parents=True, exist_ok=True)
    for name, make in SCRIPTS.items():
        (mock / name).write_text(make())
    for id_, task, _, _, labels in entries:
        shown = {k: (v[0] if isinstance(v, tuple) else round(float(v), 6)) for k, v in labels.items()}
        print(f"{id_:<12}{task:<4}{shown}")


if __name__ == "__main__":
    main()
