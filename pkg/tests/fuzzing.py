"""Mutation fuzzer for the file parsers.

Seeds are valid files; each case applies a few random edits (byte flips,
deleted or duplicated lines, swapped tokens, junk numbers). A parser may
accept the result or raise a library error; anything else is a crash.
"""

import random

from matagent.errors import MatAgentError
from matagent.vasp_files import (
    extract_outcar_summary,
    parse_incar,
    parse_kpoints,
    parse_nebef,
    parse_poscar,
    parse_potcar,
)

SEEDS = {
    parse_poscar: [
        "Si\n1.0\n5.43 0 0\n0 5.43 0\n0 0 5.43\nSi\n2\nDirect\n0 0 0\n0.25 0.25 0.25\n",
        "CO on Pt\n1.0\n8 0 0\n0 8 0\n0 0 20\nPt C O\n2 1 1\nSelective dynamics\nCartesian\n"
        "0 0 0 F F F\n2 2 0 T T T\n2 2 2 T T T\n2 2 3.1 T T T\n",
    ],
    parse_incar: [
        "SYSTEM = Si bulk\nENCUT = 520\nISMEAR = 0 ; SIGMA = 0.05\nLHFCALC = .TRUE.\nMAGMOM = 2*1.0 0.5\n"
        "# comment\nEDIFF = 1E-6 ! trailing\n",
        "IBRION = 2\nPOTIM = 0.5\nNSW = 100\nISIF = 2\nEDIFFG = -0.02\n",
    ],
    parse_kpoints: [
        "Automatic\n0\nGamma\n8 8 8\n0 0 0\n",
        "k path\n20\nLine-mode\nReciprocal\n0 0 0 ! G\n0.5 0 0.5 ! X\n\n0.5 0 0.5 ! X\n0.5 0.5 0.5 ! L\n",
        "mesh\n0\nMonkhorst-Pack\n4 4 1\n",
    ],
    parse_potcar: [
        "  PAW_PBE Si 05Jan2001\n TITEL  = PAW_PBE Si 05Jan2001\n End of Dataset\n"
        "  PAW_PBE O 08Apr2002\n TITEL  = PAW_PBE O 08Apr2002\n End of Dataset\n",
    ],
    extract_outcar_summary: [
        " free  energy   TOTEN  =       -10.84 eV\n  energy  without entropy=  -10.80  energy(sigma->0) =  -10.82\n"
        " E-fermi :   5.92     XC(G=0): -8.1\n"
        " POSITION                                       TOTAL-FORCE (eV/Angst)\n"
        " -----------------------------------------------------------------------------------\n"
        "      0.0 0.0 0.0     0.01 -0.02 0.00\n"
        " -----------------------------------------------------------------------------------\n"
        " reached required accuracy - stopping structural energy minimisation\n",
    ],
    parse_nebef: [
        "  0  0.000000  -10.000000  0.000000\n  1  0.010000  -9.700000  0.350000\n"
        "  2  0.000000  -9.500000  0.500000\n  3  0.012000  -9.800000  0.200000\n  4  0.000000  -9.900000  0.100000\n",
    ],
}

JUNK = ["", " ", "=", "!", "#", ";", "*", "nan", "inf", "-", ".TRUE.", "1e400", "0", "-1", "abc", "\t", "\x00", "é",
        "1 2 3", "T T T", "Direct", "Line-mode", "Selective", "99999999999999999999"]


def mutate(text: str, rng: random.Random) -> str:
    lines = text.split("\n")
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(6)
        k = rng.randrange(len(lines)) if lines else 0
        if op == 0 and lines:
            del lines[k]
        elif op == 1 and lines:
            lines.insert(k, lines[rng.randrange(len(lines))])
        elif op == 2 and lines:
            toks = lines[k].split()
            if toks:
                toks[rng.randrange(len(toks))] = rng.choice(JUNK)
                lines[k] = " ".join(toks)
        elif op == 3 and lines and lines[k]:
            chars = list(lines[k])
            chars[rng.randrange(len(chars))] = chr(rng.randrange(32, 127))
            lines[k] = "".join(chars)
        elif op == 4:
            lines.insert(k, rng.choice(JUNK))
        else:
            lines = lines[: rng.randrange(len(lines) + 1)]
    return "\n".join(lines)


def fuzz_parsers(n_cases: int, seed: int = 0) -> tuple:
    """Run ``n_cases`` mutated inputs through the parsers; return (accepted, rejected, crashes)."""
    rng = random.Random(seed)
    targets = [(fn, s) for fn, seeds in SEEDS.items() for s in seeds]
    accepted = rejected = 0
    crashes = []
    for _ in range(n_cases):
        fn, text = targets[rng.randrange(len(targets))]
        case = mutate(text, rng)
        try:
            fn(case)
            accepted += 1
        except MatAgentError:
            rejected += 1
        except Exception as exc:  # noqa: BLE001 - the point is to catch everything else
            crashes.append((fn.__name__, case, repr(exc)))
    return accepted, rejected, crashes
