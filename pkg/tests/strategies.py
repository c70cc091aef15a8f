"""Hypothesis strategies and small builders shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from matagent.vasp_files.incar import IncarDocument, IncarEntry, TagValue
from matagent.vasp_files.structure import CrystalStructure

ELEMENTS = ["H", "C", "O", "Si", "Cu", "Pt", "Ga", "As"]

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


@st.composite
def structures(draw, max_atoms=6):
    n_species = draw(st.integers(1, 3))
    species = draw(st.lists(st.sampled_from(ELEMENTS), min_size=n_species,
                            max_size=n_species, unique=True))
    counts = draw(st.lists(st.integers(1, 3), min_size=n_species, max_size=n_species))
    n = sum(counts)
    # well-conditioned lattice: diagonal plus bounded shear
    diag = draw(st.lists(st.floats(3.0, 12.0), min_size=3, max_size=3))
    shear = draw(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
    lattice = np.diag(diag)
    lattice[1, 0], lattice[2, 0], lattice[2, 1] = shear
    pos = draw(st.lists(st.floats(-0.5, 1.5), min_size=3 * n, max_size=3 * n))
    mode = draw(st.sampled_from(["Direct", "Cartesian"]))
    flags = None
    if draw(st.booleans()):
        flags = np.array(draw(st.lists(st.booleans(), min_size=3 * n, max_size=3 * n))).reshape(n, 3)
    comment = draw(st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789 -_", max_size=30)).strip()
    return CrystalStructure(
        comment=comment,
        scale=draw(st.floats(0.5, 3.0)),
        lattice=lattice,
        species=species,
        counts=counts,
        positions=np.array(pos).reshape(n, 3) * (1.0 if mode == "Direct" else 5.0),
        coordinate_mode=mode,
        selective_flags=flags,
    )


tag_names = st.from_regex(r"[A-Z][A-Z0-9_]{0,9}", fullmatch=True)

text_values = st.from_regex(r"[A-Za-z][A-Za-z_]{0,8}( [A-Za-z_]{1,6}){0,2}", fullmatch=True).filter(
    lambda s: s.upper() not in {"T", "F", "TRUE", "FALSE"}
)

tag_values = st.one_of(
    st.booleans().map(TagValue.of),
    st.integers(-10**6, 10**6).map(TagValue.of),
    st.floats(-1e6, 1e6, allow_nan=False).map(lambda x: TagValue("Real", float(x))),
    st.lists(st.integers(-100, 100), min_size=2, max_size=6).map(lambda v: TagValue("IntList", tuple(v))),
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=6).map(
        lambda v: TagValue("RealList", tuple(float(x) for x in v))),
    text_values.map(lambda s: TagValue("Text", s)),
)


@st.composite
def incar_documents(draw):
    tags = draw(st.lists(tag_names, max_size=12, unique=True))
    return IncarDocument(tuple(IncarEntry(t, draw(tag_values), i + 1) for i, t in enumerate(tags)))


def cubic(a, species, counts, frac, comment="test"):
    return CrystalStructure(comment, 1.0, np.eye(3) * a, species, counts, np.asarray(frac, float))


def random_cell(rng, n_atoms=8, species=("Cu", "Ni"), a=11.0, min_dist=1.9):
    """Random periodic cell with no two atoms closer than ``min_dist``."""
    cell = np.eye(3) * a + rng.uniform(-0.5, 0.5, (3, 3))
    frac = []
    while len(frac) < n_atoms:
        f = rng.random(3)
        ok = True
        for g in frac:
            d = f - g
            d -= np.round(d)
            if np.linalg.norm(d @ cell) < min_dist:
                ok = False
                break
        if ok:
            frac.append(f)
    counts = [n_atoms // len(species)] * len(species)
    counts[0] += n_atoms - sum(counts)
    return CrystalStructure("random", 1.0, cell, list(species), counts, np.array(frac))


DOUBLE_WELL_WALLS = (1.0, 4.0)


def double_well(x, y=0.0, z=0.0):
    """A free H atom on the line between two frozen A atoms (x = 1 and 4 A)
    in an 8 x 6 x 6 box. With epsilon = sigma = 1 and a 2.5 A cutoff the
    energy along x is a symmetric double well with minima either side of 2.5."""
    lattice = np.diag([8.0, 6.0, 6.0])
    cart = np.array([[1.0, 3.0, 3.0], [4.0, 3.0, 3.0], [x, 3.0 + y, 3.0 + z]])
    flags = np.array([[False] * 3, [False] * 3, [True] * 3])
    return CrystalStructure("double well", 1.0, lattice, ["A", "H"], [2, 1], cart,
                            coordinate_mode="Cartesian", selective_flags=flags)
