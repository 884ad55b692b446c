from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqsem import load_params, parse_dot_bracket

#: Structures with n <= 10 covering every loop kind a small backbone allows:
#: empty, hairpins of several sizes, stacked helices, both bulge orientations,
#: interior loops (1x1, 1x2, 2x1), and two exterior branches.
SMALL_CORPUS = [
    "..........",
    "(....)",
    "(...)",
    ".(....).",
    "((....))",
    "(((...)))",
    "(....)....",
    "....(....)",
    "(...)(...)",
    "((...))...",
    ".((...))..",
    "((.(...)))",
    "(((...).))",
    "(.(...)..)",
    "(.(...).).",
    "(..(...).)",
    "((......))",
    "(.......).",
    "(........)",
    "((....))..",
    "..((...)).",
    "(......)..",
]

#: The smallest backbone holding a multi-loop (closing arc plus two branches);
#: no multi-loop fits in n <= 10, so the corpus carries it at n = 12.
MULTILOOP_DB = "((...)(...))"


@pytest.fixture(scope="session")
def params():
    return load_params()


@pytest.fixture(scope="session")
def corpus():
    structures = [parse_dot_bracket(db) for db in SMALL_CORPUS]
    assert len(structures) >= 20 and all(s.n <= 10 for s in structures)
    return structures
