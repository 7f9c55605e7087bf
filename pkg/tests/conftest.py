from __future__ import annotations

import sys
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from localgpd.fintop import FinSpace  # noqa: E402
from localgpd.sweep import spaces_up_to  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
INSTANCES = ROOT / "instances"

SMALL_SPACES = spaces_up_to(3)


@st.composite
def spaces(draw, max_points: int = 5) -> FinSpace:
    """A topology generated by a random family of subsets."""
    n = draw(st.integers(1, max_points))
    gens = draw(st.lists(st.integers(0, (1 << n) - 1), max_size=6))
    return FinSpace.from_opens([str(i + 1) for i in range(n)], gens)


small_spaces = st.sampled_from(SMALL_SPACES)


def _limit(sp, elems, restr, u):
    """Compatible families over the proper subopens of u, as dicts open -> index."""
    subs = [v for v in sp.opens_within(u) if v != u]
    out = [{}]
    for v in subs:
        nxt = []
        for fam in out:
            for a in range(len(elems[v])):
                if all(restr[(v, w)][a] == fam[w] for w in sp.opens_within(v) if w in fam and w != v):
                    if all(restr[(w, v)][fam[w]] == a for w in fam if v & ~w == 0 and w != v):
                        nxt.append({**fam, v: a})
        out = nxt
    return out


@st.composite
def presheaves_st(draw, max_points: int = 3, max_size: int = 3, space: FinSpace | None = None):
    """Any presheaf: each element of F(U) picks a compatible family below U."""
    from localgpd.presheaf import Presheaf

    sp = space if space is not None else draw(spaces(max_points))
    elems: dict[int, tuple[str, ...]] = {}
    restr: dict[tuple[int, int], tuple[int, ...]] = {}
    for u in sp.opens:  # sorted by size, so every subopen is done first
        fams = _limit(sp, elems, restr, u)
        k = draw(st.integers(1 if fams else 0, max_size)) if fams else 0
        picks = [draw(st.sampled_from(fams)) for _ in range(k)]
        elems[u] = tuple(f"e{i}" for i in range(k))
        restr[(u, u)] = tuple(range(k))
        for v in sp.opens_within(u):
            if v != u:
                restr[(u, v)] = tuple(fam[v] for fam in picks)
    return Presheaf(sp, elems, restr)


@st.composite
def sheaves_st(draw, max_points: int = 3, max_size: int = 3, space: FinSpace | None = None):
    from localgpd.presheaf import sheafify

    return sheafify(draw(presheaves_st(max_points, max_size, space)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
