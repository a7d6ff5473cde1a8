import sys
from fractions import Fraction
from pathlib import Path

from hypothesis import settings, strategies as st

from coupon_mixture.model import GroupMixture

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def rational_mixtures(draw, max_groups=3, max_count=6, min_groups=1):
    """Valid pools with exact probabilities: group shares w_j sum to 1, p_j = w_j / M_j."""
    g = draw(st.integers(min_groups, max_groups))
    counts = draw(st.lists(st.integers(1, max_count), min_size=g, max_size=g))
    raw = draw(st.lists(st.integers(1, 20), min_size=g, max_size=g))
    total = sum(raw)
    probs = [Fraction(w, total * c) for w, c in zip(raw, counts)]
    return GroupMixture(tuple(counts), tuple(probs))


@st.composite
def probability_vectors(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    raw = draw(st.lists(st.integers(1, 30), min_size=n, max_size=n))
    total = sum(raw)
    return [Fraction(w, total) for w in raw]
