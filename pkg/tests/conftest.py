import hypothesis.strategies as st
from hypothesis import strategies

from inorder import SchemeVector


@st.composite
def scheme_vectors(draw, max_d: int = 8):
    """Random valid scheme vectors (weak compositions of d into d parts)."""
    d = draw(st.integers(min_value=1, max_value=max_d))
    remaining = d
    xs = []
    for _ in range(d - 1):
        v = draw(st.integers(min_value=0, max_value=remaining))
        xs.append(v)
        remaining -= v
    xs.append(remaining)
    return SchemeVector(tuple(xs))
