"""Shared hypothesis strategies."""
from hypothesis import strategies as st

bits = st.integers(0, 1)
volts = st.floats(-5, 5, allow_nan=False)
ohms = st.floats(1.0, 1e9, allow_nan=False)


@st.composite
def divider_terms(draw, min_inputs=1, max_inputs=6):
    n = draw(st.integers(min_inputs, max_inputs))
    inputs = [(draw(volts), draw(ohms)) for _ in range(n)]
    return inputs, (draw(volts), draw(ohms))


bit_vectors = lambda n: st.tuples(*(bits for _ in range(n)))
