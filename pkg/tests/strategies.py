"""Hypothesis strategies for small bandit problems."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdivbandit.core import BanditInstance, FunctionClass

unit = st.floats(0.0, 1.0, allow_nan=False)
positive = st.floats(1e-3, 1.0, allow_nan=False)


@st.composite
def shapes(draw, max_s=4, max_a=4):
    return draw(st.integers(1, max_s)), draw(st.integers(1, max_a))


@st.composite
def stochastic(draw, S, A, allow_zero=False):
    elem = st.floats(0.0 if allow_zero else 1e-3, 1.0, allow_nan=False)
    m = draw(arrays(np.float64, (S, A), elements=elem))
    m[:, 0] += 1e-3  # keep every row non-empty
    return m / m.sum(axis=1, keepdims=True)


@st.composite
def instances(draw, max_s=4, max_a=4, allow_zero=False):
    S, A = draw(shapes(max_s, max_a))
    rho = draw(arrays(np.float64, S, elements=positive))
    r = draw(arrays(np.float64, (S, A), elements=unit))
    ref = draw(stochastic(S, A, allow_zero))
    return BanditInstance(rho / rho.sum(), r, ref)


@st.composite
def tables(draw, S, A, lo=-1.0, hi=1.0):
    return draw(arrays(np.float64, (S, A), elements=st.floats(lo, hi, allow_nan=False)))


@st.composite
def classes(draw, S, A, max_k=6):
    K = draw(st.integers(1, max_k))
    return FunctionClass(draw(arrays(np.float64, (K, S, A), elements=unit)))
