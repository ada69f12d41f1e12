from collections import namedtuple

from hypothesis import strategies as st

GraphSpec = namedtuple("GraphSpec", "n edges")
WindowSpec = namedtuple("WindowSpec", "windows horizon")


@st.composite
def graph_specs(draw, min_nodes=2, max_nodes=6):
    """Random digraphs as 1-based ``(from, to, weight)`` edge lists."""
    n = draw(st.integers(min_value=min_nodes, max_value=max_nodes))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    weights = draw(
        st.lists(
            st.floats(min_value=0.1, max_value=5.0),
            min_size=len(chosen),
            max_size=len(chosen),
        )
    )
    return GraphSpec(n=n, edges=[(i, j, w) for (i, j), w in zip(chosen, weights)])


@st.composite
def window_specs(draw, max_windows=8):
    """Sorted, disjoint windows built from alternating gap/width draws."""
    count = draw(st.integers(min_value=0, max_value=max_windows))
    t = 0.0
    windows = []
    for _ in range(count):
        t += draw(st.floats(min_value=0.0, max_value=5.0))
        width = draw(st.floats(min_value=0.25, max_value=5.0))
        windows.append((t, t + width))
        t += width
    tail = draw(st.floats(min_value=0.5, max_value=5.0))
    return WindowSpec(windows=windows, horizon=t + tail)


def ratios():
    return st.floats(min_value=0.01, max_value=0.99)
