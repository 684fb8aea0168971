"""Ready-made systems and diagrams used by the tests, scripts and CLI fixtures."""

from __future__ import annotations

import numpy as np

from .continuous import ContinuousSystem
from .core import Box, euclid, finite
from .discrete import DiscreteSystem
from .wiring import WiringDiagram, from_names, parallel_boxes

BOOL = ("T", "F")
COLORS = ("Red", "Blue", "Green")


def color_machine() -> DiscreteSystem:
    """Four states reading a Boolean and showing a color."""
    box = Box(finite(BOOL, names=["in"]), finite(COLORS, names=["out"]))
    rows = [
        ("T", 1, "Blue", 2), ("F", 1, "Blue", 1),
        ("T", 2, "Red", 2), ("F", 2, "Red", 3),
        ("T", 3, "Green", 4), ("F", 3, "Green", 4),
        ("T", 4, "Blue", 1), ("F", 4, "Blue", 4),
    ]
    return DiscreteSystem.from_table(box, [1, 2, 3, 4], rows)


def arrow_machine() -> DiscreteSystem:
    """Three states reading a color and pointing up or down."""
    box = Box(finite(COLORS, names=["in"]), finite(["Up", "Down"], names=["out"]))
    rows = [
        ("Red", "p", "Up", "p"), ("Blue", "p", "Up", "p"), ("Green", "p", "Up", "q"),
        ("Red", "q", "Down", "p"), ("Blue", "q", "Down", "r"), ("Green", "q", "Down", "q"),
        ("Red", "r", "Up", "q"), ("Blue", "r", "Up", "r"), ("Green", "r", "Up", "p"),
    ]
    return DiscreteSystem.from_table(box, ["p", "q", "r"], rows)


# -- the eight-layer chain ---------------------------------------------------------

def layer_w() -> DiscreteSystem:
    box = Box(finite(BOOL, BOOL, names=["in1", "in2"]), finite(BOOL, names=["out"]))
    moves = {"a": {"FF": "b", "FT": "b", "TT": "a", "TF": "a"},
             "b": {"FF": "a", "TF": "a", "TT": "b", "FT": "b"}}
    show = {"a": "T", "b": "F"}
    rows = [(tuple(inp), s, show[s], t) for s, m in moves.items() for inp, t in m.items()]
    return DiscreteSystem.from_table(box, ["a", "b"], rows)


def layer_x() -> DiscreteSystem:
    box = Box(finite(BOOL, names=["in"]), finite(BOOL, names=["out"]))
    moves = {1: {"T": 1, "F": 2}, 2: {"T": 2, "F": 3}, 3: {"T": 1, "F": 3}}
    show = {1: "T", 2: "F", 3: "F"}
    rows = [(inp, s, show[s], t) for s, m in moves.items() for inp, t in m.items()]
    return DiscreteSystem.from_table(box, [1, 2, 3], rows)


def layer_y() -> DiscreteSystem:
    box = Box(finite(BOOL, names=["in"]), finite(BOOL, BOOL, names=["out1", "out2"]))
    moves = {"p": {"T": "p", "F": "p"}, "q": {"T": "q", "F": "p"},
             "r": {"T": "q", "F": "r"}, "s": {"T": "p", "F": "r"}}
    show = {"p": ("T", "T"), "q": ("T", "F"), "r": ("F", "T"), "s": ("F", "F")}
    rows = [(inp, s, show[s], t) for s, m in moves.items() for inp, t in m.items()]
    return DiscreteSystem.from_table(box, ["p", "q", "r", "s"], rows)


CHAIN_SLOTS = ["w"] + [f"x{i}" for i in range(1, 7)] + ["y"]


def chain_systems() -> list[DiscreteSystem]:
    x = layer_x()
    return [layer_w()] + [x] * 6 + [layer_y()]


def chain_diagram() -> WiringDiagram:
    """``w -> x1 -> ... -> x6 -> y`` with ``y.out2`` fed back into ``w.in2``."""
    systems = chain_systems()
    inner = parallel_boxes(list(zip(CHAIN_SLOTS, (s.box for s in systems))))
    outer = Box(finite(BOOL, names=["in"]), finite(BOOL, names=["out"]))
    phi_in = {"w.in1": "in", "w.in2": "y.out2", "x1.in": "w.out", "y.in": "x6.out"}
    for i in range(2, 7):
        phi_in[f"x{i}.in"] = f"x{i - 1}.out"
    return from_names(inner, outer, phi_in, {"out": "y.out1"})


# -- the six-box network with exponential state space ---------------------------------

NETWORK_SLOTS = ["n1", "n2", "n3", "n4", "n5", "n6"]
NETWORK_ARITY = {"n1": 2, "n2": 1, "n3": 3, "n4": 2, "n5": 2, "n6": 3}


def network_boxes(alphabet=("0", "1")) -> list[Box]:
    return [Box(finite(*([alphabet] * NETWORK_ARITY[s]), names=[f"in{i + 1}" for i in range(NETWORK_ARITY[s])]),
                finite(alphabet, names=["out"])) for s in NETWORK_SLOTS]


def network_diagram(alphabet=("0", "1")) -> WiringDiagram:
    inner = parallel_boxes(list(zip(NETWORK_SLOTS, network_boxes(alphabet))))
    outer = Box(finite(*([alphabet] * 4), names=["in1", "in2", "in3", "in4"]),
                finite(*([alphabet] * 4), names=["out1", "out2", "out3", "out4"]))
    phi_in = {
        "n1.in1": "n1.out", "n1.in2": "in1",
        "n2.in1": "in2",
        "n3.in1": "in3", "n3.in2": "in4", "n3.in3": "n5.out",
        "n4.in1": "n1.out", "n4.in2": "n2.out",
        "n5.in1": "n2.out", "n5.in2": "n3.out",
        "n6.in1": "n2.out", "n6.in2": "n3.out", "n6.in3": "n6.out",
    }
    phi_out = {"out1": "n4.out", "out2": "n5.out", "out3": "n6.out", "out4": "n6.out"}
    return from_names(inner, outer, phi_in, phi_out)


def random_machine(box: Box, n_states: int, rng: np.random.Generator, labels=None) -> DiscreteSystem:
    labels = list(labels) if labels is not None else list(range(n_states))
    rdt = rng.integers(0, box.outputs.size, size=n_states)
    upd = rng.integers(0, n_states, size=(box.inputs.size, n_states))
    return DiscreteSystem(box, labels, rdt, upd)


def network_systems(seed: int = 0, n_states: int = 3) -> list[DiscreteSystem]:
    rng = np.random.default_rng(seed)
    return [random_machine(b, n_states, rng, [f"{s}{k}" for k in "abc"[:n_states]] if n_states <= 3 else None)
            for s, b in zip(NETWORK_SLOTS, network_boxes())]


# -- the feedback example with a single real state ----------------------------------

def feedback_inner_box() -> Box:
    return Box(euclid(1, 1, names=["b1", "a"]), euclid(1, names=["b2"]))


def feedback_outer_box() -> Box:
    return Box(euclid(1, names=["a"]), euclid(1, names=["b"]))


def feedback_system() -> ContinuousSystem:
    return ContinuousSystem(feedback_inner_box(), ("x",), ["2*x - 3*b1 + a"], ["x"])


def feedback_wiring() -> WiringDiagram:
    return from_names(feedback_inner_box(), feedback_outer_box(), {"b1": "b2", "a": "a"}, {"b": "b2"})
