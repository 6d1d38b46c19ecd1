from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projfinsler import catalog
from projfinsler import expr as ex
from projfinsler.syntax import ParseError, parse, to_source


@pytest.mark.parametrize(
    "source",
    [
        "e1*eb1",
        "e1*eb1/(1 - z1*zb1)^2",
        "exp(z1*zb1)*(e1*eb1 + e2*eb2)",
        "sqrt(e1^2*eb1^2 + e2^2*eb2^2)",
        "-z1 + 2.5e-3*zb2 - (1 + 2i)*e1",
        "log(1 - z1*zb1)^-1",
    ],
)
def test_round_trip(source):
    e = parse(source, 2)
    assert parse(to_source(e), 2) is e


def test_catalog_round_trip():
    for m in (catalog.bergman(1), catalog.bergman(2), catalog.quartic(2), catalog.conformal(2)):
        assert parse(to_source(m.L), m.n) is m.L


def test_error_offsets_are_bytes():
    with pytest.raises(ParseError) as info:
        parse("e1 + ü + q", 1)
    assert info.value.offset == 5
    with pytest.raises(ParseError) as info:
        parse("e1 + ü2 + $", 1)
    assert info.value.offset == 5


@pytest.mark.parametrize(
    "source, offset",
    [("e1*eb1 + (1/0)", 11), ("e1 + w1", 5), ("e3", 0), ("e1^z1", 2), ("(e1", 3), ("e1 e1", 3)],
)
def test_errors(source, offset):
    with pytest.raises(ParseError) as info:
        parse(source, 2)
    assert info.value.offset == offset


def test_index_unchecked_without_n():
    assert parse("z7").payload == (ex.Var.Z, 7)


def test_inverse_nodes_print_but_do_not_parse():
    inv = ex.inverse_matrix([[ex.add(ex.ONE, ex.z(1))]])
    text = to_source(inv[0][0])
    assert text.startswith("inv1[1,1]#")
    with pytest.raises(ParseError):
        parse(text, 1)


_atoms = st.sampled_from(["z1", "zb1", "e1", "eb1", "z2", "eb2", "2", "0.5", "3i", "i"])


def _combine(children):
    ops = st.sampled_from(["+", "-", "*", "/"])
    return st.one_of(
        st.tuples(children, ops, children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["exp", "log", "sqrt"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(children, st.integers(-3, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
    )


@settings(max_examples=150, deadline=None)
@given(st.recursive(_atoms, _combine, max_leaves=8))
def test_round_trip_property(source):
    try:
        e = parse(source, 2)
    except ParseError:
        return  # e.g. a zero denominator folded to a constant
    assert parse(to_source(e), 2) is e
