import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrrefine.errors import ConfigError, ValueOverflowError
from mrrefine.relations import (
    MRSpec,
    OutputRelation,
    Transformation,
    TransformKind,
    Verdict,
    check_mr,
    default_mr_set,
    load_mr_set,
    mr_set_from_dict,
    mr_set_hash,
    mr_set_to_dict,
    transform_inputs,
)

ints = st.integers(min_value=-(2**53), max_value=2**53)


def test_permute_swaps():
    assert transform_inputs(Transformation(TransformKind.PERMUTE), 2, 1) == (1, 2)


def test_multiply_zero_fixed_point():
    assert transform_inputs(Transformation(TransformKind.MULTIPLY_EACH_BY_K, 5), 0, 0) == (0, 0)


def test_subtract_hand_computed():
    # 3 - 5 = -2, 9 - 5 = 4
    assert transform_inputs(Transformation(TransformKind.SUBTRACT_K_FROM_EACH, 5), 3, 9) == (-2, 4)


def test_add_k():
    assert transform_inputs(Transformation(TransformKind.ADD_K_TO_EACH, 5), 2, 3) == (7, 8)


def test_exact_beyond_float_precision():
    big = 2**53 + 1
    assert transform_inputs(Transformation(TransformKind.ADD_K_TO_EACH, 1), big, -big) == (big + 1, -big + 1)


def test_overflow_names_mr_and_input():
    t = Transformation(TransformKind.MULTIPLY_EACH_BY_K, 2)
    with pytest.raises(ValueOverflowError, match=r"MR2.*input id 17"):
        transform_inputs(t, 2**62, 1, mr_id="MR2", datum_id=17)


@pytest.mark.parametrize(
    "kind,k",
    [
        (TransformKind.MULTIPLY_EACH_BY_K, 1),
        (TransformKind.MULTIPLY_EACH_BY_K, 0),
        (TransformKind.ADD_K_TO_EACH, 0),
        (TransformKind.SUBTRACT_K_FROM_EACH, -3),
        (TransformKind.ADD_K_TO_EACH, None),
    ],
)
def test_k_constraints(kind, k):
    with pytest.raises(ConfigError):
        Transformation(kind, k)


def test_permute_rejects_k():
    with pytest.raises(ConfigError):
        Transformation(TransformKind.PERMUTE, 3)


@pytest.mark.parametrize(
    "expected,src,follow,verdict",
    [
        (OutputRelation.REMAIN_EQUAL, 5, 5, Verdict.NOT_VIOLATED),
        (OutputRelation.INCREASE, 0, 0, Verdict.VIOLATED),
        (OutputRelation.REMAIN_EQUAL, 5, 15, Verdict.VIOLATED),
        (OutputRelation.INCREASE, 3, 15, Verdict.NOT_VIOLATED),
        (OutputRelation.INCREASE, 3, 2, Verdict.VIOLATED),
    ],
)
def test_check_mr(expected, src, follow, verdict):
    assert check_mr(expected, src, follow) is verdict


def test_check_mr_add_mr3_case():
    # add(2, 3) vs add(2 + 5, 3 + 5)
    assert check_mr(OutputRelation.REMAIN_EQUAL, 2 + 3, 7 + 8) is Verdict.VIOLATED


@given(ints, ints)
def test_permute_is_involution(a, b):
    t = Transformation(TransformKind.PERMUTE)
    assert transform_inputs(t, *transform_inputs(t, a, b)) == (a, b)


@given(ints, ints)
def test_remain_equal_symmetric(x, y):
    assert check_mr(OutputRelation.REMAIN_EQUAL, x, y) is check_mr(OutputRelation.REMAIN_EQUAL, y, x)


@given(st.integers(0, 9), st.integers(0, 9))
def test_mr1_never_violated_on_commutative_functions(a, b):
    t = Transformation(TransformKind.PERMUTE)
    ta, tb = transform_inputs(t, a, b)
    assert check_mr(OutputRelation.REMAIN_EQUAL, a + b, ta + tb) is Verdict.NOT_VIOLATED
    assert check_mr(OutputRelation.REMAIN_EQUAL, a * b, ta * tb) is Verdict.NOT_VIOLATED


def test_default_set():
    mrs = default_mr_set(5)
    assert [m.id for m in mrs] == ["MR1", "MR2", "MR3", "MR4"]
    assert [m.transformation.kind for m in mrs] == [
        TransformKind.PERMUTE,
        TransformKind.MULTIPLY_EACH_BY_K,
        TransformKind.ADD_K_TO_EACH,
        TransformKind.SUBTRACT_K_FROM_EACH,
    ]
    assert [m.expected for m in mrs] == [
        OutputRelation.REMAIN_EQUAL,
        OutputRelation.INCREASE,
        OutputRelation.REMAIN_EQUAL,
        OutputRelation.REMAIN_EQUAL,
    ]


@pytest.mark.parametrize("k", [1, 0])
def test_default_set_rejects_bad_k(k):
    with pytest.raises(ConfigError):
        default_mr_set(k)


def test_config_round_trip(tmp_path):
    mrs = default_mr_set(7)
    path = tmp_path / "mrs.json"
    path.write_text(json.dumps(mr_set_to_dict(mrs)))
    assert load_mr_set(path) == mrs
    assert mr_set_hash(load_mr_set(path)) == mr_set_hash(mrs)


def test_config_shared_k():
    doc = {"k": 3, "mrs": [{"id": "M", "transformation": "AddKToEach", "expected": "RemainEqual"}]}
    (mr,) = mr_set_from_dict(doc)
    assert mr == MRSpec("M", Transformation(TransformKind.ADD_K_TO_EACH, 3), OutputRelation.REMAIN_EQUAL)


@pytest.mark.parametrize(
    "doc",
    [
        {"mrs": []},
        {"mrs": [{"id": "A", "transformation": "Permute", "expected": "RemainEqual"}] * 2},
        {"mrs": [{"id": "A", "transformation": "Rotate", "expected": "RemainEqual"}]},
        {"mrs": [{"id": "A", "transformation": "AddKToEach", "expected": "RemainEqual"}]},
        {"nope": 1},
    ],
)
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        mr_set_from_dict(doc)
