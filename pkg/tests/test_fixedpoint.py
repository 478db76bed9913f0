import numpy as np
import pytest
from hypothesis import given, strategies as st

from fastsvd.fixedpoint import (
    FixedFormat,
    FixedMatrix,
    FixedPointError,
    FixedWord,
    OverflowLog,
    ShiftDirection,
    abs_val,
    exp2,
    exp2_array,
    rshift_array,
    saturate_array,
    shift,
    sign,
)

F16 = FixedFormat(16, 12)
F32 = FixedFormat(32, 28)


def test_format_bounds():
    assert F16.min_raw == -(2**15) and F16.max_raw == 2**15 - 1
    assert FixedFormat(32, 0).lam == 5
    assert FixedFormat(16, 0).lam == 4
    with pytest.raises(FixedPointError):
        FixedFormat(16, 16)
    with pytest.raises(FixedPointError):
        FixedFormat(1, 0)


def test_word_range_checked():
    with pytest.raises(FixedPointError):
        FixedWord(2**15, F16)


def test_sign_zero_is_positive():
    assert sign(FixedWord(0, F16)) == 1
    assert sign(FixedWord(-1, F16)) == -1
    assert sign(FixedWord(5, F16)) == 1


def test_priority_encoder():
    assert exp2(FixedWord(0, F16)) == (0, 0)
    assert exp2(FixedWord(1, F16)) == (0, 1)
    assert exp2(FixedWord(4096, F16)) == (12, 1)
    assert exp2(FixedWord(-3, F16)) == (1, 1)


def test_abs_of_most_negative_saturates():
    log = OverflowLog()
    out = abs_val(FixedWord(F16.min_raw, F16), log)
    assert out.raw == F16.max_raw and log.events == 1
    assert abs_val(FixedWord(-7, F16), log).raw == 7 and log.events == 1


def test_left_shift_saturates():
    log = OverflowLog()
    out = shift(FixedWord(2**14, F16), 2, ShiftDirection.LEFT, log)
    assert out.raw == F16.max_raw and log.events == 1
    with pytest.raises(OverflowError):
        shift(FixedWord(2**14, F16), 2, "left", OverflowLog(strict=True))


def test_shift_amount_contract():
    with pytest.raises(FixedPointError):
        shift(FixedWord(1, F16), 16, "right")
    with pytest.raises(FixedPointError):
        shift(FixedWord(1, F16), -1, "right")


@given(st.integers(-(2**31), 2**31 - 1), st.integers(0, 31))
def test_right_shift_is_floor_division(raw, k):
    out = shift(FixedWord(raw, F32), k, "right")
    assert out.raw == raw // 2**k
    assert int(rshift_array(np.array([raw], np.int64), k)[0]) == raw // 2**k


@given(st.integers(-(2**62), 2**62))
def test_exp2_array_matches_scalar(raw):
    expected = abs(raw).bit_length() - 1 if raw else 0
    assert int(exp2_array(np.array([raw], np.int64))[0]) == expected


def test_rshift_array_clips_large_amounts():
    x = np.array([-5, 5], np.int64)
    assert rshift_array(x, 200).tolist() == [-1, 0]


def test_saturate_array_counts():
    out, n = saturate_array(np.array([2**15, -(2**15) - 1, 3], np.int64), F16)
    assert out.tolist() == [F16.max_raw, F16.min_raw, 3] and n == 2


def test_quantize_truncates_toward_minus_infinity():
    assert F16.quantize(1.0) == 4096
    assert F16.quantize(-(2**-13)) == -1
    assert F16.quantize(100.0) == F16.max_raw


def test_matrix_roundtrip_and_equality():
    M = FixedMatrix.from_float([[1.0, -0.5], [0.25, 0.0]], F16)
    assert M.raw.tolist() == [[4096, -2048], [1024, 0]]
    assert M == FixedMatrix(M.raw.copy(), F16)
    assert M != FixedMatrix(M.raw, F32)
    assert np.array_equal(M.to_float(), [[1.0, -0.5], [0.25, 0.0]])
    assert float(M.word(0, 1)) == -0.5
    with pytest.raises(ValueError):
        M.raw[0, 0] = 1


def test_matrix_rejects_bad_input():
    with pytest.raises(FixedPointError):
        FixedMatrix(np.zeros(3, np.int64), F16)
    with pytest.raises(FixedPointError):
        FixedMatrix(np.array([[2**15]]), F16)
    with pytest.raises(FixedPointError):
        FixedMatrix(np.array([[0.5]]), F16)


def test_from_float_logs_saturation():
    log = OverflowLog()
    M = FixedMatrix.from_float([[9.0, -9.0]], F16, log)
    assert log.events == 2 and M.raw.tolist() == [[F16.max_raw, F16.min_raw]]


def test_identity():
    assert FixedMatrix.identity(3, F16).raw.tolist() == (np.eye(3, dtype=int) * 4096).tolist()
