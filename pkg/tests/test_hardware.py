import pytest
from hypothesis import given
from hypothesis import strategies as st

from qecool.hardware import (
    PUBLISHED_UNIT,
    CellSpec,
    PowerParams,
    UnitBudget,
    aggregate_bom,
    ersfq_power,
    hardware_report,
    load_cell_library,
    max_frequency,
    protectable_qubits,
    rsfq_power,
    units_per_logical_qubit,
)
from qecool.lattice import ConfigError


def test_cell_library():
    lib = load_cell_library()
    assert len(lib) == 7
    assert lib["splitter"] == CellSpec("splitter", 3, 0.300, 900, 4.3)
    assert lib["switch_1to2"].jj_count == 33


def test_cell_must_be_positive():
    with pytest.raises(ConfigError):
        CellSpec("x", 0, 1.0, 1.0, 1.0)


def test_bom():
    b = aggregate_bom([("splitter", 1)])
    assert (b.total_jjs, b.total_bias_mA, b.total_area_mm2 * 1e6) == (3, pytest.approx(0.3), pytest.approx(900))
    assert aggregate_bom([]) == UnitBudget(0, 0.0, 0.0, 0.0)
    b = aggregate_bom([("dro", 2), ("merger", 1), ("1:2 switch", 1)])
    assert b.total_jjs == 2 * 6 + 7 + 33 and b.critical_path_ps == 10.5
    with pytest.raises(ConfigError):
        aggregate_bom([("tunnel", 1)])
    with pytest.raises(ConfigError):
        aggregate_bom([("dro", -1)])


def test_bom_additive():
    a, b = [("dro", 3), ("ndro", 2)], [("rd", 5), ("d2", 1)]
    x, y, z = aggregate_bom(a), aggregate_bom(b), aggregate_bom(a + b)
    assert z.total_jjs == x.total_jjs + y.total_jjs
    assert z.total_bias_mA == pytest.approx(x.total_bias_mA + y.total_bias_mA)
    assert z.total_area_mm2 == pytest.approx(x.total_area_mm2 + y.total_area_mm2)


def test_published_unit():
    assert PUBLISHED_UNIT == UnitBudget(3177, 336.0, 1.274, 215.0)


def test_power_golden_numbers():
    assert rsfq_power(PUBLISHED_UNIT) == pytest.approx(840e-6, rel=1e-12)
    assert ersfq_power(PUBLISHED_UNIT, PowerParams(freq_Hz=2e9)) == pytest.approx(2.78e-6, abs=0.01e-6)
    assert ersfq_power(PUBLISHED_UNIT, PowerParams(freq_Hz=1e9)) == pytest.approx(1.39e-6, abs=0.01e-6)
    assert rsfq_power(aggregate_bom([("splitter", 1)])) == pytest.approx(0.75e-6)
    zero = UnitBudget(0, 0.0, 0.0, 1.0)
    assert rsfq_power(zero) == 0 and ersfq_power(zero) == 0
    with pytest.raises(ConfigError):
        ersfq_power(PUBLISHED_UNIT, PowerParams(freq_Hz=0))


def test_max_frequency():
    assert max_frequency(PUBLISHED_UNIT) == pytest.approx(4.65e9, rel=1e-3)
    assert max_frequency(UnitBudget(0, 0, 0, 1000)) == pytest.approx(1e9)
    assert max_frequency(UnitBudget(0, 0, 0, 500)) == pytest.approx(2e9)
    with pytest.raises(ConfigError):
        PowerParams(freq_Hz=5e9).check_frequency(PUBLISHED_UNIT)
    PowerParams(freq_Hz=2e9).check_frequency(PUBLISHED_UNIT)


def test_capacity():
    assert units_per_logical_qubit(9) == 144
    assert protectable_qubits(9, 2.78e-6, 1.0) == 2498
    assert protectable_qubits(9, 1.39e-6, 1.0) == 4996
    assert protectable_qubits(9, 13.44e-6, 1.0, units_per_logical=(2 * 9 - 1) ** 2) == 257
    assert protectable_qubits(9, 2.78e-6, 0.0) == 0
    with pytest.raises(ConfigError):
        protectable_qubits(9, 0.0, 1.0)
    with pytest.raises(ConfigError):
        protectable_qubits(1, 1e-6, 1.0)


@given(st.integers(3, 25), st.integers(3, 25), st.floats(1e-7, 1e-3), st.floats(1e-7, 1e-3))
def test_capacity_monotone(d1, d2, p1, p2):
    lo_d, hi_d = sorted((d1, d2))
    lo_p, hi_p = sorted((p1, p2))
    assert protectable_qubits(hi_d, lo_p, 1.0) <= protectable_qubits(lo_d, lo_p, 1.0)
    assert protectable_qubits(lo_d, hi_p, 1.0) <= protectable_qubits(lo_d, lo_p, 1.0)


@given(st.floats(0, 1000), st.floats(1e6, 5e9), st.floats(0.1, 10))
def test_power_homogeneous(bias, f, k):
    b1 = UnitBudget(0, bias, 0, 100)
    b2 = UnitBudget(0, bias * k, 0, 100)
    assert rsfq_power(b2) == pytest.approx(k * rsfq_power(b1), rel=1e-9, abs=1e-300)
    assert ersfq_power(b2, PowerParams(freq_Hz=f)) == pytest.approx(k * ersfq_power(b1, PowerParams(freq_Hz=f)), rel=1e-9, abs=1e-300)
    assert ersfq_power(b1, PowerParams(freq_Hz=f * k)) == pytest.approx(k * ersfq_power(b1, PowerParams(freq_Hz=f)), rel=1e-9, abs=1e-300)


def test_report():
    rep = hardware_report()
    assert rep["ersfq_power_uW_quoted"] == 2.78
    assert rep["protectable_qubits"] == 2498
    assert rep["rsfq_power_W"] == pytest.approx(840e-6)
    assert rep["units_per_logical_qubit"] == 144
    slow = hardware_report(freq_Hz=1e9)
    assert slow["ersfq_power_uW_quoted"] == 1.39 and slow["protectable_qubits"] == 4996
