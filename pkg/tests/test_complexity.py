import pytest

from fastsvd.complexity import (
    AREA_STEPS,
    COMPONENTS,
    DELAY_STEPS,
    GateCostModel,
    barrel_shifter_mux_count,
    cost_report,
    lam,
    scale_mux_count,
    scaling_savings,
    step_area,
    step_delay,
)


def test_unit_examples():
    assert lam(32) == 5 and lam(33) == 6 and lam(2) == 1
    assert step_delay(1, 32) == 7
    assert step_area(1, 32) == 216
    assert barrel_shifter_mux_count(32) == 160
    assert scale_mux_count(32) == 224
    s = scaling_savings(32)
    assert (s.baseline_mux, s.design_mux, s.saving, s.extrapolated) == (380, 224, 156, False)
    assert scaling_savings(16).extrapolated


def test_sign_stage_has_no_delay():
    with pytest.raises(ValueError):
        step_delay(4, 32)
    with pytest.raises(ValueError):
        step_area("5", 32)
    with pytest.raises(ValueError):
        step_area(1, 1)


@pytest.mark.parametrize("step", AREA_STEPS)
def test_area_monotone_in_bits(step):
    vals = [step_area(step, b) for b in range(2, 65)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


@pytest.mark.parametrize("step", DELAY_STEPS)
def test_delay_linear_in_costs(step):
    a = GateCostModel(dict.fromkeys(COMPONENTS, 2.0), dict.fromkeys(COMPONENTS, 1.0))
    assert step_delay(step, 32, a) == 2 * step_delay(step, 32)
    zero = GateCostModel(dict.fromkeys(COMPONENTS, 0.0), dict.fromkeys(COMPONENTS, 0.0))
    assert step_delay(step, 32, zero) == 0


def test_model_parsing():
    m = GateCostModel.from_text("# costs\ndelay.add = 4  # ripple\narea.mux2=0.5\n\n")
    assert m.delay["add"] == 4 and m.area["mux2"] == 0.5 and m.delay["inv"] == 1
    for bad in ("delay.add 4", "speed.add = 1", "delay.adder = 1", "area.add = x", "area.add = -1", "area.add = nan"):
        with pytest.raises(ValueError):
            GateCostModel.from_text(bad)


def test_report_csv():
    r = cost_report(32)
    csv = r.to_csv()
    assert csv.startswith("quantity,value\ndelay.step_1,7\n")
    assert "saving,156\n" in csv
    assert r.rotation_delay == sum(r.delays[s] for s in "123")
    assert "extrapolated" in cost_report(24).to_text()
