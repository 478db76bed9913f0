"""Critical-path delay and area of the rotation datapath as linear gate-cost formulas.

Every formula is a non-negative combination of unit costs, evaluated for a word
width ``bits`` (Lambda) with ``lam = ceil(log2(bits))``. A subtractor is an adder
plus an inverter array with carry-in, and a four-input mux is three two-input muxes
arranged in two levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

COMPONENTS = (
    "add",  # Lambda-bit adder
    "add_small",  # lam-bit adder
    "inv",
    "xor2",
    "and2",
    "and3",
    "and4",
    "or2",
    "or3",
    "or4",
    "or5",
    "nor",  # (lam + 1)-input NOR
    "mux2",
    "penc",  # Lambda-bit priority encoder
    "bshift",  # Lambda-bit barrel shifter
    "cmp",  # Lambda-bit comparator
)

DELAY_STEPS = ("1", "2", "3", "multiply", "scale", "apply")
AREA_STEPS = ("1", "2", "3", "4", "multiply", "scale", "apply")

# the only width the mux-saving figures are stated for
REFERENCE_WIDTH = 32
REFERENCE_SCALE_SAVING = 156


def lam(bits: int) -> int:
    return (bits - 1).bit_length()


@dataclass(frozen=True)
class GateCostModel:
    delay: dict = field(default_factory=lambda: dict.fromkeys(COMPONENTS, 1.0))
    area: dict = field(default_factory=lambda: dict.fromkeys(COMPONENTS, 1.0))

    def __post_init__(self):
        for name, table in (("delay", self.delay), ("area", self.area)):
            missing = set(COMPONENTS) - set(table)
            extra = set(table) - set(COMPONENTS)
            if missing or extra:
                raise ValueError(f"{name} table: missing {sorted(missing)}, unknown {sorted(extra)}")
            for k, v in table.items():
                if not (math.isfinite(v) and v >= 0):
                    raise ValueError(f"{name}.{k} must be a finite non-negative number, got {v}")

    @classmethod
    def from_text(cls, text: str) -> "GateCostModel":
        """Unit costs default to 1; lines ``delay.<part> = x`` or ``area.<part> = x`` override."""
        tables = {"delay": dict.fromkeys(COMPONENTS, 1.0), "area": dict.fromkeys(COMPONENTS, 1.0)}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            kind, _, part = key.strip().partition(".")
            if not sep or kind not in tables or part not in COMPONENTS:
                raise ValueError(f"line {lineno}: expected delay.<part> = value or area.<part> = value")
            try:
                tables[kind][part] = float(value)
            except ValueError:
                raise ValueError(f"line {lineno}: {value.strip()!r} is not a number") from None
        return cls(tables["delay"], tables["area"])

    @classmethod
    def from_file(cls, path: str | Path) -> "GateCostModel":
        return cls.from_text(Path(path).read_text())


def _check_bits(bits: int):
    if bits < 2:
        raise ValueError(f"word width must be at least 2, got {bits}")


def step_delay(step: str | int, bits: int, model: GateCostModel = GateCostModel()) -> float:
    """Critical-path delay of one stage. The sign stage has none: it runs beside stage 3."""
    _check_bits(bits)
    d = model.delay
    step = str(step)
    if step == "1":
        return 2 * d["add"] + 2 * d["inv"] + d["xor2"] + d["penc"] + d["add_small"]
    if step == "2":
        lckt = d["inv"] + d["and2"] + d["or2"]
        return d["add"] + d["xor2"] + lckt + d["add_small"] + d["mux2"]
    if step == "3":
        lckt = d["inv"] + d["or3"] + d["and4"]
        return 2 * d["add_small"] + d["nor"] + lckt + d["inv"] + 2 * d["mux2"]
    if step == "multiply":
        return d["add_small"] + d["bshift"] + d["xor2"] + d["add"]
    if step == "scale":
        return d["bshift"] + 4 * d["add"] + d["inv"] + 5 * d["mux2"]
    if step == "apply":
        # two chained single rotations
        one = step_delay("multiply", bits, model) + d["add"] + step_delay("scale", bits, model)
        return 2 * one
    raise ValueError(f"unknown step {step!r}; expected one of {DELAY_STEPS}")


def step_area(step: str | int, bits: int, model: GateCostModel = GateCostModel()) -> float:
    _check_bits(bits)
    a = model.area
    L, l = bits, lam(bits)
    mux4 = 3 * a["mux2"]
    step = str(step)
    if step == "1":
        return 8 * a["add"] + 2 * (L + l) * a["inv"] + 4 * L * a["xor2"] + 4 * a["penc"] + 2 * a["add_small"]
    if step == "2":
        lckt1 = 3 * (a["inv"] + a["or2"] + 2 * a["and2"])
        lckt2 = a["or3"] + a["and2"]
        return 2 * (a["add"] + a["bshift"] + 3 * a["cmp"] + lckt1 + 4 * lckt2 + a["add_small"] + l * a["mux2"])
    if step == "3":
        ckt1 = 6 * a["inv"] + 2 * a["or3"] + 2 * a["or2"] + 4 * a["and3"] + 6 * a["and4"]
        ckt2 = 2 * a["inv"] + 2 * a["or3"] + 2 * a["or5"] + 3 * a["and2"] + 2 * a["and3"]
        return 3 * a["add_small"] + 3 * a["nor"] + ckt1 + ckt2 + 10 * a["inv"] + l * mux4 + l * a["mux2"]
    if step == "4":
        lckt = a["or4"] + a["or3"] + 3 * a["and3"] + 4 * a["and2"]
        return a["mux2"] + lckt + a["xor2"]
    if step == "multiply":
        return a["add_small"] + a["add"] + L * a["xor2"] + a["bshift"] + (L + l) * a["mux2"]
    if step == "scale":
        return a["bshift"] + 4 * a["add"] + L * a["inv"] + scale_mux_count(bits) * a["mux2"]
    if step == "apply":
        return 4 * (l * step_area("multiply", bits, model) + 4 * a["add"] + 4 * step_area("scale", bits, model))
    raise ValueError(f"unknown step {step!r}; expected one of {AREA_STEPS}")


def barrel_shifter_mux_count(bits: int) -> int:
    """Two-input muxes in a log-depth barrel shifter: lam levels of ``bits`` muxes."""
    _check_bits(bits)
    return bits * lam(bits)


def scale_mux_count(bits: int) -> int:
    """One two-input and two four-input mux columns, a four-input mux being three two-input ones."""
    _check_bits(bits)
    return bits + 2 * 3 * bits


@dataclass(frozen=True)
class ScalingSavings:
    baseline_mux: int
    design_mux: int
    saving: int
    per_bshifter_mux: int
    extrapolated: bool


def scaling_savings(bits: int = REFERENCE_WIDTH) -> ScalingSavings:
    """Mux count of the staged scaling circuit against the four-shift baseline.

    At 32 bits the saving is the stated 156 muxes, so the baseline is 224 + 156.
    Other widths scale that baseline linearly and are flagged as extrapolated.
    """
    design = scale_mux_count(bits)
    if bits == REFERENCE_WIDTH:
        baseline = design + REFERENCE_SCALE_SAVING
    else:
        baseline = round((scale_mux_count(REFERENCE_WIDTH) + REFERENCE_SCALE_SAVING) * bits / REFERENCE_WIDTH)
    return ScalingSavings(baseline, design, baseline - design, barrel_shifter_mux_count(bits), bits != REFERENCE_WIDTH)


@dataclass(frozen=True)
class CostReport:
    bits: int
    delays: dict
    areas: dict
    savings: ScalingSavings

    @property
    def rotation_delay(self) -> float:
        """Stages 1-3 in series; the sign stage overlaps stage 3."""
        return self.delays["1"] + self.delays["2"] + self.delays["3"]

    @property
    def rotation_area(self) -> float:
        return sum(self.areas[s] for s in ("1", "2", "3", "4"))

    @property
    def apply_delay(self) -> float:
        return self.delays["apply"]

    @property
    def apply_area(self) -> float:
        return self.areas["apply"]

    @property
    def total_area(self) -> float:
        return self.rotation_area + self.apply_area

    def rows(self) -> list[tuple[str, float | int]]:
        out = [(f"delay.step_{s}", self.delays[s]) for s in DELAY_STEPS]
        out += [(f"area.step_{s}", self.areas[s]) for s in AREA_STEPS]
        out += [
            ("delay.rotations", self.rotation_delay),
            ("area.rotations", self.rotation_area),
            ("delay.apply_rotations", self.apply_delay),
            ("area.apply_rotations", self.apply_area),
            ("area.total", self.total_area),
            ("mux.per_bshifter", self.savings.per_bshifter_mux),
            ("mux.scale_design", self.savings.design_mux),
            ("mux.scale_baseline", self.savings.baseline_mux),
            ("saving", self.savings.saving),
        ]
        return out

    def to_csv(self) -> str:
        return "quantity,value\n" + "".join(f"{k},{_num(v)}\n" for k, v in self.rows())

    def to_text(self) -> str:
        lines = [f"word width {self.bits} bits (lam = {lam(self.bits)})"]
        lines += [f"  {k:<24} {_num(v)}" for k, v in self.rows()]
        if self.savings.extrapolated:
            lines.append("  mux saving extrapolated from the 32-bit figures")
        return "\n".join(lines) + "\n"


def _num(v) -> str:
    if isinstance(v, int) or float(v).is_integer():
        return str(int(v))
    return format(v, ".17g")


def cost_report(bits: int = REFERENCE_WIDTH, model: GateCostModel = GateCostModel()) -> CostReport:
    return CostReport(
        bits,
        {s: step_delay(s, bits, model) for s in DELAY_STEPS},
        {s: step_area(s, bits, model) for s in AREA_STEPS},
        scaling_savings(bits),
    )
