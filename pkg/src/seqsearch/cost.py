"""Computational-unit accounting.

One unit is a full-length greedy rollout plus one objective evaluation:
``unit_model_steps`` next-token distributions (weight ``a_weight`` each) and
one full-sequence scoring (weight ``b_weight``).  Two readings are kept:

* closed form -- beam/rerank cost ``b`` units, tree search costs one unit per
  fresh playout (the root playout included);
* raw -- the operation counters weighted and divided by the unit size, which
  is lower whenever rollouts end before the length cap.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class CostMeter:
    unit_model_steps: int
    a_weight: float = 1.0
    b_weight: float = 1.0
    model_steps: int = 0
    objective_evals: int = 0
    fresh_playouts: int = 0
    playout_mode: bool = False

    def __post_init__(self):
        if self.unit_model_steps < 1:
            raise ValueError("unit_model_steps must be >= 1")

    def charge_model_step(self, count: int = 1) -> None:
        if count < 0:
            raise ValueError("negative charge")
        self.model_steps += count

    def charge_objective_eval(self, count: int = 1) -> None:
        if count < 0:
            raise ValueError("negative charge")
        self.objective_evals += count

    def charge_fresh_playout(self, count: int = 1) -> None:
        if count < 0:
            raise ValueError("negative charge")
        self.fresh_playouts += count

    @property
    def unit_size(self) -> float:
        return self.unit_model_steps * self.a_weight + self.b_weight

    def raw_units(self) -> float:
        return (self.model_steps * self.a_weight + self.objective_evals * self.b_weight) / self.unit_size

    def units(self) -> float:
        if self.playout_mode:
            return float(self.fresh_playouts)
        return self.raw_units()

    def merge(self, other: "CostMeter") -> "CostMeter":
        if (self.unit_model_steps, self.a_weight, self.b_weight) != (
            other.unit_model_steps,
            other.a_weight,
            other.b_weight,
        ):
            raise ValueError("cannot merge meters with different unit definitions")
        return CostMeter(
            self.unit_model_steps,
            self.a_weight,
            self.b_weight,
            self.model_steps + other.model_steps,
            self.objective_evals + other.objective_evals,
            self.fresh_playouts + other.fresh_playouts,
            self.playout_mode and other.playout_mode,
        )


def charge_model_step(meter: CostMeter | None, count: int = 1) -> None:
    if meter is not None:
        meter.charge_model_step(count)


def charge_objective_eval(meter: CostMeter | None, count: int = 1) -> None:
    if meter is not None:
        meter.charge_objective_eval(count)


def charge_fresh_playout(meter: CostMeter | None, count: int = 1) -> None:
    if meter is not None:
        meter.charge_fresh_playout(count)


def units(meter: CostMeter) -> float:
    return meter.units()
