"""Concrete dependability models for 2oo2/2oo3 voting architectures.

Two model families live here: the two-unit failure network that yields the
single-unit error probability and the hazardous-failure probability of a
2oo2 system, and the state-based imperfect-maintenance chains (four, five
and eight states) whose steady state yields the 2oo3 hazardous failure rate.

A note on the maintenance rates: the correct-maintenance repair flow goes
from the shutdown-with-fault state back to normal operation at
``(1 - wrong_ratio) * repair_rate``, and the incorrect-maintenance flow into
the hazardous up-with-fault state at ``wrong_ratio * repair_rate``. Power
loss leaves the powered states at the line failure rate and power restore
returns to the hazardous up state, since an ungoverned restart brings the
faulty system back online. Both conventions are the ones that reproduce the
published hazard figures; swapping either direction does not.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Mapping

from . import bayes, ctmc
from .errors import ValidationError

BOOL_STATES = ("False", "True")

UNITS = ("A", "B")


def _check_unit_interval(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value!r}")


def _check_nonnegative(name: str, value: float) -> None:
    if not value >= 0.0:
        raise ValidationError(f"{name} must be non-negative, got {value!r}")


@dataclass(frozen=True)
class FailureParams:
    """Inputs of the two-unit failure network.

    par1: per-hour fault probability of a single unit.
    par2: ratio of permanent faults that are not diagnosable.
    par3: probability that simultaneous faults produce identical outputs.
    transient_ratio: fraction of faults that are transient rather than permanent.
    excl_fail: failure probability of a unit's exclusion logic.
    p_activate: probability that a transient fault activates into an
        undetected erroneous output within the reference hour.
    p_miss: probability that a detectable permanent fault escapes detection
        within the reference hour.

    The last two defaults are calibrated so the reference network reproduces
    the published per-variable probabilities; both stay overridable.
    """

    par1: float
    par2: float
    par3: float
    transient_ratio: float = 0.9
    excl_fail: float = 1e-10
    p_activate: float = 0.1
    p_miss: float = 0.35

    def __post_init__(self) -> None:
        for name in ("par1", "par2", "par3", "transient_ratio", "excl_fail",
                     "p_activate", "p_miss"):
            _check_unit_interval(name, getattr(self, name))


@dataclass(frozen=True)
class MaintenanceParams:
    """Inputs of the imperfect-maintenance chains.

    par4: per-hour probability of an error in one unit (leads to safe shutdown).
    par5: per-hour hazardous-failure probability of the 2oo2 system.
    par6: repairs per hour (inverse mean time to repair).
    par7: ratio of maintenance interventions performed incorrectly.
    par8: power line failures per hour (inverse mean time between failures).
    par9: power restores per hour (inverse mean time to restore).
    """

    par4: float
    par5: float
    par6: float
    par7: float
    par8: float
    par9: float

    def __post_init__(self) -> None:
        _check_unit_interval("par4", self.par4)
        _check_unit_interval("par5", self.par5)
        _check_unit_interval("par7", self.par7)
        if self.par5 > 2.0 * self.par4:
            raise ValidationError(
                f"par5 ({self.par5!r}) cannot exceed twice par4 ({self.par4!r})"
            )
        for name in ("par6", "par8", "par9"):
            _check_nonnegative(name, getattr(self, name))


class MaintenanceLevel(enum.Enum):
    """Level of detail of the maintenance chain."""

    FOUR_STATE = "four"
    FIVE_STATE = "five"
    EIGHT_STATE = "eight"


@dataclass(frozen=True)
class InterfaceValues:
    """Values exchanged between the failure and maintenance models."""

    par4: float | None = None
    par5: float | None = None
    par10: float | None = None
    hr_2oo2: float | None = None
    hfr_2oo3: float | None = None
    mtbhe_2oo2: float | None = None
    mtbhe_2oo3: float | None = None


# --- failure network ---------------------------------------------------------


def _root(var_id: str, p_true: float) -> tuple[bayes.Variable, bayes.Cpt]:
    return (
        bayes.Variable(var_id, BOOL_STATES),
        bayes.Cpt(var_id, (), {(): (1.0 - p_true, p_true)}),
    )


def _gate(
    var_id: str,
    parents: tuple[str, ...],
    parent_states: tuple[tuple[str, ...], ...],
    p_true,
) -> tuple[bayes.Variable, bayes.Cpt]:
    rows = {}
    for combo in itertools.product(*parent_states):
        p = float(p_true(combo))
        rows[combo] = (1.0 - p, p)
    return bayes.Variable(var_id, BOOL_STATES), bayes.Cpt(var_id, parents, rows)


def build_failure_bn(params: FailureParams) -> bayes.BayesNet:
    """The two-unit failure network.

    Per unit, a fault is transient or permanent; transient faults may
    activate into undetected errors, permanent faults escape either because
    they are non-diagnosable or because detection misses them in the
    reference hour. A unit's incorrect output becomes hazardous only when
    both units err with identical outputs or when the erring unit's
    exclusion logic also fails.
    """
    variables: list[bayes.Variable] = []
    cpts: list[bayes.Cpt] = []

    def add(pair: tuple[bayes.Variable, bayes.Cpt]) -> None:
        variables.append(pair[0])
        cpts.append(pair[1])

    bb = (BOOL_STATES, BOOL_STATES)
    for unit in UNITS:
        fault = f"Fault_{unit}"
        ftype = f"Fault_type_{unit}"
        detectability = f"Fault_detectability_{unit}"
        transient = f"Transient_Fault_{unit}"
        permanent = f"Permanent_Fault_{unit}"
        detectable = f"Detectable_Fault_{unit}"
        non_detectable = f"Non_detectable_Fault_{unit}"
        err_transient = f"Error_due_to_Transient_{unit}"
        undetected = f"Undetected_permanent_{unit}"
        uncorr = f"UNCORR_{unit}"

        add(_root(fault, params.par1))
        variables.append(bayes.Variable(ftype, ("Transient", "Permanent")))
        cpts.append(bayes.Cpt(ftype, (), {(): (params.transient_ratio,
                                               1.0 - params.transient_ratio)}))
        variables.append(bayes.Variable(detectability, ("Detectable", "Non_detectable")))
        cpts.append(bayes.Cpt(detectability, (), {(): (1.0 - params.par2, params.par2)}))

        add(_gate(transient, (fault, ftype), (BOOL_STATES, ("Transient", "Permanent")),
                  lambda c: 1.0 if c == ("True", "Transient") else 0.0))
        add(_gate(permanent, (fault, ftype), (BOOL_STATES, ("Transient", "Permanent")),
                  lambda c: 1.0 if c == ("True", "Permanent") else 0.0))
        add(_gate(detectable, (permanent, detectability),
                  (BOOL_STATES, ("Detectable", "Non_detectable")),
                  lambda c: 1.0 if c == ("True", "Detectable") else 0.0))
        add(_gate(non_detectable, (permanent, detectability),
                  (BOOL_STATES, ("Detectable", "Non_detectable")),
                  lambda c: 1.0 if c == ("True", "Non_detectable") else 0.0))
        add(_gate(err_transient, (transient,), (BOOL_STATES,),
                  lambda c: params.p_activate if c == ("True",) else 0.0))
        add(_gate(undetected, (non_detectable, detectable), bb,
                  lambda c: 1.0 if c[0] == "True"
                  else (params.p_miss if c[1] == "True" else 0.0)))
        add(_gate(uncorr, (err_transient, undetected), bb,
                  lambda c: 1.0 if "True" in c else 0.0))
        add(_root(f"Excl_{unit}", params.excl_fail))

    add(_root("Same_output_alterations", params.par3))

    def unsafe(combo: tuple[str, ...]) -> float:
        ua, ub, same, ea, eb = (c == "True" for c in combo)
        return 1.0 if ((ua and ub and same) or (ua and ea) or (ub and eb)) else 0.0

    add(_gate(
        "UNSAFE_OUTPUT",
        ("UNCORR_A", "UNCORR_B", "Same_output_alterations", "Excl_A", "Excl_B"),
        (BOOL_STATES,) * 5,
        unsafe,
    ))
    return bayes.build_net(variables, cpts)


def failure_interface(params: FailureParams) -> InterfaceValues:
    """Solve the failure network for the two interface probabilities.

    par4 is the single-unit incorrect-output probability, par5 the 2oo2
    hazardous-failure probability; both are exact marginals.
    """
    net = build_failure_bn(params)
    par4 = bayes.marginal(net, "UNCORR_A")["True"]
    par5 = bayes.marginal(net, "UNSAFE_OUTPUT")["True"]
    return InterfaceValues(par4=par4, par5=par5, hr_2oo2=par5)


def mtbhe_conversion(hr_2oo2: float) -> tuple[float, float]:
    """Mean time between hazardous events for the 2oo2 and the 2oo3 system.

    A 2oo3 voter behaves like three 2oo2 pairs, so its hazardous-event rate
    is three times the pair rate. The 2oo2 figure is derived from the 2oo3
    one so the factor-of-three identity holds exactly in floating point.
    """
    if not hr_2oo2 > 0.0:
        raise ValidationError(f"hazard rate must be positive, got {hr_2oo2!r}")
    mtbhe_2oo3 = 1.0 / (3.0 * hr_2oo2)
    return 3.0 * mtbhe_2oo3, mtbhe_2oo3


# --- maintenance chains ------------------------------------------------------

#: Reference parameterization, used when an eight-state chain is built
#: without an explicit failure parameterization.
DEFAULT_FAILURE_PARAMS = FailureParams(par1=1.6666e-5, par2=0.1, par3=0.1)


def _add_rate(transitions: list[ctmc.Transition], src: str, dst: str, rate: float) -> None:
    # zero-valued rates denote an absent transition, not a zero-rate edge
    if rate > 0.0:
        transitions.append(ctmc.Transition(src, dst, rate))


def build_maintenance_ctmc(
    level: MaintenanceLevel,
    params: MaintenanceParams,
    failure: FailureParams | None = None,
) -> ctmc.Ctmc:
    """Build the maintenance chain at the requested level of detail.

    States of the five-state reference chain:
      S0 up, no non-diagnosable fault; S1 safe shutdown, no fault;
      S2 shutdown with a non-diagnosable fault; S3 up with a non-diagnosable
      fault (the hazardous state); S4 unpowered with such a fault.

    The four-state chain drops S4 and folds the power-cycle path into the
    incorrect-maintenance transition. The eight-state chain additionally
    tracks diagnosable permanent faults (S0 split into S0p/S0s plus S5/S6
    mirroring S2/S4); its transition set is a documented reconstruction and
    needs the fault-occurrence parameters, supplied via ``failure``
    (reference defaults when omitted). No published figure depends on the
    eight-state variant.
    """
    safe_shutdown = 2.0 * params.par4 - params.par5
    if not safe_shutdown > 0.0:
        raise ValidationError(
            f"safe-shutdown rate 2*par4 - par5 must be positive, got {safe_shutdown!r}"
        )
    unsafe = params.par5
    repair_ok = (1.0 - params.par7) * params.par6
    repair_bad = params.par7 * params.par6

    transitions: list[ctmc.Transition] = []
    if level is MaintenanceLevel.FIVE_STATE:
        states = ("S0", "S1", "S2", "S3", "S4")
        _add_rate(transitions, "S0", "S1", safe_shutdown)
        _add_rate(transitions, "S0", "S3", unsafe)
        _add_rate(transitions, "S1", "S0", params.par6)
        _add_rate(transitions, "S1", "S2", unsafe)
        _add_rate(transitions, "S2", "S0", repair_ok)
        _add_rate(transitions, "S2", "S3", repair_bad)
        _add_rate(transitions, "S2", "S4", params.par8)
        _add_rate(transitions, "S3", "S2", safe_shutdown)
        _add_rate(transitions, "S3", "S4", params.par8)
        _add_rate(transitions, "S4", "S3", params.par9)
        return ctmc.Ctmc(states, "S0", tuple(transitions))

    if level is MaintenanceLevel.FOUR_STATE:
        states = ("S0", "S1", "S2", "S3")
        _add_rate(transitions, "S0", "S1", safe_shutdown)
        _add_rate(transitions, "S0", "S3", unsafe)
        _add_rate(transitions, "S1", "S0", params.par6)
        _add_rate(transitions, "S1", "S2", unsafe)
        _add_rate(transitions, "S2", "S0", repair_ok)
        _add_rate(transitions, "S2", "S3", repair_bad + params.par8)
        _add_rate(transitions, "S3", "S2", safe_shutdown)
        return ctmc.Ctmc(states, "S0", tuple(transitions))

    if level is MaintenanceLevel.EIGHT_STATE:
        fp = failure if failure is not None else DEFAULT_FAILURE_PARAMS
        diag_fault = 2.0 * fp.par1 * (1.0 - fp.transient_ratio) * (1.0 - fp.par2)
        states = ("S0p", "S0s", "S1", "S2", "S3", "S4", "S5", "S6")
        for up in ("S0p", "S0s"):
            _add_rate(transitions, up, "S3", unsafe)
        _add_rate(transitions, "S0p", "S1", safe_shutdown)
        _add_rate(transitions, "S0p", "S0s", diag_fault)
        _add_rate(transitions, "S0s", "S5", safe_shutdown)
        _add_rate(transitions, "S1", "S0p", params.par6)
        _add_rate(transitions, "S1", "S2", unsafe)
        _add_rate(transitions, "S2", "S0p", repair_ok)
        _add_rate(transitions, "S2", "S3", repair_bad)
        _add_rate(transitions, "S2", "S4", params.par8)
        _add_rate(transitions, "S3", "S2", safe_shutdown)
        _add_rate(transitions, "S3", "S4", params.par8)
        _add_rate(transitions, "S4", "S3", params.par9)
        _add_rate(transitions, "S5", "S0p", repair_ok)
        _add_rate(transitions, "S5", "S0s", repair_bad)
        _add_rate(transitions, "S5", "S6", params.par8)
        _add_rate(transitions, "S6", "S5", params.par9)
        return ctmc.Ctmc(states, "S0p", tuple(transitions))

    raise ValidationError(f"unknown maintenance level {level!r}")


def hfr_2oo3_from_maintenance(distribution: Mapping[str, float]) -> InterfaceValues:
    """Hazard figures of the 2oo3 system from a maintenance steady state.

    The model output is the steady-state probability of the hazardous state
    S3; the 2oo3 hazardous failure rate is three times that figure, mirroring
    the three-pair decomposition used for the failure model.
    """
    if "S3" not in distribution:
        raise ValidationError("maintenance distribution lacks the hazardous state S3")
    par10 = float(distribution["S3"])
    hfr = 3.0 * par10
    mtbhe = 1.0 / hfr if hfr > 0.0 else None
    return InterfaceValues(par10=par10, hfr_2oo3=hfr, mtbhe_2oo3=mtbhe)


# --- workflow templates ------------------------------------------------------


@dataclass(frozen=True)
class TemplateSpec:
    """A solvable model template exposed to the workflow layer."""

    name: str
    formalism: str  # "BAYES" or "CTMC"
    inputs: tuple[tuple[str, str], ...]  # (parameter name, kind)
    outputs: tuple[tuple[str, str], ...]
    description: str

    def solve(self, values: Mapping[str, float]) -> dict[str, float]:
        raise NotImplementedError


@dataclass(frozen=True)
class _FailureTemplate(TemplateSpec):
    def solve(self, values: Mapping[str, float]) -> dict[str, float]:
        params = FailureParams(values["PAR_1"], values["PAR_2"], values["PAR_3"])
        iface = failure_interface(params)
        return {"PAR_4": iface.par4, "PAR_5": iface.par5}


@dataclass(frozen=True)
class _MaintenanceTemplate(TemplateSpec):
    level: MaintenanceLevel = MaintenanceLevel.FIVE_STATE

    def solve(self, values: Mapping[str, float]) -> dict[str, float]:
        params = MaintenanceParams(
            par4=values["PAR_4"], par5=values["PAR_5"], par6=values["PAR_6"],
            par7=values["PAR_7"], par8=values["PAR_8"], par9=values["PAR_9"],
        )
        chain = build_maintenance_ctmc(self.level, params)
        pi = ctmc.steady_state(chain)
        return {"PAR_10": pi["S3"]}


_MM_INPUTS = (
    ("PAR_4", "probability"),
    ("PAR_5", "probability"),
    ("PAR_6", "rate"),
    ("PAR_7", "ratio"),
    ("PAR_8", "rate"),
    ("PAR_9", "rate"),
)

#: Stable template names for workflow files and the library API.
BUILTIN_TEMPLATES: dict[str, TemplateSpec] = {
    "failure2oo2": _FailureTemplate(
        name="failure2oo2",
        formalism="BAYES",
        inputs=(("PAR_1", "probability"), ("PAR_2", "ratio"), ("PAR_3", "probability")),
        outputs=(("PAR_4", "probability"), ("PAR_5", "probability")),
        description="two-unit failure network, solved by variable elimination",
    ),
    "maintenance4": _MaintenanceTemplate(
        name="maintenance4",
        formalism="CTMC",
        inputs=_MM_INPUTS,
        outputs=(("PAR_10", "probability"),),
        description="four-state maintenance chain, solved by GTH steady state",
        level=MaintenanceLevel.FOUR_STATE,
    ),
    "maintenance5": _MaintenanceTemplate(
        name="maintenance5",
        formalism="CTMC",
        inputs=_MM_INPUTS,
        outputs=(("PAR_10", "probability"),),
        description="five-state maintenance chain, solved by GTH steady state",
        level=MaintenanceLevel.FIVE_STATE,
    ),
    "maintenance8": _MaintenanceTemplate(
        name="maintenance8",
        formalism="CTMC",
        inputs=_MM_INPUTS,
        outputs=(("PAR_10", "probability"),),
        description="eight-state maintenance chain, solved by GTH steady state",
        level=MaintenanceLevel.EIGHT_STATE,
    ),
}
