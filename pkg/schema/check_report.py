from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.enums import Provenance, Verdict


def smallest_slack(slacks) -> float:
    """Minimum slack, 0 for none; a NaN slack is an unevaluated sample and makes it NaN (a failure)."""
    return float(np.min(slacks)) if len(slacks) else 0.0


class ConstantRecord(BaseModel):
    value: float
    provenance: Provenance
    method: str = Field("", description="Formula, fit method or config key the value came from")


class CheckReport(BaseModel):
    """
    Outcome of one inequality verification. Slacks are RHS - LHS per sample.
    """
    model_config = ConfigDict(ser_json_inf_nan="constants")

    name: str
    anchor: str = Field(..., description="Statement the check certifies")
    slacks: List[float] = Field(default_factory=list)
    sample_times: List[float] = Field(default_factory=list)
    tolerance: float = Field(0.0, ge=0)
    constants: Dict[str, ConstantRecord] = Field(default_factory=dict)
    verdict: Verdict
    notes: List[str] = Field(default_factory=list)
    vacuous_at: Optional[float] = Field(None, description="Location of the first hypothesis failure")
    auxiliary: Dict[str, List[float]] = Field(default_factory=dict)

    @model_validator(mode='after')
    def verdict_matches_slacks(self):
        if self.verdict == Verdict.VACUOUS:
            return self
        holds = self.min_slack >= -self.tolerance
        if holds != (self.verdict == Verdict.PASS):
            raise ValueError(
                f"{self.name}: verdict {self.verdict.value} disagrees with min slack {self.min_slack:.3e} "
                f"and tolerance {self.tolerance:.3e}"
            )
        return self

    @property
    def min_slack(self) -> float:
        return smallest_slack(self.slacks)

    @classmethod
    def from_slacks(
        cls,
        name: str,
        anchor: str,
        slacks,
        tolerance: float,
        sample_times=None,
        constants: Optional[Dict[str, ConstantRecord]] = None,
        notes: Optional[List[str]] = None,
        auxiliary: Optional[Dict[str, List[float]]] = None,
        force_fail: bool = False,
    ) -> "CheckReport":
        slacks = [float(s) for s in np.asarray(slacks, dtype=float).ravel()]
        report_notes = list(notes or [])
        if force_fail and smallest_slack(slacks) >= -tolerance:
            # a structural failure (e.g. unstable fit) is recorded as a negative slack
            slacks.append(-float(tolerance) - 1.0)
            report_notes.append("structural failure appended as slack -(tol+1)")
        holds = smallest_slack(slacks) >= -tolerance
        return cls(
            name=name,
            anchor=anchor,
            slacks=slacks,
            sample_times=[float(t) for t in (sample_times if sample_times is not None else [])],
            tolerance=float(tolerance),
            constants=constants or {},
            verdict=Verdict.PASS if holds else Verdict.FAIL,
            notes=report_notes,
            auxiliary=auxiliary or {},
        )

    @classmethod
    def vacuous(cls, name: str, anchor: str, reason: str, location: Optional[float] = None,
                constants: Optional[Dict[str, ConstantRecord]] = None) -> "CheckReport":
        return cls(
            name=name,
            anchor=anchor,
            verdict=Verdict.VACUOUS,
            notes=[reason],
            vacuous_at=location,
            constants=constants or {},
        )
