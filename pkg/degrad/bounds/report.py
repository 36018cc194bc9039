"""
BoundReport: every theoretical quantity of one configured experiment.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .contraction import ContractionSpec, MixingQuantities
from .envelopes import ErrorEnvelope, TimeVaryingEnvelope
from .gap import GapBound


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


@dataclass
class BoundReport:
    contraction: ContractionSpec
    gap: Optional[GapBound]
    envelope: Union[ErrorEnvelope, TimeVaryingEnvelope, None]
    notes: List[str] = field(default_factory=list)
    mixing: Optional[MixingQuantities] = None

    @property
    def Lambda(self) -> Optional[float]:
        return self.gap.Lambda if self.gap else None

    @property
    def dhat(self) -> float:
        return self.envelope.dhat if isinstance(self.envelope, ErrorEnvelope) else 0.0

    def fixed_envelope(self, n_iters: int) -> Optional[np.ndarray]:
        """Bound on (RMS) dist_to_fixed for t = 0..n_iters."""
        if isinstance(self.envelope, ErrorEnvelope):
            return self.envelope.to_fixed.sample(n_iters)
        if isinstance(self.envelope, TimeVaryingEnvelope):
            return self.envelope.sample(n_iters)
        return None

    def opt_envelope(self, n_iters: int) -> Optional[np.ndarray]:
        """Bound on (RMS) dist_to_opt for t = 0..n_iters."""
        if isinstance(self.envelope, ErrorEnvelope):
            return self.envelope.to_opt.sample(n_iters)
        if isinstance(self.envelope, TimeVaryingEnvelope):
            return self.envelope.sample(n_iters)
        return None

    def to_dict(self) -> Dict[str, Any]:
        rate = self.contraction
        payload: Dict[str, Any] = {
            "c": rate.factor,
            "c_outer": rate.per_iteration,
            "regime": rate.regime.value,
            "eta_max": rate.eta_max,
            "valid": rate.valid,
            "Lambda": _finite_or_none(self.Lambda),
            "gap": self.gap.value if self.gap else None,
            "gap_slack": self.gap.slack if self.gap else None,
            "second_order": self.gap.second_order if self.gap else False,
            "dhat": None,
            "dhat_simplified": None,
            "nu": None,
            "notes": list(self.notes),
        }
        if isinstance(self.envelope, ErrorEnvelope):
            payload.update(
                dhat=self.envelope.dhat,
                dhat_simplified=self.envelope.dhat_simplified,
                nu=self.envelope.nu,
                envelope_kind=self.envelope.kind.value,
            )
        elif isinstance(self.envelope, TimeVaryingEnvelope):
            payload.update(decay_class=self.envelope.decay, envelope_kind="time_varying")
        if rate.violated:
            payload["violated"] = rate.violated
        if self.mixing is not None:
            payload.update(lambda2=self.mixing.lambda2, lambdaN=self.mixing.lambdaN)
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
