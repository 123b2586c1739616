from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

OK = "ok"
INFEASIBLE = "infeasible"
UNCERTIFIED = "uncertified_survivor"

CAP_HIT = "cap_hit"


@dataclass
class TrialResult:
    """Outcome of one engine run.

    ``winner`` is a policy id, or None when the run is infeasible. ``t`` is
    the number of index draws per stream; ``labels_used`` counts only
    observed labels.
    """

    winner: Optional[int]
    labels_used: int
    epochs: int
    t: int
    status: str = OK
    seed: Optional[int] = None
    flags: list = field(default_factory=list)
    correct: Optional[bool] = None
    final_active: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def cap_hit(self) -> bool:
        return CAP_HIT in self.flags

    def summary(self) -> dict:
        out = asdict(self)
        out.pop("trace")
        out.pop("extras")
        return out

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(rec) + "\n" for rec in self.trace)
