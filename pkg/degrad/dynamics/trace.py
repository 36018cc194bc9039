"""
Run traces: iterates plus the per-iteration error metrics.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

TRACE_COLUMNS = ["t", "dist_to_fixed", "dist_to_opt", "consensus_residual"]


def consensus_residual(X: np.ndarray) -> float:
    """||X - 1 mean(X)||, the disagreement between agents."""
    return float(np.linalg.norm(X - X.mean(axis=0, keepdims=True)))


@dataclass
class Trace:
    iterates: List[np.ndarray]
    dist_to_fixed: np.ndarray
    dist_to_opt: np.ndarray
    consensus_residual: np.ndarray
    seed: Optional[int] = None
    config: Dict[str, Any] = field(default_factory=dict)
    diverged: bool = False
    diverged_at: Optional[int] = None

    def __len__(self) -> int:
        return len(self.dist_to_opt)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def rows(self, envelope: Optional[Sequence[float]] = None) -> List[Dict[str, Any]]:
        rows = []
        for t in range(len(self)):
            row: Dict[str, Any] = {
                "t": t,
                "dist_to_fixed": repr(float(self.dist_to_fixed[t])),
                "dist_to_opt": repr(float(self.dist_to_opt[t])),
                "consensus_residual": repr(float(self.consensus_residual[t])),
            }
            if envelope is not None:
                row["envelope"] = repr(float(envelope[t]))
            rows.append(row)
        return rows

    def to_csv(self, envelope: Optional[Sequence[float]] = None) -> str:
        fieldnames = TRACE_COLUMNS + (["envelope"] if envelope is not None else [])
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows(envelope))
        return buf.getvalue()

    def write_csv(self, path: Path, envelope: Optional[Sequence[float]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(envelope), encoding="utf-8")
        return path

    def iterates_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "config": self.config,
                "diverged": self.diverged,
                "diverged_at": self.diverged_at,
                "iterates": [X.tolist() for X in self.iterates],
            },
            sort_keys=True,
        )
