"""Factor queries selecting the two groups of a comparison.

Grammar::

    factor=level vs level
    factor=level vs rest
    <either of the above> | factor=level[, factor=level ...]

The optional suffix restricts both groups to a stratum, e.g.
``sex=F vs M | region=NAc``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import ValidationError

_MAIN = re.compile(r"^\s*([^=|]+?)\s*=\s*(.+?)\s+vs\s+(.+?)\s*$")


@dataclass(frozen=True)
class FactorQuery:
    factor: str
    level1: str
    level2: str  # "rest" selects every other level
    stratum: tuple[tuple[str, str], ...] = ()

    @classmethod
    def parse(cls, text: str) -> "FactorQuery":
        main, _, strat = text.partition("|")
        m = _MAIN.match(main)
        if not m:
            raise ValidationError(f"cannot parse comparison {text!r}; expected 'factor=A vs B'")
        stratum = []
        if strat.strip():
            for part in strat.split(","):
                key, eq, val = part.partition("=")
                if not eq or not key.strip() or not val.strip():
                    raise ValidationError(f"cannot parse stratum {part.strip()!r} in {text!r}")
                stratum.append((key.strip(), val.strip()))
        return cls(m.group(1), m.group(2), m.group(3), tuple(stratum))

    @property
    def label(self) -> str:
        s = f"{self.factor}={self.level1} vs {self.level2}"
        if self.stratum:
            s += " | " + ", ".join(f"{k}={v}" for k, v in self.stratum)
        return s

    def select(self, labels: Mapping[str, Mapping[str, str]]) -> tuple[list[str], list[str]]:
        """Split session ids (in input order) into the two groups."""
        for key in (self.factor, *(k for k, _ in self.stratum)):
            if not any(key in lab for lab in labels.values()):
                raise ValidationError(f"unknown factor {key!r}")
        g1, g2 = [], []
        for sid, lab in labels.items():
            if any(lab.get(k) != v for k, v in self.stratum):
                continue
            level = lab.get(self.factor)
            if level == self.level1:
                g1.append(sid)
            elif (self.level2 == "rest" and level is not None) or level == self.level2:
                g2.append(sid)
        if self.level1 == self.level2 or set(g1) & set(g2):
            raise ValidationError(f"{self.label}: the two groups are not disjoint")
        if not g1 or not g2:
            raise ValidationError(f"{self.label}: a group is empty")
        return g1, g2
