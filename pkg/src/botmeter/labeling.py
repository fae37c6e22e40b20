"""Ground-truth labeling of flows by 5-tuple rule matching.

Dataset providers enumerate malicious endpoints; everything unmatched falls
back to the default label with a loud summary warning.  Match precedence:
exact-orientation 5-tuple, then reversed orientation, then rules containing
wildcards (either orientation); within a tier the first rule in file order
wins.  A rule with a time window only applies to flows starting inside it.
"""

from __future__ import annotations

import csv
import ipaddress
import logging
from collections import Counter
from dataclasses import dataclass, field

from .errors import CsvFormatError, ValidationError
from .features import FeatureVector

logger = logging.getLogger(__name__)

WILDCARD = "*"
_MANDATORY = ("src_ip", "src_port", "dst_ip", "dst_port", "protocol", "label")


@dataclass(frozen=True)
class LabelRule:
    src_ip: str          # normalized address text or "*"
    src_port: int | None  # None is wildcard
    dst_ip: str
    dst_port: int | None
    protocol: int | None
    label: str
    start_us: int | None = None
    end_us: int | None = None

    def __post_init__(self):
        if not self.label:
            raise ValidationError("rule label must be non-empty")
        if (self.start_us is None) != (self.end_us is None):
            raise ValidationError("time window needs both start and end")
        if self.start_us is not None and self.start_us > self.end_us:
            raise ValidationError("time window start must not exceed end")

    @property
    def has_wildcard(self) -> bool:
        return (self.src_ip == WILDCARD or self.dst_ip == WILDCARD
                or self.src_port is None or self.dst_port is None
                or self.protocol is None)

    def _ends_match(self, flow: FeatureVector, a_ip, a_port, b_ip, b_port) -> bool:
        if self.protocol is not None and flow.protocol != self.protocol:
            return False
        if self.src_ip != WILDCARD and self.src_ip != a_ip:
            return False
        if self.src_port is not None and self.src_port != a_port:
            return False
        if self.dst_ip != WILDCARD and self.dst_ip != b_ip:
            return False
        if self.dst_port is not None and self.dst_port != b_port:
            return False
        return True

    def in_window(self, flow: FeatureVector) -> bool:
        if self.start_us is None:
            return True
        return self.start_us <= flow.start_ts_us <= self.end_us

    def matches_forward(self, flow: FeatureVector) -> bool:
        return self.in_window(flow) and self._ends_match(
            flow, flow.src_ip, flow.src_port, flow.dst_ip, flow.dst_port)

    def matches_reversed(self, flow: FeatureVector) -> bool:
        return self.in_window(flow) and self._ends_match(
            flow, flow.dst_ip, flow.dst_port, flow.src_ip, flow.src_port)


@dataclass(frozen=True)
class LabeledRow:
    flow: FeatureVector
    label: str


@dataclass
class LabelReport:
    counts: Counter = field(default_factory=Counter)
    unmatched: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def _parse_ip_cell(cell: str, line_no: int, column: str) -> str:
    cell = cell.strip()
    if cell == WILDCARD:
        return WILDCARD
    try:
        return str(ipaddress.ip_address(cell))
    except ValueError:
        raise CsvFormatError(
            f"line {line_no}: column {column!r} has unparseable IP {cell!r}") from None


def _parse_int_cell(cell: str, line_no: int, column: str) -> int | None:
    cell = cell.strip()
    if cell in (WILDCARD, ""):
        return None
    try:
        return int(cell)
    except ValueError:
        raise CsvFormatError(
            f"line {line_no}: column {column!r} is not an integer: {cell!r}") from None


def parse_rules(path: str) -> list[LabelRule]:
    """Read a rule CSV: src_ip, src_port, dst_ip, dst_port, protocol, label
    plus optional start/end microsecond columns; "*" means wildcard."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in _MANDATORY if c not in header]
        if missing:
            raise CsvFormatError(f"rule file missing mandatory column(s): "
                                 f"{', '.join(missing)}")
        rules = []
        for line_no, row in enumerate(reader, start=2):
            label = (row["label"] or "").strip()
            if not label:
                raise CsvFormatError(f"line {line_no}: empty label")
            rules.append(LabelRule(
                src_ip=_parse_ip_cell(row["src_ip"] or "*", line_no, "src_ip"),
                src_port=_parse_int_cell(row["src_port"] or "*", line_no, "src_port"),
                dst_ip=_parse_ip_cell(row["dst_ip"] or "*", line_no, "dst_ip"),
                dst_port=_parse_int_cell(row["dst_port"] or "*", line_no, "dst_port"),
                protocol=_parse_int_cell(row["protocol"] or "*", line_no, "protocol"),
                label=label,
                start_us=_parse_int_cell(row.get("start") or "", line_no, "start"),
                end_us=_parse_int_cell(row.get("end") or "", line_no, "end"),
            ))
    return rules


def match_rule(flow: FeatureVector, rules: list[LabelRule]) -> LabelRule | None:
    """First match by precedence tier, then by rule order within the tier."""
    for rule in rules:
        if not rule.has_wildcard and rule.matches_forward(flow):
            return rule
    for rule in rules:
        if not rule.has_wildcard and rule.matches_reversed(flow):
            return rule
    for rule in rules:
        if rule.has_wildcard and (rule.matches_forward(flow)
                                  or rule.matches_reversed(flow)):
            return rule
    return None


def label_flows(flows, rules: list[LabelRule],
                default_label: str = "Normal") -> tuple[list[LabeledRow], LabelReport]:
    if not rules:
        raise ValidationError("need at least one label rule")
    report = LabelReport()
    out = []
    for flow in flows:
        rule = match_rule(flow, rules)
        if rule is None:
            label = default_label
            report.unmatched += 1
        else:
            label = rule.label
        report.counts[label] += 1
        out.append(LabeledRow(flow, label))
    if report.unmatched:
        logger.warning(
            "%d of %d flows matched no rule and were labeled %r",
            report.unmatched, report.total, default_label)
    return out, report


def labels_to_binary(labels, negative_label: str = "Normal") -> list[int]:
    """Collapse string labels for training: anything but the negative label
    is the positive (attack) class."""
    return [0 if lb == negative_label else 1 for lb in labels]
