"""Bug-record classification by feature-set containment, plus report I/O.

A new bug-inducing case is a potential duplicate when some earlier New
record's feature set is contained in the new case's set; otherwise it is
New and its set joins the history. The history stores New records only,
append-only, and never prunes: when several stored sets match, the lowest
id wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .features import FeatureId

NEW = "New"
POTENTIAL_DUPLICATE = "PotentialDuplicate"


@dataclass(frozen=True)
class Classification:
    kind: str
    duplicate_of: int | None = None

    def __str__(self) -> str:
        if self.kind == NEW:
            return NEW
        return f"{POTENTIAL_DUPLICATE} of bug {self.duplicate_of}"


@dataclass(frozen=True)
class BugRecord:
    """One bug-inducing test case: the statements that reproduce it and
    the oracle check that failed."""

    id: int
    oracle: str
    feature_set: frozenset[FeatureId]
    setup: tuple
    check: object
    classification: Classification
    reduced: bool = True


class HistoryStore:
    """Insertion-ordered feature sets of all records classified New."""

    def __init__(self):
        self.sets: list[tuple[int, frozenset[str]]] = []
        # witness feature -> positions in self.sets; a stored set can only
        # be contained in S_new if its witness is a member of S_new
        self._by_witness: dict[str, list[int]] = {}

    def __len__(self) -> int:
        return len(self.sets)

    def _append(self, record_id: int, identifiers: frozenset[str]) -> None:
        witness = min(identifiers)
        self._by_witness.setdefault(witness, []).append(len(self.sets))
        self.sets.append((record_id, identifiers))

    def classify(self, new_id: int, feature_set) -> Classification:
        """Subset scan pruned through the witness index; appends on New."""
        identifiers = _identifiers(feature_set)
        if not identifiers:
            raise ValueError("feature set must be nonempty")
        candidates: list[int] = []
        for ident in identifiers:
            candidates.extend(self._by_witness.get(ident, ()))
        best: int | None = None
        for pos in candidates:
            record_id, stored = self.sets[pos]
            if stored <= identifiers and (best is None or record_id < best):
                best = record_id
        if best is not None:
            return Classification(POTENTIAL_DUPLICATE, best)
        self._append(new_id, identifiers)
        return Classification(NEW)


def _identifiers(feature_set) -> frozenset[str]:
    out = set()
    for f in feature_set:
        out.add(f.identifier if isinstance(f, FeatureId) else str(f))
    return frozenset(out)


def classify(new_id: int, feature_set, history: HistoryStore) -> Classification:
    return history.classify(new_id, feature_set)


def brute_force_classify(
    new_id: int, feature_set, history: HistoryStore
) -> Classification:
    """Same contract as classify via a plain linear subset scan; exists to
    cross-check the indexed implementation."""
    identifiers = _identifiers(feature_set)
    if not identifiers:
        raise ValueError("feature set must be nonempty")
    matches = [rid for rid, stored in history.sets if stored <= identifiers]
    if matches:
        return Classification(POTENTIAL_DUPLICATE, min(matches))
    history._append(new_id, identifiers)
    return Classification(NEW)


# --------------------------------------------------------------------------
# report directories


def bug_dir_name(record_id: int) -> str:
    return f"bug-{record_id:04d}"


def _reproduction_lines(oracle: str, setup, check) -> list[str]:
    lines = [f"-- oracle: {oracle}"]
    for st in setup:
        lines.append(f"{st.sql};")
    for tag, st in zip(check.tags, check.statements):
        lines.append(f"-- check: {tag}")
        lines.append(f"{st.sql};")
    return lines


def _render_cell(v) -> str:
    if v is None:
        return "NULL"
    if v is True:
        return "TRUE"
    if v is False:
        return "FALSE"
    return repr(v)


def write_report(out_dir, record: BugRecord, original_setup=None, original_check=None) -> Path:
    """Write one bug's report directory; returns its path.

    When the reducer shrank the case, ``original_setup``/``original_check``
    hold the pre-reduction reproduction, kept as reproduce.orig.sql.
    """
    path = Path(out_dir) / "bugs" / bug_dir_name(record.id)
    path.mkdir(parents=True, exist_ok=True)
    check = record.check
    (path / "reproduce.sql").write_text(
        "\n".join(_reproduction_lines(record.oracle, record.setup, check)) + "\n"
    )
    if original_setup is not None and original_check is not None:
        (path / "reproduce.orig.sql").write_text(
            "\n".join(_reproduction_lines(record.oracle, original_setup, original_check))
            + "\n"
        )
    lines = [
        f"oracle: {record.oracle}",
        f"status: {check.status}",
        f"detail: {check.detail}",
        f"reduced: {'yes' if record.reduced else 'no'}",
    ]
    for tag, st, status, rows in zip(
        check.tags, check.statements, check.statuses, check.rows
    ):
        lines.append(f"-- {tag}")
        lines.append(st.sql)
        if rows is None:
            lines.append(f"error: {status.message}")
        else:
            lines.append(f"rows: {len(rows)}")
            for row in rows:
                lines.append("(" + ", ".join(_render_cell(v) for v in row) + ")")
    (path / "oracle.txt").write_text("\n".join(lines) + "\n")
    (path / "features.txt").write_text(
        "\n".join(sorted(_identifiers(record.feature_set))) + "\n"
    )
    cls = [f"id: {record.id}", f"classification: {record.classification.kind}"]
    if record.classification.duplicate_of is not None:
        cls.append(f"duplicate_of: {record.classification.duplicate_of}")
    (path / "classification.txt").write_text("\n".join(cls) + "\n")
    return path


@dataclass(frozen=True)
class SavedReproduction:
    directory: Path
    oracle: str
    setup: tuple[str, ...]
    checks: tuple[str, ...]
    tags: tuple[str, ...]


def read_reproduction(bug_dir) -> SavedReproduction:
    """Parse a reproduce.sql back into setup and tagged check statements."""
    path = Path(bug_dir) / "reproduce.sql"
    oracle = ""
    setup: list[str] = []
    checks: list[str] = []
    tags: list[str] = []
    pending_tag: str | None = None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("-- oracle:"):
            oracle = line.split(":", 1)[1].strip()
        elif line.startswith("-- check:"):
            pending_tag = line.split(":", 1)[1].strip()
        elif line.startswith("--"):
            continue
        else:
            stmt = line.rstrip(";")
            if pending_tag is None:
                setup.append(stmt)
            else:
                checks.append(stmt)
                tags.append(pending_tag)
                pending_tag = None
    return SavedReproduction(
        Path(bug_dir), oracle, tuple(setup), tuple(checks), tuple(tags)
    )


def list_bug_dirs(out_dir) -> list[Path]:
    root = Path(out_dir) / "bugs"
    if not root.is_dir():
        return []
    return sorted(p for p in root.iterdir() if p.is_dir())
