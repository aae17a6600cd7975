"""Disease-finding knowledge bases.

A knowledge base lists M diseases and N findings (symptoms plus medical
examinations, one shared index space) and, per disease, the findings it can
produce.  Two flavors exist: probabilistic KBs attach an occurrence
probability to every disease-finding link, set-valued KBs attach none and
leave sampling counts to the simulator.  Instances are frozen after load and
safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import KbFormatError, KbValidationError

PROB_TOL = 1e-9


class Flavor(str, Enum):
    PROBABILISTIC = "probabilistic"
    SET_VALUED = "set_valued"


class FindingKind(str, Enum):
    SYMPTOM = "symptom"
    EXAMINATION = "examination"


@dataclass(frozen=True)
class Finding:
    id: int
    name: str
    kind: FindingKind


@dataclass(frozen=True)
class FindingLink:
    finding_id: int
    probability: float | None = None


@dataclass(frozen=True)
class ContextPrior:
    """Demographic prior for one disease: P(sex bit = 1) and a categorical
    distribution over the KB's age ranges."""

    sex_probability: float
    age_range_probabilities: tuple[float, ...]


@dataclass(frozen=True)
class DiseaseEntry:
    id: int
    name: str
    findings: tuple[FindingLink, ...]
    context_prior: ContextPrior | None = None


@dataclass(frozen=True)
class KnowledgeBase:
    flavor: Flavor
    findings: tuple[Finding, ...]
    diseases: tuple[DiseaseEntry, ...]
    age_ranges: tuple[tuple[int, int], ...]

    @property
    def n_findings(self) -> int:
        return len(self.findings)

    @property
    def n_diseases(self) -> int:
        return len(self.diseases)

    @property
    def has_context(self) -> bool:
        """True when every disease carries a context prior.

        Context bits are part of the state vector, whose length must be fixed
        per KB, so context is all-or-nothing across diseases.
        """
        return all(d.context_prior is not None for d in self.diseases)

    @property
    def context_dim(self) -> int:
        """Length of the context block: one sex bit plus one-hot age ranges."""
        return 1 + len(self.age_ranges) if self.has_context else 0

    @property
    def state_dim(self) -> int:
        return self.n_findings + self.context_dim

    def finding_name(self, finding_id: int) -> str:
        return self.findings[finding_id].name

    def disease_name(self, disease_id: int) -> str:
        return self.diseases[disease_id].name


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    disease_id: int | None = None
    finding_id: int | None = None


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"- [{v.code}] {v.message}" for v in self.violations)


def validate(kb: KnowledgeBase) -> ValidationReport:
    """Check every structural invariant; violations are data, not errors."""
    out: list[Violation] = []

    def bad(code: str, message: str, disease_id=None, finding_id=None):
        out.append(Violation(code, message, disease_id, finding_id))

    for i, f in enumerate(kb.findings):
        if f.id != i:
            bad("finding_id", f"finding at position {i} has id {f.id}; ids must be 0..N-1 in order", finding_id=f.id)
        if not f.name:
            bad("finding_name", f"finding {f.id} has an empty name", finding_id=f.id)

    for lo, hi in kb.age_ranges:
        if lo > hi:
            bad("age_range", f"age range ({lo}, {hi}) is inverted")
    ranges = sorted(kb.age_ranges)
    for (al, ah), (bl, bh) in zip(ranges, ranges[1:]):
        if bl <= ah:
            bad("age_range_overlap", f"age ranges ({al}, {ah}) and ({bl}, {bh}) overlap")

    n = kb.n_findings
    n_with_context = 0
    for i, d in enumerate(kb.diseases):
        if d.id != i:
            bad("disease_id", f"disease at position {i} has id {d.id}; ids must be 0..M-1 in order", disease_id=d.id)
        if not d.name:
            bad("disease_name", f"disease {d.id} has an empty name", disease_id=d.id)
        if not d.findings:
            bad("no_findings", f"disease {d.id} ({d.name!r}) links no findings", disease_id=d.id)
        seen: set[int] = set()
        for link in d.findings:
            if not (0 <= link.finding_id < n):
                bad("dangling_finding", f"disease {d.id} references finding {link.finding_id} but N={n}",
                    disease_id=d.id, finding_id=link.finding_id)
            if link.finding_id in seen:
                bad("duplicate_link", f"disease {d.id} links finding {link.finding_id} twice",
                    disease_id=d.id, finding_id=link.finding_id)
            seen.add(link.finding_id)
            if kb.flavor is Flavor.PROBABILISTIC:
                if link.probability is None:
                    bad("missing_probability", f"disease {d.id} link to finding {link.finding_id} lacks a probability",
                        disease_id=d.id, finding_id=link.finding_id)
                elif not (0.0 < link.probability <= 1.0):
                    bad("bad_probability",
                        f"disease {d.id} link to finding {link.finding_id} has probability {link.probability}, "
                        "expected (0, 1]",
                        disease_id=d.id, finding_id=link.finding_id)
            else:
                if link.probability is not None:
                    bad("unexpected_probability",
                        f"set-valued KB carries probability on disease {d.id} link to finding {link.finding_id}",
                        disease_id=d.id, finding_id=link.finding_id)
        cp = d.context_prior
        if cp is not None:
            n_with_context += 1
            if not (0.0 <= cp.sex_probability <= 1.0):
                bad("bad_sex_probability", f"disease {d.id} sex probability {cp.sex_probability} outside [0, 1]",
                    disease_id=d.id)
            if len(cp.age_range_probabilities) != len(kb.age_ranges):
                bad("age_prob_length",
                    f"disease {d.id} has {len(cp.age_range_probabilities)} age probabilities "
                    f"but the KB defines {len(kb.age_ranges)} age ranges", disease_id=d.id)
            if any(p < 0 for p in cp.age_range_probabilities):
                bad("negative_age_probability", f"disease {d.id} has a negative age-range probability", disease_id=d.id)
            total = sum(cp.age_range_probabilities)
            if abs(total - 1.0) > PROB_TOL:
                bad("age_prob_sum", f"disease {d.id} age-range probabilities sum to {total}, expected 1", disease_id=d.id)
    if 0 < n_with_context < kb.n_diseases:
        bad("mixed_context", "some diseases carry a context prior and others do not; context is all-or-nothing")

    return ValidationReport(out)


# ---------------------------------------------------------------------------
# Serialization.  The on-disk format is UTF-8 JSON with top-level keys
# flavor / age_ranges / findings / diseases; save_kb emits a canonical byte
# form so save -> load -> save is byte-identical.
# ---------------------------------------------------------------------------

def _kb_to_obj(kb: KnowledgeBase) -> dict[str, Any]:
    diseases = []
    for d in kb.diseases:
        entry: dict[str, Any] = {
            "id": d.id,
            "name": d.name,
            "findings": [
                {"finding_id": l.finding_id}
                if l.probability is None
                else {"finding_id": l.finding_id, "probability": l.probability}
                for l in d.findings
            ],
        }
        if d.context_prior is not None:
            entry["context_prior"] = {
                "sex_probability": d.context_prior.sex_probability,
                "age_range_probabilities": list(d.context_prior.age_range_probabilities),
            }
        diseases.append(entry)
    return {
        "flavor": kb.flavor.value,
        "age_ranges": [list(r) for r in kb.age_ranges],
        "findings": [{"id": f.id, "name": f.name, "kind": f.kind.value} for f in kb.findings],
        "diseases": diseases,
    }


def _obj_to_kb(obj: Any) -> KnowledgeBase:
    if not isinstance(obj, dict):
        raise KbFormatError("top level must be a JSON object")
    try:
        flavor = Flavor(obj["flavor"])
        age_ranges = tuple((int(lo), int(hi)) for lo, hi in obj["age_ranges"])
        findings = tuple(
            Finding(id=int(f["id"]), name=str(f["name"]), kind=FindingKind(f["kind"]))
            for f in obj["findings"]
        )
        diseases = []
        for d in obj["diseases"]:
            links = tuple(
                FindingLink(
                    finding_id=int(l["finding_id"]),
                    probability=float(l["probability"]) if "probability" in l else None,
                )
                for l in d["findings"]
            )
            cp = None
            if "context_prior" in d and d["context_prior"] is not None:
                raw = d["context_prior"]
                cp = ContextPrior(
                    sex_probability=float(raw["sex_probability"]),
                    age_range_probabilities=tuple(float(p) for p in raw["age_range_probabilities"]),
                )
            diseases.append(DiseaseEntry(id=int(d["id"]), name=str(d["name"]), findings=links, context_prior=cp))
    except (KeyError, TypeError, ValueError) as exc:
        raise KbFormatError(f"malformed knowledge base: {exc}") from exc
    return KnowledgeBase(flavor=flavor, findings=findings, diseases=tuple(diseases), age_ranges=age_ranges)


def kb_to_json(kb: KnowledgeBase) -> str:
    return json.dumps(_kb_to_obj(kb), indent=2, ensure_ascii=False) + "\n"


def save_kb(kb: KnowledgeBase, path: str | Path) -> None:
    Path(path).write_text(kb_to_json(kb), encoding="utf-8")


def load_kb(path: str | Path) -> KnowledgeBase:
    """Parse and validate a KB file; raises KbFormatError / KbValidationError."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise KbFormatError(f"cannot read knowledge base {path}: {exc}") from exc
    kb = _obj_to_kb(obj)
    report = validate(kb)
    if not report.ok:
        raise KbValidationError(report)
    return kb


def kb_hash(kb: KnowledgeBase) -> str:
    """Stable content hash of the canonical JSON form, used to pair
    checkpoints with the KB they were trained on."""
    return hashlib.sha256(kb_to_json(kb).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Toy generator: a deliberately separable fixture family used by tests and
# desk-scale experiments.
# ---------------------------------------------------------------------------

DEFAULT_AGE_RANGES: tuple[tuple[int, int], ...] = ((0, 12), (13, 29), (30, 49), (50, 69), (70, 120))


@dataclass(frozen=True)
class ToyKbSpec:
    """Parameters of the toy KB family.

    Every disease owns one unique signature finding (occurrence probability
    ``signature_prob``) and links every one of ``n_shared_findings`` shared
    noise findings with occurrence probability ``noise_prob``.  For the
    set-valued flavor the same topology is emitted without probabilities and
    every other shared finding becomes an examination so both finding kinds
    are exercised.
    """

    n_diseases: int
    n_shared_findings: int
    signature_prob: float = 1.0
    noise_prob: float = 0.3
    flavor: Flavor = Flavor.PROBABILISTIC


def gen_toy_kb(spec: ToyKbSpec, seed: int = 0) -> KnowledgeBase:
    """Build the toy KB for ``spec``.

    The construction is deterministic; ``seed`` is accepted for interface
    uniformity with the other generators and reserved for randomized
    variants.
    """
    if spec.n_diseases < 1:
        raise ValueError("n_diseases must be >= 1")
    if not (0.0 < spec.signature_prob <= 1.0):
        raise ValueError("signature_prob must lie in (0, 1]")
    if spec.n_shared_findings > 0 and not (0.0 < spec.noise_prob <= 1.0):
        raise ValueError("noise_prob must lie in (0, 1]")

    probabilistic = spec.flavor is Flavor.PROBABILISTIC
    findings = [
        Finding(id=d, name=f"signature_{d:02d}", kind=FindingKind.SYMPTOM)
        for d in range(spec.n_diseases)
    ]
    for j in range(spec.n_shared_findings):
        kind = FindingKind.SYMPTOM if (probabilistic or j % 2 == 0) else FindingKind.EXAMINATION
        findings.append(Finding(id=spec.n_diseases + j, name=f"shared_{j:02d}", kind=kind))

    diseases = []
    for d in range(spec.n_diseases):
        links = [FindingLink(d, spec.signature_prob if probabilistic else None)]
        links += [
            FindingLink(spec.n_diseases + j, spec.noise_prob if probabilistic else None)
            for j in range(spec.n_shared_findings)
        ]
        diseases.append(DiseaseEntry(id=d, name=f"disease_{d:02d}", findings=tuple(links)))

    return KnowledgeBase(
        flavor=spec.flavor,
        findings=tuple(findings),
        diseases=tuple(diseases),
        age_ranges=DEFAULT_AGE_RANGES,
    )
