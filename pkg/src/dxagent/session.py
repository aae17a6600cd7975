"""Live consultation sessions: a human answers the model's inquiries.

One engine drives both the terminal `consult` command and the HTTP service,
so the two cannot drift.  Inference is greedy on a frozen checkpoint: the
policy picks the next unasked finding, the classifier re-predicts after each
answer, and the session ends when the disease-distribution entropy falls
below the predicted disease's threshold or the step limit is reached.

Unlike simulated patients a human may refuse to answer; "can't say" leaves
the state untouched but masks the finding so it is never asked again, and it
still consumes a turn.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .checkpoint import CheckpointBundle
from .classifier import predict
from .errors import DimensionError
from .kb import KnowledgeBase, kb_hash
from .policy import action_distribution, greedy_action
from .thresholds import ThresholdMode, should_stop


class SessionStatus(Enum):
    AWAITING_SELF_REPORT = "awaiting_self_report"
    AWAITING_ANSWER = "awaiting_answer"
    DIAGNOSED = "diagnosed"


class Answer(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    CANT_SAY = "cant_say"


@dataclass
class HistoryRow:
    turn: int
    finding_id: int
    answer: Answer
    entropy_after: float


@dataclass
class Session:
    session_id: str
    state: np.ndarray
    asked: set[int]
    self_reports: tuple[int, ...]
    turn: int
    status: SessionStatus
    pending_inquiry: int | None
    diagnosis: int | None
    entropy: float
    initial_entropy: float
    probs: np.ndarray
    history: list[HistoryRow] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)


class ConsultEngine:
    """Greedy inference over one checkpoint/KB pair; sessions are plain
    values so callers own storage and locking."""

    def __init__(self, bundle: CheckpointBundle, kb: KnowledgeBase):
        if bundle.policy.input_dim != kb.state_dim:
            raise DimensionError(
                f"checkpoint expects state dim {bundle.policy.input_dim}, KB provides {kb.state_dim}"
            )
        self.bundle = bundle
        self.kb = kb
        self.max_turns = bundle.train_config.max_steps
        self.kb_hash = kb_hash(kb)

    def _mask(self, session: Session) -> np.ndarray:
        n = self.kb.n_findings
        mask = session.state[:n] == 0.0
        for fid in session.asked:
            mask[fid] = False
        return mask

    def _choose_inquiry(self, session: Session) -> int | None:
        mask = self._mask(session)
        if not mask.any():
            return None
        dist = action_distribution(self.bundle.policy, session.state, mask)
        return greedy_action(dist)

    def start_session(self, self_reports: list[int], context_bits: np.ndarray | None = None) -> Session:
        n = self.kb.n_findings
        if not self_reports:
            raise ValueError("at least one self-reported finding is required")
        for fid in self_reports:
            if not (0 <= fid < n):
                raise ValueError(f"unknown finding id {fid}")
        if self.kb.has_context:
            if context_bits is None or len(context_bits) != self.kb.context_dim:
                raise ValueError(f"this KB requires {self.kb.context_dim} context bits")
        elif context_bits is not None:
            raise ValueError("this KB carries no demographic context")

        state = np.zeros(self.kb.state_dim)
        for fid in self_reports:
            state[fid] = 1.0
        if context_bits is not None:
            state[n:] = np.asarray(context_bits, dtype=float)
        pred = predict(self.bundle.classifier, state)
        session = Session(
            session_id=uuid.uuid4().hex,
            state=state,
            asked=set(),
            self_reports=tuple(sorted(set(self_reports))),
            turn=0,
            status=SessionStatus.AWAITING_ANSWER,
            pending_inquiry=None,
            diagnosis=None,
            entropy=pred.entropy,
            initial_entropy=pred.entropy,
            probs=pred.probs,
        )
        session.pending_inquiry = self._choose_inquiry(session)
        if session.pending_inquiry is None:
            session.status = SessionStatus.DIAGNOSED
            session.diagnosis = pred.top_disease
        return session

    def submit_answer(self, session: Session, answer: Answer) -> Session:
        if session.status is not SessionStatus.AWAITING_ANSWER or session.pending_inquiry is None:
            raise ValueError("session is not awaiting an answer")
        fid = session.pending_inquiry
        session.asked.add(fid)
        if answer is Answer.POSITIVE:
            session.state[fid] = 1.0
        elif answer is Answer.NEGATIVE:
            session.state[fid] = -1.0
        session.turn += 1
        pred = predict(self.bundle.classifier, session.state)
        session.entropy = pred.entropy
        session.probs = pred.probs
        session.history.append(HistoryRow(turn=session.turn, finding_id=fid, answer=answer,
                                          entropy_after=pred.entropy))
        session.updated_at = time.time()

        stopped = should_stop(pred.entropy, pred.top_disease, self.bundle.thresholds)
        if stopped or session.turn >= self.max_turns:
            session.status = SessionStatus.DIAGNOSED
            session.diagnosis = pred.top_disease
            session.pending_inquiry = None
            return session
        nxt = self._choose_inquiry(session)
        if nxt is None:
            # Every finding exhausted before the step limit: forced diagnosis.
            session.status = SessionStatus.DIAGNOSED
            session.diagnosis = pred.top_disease
            session.pending_inquiry = None
        else:
            session.pending_inquiry = nxt
        return session

    def threshold_of(self, disease_id: int) -> float:
        table = self.bundle.thresholds
        if table.mode is ThresholdMode.FIXED:
            return float(table.fixed_value)
        return float(table.values[disease_id])
