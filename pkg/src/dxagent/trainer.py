"""Episode rollouts and the training loop.

One episode: build the initial state from the patient's self-reports, then
inquire up to T findings.  Each turn samples a masked policy action, applies
the patient's answer to the state, re-predicts the disease distribution, and
pays the per-query reward plus the normalized entropy drop.  The episode ends
when the distribution entropy falls below the predicted disease's threshold
(a diagnosis) or at turn T (a forced timeout diagnosis).  The diagnosis
reward is folded into the last transition before discounted returns are
computed.

Training collects a window of episodes on frozen parameter snapshots, then
applies one policy ascent step, one classifier descent step, and the
per-disease threshold updates, and appends one row of training curves.

Rollouts exist in two forms that produce identical episodes: a scalar
reference (`run_episode`) and a lockstep-vectorized batch used by the
training and evaluation loops.  Determinism comes from per-episode RNG
streams derived from (master seed, stream id, episode index), so results do
not depend on scheduling or batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .checkpoint import CheckpointBundle
from .classifier import ClassifierSample, fit_batch, predict, predict_batch
from .config import TrainConfig
from .errors import ExhaustionError
from .kb import Flavor, KnowledgeBase, kb_hash
from .net import AdamState, MlpModel, forward
from .patients import (
    Feedback,
    Patient,
    initial_state,
    make_sampler,
    respond,
)
from .policy import (
    TransitionSample,
    greedy_action,
    masked_entropy,
    masked_softmax,
    reinforce_update,
    sample_action,
    action_distribution,
)
from .rewards import Outcome, combine, entropy_reward, step_reward_rp, terminal_reward_rp
from .thresholds import (
    ThresholdMode,
    ThresholdTable,
    ThresholdUpdateEvent,
    batch_update,
    should_stop,
    update_threshold,
)

# Stream ids for deriving independent per-purpose RNG streams from one seed.
STREAM_POLICY_INIT = 0
STREAM_CLASSIFIER_INIT = 1
STREAM_TRAIN_EPISODE = 2
STREAM_EVAL_EPISODE = 3


def episode_rng(master_seed: int, stream: int, episode_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, stream, episode_index]))


class Termination(Enum):
    ENTROPY_STOP = "entropy_stop"
    TIMEOUT = "timeout"


@dataclass
class EpisodeRecord:
    true_disease: int
    transitions: list[TransitionSample]
    visited_states: list[np.ndarray]  # s_0 .. s_fin
    final_state: np.ndarray
    initial_entropy: float
    final_entropy: float
    diagnosis: int
    termination: Termination
    turns: int
    positives_found: int
    policy_entropies: list[float]

    @property
    def correct(self) -> bool:
        return self.diagnosis == self.true_disease

    @property
    def episode_return(self) -> float:
        return self.transitions[0].return_ if self.transitions else 0.0


def _discounted_returns(rewards: list[float], gamma: float) -> list[float]:
    out = [0.0] * len(rewards)
    acc = 0.0
    for i in reversed(range(len(rewards))):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


def run_episode(
    kb: KnowledgeBase,
    patient: Patient,
    policy: MlpModel,
    classifier: MlpModel,
    table: ThresholdTable,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
) -> EpisodeRecord:
    """Scalar reference rollout of one episode.

    Consumes exactly one uniform draw per turn in sampled mode and none in
    greedy mode, so batched rollouts with the same per-episode stream
    reproduce it.
    """
    n = kb.n_findings
    state = initial_state(patient, kb)
    pred0 = predict(classifier, state)
    h0 = pred0.entropy
    h_prev = h0

    if cfg.stop_check_before_first_inquiry and should_stop(h0, pred0.top_disease, table):
        # Experimental path (off by default): diagnose on the self-reports alone.
        return EpisodeRecord(
            true_disease=patient.true_disease,
            transitions=[],
            visited_states=[state.copy()],
            final_state=state.copy(),
            initial_entropy=h0,
            final_entropy=h0,
            diagnosis=pred0.top_disease,
            termination=Termination.ENTROPY_STOP,
            turns=0,
            positives_found=0,
            policy_entropies=[],
        )

    visited = [state.copy()]
    rewards: list[float] = []
    steps: list[tuple[np.ndarray, int, np.ndarray]] = []
    policy_entropies: list[float] = []
    positives_found = 0
    termination = Termination.TIMEOUT
    diagnosis = pred0.top_disease
    final_entropy = h0

    for t in range(1, cfg.max_steps + 1):
        mask = state[:n] == 0.0
        if not mask.any():
            raise ExhaustionError(f"no finding left to inquire at turn {t}")
        dist = action_distribution(policy, state, mask)
        policy_entropies.append(masked_entropy(dist.probs))
        if greedy:
            action = greedy_action(dist)
        else:
            assert rng is not None, "sampled rollouts need an RNG"
            action = sample_action(dist, rng)
        feedback = respond(patient, action)
        steps.append((state.copy(), action, mask.copy()))
        state = state.copy()
        state[action] = 1.0 if feedback is Feedback.POSITIVE else -1.0
        visited.append(state.copy())
        if feedback is Feedback.POSITIVE:
            positives_found += 1

        pred = predict(classifier, state)
        rp = step_reward_rp(feedback, cfg.reward)
        rh = entropy_reward(h_prev, pred.entropy, h0)
        stopped = should_stop(pred.entropy, pred.top_disease, table)
        if stopped or t == cfg.max_steps:
            diagnosis = pred.top_disease
            final_entropy = pred.entropy
            if stopped:
                termination = Termination.ENTROPY_STOP
                outcome = Outcome.CORRECT if diagnosis == patient.true_disease else Outcome.INCORRECT
            else:
                outcome = Outcome.TIMEOUT
            rp += terminal_reward_rp(outcome, cfg.reward)
            rewards.append(combine(rp, rh, cfg.reward))
            h_prev = pred.entropy
            break
        rewards.append(combine(rp, rh, cfg.reward))
        h_prev = pred.entropy

    returns = _discounted_returns(rewards, cfg.gamma)
    transitions = [
        TransitionSample(state_before=s, action=a, reward=r, return_=g, mask_before=m)
        for (s, a, m), r, g in zip(steps, rewards, returns)
    ]
    return EpisodeRecord(
        true_disease=patient.true_disease,
        transitions=transitions,
        visited_states=visited,
        final_state=visited[-1],
        initial_entropy=h0,
        final_entropy=final_entropy,
        diagnosis=diagnosis,
        termination=termination,
        turns=len(transitions),
        positives_found=positives_found,
        policy_entropies=policy_entropies,
    )


def run_episodes_batch(
    kb: KnowledgeBase,
    patients: Sequence[Patient],
    policy: MlpModel,
    classifier: MlpModel,
    table: ThresholdTable,
    cfg: TrainConfig,
    rngs: Sequence[np.random.Generator] | None = None,
    greedy: bool = False,
    collect_transitions: bool = True,
) -> list[EpisodeRecord]:
    """Lockstep-vectorized rollout of many episodes on frozen snapshots.

    Episode i consumes only rngs[i], one draw per turn, in the same order as
    the scalar path, so the result matches per-episode scalar rollouts.
    """
    n = kb.n_findings
    b = len(patients)
    if not greedy and (rngs is None or len(rngs) != b):
        raise ValueError("sampled rollouts need one RNG per episode")

    states = np.stack([initial_state(p, kb) for p in patients])
    positives = np.zeros((b, n), dtype=bool)
    for i, p in enumerate(patients):
        positives[i, list(p.positives)] = True
    _, h0s, tops0 = predict_batch(classifier, states)
    h_prev = h0s.copy()

    active = np.ones(b, dtype=bool)
    pre_stopped: set[int] = set()
    if cfg.stop_check_before_first_inquiry:
        thr = (
            np.full(b, table.fixed_value)
            if table.mode is ThresholdMode.FIXED
            else table.values[tops0]
        )
        hit = h0s < thr
        pre_stopped = {int(i) for i in np.flatnonzero(hit)}
        active[hit] = False

    visited: list[list[np.ndarray]] = [[states[i].copy()] for i in range(b)]
    step_records: list[list[tuple[np.ndarray, int, np.ndarray]]] = [[] for _ in range(b)]
    rewards: list[list[float]] = [[] for _ in range(b)]
    policy_entropies: list[list[float]] = [[] for _ in range(b)]
    positives_found = np.zeros(b, dtype=int)
    diagnosis = tops0.astype(int).copy()
    final_entropy = h0s.copy()
    termination = [Termination.TIMEOUT] * b

    for t in range(1, cfg.max_steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        sub_states = states[idx]
        masks = sub_states[:, :n] == 0.0
        if not masks.any(axis=1).all():
            raise ExhaustionError(f"no finding left to inquire at turn {t}")
        logits, _ = forward(policy, sub_states)
        probs = masked_softmax(logits, masks)
        ents = masked_entropy(probs)

        if greedy:
            actions = np.argmax(probs, axis=1)
        else:
            cdfs = np.cumsum(probs, axis=1)
            actions = np.empty(idx.size, dtype=int)
            last = n - 1
            for k, i in enumerate(idx):
                u = rngs[i].random() * cdfs[k, last]
                actions[k] = min(int(np.searchsorted(cdfs[k], u, side="right")), last)

        feedback = positives[idx, actions]
        new_states = sub_states.copy()
        new_states[np.arange(idx.size), actions] = np.where(feedback, 1.0, -1.0)
        if collect_transitions:
            # sub_states/new_states/masks are fresh per turn and never mutated
            # afterwards, so row views are safe to keep.
            for k, i in enumerate(idx):
                step_records[i].append((sub_states[k], int(actions[k]), masks[k]))
                visited[i].append(new_states[k])
        states[idx] = new_states
        positives_found[idx] += feedback

        _, ents_after, tops = predict_batch(classifier, new_states)
        thr = (
            np.full(idx.size, table.fixed_value)
            if table.mode is ThresholdMode.FIXED
            else table.values[tops]
        )
        stops = ents_after < thr
        last_turn = t == cfg.max_steps

        rp = np.where(
            feedback,
            cfg.reward.query_cost + cfg.reward.positive_discovery_bonus,
            cfg.reward.query_cost + cfg.reward.negative_discovery_bonus,
        )
        safe_h0 = np.where(h0s[idx] > 0.0, h0s[idx], 1.0)
        rh = np.where(h0s[idx] > 0.0, np.maximum((h_prev[idx] - ents_after) / safe_h0, 0.0), 0.0)

        ending = stops | last_turn
        if ending.any():
            true_ids = np.array([patients[i].true_disease for i in idx])
            outcome_reward = np.where(
                stops,
                np.where(tops == true_ids, cfg.reward.correct_diagnosis, cfg.reward.incorrect_or_timeout),
                cfg.reward.incorrect_or_timeout,
            )
            rp = rp + np.where(ending, outcome_reward, 0.0)

        r = cfg.reward.mu * rp + cfg.reward.nu * rh
        for k, i in enumerate(idx):
            rewards[i].append(float(r[k]))
            policy_entropies[i].append(float(ents[k]))

        h_prev[idx] = ents_after
        done = np.flatnonzero(ending)
        for k in done:
            i = int(idx[k])
            diagnosis[i] = int(tops[k])
            final_entropy[i] = float(ents_after[k])
            termination[i] = Termination.ENTROPY_STOP if stops[k] else Termination.TIMEOUT
            active[i] = False

    records = []
    for i in range(b):
        rets = _discounted_returns(rewards[i], cfg.gamma)
        transitions = [
            TransitionSample(state_before=s, action=a, reward=rw, return_=g, mask_before=m)
            for (s, a, m), rw, g in zip(step_records[i], rewards[i], rets)
        ]
        if i in pre_stopped:
            term, diag, fin_h = Termination.ENTROPY_STOP, int(tops0[i]), float(h0s[i])
        else:
            term, diag, fin_h = termination[i], int(diagnosis[i]), float(final_entropy[i])
        records.append(
            EpisodeRecord(
                true_disease=patients[i].true_disease,
                transitions=transitions,
                visited_states=visited[i],
                final_state=visited[i][-1] if collect_transitions else states[i].copy(),
                initial_entropy=float(h0s[i]),
                final_entropy=fin_h,
                diagnosis=diag,
                termination=term,
                turns=len(rewards[i]),
                positives_found=int(positives_found[i]),
                policy_entropies=policy_entropies[i],
            )
        )
    return records


def beta_schedule(window_index: int, cfg: TrainConfig, total_windows: int) -> float:
    """Linear anneal of the entropy-regularization weight across windows."""
    decay = cfg.beta_decay_windows if cfg.beta_decay_windows is not None else total_windows
    if decay <= 0 or window_index >= decay:
        return cfg.beta_final
    frac = window_index / decay
    return cfg.beta_init + (cfg.beta_final - cfg.beta_init) * frac


CURVE_COLUMNS = [
    "window",
    "episodes",
    "beta",
    "mean_return",
    "accuracy",
    "mean_turns",
    "mean_policy_entropy",
    "classifier_loss",
    "threshold_mean",
    "threshold_std",
]


@dataclass
class TrainResult:
    policy: MlpModel
    classifier: MlpModel
    policy_adam: AdamState
    classifier_adam: AdamState
    thresholds: ThresholdTable
    curves: list[dict]
    threshold_events: list[tuple[int, ThresholdUpdateEvent]]
    config: TrainConfig
    kb_hash: str

    def to_checkpoint(self) -> CheckpointBundle:
        return CheckpointBundle(
            kb_hash=self.kb_hash,
            policy=self.policy,
            classifier=self.classifier,
            policy_adam=self.policy_adam,
            classifier_adam=self.classifier_adam,
            thresholds=self.thresholds,
            train_config=self.config,
        )


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def curves_to_csv(rows: list[dict]) -> str:
    lines = [",".join(CURVE_COLUMNS)]
    for row in rows:
        cells = []
        for col in CURVE_COLUMNS:
            v = row[col]
            cells.append(str(v) if isinstance(v, int) else format_float(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def train(
    kb: KnowledgeBase,
    cfg: TrainConfig,
    progress: Callable[[int, int, dict], None] | None = None,
) -> TrainResult:
    """Run the full training loop; a pure function of (kb, cfg)."""
    n, m = kb.n_findings, kb.n_diseases
    if kb.flavor is Flavor.PROBABILISTIC and cfg.max_steps > n - 1:
        # One finding is always self-reported, so T > N-1 is guaranteed to
        # exhaust the inquirable findings whenever the entropy stop never
        # fires; refuse up front instead of erroring windows into the run.
        raise ValueError(
            f"max_steps {cfg.max_steps} can exhaust the {n} findings of this KB "
            f"(one is self-reported); use max_steps <= {n - 1}"
        )
    state_dim = kb.state_dim
    policy = MlpModel.init(
        [state_dim, *cfg.policy_hidden, n],
        np.random.default_rng(np.random.SeedSequence([cfg.master_seed, STREAM_POLICY_INIT])),
    )
    classifier = MlpModel.init(
        [state_dim, *cfg.classifier_hidden, m],
        np.random.default_rng(np.random.SeedSequence([cfg.master_seed, STREAM_CLASSIFIER_INIT])),
    )
    policy_adam = AdamState.init(policy)
    classifier_adam = AdamState.init(classifier)
    mode = ThresholdMode(cfg.threshold_mode)
    table = ThresholdTable.from_init(
        cfg.threshold_init, m,
        lambda_=cfg.threshold_lambda, epsilon=cfg.threshold_epsilon,
        mode=mode, fixed_value=cfg.fixed_threshold,
    )

    sampler = make_sampler(kb, cfg.setvalued_sim_config())
    total_windows = math.ceil(cfg.total_episodes / cfg.update_interval_episodes)
    curves: list[dict] = []
    events: list[tuple[int, ThresholdUpdateEvent]] = []
    baseline = 0.0
    baseline_primed = False
    episode_index = 0

    for window in range(total_windows):
        beta = beta_schedule(window, cfg, total_windows)
        n_episodes = min(cfg.update_interval_episodes, cfg.total_episodes - episode_index)
        rngs = [episode_rng(cfg.master_seed, STREAM_TRAIN_EPISODE, episode_index + i) for i in range(n_episodes)]
        patients = [sampler(rng) for rng in rngs]
        episodes = run_episodes_batch(kb, patients, policy, classifier, table, cfg, rngs=rngs)
        episode_index += n_episodes

        transitions = [t for ep in episodes for t in ep.transitions]
        if cfg.use_return_baseline and transitions:
            window_mean = float(np.mean([t.return_ for t in transitions]))
            baseline = window_mean if not baseline_primed else (
                cfg.baseline_decay * baseline + (1.0 - cfg.baseline_decay) * window_mean
            )
            baseline_primed = True
            transitions = [
                TransitionSample(t.state_before, t.action, t.reward, t.return_ - baseline, t.mask_before)
                for t in transitions
            ]

        diagnostics = {"mean_return": 0.0, "policy_entropy": 0.0}
        if transitions:
            diagnostics = reinforce_update(policy, policy_adam, transitions, cfg.policy_lr, beta)

        samples = [
            ClassifierSample(state=s, label=ep.true_disease)
            for ep in episodes
            for s in ep.visited_states
        ]
        classifier_loss = fit_batch(classifier, classifier_adam, samples, cfg.classifier_lr)

        if mode is ThresholdMode.ADAPTIVE:
            correct = [ep for ep in episodes if ep.correct]
            if cfg.threshold_update_per_episode:
                for ep in correct:
                    before = float(table.values[ep.diagnosis])
                    applied = update_threshold(table, ep.diagnosis, ep.final_entropy)
                    events.append((window, ThresholdUpdateEvent(
                        disease=ep.diagnosis,
                        value_before=before,
                        value_after=float(table.values[ep.diagnosis]),
                        group_mean_entropy=ep.final_entropy,
                        group_size=1,
                        group_all_entropy_terminated=ep.termination is Termination.ENTROPY_STOP,
                        applied=applied,
                    )))
            else:
                evs = batch_update(
                    table,
                    [(ep.diagnosis, ep.final_entropy) for ep in correct],
                    [ep.termination is Termination.ENTROPY_STOP for ep in correct],
                )
                events.extend((window, ev) for ev in evs)

        row = {
            "window": window,
            "episodes": n_episodes,
            "beta": beta,
            "mean_return": float(np.mean([ep.episode_return for ep in episodes])),
            "accuracy": float(np.mean([ep.correct for ep in episodes])),
            "mean_turns": float(np.mean([ep.turns for ep in episodes])),
            "mean_policy_entropy": diagnostics["policy_entropy"],
            "classifier_loss": classifier_loss,
            "threshold_mean": float(np.mean(table.values)),
            "threshold_std": float(np.std(table.values)),
        }
        curves.append(row)
        if progress is not None:
            progress(window, total_windows, row)

    return TrainResult(
        policy=policy,
        classifier=classifier,
        policy_adam=policy_adam,
        classifier_adam=classifier_adam,
        thresholds=table,
        curves=curves,
        threshold_events=events,
        config=cfg,
        kb_hash=kb_hash(kb),
    )
