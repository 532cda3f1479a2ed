"""Double-deep-Q agent that builds shaking protocols one segment at a time.

The Q-network is a single-hidden-layer ReLU perceptron written directly in
numpy with hand-coded backpropagation and Adam.  The environment propagates
the augmented state one segment per action and pays a terminal reward
computed from the final classical Fisher information.
"""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import estimation as est
from .dynamics import (
    STEPS_PER_SEGMENT,
    AugmentedState,
    ControlProtocol,
    EstimationPoint,
    IntegrationError,
    TruncationError,
    TruncationWarning,
    check_integrity,
    mean_position_phase,
    propagate_segments,
)
from .freespace import mzi_fisher_recoil
from .physcore import DEFAULT_SCALES, PhysicalScales, build_basis, ground_state

log = logging.getLogger(__name__)

ACTIONS = np.arange(16) * math.pi / 12.0
N_FEATURES = 12
PARITY_MOMENTA = (2, 4, 6, 8)
REWARD_KINDS = ("accel_dsp", "accel_spp", "lattice_dsp")


class TrainingAborted(RuntimeError):
    pass


# ---------------------------------------------------------------- features

def extract_features(state: AugmentedState, t: float, T_total: float) -> np.ndarray:
    """Parity populations, within-cell position phase, <p> t / T and t / T."""
    c = state.psi
    basis = state.basis
    feats = np.empty(N_FEATURES)
    feats[0] = abs(c[basis.index_of(0)]) ** 2
    for j, p in enumerate(PARITY_MOMENTA):
        n = p // 2
        if n <= basis.n_max:
            cp, cm = c[basis.index_of(n)], c[basis.index_of(-n)]
            feats[1 + 2 * j] = abs(cp + cm) ** 2 / 2.0
            feats[2 + 2 * j] = abs(cp - cm) ** 2 / 2.0
        else:
            feats[1 + 2 * j] = feats[2 + 2 * j] = 0.0
    feats[9] = mean_position_phase(state) / math.pi
    feats[10] = float(np.sum(np.abs(c) ** 2 * basis.momenta)) * t / T_total
    feats[11] = t / T_total
    return feats


# ---------------------------------------------------------------- network

class QNetwork:
    """Affine -> ReLU -> affine map from features to one Q-value per action."""

    def __init__(self, n_in: int = N_FEATURES, hidden: int = 64, n_out: int = len(ACTIONS),
                 rng: np.random.Generator | None = None):
        rng = np.random.default_rng() if rng is None else rng
        self.W1 = rng.normal(0.0, math.sqrt(2.0 / n_in), (n_in, hidden))
        self.b1 = np.zeros(hidden)
        self.W2 = rng.normal(0.0, math.sqrt(1.0 / hidden), (hidden, n_out))
        self.b2 = np.zeros(n_out)
        self._adam_m = [np.zeros_like(p) for p in self.params]
        self._adam_v = [np.zeros_like(p) for p in self.params]
        self._adam_t = 0

    @property
    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def set_params(self, params) -> None:
        self.W1, self.b1, self.W2, self.b2 = (np.array(p, dtype=float) for p in params)

    def copy(self) -> "QNetwork":
        new = QNetwork.__new__(QNetwork)
        new.set_params([p.copy() for p in self.params])
        new._adam_m = [m.copy() for m in self._adam_m]
        new._adam_v = [v.copy() for v in self._adam_v]
        new._adam_t = self._adam_t
        return new

    def forward(self, x: np.ndarray):
        z = x @ self.W1 + self.b1
        h = np.maximum(z, 0.0)
        return h @ self.W2 + self.b2, (x, z, h)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, dout: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss given dLoss/dQ (batch, n_out)."""
        x, z, h = cache
        gW2 = h.T @ dout
        gb2 = dout.sum(axis=0)
        dh = dout @ self.W2.T
        dz = dh * (z > 0.0)
        gW1 = x.T @ dz
        gb1 = dz.sum(axis=0)
        return [gW1, gb1, gW2, gb2]

    def adam_step(self, grads, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                  eps: float = 1e-8) -> None:
        self._adam_t += 1
        t = self._adam_t
        for p, g, m, v in zip(self.params, grads, self._adam_m, self._adam_v):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * g * g
            mhat = m / (1.0 - beta1**t)
            vhat = v / (1.0 - beta2**t)
            p -= lr * mhat / (np.sqrt(vhat) + eps)

    def soft_update_from(self, other: "QNetwork", tau: float) -> None:
        """self <- tau * other + (1 - tau) * self."""
        for p, q in zip(self.params, other.params):
            p *= 1.0 - tau
            p += tau * q

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])


def q_forward(net: QNetwork, s: np.ndarray) -> np.ndarray:
    q = net(np.asarray(s, dtype=float))
    if not np.all(np.isfinite(q)):
        raise TrainingAborted("non-finite Q-values")
    return q


# ---------------------------------------------------------------- policy

def select_action(qvals: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; greedy ties go to the lowest action index."""
    if rng.random() < epsilon:
        return int(rng.integers(len(qvals)))
    return int(np.argmax(qvals))


@dataclass(frozen=True)
class EpsilonSchedule:
    """exp(-decay * k) floored at ``floor``; k counts environment steps or episodes."""

    decay: float = 2.5e-5
    floor: float = 0.1
    unit: str = "step"
    steps_per_episode: int = 32

    def __post_init__(self):
        if self.unit not in ("step", "episode"):
            raise ValueError("unit must be 'step' or 'episode'")


def epsilon_at(episode: int, schedule: EpsilonSchedule = EpsilonSchedule()) -> float:
    if episode < 0:
        raise ValueError("episode must be >= 0")
    k = episode * schedule.steps_per_episode if schedule.unit == "step" else episode
    return max(schedule.floor, math.exp(-schedule.decay * k))


# ---------------------------------------------------------------- learning

@dataclass(frozen=True)
class Hyperparameters:
    gamma: float = 0.99
    tau: float = 0.8
    alpha: float = 1e-3
    episodes: int = 5000
    epsilon_decay: float = 2.5e-5
    epsilon_floor: float = 0.1
    epsilon_unit: str = "step"
    hidden: int = 64
    batch: int = 100
    optimizer: str = "adam"
    replay_capacity: int = 20000
    train_steps_per_episode: int = 1
    bellman: str = "double"
    seed: int = 0
    refine_sweeps: int = 0

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.tau <= 1.0):
            raise ValueError("gamma and tau must lie in (0, 1]")
        if min(self.alpha, self.episodes, self.hidden, self.batch, self.replay_capacity) <= 0:
            raise ValueError("hyperparameters must be positive")
        if self.train_steps_per_episode < 1 or self.refine_sweeps < 0:
            raise ValueError("train_steps_per_episode must be >= 1 and refine_sweeps >= 0")
        if self.bellman not in ("double", "vanilla"):
            raise ValueError("bellman must be 'double' or 'vanilla'")
        if self.optimizer.lower() != "adam":
            raise ValueError("only the Adam optimizer is implemented")


def bellman_target(reward, next_features, q_net: QNetwork, target_net: QNetwork, gamma: float,
                   terminal, mode: str = "double"):
    """r + gamma * Q_target(s', a*) for non-terminal transitions, r otherwise.

    ``mode='double'`` picks a* with the online network and evaluates it with the
    target network; ``'vanilla'`` takes the max of the target network.
    Works on single transitions or batches.
    """
    reward = np.asarray(reward, dtype=float)
    terminal = np.asarray(terminal, dtype=bool)
    s2 = np.atleast_2d(np.asarray(next_features, dtype=float))
    q_next = target_net(s2)
    if mode == "double":
        best = np.argmax(q_net(s2), axis=1)
        boot = q_next[np.arange(len(best)), best]
    else:
        boot = q_next.max(axis=1)
    boot = boot.reshape(reward.shape)
    return np.where(terminal, reward, reward + gamma * boot)


class ReplayBuffer:
    def __init__(self, capacity: int, n_features: int = N_FEATURES):
        self.capacity = capacity
        self.s = np.zeros((capacity, n_features))
        self.a = np.zeros(capacity, dtype=int)
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, n_features))
        self.done = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, r, s2, done) -> None:
        i = self.cursor
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator) -> dict:
        idx = rng.choice(self.size, size=batch, replace=False)
        return {"s": self.s[idx], "a": self.a[idx], "r": self.r[idx],
                "s2": self.s2[idx], "done": self.done[idx]}


def bellman_loss(q_net: QNetwork, batch: dict, targets: np.ndarray):
    """Mean squared Bellman residual and its gradient for the online network."""
    q, cache = q_net.forward(batch["s"])
    rows = np.arange(len(targets))
    resid = q[rows, batch["a"]] - targets
    loss = float(np.mean(resid**2))
    dout = np.zeros_like(q)
    dout[rows, batch["a"]] = 2.0 * resid / len(targets)
    return loss, q_net.backward(cache, dout)


def train_step(q_net: QNetwork, target_net: QNetwork, batch: dict, hyper: Hyperparameters) -> float:
    """One Adam step on the Bellman residual, then a soft target update."""
    targets = bellman_target(batch["r"], batch["s2"], q_net, target_net, hyper.gamma,
                             batch["done"], hyper.bellman)
    loss, grads = bellman_loss(q_net, batch, targets)
    if not math.isfinite(loss):
        raise TrainingAborted(f"non-finite Bellman loss (max |target| = {np.abs(targets).max():.3g})")
    q_net.adam_step(grads, hyper.alpha)
    target_net.soft_update_from(q_net, hyper.tau)
    if not np.all(np.isfinite(q_net.flat())):
        raise TrainingAborted("non-finite network weights after update")
    return loss


# ---------------------------------------------------------------- environment

@dataclass(frozen=True)
class EnvConfig:
    reward: str = "accel_dsp"
    n_segments: int = 32
    n_max: int = 10
    omega_s: float = 11.5
    steps_per_segment: int = STEPS_PER_SEGMENT
    a: float = 0.0
    V_L: float = 10.0
    r_max: float = est.R_MAX
    reject_momentum: float = 4.0
    reject_fraction: float = 0.02
    mzi_p0: float = 4.0
    best_norm_tol: float = 1e-8
    mass_amu: float | None = None
    wavelength: float | None = None

    def __post_init__(self):
        if self.reward not in REWARD_KINDS:
            raise ValueError(f"reward must be one of {REWARD_KINDS}")

    @property
    def scales(self) -> PhysicalScales:
        if self.mass_amu is None and self.wavelength is None:
            return DEFAULT_SCALES
        from .physcore import AMU, LATTICE_WAVELENGTH, RB87_MASS_AMU, recoil_units
        return recoil_units((self.mass_amu or RB87_MASS_AMU) * AMU, self.wavelength or LATTICE_WAVELENGTH)

    @property
    def total_time(self) -> float:
        return self.n_segments * math.pi / self.omega_s

    @property
    def I_mzi_ref(self) -> float:
        return mzi_fisher_recoil(self.mzi_p0, self.total_time, self.scales)


def rejected(state: AugmentedState, cfg: EnvConfig) -> bool:
    """True when more than ``reject_fraction`` of the population lies beyond +-reject_momentum."""
    prob = np.abs(state.psi) ** 2
    return prob[np.abs(state.basis.momenta) > cfg.reject_momentum + 1e-9].sum() > cfg.reject_fraction


def norm_converged(state: AugmentedState | None, cfg: EnvConfig) -> bool:
    """True when the final norm is within ``best_norm_tol`` of one.

    Only such protocols may become the best protocol: at larger drift the
    Fisher information, and so the reward, carries visible integration error.
    """
    return state is not None and abs(state.norm - 1.0) <= cfg.best_norm_tol


def selection_key(res: "EpisodeResult", cfg: EnvConfig) -> tuple:
    """Ordering used to pick the best protocol; larger is better.

    Accepted protocols that pass ``norm_converged`` rank first, by reward.
    Accepted protocols with larger drift come next, by smallest drift, so a
    search started there moves towards trustworthy protocols before it
    chases reward.  Rejected and discarded episodes rank last.
    """
    if res.state is None or rejected(res.state, cfg):
        return (0, 0.0)
    if norm_converged(res.state, cfg):
        return (2, res.reward)
    return (1, -abs(res.state.norm - 1.0))


def terminal_reward(state: AugmentedState, cfg: EnvConfig, info: np.ndarray | None = None) -> float:
    """Reward of a finished protocol, zeroed when too much population sits above the cutoff.

    The integration accuracy is only checked for protocols that are not
    rejected, since the reward of a rejected protocol does not depend on it.
    """
    if rejected(state, cfg):
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        check_integrity(state)
    if info is None:
        info = est.cfim(state)
    if cfg.reward == "accel_dsp":
        return est.reward_accel(info, cfg.I_mzi_ref, cfg.r_max)
    if cfg.reward == "accel_spp":
        return est.reward_accel_spp(info, cfg.I_mzi_ref, cfg.r_max)
    return est.reward_lattice(info)


class ShakingEnv:
    """One episode = ``n_segments`` actions, each shaking for half a carrier period."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.basis = build_basis(cfg.n_max)
        self.point = EstimationPoint(cfg.a, cfg.V_L)
        self.g_recoil = cfg.scales.g_recoil
        self._psi0 = ground_state(cfg.V_L, self.basis)
        self.reset()

    def reset(self) -> np.ndarray:
        self.state = AugmentedState.initial(self._psi0, self.basis)
        self.k = 0
        self.amplitudes: list[float] = []
        return extract_features(self.state, 0.0, self.cfg.total_time)

    def step(self, action: int):
        amp = float(ACTIONS[action])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            self.state = propagate_segments(self.state, self.point, [amp], self.cfg.omega_s, self.k,
                                            self.cfg.steps_per_segment, self.g_recoil, check=False)
        self.k += 1
        self.amplitudes.append(amp)
        done = self.k == self.cfg.n_segments
        reward = terminal_reward(self.state, self.cfg) if done else 0.0
        feats = extract_features(self.state, self.state.time, self.cfg.total_time)
        return feats, reward, done

    def protocol(self) -> ControlProtocol:
        return ControlProtocol(tuple(self.amplitudes), self.cfg.omega_s)


@dataclass
class QAgent:
    hyper: Hyperparameters
    q_net: QNetwork
    target_net: QNetwork
    buffer: ReplayBuffer
    schedule: EpsilonSchedule
    steps: int = 0

    @classmethod
    def create(cls, hyper: Hyperparameters, rng: np.random.Generator, steps_per_episode: int = 32):
        q = QNetwork(N_FEATURES, hyper.hidden, len(ACTIONS), rng)
        sched = EpsilonSchedule(hyper.epsilon_decay, hyper.epsilon_floor, hyper.epsilon_unit,
                                steps_per_episode)
        return cls(hyper, q, q.copy(), ReplayBuffer(hyper.replay_capacity), sched)


@dataclass
class EpisodeResult:
    protocol: ControlProtocol
    reward: float
    transitions: list
    discarded: bool = False
    state: AugmentedState | None = None


def run_episode(env: ShakingEnv, agent: QAgent | None, rng: np.random.Generator,
                epsilon: float = 0.0, actions=None) -> EpisodeResult:
    """Roll out one protocol; ``actions`` forces the action sequence and bypasses the agent."""
    s = env.reset()
    transitions = []
    reward = 0.0
    try:
        for k in range(env.cfg.n_segments):
            if actions is not None:
                act = int(actions[k])
            else:
                act = select_action(q_forward(agent.q_net, s), epsilon, rng)
            s2, r, done = env.step(act)
            transitions.append((s, act, r, s2, done))
            reward = r
            s = s2
    except (IntegrationError, TruncationError) as exc:
        log.warning("episode discarded: %s", exc)
        return EpisodeResult(env.protocol(), 0.0, [], discarded=True)
    return EpisodeResult(env.protocol(), reward, transitions, state=env.state)


@dataclass
class TrainingResult:
    best_protocol: ControlProtocol
    best_reward: float
    history: list
    manifest: dict = field(default_factory=dict)
    losses: list = field(default_factory=list)
    agent: QAgent | None = None
    dqn_protocol: ControlProtocol | None = None
    dqn_reward: float | None = None


def train(env_cfg: EnvConfig, hyper: Hyperparameters, progress=None) -> TrainingResult:
    """Epsilon-greedy episodes with replay; returns the best protocol seen."""
    from . import __version__, kernels

    start = time.time()
    rng = np.random.default_rng(hyper.seed)
    env = ShakingEnv(env_cfg)
    agent = QAgent.create(hyper, rng, env_cfg.n_segments)
    history, losses = [], []
    best, best_key = None, None
    for ep in range(hyper.episodes):
        eps = epsilon_at(ep, agent.schedule)
        try:
            res = run_episode(env, agent, rng, eps)
        except TrainingAborted as exc:
            raise TrainingAborted(f"episode {ep}: {exc}") from exc
        history.append(res.reward)
        for tr in res.transitions:
            agent.buffer.add(*tr)
        agent.steps += len(res.transitions)
        key = selection_key(res, env_cfg)
        if best is None or key > best_key:
            best, best_key = EpisodeResult(res.protocol, res.reward, []), key
        if len(agent.buffer) >= hyper.batch:
            for _ in range(hyper.train_steps_per_episode):
                batch = agent.buffer.sample(hyper.batch, rng)
                try:
                    losses.append(train_step(agent.q_net, agent.target_net, batch, hyper))
                except TrainingAborted as exc:
                    raise TrainingAborted(f"episode {ep}: {exc}") from exc
        if progress is not None:
            progress(ep, res.reward, best.reward)
    manifest = {
        "seed": hyper.seed,
        "hyperparameters": asdict(hyper),
        "environment": asdict(env_cfg),
        "version": __version__,
        "backend": kernels.BACKEND,
        "numpy": np.__version__,
        "wall_clock_s": time.time() - start,
    }
    result = TrainingResult(best.protocol, best.reward, history, manifest, losses, agent,
                            best.protocol, best.reward)
    if hyper.refine_sweeps > 0:
        actions = actions_of(best.protocol)
        actions, reward, trace = refine_actions(env, actions, hyper.refine_sweeps)
        result.best_protocol = ControlProtocol(tuple(ACTIONS[actions]), env_cfg.omega_s)
        result.best_reward = reward
        manifest["refine_trace"] = trace
        best_key = selection_key(run_episode(env, None, None, actions=actions), env_cfg)
    manifest["norm_converged"] = best_key[0] == 2
    manifest["wall_clock_s"] = time.time() - start
    return result


def actions_of(protocol: ControlProtocol) -> list[int]:
    """Action indices of a protocol whose amplitudes come from the action set."""
    idx = np.rint(np.asarray(protocol.segment_amplitudes) / ACTIONS[1]).astype(int)
    if np.any(idx < 0) or np.any(idx >= len(ACTIONS)) or not np.allclose(ACTIONS[idx], protocol.segment_amplitudes):
        raise ValueError("protocol amplitudes are not all in the action set")
    return idx.tolist()


def refine_actions(env: ShakingEnv, actions, sweeps: int = 4):
    """Greedy coordinate ascent on the terminal reward over the discrete action set.

    Each sweep visits the segments in order and keeps any single-segment
    change that improves ``selection_key``.  Deterministic; returns
    (actions, reward, reward after each sweep).
    """
    actions = [int(a) for a in actions]

    def score(acts):
        res = run_episode(env, None, None, actions=acts)
        return selection_key(res, env.cfg), res.reward

    best, reward = score(actions)
    trace = [reward]
    for _ in range(sweeps):
        improved = False
        for k in range(len(actions)):
            for a in range(len(ACTIONS)):
                if a == actions[k]:
                    continue
                trial = actions.copy()
                trial[k] = a
                key, r = score(trial)
                if key > best:
                    best, reward, actions, improved = key, r, trial, True
        trace.append(reward)
        if not improved:
            break
    return actions, reward, trace


def evaluate_protocol(protocol: ControlProtocol, cfg: EnvConfig) -> dict:
    """Propagate a frozen protocol at the training point and summarize its Fisher information."""
    env = ShakingEnv(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        state = propagate_segments(env.state, env.point, protocol.segment_amplitudes, protocol.omega_s,
                                   0, cfg.steps_per_segment, env.g_recoil, check=False)
    fm = est.fisher_matrices(state)
    rep = est.sensitivity_report(fm.cfim, cfg.I_mzi_ref)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", est.OmittedParameterWarning)
        marg_V = est.marginal_information(fm.cfim, 1)
    return {
        "state": state,
        "fisher": fm,
        "report": rep,
        "marginal_info_V": marg_V,
        "reward": terminal_reward(state, cfg, fm.cfim),
    }


# ---------------------------------------------------------------- checkpoints

def checkpoint_dict(net: QNetwork) -> dict:
    """Flat weights as exact decimal strings with the array shapes as header."""
    return {
        "shapes": [list(p.shape) for p in net.params],
        "weights": [repr(float(x)) for x in net.flat()],
    }


def network_from_checkpoint(doc: dict) -> QNetwork:
    shapes = [tuple(s) for s in doc["shapes"]]
    flat = np.array([float(x) for x in doc["weights"]])
    sizes = [int(np.prod(s)) for s in shapes]
    if flat.size != sum(sizes):
        raise ValueError(f"checkpoint has {flat.size} weights, shapes need {sum(sizes)}")
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    net = QNetwork(shapes[0][0], shapes[0][1], shapes[2][1], np.random.default_rng(0))
    net.set_params([p.reshape(s) for p, s in zip(parts, shapes)])
    net._adam_m = [np.zeros_like(p) for p in net.params]
    net._adam_v = [np.zeros_like(p) for p in net.params]
    return net
