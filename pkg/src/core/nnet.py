"""
Minimal recurrent network engine on numpy.

LSTM cell with separate per-gate weight matrices acting on the concatenated
input x' = [x, h_prev], bidirectional encoding, dense softmax/linear outputs,
losses, backpropagation through time, Nadam and dropout masks that stay fixed
for a whole recurrent pass.

Arrays carry a leading batch axis (B, dim) wherever a batch is involved;
single vectors work through broadcasting for the forward functions.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import expit, softmax

LOG_FLOOR = 1e-12
GATES = ("i", "o", "f", "S")


@dataclass
class LstmParams:
    """Per-gate weights W_g of shape (n_u, n_in + n_u) and biases b_g of shape (n_u,)."""
    W_i: np.ndarray
    W_o: np.ndarray
    W_f: np.ndarray
    W_S: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_f: np.ndarray
    b_S: np.ndarray

    def __post_init__(self):
        n_u, width = self.W_i.shape
        for g in GATES:
            if getattr(self, f"W_{g}").shape != (n_u, width):
                raise ValueError(f"W_{g} has shape {getattr(self, f'W_{g}').shape}, expected {(n_u, width)}")
            if getattr(self, f"b_{g}").shape != (n_u,):
                raise ValueError(f"b_{g} has shape {getattr(self, f'b_{g}').shape}, expected {(n_u,)}")
        if width <= n_u:
            raise ValueError("LSTM weight width must exceed the hidden size")

    @property
    def n_u(self) -> int:
        return self.W_i.shape[0]

    @property
    def n_in(self) -> int:
        return self.W_i.shape[1] - self.W_i.shape[0]

    def W(self, gate: str) -> np.ndarray:
        return getattr(self, f"W_{gate}")

    def b(self, gate: str) -> np.ndarray:
        return getattr(self, f"b_{gate}")

    @classmethod
    def zeros(cls, n_in: int, n_u: int) -> 'LstmParams':
        w = {f"W_{g}": np.zeros((n_u, n_in + n_u)) for g in GATES}
        b = {f"b_{g}": np.zeros(n_u) for g in GATES}
        return cls(**w, **b)

    @classmethod
    def initialise(cls, n_in: int, n_u: int, rng: np.random.Generator) -> 'LstmParams':
        """Glorot-uniform weights, zero biases except a unit forget-gate bias."""
        w = {f"W_{g}": glorot_uniform_init((n_u, n_in + n_u), rng) for g in GATES}
        b = {f"b_{g}": np.zeros(n_u) for g in GATES}
        b["b_f"] = np.ones(n_u)
        return cls(**w, **b)

    def tensors(self, prefix: str = "") -> Dict[str, np.ndarray]:
        """Named views of the parameter arrays (no copies)."""
        out = {}
        for g in GATES:
            out[f"{prefix}W_{g}"] = self.W(g)
        for g in GATES:
            out[f"{prefix}b_{g}"] = self.b(g)
        return out

    @classmethod
    def from_tensors(cls, tensors: Mapping[str, np.ndarray], prefix: str = "") -> 'LstmParams':
        kwargs = {}
        for g in GATES:
            kwargs[f"W_{g}"] = tensors[f"{prefix}W_{g}"]
            kwargs[f"b_{g}"] = tensors[f"{prefix}b_{g}"]
        return cls(**kwargs)


@dataclass
class LstmState:
    """Hidden output h and memory cell C."""
    h: np.ndarray
    C: np.ndarray

    @classmethod
    def zeros(cls, n_u: int, batch: Optional[int] = None) -> 'LstmState':
        shape = (n_u,) if batch is None else (batch, n_u)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass
class DropoutSpec:
    """
    Dropout rate, the dimensions of each dropout site, and (once sampled)
    one inverted-dropout mask per site.

    Sites missing from `masks` are treated as all-ones.
    """
    p_drop: float = 0.0
    sites: Dict[str, int] = field(default_factory=dict)
    masks: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.p_drop < 1.0:
            raise ValueError(f"p_drop must lie in [0, 1), got {self.p_drop}")

    def mask(self, site: str) -> Optional[np.ndarray]:
        return self.masks.get(site)


class StepCache(NamedTuple):
    """Activations of one LSTM step kept for the backward pass."""
    xp: np.ndarray
    mask: Optional[np.ndarray]
    i: np.ndarray
    o: np.ndarray
    f: np.ndarray
    S: np.ndarray
    C_prev: np.ndarray
    C: np.ndarray
    tanhC: np.ndarray


@dataclass
class OptimizerState:
    """Nadam step counter, moment accumulators and hyperparameters."""
    learning_rate: float = 0.002
    beta_1: float = 0.9
    beta_2: float = 0.999
    schedule_decay: float = 0.004
    epsilon: float = 1e-7
    l2: float = 0.0
    t: int = 0
    m_schedule: float = 1.0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def glorot_uniform_init(shape: Tuple[int, int], rng: np.random.Generator,
                        fan_in: Optional[int] = None, fan_out: Optional[int] = None) -> np.ndarray:
    """
    Glorot-uniform matrix on [-L, L] with L = sqrt(6 / (fan_in + fan_out)).

    For an (out, in) weight matrix the defaults are fan_in = in and fan_out = out.
    """
    if len(shape) != 2 or min(shape) < 1:
        raise ValueError(f"Glorot init needs a positive 2-D shape, got {shape}")
    fan_in = shape[1] if fan_in is None else fan_in
    fan_out = shape[0] if fan_out is None else fan_out
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def sample_dropout_masks(spec: DropoutSpec, rng: np.random.Generator,
                         batch: Optional[int] = None) -> DropoutSpec:
    """
    Draw one mask per site: Bernoulli(1 - p_drop) scaled by 1 / (1 - p_drop).

    Args:
        spec: Rate and site dimensions.
        rng: Source of randomness; sites are drawn in insertion order.
        batch: When given, masks get a leading batch axis so each row of a
            batch (one MC sample or one training example) has its own mask.

    Returns:
        New DropoutSpec carrying the masks.
    """
    p = float(spec.p_drop)
    if p >= 1.0 or p < 0.0:
        raise ValueError(f"p_drop must lie in [0, 1), got {p}")
    masks = {}
    for site, dim in spec.sites.items():
        shape = (dim,) if batch is None else (batch, dim)
        if p == 0.0:
            masks[site] = np.ones(shape)
        else:
            masks[site] = (rng.random(shape) >= p) / (1.0 - p)
    return DropoutSpec(p, dict(spec.sites), masks)


def _forward_step(x: np.ndarray, prev: LstmState, params: LstmParams,
                  mask: Optional[np.ndarray]) -> Tuple[LstmState, StepCache]:
    if x.shape[-1] != params.n_in:
        raise ValueError(f"Input has {x.shape[-1]} features, LSTM expects {params.n_in}")
    if prev.h.shape[-1] != params.n_u or prev.C.shape[-1] != params.n_u:
        raise ValueError(f"State size does not match n_u={params.n_u}")
    h_prev = np.broadcast_to(prev.h, x.shape[:-1] + (params.n_u,))
    xp = np.concatenate([x, h_prev], axis=-1)
    if mask is not None:
        xp = xp * mask
    i = expit(xp @ params.W_i.T + params.b_i)
    o = expit(xp @ params.W_o.T + params.b_o)
    f = expit(xp @ params.W_f.T + params.b_f)
    S = np.tanh(xp @ params.W_S.T + params.b_S)
    C = i * S + f * prev.C
    tanhC = np.tanh(C)
    h = o * tanhC
    return LstmState(h, C), StepCache(xp, mask, i, o, f, S, prev.C, C, tanhC)


def lstm_step(x, prev: LstmState, params: LstmParams,
              masks: Optional[np.ndarray] = None) -> LstmState:
    """
    One LSTM step.

    x' = [x, h_prev] (masked), i/o/f = sigmoid(W x' + b), S = tanh(W_S x' + b_S),
    C = i*S + f*C_prev, h = o*tanh(C).
    """
    state, _ = _forward_step(np.asarray(x, dtype=np.float64), prev, params, masks)
    return state


def lstm_scan_cached(X, params: LstmParams, mask: Optional[np.ndarray] = None,
                     init: Optional[LstmState] = None) -> Tuple[List[LstmState], List[StepCache]]:
    """Fold `lstm_step` over the leading (time) axis of X, keeping caches."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("lstm_scan needs a nonempty sequence")
    if init is None:
        zeros = np.zeros(X.shape[1:-1] + (params.n_u,))
        init = LstmState(zeros, zeros.copy())
    states, caches = [], []
    state = init
    for x in X:
        state, cache = _forward_step(x, state, params, mask)
        states.append(state)
        caches.append(cache)
    return states, caches


def lstm_scan(X, params: LstmParams, masks: Optional[np.ndarray] = None,
              init: Optional[LstmState] = None) -> List[LstmState]:
    states, _ = lstm_scan_cached(X, params, masks, init)
    return states


def _site_mask(masks, site: str) -> Optional[np.ndarray]:
    if masks is None:
        return None
    if isinstance(masks, DropoutSpec):
        return masks.mask(site)
    return masks.get(site)


def reverse_time(X: np.ndarray) -> np.ndarray:
    return np.asarray(X)[::-1]


def bidirectional_encode(X, fwd_params: LstmParams, bwd_params: LstmParams,
                         masks=None) -> LstmState:
    """
    Run one LSTM over X and another over reversed X; average their final states.

    Masks are looked up at the 'encoder_forward' and 'encoder_backward' sites.
    """
    fwd = lstm_scan(X, fwd_params, _site_mask(masks, "encoder_forward"))
    bwd = lstm_scan(reverse_time(X), bwd_params, _site_mask(masks, "encoder_backward"))
    return LstmState(0.5 * (fwd[-1].h + bwd[-1].h), 0.5 * (fwd[-1].C + bwd[-1].C))


def lstm_scan_backward(dh_seq: np.ndarray, caches: List[StepCache], params: LstmParams,
                       dh_last: Optional[np.ndarray] = None,
                       dC_last: Optional[np.ndarray] = None):
    """
    Backpropagation through time for a cached scan.

    Args:
        dh_seq: Loss gradient w.r.t. each emitted h_t, shape (T, B, n_u).
        caches: Step caches from `lstm_scan_cached`.
        params: Parameters used in the forward pass.
        dh_last: Extra gradient on the final h (e.g. from a state hand-off).
        dC_last: Extra gradient on the final C.

    Returns:
        (dX of shape (T, B, n_in), parameter gradients keyed like
        `LstmParams.tensors()`, dh0, dC0) where dh0/dC0 flow into the
        initial state.
    """
    n_in, n_u = params.n_in, params.n_u
    T = len(caches)
    batch_shape = caches[0].C.shape
    grads = {name: np.zeros_like(arr) for name, arr in params.tensors().items()}
    dh = np.zeros(batch_shape) if dh_last is None else np.array(dh_last, dtype=np.float64)
    dC = np.zeros(batch_shape) if dC_last is None else np.array(dC_last, dtype=np.float64)
    dX = np.zeros((T,) + batch_shape[:-1] + (n_in,))

    for t in reversed(range(T)):
        c = caches[t]
        dh_t = dh_seq[t] + dh
        dC_tot = dC + dh_t * c.o * (1.0 - c.tanhC ** 2)
        dz = {
            "o": dh_t * c.tanhC * c.o * (1.0 - c.o),
            "i": dC_tot * c.S * c.i * (1.0 - c.i),
            "f": dC_tot * c.C_prev * c.f * (1.0 - c.f),
            "S": dC_tot * c.i * (1.0 - c.S ** 2),
        }
        dC = dC_tot * c.f
        dxp = np.zeros_like(c.xp)
        for g in GATES:
            grads[f"W_{g}"] += dz[g].T @ c.xp
            grads[f"b_{g}"] += dz[g].sum(axis=0)
            dxp += dz[g] @ params.W(g)
        if c.mask is not None:
            dxp = dxp * c.mask
        dX[t] = dxp[..., :n_in]
        dh = dxp[..., n_in:n_in + n_u]
    return dX, grads, dh, dC


def dense(h: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map h W^T + b; W has shape (out, in)."""
    if h.shape[-1] != W.shape[1] or b.shape != (W.shape[0],):
        raise ValueError(f"Dense shapes inconsistent: h {h.shape}, W {W.shape}, b {b.shape}")
    return h @ W.T + b


def dense_softmax(h, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Softmax of the dense layer output (max-subtracted); rows sum to 1."""
    return softmax(dense(np.asarray(h, dtype=np.float64), W, b), axis=-1)


def cross_entropy(pred, target) -> float:
    """
    Mean of -log(pred[target]) over all leading axes, floored at 1e-12.

    `target` is either one-hot rows matching `pred` or integer class indices.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target)
    if target.shape == pred.shape:
        idx = np.argmax(target, axis=-1)
    else:
        idx = target.astype(np.int64)
    picked = np.take_along_axis(pred, idx[..., None], axis=-1)[..., 0]
    return float(np.mean(-np.log(np.maximum(picked, LOG_FLOOR))))


def mse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"Length mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def l2_penalty(params: Mapping[str, np.ndarray], lam: float):
    """λ‖θ‖² over every tensor and its gradient 2λθ."""
    value = lam * sum(float(np.sum(p * p)) for p in params.values())
    grads = {name: 2.0 * lam * p for name, p in params.items()}
    return value, grads


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm: float):
    """Rescale all gradients so their joint L2 norm is at most max_norm."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm and norm > max_norm:
        scale = max_norm / norm
        grads = {name: g * scale for name, g in grads.items()}
    return grads, norm


def nadam_update(params: Dict[str, np.ndarray], grads: Mapping[str, np.ndarray],
                 state: OptimizerState):
    """
    One Nadam step, in place.

    With t the new step count and sd the schedule decay:
        mu_t     = beta_1 * (1 - 0.5 * 0.96 ** (t * sd))
        mu_t1    = beta_1 * (1 - 0.5 * 0.96 ** ((t + 1) * sd))
        sched    = sched * mu_t;   sched_next = sched * mu_t1
        g'       = g / (1 - sched)
        m        = beta_1 * m + (1 - beta_1) * g;    m' = m / (1 - sched_next)
        v        = beta_2 * v + (1 - beta_2) * g**2; v' = v / (1 - beta_2 ** t)
        m_bar    = (1 - mu_t) * g' + mu_t1 * m'
        theta   -= lr * m_bar / (sqrt(v') + eps)

    Returns:
        (params, state), both updated in place.
    """
    state.t += 1
    t = state.t
    b1, b2 = state.beta_1, state.beta_2
    mu_t = b1 * (1.0 - 0.5 * 0.96 ** (t * state.schedule_decay))
    mu_t1 = b1 * (1.0 - 0.5 * 0.96 ** ((t + 1) * state.schedule_decay))
    m_schedule_new = state.m_schedule * mu_t
    m_schedule_next = m_schedule_new * mu_t1
    state.m_schedule = m_schedule_new

    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"Gradient shape {g.shape} does not match parameter '{name}' {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        g_prime = g / (1.0 - m_schedule_new)
        m *= b1
        m += (1.0 - b1) * g
        m_prime = m / (1.0 - m_schedule_next)
        v *= b2
        v += (1.0 - b2) * g * g
        v_prime = v / (1.0 - b2 ** t)
        m_bar = (1.0 - mu_t) * g_prime + mu_t1 * m_prime
        p -= state.learning_rate * m_bar / (np.sqrt(v_prime) + state.epsilon)
    return params, state
