"""
Encoder-decoder forecaster in ordinal or regression mode.

A bidirectional LSTM encoder summarises the lookback window; its averaged
final (h, C) seeds an LSTM decoder whose dense head emits either a softmax
over the bins of a `BinPartition` (ordinal) or one linear unit (regression).
At forecast time the decoder starts from the last observed sample and then
consumes its own output: the full probability vector in ordinal mode, the
scalar in regression mode.
"""

from dataclasses import dataclass
from typing import Dict, NamedTuple, Optional, Tuple

import numpy as np

from core.distributions import CategoricalForecast, GaussianForecast, VARIANCE_FLOOR
from core.nnet import (
    DropoutSpec, LstmParams, LstmState, dense, dense_softmax, glorot_uniform_init,
    lstm_scan_backward, lstm_scan_cached, lstm_step, bidirectional_encode, l2_penalty,
    sample_dropout_masks,
)
from core.ordinal import BinPartition, OrdinalSequence, PROB_FLOOR
from utils.errors import ConfigError

ORDINAL = "ordinal"
REGRESSION = "regression"
MODES = (ORDINAL, REGRESSION)

_LSTM_PREFIXES = ("enc_fwd.", "enc_bwd.", "dec.")


@dataclass
class Windows:
    """Sliding-window training set; each row is one example."""
    encoder: np.ndarray
    decoder: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return self.encoder.shape[0]

    def subset(self, idx) -> 'Windows':
        return Windows(self.encoder[idx], self.decoder[idx], self.targets[idx])


def make_windows(series, P: int, stride: int = 1, decoder_length: int = 1) -> Windows:
    """
    Frame a series as (encoder window, decoder inputs, decoder targets) triples.

    Window s covers x[s:s+P] for the encoder. The decoder is teacher forced:
    its inputs are x[s+P-1 : s+P-1+L] and its targets the next samples
    x[s+P : s+P+L]. With L = 1 the target is the single next step.

    Args:
        series: Real values, or an OrdinalSequence (its bin indices are framed).
        P: Lookback.
        stride: Offset between consecutive windows.
        decoder_length: Teacher-forcing length L.

    Returns:
        Windows with N - P - L + 1 rows for stride 1.
    """
    if isinstance(series, OrdinalSequence):
        x = np.asarray(series.indices)
    else:
        x = np.asarray(series, dtype=np.float64)
    if P < 1 or stride < 1 or decoder_length < 1:
        raise ValueError("P, stride and decoder_length must be >= 1")
    n = len(x)
    count = n - P - decoder_length + 1
    if count < 1:
        raise ValueError(
            f"Series of length {n} too short for lookback {P} and decoder length {decoder_length}"
        )
    starts = np.arange(0, count, stride)
    enc = x[starts[:, None] + np.arange(P)]
    dec_idx = starts[:, None] + P - 1 + np.arange(decoder_length)
    return Windows(enc, x[dec_idx], x[dec_idx + 1])


class Seq2SeqModel:
    """
    Parameters and configuration of an encoder-decoder model.

    `params` maps tensor names to arrays; the LSTM views share memory with
    it so optimiser updates are visible everywhere.
    """

    def __init__(self, mode: str, n_u: int, params: Dict[str, np.ndarray], p_drop: float = 0.0,
                 partition: Optional[BinPartition] = None, lookback: int = 1,
                 handoff_dropout: bool = False):
        if mode not in MODES:
            raise ConfigError(f"Unknown model mode '{mode}'; expected one of {MODES}")
        if mode == ORDINAL and partition is None:
            raise ConfigError("Ordinal mode needs a bin partition")
        self.mode = mode
        self.n_u = int(n_u)
        self.params = params
        self.partition = partition if mode == ORDINAL else None
        self.lookback = int(lookback)
        self.handoff_dropout = bool(handoff_dropout)
        self.enc_fwd = LstmParams.from_tensors(params, "enc_fwd.")
        self.enc_bwd = LstmParams.from_tensors(params, "enc_bwd.")
        self.dec = LstmParams.from_tensors(params, "dec.")
        for lstm in (self.enc_fwd, self.enc_bwd, self.dec):
            if lstm.n_u != self.n_u or lstm.n_in != self.n_in:
                raise ValueError("Encoder and decoder sizes are inconsistent with the model")
        if params["out.W"].shape != (self.n_out, self.n_u) or params["out.b"].shape != (self.n_out,):
            raise ValueError("Output layer shape does not match the model mode")
        self.dropout = DropoutSpec(p_drop, self._dropout_sites())

    @classmethod
    def build(cls, mode: str, n_u: int, rng: np.random.Generator, p_drop: float = 0.0,
              partition: Optional[BinPartition] = None, lookback: int = 1,
              handoff_dropout: bool = False) -> 'Seq2SeqModel':
        """Freshly initialised model (Glorot weights, unit forget bias)."""
        if mode not in MODES:
            raise ConfigError(f"Unknown model mode '{mode}'; expected one of {MODES}")
        if mode == ORDINAL and partition is None:
            raise ConfigError("Ordinal mode needs a bin partition")
        n_in = partition.bin_count if mode == ORDINAL else 1
        n_out = n_in
        params: Dict[str, np.ndarray] = {}
        for prefix in _LSTM_PREFIXES:
            params.update(LstmParams.initialise(n_in, n_u, rng).tensors(prefix))
        params["out.W"] = glorot_uniform_init((n_out, n_u), rng)
        params["out.b"] = np.zeros(n_out)
        return cls(mode, n_u, params, p_drop, partition, lookback, handoff_dropout)

    @property
    def n_in(self) -> int:
        return self.partition.bin_count if self.mode == ORDINAL else 1

    @property
    def n_out(self) -> int:
        return self.n_in

    @property
    def p_drop(self) -> float:
        return self.dropout.p_drop

    def _dropout_sites(self) -> Dict[str, int]:
        width = self.n_in + self.n_u
        sites = {
            "encoder_forward": width,
            "encoder_backward": width,
            "decoder": width,
            "output": self.n_u,
        }
        if self.handoff_dropout:
            sites["handoff"] = self.n_u
        return sites

    def features(self, values) -> np.ndarray:
        """Input features for raw values (one-hot rows or a trailing unit axis)."""
        values = np.asarray(values)
        if self.mode == ORDINAL:
            if np.issubdtype(values.dtype, np.integer):
                return np.eye(self.n_in)[values]
            return self.partition.one_hot(values)
        return values.astype(np.float64)[..., None]

    def targets(self, values) -> np.ndarray:
        values = np.asarray(values)
        if self.mode == ORDINAL and not np.issubdtype(values.dtype, np.integer):
            return self.partition.encode(values)
        return values

    def copy_params(self) -> Dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.params.items()}

    def load_params(self, params: Dict[str, np.ndarray]):
        """Overwrite parameters in place, keeping the views valid."""
        for name, arr in params.items():
            self.params[name][...] = arr


class Trace(NamedTuple):
    """Forward activations of a teacher-forced pass, time-major."""
    fwd_caches: list
    bwd_caches: list
    dec_caches: list
    hidden: np.ndarray
    out_mask: Optional[np.ndarray]
    handoff_mask: Optional[np.ndarray]
    outputs: np.ndarray


def _mask(masks: Optional[DropoutSpec], site: str):
    return None if masks is None else masks.mask(site)


def forward(model: Seq2SeqModel, enc_in: np.ndarray, dec_in: np.ndarray,
            masks: Optional[DropoutSpec] = None) -> Trace:
    """
    Teacher-forced forward pass.

    Args:
        enc_in: Encoder features, shape (B, P, n_in).
        dec_in: Decoder features, shape (B, L, n_in).
        masks: Sampled dropout masks with a leading batch axis, or None.

    Returns:
        Trace whose `outputs` are (L, B, n_out) probabilities (ordinal) or
        linear outputs (regression).
    """
    Xe = np.swapaxes(enc_in, 0, 1)
    Xd = np.swapaxes(dec_in, 0, 1)
    fwd_states, fwd_caches = lstm_scan_cached(Xe, model.enc_fwd, _mask(masks, "encoder_forward"))
    bwd_states, bwd_caches = lstm_scan_cached(Xe[::-1], model.enc_bwd, _mask(masks, "encoder_backward"))
    h0 = 0.5 * (fwd_states[-1].h + bwd_states[-1].h)
    C0 = 0.5 * (fwd_states[-1].C + bwd_states[-1].C)
    handoff = _mask(masks, "handoff")
    if handoff is not None:
        h0 = h0 * handoff
    dec_states, dec_caches = lstm_scan_cached(Xd, model.dec, _mask(masks, "decoder"), LstmState(h0, C0))
    hidden = np.stack([s.h for s in dec_states])
    out_mask = _mask(masks, "output")
    features = hidden if out_mask is None else hidden * out_mask
    W, b = model.params["out.W"], model.params["out.b"]
    if model.mode == ORDINAL:
        outputs = dense_softmax(features, W, b)
    else:
        outputs = dense(features, W, b)
    return Trace(fwd_caches, bwd_caches, dec_caches, hidden, out_mask, handoff, outputs)


def output_loss(model: Seq2SeqModel, outputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean loss over (L, B) and its gradient w.r.t. the pre-activation logits.

    Targets are (B, L): bin indices (ordinal, cross-entropy) or reals
    (regression, squared error).
    """
    t = np.swapaxes(np.asarray(targets), 0, 1)
    count = t.size
    if model.mode == ORDINAL:
        t = t.astype(np.int64)
        picked = np.take_along_axis(outputs, t[..., None], axis=-1)[..., 0]
        loss = float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))
        dlogits = outputs.copy()
        np.put_along_axis(dlogits, t[..., None],
                          np.take_along_axis(dlogits, t[..., None], axis=-1) - 1.0, axis=-1)
        dlogits /= count
    else:
        diff = outputs[..., 0] - t.astype(np.float64)
        loss = float(np.mean(diff ** 2))
        dlogits = (2.0 * diff / count)[..., None]
    return loss, dlogits


def backward(model: Seq2SeqModel, trace: Trace, dlogits: np.ndarray) -> Dict[str, np.ndarray]:
    """Exact reverse-mode gradients of the loss for every parameter."""
    W = model.params["out.W"]
    features = trace.hidden if trace.out_mask is None else trace.hidden * trace.out_mask
    grads = {
        "out.W": np.einsum("lbo,lbu->ou", dlogits, features),
        "out.b": dlogits.sum(axis=(0, 1)),
    }
    dH = dlogits @ W
    if trace.out_mask is not None:
        dH = dH * trace.out_mask

    _, g_dec, dh0, dC0 = lstm_scan_backward(dH, trace.dec_caches, model.dec)
    if trace.handoff_mask is not None:
        dh0 = dh0 * trace.handoff_mask

    P = len(trace.fwd_caches)
    zeros = np.zeros((P,) + dh0.shape)
    _, g_fwd, _, _ = lstm_scan_backward(zeros, trace.fwd_caches, model.enc_fwd, 0.5 * dh0, 0.5 * dC0)
    _, g_bwd, _, _ = lstm_scan_backward(zeros, trace.bwd_caches, model.enc_bwd, 0.5 * dh0, 0.5 * dC0)

    for prefix, g in (("dec.", g_dec), ("enc_fwd.", g_fwd), ("enc_bwd.", g_bwd)):
        for name, arr in g.items():
            grads[prefix + name] = arr
    return grads


def loss_and_gradients(model: Seq2SeqModel, enc_in: np.ndarray, dec_in: np.ndarray,
                       targets: np.ndarray, masks: Optional[DropoutSpec] = None,
                       l2: float = 0.0) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss (data term plus λ‖θ‖²) and its gradient for one minibatch."""
    trace = forward(model, enc_in, dec_in, masks)
    loss, dlogits = output_loss(model, trace.outputs, targets)
    grads = backward(model, trace, dlogits)
    if l2:
        penalty, l2_grads = l2_penalty(model.params, l2)
        loss += penalty
        for name, g in l2_grads.items():
            grads[name] = grads[name] + g
    return loss, grads


def batch_loss(model: Seq2SeqModel, windows: Windows, batch_size: int = 256) -> float:
    """Deterministic mean loss over a window set (no dropout, no penalty)."""
    total, count = 0.0, 0
    for start in range(0, len(windows), batch_size):
        chunk = windows.subset(slice(start, start + batch_size))
        trace = forward(model, model.features(chunk.encoder), model.features(chunk.decoder))
        loss, _ = output_loss(model, trace.outputs, model.targets(chunk.targets))
        n = chunk.targets.size
        total += loss * n
        count += n
    return total / count


def _check_seed(model: Seq2SeqModel, seed_window) -> np.ndarray:
    seed = np.asarray(seed_window, dtype=np.float64)
    if seed.ndim != 1 or len(seed) != model.lookback:
        raise ValueError(f"Seed window must hold the last {model.lookback} observations, got {seed.shape}")
    return seed


def rollout(model: Seq2SeqModel, seed_window, P_h: int, masks: Optional[DropoutSpec] = None,
            rows: int = 1):
    """
    Open-loop decoding of `rows` parallel rollouts, one mask set per row.

    Yields the decoder output of every step: (rows, M) probabilities in
    ordinal mode, (rows,) values in regression mode.
    """
    if P_h < 1:
        raise ValueError(f"Horizon must be >= 1, got {P_h}")
    seed = _check_seed(model, seed_window)
    feats = model.features(seed)
    Xe = np.repeat(feats[:, None, :], rows, axis=1)
    state = bidirectional_encode(Xe, model.enc_fwd, model.enc_bwd, masks)
    handoff = _mask(masks, "handoff")
    if handoff is not None:
        state = LstmState(state.h * handoff, state.C)
    x = Xe[-1]
    dec_mask = _mask(masks, "decoder")
    out_mask = _mask(masks, "output")
    W, b = model.params["out.W"], model.params["out.b"]
    for _ in range(P_h):
        state = lstm_step(x, state, model.dec, dec_mask)
        h = state.h if out_mask is None else state.h * out_mask
        if model.mode == ORDINAL:
            x = dense_softmax(h, W, b)
            yield x
        else:
            x = dense(h, W, b)
            yield x[:, 0]


def _unbatched(masks: Optional[DropoutSpec]) -> Optional[DropoutSpec]:
    # single mask set applied to a one-row rollout
    if masks is None:
        return None
    return DropoutSpec(masks.p_drop, dict(masks.sites),
                       {k: np.atleast_2d(v) for k, v in masks.masks.items()})


def forecast_ordinal(model: Seq2SeqModel, seed_window, P_h: int,
                     masks: Optional[DropoutSpec] = None) -> CategoricalForecast:
    """
    One density-feedback rollout under a fixed mask set (None: no dropout).

    The decoder first consumes the one-hot of the last observed sample and
    thereafter its own full probability vector.
    """
    if model.mode != ORDINAL:
        raise ValueError("forecast_ordinal needs an ordinal-mode model")
    probs = np.stack([p[0] for p in rollout(model, seed_window, P_h, _unbatched(masks))])
    return CategoricalForecast(_renormalise(probs), model.partition)


def _renormalise(probs: np.ndarray) -> np.ndarray:
    return probs / probs.sum(axis=-1, keepdims=True)


def mc_dropout_forecast(model: Seq2SeqModel, seed_window, P_h: int, N_s: int,
                        rng: np.random.Generator, with_trajectories: bool = False):
    """
    MC-dropout predictive distribution of an ordinal model.

    N_s mask sets are drawn at once and the rollouts run as the rows of one
    batch. The per-step density is the mean of the N_s categorical outputs.

    Returns:
        CategoricalForecast, or (CategoricalForecast, paths) when
        `with_trajectories` is set; paths is an (N_s, P_h) array holding each
        rollout's expected value per step.
    """
    if model.mode != ORDINAL:
        raise ValueError("mc_dropout_forecast needs an ordinal-mode model")
    if N_s < 1:
        raise ValueError(f"N_s must be >= 1, got {N_s}")
    masks = sample_dropout_masks(model.dropout, rng, batch=N_s)
    mids = model.partition.midpoints
    means = np.empty((P_h, model.n_out))
    paths = np.empty((N_s, P_h))
    for k, probs in enumerate(rollout(model, seed_window, P_h, masks, rows=N_s)):
        means[k] = probs.mean(axis=0)
        paths[:, k] = probs @ mids
    dist = CategoricalForecast(_renormalise(means), model.partition)
    return (dist, paths) if with_trajectories else dist


def forecast_regression(model: Seq2SeqModel, seed_window, P_h: int, N_s: int,
                        rng: np.random.Generator, with_trajectories: bool = False):
    """
    MC-dropout rollouts of a regression model feeding back the scalar output.

    Per-step Gaussian with the sample mean and (population) variance across
    rollouts, variance floored at 1e-8.
    """
    if model.mode != REGRESSION:
        raise ValueError("forecast_regression needs a regression-mode model")
    if N_s < 1:
        raise ValueError(f"N_s must be >= 1, got {N_s}")
    masks = sample_dropout_masks(model.dropout, rng, batch=N_s)
    paths = np.stack(list(rollout(model, seed_window, P_h, masks, rows=N_s)), axis=1)
    mu = paths.mean(axis=0)
    var = np.maximum(((paths - mu) ** 2).mean(axis=0), VARIANCE_FLOOR)
    dist = GaussianForecast(mu, var)
    return (dist, paths) if with_trajectories else dist
