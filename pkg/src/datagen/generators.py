"""Deterministic generators for maps, flows, the Mackey-Glass delay system and sines."""

import math
from typing import Callable, Dict, Optional

import numpy as np

from datagen.systems import SystemSpec
from utils.errors import ConfigError, NumericalError

DIVERGENCE_BOUND = 1e6
MACKEY_GLASS_BURN_IN = 1000

VectorField = Callable[[np.ndarray, Dict[str, float]], np.ndarray]


def _lorenz(s, p):
    x, y, z = s
    return np.array([p["sigma"] * (y - x), p["r"] * x - y - x * z, x * y - p["b"] * z])


def _rossler(s, p):
    x, y, z = s
    return np.array([-z - y, x + p["a"] * y, p["b"] + z * (x - p["c"])])


def _act(s, p):
    x, y, z = s
    al = p["alpha"]
    return np.array([al * (x - y), -4.0 * al * y + x * z + p["mu"] * x ** 3,
                     -p["delta"] * al * z + x * y + p["beta"] * z ** 2])


def _chen(s, p):
    x, y, z = s
    a, c = p["a"], p["c"]
    return np.array([a * (y - x), (c - a) * x - x * z + c * y, x * y - p["b"] * z])


def _double_scroll(s, p):
    x, y, z = s
    return np.array([y, z, -p["a"] * (z + y + x - np.sign(x))])


def _hadley(s, p):
    x, y, z = s
    a, b = p["a"], p["b"]
    return np.array([-y ** 2 - z ** 2 - a * x + a * p["F"], x * y - b * x * z - y + p["G"],
                     b * x * y + x * z - z])


def _labyrinth(s, p):
    x, y, z = s
    return np.array([math.sin(y), -math.sin(z), math.sin(x)])


def _moore_spiegel(s, p):
    x, y, z = s
    T, R = p["T"], p["R"]
    return np.array([y, z, -z - (T - R + R * x ** 2) * y - T * x])


def _nose_hoover(s, p):
    x, y, z = s
    return np.array([y, -x + y * z, p["a"] - y ** 2])


def _rucklidge(s, p):
    x, y, z = s
    return np.array([-p["kappa"] * x + p["lambda"] * y - y * z, x, -z + y ** 2])


def _simplest_quadratic(s, p):
    x, y, z = s
    return np.array([y, z, -p["a"] * z + y ** 2 - x])


def _thomas(s, p):
    x, y, z = s
    b = p["b"]
    return np.array([-b * x + math.sin(y), -b * y + math.sin(z), -b * z + math.sin(x)])


def _windmi(s, p):
    x, y, z = s
    return np.array([y, z, -p["a"] * z - y + p["b"] - math.exp(x)])


FLOWS: Dict[str, VectorField] = {
    "lorenz": _lorenz,
    "rossler": _rossler,
    "act": _act,
    "chen": _chen,
    "double_scroll": _double_scroll,
    "hadley": _hadley,
    "labyrinth": _labyrinth,
    "moore_spiegel": _moore_spiegel,
    "nose_hoover": _nose_hoover,
    "rucklidge": _rucklidge,
    "simplest_quadratic": _simplest_quadratic,
    "thomas": _thomas,
    "windmi": _windmi,
}


def _henon(s, p, rng):
    x, y = s
    return (1.0 - p["a"] * x * x + y, p["b"] * x)


def _lozi(s, p, rng):
    x, x_prev = s
    return (1.0 - p["a"] * abs(x) + p["b"] * x_prev, x)


def _freitas(s, p, rng):
    (x,) = s
    jump = rng.uniform(-p["b"], p["b"]) if rng.random() < p["q"] else 0.0
    return (p["mu"] * math.sin(x) + jump,)


def _logistic(s, p, rng):
    (x,) = s
    # evaluated left to right so the fixed point 1 - 1/A is reproduced exactly
    return (p["A"] * x * (1.0 - x),)


def _timmer_ar2(s, p, rng):
    # AR(2) whose oscillation period T drifts sinusoidally around T_mean;
    # the third state slot is the phase counter t mod T_mod
    x, x_prev, t = s
    period = p["T_mean"] + p["M_T"] * math.sin(2.0 * math.pi * t / p["T_mod"])
    decay = math.exp(-1.0 / p["tau"])
    a1 = 2.0 * math.cos(2.0 * math.pi / period) * decay
    a2 = -decay * decay
    return (a1 * x + a2 * x_prev + p["sigma"] * rng.standard_normal(), x, (t + 1.0) % p["T_mod"])


def _faes_nlar2(s, p, rng):
    # convex blend of a logistic step and the lag-2 value; stays in [0, 1] for a1 <= 4, 0 <= a2 <= 1
    x, x_prev = s
    return (p["a2"] * p["a1"] * x * (1.0 - x) + (1.0 - p["a2"]) * x_prev, x)


MAPS = {
    "henon": _henon,
    "lozi": _lozi,
    "freitas": _freitas,
    "logistic": _logistic,
    "timmer_ar2": _timmer_ar2,
    "faes_nlar2": _faes_nlar2,
}


def rk4_step(f: VectorField, state: np.ndarray, dt: float, params: Dict[str, float]) -> np.ndarray:
    k1 = f(state, params)
    k2 = f(state + 0.5 * dt * k1, params)
    k3 = f(state + 0.5 * dt * k2, params)
    k4 = f(state + dt * k3, params)
    return state + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def rk4_integrate(f: VectorField, y0, dt: float, n_steps: int,
                  params: Optional[Dict[str, float]] = None) -> np.ndarray:
    """Classical RK4 trajectory, shape (n_steps + 1, dim), starting at y0."""
    params = params or {}
    state = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    out = np.empty((n_steps + 1,) + state.shape)
    out[0] = state
    for k in range(1, n_steps + 1):
        state = rk4_step(f, state, dt, params)
        if not np.all(np.isfinite(state)):
            raise NumericalError(f"Integration became non-finite at step {k}")
        out[k] = state
    return out


def gen_flow(spec: SystemSpec) -> np.ndarray:
    """
    RK4-integrate a flow, keep every `stride`-th state starting with the
    initial one, drop `burn_in` samples and return the named channel.
    """
    if spec.system_id not in FLOWS:
        raise ConfigError(f"No vector field registered for '{spec.system_id}'")
    f = FLOWS[spec.system_id]
    total = spec.burn_in + spec.length
    state = np.asarray(spec.initial, dtype=np.float64)
    out = np.empty(total)
    ch = spec.channel_index
    step = 0
    for j in range(total):
        out[j] = state[ch]
        for _ in range(spec.stride):
            state = rk4_step(f, state, spec.dt, spec.params)
            step += 1
        if not np.all(np.isfinite(state)):
            raise NumericalError(f"{spec.system_id} became non-finite at integration step {step}")
    return out[spec.burn_in:]


def gen_map(spec: SystemSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Iterate a map from its initial conditions, drop `burn_in` samples and
    return N values of the named channel.
    """
    if spec.system_id not in MAPS:
        raise ConfigError(f"No map registered for '{spec.system_id}'")
    step_fn = MAPS[spec.system_id]
    rng = rng if rng is not None else np.random.default_rng(0)
    state = tuple(float(v) for v in spec.initial)
    ch = spec.channel_index
    total = spec.burn_in + spec.length
    out = np.empty(total)
    for t in range(total):
        out[t] = state[ch]
        state = step_fn(state, spec.params, rng)
        if not all(math.isfinite(v) and abs(v) <= DIVERGENCE_BOUND for v in state):
            raise NumericalError(f"{spec.system_id} diverged at step {t + 1}: state {state}")
    return out[spec.burn_in:]


def gen_mackey_glass(a: float = 0.2, b: float = 0.1, tau: int = 17, n: float = 10, N: int = 15000,
                     history=1.2, burn_in: int = MACKEY_GLASS_BURN_IN) -> np.ndarray:
    """
    x_{t+1} = (1 - b) x_t + a x_{t-tau} / (1 + x_{t-tau}^n).

    Args:
        history: Scalar (constant history) or at least tau past values ending
            at x_t. A history of exactly tau values is extended backwards with
            its first value.
        burn_in: New samples discarded before the N returned.
    """
    tau = int(tau)
    hist = np.asarray(history, dtype=np.float64)
    if hist.ndim == 0:
        hist = np.full(tau + 1, float(hist))
    if len(hist) < tau:
        raise ValueError(f"Mackey-Glass history needs at least tau = {tau} values, got {len(hist)}")
    if len(hist) == tau:
        hist = np.concatenate([hist[:1], hist])
    h = len(hist)
    x = np.empty(h + burn_in + N)
    x[:h] = hist
    for t in range(h - 1, h - 1 + burn_in + N):
        xd = x[t - tau]
        x[t + 1] = (1.0 - b) * x[t] + a * xd / (1.0 + xd ** n)
    return x[h + burn_in:]


def gen_sine(period: float, amplitude: float = 1.0, noise_sigma: float = 0.0, N: int = 15000,
             phase: float = 0.0, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """amplitude * sin(2π (t + phase) / period) plus optional Gaussian noise."""
    if period <= 0:
        raise ValueError(f"Period must be positive, got {period}")
    t = np.arange(N, dtype=np.float64)
    x = amplitude * np.sin(2.0 * np.pi * (t + phase) / period)
    if noise_sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        x = x + rng.normal(0.0, noise_sigma, N)
    return x


def generate(spec: SystemSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Dispatch on the system kind."""
    if spec.kind == "flow":
        return gen_flow(spec)
    if spec.kind == "map":
        return gen_map(spec, rng)
    if spec.kind == "delay":
        p = spec.params
        history = spec.initial[0] if len(spec.initial) == 1 else spec.initial
        return gen_mackey_glass(p["a"], p["b"], int(p["tau"]), p["n"], spec.length, history, spec.burn_in)
    p = spec.params
    phase = spec.initial[0] if spec.initial else 0.0
    return gen_sine(p["period"], p.get("amplitude", 1.0), p.get("noise_sigma", 0.0), spec.length, phase, rng)
