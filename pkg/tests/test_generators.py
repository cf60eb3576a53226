import hashlib

import numpy as np
import pytest

from datagen.generators import FLOWS, MAPS, gen_mackey_glass, gen_sine, generate, rk4_integrate
from datagen.systems import SystemSpec, get_system, list_systems
from utils.errors import ConfigError, NumericalError


def test_rk4_matches_exponential_decay():
    path = rk4_integrate(lambda s, p: -s, [1.0], 0.01, 100)
    t = 0.01 * np.arange(101)
    assert path.shape == (101, 1)
    np.testing.assert_allclose(path[:, 0], np.exp(-t), atol=1e-6)


def test_lorenz_origin_is_fixed():
    spec = get_system("lorenz", length=200, initial=(0.0, 0.0, 0.0), burn_in=0)
    x = generate(spec)
    np.testing.assert_array_equal(x, 0.0)


def test_mackey_glass_fixed_point_preserved():
    x = gen_mackey_glass(N=500, history=1.0, burn_in=0)
    np.testing.assert_array_equal(x, 1.0)


def test_mackey_glass_rejects_short_history():
    with pytest.raises(ValueError):
        gen_mackey_glass(tau=17, history=np.ones(5))


def test_mackey_glass_default_is_bounded_and_aperiodic():
    x = gen_mackey_glass(N=3000)
    assert np.all(np.isfinite(x))
    assert 0.2 < x.min() and x.max() < 1.5
    assert x.std() > 0.1


def test_logistic_two_cycle():
    x = generate(get_system("logistic", length=100), np.random.default_rng(0))
    lo, hi = sorted(set(np.round(x, 6)))
    assert lo == pytest.approx(0.5130, abs=1e-3)
    assert hi == pytest.approx(0.7995, abs=1e-3)
    np.testing.assert_allclose(x[::2], x[0], atol=1e-9)


def test_diverging_map_raises():
    spec = get_system("logistic", length=100, params={"A": 4.5}, initial=(0.5,))
    with pytest.raises(NumericalError):
        generate(spec)


def test_unknown_system_lists_valid_ids():
    with pytest.raises(ConfigError, match="lorenz"):
        get_system("no_such_attractor")


def test_bad_spec_rejected():
    with pytest.raises(ConfigError):
        SystemSpec("x", kind="ode")
    with pytest.raises(ConfigError):
        SystemSpec("x", kind="flow", dt=0.0)


SYSTEMS = {
    "mackey_glass", "henon", "lozi", "freitas", "logistic", "timmer_ar2", "faes_nlar2",
    "lorenz", "rossler", "act", "chen", "double_scroll", "hadley", "labyrinth", "moore_spiegel",
    "nose_hoover", "rucklidge", "simplest_quadratic", "thomas", "windmi", "sine",
}


def test_every_system_is_registered():
    assert set(list_systems()) == SYSTEMS
    kinds = {s: get_system(s).kind for s in SYSTEMS}
    assert {s for s, k in kinds.items() if k == "flow"} == set(FLOWS)
    assert {s for s, k in kinds.items() if k == "map"} == set(MAPS)


def digest(x) -> str:
    return hashlib.sha256("\n".join(f"{v:.10f}" for v in x).encode()).hexdigest()


@pytest.mark.parametrize("system, length, expected", [
    ("henon", 300, "d3aeb85ddc5e2157fd779020cd328f79785b5b83d805252eeb914c37e84e0a13"),
    ("lozi", 300, "d383ce4b460f7af9524fdcb112ea19f1ec4a5e06a58ac828d204aa0bbf0ddb"),
    ("faes_nlar2", 300, "e722cf6b118b87cd91d0001fd774f0f121f1fac3c0565371a1c2477354cc14d5"),
    ("lorenz", 100, "8f7663ac3c0c7aad7f321478c16bf3fd9a8576367d6df3add95f075ece9e1363"),
])
def test_golden_trajectories(system, length, expected):
    x = generate(get_system(system, length=length, burn_in=0))
    assert digest(x) == expected


def test_henon_first_iterates():
    x = generate(get_system("henon", length=4, burn_in=0))
    np.testing.assert_allclose(x, [0.0, 1.0, -0.4, 1.076], atol=1e-15)


def test_faes_stays_in_unit_interval():
    x = generate(get_system("faes_nlar2", length=10_000))
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_timmer_without_noise_stays_at_rest():
    spec = get_system("timmer_ar2", length=500, params={"sigma": 0.0})
    np.testing.assert_array_equal(generate(spec, np.random.default_rng(0)), 0.0)


def test_timmer_is_seeded_and_oscillates():
    spec = get_system("timmer_ar2", length=4000)
    a = generate(spec, np.random.default_rng(3))
    b = generate(spec, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)
    assert np.all(np.isfinite(a)) and a.std() > 1.0
    # slow oscillation: strong positive lag-1 correlation
    assert np.corrcoef(a[:-1], a[1:])[0, 1] > 0.7


def test_length_and_determinism():
    spec = get_system("freitas", length=400)
    a = generate(spec, np.random.default_rng(7))
    b = generate(spec, np.random.default_rng(7))
    assert len(a) == 400
    np.testing.assert_array_equal(a, b)


def test_sine_period():
    x = gen_sine(period=40, N=400)
    np.testing.assert_allclose(x[:40], x[40:80], atol=1e-12)
    assert x.max() == pytest.approx(1.0, abs=1e-3)


def test_sine_rejects_bad_period():
    with pytest.raises(ValueError):
        gen_sine(period=0)
