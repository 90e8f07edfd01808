"""Small generated scenarios for property tests and solver cross-checks."""

from __future__ import annotations

import numpy as np

from .scenario import ControlConfig, DemandSet, FdParams, Highway, Scenario

__all__ = ["constant_demand_scenario", "random_scenario"]


def constant_demand_scenario(
    n: int = 1,
    K_c: int = 1,
    steps_per_control: int = 6,
    demand_a: float = 3000.0,
    demand_b: float = 3000.0,
    length: float = 0.5,
    T_s: float = 10.0,
    fd: FdParams | None = None,
    rho0_a: float | np.ndarray = 0.0,
    rho0_b: float | np.ndarray = 0.0,
    eps_bounds: tuple[float, float] = (0.16, 0.84),
    eps_init: float = 0.5,
    **control,
) -> Scenario:
    """Homogeneous stretch with constant entry demands and no ramps.

    Extra keyword arguments (``lambda_d``, ``w1`` ...) go to :class:`ControlConfig`.
    """
    fd = fd or FdParams(100.0, 12.0, 12000.0)
    K = K_c * steps_per_control
    highway = Highway(
        lengths=np.full(n, float(length)),
        exit_rate_a=np.zeros(n),
        exit_rate_b=np.zeros(n),
        has_onramp_a=np.zeros(n, bool),
        has_onramp_b=np.zeros(n, bool),
    )
    demands = DemandSet(np.full(K, float(demand_a)), np.full(K, float(demand_b)), np.zeros((n, K)), np.zeros((n, K)))
    ctrl = ControlConfig(T_s=T_s, T_c_s=T_s * steps_per_control, K=K, eps_min=eps_bounds[0],
                         eps_max=eps_bounds[1], eps_init=eps_init, **control)
    return Scenario(highway, fd, demands, ctrl, np.broadcast_to(rho0_a, (n,)).astype(float),
                    np.broadcast_to(rho0_b, (n,)).astype(float), label=f"const-n{n}-Kc{K_c}")


def random_scenario(
    rng: np.random.Generator | int,
    n: int | None = None,
    K_c: int | None = None,
    steps_per_control: int | None = None,
    max_demand: float = 0.8,
    congested_start: bool = True,
    capacity_drop: bool | None = None,
) -> Scenario:
    """Random but valid scenario.

    Lengths keep the free-flow Courant number below one; entry demands are
    piecewise constant per control step up to ``max_demand * q_cap``;
    initial densities may reach 90 % of the directional jam density when
    ``congested_start``.
    """
    rng = np.random.default_rng(rng)
    fd = FdParams(100.0, 12.0, 12000.0)
    n = int(rng.integers(1, 7)) if n is None else n
    K_c = int(rng.integers(1, 6)) if K_c is None else K_c
    m = int(rng.integers(1, 7)) if steps_per_control is None else steps_per_control
    K = K_c * m
    T_s = 10.0
    lengths = rng.uniform(0.3, 1.0, n)
    beta = lambda: np.where(rng.random(n) < 0.3, rng.uniform(0.0, 0.2, n), 0.0)  # noqa: E731
    ramps_a, ramps_b = rng.random(n) < 0.3, rng.random(n) < 0.3
    highway = Highway(lengths, beta(), beta(), ramps_a, ramps_b)

    def profile():
        levels = rng.uniform(0.0, max_demand * fd.q_cap, K_c)
        return np.repeat(levels, m)

    def ramp(flags):
        r = np.repeat(rng.uniform(0.0, 1500.0, (n, K_c)), m, axis=1)
        return r * flags[:, None]

    demands = DemandSet(profile(), profile(), ramp(ramps_a), ramp(ramps_b))
    if capacity_drop is None:
        capacity_drop = bool(rng.random() < 0.5)
    lo = float(rng.uniform(0.1, 0.3))
    ctrl = ControlConfig(
        T_s=T_s, T_c_s=T_s * m, K=K, eps_min=lo, eps_max=1.0 - lo, eps_init=0.5,
        lambda_d=0.4 if capacity_drop else 0.0, lambda_r=0.7 if capacity_drop else 1.0,
    )
    top = 0.9 * 0.5 * fd.rho_max if congested_start else 0.9 * 0.5 * fd.rho_cr
    rho0 = lambda: rng.uniform(0.0, top, n)  # noqa: E731
    return Scenario(highway, fd, demands, ctrl, rho0(), rho0(), label="random")
