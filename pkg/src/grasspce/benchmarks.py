"""Deterministic benchmark problems: hypersphere map and two ODE systems.

Each problem pairs an input distribution with a generator mapping an input
vector to a matrix response.  The ODE systems are integrated with a
fixed-step classical fourth-order Runge-Kutta scheme whose right-hand sides
accept batched states, so whole experimental designs integrate in one pass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import serialize
from .exceptions import ConvergenceError
from .pce import UniformDistribution
from .surrogate import Dataset


@dataclass(frozen=True)
class ODESpec:
    """A fixed-step initial value problem.

    ``rhs(t, state, params)`` must accept states of shape (state_dim,) or
    (state_dim, batch) and return the same shape.
    """

    rhs: Callable
    t0: float
    t_end: float
    n_steps: int
    initial_state: np.ndarray

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not self.t_end > self.t0:
            raise ValueError("t_end must exceed t0")
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=float))

    @property
    def state_dim(self) -> int:
        return self.initial_state.shape[0]


def rk4_solve(spec: ODESpec, params=None) -> np.ndarray:
    """Classical RK4 with step h = (t_end - t0) / n_steps.

    Column j of the returned (state_dim, n_steps) matrix is the state after
    j+1 steps: the trajectory covers (t0, t_end] and excludes the initial
    state.
    """
    traj = _rk4_batched(spec, params, spec.initial_state[:, None])
    return traj[:, 0, :]


def _rk4_batched(spec: ODESpec, params, states: np.ndarray) -> np.ndarray:
    """Integrate a (state_dim, batch) block of initial states; returns
    (state_dim, batch, n_steps)."""
    h = (spec.t_end - spec.t0) / spec.n_steps
    y = states.astype(float).copy()
    out = np.empty(y.shape + (spec.n_steps,))
    t = spec.t0
    for j in range(spec.n_steps):
        k1 = spec.rhs(t, y, params)
        k2 = spec.rhs(t + h / 2.0, y + (h / 2.0) * k1, params)
        k3 = spec.rhs(t + h / 2.0, y + (h / 2.0) * k2, params)
        k4 = spec.rhs(t + h, y + h * k3, params)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise ConvergenceError(f"integration produced a non-finite state at step {j}")
        out[..., j] = y
        t += h
    return out


# --------------------------------------------------------------------------
# hypersphere

def sphere_response(theta) -> np.ndarray:
    """Cartesian point for polar inputs (r, theta, phi), as a 3x1 matrix."""
    r, th, phi = np.asarray(theta, dtype=float).ravel()
    return np.array([
        [r * np.cos(phi) * np.cos(th)],
        [r * np.cos(phi) * np.sin(th)],
        [r * np.sin(phi)],
    ])


def _sphere_batch(thetas: np.ndarray) -> np.ndarray:
    r, th = thetas[:, 0], thetas[:, 1]
    out = np.empty((thetas.shape[0], 3, 1))
    out[:, 0, 0] = r * np.cos(th) * np.cos(th)
    out[:, 1, 0] = r * np.cos(th) * np.sin(th)
    out[:, 2, 0] = r * np.sin(th)
    return out


# --------------------------------------------------------------------------
# Lotka-Volterra predator-prey system

LV_GAMMA = 1.50    # predator death rate
LV_DELTA = 0.75    # predator reproduction per prey
LV_INITIAL = (10.0, 5.0)
LV_ALPHA_RANGE = (0.90, 1.0)
LV_BETA_RANGE = (0.10, 0.15)
LV_T_END = 25.0
LV_N_STEPS = 512


def _lv_rhs(t, state, params):
    alpha, beta = params
    u, v = state[0], state[1]
    return np.stack([alpha * u - beta * u * v, LV_DELTA * u * v - LV_GAMMA * v])


def lotka_volterra_response(alpha: float, beta: float) -> np.ndarray:
    """Prey/predator trajectories over (0, 25] in 512 steps; shape 2x512."""
    if not (LV_ALPHA_RANGE[0] <= alpha <= LV_ALPHA_RANGE[1]
            and LV_BETA_RANGE[0] <= beta <= LV_BETA_RANGE[1]):
        warnings.warn(
            f"(alpha, beta) = ({alpha}, {beta}) outside the nominal parameter box",
            stacklevel=2,
        )
    spec = ODESpec(_lv_rhs, t0=0.0, t_end=LV_T_END, n_steps=LV_N_STEPS,
                   initial_state=np.array(LV_INITIAL))
    return rk4_solve(spec, (alpha, beta))


def _lv_batch(thetas: np.ndarray) -> np.ndarray:
    n = thetas.shape[0]
    spec = ODESpec(_lv_rhs, t0=0.0, t_end=LV_T_END, n_steps=LV_N_STEPS,
                   initial_state=np.array(LV_INITIAL))
    states = np.tile(np.array(LV_INITIAL)[:, None], (1, n))
    traj = _rk4_batched(spec, (thetas[:, 0], thetas[:, 1]), states)
    return np.moveaxis(traj, 1, 0)  # (n, 2, n_steps)


# --------------------------------------------------------------------------
# continuous stirred-tank reactor

CSTR_PARAMS = {
    "c_f": 1.0,       # feed concentration (gmol/lt)
    "T_f": 350.0,     # feed temperature (K)
    "E_a": 72750.0,   # activation energy (J/gmol)
    "k_0": 7.2e7,     # pre-exponential factor (1/min)
    "R": 8.314,       # gas constant
    "V": 100.0,       # reactor volume (lt)
    "rho": 1000.0,    # density (g/lt)
    "C_p": 0.239,     # heat capacity (J/g/K)
    "dH_R": -5.0e4,   # reaction enthalpy (J/gmol)
    "UA": 5.0e4,      # heat transfer coefficient (J/min/K)
    "q": 100.0,       # feed flowrate (lt/min)
}
CSTR_INITIAL = (0.5, 350.0)
CSTR_TC_RANGE = (305.0, 310.0)
CSTR_T_END = 5.0
CSTR_N_STEPS = 500


def _cstr_rhs(t, state, params):
    tc = params
    c, temp = state[0], state[1]
    pr = CSTR_PARAMS
    k = pr["k_0"] * np.exp(-pr["E_a"] / (pr["R"] * temp))
    w = pr["rho"] * pr["q"]  # feed mass flow closes the energy balance
    dc = pr["q"] * (pr["c_f"] - c) / pr["V"] - k * c
    dT = (
        w * pr["C_p"] * (pr["T_f"] - temp)
        + (-pr["dH_R"]) * pr["V"] * k * c
        + pr["UA"] * (tc - temp)
    ) / (pr["V"] * pr["rho"] * pr["C_p"])
    return np.stack([dc, dT])


def cstr_response(tc: float) -> np.ndarray:
    """Concentration/temperature trajectories over 5 minutes at 0.01-minute
    steps; shape 2x500."""
    if not CSTR_TC_RANGE[0] <= tc <= CSTR_TC_RANGE[1]:
        warnings.warn(f"Tc = {tc} outside the nominal cooling range", stacklevel=2)
    spec = ODESpec(_cstr_rhs, t0=0.0, t_end=CSTR_T_END, n_steps=CSTR_N_STEPS,
                   initial_state=np.array(CSTR_INITIAL))
    return rk4_solve(spec, tc)


def _cstr_batch(thetas: np.ndarray) -> np.ndarray:
    n = thetas.shape[0]
    spec = ODESpec(_cstr_rhs, t0=0.0, t_end=CSTR_T_END, n_steps=CSTR_N_STEPS,
                   initial_state=np.array(CSTR_INITIAL))
    states = np.tile(np.array(CSTR_INITIAL)[:, None], (1, n))
    traj = _rk4_batched(spec, thetas[:, 0], states)
    return np.moveaxis(traj, 1, 0)


# --------------------------------------------------------------------------
# problem registry and dataset generation

@dataclass(frozen=True)
class BenchmarkProblem:
    """A named input distribution plus a deterministic response generator."""

    name: str
    distribution: UniformDistribution
    response_shape: tuple
    generator: Callable           # theta vector -> response matrix
    batch_generator: Callable     # (N, d) inputs -> (N, m_f, n_f) responses


def _sphere_single(theta):
    r, th = np.asarray(theta, dtype=float).ravel()
    return sphere_response((r, th, th))


PROBLEMS = {
    "sphere": BenchmarkProblem(
        name="sphere",
        distribution=UniformDistribution(lows=np.array([0.0, 0.0]),
                                         highs=np.array([2.0, np.pi])),
        response_shape=(3, 1),
        generator=_sphere_single,
        batch_generator=_sphere_batch,
    ),
    "lotka-volterra": BenchmarkProblem(
        name="lotka-volterra",
        distribution=UniformDistribution(lows=np.array([LV_ALPHA_RANGE[0], LV_BETA_RANGE[0]]),
                                         highs=np.array([LV_ALPHA_RANGE[1], LV_BETA_RANGE[1]])),
        response_shape=(2, LV_N_STEPS),
        generator=lambda theta: lotka_volterra_response(*np.asarray(theta, dtype=float).ravel()),
        batch_generator=_lv_batch,
    ),
    "cstr": BenchmarkProblem(
        name="cstr",
        distribution=UniformDistribution(lows=np.array([CSTR_TC_RANGE[0]]),
                                         highs=np.array([CSTR_TC_RANGE[1]])),
        response_shape=(2, CSTR_N_STEPS),
        generator=lambda theta: cstr_response(float(np.asarray(theta, dtype=float).ravel()[0])),
        batch_generator=_cstr_batch,
    ),
}


def get_problem(name: str) -> BenchmarkProblem:
    try:
        return PROBLEMS[name]
    except KeyError:
        valid = ", ".join(sorted(PROBLEMS))
        raise KeyError(f"unknown problem {name!r}; valid problems: {valid}") from None


def generate_dataset(problem: BenchmarkProblem, n: int, seed: int) -> Dataset:
    """Seeded i.i.d. experimental design plus responses; deterministic in seed."""
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    rng = np.random.default_rng(seed)
    thetas = problem.distribution.sample(rng, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # in-distribution draws cannot extrapolate
        responses = problem.batch_generator(thetas)
    return Dataset(thetas=thetas, responses=responses, distribution=problem.distribution)


def load_snapshot_dataset(path) -> Dataset:
    """Read an externally produced dataset container (e.g. PDE snapshots)."""
    return serialize.load_dataset(path)


def save_dataset(dataset: Dataset, path):
    """Write a dataset container; see :mod:`grasspce.serialize` for the format."""
    serialize.save_dataset(dataset, path)
