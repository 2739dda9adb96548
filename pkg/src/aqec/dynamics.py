"""Time evolution: Schrodinger propagation for pulse design, Lindblad
master-equation propagation for lossy pulse-reset cycles.

The workhorse is an adaptive Dormand-Prince 5(4) integrator operating on
complex arrays of any shape. Evolutions are split at every phase boundary
of a cycle schedule so a discontinuous rate change is never straddled by a
step. Reset phases (constant Hamiltonian, constant rates) reuse a cached
exact propagator exp(S * t_r) of the vectorized Lindblad generator, which
is orders of magnitude faster than stepping through them; the two routes
agree to integrator tolerance (see tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .hilbert import Operator, QuantumState, TensorSpace
from .models import LindbladChannel, ModelTerms
from .pulse import CycleSchedule, PulseShape, evaluate

UNITARY_RTOL = 1e-10
LINDBLAD_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
EIG_RAISE = -1e-7    # density eigenvalue below this aborts the run
EIG_CLIP = -1e-9     # below this (but above EIG_RAISE) eigenvalues are clipped


class IntegrationError(RuntimeError):
    """The adaptive integrator could not meet the requested tolerance."""


class IntegrityError(RuntimeError):
    """A physical invariant (trace, positivity) failed beyond tolerance."""


# --- Dormand-Prince 5(4) ------------------------------------------------------

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


def _initial_step(f, t0, y0, f0, direction, rtol, atol, span):
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / sc) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / sc) ** 2))
    h0 = 1e-6 * span if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = f(t0 + h0 * direction, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def adaptive_rk(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    rtol: float,
    atol: float = DEFAULT_ATOL,
    record_times: Sequence[float] | None = None,
    post_step: Callable[[np.ndarray], np.ndarray] | None = None,
    max_steps: int = 5_000_000,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Integrate y' = f(t, y) with the embedded Dormand-Prince 5(4) pair.

    Steps are clamped to land exactly on every entry of ``record_times``
    (plus the endpoint), where the state is recorded. ``post_step`` is
    applied to the state after every accepted step (used to re-Hermitize
    density matrices). Raises IntegrationError with the achieved error if
    the step size underflows or the step budget is exhausted.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ValueError("backward integration not supported")
    y = np.array(y0, dtype=complex)
    if record_times is None:
        record = [t1]
    else:
        record = sorted({float(t) for t in record_times} | {t1})
        if record[0] < t0 or record[-1] > t1 + 1e-12:
            raise ValueError("record times outside t_span")
    out_t: list[float] = []
    out_y: list[np.ndarray] = []
    if record and abs(record[0] - t0) <= 1e-12 * max(1.0, abs(t0)):
        out_t.append(t0)
        out_y.append(y.copy())
        record = record[1:]
    if t1 == t0:
        return np.array(out_t), out_y

    span = t1 - t0
    t = t0
    k1 = f(t, y)
    h = _initial_step(f, t, y, k1, 1.0, rtol, atol, span)
    h_min = 1e-14 * span
    fsal_valid = True
    next_record = 0
    steps = 0
    err_norm = 0.0
    while t < t1 - 1e-14 * span:
        if steps >= max_steps:
            raise IntegrationError(
                f"step budget {max_steps} exhausted at t={t:.6g} "
                f"(last error norm {err_norm:.3g})")
        target = record[next_record] if next_record < len(record) else t1
        h_trial = min(h, target - t)
        clamped = h_trial < h
        if not fsal_valid:
            k1 = f(t, y)
            fsal_valid = True
        ks = [k1]
        for i in range(1, 7):
            yi = y + h_trial * sum(a * k for a, k in zip(_A[i], ks))
            ks.append(f(t + _C[i] * h_trial, yi))
        y_new = y + h_trial * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
        err = h_trial * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean(np.abs(err / sc) ** 2)))
        steps += 1
        if err_norm <= 1.0:
            t = t + h_trial
            y = y_new
            if post_step is not None:
                y = post_step(y)
                fsal_valid = False
            else:
                k1 = ks[6]
            if next_record < len(record) and abs(t - record[next_record]) <= 1e-12 * max(1.0, abs(t)):
                out_t.append(record[next_record])
                out_y.append(y.copy())
                next_record += 1
            factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
            h_next = h_trial * factor
            h = max(h, h_next) if clamped else h_next
        else:
            h = h_trial * max(0.2, 0.9 * err_norm ** -0.2)
            fsal_valid = fsal_valid and post_step is None
            if h < h_min:
                raise IntegrationError(
                    f"step size underflow at t={t:.6g} (error norm {err_norm:.3g})")
    return np.array(out_t), out_y


# --- problem containers ---------------------------------------------------------

Coupling = Callable[[float], tuple[float, float]]
RateFn = Callable[[float], float]


@dataclass(frozen=True)
class EvolutionProblem:
    """One evolution: Hamiltonian terms, coupling, channels, window, state.

    ``coupling`` maps t (ns) to the two quadrature amplitudes; None means
    the static Hamiltonian alone. Channel rates may be constants or
    callables of t; they must be nonnegative wherever sampled.
    """

    h_static: Operator
    h_x: Operator | None
    h_y: Operator | None
    coupling: Coupling | None
    channels: tuple[tuple[Operator, RateFn | float], ...]
    t_span: tuple[float, float]
    initial: QuantumState

    def __init__(self, h_static, h_x, h_y, coupling, channels, t_span, initial):
        dims = h_static.space.dims
        for op in (h_x, h_y):
            if op is not None and op.space.dims != dims:
                raise ValueError("coupling operators live on a different space")
        if initial.space.dims != dims:
            raise ValueError("initial state lives on a different space")
        channels = tuple((op, rate) for op, rate in channels)
        for op, _ in channels:
            if op.space.dims != dims:
                raise ValueError("channel operator lives on a different space")
        if not float(t_span[1]) >= float(t_span[0]):
            raise ValueError("t_span must be ordered")
        object.__setattr__(self, "h_static", h_static)
        object.__setattr__(self, "h_x", h_x)
        object.__setattr__(self, "h_y", h_y)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "t_span", (float(t_span[0]), float(t_span[1])))
        object.__setattr__(self, "initial", initial)


@dataclass
class Trajectory:
    """Recorded evolution: strictly increasing times plus states."""

    times: np.ndarray
    states: list[QuantumState]
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.states) != len(self.times):
            raise ValueError("times and states length mismatch")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> QuantumState:
        if not self.states:
            raise ValueError("empty trajectory")
        return self.states[-1]


Observable = Operator | QuantumState


def _eval_observable(obs: Observable, state: QuantumState) -> float:
    from .hilbert import expectation, state_fidelity
    if isinstance(obs, Operator):
        return expectation(obs, state)
    return state_fidelity(state, obs)


def _attach_observables(traj: Trajectory,
                        observables: Mapping[str, Observable] | None) -> Trajectory:
    if observables:
        for name, obs in observables.items():
            traj.observables[name] = np.array(
                [_eval_observable(obs, s) for s in traj.states])
    return traj


# --- Hamiltonian/Lindblad right-hand sides ----------------------------------------

def _hamiltonian_fn(problem: EvolutionProblem) -> Callable[[float], np.ndarray]:
    h0 = problem.h_static.matrix
    if problem.coupling is None:
        return lambda t: h0
    hx = problem.h_x.matrix if problem.h_x is not None else None
    hy = problem.h_y.matrix if problem.h_y is not None else None
    coupling = problem.coupling

    def h_of_t(t: float) -> np.ndarray:
        ox, oy = coupling(t)
        h = h0
        if hx is not None and ox != 0.0:
            h = h + ox * hx
        if hy is not None and oy != 0.0:
            h = h + oy * hy
        return h

    return h_of_t


def _rate_fn(rate: RateFn | float) -> RateFn:
    if callable(rate):
        return rate
    value = float(rate)
    return lambda t: value


def _sanitize_density(rho: np.ndarray) -> np.ndarray:
    """Hermitize; clip eigenvalues in [EIG_RAISE, EIG_CLIP); raise below."""
    rho = (rho + rho.conj().T) / 2
    w = np.linalg.eigvalsh(rho)
    if w[0] < EIG_RAISE:
        raise IntegrityError(
            f"density eigenvalue {w[0]:.3e} below {EIG_RAISE}; "
            "integration tolerance failure")
    if w[0] < EIG_CLIP:
        w_full, v = np.linalg.eigh(rho)
        w_full = np.clip(w_full, 0.0, None)
        rho = (v * w_full) @ v.conj().T
        rho = rho / np.trace(rho).real
    return rho


# --- public evolutions ---------------------------------------------------------

def evolve_unitary(problem: EvolutionProblem,
                   record_times: Sequence[float] | None = None,
                   observables: Mapping[str, Observable] | None = None,
                   rtol: float = UNITARY_RTOL,
                   atol: float = DEFAULT_ATOL) -> Trajectory:
    """Integrate i psi' = H(t) psi (hbar = 1) for a pure initial state."""
    psi0 = problem.initial.vector()
    h_of_t = _hamiltonian_fn(problem)

    def rhs(t, psi):
        return -1j * (h_of_t(t) @ psi)

    times, ys = adaptive_rk(rhs, problem.t_span, psi0, rtol=rtol, atol=atol,
                            record_times=record_times)
    drift = abs(np.linalg.norm(ys[-1]) - 1.0)
    if drift > 1e-8:
        raise IntegrationError(f"norm drift {drift:.3e} exceeds 1e-8")
    space = problem.initial.space
    states = [QuantumState(space, y / np.linalg.norm(y)) for y in ys]
    return _attach_observables(Trajectory(times, states), observables)


def evolve_lindblad(problem: EvolutionProblem,
                    record_times: Sequence[float] | None = None,
                    observables: Mapping[str, Observable] | None = None,
                    rtol: float = LINDBLAD_RTOL,
                    atol: float = DEFAULT_ATOL) -> Trajectory:
    """Integrate the Lindblad master equation with time-varying rates.

    Pure initial states are promoted to projectors. The state is
    re-Hermitized after every accepted step; trace drift beyond 1e-8 or an
    eigenvalue below -1e-7 at a record time raises IntegrityError.
    """
    rho0 = problem.initial.density()
    ops = [(op.matrix, op.matrix.conj().T, op.matrix.conj().T @ op.matrix,
            _rate_fn(rate)) for op, rate in problem.channels]
    h0 = problem.h_static.matrix
    hx = problem.h_x.matrix if problem.h_x is not None else None
    hy = problem.h_y.matrix if problem.h_y is not None else None
    coupling = problem.coupling

    # rho' = K rho + rho K^dag + sum_k g_k L_k rho L_k^dag,
    # with K = -iH(t) - (1/2) sum_k g_k L_k^dag L_k
    def rhs(t, rho):
        k = -1j * h0
        if coupling is not None:
            ox, oy = coupling(t)
            if hx is not None and ox != 0.0:
                k = k + (-1j * ox) * hx
            if hy is not None and oy != 0.0:
                k = k + (-1j * oy) * hy
        rates = []
        for _, _, lsq, rate in ops:
            g = rate(t)
            if g < 0:
                raise ValueError(f"negative channel rate {g} at t={t}")
            rates.append(g)
            if g != 0.0:
                k = k - (0.5 * g) * lsq
        out = k @ rho
        out = out + out.conj().T
        for (lop, lop_dag, _, _), g in zip(ops, rates):
            if g != 0.0:
                out = out + g * (lop @ rho @ lop_dag)
        return out

    def hermitize(rho):
        return (rho + rho.conj().T) / 2

    times, ys = adaptive_rk(rhs, problem.t_span, rho0, rtol=rtol, atol=atol,
                            record_times=record_times, post_step=hermitize)
    drift = abs(np.trace(ys[-1]).real - 1.0)
    if drift > 1e-8:
        raise IntegrityError(f"trace drift {drift:.3e} exceeds 1e-8")
    space = problem.initial.space
    states = [QuantumState(space, _sanitize_density(y)) for y in ys]
    return _attach_observables(Trajectory(times, states), observables)


# --- vectorized generator, exact segment propagation --------------------------------

def lindblad_superoperator(h: np.ndarray,
                           channels: Sequence[tuple[np.ndarray, float]]) -> np.ndarray:
    """Row-major-vec generator: vec(rho') = S vec(rho) for constant H, rates."""
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    s = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for lop, rate in channels:
        if rate == 0.0:
            continue
        lsq = lop.conj().T @ lop
        s += rate * (np.kron(lop, lop.conj())
                     - 0.5 * (np.kron(lsq, eye) + np.kron(eye, lsq.T)))
    return s


def segment_propagator(h: np.ndarray,
                       channels: Sequence[tuple[np.ndarray, float]],
                       dt: float) -> np.ndarray:
    """exp(S dt) for a time-independent Lindblad segment."""
    return scipy.linalg.expm(lindblad_superoperator(h, channels) * dt)


def apply_propagator(e: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    out = (e @ rho.reshape(-1)).reshape(d, d)
    return (out + out.conj().T) / 2


def evolve_constant_lindblad(h: Operator,
                             channels: Sequence[tuple[Operator, float]],
                             initial: QuantumState,
                             times: Sequence[float],
                             observables: Mapping[str, Observable] | None = None
                             ) -> Trajectory:
    """Exact expm-stepped evolution for constant H and rates.

    ``times`` must be increasing and start at the initial time (offset 0);
    propagators are cached per distinct step, so uniform grids cost one
    matrix exponential regardless of length.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("need at least one time")
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and increase strictly")
    mats = [(op.matrix, float(rate)) for op, rate in channels]
    cache: dict[float, np.ndarray] = {}
    rho = initial.density()
    space = initial.space
    states = [QuantumState(space, _sanitize_density(rho))]
    for dt in np.diff(times):
        key = round(float(dt), 12)
        if key not in cache:
            cache[key] = segment_propagator(h.matrix, mats, float(dt))
        rho = apply_propagator(cache[key], rho)
        states.append(QuantumState(space, _sanitize_density(rho)))
    return _attach_observables(Trajectory(times, states), observables)


def steady_state(h: Operator,
                 channels: Sequence[tuple[Operator, float]]) -> QuantumState:
    """Null vector of the Lindblad generator, normalized to unit trace."""
    mats = [(op.matrix, float(rate)) for op, rate in channels]
    s = lindblad_superoperator(h.matrix, mats)
    d = h.matrix.shape[0]
    a = np.vstack([s, np.eye(d, dtype=complex).reshape(1, -1)])
    b = np.zeros(d * d + 1, dtype=complex)
    b[-1] = 1.0
    rho, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = rho.reshape(d, d)
    return QuantumState(h.space, _sanitize_density(rho))


# --- pulse-reset cycles ----------------------------------------------------------

def evolve_cycles(terms: ModelTerms,
                  pulse: PulseShape,
                  schedule: CycleSchedule,
                  initial: QuantumState,
                  observables: Mapping[str, Observable] | None = None,
                  rtol: float = LINDBLAD_RTOL,
                  use_expm_reset: bool = True) -> Trajectory:
    """Alternate pulse and reset phases of the schedule under Lindblad flow.

    Each phase is integrated separately so the piecewise-constant rates are
    never straddled by a step; states are recorded at every phase boundary.
    Reset phases all share one exact propagator when ``use_expm_reset``.
    """
    if abs(schedule.t_p - pulse.t_p) > 1e-12:
        raise ValueError("schedule t_p differs from pulse duration")
    space = terms.space
    rho = initial.density()
    states = [QuantumState(space, _sanitize_density(rho))]
    times = [0.0]
    if schedule.n_cycles == 0:
        traj = Trajectory(np.array([0.0]), states)
        return _attach_observables(traj, observables)

    pulse_channels = tuple(
        (c.op, schedule.rate_pulse[c.label]) for c in terms.channels)
    reset_channels = tuple(
        (c.op, schedule.rate_reset[c.label]) for c in terms.channels)
    reset_prop = None
    if use_expm_reset and schedule.t_r > 0:
        reset_prop = segment_propagator(
            terms.h_static.matrix,
            [(op.matrix, r) for op, r in reset_channels], schedule.t_r)

    t_abs = 0.0
    for _ in range(schedule.n_cycles):
        state = QuantumState(space, _sanitize_density(rho))
        prob = EvolutionProblem(
            h_static=terms.h_static, h_x=terms.h_x, h_y=terms.h_y,
            coupling=lambda t: evaluate(pulse, t),
            channels=pulse_channels,
            t_span=(0.0, schedule.t_p), initial=state)
        seg = evolve_lindblad(prob, rtol=rtol)
        rho = seg.final.density()
        t_abs += schedule.t_p
        times.append(t_abs)
        states.append(seg.final)
        if schedule.t_r > 0:
            if reset_prop is not None:
                rho = apply_propagator(reset_prop, rho)
            else:
                state = QuantumState(space, _sanitize_density(rho))
                prob = EvolutionProblem(
                    h_static=terms.h_static, h_x=None, h_y=None, coupling=None,
                    channels=reset_channels,
                    t_span=(0.0, schedule.t_r), initial=state)
                rho = evolve_lindblad(prob, rtol=rtol).final.density()
            t_abs += schedule.t_r
            times.append(t_abs)
            states.append(QuantumState(space, _sanitize_density(rho)))
    return _attach_observables(Trajectory(np.array(times), states), observables)


def constant_problem(terms: ModelTerms, omega_x: float, omega_y: float,
                     rates: Mapping[str, float], t_span, initial
                     ) -> EvolutionProblem:
    """Fixed-coupling, fixed-rate problem from model terms."""
    return EvolutionProblem(
        h_static=terms.h_static, h_x=terms.h_x, h_y=terms.h_y,
        coupling=(lambda t: (omega_x, omega_y)),
        channels=tuple((c.op, float(rates[c.label])) for c in terms.channels),
        t_span=t_span, initial=initial)


# --- exports ---------------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory, path) -> None:
    """time_ns plus one column per observable, 12 significant digits."""
    names = sorted(traj.observables)
    with open(path, "w") as f:
        f.write(",".join(["time_ns"] + names) + "\n")
        for i, t in enumerate(traj.times):
            row = [f"{t:.12g}"] + [f"{traj.observables[n][i]:.12g}" for n in names]
            f.write(",".join(row) + "\n")


def dump_states(traj: Trajectory, path) -> None:
    """Full-state JSON dump (debugging aid, not a compact format)."""
    import json
    recs = []
    for t, s in zip(traj.times, traj.states):
        recs.append({
            "time_ns": float(t),
            "pure": bool(s.is_pure),
            "re": np.real(s.data).tolist(),
            "im": np.imag(s.data).tolist(),
        })
    with open(path, "w") as f:
        json.dump(recs, f)
        f.write("\n")
