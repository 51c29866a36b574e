"""Time evolution along a schedule: unitary, Gaussian and dissipative."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
import warnings

import numpy as np
from scipy import integrate, linalg

from .errors import (ConfigError, NoConvergence, OscillatoryQuadratureWarning, PositivityError,
                     PositivityWarning, StepRejection, TruncationError)
from .fockspace import (DensityOperator, FockBasis, PureState, build_ladder_ops,
                        build_spin_ops, build_squeeze_op, parity_diagonal)
from .gaussian import GaussianState
from .models import AqrmParams, jcm_np_solution, np_solution, quadratic_mode
from .schedules import Schedule, evolution_grid, ramp_rate

LEAK_TOL = 1e-6


@dataclass
class Trajectory:
    times: np.ndarray
    observables: dict
    states: list | None = None
    certificate: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1] if self.states else None

    def column(self, name):
        return np.asarray(self.observables[name])


def _samples(schedule: Schedule, sample_times):
    if sample_times is None:
        return np.asarray(schedule.t, float)
    s = np.asarray(sample_times, float)
    if np.any(np.diff(s) <= 0):
        raise ConfigError("sample times must be strictly increasing")
    return s


def _top_weight(probs_boson, n_max):
    """Population in the top decile of the retained Fock ladder."""
    cut = int(math.floor(0.9 * (n_max + 1)))
    return float(probs_boson[..., cut:].sum())


def _boson_probs(vec, basis):
    p = np.abs(vec) ** 2
    if basis.with_spin:
        p = p[: basis.n_boson] + p[basis.n_boson:]
    return p


# unitary evolution

def _unitary_pass(builder, schedule, psi0, grid, omega):
    vec = np.array(psi0.vector, complex)
    states = {0: vec.copy()}
    for i in range(len(grid) - 1):
        ta, tb = grid[i], grid[i + 1]
        p = schedule.params_at(0.5 * (ta + tb), omega)
        w, V = linalg.eigh(builder(p).matrix)
        vec = V @ (np.exp(-1j * w * (tb - ta)) * (V.conj().T @ vec))
        states[i + 1] = vec
    return states


def _phase_dist(a, b):
    ov = np.vdot(a, b)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(b - ph * a))


def schrodinger_evolve(builder, schedule: Schedule, psi0: PureState, sample_times=None,
                       omega: float | None = None, certify: bool = True, keep_states: bool = True,
                       grid=None, dv: float = 1e-3, dphase: float = 0.1) -> Trajectory:
    """Midpoint exponential stepping: H frozen at each step midpoint and exponentiated exactly.

    With `certify` the run is repeated on grids halved twice; the ratio of the
    successive final-state differences must reach 3.5 (second order) unless
    the differences are already at round-off.
    """
    basis = psi0.basis
    samples = _samples(schedule, sample_times)
    if grid is None:
        grid = evolution_grid(schedule, samples, dv=dv, dphase=dphase)
    grid = np.asarray(grid, float)
    idx = np.searchsorted(grid, samples)
    if np.any(idx >= len(grid)) or np.any(np.abs(grid[np.minimum(idx, len(grid) - 1)] - samples) > 1e-9 * max(1.0, grid[-1])):
        raise ConfigError("sample times must lie on the integration grid")
    levels = [grid]
    if certify:
        for _ in range(2):
            g = levels[-1]
            levels.append(np.sort(np.concatenate([g, 0.5 * (g[1:] + g[:-1])])))
    runs = []
    for g in levels:
        st = _unitary_pass(builder, schedule, psi0, g, omega)
        runs.append((g, st))
    cert = {"n_steps": len(grid) - 1}
    if certify:
        finals = [st[len(g) - 1] for g, st in runs]
        e1 = _phase_dist(finals[0], finals[1])
        e2 = _phase_dist(finals[1], finals[2])
        ratio = e1 / e2 if e2 > 0 else math.inf
        cert.update({"err_h": e1, "err_h2": e2, "order_ratio": ratio})
        if e2 > 1e-12 and ratio < 3.5:
            raise StepRejection(f"order certificate failed: ratio {ratio:.2f} < 3.5")
    g, st = runs[-1]
    fine_idx = np.searchsorted(g, samples)
    fine_idx = np.minimum(fine_idx, len(g) - 1)
    vecs = [st[i] for i in fine_idx]
    obs = _pure_observables(builder, schedule, samples, vecs, basis, omega)
    leak = float(np.max(obs["top_weight"]))
    cert["norm_leakage"] = leak
    if leak > LEAK_TOL:
        raise TruncationError(f"population {leak:.2e} reached the top of the Fock ladder")
    states = [PureState(v, basis, norm_leakage=leak, normalize=False) for v in vecs] if keep_states else None
    return Trajectory(samples, obs, states, cert)


def _pure_observables(builder, schedule, samples, vecs, basis, omega):
    n = basis.photon_numbers()
    a, _, _ = build_ladder_ops(basis)
    par = parity_diagonal(basis)
    out = {k: [] for k in ("mean_n", "var_n", "x", "p", "fid_gs", "deficit", "c2_sq", "parity",
                           "norm_dev", "top_weight", "g1", "g2")}
    if basis.with_spin:
        out["sigma_z"] = []
        sz = basis.spin_z()
    for t, v in zip(samples, vecs):
        p = schedule.params_at(t, omega)
        prob = np.abs(v) ** 2
        mean = float(prob @ n)
        out["mean_n"].append(mean)
        out["var_n"].append(float(prob @ (n - mean) ** 2))
        am = complex(np.vdot(v, a.matrix @ v))
        out["x"].append(math.sqrt(2) * am.real)
        out["p"].append(math.sqrt(2) * am.imag)
        w, V = linalg.eigh(builder(p).matrix)
        proj = np.abs(V.conj().T @ v) ** 2
        out["fid_gs"].append(float(proj[0]))
        out["deficit"].append(float(proj[1:].sum()))
        out["c2_sq"].append(float(proj[2]) if len(proj) > 2 else 0.0)
        out["parity"].append(float(par @ prob))
        out["norm_dev"].append(abs(float(np.linalg.norm(v)) - 1.0))
        out["top_weight"].append(_top_weight(_boson_probs(v, basis), basis.n_max))
        g1, g2 = _couplings_of(p)
        out["g1"].append(g1)
        out["g2"].append(g2)
        if basis.with_spin:
            out["sigma_z"].append(float(sz @ prob))
    return {k: np.asarray(val) for k, val in out.items()}


def _couplings_of(p):
    if isinstance(p, AqrmParams):
        return p.g1, p.g2
    return p.g_t, p.h


# Gaussian engine

def ground_gaussian(A: float, c: float) -> GaussianState:
    gamma, _ = quadratic_mode(A, c)
    return GaussianState.squeezed_vacuum(gamma)


def gaussian_evolve(schedule: Schedule, params=None, sample_times=None, domega: float = 0.0,
                    initial: GaussianState | None = None, rtol: float = 1e-12, atol: float = 1e-14) -> Trajectory:
    """Exact covariance propagation for A a^dag a + c (a^dag^2 + a^2).

    In quadratures H = (A/2 + c) x^2 + (A/2 - c) p^2, so the Heisenberg
    equations are linear with M = [[0, A - 2c], [-(A + 2c), 0]].  The
    symplectic matrix S(t) is integrated and V(t) = S V0 S^T.
    """
    samples = _samples(schedule, sample_times)
    A0, c0 = schedule.quadratic_at(0.0, domega)
    st0 = initial if initial is not None else ground_gaussian(A0, c0)

    def rhs(t, y):
        A, c = schedule.quadratic_at(t, domega)
        S = y.reshape(2, 2)
        M = np.array([[0.0, A - 2 * c], [-(A + 2 * c), 0.0]])
        return (M @ S).ravel()

    if schedule.empty or samples[-1] == 0:
        Ss = [np.eye(2)] * len(samples)
    else:
        # cap the step so the solver never skips over a gap period
        max_step = 0.25 * 2 * math.pi / max(float(np.max(schedule.gap)), 1e-300)
        sol = integrate.solve_ivp(rhs, (0.0, samples[-1]), np.eye(2).ravel(), method="DOP853",
                                  t_eval=samples, rtol=rtol, atol=atol, max_step=max_step)
        if not sol.success:
            raise NoConvergence(f"Gaussian propagation failed: {sol.message}")
        Ss = [sol.y[:, i].reshape(2, 2) for i in range(len(samples))]
    states, obs = [], {k: [] for k in ("mean_n", "var_n", "x", "p", "dx", "dp", "fid_gs", "purity_det", "g1", "g2")}
    for t, S in zip(samples, Ss):
        g = GaussianState(S @ st0.mean, S @ st0.cov @ S.T)
        states.append(g)
        A, c = schedule.quadratic_at(t, domega)
        gs = ground_gaussian(A, c)
        inf = gs.infidelity(g)
        obs["mean_n"].append(g.mean_n)
        obs["var_n"].append(g.var_n)
        obs["x"].append(g.mean[0])
        obs["p"].append(g.mean[1])
        obs["dx"].append(g.dx)
        obs["dp"].append(g.dp)
        obs["fid_gs"].append((1 - inf) ** 2)
        obs["purity_det"].append(g.purity_det)
        g1, g2 = _couplings_of(schedule.params_at(t))
        obs["g1"].append(g1)
        obs["g2"].append(g2)
    return Trajectory(samples, {k: np.asarray(v) for k, v in obs.items()}, states, {})


# perturbative excitation amplitude

@dataclass
class ExcitationRecord:
    t: np.ndarray
    u: np.ndarray
    c2: np.ndarray
    Theta: np.ndarray
    F: np.ndarray

    @property
    def c2_sq(self):
        return np.abs(self.c2) ** 2


def excitation_amplitude(schedule: Schedule, params=None, max_phase_step: float = math.pi / 8,
                         max_points: int = 2 ** 24) -> ExcitationRecord:
    """c2 = -(1/sqrt2) int exp(i Theta) d gamma with Theta = int 2 gap dt.

    Each segment treats gamma and Theta as linear, which integrates the
    oscillating factor exactly (Filon-type rule).  The grid is refined until
    the phase advances by at most `max_phase_step` per segment.
    """
    path, ramp, base = schedule.path, schedule.ramp, schedule.base
    if schedule.empty:
        z = np.zeros(1)
        return ExcitationRecord(z, schedule.u.copy(), z.astype(complex), z, z)
    x_lo = -math.log(float(path.distance(schedule.u[0])))
    x_hi = -math.log(float(path.distance(schedule.u[-1])))
    n = max(len(schedule.t) - 1, 64)
    warned = False
    while True:
        x = np.linspace(x_lo, x_hi, n + 1)
        d = np.exp(-x)
        u = path.u_from_distance(d)
        v = ramp_rate(path, ramp, base, u)
        gap = path.gap(base, u)
        dtdx = np.abs(d * path.du_dd(u)) / v
        t = integrate.cumulative_simpson(dtdx, x=x, initial=0.0)
        Theta = integrate.cumulative_simpson(2 * gap * dtdx, x=x, initial=0.0)
        dth = np.diff(Theta)
        if dth.max() <= max_phase_step:
            break
        if not warned and dth.max() > math.pi:
            warnings.warn("phase advances more than pi per sample; refining", OscillatoryQuadratureWarning)
            warned = True
        n = int(math.ceil(n * dth.max() / max_phase_step * 1.1))
        if n > max_points:
            raise NoConvergence("excitation quadrature grid too large")
    gam = path.gamma(u)
    dg = np.diff(gam)
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = np.where(np.abs(dth) > 1e-8, (np.exp(1j * dth) - 1) / (1j * dth), 1 + 0.5j * dth)
    seg = dg * np.exp(1j * Theta[:-1]) * kern
    c2 = -np.concatenate([[0.0], np.cumsum(seg)]) / math.sqrt(2)
    scale = base.gc if path.model == "aqrm" else base.omega_t
    F = -path.dgamma_du(u) / scale
    return ExcitationRecord(t, u, c2, Theta, F)


def instantaneous_decompose(state: PureState, params, n_keep: int = 6) -> np.ndarray:
    """c_n = <n| Gamma(gamma)^dag |psi> for n <= n_keep."""
    if n_keep > 6:
        raise ConfigError("at most 7 coefficients (n <= 6) are retained")
    gamma = np_solution(params).gamma if isinstance(params, AqrmParams) else jcm_np_solution(params).gamma_t
    G = build_squeeze_op(state.basis, gamma)
    c = G.matrix.conj().T @ state.vector
    kept = c[: n_keep + 1]
    tot = float(np.sum(np.abs(kept) ** 2))
    if tot < 1 - 1e-6:
        raise TruncationError(f"retained weight {tot:.8f} < 1 - 1e-6")
    return kept


# dissipative evolution

class LindbladMode(str, Enum):
    FullModel = "FullModel"
    BosonicOnly = "BosonicOnly"


@dataclass(frozen=True)
class LindbladConfig:
    kappa_p: float = 0.0
    kappa_a: float = 0.0
    mode: LindbladMode = LindbladMode.BosonicOnly

    def __post_init__(self):
        object.__setattr__(self, "mode", LindbladMode(self.mode))
        if self.kappa_p < 0 or self.kappa_a < 0:
            raise ConfigError("decay rates must be non-negative")

    @property
    def kappa_a_unused(self):
        return self.mode is LindbladMode.BosonicOnly and self.kappa_a > 0


def _monomial(L: np.ndarray):
    """(dst, src, weight) if every column and row of L has at most one nonzero."""
    nz = np.abs(L) > 0
    if np.any(nz.sum(axis=0) > 1) or np.any(nz.sum(axis=1) > 1):
        return None
    dst, src = np.nonzero(nz)
    return dst, src, L[dst, src]


def _flat(idx, n):
    return (idx[:, None] * n + idx[None, :]).ravel()


class _Liouvillian:
    """Right-hand side of the master equation, evaluated block by block.

    When the Hamiltonian and the initial state respect the parity grading the
    density matrix stays block diagonal, and jump operators that flip parity
    map one block onto the other.  Jumps with one nonzero per row and column
    are applied as index gathers between pairs of blocks.

    Each block holds rho = A + iB as a real array of shape (2, runs, n, n) so
    several runs advance together and real Hamiltonians need only real
    products.  Jump operators must be real.
    """

    def __init__(self, basis: FockBasis, jumps, blocks):
        self.blocks = blocks
        self.pos = np.full(basis.dim, -1)
        self.owner = np.full(basis.dim, -1)
        for b, idx in enumerate(blocks):
            self.owner[idx] = b
            self.pos[idx] = np.arange(len(idx))
        sizes = [len(idx) for idx in blocks]
        diag = np.zeros(basis.dim)
        self.maps = []
        self.dense = []
        for rate, L in jumps:
            if rate == 0:
                continue
            if np.abs(np.imag(L)).max() > 0:
                raise ConfigError("jump operators must be real")
            L = np.real(L)
            mono = _monomial(L)
            if mono is None:
                if len(blocks) > 1:
                    raise ConfigError("non-monomial jump operators need the unblocked solver")
                self.dense.append((rate, L))
                continue
            dst, src, w = mono
            diag[src] += rate * w ** 2
            for bs in range(len(blocks)):
                sel = self.owner[src] == bs
                if not np.any(sel):
                    continue
                bt = self.owner[dst[sel]]
                if np.any(bt != bt[0]):
                    raise ConfigError("jump operator mixes parity blocks")
                bt = int(bt[0])
                # every target element has at most one source: gather densely,
                # pointing absent sources at element 0 with zero weight
                d = _flat(self.pos[dst[sel]], sizes[bt])
                idx = np.zeros(sizes[bt] ** 2, dtype=np.intp)
                wt = np.zeros(sizes[bt] ** 2)
                idx[d] = _flat(self.pos[src[sel]], sizes[bs])
                wt[d] = rate * np.outer(w[sel], w[sel]).ravel()
                self.maps.append((bs, bt, idx, wt))
        self.anti = []
        for idx in blocks:
            g = diag[idx]
            self.anti.append(0.5 * (g[:, None] + g[None, :]))
        self.dense_LdL = sum((r * (L.T @ L) for r, L in self.dense), None)

    def split(self, rho):
        out = []
        for idx in self.blocks:
            sub = rho[:, idx][:, :, idx]
            out.append(np.ascontiguousarray(np.stack([sub.real, sub.imag])))
        return out

    def join(self, parts, run, dim):
        rho = np.zeros((dim, dim), complex)
        for idx, s in zip(self.blocks, parts):
            rho[np.ix_(idx, idx)] = s[0, run] + 1j * s[1, run]
        return rho

    def hamiltonian_blocks(self, Hs):
        """Split a stack of full Hamiltonians into per-block (real, imaginary or None) parts."""
        out = []
        R, dim = Hs.shape[0], Hs.shape[-1]
        for idx in self.blocks:
            sub = np.take(Hs.reshape(R, -1), _flat(idx, dim), axis=1).reshape(R, len(idx), len(idx))
            Hi = np.ascontiguousarray(sub.imag) if np.iscomplexobj(sub) and np.abs(sub.imag).max() > 0 else None
            out.append((np.ascontiguousarray(sub.real), Hi))
        return out

    def rhs(self, Hb, S):
        # -i[H, A + iB] = [Hr, B] + [Hi, A] - i([Hr, A] - [Hi, B])
        out = []
        for (Hr, Hi), s, an in zip(Hb, S, self.anti):
            C = Hr @ s
            C -= s @ Hr
            d = C[::-1].copy()
            d[1] *= -1
            if Hi is not None:
                d += Hi @ s
                d -= s @ Hi
            d -= an * s
            out.append(d)
        for bs, bt, idx, wt in self.maps:
            n_s, n_t = S[bs].shape[-1], out[bt].shape[-1]
            g = np.take(S[bs].reshape(-1, n_s * n_s), idx, axis=1)
            g *= wt
            out[bt].reshape(-1, n_t * n_t)[...] += g
        if self.dense:
            s = S[0]
            acc = -0.5 * (self.dense_LdL @ s + s @ self.dense_LdL)
            for rate, L in self.dense:
                acc += rate * (L @ s @ L.T)
            out[0] += acc
        return out


def _spectral_spread(builder, schedule, omega):
    spread = 0.0
    for t in (0.0, schedule.T):
        w = linalg.eigvalsh(builder(schedule.params_at(t, omega)).matrix)
        spread = max(spread, w[-1] - w[0])
    return spread


def lindblad_evolve(builder, schedule: Schedule, config: LindbladConfig, rho0: DensityOperator,
                    sample_times=None, omega: float | None = None, max_phase: float = 0.3,
                    dt_max: float | None = None, grid=None, certify: bool = False,
                    keep_states: bool = False, use_blocks: bool = True) -> Trajectory:
    """Classic fourth-order Runge-Kutta integration of

        d rho/dt = -i[H, rho] + kp D[a] rho + ka D[sigma_-] rho

    on a fixed grid.  The step obeys the schedule rules (v dt <= 1e-3, gap dt
    <= 0.1) and additionally dt * spread(H) <= `max_phase`.
    """
    return _lindblad_batch(builder, schedule, config, [rho0], [omega], sample_times, max_phase,
                           dt_max, grid, certify, keep_states, use_blocks)[0]


def _lindblad_batch(builder, schedule, config, rho0s, omegas, sample_times=None, max_phase=0.3,
                    dt_max=None, grid=None, certify=False, keep_states=False, use_blocks=True,
                    _retry=0):
    basis = rho0s[0].basis
    if config.mode is LindbladMode.FullModel:
        if not basis.with_spin:
            raise ConfigError("FullModel needs a with_spin basis")
        p0 = schedule.params_at(0.0, omegas[0])
        if isinstance(p0, AqrmParams) and p0.Omega / p0.omega > 1e3:
            raise ConfigError("FullModel runs are limited to Omega/omega <= 1e3")
    elif basis.with_spin:
        raise ConfigError("BosonicOnly works on the effective bosonic basis")
    samples = _samples(schedule, sample_times)
    if grid is None:
        if dt_max is None:
            dt_max = max_phase / max(_spectral_spread(builder, schedule, w) for w in omegas)
        grid = evolution_grid(schedule, samples, max_dt=dt_max)
    grid = np.asarray(grid, float)
    a, _, _ = build_ladder_ops(basis)
    jumps = [(config.kappa_p, np.asarray(a.matrix))]
    if config.mode is LindbladMode.FullModel:
        _, _, sm = build_spin_ops(basis)
        jumps.append((config.kappa_a, np.asarray(sm.matrix)))
    par = parity_diagonal(basis)
    R0 = np.stack([np.array(r.matrix, complex) for r in rho0s])
    blocks = [np.arange(basis.dim)]
    if use_blocks:
        even, odd = np.nonzero(par > 0)[0], np.nonzero(par < 0)[0]
        off = np.abs(R0[:, even][:, :, odd]).max() if len(odd) else 0.0
        H0 = builder(schedule.params_at(0.0, omegas[0])).matrix
        hoff = np.abs(H0[np.ix_(even, odd)]).max() if len(odd) else 0.0
        if off <= 1e-14 and hoff <= 1e-12 * np.abs(H0).max():
            blocks = [even, odd]
    liou = _Liouvillian(basis, jumps, blocks)

    levels = [grid]
    if certify:
        for _ in range(2):
            g = levels[-1]
            levels.append(np.sort(np.concatenate([g, 0.5 * (g[1:] + g[:-1])])))
    results = []
    try:
        for g in levels:
            results.append(_rk4_pass(builder, schedule, liou, R0, g, samples, omegas, basis))
    except _NegativeState as e:
        if e.value < -1e-4 or _retry >= 3:
            raise PositivityError(f"density matrix eigenvalue {e.value:.2e}") from None
        warnings.warn(f"negative eigenvalue {e.value:.2e}; halving the step", PositivityWarning)
        fine = np.sort(np.concatenate([grid, 0.5 * (grid[1:] + grid[:-1])]))
        return _lindblad_batch(builder, schedule, config, rho0s, omegas, samples, max_phase, dt_max,
                               fine, certify, keep_states, use_blocks, _retry + 1)
    trajs = []
    for run in range(len(omegas)):
        cert = {"n_steps": len(grid) - 1, "blocks": len(blocks),
                "kappa_a_unused": config.kappa_a_unused}
        if certify:
            f = [r[0][run][-1] for r in results]
            e1 = float(np.linalg.norm(f[0] - f[1]))
            e2 = float(np.linalg.norm(f[1] - f[2]))
            ratio = e1 / e2 if e2 > 0 else math.inf
            cert.update({"err_h": e1, "err_h2": e2, "order_ratio": ratio})
            if e2 > 1e-12 and ratio < 12:
                raise StepRejection(f"RK4 order certificate failed: ratio {ratio:.2f} < 12")
        mats, obs = results[-1][0][run], results[-1][1][run]
        cert["max_trace_dev"] = float(np.max(np.abs(obs["trace"] - 1)))
        cert["max_herm_dev"] = float(np.max(obs["herm_dev"]))
        states = None
        if keep_states:
            states = [DensityOperator(m, basis, check=False) for m in mats]
        trajs.append(Trajectory(samples, obs, states, cert))
    if config.kappa_a_unused:
        warnings.warn("kappa_a is ignored in BosonicOnly mode", UserWarning)
    return trajs


class _NegativeState(Exception):
    def __init__(self, value):
        self.value = value


def _rk4_pass(builder, schedule, liou, R0, grid, samples, omegas, basis):
    """One fixed-grid RK4 sweep for a stack of runs at the listed omegas."""
    blocks = liou.blocks
    nrun = len(omegas)
    cache = {}
    terms = getattr(builder, "terms", None)
    if terms is not None:
        # linear builders: weight block-sliced fixed terms instead of rebuilding H
        tb = [r for r, _ in liou.hamiltonian_blocks(np.stack(terms))]

    def Hb(t):
        if t not in cache:
            if len(cache) > 4:
                cache.clear()
            if terms is not None:
                p = schedule.params_at(t)
                C = np.array([builder.coefficients(p.with_omega(w)) for w in omegas])
                cache[t] = [(np.tensordot(C, r, axes=1), None) for r in tb]
            else:
                Hs = np.stack([builder(schedule.params_at(t, w)).matrix for w in omegas])
                cache[t] = liou.hamiltonian_blocks(Hs)
        return cache[t]

    rho = liou.split(R0)
    n = basis.photon_numbers()
    par = parity_diagonal(basis)
    sz = basis.spin_z() if basis.with_spin else None
    sample_idx = set(np.searchsorted(grid, samples).tolist())
    keys = ["mean_n", "var_n", "trace", "parity", "herm_dev", "min_eig", "purity", "top_weight", "g1", "g2"]
    if sz is not None:
        keys.append("sigma_z")
    obs = [{k: [] for k in keys} for _ in range(nrun)]
    mats = [[] for _ in range(nrun)]

    def record(t, rho):
        for run, w in enumerate(omegas):
            o = obs[run]
            diag = np.zeros(basis.dim)
            herm = 0.0
            mineig = math.inf
            pur = 0.0
            for idx, s in zip(blocks, rho):
                r = s[0, run] + 1j * s[1, run]
                diag[idx] = r.diagonal().real
                herm = max(herm, float(np.abs(r - r.conj().T).max()))
                mineig = min(mineig, float(linalg.eigvalsh(0.5 * (r + r.conj().T))[0]))
                pur += float(np.sum(np.abs(r) ** 2))
            if mineig < -1e-6:
                raise _NegativeState(mineig)
            tr = diag.sum()
            mean = float(diag @ n)
            o["mean_n"].append(mean / tr)
            o["var_n"].append(float(diag @ (n - mean / tr) ** 2) / tr)
            o["trace"].append(tr)
            o["parity"].append(float(par @ diag))
            o["herm_dev"].append(herm)
            o["min_eig"].append(mineig)
            o["purity"].append(pur)
            pb = diag[: basis.n_boson] + diag[basis.n_boson:] if basis.with_spin else diag
            o["top_weight"].append(_top_weight(pb, basis.n_max))
            g1, g2 = _couplings_of(schedule.params_at(t, w))
            o["g1"].append(g1)
            o["g2"].append(g2)
            if sz is not None:
                o["sigma_z"].append(float(sz @ diag))
            mats[run].append(liou.join(rho, run, basis.dim))

    if 0 in sample_idx:
        record(grid[0], rho)
    for i in range(len(grid) - 1):
        t, h = grid[i], grid[i + 1] - grid[i]
        H1, H2, H4 = Hb(t), Hb(t + 0.5 * h), Hb(t + h)
        k1 = liou.rhs(H1, rho)
        k2 = liou.rhs(H2, [r + 0.5 * h * k for r, k in zip(rho, k1)])
        k3 = liou.rhs(H2, [r + 0.5 * h * k for r, k in zip(rho, k2)])
        k4 = liou.rhs(H4, [r + h * k for r, k in zip(rho, k3)])
        rho = [r + (h / 6) * (a + 2 * b + 2 * c + d) for r, a, b, c, d in zip(rho, k1, k2, k3, k4)]
        if i + 1 in sample_idx:
            record(grid[i + 1], rho)
    return mats, [{k: np.asarray(v) for k, v in o.items()} for o in obs]


def dissipative_snr(builder, schedule: Schedule, config: LindbladConfig, rho0_at, omega: float,
                    domega: float | None = None, sample_times=None, richardson: bool = True, **kw):
    """S(t) = (d<n>/d omega)^2 / var n along a dissipative run.

    Paired runs at omega +- domega/2 share the time grid and the absolute
    coupling schedule of the reference run and are integrated together.
    `rho0_at(omega)` supplies the initial state.  With `richardson` a second
    pair at domega/2 is added and the two derivative estimates are combined.
    """
    samples = _samples(schedule, sample_times)
    d = 1e-5 * omega if domega is None else domega
    omegas = [omega, omega - d / 2, omega + d / 2]
    if richardson:
        omegas += [omega - d / 4, omega + d / 4]
    if kw.get("grid") is None:
        dt_max = kw.pop("dt_max", None) or kw.pop("max_phase", 0.3) / _spectral_spread(builder, schedule, omega)
        kw["grid"] = evolution_grid(schedule, samples, max_dt=dt_max)
    kw.pop("max_phase", None)
    kw.pop("dt_max", None)
    runs = _lindblad_batch(builder, schedule, config, [rho0_at(w) for w in omegas], omegas, samples, **kw)
    ref = runs[0]
    d1 = (runs[2].column("mean_n") - runs[1].column("mean_n")) / d
    dn = d1
    rel = None
    if richardson:
        d2 = (runs[4].column("mean_n") - runs[3].column("mean_n")) / (d / 2)
        scale = np.maximum(np.abs(d2), 1e-300)
        rel = float(np.max(np.abs(d2 - d1) / scale))
        dn = (4 * d2 - d1) / 3
    var = ref.column("var_n")
    with np.errstate(divide="ignore", invalid="ignore"):
        S = np.where(var > 1e-14, dn ** 2 / var, np.nan)
    ref.observables["dn_domega"] = dn
    ref.observables["snr"] = S
    ref.certificate["richardson_rel_diff"] = rel
    return ref
