"""Gibbs sampler with an MC3 Metropolis-Hastings model move for the HTEM.

Model (on centred and scaled data)::

    Y | gamma, beta, sigma2        ~ N(X_gamma beta_gamma, diag(sigma2))
    sigma2_i | alpha=0, eta, rho2  ~ GIG(1, eta/rho2, eta*rho2)     (hyperbolic errors)
    sigma2_i | alpha=1, eta, rho2  ~ IGamma(eta/2, eta*rho2/2)      (Student-t errors)
    beta_j | gamma_j=1             ~ N(0, rho2*tau2),  beta_j = 0 otherwise
    tau2 ~ IGamma(nu/2, nu/2),  rho2 ~ IGamma(a, b),  eta ~ DiscUniform(eta_grid)
    gamma_j ~ Bernoulli(pi_tilde),  pi_tilde ~ Beta(s1, s2)
    alpha ~ Bernoulli(omega),  omega ~ Beta(m1, m2)

One iteration updates, in order: tau2, rho2, alpha, eta, sigma2, pi_tilde,
omega, gamma (MH with beta integrated out), beta. ``alpha`` and ``eta`` are
drawn with the latent scales integrated out, so their conditionals are
products of hyperbolic or t densities of the residuals; ``alpha`` further
sums over the eta grid. The HEM and TEM special cases hold ``alpha`` at 0
and 1.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _gig, _kernels
from .linalg import NotPositiveDefiniteError, SpdFactor, correlated_normal_draw, spd_log_det
from .special import log_bessel_k
from .streams import make_stream

logger = logging.getLogger(__name__)

__all__ = [
    "ETA_GRID",
    "ERROR_MODES",
    "Hyperparameters",
    "ModelState",
    "ChainConfig",
    "ChainTrace",
    "InvariantError",
    "init_state",
    "residuals",
    "grid_log_likelihoods",
    "log_model_weight",
    "mc3_propose",
    "update_gamma_mh",
    "draw_beta",
    "draw_rho2",
    "draw_alpha",
    "draw_eta",
    "draw_sigma2",
    "draw_tau2",
    "draw_pi",
    "draw_omega",
    "gibbs_step",
    "run_chain",
    "check_state",
]

ETA_GRID = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
ERROR_MODES = ("htem", "hem", "tem")

# names accepted by ``frozen`` in gibbs_step/run_chain, in update order
UPDATE_ORDER = ("tau2", "rho2", "alpha", "eta", "sigma2", "pi_tilde", "omega", "gamma", "beta")


class InvariantError(RuntimeError):
    """A chain state violated a model invariant."""


@dataclass(frozen=True)
class Hyperparameters:
    """Prior constants. ``s2=None`` resolves to ``sqrt(p)`` at run time.

    ``omega_fixed`` pins the mixing weight (a degenerate prior); with
    ``omega_fixed=0`` the HTEM sampler never leaves the hyperbolic branch.
    """

    nu: float = 1.0
    a: float = 2.1
    b: float = 0.1
    s1: float = 1.0
    s2: float | None = None
    m1: float = 1.0
    m2: float = 1.0
    eta_grid: tuple = ETA_GRID
    error_mode: str = "htem"
    omega_fixed: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "eta_grid", tuple(float(e) for e in self.eta_grid))
        object.__setattr__(self, "error_mode", self.error_mode.lower())
        for name in ("nu", "a", "b", "s1", "m1", "m2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"hyperparameter {name} must be positive")
        if self.s2 is not None and not self.s2 > 0:
            raise ValueError("hyperparameter s2 must be positive")
        grid = np.asarray(self.eta_grid)
        if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ValueError("eta_grid must be non-empty, positive and strictly increasing")
        if self.error_mode not in ERROR_MODES:
            raise ValueError(f"error_mode must be one of {ERROR_MODES}")
        if self.omega_fixed is not None and not 0.0 <= self.omega_fixed <= 1.0:
            raise ValueError("omega_fixed must lie in [0, 1]")

    def resolve(self, p):
        """Copy with ``s2`` filled in as ``sqrt(p)`` when unset."""
        if self.s2 is None:
            return replace(self, s2=math.sqrt(p))
        return self

    def to_dict(self):
        d = asdict(self)
        d["eta_grid"] = list(self.eta_grid)
        return d


@dataclass
class ModelState:
    gamma: np.ndarray  # bool, length p
    beta: np.ndarray  # zero where gamma is False
    sigma2: np.ndarray  # length n
    tau2: float
    rho2: float
    alpha: int
    eta: float
    pi_tilde: float
    omega: float

    @property
    def p_gamma(self):
        return int(np.count_nonzero(self.gamma))

    def copy(self):
        return replace(self, gamma=self.gamma.copy(), beta=self.beta.copy(), sigma2=self.sigma2.copy())


@dataclass(frozen=True)
class ChainConfig:
    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    debug: bool = False

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("need iterations >= 1, burn_in >= 0, thin >= 1")
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")

    @property
    def n_retained(self):
        return -(-(self.iterations - self.burn_in) // self.thin)


@dataclass
class ChainTrace:
    """Retained draws, one row per kept iteration."""

    iteration: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    rho2: np.ndarray
    tau2: np.ndarray
    pi_tilde: np.ndarray
    omega: np.ndarray
    n_proposed: int = 0
    n_accepted: int = 0
    eta_grid: tuple = ETA_GRID
    meta: dict = field(default_factory=dict)

    _COLUMNS = ("iteration", "gamma", "beta", "alpha", "eta", "rho2", "tau2", "pi_tilde", "omega")

    @classmethod
    def empty(cls, n_rows, p, eta_grid=ETA_GRID):
        return cls(
            iteration=np.zeros(n_rows, dtype=np.int64),
            gamma=np.zeros((n_rows, p), dtype=bool),
            beta=np.zeros((n_rows, p)),
            alpha=np.zeros(n_rows, dtype=np.int8),
            eta=np.zeros(n_rows),
            rho2=np.zeros(n_rows),
            tau2=np.zeros(n_rows),
            pi_tilde=np.zeros(n_rows),
            omega=np.zeros(n_rows),
            eta_grid=tuple(eta_grid),
        )

    def __len__(self):
        return self.iteration.shape[0]

    @property
    def p(self):
        return self.beta.shape[1]

    @property
    def acceptance_rate(self):
        return self.n_accepted / self.n_proposed if self.n_proposed else 0.0

    def record(self, row, it, state):
        self.iteration[row] = it
        self.gamma[row] = state.gamma
        self.beta[row] = state.beta
        self.alpha[row] = state.alpha
        self.eta[row] = state.eta
        self.rho2[row] = state.rho2
        self.tau2[row] = state.tau2
        self.pi_tilde[row] = state.pi_tilde
        self.omega[row] = state.omega

    def to_npz(self, path):
        np.savez_compressed(
            path,
            **{c: getattr(self, c) for c in self._COLUMNS},
            counts=np.array([self.n_proposed, self.n_accepted], dtype=np.int64),
            eta_grid=np.asarray(self.eta_grid),
        )

    @classmethod
    def from_npz(cls, path):
        with np.load(path) as z:
            cols = {c: z[c] for c in cls._COLUMNS}
            n_prop, n_acc = (int(v) for v in z["counts"])
            grid = tuple(float(e) for e in z["eta_grid"])
        return cls(**cols, n_proposed=n_prop, n_accepted=n_acc, eta_grid=grid)

    def to_csv(self, path):
        """Row per draw: iteration, hex gamma bitmask (bit j = covariate j), beta_1..beta_p, alpha, eta, rho2, tau2."""
        header = ["iteration", "gamma_mask"] + [f"beta_{j + 1}" for j in range(self.p)] + ["alpha", "eta", "rho2", "tau2"]
        weights = [1 << j for j in range(self.p)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(header) + "\n")
            for r in range(len(self)):
                mask = sum(w for w, g in zip(weights, self.gamma[r]) if g)
                vals = [str(int(self.iteration[r])), hex(mask)]
                vals += [repr(float(v)) for v in self.beta[r]]
                vals += [str(int(self.alpha[r])), repr(float(self.eta[r])), repr(float(self.rho2[r])), repr(float(self.tau2[r]))]
                fh.write(",".join(vals) + "\n")


# ---------------------------------------------------------------------------
# helpers


@lru_cache(maxsize=32)
def _grid_constants(eta_grid):
    eta = np.asarray(eta_grid, dtype=float)
    log_k1 = np.array([log_bessel_k(1.0, e) for e in eta])
    # per-observation log-normalisers, excluding the -0.5*log(rho2) term
    hyp = -math.log(2.0) - 0.5 * np.log(eta) - log_k1
    t = np.array([math.lgamma((e + 1) / 2) - math.lgamma(e / 2) for e in eta]) + 0.5 * eta * np.log(eta) - 0.5 * math.log(math.pi)
    return eta, hyp, t


def _logsumexp(v):
    m = np.max(v)
    if not np.isfinite(m):
        return m
    return m + math.log(np.sum(np.exp(v - m)))


def _active(gamma):
    return np.flatnonzero(gamma)


def residuals(state, X, y):
    """``y - X_gamma beta_gamma`` for the current model."""
    idx = _active(state.gamma)
    if idx.size == 0:
        return np.array(y, dtype=float, copy=True)
    return y - X[:, idx] @ state.beta[idx]


def grid_log_likelihoods(resid, rho2, eta_grid, branch):
    """Summed log-densities of ``resid`` at each grid value of eta.

    ``branch`` is 0 for hyperbolic, 1 for Student-t. Returns an array with
    one entry per grid point; latent scales are integrated out.
    """
    eta, c_hyp, c_t = _grid_constants(tuple(eta_grid))
    n = resid.shape[0]
    half_log_rho2 = 0.5 * math.log(rho2)
    kern = _kernels.grid_kernel_sums((resid * resid) / rho2, eta, int(branch))
    if branch == 0:
        return n * (c_hyp - half_log_rho2) - kern
    return n * (c_t - half_log_rho2) - 0.5 * (eta + 1.0) * kern


# ---------------------------------------------------------------------------
# initialisation and invariants


def init_state(n, p, hyper, rng):
    """Null model, unit scales, eta = 1 (nearest grid point), prior-mean pi_tilde."""
    hyper = hyper.resolve(p)
    grid = np.asarray(hyper.eta_grid)
    eta0 = float(grid[np.argmin(np.abs(grid - 1.0))])
    omega0 = 0.5 if hyper.omega_fixed is None else hyper.omega_fixed
    if hyper.error_mode == "hem":
        alpha0 = 0
    elif hyper.error_mode == "tem":
        alpha0 = 1
    else:
        alpha0 = int(rng.random() < omega0)
    return ModelState(
        gamma=np.zeros(p, dtype=bool),
        beta=np.zeros(p),
        sigma2=np.ones(n),
        tau2=1.0,
        rho2=1.0,
        alpha=alpha0,
        eta=eta0,
        pi_tilde=hyper.s1 / (hyper.s1 + hyper.s2),
        omega=omega0,
    )


def check_state(state, hyper):
    """Raise :class:`InvariantError` if ``state`` is not a valid model state."""
    problems = []
    if np.any(state.beta[~state.gamma] != 0.0):
        problems.append("beta nonzero where gamma is 0")
    if state.eta not in hyper.eta_grid:
        problems.append(f"eta={state.eta} not on the grid")
    if hyper.error_mode == "hem" and state.alpha != 0:
        problems.append("alpha != 0 in HEM mode")
    if hyper.error_mode == "tem" and state.alpha != 1:
        problems.append("alpha != 1 in TEM mode")
    if state.alpha not in (0, 1):
        problems.append(f"alpha={state.alpha} is not binary")
    if not (np.all(state.sigma2 > 0) and np.all(np.isfinite(state.sigma2))):
        problems.append("sigma2 not positive and finite")
    for name in ("tau2", "rho2"):
        v = getattr(state, name)
        if not (v > 0 and math.isfinite(v)):
            problems.append(f"{name}={v} not positive and finite")
    for name in ("pi_tilde", "omega"):
        v = getattr(state, name)
        if not 0.0 <= v <= 1.0:
            problems.append(f"{name}={v} outside [0, 1]")
    if not np.all(np.isfinite(state.beta)):
        problems.append("beta not finite")
    if problems:
        raise InvariantError("; ".join(problems))


# ---------------------------------------------------------------------------
# model indicator and coefficients


def _posterior_pieces(idx, sigma2, tau2, rho2, X, y):
    """Factor ``L`` of A_gamma and ``z = L^-1 X_gamma' Sigma^-1 y``."""
    lower, z, ok = _kernels.model_terms(X, y, idx, 1.0 / sigma2, 1.0 / (tau2 * rho2))
    if not ok:
        raise NotPositiveDefiniteError(f"A_gamma is not positive definite for model {idx.tolist()}")
    return SpdFactor(lower), z


def log_model_weight(gamma, sigma2, tau2, rho2, pi_tilde, X, y):
    """Unnormalised log conditional of ``gamma`` with ``beta`` integrated out.

    Raises :class:`NotPositiveDefiniteError` if ``A_gamma`` cannot be factored.
    """
    p = gamma.shape[0]
    idx = _active(gamma)
    k = idx.size
    prior = k * math.log(pi_tilde) + (p - k) * math.log1p(-pi_tilde)
    if k == 0:
        return prior
    f, z = _posterior_pieces(idx, sigma2, tau2, rho2, X, y)
    return -0.5 * spd_log_det(f) - 0.5 * k * math.log(tau2 * rho2) + 0.5 * float(z @ z) + prior


def mc3_propose(gamma, rng):
    """Flip one uniformly chosen coordinate of ``gamma``; returns (proposal, index)."""
    p = gamma.shape[0]
    if p < 1:
        raise ValueError("need at least one covariate")
    k = int(rng.integers(p))
    proposal = gamma.copy()
    proposal[k] = not proposal[k]
    return proposal, k


def update_gamma_mh(state, X, y, rng):
    """One MC3 step; returns ``(gamma, accepted)``.

    The add/delete proposal is symmetric, so the acceptance probability is
    ``min(1, w(gamma*) / w(gamma))``. A proposal whose ``A_gamma`` fails to
    factor is rejected.
    """
    proposal, k = mc3_propose(state.gamma, rng)
    args = (state.sigma2, state.tau2, state.rho2, state.pi_tilde, X, y)
    lw_cur = log_model_weight(state.gamma, *args)
    try:
        lw_prop = log_model_weight(proposal, *args)
    except NotPositiveDefiniteError:
        logger.warning("A_gamma not positive definite after flipping covariate %d; rejecting", k)
        rng.random()
        return state.gamma, False
    log_ratio = lw_prop - lw_cur
    accept = rng.random() < math.exp(min(0.0, log_ratio))
    return (proposal, True) if accept else (state.gamma, False)


def draw_beta(state, X, y, rng):
    """``beta_gamma ~ N(A^-1 X' Sigma^-1 y, A^-1)``; zeros off the model."""
    p = state.gamma.shape[0]
    beta = np.zeros(p)
    idx = _active(state.gamma)
    if idx.size == 0:
        return beta
    f, z = _posterior_pieces(idx, state.sigma2, state.tau2, state.rho2, X, y)
    mean = _kernels.back_solve(f.lower, z)
    beta[idx] = correlated_normal_draw(rng, mean, f)
    return beta


# ---------------------------------------------------------------------------
# scale parameters


def rho2_gig_params(state, hyper):
    """(order, a, b) of the GIG conditional of rho2 for the current alpha branch."""
    n = state.sigma2.shape[0]
    k = state.p_gamma
    bb = float(state.beta @ state.beta)
    inv_sum = float(np.sum(1.0 / state.sigma2))
    a_gig = state.eta * inv_sum
    b_gig = 2.0 * hyper.b + bb / state.tau2
    if state.alpha == 0:
        order = -(hyper.a + n + k / 2.0)
        b_gig += state.eta * float(np.sum(state.sigma2))
    else:
        order = (n * state.eta - k - 2.0 * hyper.a) / 2.0
    return order, a_gig, b_gig


def draw_rho2(state, hyper, rng):
    order, a_gig, b_gig = rho2_gig_params(state, hyper)
    return float(_gig.gig_one(rng, order, a_gig, b_gig))


def draw_tau2(state, hyper, rng):
    """``IGamma((nu + p_gamma)/2, beta'beta/(2 rho2) + nu/2)``."""
    k = state.p_gamma
    shape = (hyper.nu + k) / 2.0
    scale = float(state.beta @ state.beta) / (2.0 * state.rho2) + hyper.nu / 2.0
    return scale / rng.standard_gamma(shape)


def draw_pi(state, hyper, rng):
    """``Beta(s1 + p_gamma, s2 + p - p_gamma)``."""
    p = state.gamma.shape[0]
    k = state.p_gamma
    s2 = math.sqrt(p) if hyper.s2 is None else hyper.s2
    draw = rng.beta(hyper.s1 + k, s2 + p - k)
    return min(max(draw, 1e-300), 1.0 - 1e-16)


def draw_omega(state, hyper, rng):
    """``Beta(m1 + alpha, m2 + 1 - alpha)``, or the pinned value."""
    if hyper.omega_fixed is not None:
        return hyper.omega_fixed
    return float(rng.beta(hyper.m1 + state.alpha, hyper.m2 + 1 - state.alpha))


def alpha_probability(resid, rho2, omega, eta_grid):
    """P(alpha = 1 | residuals, rho2, omega), eta summed over the grid."""
    if omega <= 0.0:
        return 0.0
    if omega >= 1.0:
        return 1.0
    mass0 = math.log1p(-omega) + _logsumexp(grid_log_likelihoods(resid, rho2, eta_grid, 0))
    mass1 = math.log(omega) + _logsumexp(grid_log_likelihoods(resid, rho2, eta_grid, 1))
    d = mass0 - mass1
    if d > 0:
        e = math.exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(d))


def draw_alpha(state, resid, hyper, rng):
    """Bernoulli draw of the error-family indicator; a no-op outside HTEM mode."""
    if hyper.error_mode != "htem":
        return state.alpha
    prob = alpha_probability(resid, state.rho2, state.omega, hyper.eta_grid)
    return int(rng.random() < prob)


def eta_probabilities(resid, rho2, alpha, eta_grid):
    logp = grid_log_likelihoods(resid, rho2, eta_grid, alpha)
    logp = logp - _logsumexp(logp)
    return np.exp(logp)


def draw_eta(state, resid, hyper, rng):
    """Categorical draw over the eta grid for the current error family."""
    probs = eta_probabilities(resid, state.rho2, state.alpha, hyper.eta_grid)
    cdf = np.cumsum(probs)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return hyper.eta_grid[min(k, len(hyper.eta_grid) - 1)]


def draw_sigma2(state, resid, hyper, rng):
    """Independent latent scales: GIG(1/2, eta/rho2, e^2 + eta rho2) or IGamma((eta+1)/2, (e^2 + eta rho2)/2)."""
    n = resid.shape[0]
    second = resid * resid + state.eta * state.rho2
    if state.alpha == 0:
        out = np.empty(n)
        _gig.gig_fill(rng, np.full(n, 0.5), np.full(n, state.eta / state.rho2), second, out)
        return out
    return 0.5 * second / rng.standard_gamma((state.eta + 1.0) / 2.0, size=n)


# ---------------------------------------------------------------------------
# driver


def gibbs_step(state, X, y, hyper, rng, frozen=frozenset()):
    """Advance ``state`` in place by one sweep; returns whether the MC3 move was accepted.

    Names in ``frozen`` (see ``UPDATE_ORDER``) are skipped.
    """
    if "tau2" not in frozen:
        state.tau2 = draw_tau2(state, hyper, rng)
    if "rho2" not in frozen:
        state.rho2 = draw_rho2(state, hyper, rng)
    resid = residuals(state, X, y)
    if "alpha" not in frozen:
        state.alpha = draw_alpha(state, resid, hyper, rng)
    if "eta" not in frozen:
        state.eta = draw_eta(state, resid, hyper, rng)
    if "sigma2" not in frozen:
        state.sigma2 = draw_sigma2(state, resid, hyper, rng)
    if "pi_tilde" not in frozen:
        state.pi_tilde = draw_pi(state, hyper, rng)
    if "omega" not in frozen:
        state.omega = draw_omega(state, hyper, rng)
    accepted = False
    if "gamma" not in frozen:
        state.gamma, accepted = update_gamma_mh(state, X, y, rng)
    if "beta" not in frozen:
        state.beta = draw_beta(state, X, y, rng)
    return accepted


def run_chain(X, y, hyper, config, rng=None, *, init=None, frozen=(), progress=None):
    """Run the sampler and return the retained draws.

    Parameters
    ----------
    X, y : ndarray
        Design (n, p) and response (n,), normally standardized.
    hyper : Hyperparameters
    config : ChainConfig
        ``iterations`` counts all sweeps, burn-in included.
    rng : numpy.random.Generator, optional
        Defaults to ``make_stream(config.seed)``.
    init : ModelState, optional
        Starting state; defaults to :func:`init_state`.
    frozen : iterable of str
        Updates to skip (see ``UPDATE_ORDER``); used by correctness tests.
    progress : callable, optional
        Called as ``progress(iteration)`` every 1000 sweeps.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    hyper = hyper.resolve(p)
    frozen = frozenset(frozen)
    unknown = frozen - set(UPDATE_ORDER)
    if unknown:
        raise ValueError(f"unknown update names {sorted(unknown)}")
    rng = make_stream(config.seed) if rng is None else rng
    state = init_state(n, p, hyper, rng) if init is None else init.copy()
    if config.debug:
        check_state(state, hyper)

    trace = ChainTrace.empty(config.n_retained, p, hyper.eta_grid)
    row = 0
    for it in range(config.iterations):
        trace.n_accepted += gibbs_step(state, X, y, hyper, rng, frozen)
        if "gamma" not in frozen:
            trace.n_proposed += 1
        if config.debug:
            try:
                check_state(state, hyper)
            except InvariantError as exc:
                raise InvariantError(f"iteration {it}: {exc}") from None
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            trace.record(row, it, state)
            row += 1
        if progress is not None and (it + 1) % 1000 == 0:
            progress(it + 1)
    trace.meta = {"hyper": hyper.to_dict(), "config": asdict(config), "n": n, "p": p}
    return trace
