"""Posterior samplers under test, plus corruption wrappers.

One exact reference sampler (conjugate normal-normal), two MCMC samplers
(random-walk Metropolis and fixed-path HMC), and a mean-field Gaussian
variational fit.  All MCMC runs happen on the unconstrained scale and start
from a fresh prior draw, which stresses mixing honestly.

Corruption wrappers inject the canonical failure modes (shifted or rescaled
marginals) into otherwise exact draws so the diagnostics can be exercised
end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Diverged, InvalidSpec, NonFiniteDensity, NotConjugate, UnknownParameter
from .model import Dataset, GenerativeModel, PosteriorDraws, posterior_target
from .streams import RandomStream

SAMPLER_KINDS = ("exact-conjugate", "rw-metropolis", "hmc", "meanfield-vi")

# Standard acceptance-rate targets for warmup step-size adaptation.
RW_TARGET_ACCEPT_1D = 0.44
RW_TARGET_ACCEPT_ND = 0.234
HMC_TARGET_ACCEPT = 0.8

# Energy error beyond which a trajectory is counted as divergent.
DIVERGENCE_THRESHOLD = 1e3


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = "exact-conjugate"
    step_size: float = 0.5
    n_leapfrog: int = 10
    vi_iterations: int = 10_000
    vi_learning_rate: float = 0.05
    warmup: int = 200

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise InvalidSpec(f"unknown sampler kind {self.kind!r}; choose from {SAMPLER_KINDS}")
        if not (self.step_size > 0 and self.vi_learning_rate > 0):
            raise InvalidSpec("step_size and vi_learning_rate must be positive")
        if self.n_leapfrog < 1 or self.vi_iterations < 1 or self.warmup < 0:
            raise InvalidSpec("n_leapfrog and vi_iterations must be >= 1, warmup >= 0")


@dataclass(frozen=True)
class Corruption:
    """Deterministic defect injected into posterior draws.

    ``shift`` adds ``amount`` to one coordinate (posterior biased by +amount);
    ``scale`` multiplies that coordinate's deviations from the draw mean by
    ``amount`` (overdispersed posterior for amount > 1, underdispersed below).
    """

    kind: str = "none"
    amount: float = 0.0
    target_quantity: str = ""

    def __post_init__(self):
        if self.kind not in ("none", "shift", "scale"):
            raise InvalidSpec(f"unknown corruption kind {self.kind!r}")
        if self.kind == "scale" and not self.amount > 0:
            raise InvalidSpec("scale corruption requires amount > 0")
        if self.kind != "none" and not self.target_quantity:
            raise InvalidSpec("corruption requires a target_quantity")


def sample_exact_conjugate(model: GenerativeModel, data: Dataset, L: int,
                           rng: RandomStream) -> PosteriorDraws:
    """L independent draws from the closed-form conjugate posterior."""
    if model.exact_posterior is None:
        raise NotConjugate(f"model {model.name!r} has no closed-form posterior")
    if L < 1:
        raise ValueError("L must be >= 1")
    mean, sd = model.exact_posterior(data)
    values = rng.normal(mean, sd, size=L).reshape(L, 1)
    return PosteriorDraws(
        names=model.parameter_names,
        values=values,
        sampler_name="exact-conjugate",
        chain_length_raw=L,
        rng_stream_id=rng.stream_id,
    )


def _initial_point(model: GenerativeModel, rng: RandomStream) -> np.ndarray:
    theta0 = model.prior_simulator(rng)
    return model.unconstraining_map.unconstrain(theta0.values)


class _SafeTarget:
    """Target wrapper mapping arithmetic blowups at wild points to non-finite values.

    Unstable trajectories can push the state far enough that scalar math
    overflows or divides by zero; samplers treat those points as having zero
    density instead of crashing.
    """

    _ERRORS = (ZeroDivisionError, OverflowError, FloatingPointError)

    def __init__(self, target):
        self.dimension = target.dimension
        self._target = target

    def logpdf(self, z: np.ndarray) -> float:
        if not np.all(np.isfinite(z)):
            return -math.inf
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return self._target.logpdf(z)
        except self._ERRORS:
            return -math.inf

    def grad(self, z: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(z)):
            return np.full(self.dimension, np.nan)
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return self._target.grad(z)
        except self._ERRORS:
            return np.full(self.dimension, np.nan)


def sample_rw_metropolis(model: GenerativeModel, data: Dataset, n_steps: int,
                         step_size: float, warmup: int, rng: RandomStream) -> PosteriorDraws:
    """Random-walk Metropolis chain of n_steps post-warmup states.

    Step size adapts toward the standard acceptance target during warmup only
    and is frozen afterwards so the retained chain is Markovian.
    """
    target = _SafeTarget(posterior_target(model, data))
    d = target.dimension
    z = _initial_point(model, rng)
    logp = target.logpdf(z)
    if not math.isfinite(logp):
        raise NonFiniteDensity(f"non-finite log density at initial point {z}")

    total = warmup + n_steps
    noise = rng.standard_normal((total, d))
    unifs = rng.uniform(size=total)
    accept_target = RW_TARGET_ACCEPT_1D if d == 1 else RW_TARGET_ACCEPT_ND

    log_step = math.log(step_size)
    chain = np.empty((n_steps, d))
    accepted = 0
    for t in range(total):
        step = math.exp(log_step)
        proposal = z + step * noise[t]
        logp_prop = target.logpdf(proposal)
        log_ratio = logp_prop - logp
        accept_prob = math.exp(min(0.0, log_ratio)) if math.isfinite(log_ratio) else 0.0
        took = unifs[t] < accept_prob
        if took:
            z, logp = proposal, logp_prop
        if t < warmup:
            log_step += (accept_prob - accept_target) / math.sqrt(t + 1.0)
        else:
            chain[t - warmup] = z
            accepted += took

    return PosteriorDraws(
        names=model.parameter_names,
        values=model.unconstraining_map.constrain_matrix(chain),
        sampler_name="rw-metropolis",
        chain_length_raw=n_steps,
        rng_stream_id=rng.stream_id,
        diagnostics={"acceptance_rate": float(accepted) / n_steps,
                     "step_size": math.exp(log_step)},
    )


def leapfrog(z: np.ndarray, p: np.ndarray, step: float, n: int, grad) -> tuple[np.ndarray, np.ndarray]:
    """Standard leapfrog integration of (z, p) for n steps; returns copies."""
    z, p = z.copy(), p.copy()
    g = grad(z)
    p += 0.5 * step * g
    for i in range(n):
        z += step * p
        g = grad(z)
        if i < n - 1:
            p += step * g
    p += 0.5 * step * g
    return z, p


def sample_hmc(model: GenerativeModel, data: Dataset, n_steps: int, step_size: float,
               n_leapfrog: int, warmup: int, rng: RandomStream) -> PosteriorDraws:
    """Fixed-path HMC with identity mass matrix and Metropolis correction.

    Trajectories whose energy error exceeds DIVERGENCE_THRESHOLD (or goes
    non-finite) are rejected and counted as divergences.  Step size adapts
    toward 0.8 acceptance during warmup only.
    """
    target = _SafeTarget(posterior_target(model, data))
    d = target.dimension
    z = _initial_point(model, rng)
    logp = target.logpdf(z)
    if not math.isfinite(logp):
        raise NonFiniteDensity(f"non-finite log density at initial point {z}")

    total = warmup + n_steps
    momenta = rng.standard_normal((total, d))
    unifs = rng.uniform(size=total)

    log_step = math.log(step_size)
    chain = np.empty((n_steps, d))
    energy_errors = np.empty(n_steps)
    accepted = 0
    divergences = 0
    for t in range(total):
        step = math.exp(log_step)
        p0 = momenta[t]
        h0 = -logp + 0.5 * float(p0 @ p0)
        with np.errstate(over="ignore", invalid="ignore"):
            z_new, p_new = leapfrog(z, p0, step, n_leapfrog, target.grad)
            kinetic = float(p_new @ p_new) if np.all(np.isfinite(p_new)) else math.inf
        logp_new = target.logpdf(z_new)
        h1 = -logp_new + 0.5 * kinetic
        delta_h = h1 - h0
        divergent = not math.isfinite(delta_h) or delta_h > DIVERGENCE_THRESHOLD
        accept_prob = 0.0 if divergent else math.exp(min(0.0, -delta_h))
        if not divergent and unifs[t] < accept_prob:
            z, logp = z_new, logp_new
            took = True
        else:
            took = False
        if t < warmup:
            log_step += (accept_prob - HMC_TARGET_ACCEPT) / math.sqrt(t + 1.0)
        else:
            chain[t - warmup] = z
            energy_errors[t - warmup] = delta_h if math.isfinite(delta_h) else math.inf
            accepted += took
            divergences += divergent

    return PosteriorDraws(
        names=model.parameter_names,
        values=model.unconstraining_map.constrain_matrix(chain),
        sampler_name="hmc",
        chain_length_raw=n_steps,
        rng_stream_id=rng.stream_id,
        diagnostics={"acceptance_rate": float(accepted) / n_steps,
                     "divergences": int(divergences),
                     "step_size": math.exp(log_step),
                     "energy_errors": energy_errors},
    )


@dataclass(frozen=True)
class GaussianApprox:
    """Mean-field Gaussian fit on the unconstrained scale; supports exact sampling."""

    parameter_names: tuple[str, ...]
    means: np.ndarray
    log_sds: np.ndarray
    unconstraining_map: object
    iterations: int

    def sample(self, L: int, rng: RandomStream) -> PosteriorDraws:
        eps = rng.standard_normal((L, self.means.size))
        Z = self.means + np.exp(self.log_sds) * eps
        return PosteriorDraws(
            names=self.parameter_names,
            values=self.unconstraining_map.constrain_matrix(Z),
            sampler_name="meanfield-vi",
            chain_length_raw=L,
            rng_stream_id=rng.stream_id,
            diagnostics={"vi_iterations": self.iterations},
        )


def fit_meanfield_vi(model: GenerativeModel, data: Dataset, iterations: int,
                     learning_rate: float, rng: RandomStream) -> GaussianApprox:
    """Fit a per-coordinate Gaussian by stochastic gradient ascent on the ELBO.

    Single-sample reparameterized gradients with step decay t^-0.5.  The
    entropy term contributes +1 to each log-sd gradient.
    """
    target = _SafeTarget(posterior_target(model, data))
    d = target.dimension
    m = np.zeros(d)
    omega = np.zeros(d)
    eps = rng.standard_normal((iterations, d))
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(iterations):
            sd = np.exp(omega)
            z = m + sd * eps[t]
            g = target.grad(z)
            if not np.all(np.isfinite(g)):
                raise Diverged(f"non-finite ELBO gradient at iteration {t}")
            lr = learning_rate / math.sqrt(t + 1.0)
            m = m + lr * g
            omega = omega + lr * (g * eps[t] * sd + 1.0)
            if not (np.all(np.isfinite(m)) and np.all(np.isfinite(omega))):
                raise Diverged(f"variational parameters became non-finite at iteration {t}")
    return GaussianApprox(
        parameter_names=model.parameter_names,
        means=m,
        log_sds=omega,
        unconstraining_map=model.unconstraining_map,
        iterations=iterations,
    )


def corrupt(draws: PosteriorDraws, c: Corruption) -> PosteriorDraws:
    """Apply a corruption to one coordinate of every draw."""
    if c.kind == "none":
        return draws
    try:
        j = draws.names.index(c.target_quantity)
    except ValueError:
        raise UnknownParameter(
            f"corruption target {c.target_quantity!r} not in {draws.names}") from None
    values = draws.values.copy()
    if c.kind == "shift":
        values[:, j] += c.amount
    else:
        center = values[:, j].mean()
        values[:, j] = center + c.amount * (values[:, j] - center)
    return PosteriorDraws(
        names=draws.names,
        values=values,
        sampler_name=draws.sampler_name,
        chain_length_raw=draws.chain_length_raw,
        thinned=draws.thinned,
        rng_stream_id=draws.rng_stream_id,
        diagnostics={**draws.diagnostics, "corruption": f"{c.kind}:{c.amount}:{c.target_quantity}"},
    )
