"""Leray-Lions flux laws a(x, s, xi) with Newton linearizations.

Shipped laws depend on the gradient argument only, but the (x, s) slots are
kept in the interface so coupled laws can be added without touching the
assembly.  All evaluators are vectorized over a batch of gradients.
"""

from dataclasses import dataclass, replace

import numpy as np


class FluxError(ValueError):
    pass


@dataclass(frozen=True)
class FluxLaw:
    """Interface and structural metadata for a flux law.

    lam, beta, growth_offset and growth_exponent mirror the coercivity and
    growth constants of the monotone-operator assumptions; lam may be None
    when no positive pointwise coercivity constant exists (the probe then
    reports the measured minimum instead of checking a target).
    """

    name: str
    p: float
    lam: float = None
    beta: float = None
    growth_offset: float = 0.0
    growth_exponent: float = 0.0
    eps: float = 0.0
    depends_on_s: bool = False
    kernel_code: int = None  # compiled-kernel dispatch id, None = python only

    def __post_init__(self):
        if not self.p > 1.0:
            raise FluxError(f"exponent p must exceed 1, got {self.p}")
        if self.eps < 0.0:
            raise FluxError("regularization eps must be nonnegative")

    def a(self, x, s, xi):
        raise NotImplementedError

    def d_xi(self, x, s, xi):
        raise NotImplementedError

    def d_s(self, x, s, xi):
        return np.zeros_like(np.atleast_2d(xi))

    def with_eps(self, eps):
        """Regularized copy used inside Newton; residuals keep eps = 0."""
        return replace(self, eps=float(eps))

    # scalar nonlinearity t -> |t|^(p-2) t shared with the stabilization
    def sigma(self, t):
        return _signed_power(t, self.p, self.eps)

    def sigma_prime(self, t):
        p, e = self.p, self.eps
        if e > 0.0:
            w = t * t + e * e
            return w ** ((p - 4.0) / 2.0) * (e * e + (p - 1.0) * t * t)
        return (p - 1.0) * _abs_power(np.abs(t), p - 2.0)


def _abs_power(m, expo):
    """m**expo with the continuous extension 0 at m = 0 for negative expo."""
    if expo == 0.0:
        return np.ones_like(m)
    with np.errstate(divide="ignore"):
        out = m**expo
    if expo < 0.0:
        out = np.where(m > 0.0, out, 0.0)
    return out


def _signed_power(t, p, eps):
    if eps > 0.0:
        return (t * t + eps * eps) ** ((p - 2.0) / 2.0) * t
    return _abs_power(np.abs(t), p - 2.0) * t


@dataclass(frozen=True)
class PLaplaceLaw(FluxLaw):
    """a(xi) = |xi|^(p-2) xi, with optional sqrt(|xi|^2 + eps^2) smoothing."""

    def a(self, x, s, xi):
        xi = np.atleast_2d(xi)
        m = np.linalg.norm(xi, axis=-1)
        if self.eps > 0.0:
            m = np.hypot(m, self.eps)
            return m[..., None] ** (self.p - 2.0) * xi
        return _abs_power(m, self.p - 2.0)[..., None] * xi

    def d_xi(self, x, s, xi):
        xi = np.atleast_2d(xi)
        p = self.p
        m2 = np.sum(xi * xi, axis=-1)
        eye = np.eye(2)
        outer = xi[..., :, None] * xi[..., None, :]
        if self.eps > 0.0:
            w = m2 + self.eps**2
            return (
                w[..., None, None] ** ((p - 2.0) / 2.0) * eye
                + (p - 2.0) * w[..., None, None] ** ((p - 4.0) / 2.0) * outer
            )
        m = np.sqrt(m2)
        if p < 2.0 and np.any(m == 0.0):
            raise FluxError(
                "flux Jacobian is singular at xi = 0 for p < 2 without "
                "regularization; use with_eps"
            )
        return (
            _abs_power(m, p - 2.0)[..., None, None] * eye
            + (p - 2.0) * _abs_power(m, p - 4.0)[..., None, None] * outer
        )


def plaplace(p, eps=0.0):
    return PLaplaceLaw(
        name="plaplace", p=float(p), lam=1.0, beta=1.0, eps=float(eps),
        kernel_code=0,
    )


def glacier_viscosity(s, alpha, t0, tol=1e-14, max_iter=200):
    """Solve F^(-1) = (s F)^(gamma) + t0^gamma for F > 0, gamma = a/(1-a).

    Vectorized safeguarded Newton with a bisection fallback; the residual of
    the returned root is below ``tol`` in relative terms.
    """
    if not 0.0 < alpha < 1.0:
        raise FluxError("glacier exponent alpha must lie in (0, 1)")
    if not t0 > 0.0:
        raise FluxError("glacier threshold t0 must be positive")
    s = np.maximum(np.asarray(s, dtype=float), 0.0)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    gamma = alpha / (1.0 - alpha)
    c = t0**gamma

    def residual(f):
        return 1.0 / f - (s * f) ** gamma - c

    # 1/F decreasing, (sF)^gamma increasing: the root is bracketed by
    # F = 1/c (s = 0 solution, residual >= 0) from above and 0 from below.
    hi = np.full_like(s, 1.0 / c)
    lo = np.zeros_like(s)
    f = np.full_like(s, 0.5 / c)
    for _ in range(max_iter):
        r = residual(f)
        hi = np.where(r < 0.0, f, hi)
        lo = np.where(r > 0.0, f, lo)
        dr = -1.0 / f**2 - np.where(s > 0.0, gamma * s * (s * f) ** (gamma - 1.0), 0.0)
        step = f - r / dr
        inside = (step > lo) & (step < hi)
        f_new = np.where(inside, step, 0.5 * (lo + hi))
        if np.all(np.abs(f_new - f) <= tol * f):
            f = f_new
            break
        f = f_new
    else:
        raise FluxError("glacier viscosity iteration did not converge")
    if np.any(np.abs(residual(f)) > 1e-13 * (1.0 / f)):
        raise FluxError("glacier viscosity root below requested accuracy")
    return float(f[0]) if scalar else f


def _glacier_viscosity_prime(f, s, gamma):
    """dF/ds from implicit differentiation of the viscosity equation."""
    sf = np.where(s > 0.0, (s * f) ** (gamma - 1.0), 0.0)
    return -gamma * f * sf / (1.0 / f**2 + gamma * s * sf)


@dataclass(frozen=True)
class GlacierLaw(FluxLaw):
    """a(xi) = F(|xi|) xi with the implicit shear-thinning viscosity F.

    The effective exponent is p = 2 - alpha.  The coercivity ratio
    a(xi).xi / |xi|^p equals F(m) m^alpha: it tends to 1 as m -> infinity
    and to 0 as m -> 0, so no positive pointwise coercivity constant exists;
    lam is left None and the assumption probe reports the sampled minimum.
    """

    alpha: float = 0.5
    t0: float = 1.0

    def a(self, x, s, xi):
        xi = np.atleast_2d(xi)
        m = np.linalg.norm(xi, axis=-1)
        if self.eps > 0.0:
            m = np.hypot(m, self.eps)
        return glacier_viscosity(m, self.alpha, self.t0)[..., None] * xi

    def d_xi(self, x, s, xi):
        xi = np.atleast_2d(xi)
        m = np.linalg.norm(xi, axis=-1)
        if self.eps > 0.0:
            m = np.hypot(m, self.eps)
        f = glacier_viscosity(m, self.alpha, self.t0)
        gamma = self.alpha / (1.0 - self.alpha)
        fp = _glacier_viscosity_prime(f, m, gamma)
        eye = np.eye(2)
        outer = xi[..., :, None] * xi[..., None, :]
        ratio = np.where(m > 0.0, fp / np.maximum(m, 1e-300), 0.0)
        return f[..., None, None] * eye + ratio[..., None, None] * outer


def glacier(alpha=0.5, t0=1.0, eps=0.0):
    return GlacierLaw(
        name="glacier", p=2.0 - float(alpha), beta=1.0, alpha=float(alpha),
        t0=float(t0), eps=float(eps), kernel_code=1,
    )


def make_law(name, p=2.0, alpha=0.5, t0=1.0, eps=0.0):
    """Law factory used by the CLI configuration."""
    if name == "plaplace":
        return plaplace(p, eps=eps)
    if name == "glacier":
        return glacier(alpha=alpha, t0=t0, eps=eps)
    raise FluxError(f"unknown flux law {name!r}")


def eval_flux(law, x, s, xi):
    return law.a(x, s, xi)


def flux_jacobian(law, x, s, xi):
    return law.d_xi(x, s, xi)


def assumption_probe(law, n_samples=10_000, seed=0, scale=10.0):
    """Sample the monotonicity, coercivity and growth assumptions.

    Violations are reported in the returned dict, never raised: the probe is
    a measurement device, not a validator.
    """
    rng = np.random.default_rng(seed)
    xi = rng.normal(scale=scale, size=(n_samples, 2))
    eta = rng.normal(scale=scale, size=(n_samples, 2))
    s = rng.normal(scale=scale, size=n_samples)
    x = rng.uniform(size=(n_samples, 2))

    a_xi = law.a(x, s, xi)
    a_eta = law.a(x, s, eta)
    mono = np.sum((a_xi - a_eta) * (xi - eta), axis=-1)
    mono_scale = float(
        np.max(np.linalg.norm(a_xi - a_eta, axis=-1) * np.linalg.norm(xi - eta, axis=-1))
    )

    norm_xi = np.linalg.norm(xi, axis=-1)
    coercivity = np.sum(a_xi * xi, axis=-1) / norm_xi**law.p

    growth_bound = (
        law.growth_offset
        + (law.beta or 0.0) * np.abs(s) ** law.growth_exponent
        + (law.beta or 0.0) * norm_xi ** (law.p - 1.0)
    )
    growth_ok = bool(
        np.all(np.linalg.norm(a_xi, axis=-1) <= growth_bound * (1.0 + 1e-12) + 1e-14)
    ) if law.beta is not None else None

    report = {
        "law": law.name,
        "p": law.p,
        "seed": seed,
        "n_samples": n_samples,
        "monotonicity_min": float(mono.min()),
        "monotonicity_ok": bool(mono.min() >= -1e-12 * max(mono_scale, 1.0)),
        "coercivity_min": float(coercivity.min()),
        "coercivity_target": law.lam,
        "coercivity_ok": (
            bool(coercivity.min() >= law.lam - 1e-10) if law.lam is not None else None
        ),
        "growth_ok": growth_ok,
    }
    return report
