"""Linewidth-vs-field fitting.

The forward model is :func:`spinres.cavity_model.total_linewidth`; parameters
are flattened as ``[kappa, g_1, gamma_1, g_coll_1, g_2, ...]`` and addressed
by name (``"kappa"``, ``"1a.g"``, ``"1a.gamma"``, ``"1a.g_coll"``).

Minimization is Levenberg-Marquardt with Marquardt's diagonal scaling,
lambda starting at 1e-3, multiplied by 2 on a rejected step and by 1/3 on an
accepted one.  Bounds are enforced by projecting trial points onto the box.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .cavity_model import CavityParams, EnsembleTransition, total_linewidth
from .constants import MU_B_MHZ_PER_T
from .errors import (
    InsufficientDataError,
    PeakDetectionError,
    RankDeficiencyError,
    ValidationError,
)

LAMBDA0 = 1e-3
LAMBDA_UP = 2.0
LAMBDA_DOWN = 1.0 / 3.0
COST_RTOL = 1e-10
GRAD_TOL = 1e-8
RANK_RTOL = 1e-9
MIN_SAMPLES = 8
FIELDS = ("g", "gamma", "g_coll")
_POSITIVE = 1e-12


@dataclass(frozen=True)
class FieldSweep:
    """Linewidth samples: field (T), FWHM (MHz), optional sigma (MHz)."""

    field: np.ndarray
    fwhm: np.ndarray
    sigma: np.ndarray = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        b = np.asarray(self.field, dtype=float)
        y = np.asarray(self.fwhm, dtype=float)
        if b.ndim != 1 or b.shape != y.shape or b.size == 0:
            raise ValidationError("field and fwhm must be 1-D arrays of equal, nonzero length")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(y))):
            raise ValidationError("sweep contains non-finite values")
        if np.any(np.diff(b) <= 0):
            raise ValidationError("sweep field values must be strictly increasing")
        if np.any(y <= 0):
            raise ValidationError("sweep fwhm values must be positive")
        object.__setattr__(self, "field", b)
        object.__setattr__(self, "fwhm", y)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != b.shape or np.any(~(s > 0)):
                raise ValidationError("sigma must be positive with one value per sample")
            object.__setattr__(self, "sigma", s)

    def __len__(self):
        return self.field.size


def parameter_names(transitions):
    names = ["kappa"]
    for t in transitions:
        names.extend(f"{t.label}.{f}" for f in FIELDS)
    return names


def pack(cavity, transitions):
    p = [cavity.kappa]
    for t in transitions:
        p.extend((t.g_factor, t.gamma, t.g_coll))
    return np.array(p, dtype=float)


def unpack(p, cavity, transitions):
    cav = CavityParams(f_r=cavity.f_r, kappa=float(p[0]))
    out = [
        EnsembleTransition(t.label, float(p[1 + 3 * k]), float(p[2 + 3 * k]), float(p[3 + 3 * k]))
        for k, t in enumerate(transitions)
    ]
    return cav, out


def _default_bounds(name):
    if name.endswith(".g_coll"):
        return (0.0, math.inf)
    return (_POSITIVE, math.inf)


@dataclass(frozen=True)
class FitModelSpec:
    """Starting point and constraints of a fit.

    ``fixed`` holds the names of parameters kept at their initial value;
    ``bounds`` maps names to ``(lo, hi)``.  Unlisted parameters are free
    and only constrained to stay positive (``g_coll`` non-negative).
    """

    cavity: CavityParams
    transitions: tuple
    fixed: frozenset = frozenset()
    bounds: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "fixed", frozenset(self.fixed))
        labels = [t.label for t in self.transitions]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"transition labels must be unique: {labels}")
        names = self.names
        unknown = (set(self.fixed) | set(self.bounds)) - set(names)
        if unknown:
            raise ValidationError(f"unknown parameter names: {sorted(unknown)}")
        if len(self.fixed) == len(names):
            raise ValidationError("fit needs at least one free parameter")
        p = pack(self.cavity, self.transitions)
        for name, value in zip(names, p):
            lo, hi = self.bound(name)
            if not lo <= hi:
                raise ValidationError(f"{name}: empty bounds ({lo}, {hi})")
            if not lo <= value <= hi:
                raise ValidationError(f"{name} = {value} lies outside its bounds ({lo}, {hi})")

    @property
    def names(self):
        return parameter_names(self.transitions)

    @property
    def free_names(self):
        return [n for n in self.names if n not in self.fixed]

    def bound(self, name):
        lo, hi = self.bounds.get(name, _default_bounds(name))
        dlo, dhi = _default_bounds(name)
        return max(float(lo), dlo), min(float(hi), dhi)

    def with_fixed(self, **values):
        """Copy with parameters fixed at new values (``kappa=7.746``; dotted
        names via ``with_fixed(**{"1a.g": 8.37})``)."""
        p = pack(self.cavity, self.transitions)
        names = self.names
        for name, value in values.items():
            if name not in names:
                raise ValidationError(f"unknown parameter {name!r}")
            p[names.index(name)] = float(value)
        cav, trans = unpack(p, self.cavity, self.transitions)
        if self.cavity.Q is not None and "kappa" not in values:
            cav = self.cavity
        return replace(self, cavity=cav, transitions=tuple(trans), fixed=self.fixed | set(values))


@dataclass(frozen=True)
class FitResult:
    cavity: CavityParams
    transitions: tuple
    names: list  # all parameter names, in vector order
    free_names: list
    values: np.ndarray
    covariance: np.ndarray  # over free parameters
    rms_residual: float  # MHz, unweighted
    chi2: float
    iterations: int
    converged: bool
    gradient_norm: float

    @property
    def kappa(self):
        return self.cavity.kappa

    @property
    def uncertainties(self):
        """name -> one-sigma uncertainty; fixed parameters are absent."""
        sd = np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))
        return dict(zip(self.free_names, sd))

    def value(self, name):
        return float(self.values[self.names.index(name)])

    def transition(self, label):
        for t in self.transitions:
            if t.label == label:
                return t
        raise KeyError(label)


def model_fwhm(cavity, transitions, field):
    """Forward model of the fitter; this *is* ``total_linewidth``."""
    return total_linewidth(cavity, transitions, field)


def jacobian(cavity, transitions, field):
    """d FWHM / d parameters on the field grid, columns in :func:`parameter_names` order."""
    g = np.array([t.g_factor for t in transitions], dtype=float)
    w = np.array([t.gamma for t in transitions], dtype=float)
    c = np.array([t.g_coll for t in transitions], dtype=float)
    return kernels.linewidth_jacobian(
        np.atleast_1d(np.asarray(field, dtype=float)), cavity.f_r_mhz, g, w, c, MU_B_MHZ_PER_T
    )


def _check_rank(jw, names):
    norms = np.linalg.norm(jw, axis=0)
    dead = [n for n, v in zip(names, norms) if v == 0.0]
    if dead:
        raise RankDeficiencyError(
            f"parameters have no effect on the model: {', '.join(dead)}",
            {n: 1.0 for n in dead},
        )
    _, s, vt = np.linalg.svd(jw / norms, full_matrices=False)
    if s[-1] <= RANK_RTOL * s[0]:
        direction = vt[-1] / norms
        direction /= np.abs(direction).max()
        if direction[np.argmax(np.abs(direction))] < 0:
            direction = -direction
        combo = {n: float(c) for n, c in zip(names, direction) if abs(c) > 1e-3}
        text = " ".join(f"{c:+.4g}*{n}" for n, c in combo.items())
        raise RankDeficiencyError(
            f"Jacobian is rank deficient; unidentifiable combination: {text}", combo
        )


def fit(sweep, spec, max_iter=200, default_sigma=1.0):
    """Levenberg-Marquardt fit of ``spec`` to ``sweep``.

    Converges when two consecutive accepted steps each have a relative cost
    decrease below 1e-10 or a gradient infinity-norm below 1e-8.  Hitting
    ``max_iter`` returns a result with ``converged=False``.
    """
    if len(sweep) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {len(sweep)}")
    names = spec.names
    free = np.array([n not in spec.fixed for n in names])
    free_names = [n for n, f in zip(names, free) if f]
    if free.sum() >= len(sweep):
        raise InsufficientDataError(
            f"{int(free.sum())} free parameters need more than {len(sweep)} samples"
        )
    b = sweep.field
    y = sweep.fwhm
    sigma = sweep.sigma if sweep.sigma is not None else np.full(y.shape, float(default_sigma))
    lo = np.array([spec.bound(n)[0] for n in names])
    hi = np.array([spec.bound(n)[1] for n in names])

    def evaluate(p):
        cav, trans = unpack(p, spec.cavity, spec.transitions)
        r = (model_fwhm(cav, trans, b) - y) / sigma
        return r, float(r @ r)

    def weighted_jac(p):
        cav, trans = unpack(p, spec.cavity, spec.transitions)
        return jacobian(cav, trans, b)[:, free] / sigma[:, None]

    p = pack(spec.cavity, spec.transitions)
    r, cost = evaluate(p)
    jw = weighted_jac(p)
    _check_rank(jw, free_names)
    grad = jw.T @ r
    lam = LAMBDA0
    quiet = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        a = jw.T @ jw
        d = np.diag(a).copy()
        try:
            step = np.linalg.solve(a + lam * np.diag(d), -grad)
        except np.linalg.LinAlgError:
            lam *= LAMBDA_UP
            continue
        trial = p.copy()
        trial[free] = np.clip(p[free] + step, lo[free], hi[free])
        r_new, cost_new = evaluate(trial)
        if cost_new <= cost:
            rel = (cost - cost_new) / cost if cost > 0 else 0.0
            p, r, cost = trial, r_new, cost_new
            jw = weighted_jac(p)
            grad = jw.T @ r
            lam *= LAMBDA_DOWN
            if rel < COST_RTOL or np.abs(grad).max() < GRAD_TOL:
                quiet += 1
            else:
                quiet = 0
            if quiet >= 2:
                converged = True
                break
        else:
            lam *= LAMBDA_UP
            if lam > 1e16:
                break

    _check_rank(jw, free_names)
    cov = np.linalg.inv(jw.T @ jw)
    cov = 0.5 * (cov + cov.T)
    cav, trans = unpack(p, spec.cavity, spec.transitions)
    if "kappa" in spec.fixed and spec.cavity.Q is not None:
        cav = spec.cavity
    resid = model_fwhm(cav, trans, b) - y
    return FitResult(
        cavity=cav,
        transitions=tuple(trans),
        names=names,
        free_names=free_names,
        values=p,
        covariance=cov,
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        chi2=cost,
        iterations=it,
        converged=converged,
        gradient_norm=float(np.abs(grad).max()),
    )


def median_smooth3(y):
    """3-point running median; end points are kept."""
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        return y.copy()
    out = y.copy()
    out[1:-1] = np.median(np.stack([y[:-2], y[1:-1], y[2:]]), axis=0)
    return out


def _noise_level(y):
    d = np.diff(y)
    if d.size < 2:
        return 0.0
    return 1.4826 * float(np.median(np.abs(d - np.median(d)))) / math.sqrt(2.0)


def _prominence(s, i):
    left = s[:i]
    higher = np.flatnonzero(left > s[i])
    lmin = left[higher[-1] + 1 :].min() if higher.size else (left.min() if left.size else s[i])
    right = s[i + 1 :]
    higher = np.flatnonzero(right > s[i])
    rmin = right[: higher[0]].min() if higher.size else (right.min() if right.size else s[i])
    return s[i] - max(lmin, rmin)


def find_peaks(sweep, n_peaks):
    """Indices of the ``n_peaks`` highest local maxima of the smoothed sweep,
    in ascending field order.  Maxima whose prominence does not clear three
    times the estimated noise, or that sit inside the half-maximum span of a
    higher peak, are ignored."""
    s = median_smooth3(sweep.fwhm)
    noise = _noise_level(sweep.fwhm)
    cand = [
        i
        for i in range(1, s.size - 1)
        if s[i] > s[i - 1] and s[i] >= s[i + 1] and _prominence(s, i) > 3.0 * noise
    ]
    cand.sort(key=lambda i: s[i], reverse=True)
    baseline = float(np.median(np.sort(s)[: max(1, s.size // 10)]))
    accepted = []
    spans = []
    for i in cand:
        if any(lo_ <= sweep.field[i] <= hi_ for lo_, hi_ in spans):
            continue
        accepted.append(i)
        level = baseline + 0.5 * (s[i] - baseline)
        lo_ = _half_crossing(sweep.field, s, i, level, -1)
        hi_ = _half_crossing(sweep.field, s, i, level, +1)
        spans.append((sweep.field[0] if lo_ is None else lo_, sweep.field[-1] if hi_ is None else hi_))
    cand = accepted
    if len(cand) < n_peaks:
        where = ", ".join(f"{1e3 * sweep.field[i]:.4g} mT" for i in sorted(cand)) or "none"
        raise PeakDetectionError(
            f"expected {n_peaks} peaks, found {len(cand)} ({where})",
            found=[float(sweep.field[i]) for i in sorted(cand)],
        )
    return sorted(cand[:n_peaks]), s


def _half_crossing(b, s, i, level, direction):
    j = i
    while 0 <= j + direction < s.size:
        k = j + direction
        if s[k] < level:
            return b[j] + (level - s[j]) * (b[k] - b[j]) / (s[k] - s[j])
        j = k
    return None


def initial_guess(sweep, n_peaks, f_r_ghz, labels=None):
    """Heuristic starting point for :func:`fit`.

    kappa from the median of the lowest decile of the FWHM; each peak gives
    g from its position, gamma from its half-maximum width in field (through
    dDelta/dB = g mu_B / h) and g_coll by inverting the on-resonance
    broadening 2 g_coll^2 / gamma.
    """
    if n_peaks < 1:
        raise ValidationError("n_peaks must be at least 1")
    if labels is None:
        labels = [f"p{k + 1}" for k in range(n_peaks)]
    if len(labels) != n_peaks:
        raise ValidationError("need one label per peak")
    y = sweep.fwhm
    k = max(1, int(math.ceil(0.1 * y.size)))
    kappa0 = float(np.median(np.sort(y)[:k]))
    peaks, s = find_peaks(sweep, n_peaks)
    f_mhz = 1e3 * f_r_ghz
    out = []
    for label, i in zip(labels, peaks):
        b_peak = float(sweep.field[i])
        g0 = f_mhz / (MU_B_MHZ_PER_T * b_peak)
        height = max(float(s[i]) - kappa0, 1e-9)
        level = kappa0 + 0.5 * height
        bl = _half_crossing(sweep.field, s, i, level, -1)
        br = _half_crossing(sweep.field, s, i, level, +1)
        if bl is None and br is None:
            width = sweep.field[-1] - sweep.field[0]
        elif bl is None:
            width = 2.0 * (br - b_peak)
        elif br is None:
            width = 2.0 * (b_peak - bl)
        else:
            width = br - bl
        gamma0 = 0.5 * g0 * MU_B_MHZ_PER_T * max(width, 1e-12)
        g_coll0 = math.sqrt(0.5 * height * gamma0)
        out.append(EnsembleTransition(label, g0, gamma0, g_coll0))
    return FitModelSpec(CavityParams(f_r=f_r_ghz, kappa=kappa0), tuple(out))
