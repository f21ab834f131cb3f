"""Closed-loop correction of perceived gaze on the image plane.

A face rendered on a flat panel is read as looking at the viewer from
almost any angle, so the point an observer reports as eye contact deviates
from the point the avatar was commanded to fixate. This module collects
commanded/perceived pixel pairs, fits the inverse mapping (intended point
to command point) over a monomial basis with greedy term selection, and
evaluates residuals. A simulated perceiver with configurable distortion
fields stands in for the human observer in tests and scenarios.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ExtrapolationWarning,
    InsufficientPairs,
    OutOfBounds,
    RankDeficient,
)

DEFAULT_MIN_PAIRS = 9


@dataclass(frozen=True)
class PerceptionPair:
    """One calibration sample: commanded fixation vs. reported eye contact."""

    commanded: np.ndarray
    perceived: np.ndarray
    observer_id: str = ""
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "commanded", np.asarray(self.commanded, dtype=float))
        object.__setattr__(self, "perceived", np.asarray(self.perceived, dtype=float))

    @property
    def deviation(self) -> np.ndarray:
        return self.perceived - self.commanded

    def to_dict(self) -> dict:
        return {
            "commanded": [float(v) for v in self.commanded],
            "perceived": [float(v) for v in self.perceived],
            "observer": self.observer_id,
            "t": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PerceptionPair":
        return cls(
            commanded=data["commanded"],
            perceived=data["perceived"],
            observer_id=data.get("observer", ""),
            timestamp=float(data.get("t", 0.0)),
        )


class CalibrationSession:
    """Append-only log of perception pairs for one avatar and plane.

    With a path the log is persisted as JSON lines, one pair per line;
    refits always consume the full in-memory snapshot.
    """

    def __init__(self, plane_bounds, path=None, avatar_id: str = "default"):
        w, h = plane_bounds
        if w <= 0 or h <= 0:
            raise ValueError("plane bounds must be positive")
        self.plane_bounds = (float(w), float(h))
        self.avatar_id = avatar_id
        self.path = Path(path) if path is not None else None
        self.pairs: list[PerceptionPair] = []
        if self.path is not None and self.path.exists():
            with open(self.path, "r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        self.pairs.append(PerceptionPair.from_dict(json.loads(line)))

    def in_bounds(self, pixel) -> bool:
        u, v = float(pixel[0]), float(pixel[1])
        w, h = self.plane_bounds
        return 0.0 <= u <= w and 0.0 <= v <= h


def record_pair(session: CalibrationSession, commanded, perceived,
                observer_id: str = "", timestamp: float | None = None) -> PerceptionPair:
    """Validate, append, and (when backed by a file) persist one pair."""
    for name, pixel in (("commanded", commanded), ("perceived", perceived)):
        if not np.all(np.isfinite(np.asarray(pixel, dtype=float))):
            raise OutOfBounds(f"{name} pixel must be finite")
        if not session.in_bounds(pixel):
            raise OutOfBounds(f"{name} pixel {tuple(pixel)} outside plane {session.plane_bounds}")
    pair = PerceptionPair(
        commanded=commanded,
        perceived=perceived,
        observer_id=observer_id,
        timestamp=time.time() if timestamp is None else timestamp,
    )
    session.pairs.append(pair)
    if session.path is not None:
        with open(session.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(pair.to_dict()) + "\n")
    return pair


def load_pairs(path) -> list[PerceptionPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                pairs.append(PerceptionPair.from_dict(json.loads(line)))
    return pairs


# ---------------------------------------------------------------------------
# Correction model


def monomial_terms(max_degree: int) -> tuple[tuple[int, int], ...]:
    "Exponent pairs (i, j) for u^i v^j, ordered by total degree then u power."
    terms = []
    for d in range(max_degree + 1):
        for i in range(d, -1, -1):
            terms.append((i, d - i))
    return tuple(terms)


def _features(points, terms):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u = points[:, 0]
    v = points[:, 1]
    return np.column_stack([u**i * v**j for i, j in terms])


def _lstsq_scaled(A, B):
    """Least squares with column equilibration for high-degree monomials."""
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    coef, _, rank, _ = np.linalg.lstsq(A / scale, B, rcond=None)
    return coef / scale[:, None], rank


@dataclass(frozen=True)
class FitConfig:
    max_degree: int = 3
    selection_penalty: float = 1e-6  # px^2 of SSE a new term must buy
    min_pairs: int = DEFAULT_MIN_PAIRS


@dataclass(frozen=True)
class CorrectionModel:
    """Per-avatar mapping from intended fixation pixel to command pixel."""

    basis: tuple[tuple[int, int], ...]
    coefficients_u: np.ndarray
    coefficients_v: np.ndarray
    fit_stats: dict
    avatar_id: str = "default"
    degree: int = 3
    training_hull: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        if len(self.basis) == 0:
            raise ValueError("model basis may not be empty")
        cu = np.asarray(self.coefficients_u, dtype=float)
        cv = np.asarray(self.coefficients_v, dtype=float)
        if len(cu) != len(self.basis) or len(cv) != len(self.basis):
            raise ValueError("one coefficient per basis term required")
        object.__setattr__(self, "coefficients_u", cu)
        object.__setattr__(self, "coefficients_v", cv)
        object.__setattr__(self, "training_hull",
                           np.asarray(self.training_hull, dtype=float))

    def evaluate(self, points) -> np.ndarray:
        F = _features(points, self.basis)
        out = np.column_stack([F @ self.coefficients_u, F @ self.coefficients_v])
        return out[0] if np.asarray(points).ndim == 1 else out

    def to_dict(self) -> dict:
        return {
            "avatar_id": self.avatar_id,
            "degree": self.degree,
            "terms": [list(t) for t in self.basis],
            "coef_u": [float(c) for c in self.coefficients_u],
            "coef_v": [float(c) for c in self.coefficients_v],
            "fit_stats": self.fit_stats,
            "training_hull": [[float(a), float(b)] for a, b in self.training_hull],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorrectionModel":
        return cls(
            basis=tuple((int(i), int(j)) for i, j in data["terms"]),
            coefficients_u=data["coef_u"],
            coefficients_v=data["coef_v"],
            fit_stats=data.get("fit_stats", {}),
            avatar_id=data.get("avatar_id", "default"),
            degree=int(data.get("degree", 3)),
            training_hull=data.get("training_hull", np.zeros((0, 2))),
        )


def load_model(path) -> CorrectionModel:
    with open(path, "r", encoding="utf-8") as f:
        return CorrectionModel.from_dict(json.load(f))


def save_model(path, model: CorrectionModel) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def _convex_hull(points):
    """Andrew's monotone chain; returns hull vertices counter-clockwise."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        return np.asarray(pts, dtype=float)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=float)


def _inside_hull(point, hull, tol=1e-9) -> bool:
    if len(hull) < 3:
        return False
    x, y = float(point[0]), float(point[1])
    for k in range(len(hull)):
        ax, ay = hull[k]
        bx, by = hull[(k + 1) % len(hull)]
        if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < -tol:
            return False
    return True


def fit_correction(pairs, config: FitConfig = FitConfig(),
                   avatar_id: str = "default") -> CorrectionModel:
    """Fit the inverse perception mapping on swapped pairs.

    The regression inputs are the perceived points and the outputs the
    commanded points, so evaluating the model at an intended point yields
    the pixel to command. Terms are chosen greedily from the monomial
    basis; a candidate is kept only while it lowers the summed squared
    residual by more than the per-term penalty. Deterministic for fixed
    inputs and config.
    """
    return _fit(pairs, config, avatar_id, enforce_min=True)


def _fit(pairs, config, avatar_id, enforce_min):
    if enforce_min and len(pairs) < config.min_pairs:
        raise InsufficientPairs(f"need >= {config.min_pairs} pairs, got {len(pairs)}")
    if len(pairs) < 1:
        raise InsufficientPairs("no pairs to fit")
    inputs = np.array([p.perceived for p in pairs], dtype=float)
    targets = np.array([p.commanded for p in pairs], dtype=float)
    spread = inputs.max(axis=0) - inputs.min(axis=0)
    if max(spread) < 1e-9:
        raise RankDeficient("all pairs collapse to a single point")

    candidates = list(monomial_terms(config.max_degree))
    chosen: list[tuple[int, int]] = []
    sse = float(np.sum(targets * targets))  # empty-model baseline
    coef = None
    while candidates:
        # near-ties go to the earlier (lower-degree) term so degenerate
        # layouts cannot hand the win to a wildly extrapolating monomial
        tie_tol = 1e-12 * max(1.0, sse)
        best = None
        for term in candidates:
            trial = chosen + [term]
            A = _features(inputs, trial)
            c, _ = _lstsq_scaled(A, targets)
            resid = A @ c - targets
            trial_sse = float(np.sum(resid * resid))
            if best is None or trial_sse < best[1] - tie_tol:
                best = (term, trial_sse, c)
        term, trial_sse, c = best
        if chosen and sse - trial_sse <= config.selection_penalty:
            break
        chosen.append(term)
        candidates.remove(term)
        sse = trial_sse
        coef = c

    deviations = targets - inputs
    pre_rms = float(np.sqrt(np.mean(np.sum(deviations * deviations, axis=1))))
    post_rms = float(np.sqrt(sse / len(pairs)))
    return CorrectionModel(
        basis=tuple(chosen),
        coefficients_u=coef[:, 0],
        coefficients_v=coef[:, 1],
        fit_stats={"pre_rms": pre_rms, "post_rms": post_rms, "n_pairs": len(pairs)},
        avatar_id=avatar_id,
        degree=config.max_degree,
        training_hull=_convex_hull(targets),
    )


def apply_correction(model: CorrectionModel, intended) -> np.ndarray:
    """Command pixel that should be perceived at the intended pixel.

    Emits ExtrapolationWarning when the intended point falls outside the
    convex hull of the training commanded points; the value is still
    returned.
    """
    intended = np.asarray(intended, dtype=float)
    if len(model.training_hull) and not _inside_hull(intended, model.training_hull):
        warnings.warn(
            f"intended point {tuple(intended)} outside the calibrated region",
            ExtrapolationWarning,
            stacklevel=2,
        )
    return model.evaluate(intended)


def perception_error(pairs, model: CorrectionModel | None = None) -> float:
    """RMS perceived-vs-intended deviation in pixels.

    Without a model: the raw commanded/perceived deviation of the pairs.
    With a model: each commanded point is treated as the intended point,
    corrected, and pushed through the empirical perception field defined
    by the pairs' nearest-neighbor deviations.
    """
    if len(pairs) == 0:
        raise InsufficientPairs("no pairs to evaluate")
    commanded = np.array([p.commanded for p in pairs], dtype=float)
    deviations = np.array([p.deviation for p in pairs], dtype=float)
    if model is None:
        return float(np.sqrt(np.mean(np.sum(deviations * deviations, axis=1))))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExtrapolationWarning)
        corrected = np.array([apply_correction(model, c) for c in commanded])
    # empirical field: offset of the nearest recorded commanded point
    d2 = np.sum((corrected[:, None, :] - commanded[None, :, :]) ** 2, axis=2)
    nearest = np.argmin(d2, axis=1)
    simulated = corrected + deviations[nearest]
    err = simulated - commanded
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


# ---------------------------------------------------------------------------
# Simulated perceiver


@dataclass(frozen=True)
class IdentityField:
    def apply(self, points):
        return np.asarray(points, dtype=float).copy()


@dataclass(frozen=True)
class AffineField:
    """u' = a*u + b*v + c, v' = d*u + e*v + f."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 1.0
    f: float = 0.0

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        u = p[..., 0]
        v = p[..., 1]
        return np.stack([
            self.a * u + self.b * v + self.c,
            self.d * u + self.e * v + self.f,
        ], axis=-1)


@dataclass(frozen=True)
class RadialField:
    """Radial magnification about a center, radius normalized by scale."""

    k: float
    center: tuple[float, float]
    scale: float

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        c = np.asarray(self.center, dtype=float)
        d = p - c
        r2 = np.sum(d * d, axis=-1) / (self.scale * self.scale)
        return c + d * (1.0 + self.k * r2)[..., None]


@dataclass(frozen=True)
class LookupGridField:
    """Offsets on a rectangular node grid, bilinearly interpolated."""

    grid_u: np.ndarray  # (nu,) ascending node positions
    grid_v: np.ndarray  # (nv,)
    du: np.ndarray      # (nv, nu)
    dv: np.ndarray      # (nv, nu)

    def __post_init__(self):
        object.__setattr__(self, "grid_u", np.asarray(self.grid_u, dtype=float))
        object.__setattr__(self, "grid_v", np.asarray(self.grid_v, dtype=float))
        object.__setattr__(self, "du", np.asarray(self.du, dtype=float))
        object.__setattr__(self, "dv", np.asarray(self.dv, dtype=float))
        if self.du.shape != (len(self.grid_v), len(self.grid_u)):
            raise ValueError("du must be shaped (len(grid_v), len(grid_u))")
        if self.dv.shape != self.du.shape:
            raise ValueError("dv must match du")

    def _interp(self, table, u, v):
        iu = np.clip(np.searchsorted(self.grid_u, u) - 1, 0, len(self.grid_u) - 2)
        iv = np.clip(np.searchsorted(self.grid_v, v) - 1, 0, len(self.grid_v) - 2)
        u0, u1 = self.grid_u[iu], self.grid_u[iu + 1]
        v0, v1 = self.grid_v[iv], self.grid_v[iv + 1]
        fu = np.clip((u - u0) / (u1 - u0), 0.0, 1.0)
        fv = np.clip((v - v0) / (v1 - v0), 0.0, 1.0)
        return ((1 - fu) * (1 - fv) * table[iv, iu]
                + fu * (1 - fv) * table[iv, iu + 1]
                + (1 - fu) * fv * table[iv + 1, iu]
                + fu * fv * table[iv + 1, iu + 1])

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        u = p[..., 0]
        v = p[..., 1]
        return np.stack([
            u + self._interp(self.du, u, v),
            v + self._interp(self.dv, u, v),
        ], axis=-1)


def field_from_dict(data: dict):
    kind = data.get("type", "identity")
    if kind == "identity":
        return IdentityField()
    if kind == "affine":
        return AffineField(
            a=float(data.get("a", 1.0)), b=float(data.get("b", 0.0)),
            c=float(data.get("c", 0.0)), d=float(data.get("d", 0.0)),
            e=float(data.get("e", 1.0)), f=float(data.get("f", 0.0)),
        )
    if kind == "radial":
        return RadialField(
            k=float(data["k"]),
            center=tuple(data["center"]),
            scale=float(data["scale"]),
        )
    if kind == "lookup":
        return LookupGridField(
            grid_u=data["grid_u"], grid_v=data["grid_v"],
            du=data["du"], dv=data["dv"],
        )
    raise ValueError(f"unknown distortion field type {kind!r}")


def simulate_perceiver(distortion_field, commanded, noise_sigma: float = 0.0,
                       rng=None) -> np.ndarray:
    """Where a perceiver governed by a distortion field reports eye contact.

    Noise is Gaussian per coordinate; pass a seed or Generator for
    reproducible draws.
    """
    perceived = distortion_field.apply(commanded)
    if noise_sigma > 0.0:
        if rng is None or isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(rng)
        perceived = perceived + rng.normal(0.0, noise_sigma, size=perceived.shape)
    return perceived


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class CalibrationReport:
    pre_rms: float
    post_rms: float
    per_point: list
    folds: int
    holdout_rms: float

    def to_dict(self) -> dict:
        return {
            "pre_rms": self.pre_rms,
            "post_rms": self.post_rms,
            "per_point": self.per_point,
            "folds": self.folds,
            "holdout_rms": self.holdout_rms,
        }


def cross_validate(pairs, config: FitConfig = FitConfig(), folds: int = 3,
                   avatar_id: str = "default") -> CalibrationReport:
    """K-fold validation of the inverse fit.

    Held-out error is the inverse-map prediction error |G(perceived) -
    commanded| on pairs excluded from each fold's fit.
    """
    if folds < 2:
        raise ValueError("cross-validation needs >= 2 folds")
    if len(pairs) < folds:
        raise InsufficientPairs(f"need >= {folds} pairs for {folds} folds")
    full = fit_correction(pairs, config, avatar_id)
    inputs = np.array([p.perceived for p in pairs], dtype=float)
    targets = np.array([p.commanded for p in pairs], dtype=float)
    resid_full = full.evaluate(inputs) - targets
    per_point = [float(np.linalg.norm(r)) for r in resid_full]

    holdout_sq = []
    for k in range(folds):
        mask = np.arange(len(pairs)) % folds == k
        train = [p for p, m in zip(pairs, mask) if not m]
        model = _fit(train, config, avatar_id, enforce_min=False)
        pred = model.evaluate(inputs[mask])
        holdout_sq.extend(np.sum((pred - targets[mask]) ** 2, axis=1).tolist())
    return CalibrationReport(
        pre_rms=full.fit_stats["pre_rms"],
        post_rms=full.fit_stats["post_rms"],
        per_point=per_point,
        folds=folds,
        holdout_rms=float(np.sqrt(np.mean(holdout_sq))),
    )
