"""Cone metric spaces, mappings, coefficient families, and hypothesis checking.

The checker verifies, pair by pair, the full set of certifying conditions
for the operator-coefficient contraction:

* ``i1``  — the coefficient norm sum ``|A1| + |A2| + |A3| + 2 |A4|`` stays
  below ``1/k`` (k the cone's normal constant),
* ``i2``  — the composite operator ``S = (I - A3 - A4)^{-1}(A1 + A2 + A4)``
  has norm below 1,
* ``i3``  — ``A1 + A2`` maps the cone into itself,
* ``hb``  — ``A2`` maps the cone into itself,
* ``i4``  — ``A4`` maps the cone into itself,
* ``i5``  — the resolvent ``(I - A3 - A4)^{-1}`` maps the cone into itself,
* the contraction inequality itself, via its residual vector.

On finite point sets the sweep is exhaustive ("verified"); on euclidean
domains it is sampled ("not falsified"), and the report records which.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cones import DEFAULT_MEMBERSHIP_TOL, NormedSpace, PolyhedralCone, cone_contains
from .errors import ConefixError, ContractViolationError
from .linops import (
    LinearOperator,
    first_escaping_generator,
    invariance_check,
    operator_norm,
    resolvent,
    s_operator,
)

CONDITIONS = ("i1", "i2", "i3", "hb", "i4", "i5", "contraction")


# ---------------------------------------------------------------------------
# Point domains
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FinitePoints:
    """Finite point set given by labels, optionally with coordinates.

    ``positions`` maps each label to a point of R^m; it is required by
    lifted metrics with a euclidean base and ignored otherwise.
    """

    labels: tuple[str, ...]
    positions: dict[str, np.ndarray] | None = None

    def __post_init__(self):
        self.labels = tuple(str(l) for l in self.labels)
        if len(set(self.labels)) != len(self.labels):
            raise ContractViolationError("point labels must be unique")
        if not self.labels:
            raise ContractViolationError("finite point set must be nonempty")
        if self.positions is not None:
            self.positions = {
                str(k): np.atleast_1d(np.asarray(v, dtype=float)) for k, v in self.positions.items()
            }
            missing = set(self.labels) - set(self.positions)
            if missing:
                raise ContractViolationError(f"positions missing for labels {sorted(missing)}")


@dataclass(frozen=True)
class EuclideanPoints:
    """Point domain R^m."""

    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ContractViolationError("euclidean point dimension must be >= 1")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LiftedMetric:
    """Vector-valued metric ``d(x, y) = rho(x, y) * weight``.

    ``rho`` is the base scalar metric (euclidean distance between point
    coordinates, or the discrete 0/1 metric) and ``weight`` is a nonzero
    cone element, so the lift lands in the cone whenever rho >= 0.
    """

    base: str
    weight: np.ndarray

    def __post_init__(self):
        if self.base not in ("euclidean", "discrete"):
            raise ContractViolationError(f"unknown base metric {self.base!r}")
        self.weight = np.atleast_1d(np.asarray(self.weight, dtype=float))


@dataclass(eq=False)
class TableMetric:
    """Explicit distance table for a finite point set.

    Entries are stored per ordered pair as given; lookups fall back to the
    reversed pair, and a missing diagonal entry means zero.  Deliberately
    inconsistent tables are representable so the axiom suite can report on
    them instead of the constructor refusing them.
    """

    entries: dict[tuple[str, str], np.ndarray]

    def __post_init__(self):
        self.entries = {
            (str(a), str(b)): np.atleast_1d(np.asarray(v, dtype=float))
            for (a, b), v in self.entries.items()
        }


class ConeMetricSpace:
    """A point domain together with a cone-valued metric."""

    def __init__(self, cone: PolyhedralCone, points, metric):
        self.cone = cone
        self.points = points
        self.metric = metric
        p = cone.space.dim
        if isinstance(metric, LiftedMetric):
            if metric.weight.shape != (p,):
                raise ContractViolationError("metric weight must live in the ambient space")
            if not cone_contains(cone, metric.weight):
                raise ContractViolationError("metric weight must be a cone element")
            if cone.space.norm(metric.weight) == 0.0:
                raise ContractViolationError("metric weight must be nonzero")
            if metric.base == "euclidean" and isinstance(points, FinitePoints):
                if points.positions is None:
                    raise ContractViolationError(
                        "euclidean base over finite points needs positions"
                    )
        elif isinstance(metric, TableMetric):
            if not isinstance(points, FinitePoints):
                raise ContractViolationError("table metrics require a finite point set")
            for (a, b), v in metric.entries.items():
                if v.shape != (p,):
                    raise ContractViolationError(
                        f"table entry for ({a}, {b}) must live in the ambient space"
                    )
                if a not in points.labels or b not in points.labels:
                    raise ContractViolationError(f"table entry ({a}, {b}) names unknown points")
        else:
            raise ContractViolationError("metric must be a LiftedMetric or a TableMetric")

    @property
    def is_finite(self) -> bool:
        return isinstance(self.points, FinitePoints)

    @property
    def labels(self) -> tuple[str, ...]:
        if not self.is_finite:
            raise ContractViolationError("euclidean domains have no label list")
        return self.points.labels

    def check_point(self, x):
        if self.is_finite:
            if x not in self.points.labels:
                raise ContractViolationError(f"unknown point label {x!r}")
            return x
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if arr.shape != (self.points.m,):
            raise ContractViolationError(
                f"point of shape {arr.shape} does not live in R^{self.points.m}"
            )
        return arr

    def _rho(self, x, y) -> float:
        base = self.metric.base
        if base == "discrete":
            if self.is_finite:
                return 0.0 if x == y else 1.0
            return 0.0 if np.array_equal(x, y) else 1.0
        if self.is_finite:
            px = self.points.positions[x]
            py = self.points.positions[y]
        else:
            px, py = x, y
        return float(np.linalg.norm(px - py))

    def d(self, x, y) -> np.ndarray:
        """Cone-valued distance between two points."""
        x = self.check_point(x)
        y = self.check_point(y)
        if isinstance(self.metric, LiftedMetric):
            return self._rho(x, y) * self.metric.weight
        if (x, y) in self.metric.entries:
            return self.metric.entries[(x, y)].copy()
        if (y, x) in self.metric.entries:
            return self.metric.entries[(y, x)].copy()
        if x == y:
            return np.zeros(self.cone.space.dim)
        raise ContractViolationError(f"metric table has no entry for ({x}, {y})")

    def d_norm(self, x, y) -> float:
        """Ambient norm of the distance vector; the scalar the solver watches."""
        return self.cone.space.norm(self.d(x, y))

    def points_equal(self, x, y, eps: float) -> bool:
        if self.is_finite:
            return x == y
        return self.d_norm(x, y) <= eps

    def canonical_pairs(self):
        """All ordered label pairs (diagonal included), label-lexicographic."""
        labels = sorted(self.labels)
        return [(a, b) for a in labels for b in labels]

    def sample_point(self, rng):
        if self.is_finite:
            return self.points.labels[int(rng.integers(0, len(self.points.labels)))]
        return rng.uniform(-10.0, 10.0, self.points.m)


# ---------------------------------------------------------------------------
# Mappings
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class TableMapping:
    """Self-map of a finite point set given as an explicit table."""

    table: dict[str, str]

    def __post_init__(self):
        self.table = {str(k): str(v) for k, v in self.table.items()}

    def apply(self, space: ConeMetricSpace, x):
        x = space.check_point(x)
        if x not in self.table:
            raise ContractViolationError(f"mapping table is not defined at {x!r}")
        return space.check_point(self.table[x])


@dataclass(eq=False)
class AffineMapping:
    """Self-map ``x -> B x + c`` of a euclidean point domain."""

    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        m = self.c.shape[0]
        if self.b.shape != (m, m):
            raise ContractViolationError("affine map needs a square matrix matching c")

    def apply(self, space: ConeMetricSpace, x):
        if space.is_finite:
            raise ContractViolationError("affine mappings act on euclidean point domains only")
        arr = space.check_point(x)
        return self.b @ arr + self.c


# ---------------------------------------------------------------------------
# Coefficient families
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ConstantCoefficients:
    """One operator quadruple shared by every point pair."""

    a1: LinearOperator
    a2: LinearOperator
    a3: LinearOperator
    a4: LinearOperator

    is_constant = True

    def at(self, x, y):
        return (self.a1, self.a2, self.a3, self.a4)


@dataclass(eq=False)
class PerPairCoefficients:
    """Operator quadruples given per ordered label pair."""

    table: dict[tuple[str, str], tuple]

    is_constant = False

    def at(self, x, y):
        key = (x, y)
        if key not in self.table:
            raise ContractViolationError(f"no coefficients declared for pair {key}")
        return self.table[key]


@dataclass(eq=False)
class CallableCoefficients:
    """Operator quadruples produced by a user callback ``fn(x, y)``."""

    fn: Callable

    is_constant = False

    def at(self, x, y):
        return self.fn(x, y)


def reduce_scalar(a1: float, a2: float, a3: float, a4: float) -> ConstantCoefficients:
    """Classical scalar coefficients as 1x1 operators on the half-line cone.

    Each operator is ``t -> a_i t`` on E = R, so its induced norm is exactly
    ``a_i`` and the composite norm reduces to the familiar quotient
    ``(a1 + a2 + a4) / (1 - a3 - a4)``.
    """
    vals = (a1, a2, a3, a4)
    if any(float(a) < 0 for a in vals):
        raise ContractViolationError("scalar coefficients must be nonnegative")
    space = NormedSpace(1, "two")
    ops = tuple(LinearOperator(np.array([[float(a)]]), space) for a in vals)
    return ConstantCoefficients(*ops)


# ---------------------------------------------------------------------------
# Contraction residual and hypothesis checking
# ---------------------------------------------------------------------------


def contraction_residual(space: ConeMetricSpace, mapping, coeffs, x, y) -> np.ndarray:
    """Residual of the contraction inequality at one ordered pair.

    Returns ``A1 d(x,y) + A2 d(x,Tx) + A3 d(y,Ty) + A4 d(x,Ty) + A4 d(y,Tx)
    - d(Tx,Ty)``; the inequality holds at (x, y) iff this vector is a cone
    member.
    """
    x = space.check_point(x)
    y = space.check_point(y)
    tx = mapping.apply(space, x)
    ty = mapping.apply(space, y)
    a1, a2, a3, a4 = coeffs.at(x, y)
    rhs = (
        a1.matrix @ space.d(x, y)
        + a2.matrix @ space.d(x, tx)
        + a3.matrix @ space.d(y, ty)
        + a4.matrix @ space.d(x, ty)
        + a4.matrix @ space.d(y, tx)
    )
    return rhs - space.d(tx, ty)


@dataclass(eq=False)
class Witness:
    """One failing pair with the data that convicts it."""

    condition: str
    x: object
    y: object
    detail: str
    value: float | None = None
    vector: np.ndarray | None = None


@dataclass(eq=False)
class HypothesisReport:
    """Outcome of a hypothesis sweep.

    ``alpha`` and ``beta`` are witnessed maxima over the checked pairs (the
    coefficient norm sum and the composite operator norm); ``exhaustive``
    distinguishes a verified finite sweep from a sampled one.
    """

    alpha: float
    beta: float
    k: float
    i1_pass: bool
    i2_pass: bool
    i3_pass: bool
    hb_pass: bool
    i4_pass: bool
    i5_pass: bool
    contraction_pass: bool
    witnesses: list[Witness]
    pairs_checked: int
    exhaustive: bool
    alpha_pair: tuple | None = None
    beta_pair: tuple | None = None
    declared_alpha: float | None = None
    declared_beta: float | None = None
    declaration_mismatches: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.i1_pass
            and self.i2_pass
            and self.i3_pass
            and self.hb_pass
            and self.i4_pass
            and self.i5_pass
            and self.contraction_pass
        )

    def failing_conditions(self) -> list[str]:
        flags = {
            "i1": self.i1_pass,
            "i2": self.i2_pass,
            "i3": self.i3_pass,
            "hb": self.hb_pass,
            "i4": self.i4_pass,
            "i5": self.i5_pass,
            "contraction": self.contraction_pass,
        }
        return [name for name in CONDITIONS if not flags[name]]


MAX_WITNESSES = 25


def _resolve_pairs(space: ConeMetricSpace, pair_source):
    if pair_source == "all":
        if not space.is_finite:
            raise ContractViolationError(
                "exhaustive pair sweeps need a finite space; use ('sampled', n, seed)"
            )
        return space.canonical_pairs(), True
    if isinstance(pair_source, tuple) and len(pair_source) == 3 and pair_source[0] == "sampled":
        _, n, seed = pair_source
        if int(n) < 1:
            raise ContractViolationError("sampled pair source needs n >= 1")
        rng = np.random.default_rng(int(seed))
        # Sequential draws keep any prefix of the sample identical, so
        # enlarging n can only add pairs (checker monotonicity).
        pairs = [(space.sample_point(rng), space.sample_point(rng)) for _ in range(int(n))]
        return pairs, False
    raise ContractViolationError(f"unknown pair source {pair_source!r}")


def check_hypotheses(
    space: ConeMetricSpace,
    mapping,
    coeffs,
    k: float | None = None,
    pair_source="all",
    tol: float = DEFAULT_MEMBERSHIP_TOL,
    declared_alpha: float | None = None,
    declared_beta: float | None = None,
) -> HypothesisReport:
    """Sweep the certifying conditions over a pair source.

    ``k`` defaults to the cone's declared normal constant.  For constant
    coefficient families the operator-level conditions are evaluated once
    and reused across pairs; the contraction residual is always per pair.
    Ties in the witnessed maxima are broken by the first pair in canonical
    order, so the report is independent of evaluation order.
    """
    k = space.cone.normal_constant if k is None else float(k)
    if k < 1.0:
        raise ContractViolationError("normal constant must be >= 1")
    pairs, exhaustive = _resolve_pairs(space, pair_source)
    cone = space.cone

    alpha = -np.inf
    beta = -np.inf
    alpha_pair = None
    beta_pair = None
    flags = {"i3": True, "hb": True, "i4": True, "i5": True}
    contraction_ok = True
    beta_defined = True
    witnesses: list[Witness] = []
    cache: dict = {}

    def witness(condition, x, y, detail, value=None, vector=None):
        if len(witnesses) < MAX_WITNESSES:
            witnesses.append(Witness(condition, x, y, detail, value, vector))

    def operator_stats(ops):
        a1, a2, a3, a4 = ops
        norms = tuple(operator_norm(op) for op in ops)
        stats = {
            "alpha": norms[0] + norms[1] + norms[2] + 2.0 * norms[3],
            "i3": invariance_check(a1 + a2, cone, tol),
            "hb": invariance_check(a2, cone, tol),
            "i4": invariance_check(a4, cone, tol),
        }
        try:
            inv = resolvent(a3, a4)
        except ConefixError as exc:
            stats["i5"] = False
            stats["i5_detail"] = str(exc)
            stats["s_norm"] = None
            return stats
        stats["i5"] = invariance_check(inv, cone, tol)
        if not stats["i5"]:
            escape = first_escaping_generator(inv, cone, tol)
            stats["i5_detail"] = (
                "resolvent maps a generator out of the cone" if escape else "resolvent escaped"
            )
        stats["s_norm"] = operator_norm(s_operator(a1, a2, a3, a4))
        return stats

    for x, y in pairs:
        ops = coeffs.at(x, y)
        key = "const" if getattr(coeffs, "is_constant", False) else None
        if key is not None and key in cache:
            stats = cache[key]
        else:
            stats = operator_stats(ops)
            if key is not None:
                cache[key] = stats

        if stats["alpha"] > alpha:
            alpha = stats["alpha"]
            alpha_pair = (x, y)
        for name in ("i3", "hb", "i4", "i5"):
            if not stats[name] and flags[name]:
                flags[name] = False
                if name == "i5":
                    detail = stats.get("i5_detail", "resolvent escaped the cone")
                else:
                    detail = f"{name}: operator maps a generator out of the cone"
                witness(name, x, y, detail)
            elif not stats[name]:
                pass  # already recorded; one witness per operator condition suffices
        if stats["s_norm"] is None:
            beta_defined = False
        elif stats["s_norm"] > beta:
            beta = stats["s_norm"]
            beta_pair = (x, y)

        r = contraction_residual(space, mapping, coeffs, x, y)
        if not cone_contains(cone, r, tol):
            if contraction_ok or len(witnesses) < MAX_WITNESSES:
                worst = float(np.min(cone.facets @ r))
                witness(
                    "contraction",
                    x,
                    y,
                    f"residual leaves the cone (worst facet product {worst:.6g})",
                    value=worst,
                    vector=r,
                )
            contraction_ok = False

    if alpha == -np.inf:
        alpha = 0.0
    i1 = alpha < 1.0 / k
    if not i1:
        witness(
            "i1",
            *(alpha_pair or (None, None)),
            f"coefficient norm sum {alpha:.17g} is not below 1/k = {1.0 / k:.17g}",
            value=alpha,
        )
    if beta == -np.inf:
        beta = float("nan")
        beta_defined = False
    i2 = beta_defined and beta < 1.0
    if beta_defined and not i2:
        witness(
            "i2",
            *(beta_pair or (None, None)),
            f"composite operator norm {beta:.17g} is not below 1",
            value=beta,
        )
    if not beta_defined:
        i2 = False

    mismatches = []
    if declared_alpha is not None and abs(declared_alpha - alpha) > 1e-9 * max(1.0, abs(alpha)):
        mismatches.append(
            f"declared alpha {declared_alpha:.17g} disagrees with witnessed {alpha:.17g}"
        )
    if declared_beta is not None and beta_defined and abs(declared_beta - beta) > 1e-9 * max(
        1.0, abs(beta)
    ):
        mismatches.append(
            f"declared beta {declared_beta:.17g} disagrees with witnessed {beta:.17g}"
        )

    return HypothesisReport(
        alpha=float(alpha),
        beta=float(beta),
        k=k,
        i1_pass=i1,
        i2_pass=i2,
        i3_pass=flags["i3"],
        hb_pass=flags["hb"],
        i4_pass=flags["i4"],
        i5_pass=flags["i5"],
        contraction_pass=contraction_ok,
        witnesses=witnesses,
        pairs_checked=len(pairs),
        exhaustive=exhaustive,
        alpha_pair=alpha_pair,
        beta_pair=beta_pair,
        declared_alpha=declared_alpha,
        declared_beta=declared_beta,
        declaration_mismatches=mismatches,
    )


# ---------------------------------------------------------------------------
# Metric axiom suite
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class MetricAxiomReport:
    """Outcome of the metric axiom sweep: positivity (a), symmetry (b), triangle (c)."""

    axiom_a_pass: bool
    axiom_b_pass: bool
    axiom_c_pass: bool
    pairs_checked: int
    triples_checked: int
    exhaustive: bool
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.axiom_a_pass and self.axiom_b_pass and self.axiom_c_pass


def check_metric_axioms(
    space: ConeMetricSpace,
    n_samples: int = 200,
    seed: int = 0,
    tol: float = DEFAULT_MEMBERSHIP_TOL,
) -> MetricAxiomReport:
    """Sweep the metric axioms over all pairs/triples (finite) or a sample.

    Axiom (a): distances are cone members, vanish exactly on the diagonal,
    and are nonzero off it.  Axiom (b): symmetry.  Axiom (c): the triangle
    slack ``d(x,z) + d(z,y) - d(x,y)`` is a cone member.
    """
    cone = space.cone
    if space.is_finite:
        labels = sorted(space.labels)
        pairs = [(a, b) for a in labels for b in labels]
        triples = [(a, b, c) for a in labels for b in labels for c in labels]
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        pts = [space.sample_point(rng) for _ in range(max(3, n_samples))]
        pairs = [(pts[i], pts[(i * 7 + 1) % len(pts)]) for i in range(len(pts))]
        triples = [
            (pts[i], pts[(i * 3 + 1) % len(pts)], pts[(i * 5 + 2) % len(pts)])
            for i in range(len(pts))
        ]
        exhaustive = False

    a_ok = b_ok = c_ok = True
    messages: list[str] = []

    def note(msg):
        if len(messages) < 25:
            messages.append(msg)

    for x, y in pairs:
        dxy = space.d(x, y)
        if not cone_contains(cone, dxy, tol):
            a_ok = False
            note(f"axiom (a): d({x}, {y}) is not a cone member")
        same = (x == y) if space.is_finite else bool(np.array_equal(x, y))
        nxy = cone.space.norm(dxy)
        if same and nxy > tol:
            a_ok = False
            note(f"axiom (a): d({x}, {x}) = {nxy:.6g} is nonzero")
        if not same and nxy <= tol:
            a_ok = False
            note(f"axiom (a): d({x}, {y}) vanishes for distinct points")
        dyx = space.d(y, x)
        if cone.space.norm(dxy - dyx) > tol:
            b_ok = False
            note(f"axiom (b): d({x}, {y}) != d({y}, {x})")
    for x, y, z in triples:
        slack = space.d(x, z) + space.d(z, y) - space.d(x, y)
        if not cone_contains(cone, slack, tol):
            c_ok = False
            note(f"axiom (c): triangle slack for ({x}, {z}, {y}) leaves the cone")

    return MetricAxiomReport(
        axiom_a_pass=a_ok,
        axiom_b_pass=b_ok,
        axiom_c_pass=c_ok,
        pairs_checked=len(pairs),
        triples_checked=len(triples),
        exhaustive=exhaustive,
        messages=messages,
    )
