"""
Nonsingular Z^d-actions on atomic spaces with exact Radon-Nikodym cocycles,
and the ball sums, ratio averages and shell ratios built on their dual
operators.
"""

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from besicover.concentration import DiscreteMeasure, ceil_norm
from besicover.covering import as_family
from besicover.geometry import NormSpec, annulus_offsets, ball_offsets
from utils.error_handlers import (
    DimensionMismatchError,
    HorizonOverflowError,
    InvalidParameterError,
    ZeroDenominatorError,
    require,
)
from utils.rationals import to_fraction

logger = logging.getLogger(__name__)


def _vector(u, d):
    u = tuple(int(x) for x in u)
    if len(u) != d:
        raise DimensionMismatchError(f"Vector {u} does not lie in Z^{d}")
    return u


def _neg(u):
    return tuple(-x for x in u)


class AtomicActionModel:
    """
    A free nonsingular action of Z^d on an atomic space.

    Subclasses define ``apply``, ``mass`` and ``offsets_to``; the cocycle
    rho(u, w) = mu(T^-u w) / mu(w) follows from the atom masses.
    """
    name = 'abstract'
    measure_preserving = False

    def __init__(self, d):
        require(isinstance(d, int) and d >= 1, f"Dimension must be a positive integer, got {d!r}")
        self.d = d

    def apply(self, u, omega):
        raise NotImplementedError

    def mass(self, omega):
        raise NotImplementedError

    def offsets_to(self, omega, atom, extent):
        """Every u with T^-u omega = atom and max |u_i| <= extent."""
        raise NotImplementedError

    def check_offsets(self, offsets):
        """Hook for models with a freeness horizon."""

    def contains_atom(self, omega):
        return True

    def ball_weight(self, offsets, omega):
        """Sum of rho(u, omega) over the rows of ``offsets``."""
        return sum((rn_derivative(self, tuple(int(x) for x in u), omega) for u in offsets), Fraction(0))

    def to_dict(self):
        return {'model': self.name, 'd': self.d}


class CountingTranslation(AtomicActionModel):
    """
    Z^d acting on itself by translation with counting measure. With
    ``reverse`` the action is w -> w - u, so orbit windows are w + B_n.
    """
    name = 'counting'
    measure_preserving = True

    def __init__(self, d, reverse=False):
        super().__init__(d)
        self.reverse = reverse

    def apply(self, u, omega):
        sign = -1 if self.reverse else 1
        return tuple(w + sign * x for w, x in zip(_vector(omega, self.d), _vector(u, self.d)))

    def mass(self, omega):
        return Fraction(1)

    def offsets_to(self, omega, atom, extent):
        diff = tuple(a - w for a, w in zip(atom, omega))
        return (diff if self.reverse else _neg(diff),)

    def ball_weight(self, offsets, omega):
        return Fraction(len(offsets))

    def to_dict(self):
        data = super().to_dict()
        if self.reverse:
            data['reverse'] = True
        return data


class WeightedTranslation(AtomicActionModel):
    """Translation on Z^d with the finite measure mu({x}) = lambda^{||x||_1}."""
    name = 'weighted'

    def __init__(self, d, lam):
        super().__init__(d)
        lam = to_fraction(lam)
        require(0 < lam < 1, f"lambda must lie in (0, 1), got {lam}")
        self.lam = lam

    def apply(self, u, omega):
        return tuple(w + x for w, x in zip(_vector(omega, self.d), _vector(u, self.d)))

    def mass(self, omega):
        return self.lam ** sum(abs(x) for x in omega)

    def offsets_to(self, omega, atom, extent):
        return (tuple(w - a for w, a in zip(omega, atom)),)

    @property
    def total_mass(self):
        return ((1 + self.lam) / (1 - self.lam)) ** self.d

    def window_mass(self, offsets, omega):
        """Sum of mu(omega - u) over the rows of ``offsets``."""
        if len(offsets) == 0:
            return Fraction(0)
        exponents = np.abs(np.array(omega, dtype=np.int64) - offsets).sum(axis=1)
        histogram = Counter(int(e) for e in exponents)
        return sum((count * self.lam ** e for e, count in histogram.items()), Fraction(0))

    def ball_weight(self, offsets, omega):
        return self.window_mass(offsets, omega) / self.mass(omega)

    def to_dict(self):
        return {'model': self.name, 'd': self.d, 'lambda': str(self.lam)}


class Odometer(AtomicActionModel):
    """
    Z^d acting on (Z/2^N)^d by coordinatewise addition with the product of
    biased Bernoulli measures on the bits of each coordinate.
    """
    name = 'odometer'

    def __init__(self, d, N, biases):
        super().__init__(d)
        require(isinstance(N, int) and N >= 1, f"N must be a positive integer, got {N!r}")
        biases = tuple(to_fraction(p) for p in biases)
        require(len(biases) == d, "The odometer needs one bias per coordinate", DimensionMismatchError)
        require(all(0 < p < 1 for p in biases), "Odometer biases must lie in (0, 1)")
        self.N = N
        self.modulus = 2 ** N
        self.biases = biases

    @property
    def horizon(self):
        """Freeness horizon 2^N: T^u w = w with every |u_i| below it forces u = 0."""
        return self.modulus

    def contains_atom(self, omega):
        return len(omega) == self.d and all(0 <= x < self.modulus for x in omega)

    def _check_atom(self, omega):
        omega = _vector(omega, self.d)
        if not self.contains_atom(omega):
            raise HorizonOverflowError(f"{omega} is not an atom of (Z/2^{self.N})^{self.d}")
        return omega

    def apply(self, u, omega):
        omega = self._check_atom(omega)
        return tuple((w + x) % self.modulus for w, x in zip(omega, _vector(u, self.d)))

    def mass(self, omega):
        omega = self._check_atom(omega)
        result = Fraction(1)
        for x, p in zip(omega, self.biases):
            ones = bin(x).count('1')
            result *= p ** ones * (1 - p) ** (self.N - ones)
        return result

    def offsets_to(self, omega, atom, extent):
        # Past 2^(N-1) two offsets of one ball can reach the same atom.
        axes = []
        for w, a in zip(omega, atom):
            base = (w - a) % self.modulus
            lowest = base - self.modulus * ((base + extent) // self.modulus)
            axes.append(range(lowest, extent + 1, self.modulus))
        return tuple(itertools.product(*axes))

    def check_offsets(self, offsets):
        if len(offsets) and int(np.abs(offsets).max()) >= self.horizon:
            raise HorizonOverflowError(
                f"Ball reaches beyond the freeness horizon {self.horizon} of the odometer (N={self.N})"
            )

    def atoms(self):
        grid = np.indices((self.modulus,) * self.d).reshape(self.d, -1).T
        return [tuple(int(x) for x in row) for row in grid]

    def to_dict(self):
        return {'model': self.name, 'd': self.d, 'N': self.N, 'biases': [str(p) for p in self.biases]}


@dataclass(frozen=True)
class Observable:
    """
    A function on atoms: finitely many explicit values and a constant
    ``default`` elsewhere.
    """
    values: dict = field(default_factory=dict)
    default: Fraction = Fraction(0)

    def __post_init__(self):
        cleaned = {tuple(int(x) for x in k): to_fraction(v) for k, v in dict(self.values).items()}
        default = to_fraction(self.default)
        object.__setattr__(self, 'values', {k: v for k, v in cleaned.items() if v != default})
        object.__setattr__(self, 'default', default)

    def __hash__(self):
        return hash((tuple(sorted(self.values.items())), self.default))

    @classmethod
    def indicator(cls, points):
        return cls({tuple(p): 1 for p in points})

    @classmethod
    def constant(cls, c):
        return cls({}, c)

    def __call__(self, omega):
        return self.values.get(tuple(omega), self.default)

    @property
    def support(self):
        return tuple(sorted(self.values))

    @property
    def is_nonnegative(self):
        return self.default >= 0 and all(v >= 0 for v in self.values.values())

    @property
    def sup_norm(self):
        return max([abs(v) for v in self.values.values()] + [abs(self.default)])

    def scaled(self, c):
        c = to_fraction(c)
        return Observable({k: c * v for k, v in self.values.items()}, c * self.default)

    def absolute(self):
        return Observable({k: abs(v) for k, v in self.values.items()}, abs(self.default))

    def minus(self, other):
        keys = set(self.values) | set(other.values)
        return Observable({k: self(k) - other(k) for k in keys}, self.default - other.default)

    def integral(self, action):
        """The exact integral against the action's base measure."""
        if self.default != 0:
            raise InvalidParameterError("The integral of an observable with a nonzero default is not finite")
        return sum((v * action.mass(k) for k, v in self.values.items()), Fraction(0))


def rn_derivative(action, u, omega):
    """rho(u, w) = (d(T^u mu)/d mu)(w) = mu(T^-u w) / mu(w)."""
    u = _vector(u, action.d)
    return action.mass(action.apply(_neg(u), omega)) / action.mass(omega)


def dual_apply(action, u, f, omega):
    """The dual operator: f(T^-u w) rho(u, w)."""
    u = _vector(u, action.d)
    return f(action.apply(_neg(u), omega)) * rn_derivative(action, u, omega)


def push(action, f, v):
    """The observable T^v f (dual operator)."""
    v = _vector(v, action.d)
    if f.default != 0 and not action.measure_preserving:
        raise InvalidParameterError("Only measure-preserving actions push a nonzero default to a constant")
    values = {}
    for atom, value in f.values.items():
        target = action.apply(v, atom)
        values[target] = (value - f.default) * rn_derivative(action, v, target) + f.default
    return Observable(values, f.default)


def _offsets(family, n):
    family = as_family(family)
    return family, family.offsets(n)


def ball_sum(action, f, norm, n, omega):
    """
    S_n f(w) = sum over u in B_n of (T^u f)(w).

    Only the atoms of supp f are visited, plus one weight sum for the default.
    """
    family, offsets = _offsets(norm, n)
    action.check_offsets(offsets)
    total = Fraction(0)
    if f.default != 0:
        total += f.default * action.ball_weight(offsets, omega)
    extent = int(np.abs(offsets).max()) if len(offsets) else 0
    for atom, value in f.values.items():
        if not action.contains_atom(atom):
            continue
        for u in action.offsets_to(omega, atom, extent):
            if family.contains_offset(u, n):
                total += (value - f.default) * rn_derivative(action, u, omega)
    return total


def ball_sum_direct(action, f, norm, n, omega):
    """S_n f(w) evaluated term by term over every offset of B_n."""
    _, offsets = _offsets(norm, n)
    action.check_offsets(offsets)
    return sum((dual_apply(action, tuple(int(x) for x in u), f, omega) for u in offsets), Fraction(0))


def ratio_average(action, f, g, norm, n, omega):
    """
    R_n(f, g)(w) = S_n f(w) / S_n g(w).

    Raises:
        ZeroDenominatorError: If S_n g(w) = 0
    """
    denominator = ball_sum(action, g, norm, n, omega)
    if denominator == 0:
        raise ZeroDenominatorError(f"R_{n}(f, g)({omega}) undefined: the ball sum of g vanishes")
    return ball_sum(action, f, norm, n, omega) / denominator


def _shell_sum(action, h, norm, n, t, omega):
    inner = to_fraction(n) - to_fraction(t)
    outer = ball_sum(action, h, norm, to_fraction(n) + to_fraction(t), omega)
    return outer - ball_sum(action, h, norm, inner, omega) if inner >= 0 else outer


def shell_ratio(action, h, norm, n, t, omega):
    """
    Sum of T^u h(w) over B_{n+t} minus B_{n-t}, divided by S_n h(w).

    Raises:
        ZeroDenominatorError: If S_n h(w) = 0
    """
    require(to_fraction(t) <= to_fraction(n), f"Shell thickness {t} exceeds the radius {n}")
    require(isinstance(norm, NormSpec), "Shell ratios are taken over norm balls")
    denominator = ball_sum(action, h, norm, n, omega)
    if denominator == 0:
        raise ZeroDenominatorError(f"Shell ratio at n={n}, w={omega} undefined: the ball sum vanishes")
    return _shell_sum(action, h, norm, n, t, omega) / denominator


def chacon_ornstein_ratio(action, f, norm, n, omega):
    return shell_ratio(action, f, norm, n, 1, omega)


@dataclass
class CoboundaryReport:
    v: tuple
    thickness: int
    cancellation: Fraction
    shell_sum: Fraction
    final_bound: Fraction

    @property
    def holds(self):
        return self.cancellation <= self.shell_sum <= self.final_bound


def coboundary_ratio_bound_check(action, f, v, norm, n, omega):
    """
    Check |S_n(f - T^v f)(w)| <= sum over d_{||v||} B_n of T^u|f|(w)
    <= ||f||_inf * sum over the same shell of rho(u, w).

    The shell thickness is ceil(||v||).
    """
    require(f.default == 0, "The coboundary check needs a finitely supported observable")
    v = _vector(v, action.d)
    thickness = ceil_norm(norm, v)
    cancellation = abs(ball_sum(action, f.minus(push(action, f, v)), norm, n, omega))
    shell_sum = _shell_sum(action, f.absolute(), norm, n, thickness, omega)
    shell = annulus_offsets(norm, to_fraction(n) + thickness, to_fraction(n) - thickness)
    action.check_offsets(shell)
    final_bound = f.sup_norm * action.ball_weight(shell, omega)
    report = CoboundaryReport(v, thickness, cancellation, shell_sum, final_bound)
    if not report.holds:
        logger.error(f"Coboundary bound fails at n={n}, w={omega}, v={v}: "
                     f"{cancellation} / {shell_sum} / {final_bound}")
    return report


def transfer_measure(action, f, omega, n, norm):
    """The measure nu({u}) = T^u f(w) on B_{2n}; zero values carry no atom."""
    require(f.is_nonnegative, "The transference measure needs f >= 0")
    offsets = ball_offsets(norm, 2 * to_fraction(n))
    action.check_offsets(offsets)
    masses = {}
    for row in offsets:
        u = tuple(int(x) for x in row)
        value = dual_apply(action, u, f, omega)
        if value > 0:
            masses[u] = value
    return DiscreteMeasure(masses, action.d)


@dataclass
class TransferCheck:
    ball_sum: Fraction
    nu_mass: Fraction
    nu_total: Fraction
    window: tuple

    @property
    def holds(self):
        return self.ball_sum == self.nu_mass


def transfer_identity_check(action, A, omega, n, norm):
    """
    Both sides of S_n 1_A(w) = nu(U) with nu the transference measure of the
    constant 1 and U = {u in B_n : T^-u w in A}.
    """
    A = {tuple(a) for a in A}
    nu = transfer_measure(action, Observable.constant(1), omega, n, norm)
    window = tuple(
        tuple(int(x) for x in u) for u in ball_offsets(norm, n)
        if action.apply(_neg(tuple(int(x) for x in u)), omega) in A
    )
    check = TransferCheck(
        ball_sum=ball_sum(action, Observable.indicator(A), norm, n, omega),
        nu_mass=nu.mass(window),
        nu_total=nu.total,
        window=window,
    )
    if not check.holds:
        logger.error(f"Transference identity fails at n={n}, w={omega}: {check.ball_sum} != {check.nu_mass}")
    return check


def ratio_tail_bound(action, f, g, norm, n, omega):
    """
    Exact bound on |R_n(f, g)(w) - int f / int g| for weighted translation:
    (||f|| W + (int f / int g) ||g|| W) / (int g - ||g|| W), where W is the
    mass of lambda^{||x||_1} outside the window w - B_n. None when the
    denominator is not positive.
    """
    require(isinstance(action, WeightedTranslation), "The tail bound is defined for weighted translation")
    int_f, int_g = f.integral(action), g.integral(action)
    require(int_g > 0, "The tail bound needs int g > 0")
    offsets = ball_offsets(norm, n)
    tail = action.total_mass - action.window_mass(offsets, omega)
    denominator = int_g - g.sup_norm * tail
    if denominator <= 0:
        return None
    return (f.sup_norm * tail + (int_f / int_g) * g.sup_norm * tail) / denominator


def shell_vanishing_radius(norm, omega, support, t):
    """
    n0 = ceil(max ||w - v|| over the support) + t: for counting translation the
    shell ratio is exactly 0 for every n >= n0.
    """
    support = [tuple(v) for v in support]
    require(support, "shell_vanishing_radius needs a nonempty support")
    return max(ceil_norm(norm, tuple(w - x for w, x in zip(omega, v))) for v in support) + int(t)


def doubling_transfer_ratio(norm, n):
    """|B_2n| / |B_n| as used when transferring to the ball B_2n."""
    return Fraction(len(ball_offsets(norm, 2 * n)), len(ball_offsets(norm, n)))


def doubling_transfer_bound(norm, n_max=64):
    """Largest |B_2n| / |B_n| over n <= n_max, and whether it stays <= 4^d."""
    worst = max(doubling_transfer_ratio(norm, n) for n in range(1, n_max + 1))
    return worst, worst <= 4 ** norm.d


def build_action(config):
    """Action model from its config dict (already validated)."""
    model = config['model']
    if model == 'counting':
        return CountingTranslation(config['d'], reverse=config.get('reverse', False))
    if model == 'weighted':
        return WeightedTranslation(config['d'], config['lambda'])
    if model == 'odometer':
        return Odometer(config['d'], config['N'], config['biases'])
    raise InvalidParameterError(f"Unknown action model: {model!r}")
