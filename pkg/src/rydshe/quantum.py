"""Steady-state response of the interacting three-level ladder medium.

Level scheme: |1> ground, |2> intermediate, |3> Rydberg.  A weak probe
(Rabi frequency Omega_p, detuning Delta2) drives 1<->2, a strong coupling
field (Omega_c, Delta_c) drives 2<->3; the two-photon detuning is
Delta3 = Delta2 + Delta_c.  Rydberg pairs interact through the van der
Waals potential V(r) = C6 / r^6.

Everything here works in "atomic" units: angular frequencies in rad/us
(so a quantity quoted as f MHz enters as 2*pi*f), lengths in um, C6 in
rad/us * um^6.  This keeps all matrix entries O(1)-O(100) and the small
dense solves well conditioned.

The probe coherence is expanded in powers of the (real, non-negative)
probe Rabi frequency:

    rho21 = Omega_p * rho21^(1) + Omega_p^3 * rho21^(3) + ...

rho21^(1) comes from a closed form, rho21^(3) splits into a local part
(single-atom saturation) and a nonlocal part driven by the pair
correlator <sigma33(r') sigma31(r)> integrated against V over the shell
[R_b, 3 R_b] outside the blockade radius.  The correlator hierarchy is
closed at two atoms / third order and reduces to one 5x5, two 4x4 and
one 8x8 complex linear solve per separation.

Sign conventions are pinned by two independent checks exercised in the
test suite: (a) the full nonperturbative local steady state (oracle
module) must agree with the expansion order by order, and (b) at V = 0
every two-body solution must factorize exactly into products of
one-body solutions.  Both checks fix, in particular,

    rho31^(1) = -Omega_c * rho21^(1) / d31 = +Omega_c / (d21*d31 - Omega_c^2)

and the right-hand sides q2 = -rhorho13,31^(2) and q6 = -rho23^(2)
- rhorho13,21^(2) of the third-order system; the alternative sign
choices break both checks at O(1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.constants as const

from .errors import DomainError, PropagationError, SingularityError, ConvergenceError

TWO_PI = 2.0 * math.pi

# relative residual allowed for any dense solve in this module
SOLVE_RESIDUAL_TOL = 1e-10

# default Gauss-Legendre order for the nonlocal shell integral
DEFAULT_QUAD_NODES = 64


def derive_dipole_moment(Gamma21_si: float, lambda_si: float) -> float:
    """Dipole matrix element (C*m) from the spontaneous decay rate.

    Inverts the free-space emission formula Gamma = omega^3 p^2 /
    (3 pi eps0 hbar c^3) for p.  Inputs are SI: Gamma21 in rad/s,
    wavelength in m.
    """
    if Gamma21_si < 0 or lambda_si <= 0:
        raise DomainError("decay rate must be >= 0 and wavelength > 0")
    omega = TWO_PI * const.c / lambda_si
    return math.sqrt(3 * math.pi * const.epsilon_0 * const.hbar * const.c**3
                     * Gamma21_si / omega**3)


def blockade_radius(Omega_c: float, gamma12: float, C6: float) -> float:
    """Blockade radius R_b (um) where |C6|/R_b^6 equals Omega_c^2/gamma12."""
    if Omega_c == 0:
        raise DomainError("Omega_c = 0 gives a divergent blockade radius")
    if gamma12 <= 0 or C6 == 0:
        raise DomainError("need gamma12 > 0 and C6 != 0")
    return (abs(C6) * gamma12 / abs(Omega_c) ** 2) ** (1.0 / 6.0)


@dataclass(frozen=True)
class AtomParams:
    """Atomic constants of the medium (rad/us, um units).

    gamma21/gamma32/gamma31 are the coherence decay rates entering the
    complex denominators d_ab.  `chi_prefactor` is
    K = Na |p21|^2 / (eps0 hbar), expressed in rad/us, so that
    chi = K * rho21 / Omega_p.
    """

    Gamma21: float          # population decay 2 -> 1
    Gamma32: float          # population decay 3 -> 2
    gamma21: float
    gamma32: float
    gamma31: float
    C6: float               # vdW coefficient, sign included (rad/us um^6)
    Na: float               # number density (um^-3)
    lambda_p: float         # probe wavelength (um)
    p21: float              # dipole moment (C m)
    chi_prefactor: float    # K (rad/us)

    def __post_init__(self):
        if self.Gamma21 <= 0:
            raise DomainError("Gamma21 must be positive")
        if self.Gamma32 < 0 or self.Na < 0:
            raise DomainError("Gamma32 and Na must be non-negative")
        if self.lambda_p <= 0:
            raise DomainError("lambda_p must be positive")

    @classmethod
    def from_decay_rates(cls, Gamma21: float, Gamma32: float, C6: float,
                         Na: float, lambda_p: float,
                         gamma21: float | None = None,
                         gamma32: float | None = None,
                         gamma31: float | None = None) -> "AtomParams":
        """Build the parameter set from population decay rates.

        Coherence decay defaults follow the half-sum-of-level-widths
        rule gamma_ab = (Gamma_a + Gamma_b)/2 with level widths
        Gamma_1 = 0, Gamma_2 = Gamma21, Gamma_3 = Gamma32:

            gamma21 = Gamma21 / 2
            gamma31 = Gamma32 / 2           (no extra dephasing)
            gamma32 = (Gamma21 + Gamma32) / 2

        All three accept explicit overrides.
        """
        if Gamma21 <= 0:
            raise DomainError("Gamma21 must be positive")
        g21 = Gamma21 / 2 if gamma21 is None else gamma21
        g31 = Gamma32 / 2 if gamma31 is None else gamma31
        g32 = (Gamma21 + Gamma32) / 2 if gamma32 is None else gamma32
        p21 = derive_dipole_moment(Gamma21 * 1e6, lambda_p * 1e-6)
        # K = Na p^2/(eps0 hbar): um^-3 -> m^-3 is 1e18, 1/s -> rad/us is 1e-6
        K = Na * 1e18 * p21**2 / (const.epsilon_0 * const.hbar) * 1e-6
        return cls(Gamma21=Gamma21, Gamma32=Gamma32, gamma21=g21, gamma32=g32,
                   gamma31=g31, C6=C6, Na=Na, lambda_p=lambda_p, p21=p21,
                   chi_prefactor=K)

    def with_density(self, Na: float) -> "AtomParams":
        """Same atom at a different number density (K rescales linearly)."""
        if Na < 0:
            raise DomainError("Na must be non-negative")
        scale = 0.0 if self.Na == 0 else Na / self.Na
        K = self.chi_prefactor * scale if self.Na else \
            Na * 1e18 * self.p21**2 / (const.epsilon_0 * const.hbar) * 1e-6
        return AtomParams(Gamma21=self.Gamma21, Gamma32=self.Gamma32,
                          gamma21=self.gamma21, gamma32=self.gamma32,
                          gamma31=self.gamma31, C6=self.C6, Na=Na,
                          lambda_p=self.lambda_p, p21=self.p21,
                          chi_prefactor=K)

    def blockade_radius(self, Omega_c: float) -> float:
        # the EIT linewidth uses gamma12 = gamma21 (the only symmetric reading)
        return blockade_radius(Omega_c, self.gamma21, self.C6)


@dataclass(frozen=True)
class DriveParams:
    """Probe/coupling Rabi frequencies and detunings (rad/us).

    Omega_p and Omega_c are taken real and non-negative; conjugate
    coherences are then plain complex conjugates.  Delta3 is always
    Delta2 + Delta_c.
    """

    Omega_p: float
    Omega_c: float
    Delta2: float
    Delta_c: float

    def __post_init__(self):
        if self.Omega_p < 0 or self.Omega_c < 0:
            raise DomainError("Rabi frequencies are taken real and >= 0")

    @property
    def Delta3(self) -> float:
        return self.Delta2 + self.Delta_c

    def detuned(self, Delta2: float) -> "DriveParams":
        return DriveParams(self.Omega_p, self.Omega_c, Delta2, self.Delta_c)


@dataclass(frozen=True)
class ComplexDenominators:
    """d_ab = Delta_a - Delta_b + i gamma_ab with Delta_1 = 0."""

    d21: complex
    d31: complex
    d32: complex
    d13: complex
    d12: complex
    d23: complex

    @classmethod
    def from_params(cls, drive: DriveParams, atom: AtomParams) -> "ComplexDenominators":
        D2, D3 = drive.Delta2, drive.Delta3
        return cls(d21=D2 + 1j * atom.gamma21,
                   d31=D3 + 1j * atom.gamma31,
                   d32=D3 - D2 + 1j * atom.gamma32,
                   d13=-D3 + 1j * atom.gamma31,
                   d12=-D2 + 1j * atom.gamma21,
                   d23=D2 - D3 + 1j * atom.gamma32)


def _solve_checked(A: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    """Dense LU solve (partial pivoting) with a relative-residual guard."""
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise PropagationError(f"non-finite entries entering the {what} solve")
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"singular matrix in {what}: {exc}") from exc
    resid = np.linalg.norm(A @ x - b)
    scale = max(np.linalg.norm(b), np.linalg.norm(A) * np.linalg.norm(x), 1e-300)
    if not np.isfinite(resid) or resid / scale > SOLVE_RESIDUAL_TOL:
        raise SingularityError(
            f"{what} solve residual {resid / scale:.2e} exceeds {SOLVE_RESIDUAL_TOL:.0e}")
    return x


def first_order_coherences(drive: DriveParams, atom: AtomParams) -> tuple[complex, complex]:
    """(rho21^(1), rho31^(1)) from the linear-response closed form.

    rho21^(1) = -d31 / (d21 d31 - Omega_c^2),
    rho31^(1) = -Omega_c rho21^(1) / d31 = Omega_c / (d21 d31 - Omega_c^2).
    """
    d = ComplexDenominators.from_params(drive, atom)
    den = d.d21 * d.d31 - drive.Omega_c**2
    if den == 0:
        raise SingularityError(
            f"EIT denominator vanishes at Delta2 = {drive.Delta2:g} rad/us")
    return -d.d31 / den, drive.Omega_c / den


def second_order_onebody(drive: DriveParams, atom: AtomParams
                         ) -> tuple[complex, complex, complex, complex]:
    """(rho11^(2), rho22^(2), rho33^(2), rho32^(2)) populations/coherence.

    Collects the O(Omega_p^2) steady-state equations, with the trace
    condition rho11+rho22+rho33 = 0 replacing the redundant ground-state
    equation.  rho23^(2) is carried as an independent unknown and checked
    to equal conj(rho32^(2)) by the tests (real drives).
    """
    d = ComplexDenominators.from_params(drive, atom)
    Oc = drive.Omega_c
    r21, r31 = first_order_coherences(drive, atom)
    r12, r13 = np.conj(r21), np.conj(r31)
    # unknowns: (rho11, rho22, rho33, rho32, rho23)
    A = np.array([
        [1, 1, 1, 0, 0],
        [0, 0, -1j * atom.Gamma32, Oc, -Oc],
        [0, -1j * atom.Gamma21, 1j * atom.Gamma32, -Oc, Oc],
        [0, -Oc, Oc, -d.d32, 0],
        [0, Oc, -Oc, 0, -d.d23],
    ], dtype=complex)
    b = np.array([0, 0, r12 - r21, -r31, r13], dtype=complex)
    u = _solve_checked(A, b, "second-order one-body (5x5)")
    return u[0], u[1], u[2], u[3]


def _second_order_systems(drive: DriveParams, atom: AtomParams):
    """Shared pieces for the two-body builds: first-order values and the
    r-independent 'mixed' 4x4 solution (rr13_31, rr12_31, rr12_21, rr13_21)."""
    d = ComplexDenominators.from_params(drive, atom)
    Oc = drive.Omega_c
    r21, r31 = first_order_coherences(drive, atom)
    r12, r13 = np.conj(r21), np.conj(r31)
    MA = np.array([
        [d.d13 + d.d31, -Oc, 0, Oc],
        [-Oc, d.d12 + d.d31, Oc, 0],
        [0, Oc, d.d12 + d.d21, -Oc],
        [Oc, 0, -Oc, d.d13 + d.d21],
    ], dtype=complex)
    qA = np.array([0, r31, r21 - r12, -r13], dtype=complex)
    zA = _solve_checked(MA, qA, "second-order two-body (mixed 4x4)")
    return d, r21, r31, zA


def _coherence_pair_batch(d: ComplexDenominators, Oc: float,
                          r21: complex, r31: complex,
                          V: np.ndarray) -> np.ndarray:
    """Batched V-dependent 4x4: (rr31_31, rr21_31, rr21_21, rr31_21)^(2)."""
    n = V.shape[0]
    MB = np.empty((n, 4, 4), dtype=complex)
    MB[:] = np.array([
        [2 * d.d31, Oc, 0, Oc],
        [Oc, d.d21 + d.d31, Oc, 0],
        [0, Oc, 2 * d.d21, Oc],
        [Oc, 0, Oc, d.d21 + d.d31],
    ], dtype=complex)
    MB[:, 0, 0] -= V
    qB = np.broadcast_to(np.array([0, -r31, -2 * r21, -r31], dtype=complex),
                         (n, 4))
    return _solve_checked(MB, qB[..., None], "second-order two-body (pair 4x4)")[..., 0]


def second_order_twobody(drive: DriveParams, atom: AtomParams, r: float) -> np.ndarray:
    """The eight O(Omega_p^2) two-body correlators at separation r (um).

    Order: (rr13_31, rr12_31, rr12_21, rr13_21, rr31_31, rr21_31,
    rr21_21, rr31_21).  Only the second quadruple sees V(r) = C6/r^6;
    the first is r-independent.
    """
    if r <= 0:
        raise DomainError("separation r must be positive")
    d, r21, r31, zA = _second_order_systems(drive, atom)
    V = np.array([atom.C6 / r**6])
    try:
        zB = _coherence_pair_batch(d, drive.Omega_c, r21, r31, V)[0]
    except SingularityError as exc:
        raise SingularityError(f"{exc} at r = {r:g} um, Delta2 = "
                               f"{drive.Delta2:g} rad/us") from exc
    return np.concatenate([zA, zB])


def _third_order_batch(drive: DriveParams, atom: AtomParams,
                       V: np.ndarray) -> np.ndarray:
    """Batched 8x8 third-order solve over an array of pair energies V.

    Returns shape (n, 8) in the order (rr33_31, rr23_31, rr32_31,
    rr33_21, rr22_31, rr23_21, rr32_21, rr22_21)^(3).
    """
    d, r21, r31, zA = _second_order_systems(drive, atom)
    rr13_31, rr12_31, rr12_21, rr13_21 = zA
    r11, r22, r33, r32 = second_order_onebody(drive, atom)
    r23 = np.conj(r32)
    Oc = drive.Omega_c
    G12, G23 = atom.Gamma21, atom.Gamma32
    zB = _coherence_pair_batch(d, Oc, r21, r31, V)
    n = V.shape[0]
    Q = np.empty((n, 8, 8), dtype=complex)
    Q[:] = np.array([
        [d.d31 + 1j * G23, Oc, -Oc, Oc, 0, 0, 0, 0],
        [Oc, d.d23 + d.d31, 0, 0, -Oc, Oc, 0, 0],
        [-Oc, 0, d.d31 + d.d32, 0, Oc, 0, Oc, 0],
        [Oc, 0, 0, d.d21 + 1j * G23, 0, Oc, -Oc, 0],
        [-1j * G23, -Oc, Oc, 0, d.d31 + 1j * G12, 0, 0, Oc],
        [0, Oc, 0, Oc, 0, d.d21 + d.d23, 0, -Oc],
        [0, 0, Oc, -Oc, 0, 0, d.d21 + d.d32, Oc],
        [0, 0, 0, -1j * G23, Oc, -Oc, Oc, d.d21 + 1j * G12],
    ], dtype=complex)
    # the pair energy shifts the double-Rydberg coherences (rows 1 and 3)
    Q[:, 0, 0] -= V
    Q[:, 2, 2] -= V
    q = np.empty((n, 8), dtype=complex)
    q[:, 0] = 0.0
    q[:, 1] = -rr13_31
    q[:, 2] = zB[:, 0]                    # rr31_31^(2)(V)
    q[:, 3] = -r33
    q[:, 4] = zB[:, 1] - rr12_31          # rr21_31^(2)(V) - rr12_31^(2)
    q[:, 5] = -r23 - rr13_21
    q[:, 6] = -r32 + zB[:, 3]             # rr31_21^(2)(V)
    q[:, 7] = -r22 - rr12_21 + zB[:, 2]   # rr21_21^(2)(V)
    return _solve_checked(Q, q[..., None], "third-order two-body (8x8)")[..., 0]


def third_order_twobody(drive: DriveParams, atom: AtomParams, r: float) -> np.ndarray:
    """x^(3), the eight O(Omega_p^3) two-body correlators at separation r.

    Component 0 is rr33_31^(3), the source of the nonlocal susceptibility.
    """
    if r <= 0:
        raise DomainError("separation r must be positive")
    V = np.array([atom.C6 / r**6])
    try:
        return _third_order_batch(drive, atom, V)[0]
    except SingularityError as exc:
        raise SingularityError(f"{exc} at r = {r:g} um, Delta2 = "
                               f"{drive.Delta2:g} rad/us") from exc


def nonlocal_integral(drive: DriveParams, atom: AtomParams,
                      n_nodes: int = DEFAULT_QUAD_NODES,
                      upper_factor: float = 3.0,
                      check_convergence: bool = False,
                      convergence_tol: float = 1e-8) -> complex:
    """I = Na * 4 pi * int_{R_b}^{u.f.*R_b} s^2 V(s) rr33_31^(3)(s) ds.

    The substitution u = 1/s^3 flattens the s^-6 kernel exactly
    (s^2 V ds -> (C6/3) du), leaving a smooth integrand handled by
    fixed-order Gauss-Legendre quadrature.  With `check_convergence`
    the node count is doubled and the relative drift must stay below
    `convergence_tol`.
    """
    if atom.C6 == 0 or atom.Na == 0:
        return 0.0 + 0.0j
    Rb = atom.blockade_radius(drive.Omega_c)

    def gauss(n):
        u_hi = Rb**-3
        u_lo = (upper_factor * Rb)**-3
        x, w = np.polynomial.legendre.leggauss(n)
        u = 0.5 * (u_hi - u_lo) * x + 0.5 * (u_hi + u_lo)
        wu = 0.5 * (u_hi - u_lo) * w
        x1 = _third_order_batch(drive, atom, atom.C6 * u**2)[:, 0]
        return atom.Na * 4.0 * np.pi * (atom.C6 / 3.0) * np.sum(wu * x1)

    val = gauss(n_nodes)
    if check_convergence:
        val2 = gauss(2 * n_nodes)
        drift = abs(val2 - val) / max(abs(val2), 1e-300)
        if drift > convergence_tol:
            raise ConvergenceError(
                f"quadrature drift {drift:.2e} on node doubling "
                f"{n_nodes}->{2*n_nodes} exceeds {convergence_tol:.0e}")
        val = val2
    return complex(val)


def third_order_coherence(drive: DriveParams, atom: AtomParams,
                          n_nodes: int = DEFAULT_QUAD_NODES
                          ) -> tuple[complex, complex]:
    """(rho21^(3,local), rho21^(3,nonlocal)).

    local    = -[d31 (rho22^(2) - rho11^(2)) - Omega_c rho32^(2)]
               / (Omega_c^2 - d21 d31)
    nonlocal = Omega_c * I / (Omega_c^2 - d21 d31)

    with I from `nonlocal_integral` (the density prefactor lives in I).
    """
    d = ComplexDenominators.from_params(drive, atom)
    den = drive.Omega_c**2 - d.d21 * d.d31
    if den == 0:
        raise SingularityError(
            f"EIT denominator vanishes at Delta2 = {drive.Delta2:g} rad/us")
    r11, r22, r33, r32 = second_order_onebody(drive, atom)
    local = -(d.d31 * (r22 - r11) - drive.Omega_c * r32) / den
    if atom.C6 == 0 or drive.Omega_c == 0 or atom.Na == 0:
        return complex(local), 0.0 + 0.0j
    I = nonlocal_integral(drive, atom, n_nodes=n_nodes)
    return complex(local), complex(drive.Omega_c * I / den)


@dataclass(frozen=True)
class SusceptibilityBreakdown:
    """chi split into linear, local-Kerr and nonlocal-Kerr contributions."""

    chi1: complex
    chi3_local_contrib: complex
    chi3_nonlocal_contrib: complex

    @property
    def total(self) -> complex:
        return self.chi1 + self.chi3_local_contrib + self.chi3_nonlocal_contrib

    @property
    def total_local(self) -> complex:
        """Total with the interaction-induced part switched off."""
        return self.chi1 + self.chi3_local_contrib


def susceptibility(drive: DriveParams, atom: AtomParams,
                   n_nodes: int = DEFAULT_QUAD_NODES) -> SusceptibilityBreakdown:
    """Probe susceptibility chi = K rho21 / Omega_p, split by order.

    chi1 scales as Na, chi3_nonlocal_contrib as Na^2 (one power through
    K, one through the shell integral).
    """
    K = atom.chi_prefactor
    r21_1, _ = first_order_coherences(drive, atom)
    loc, nl = third_order_coherence(drive, atom, n_nodes=n_nodes)
    Op2 = drive.Omega_p**2
    return SusceptibilityBreakdown(chi1=K * r21_1,
                                   chi3_local_contrib=K * Op2 * loc,
                                   chi3_nonlocal_contrib=K * Op2 * nl)


@dataclass(frozen=True)
class CorrelatorSet:
    """Every correlator entering rho21^(3) at one separation (debug dump)."""

    r: float
    rho21_1: complex
    rho31_1: complex
    rho11_2: complex
    rho22_2: complex
    rho33_2: complex
    rho32_2: complex
    twobody2: tuple
    twobody3: tuple

    @classmethod
    def at(cls, drive: DriveParams, atom: AtomParams, r: float) -> "CorrelatorSet":
        r21, r31 = first_order_coherences(drive, atom)
        r11, r22, r33, r32 = second_order_onebody(drive, atom)
        z2 = second_order_twobody(drive, atom, r)
        x3 = third_order_twobody(drive, atom, r)
        return cls(r=r, rho21_1=r21, rho31_1=r31, rho11_2=r11, rho22_2=r22,
                   rho33_2=r33, rho32_2=r32,
                   twobody2=tuple(complex(v) for v in z2),
                   twobody3=tuple(complex(v) for v in x3))

    def to_json(self) -> str:
        def enc(v):
            if isinstance(v, complex):
                return {"re": v.real, "im": v.imag}
            if isinstance(v, tuple):
                return [enc(x) for x in v]
            return v
        return json.dumps({k: enc(v) for k, v in asdict(self).items()},
                          indent=2, sort_keys=True)
