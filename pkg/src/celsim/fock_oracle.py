"""Phase-averaged two-mode master equation on a truncated Fock basis.

The density matrix lives on |n_a, n_b> with n_a <= n_max_a, n_b <= n_max_b
(mode a is the slow index). The generator is assembled term by term from
sparse ladder operators. Time stepping uses the sparse superoperator
restricted to the block that holds the vacuum, so cutoffs of ~12 per mode
stay cheap.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .errors import CutoffExceeded, StepTooLarge
from .params import SystemParams, derive
from .rk4 import check_grid, rk4_step, substeps

log = logging.getLogger(__name__)

DEFAULT_CUTOFFS = (12, 12)
TAIL_TOL = 1e-6
STEP_GUARD = 0.1


def destroy(n_max: int) -> sps.csr_matrix:
    return sps.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr")


@functools.lru_cache(maxsize=8)
def ladder_ops(n_max_a: int, n_max_b: int):
    """Sparse (a, b) on the product basis."""
    if n_max_a < 1 or n_max_b < 1:
        raise ValueError("Fock cutoffs must be >= 1")
    eye_a = sps.identity(n_max_a + 1, format="csr")
    eye_b = sps.identity(n_max_b + 1, format="csr")
    a = sps.kron(destroy(n_max_a), eye_b, format="csr")
    b = sps.kron(eye_a, destroy(n_max_b), format="csr")
    return a, b


@dataclass
class TruncatedState:
    n_max_a: int
    n_max_b: int
    rho: np.ndarray
    t: float = 0.0

    @classmethod
    def vacuum(cls, n_max_a=DEFAULT_CUTOFFS[0], n_max_b=DEFAULT_CUTOFFS[1]):
        return cls.fock(0, 0, n_max_a, n_max_b)

    @classmethod
    def fock(cls, n_a, n_b, n_max_a=DEFAULT_CUTOFFS[0], n_max_b=DEFAULT_CUTOFFS[1]):
        dim = (n_max_a + 1) * (n_max_b + 1)
        rho = np.zeros((dim, dim), dtype=complex)
        k = n_a * (n_max_b + 1) + n_b
        rho[k, k] = 1.0
        return cls(n_max_a, n_max_b, rho)

    @property
    def dim(self) -> int:
        return (self.n_max_a + 1) * (self.n_max_b + 1)

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def populations(self) -> np.ndarray:
        """Joint photon-number distribution P[n_a, n_b]."""
        return np.real(np.diag(self.rho)).reshape(self.n_max_a + 1, self.n_max_b + 1)

    def tail_occupancy(self) -> float:
        """Largest population of the top Fock level of either mode."""
        pop = self.populations()
        return float(max(pop[-1, :].sum(), pop[:, -1].sum()))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])


@dataclass(frozen=True)
class Coefficients:
    """Rates multiplying each bracket of the master equation."""

    loss_a: float       # kappa/2
    gain_a: float       # AC/2B
    loss_b: float       # (AC/B + kappa)/2
    cross: float        # AD/2B, applied once per D+ and D- bracket
    corr: float         # AE/2B, applied once per E+ and E- bracket
    pump: float         # A zeta'(1 + zeta' zeta)/2B

    @classmethod
    def from_params(cls, p: SystemParams) -> "Coefficients":
        rp = derive(p)
        g = p.A / (2.0 * rp.B)
        return cls(
            loss_a=0.5 * p.kappa,
            gain_a=g * rp.C,
            loss_b=0.5 * (p.A * rp.C / rp.B + p.kappa),
            cross=g * rp.D,
            corr=g * rp.E,
            pump=g * rp.coherence,
        )


class Liouvillian:
    """d rho/dt = K_L rho + rho K_R + sum_k c_k X_k rho Y_k."""

    def __init__(self, p: SystemParams, n_max_a: int, n_max_b: int):
        self.params = p
        self.cutoffs = (n_max_a, n_max_b)
        c = self.coefficients = Coefficients.from_params(p)
        a, b = ladder_ops(n_max_a, n_max_b)
        ad, bd = a.T.tocsr(), b.T.tocsr()
        ada, aad = ad @ a, a @ ad
        bdb = bd @ b
        bdad, ab = bd @ ad, a @ b

        left = []
        right = []
        sandwich = []
        # kappa/2 [2 a rho a+ - a+a rho - rho a+a]
        sandwich.append((2 * c.loss_a, a, ad))
        left.append((-c.loss_a, ada))
        right.append((-c.loss_a, ada))
        # AC/2B [2 a+ rho a - rho a a+ - a a+ rho]
        sandwich.append((2 * c.gain_a, ad, a))
        left.append((-c.gain_a, aad))
        right.append((-c.gain_a, aad))
        # (AC/B + kappa)/2 [2 b rho b+ - rho b+b - b+b rho]
        sandwich.append((2 * c.loss_b, b, bd))
        left.append((-c.loss_b, bdb))
        right.append((-c.loss_b, bdb))
        # AD+/2B [b rho b+ - a+ rho a - b+b rho + a a+ rho]
        sandwich += [(c.cross, b, bd), (-c.cross, ad, a)]
        left += [(-c.cross, bdb), (c.cross, aad)]
        # AD-/2B [b rho b+ - a+ rho a - rho b+b + rho a a+]
        sandwich += [(c.cross, b, bd), (-c.cross, ad, a)]
        right += [(-c.cross, bdb), (c.cross, aad)]
        # -AE+/2B [a+ rho b+ - b+a+ rho + b rho a - a b rho]
        sandwich += [(-c.corr, ad, bd), (-c.corr, b, a)]
        left += [(c.corr, bdad), (c.corr, ab)]
        # -AE-/2B [a+ rho b+ - rho b+a+ + b rho a - rho a b]
        sandwich += [(-c.corr, ad, bd), (-c.corr, b, a)]
        right += [(c.corr, bdad), (c.corr, ab)]
        # A zeta'(1+zeta' zeta)/2B [b+a+ rho - rho b+a+ - a b rho + rho a b]
        left += [(c.pump, bdad), (-c.pump, ab)]
        right += [(-c.pump, bdad), (c.pump, ab)]

        self.K_left = _combine(left)
        self.K_right_T = _combine(right).T.tocsr()
        merged: dict[tuple[int, int], list] = {}
        for coef, X, Y in sandwich:
            key = (id(X), id(Y))
            if key in merged:
                merged[key][0] += coef
            else:
                merged[key] = [coef, X, Y.T.tocsr()]
        self.sandwich = [(coef, X, YT) for coef, X, YT in merged.values() if coef != 0.0]
        self._sandwich_terms = sandwich
        self._super = None

    def __call__(self, t, rho: np.ndarray) -> np.ndarray:
        out = self.K_left @ rho
        out += (self.K_right_T @ rho.T).T
        for coef, X, YT in self.sandwich:
            out += coef * (YT @ (X @ rho).T).T
        return out

    def superoperator(self) -> sps.csr_matrix:
        """Sparse generator acting on rho.ravel() (row-major).

        Uses vec(X rho Y) = (X kron Y^T) vec(rho).
        """
        if self._super is None:
            dim = self.K_left.shape[0]
            eye = sps.identity(dim, format="csr")
            S = sps.kron(self.K_left, eye) + sps.kron(eye, self.K_right_T)
            for coef, X, Y in self._sandwich_terms:
                S = S + coef * sps.kron(X, Y.T)
            S = S.tocsr()
            S.eliminate_zeros()
            self._super = S
        return self._super

    def sector(self) -> np.ndarray:
        """Flat indices of rho with equal (n_a - n_b) on ket and bra.

        Every term moves ket and bra charge together, so this block is
        invariant and contains the vacuum. Checked, not assumed.
        """
        n_max_a, n_max_b = self.cutoffs
        na, nb = np.divmod(np.arange((n_max_a + 1) * (n_max_b + 1)), n_max_b + 1)
        charge = na - nb
        keep = (charge[:, None] == charge[None, :]).ravel()
        S = self.superoperator()
        leak = S[~keep][:, keep]
        if leak.count_nonzero():
            raise RuntimeError("generator couples the charge-balanced sector to the rest")
        return np.flatnonzero(keep)

    def rate_bound(self) -> float:
        """Gershgorin bound on the spectral radius of the vacuum block."""
        keep = self.sector()
        S = self.superoperator()[keep][:, keep]
        return float(abs(S).sum(axis=1).max())


def _combine(terms):
    out = None
    for coef, op in terms:
        out = coef * op if out is None else out + coef * op
    return out.tocsr()


@functools.lru_cache(maxsize=16)
def _liouvillian(p: SystemParams, n_max_a: int, n_max_b: int) -> Liouvillian:
    return Liouvillian(p, n_max_a, n_max_b)


def liouvillian_apply(s: TruncatedState, p: SystemParams) -> np.ndarray:
    return _liouvillian(p, s.n_max_a, s.n_max_b)(s.t, s.rho)


def expectations(s: TruncatedState) -> dict:
    """Moments by trace against operator matrices.

    Besides n_a, n_b and <ab>, returns <a>, <b>, <a^2>, <b^2> and <a+ b>,
    which all vanish for evolution started in the vacuum.
    """
    a, b = ladder_ops(s.n_max_a, s.n_max_b)
    rho = s.rho

    def ev(op):
        # Tr(op rho) without forming the product
        return complex(np.sum(op.T.multiply(rho)))

    ad = a.T.tocsr()
    return {
        "n_a": ev(ad @ a).real,
        "n_b": ev(b.T @ b).real,
        "ab": ev(a @ b),
        "a_sq": ev(a @ a),
        "b_sq": ev(b @ b),
        "a": ev(a),
        "b": ev(b),
        "adag_b": ev(ad @ b),
    }


@dataclass
class FockRun:
    params: SystemParams
    cutoffs: tuple
    dt: float
    records: list = field(default_factory=list)
    final: TruncatedState | None = None

    @property
    def cutoff_limited(self) -> bool:
        return any(r["cutoff_limited"] for r in self.records)

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records])


def _record(s: TruncatedState, tail_tol: float) -> dict:
    m = expectations(s)
    ab = m["ab"].real
    tail = s.tail_occupancy()
    rec = {
        "t": s.t,
        "n_a": m["n_a"],
        "n_b": m["n_b"],
        "ab": ab,
        "dc_minus_sq": 1.0 + m["n_a"] + m["n_b"] - 2.0 * ab,
        "dc_plus_sq": 1.0 + m["n_a"] + m["n_b"] + 2.0 * ab,
        "trace": s.trace().real,
        "tail": tail,
        "hermiticity": s.hermiticity_error(),
        "max_vanishing": max(abs(m[k]) for k in ("a", "b", "a_sq", "b_sq", "adag_b")),
        "cutoff_limited": tail > tail_tol,
    }
    if log.isEnabledFor(logging.DEBUG):
        rec["min_eigenvalue"] = s.min_eigenvalue()
        log.debug("t=%.6g min eigenvalue %.3e", s.t, rec["min_eigenvalue"])
    return rec


def evolve(p: SystemParams, t_grid, dt: float = 1e-3, cutoffs=DEFAULT_CUTOFFS,
           tail_tol: float = TAIL_TOL, on_cutoff: str = "raise") -> FockRun:
    """RK4-integrate the master equation from the vacuum.

    ``on_cutoff="raise"`` stops with CutoffExceeded as soon as the top Fock
    level of either mode holds more than ``tail_tol``; ``"flag"`` keeps
    going and marks the records instead.
    """
    if on_cutoff not in ("raise", "flag"):
        raise ValueError(f"on_cutoff must be 'raise' or 'flag', got {on_cutoff!r}")
    times = check_grid(t_grid)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    n_max_a, n_max_b = (int(c) for c in cutoffs)
    L = _liouvillian(p, n_max_a, n_max_b)
    if dt * L.rate_bound() > STEP_GUARD:
        raise StepTooLarge(
            f"dt * rate bound = {dt * L.rate_bound():.3g} > {STEP_GUARD} (dt={dt:g})")

    keep = L.sector()
    S = L.superoperator()[keep][:, keep].tocsr()
    rhs = lambda t, x: S @ x  # noqa: E731
    s = TruncatedState.vacuum(n_max_a, n_max_b)
    x = s.rho.ravel()[keep]
    run = FockRun(p, (n_max_a, n_max_b), dt)
    t_prev = 0.0
    for t in times:
        n, h = substeps(t - t_prev, dt)
        tt = t_prev
        for _ in range(n):
            x = rk4_step(rhs, tt, x, h)
            tt += h
        flat = np.zeros(s.dim * s.dim, dtype=complex)
        flat[keep] = x
        s = TruncatedState(n_max_a, n_max_b, flat.reshape(s.dim, s.dim), float(t))
        rec = _record(s, tail_tol)
        run.records.append(rec)
        if rec["cutoff_limited"] and on_cutoff == "raise":
            raise CutoffExceeded(
                f"tail occupancy {rec['tail']:.3e} > {tail_tol:g} at t={t:g} "
                f"with cutoffs {run.cutoffs}")
        t_prev = t
    run.final = s
    return run
