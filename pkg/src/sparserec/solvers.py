"""Interior-point solvers for l1 and total-variation recovery programs.

Three programs are covered, all taking measurements ``y = A x + e``:

* ``solve_bp``    -- min ||x||_1  s.t.  A x = y, as a linear program on the
  split ``x = p - q`` with ``p, q >= 0``, solved by a primal-dual
  interior-point method whose n-by-n normal equations are solved by CG.
* ``solve_bpdn``  -- min ||x||_1  s.t.  ||A x - y||_2 <= epsilon, via a
  primal log-barrier over the epigraph ``-u <= x <= u`` plus the residual
  cone, with Newton steps reduced to an m-by-m system solved by CG.
* ``solve_tv``    -- min sum_ij ||G_ij x||_2  s.t.  ||A x - y||_2 <= epsilon
  over per-pixel second-order cones, same barrier machinery.

Everything is matrix-free: the only access to ``A`` is through
``forward``/``adjoint`` applies, so the solvers run unchanged on dense and
structured operators.  The reported ``duality_gap`` is the barrier gap
bound divided by ``max(1, objective)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from .linops import (MeasurementOperator, check_index_set, grad_cols,
                     grad_cols_adjoint, grad_rows, grad_rows_adjoint,
                     restrict_columns)

_LS_MAX_HALVINGS = 48
_BP_MAX_ITERS = 200


@dataclass
class SolverOptions:
    """Knobs of the interior-point solvers (defaults suit all shipped runs)."""

    gap_tolerance: float = 1e-8          # relative to max(1, objective)
    max_newton_iters: int = 50           # per barrier stage
    barrier_increase: float = 10.0       # multiplicative barrier schedule
    cg_tolerance: float = 1e-8           # relative residual target for inner CG
    cg_max_iters: int | None = None      # default 4 * (system size)
    ls_alpha: float = 0.01               # backtracking sufficient-decrease slope
    ls_beta: float = 0.5                 # backtracking shrink factor
    max_barrier_stages: int = 60
    iter_log: Optional[IO[str]] = None   # line per Newton step: stage,iter,gap,residual


@dataclass
class RecoveryProblem:
    """One recovery instance: operator, measurements, radius, objective.

    ``tv_shape=None`` selects the l1 objective; ``tv_shape=(h, w)`` selects
    total variation on the h-by-w grid (requires ``h * w == op.m``).
    """

    op: MeasurementOperator
    y: np.ndarray
    epsilon: float
    tv_shape: tuple[int, int] | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape != (self.op.n,):
            raise ValueError(f"y must have shape ({self.op.n},), got {self.y.shape}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and nonnegative, got {self.epsilon}")
        if self.tv_shape is not None:
            h, w = self.tv_shape
            if h * w != self.op.m:
                raise ValueError(f"tv_shape {self.tv_shape} incompatible with m={self.op.m}")


@dataclass
class SolverResult:
    x_sharp: np.ndarray
    objective_value: float
    residual_norm: float
    duality_gap: float
    newton_iterations: int
    barrier_stages: int
    converged: bool
    message: str = ""

    CSV_HEADER = "objective,residual,duality_gap,newton_iterations,barrier_stages,converged"

    def to_csv_row(self) -> str:
        return (f"{self.objective_value:.12g},{self.residual_norm:.12g},"
                f"{self.duality_gap:.12g},{self.newton_iterations},"
                f"{self.barrier_stages},{int(self.converged)}")


def l1_norm(x) -> float:
    """Sum of absolute entries."""
    return float(np.abs(np.asarray(x, dtype=float)).sum())


def tv_norm(x, height: int, width: int) -> float:
    """Sum over pixels of the l2 norm of the forward-difference pair."""
    img = np.asarray(x, dtype=float).reshape(height, width)
    return float(np.hypot(grad_rows(img), grad_cols(img)).sum())


def cgsolve(apply_fn, b, rel_tol: float, max_iters: int):
    """Bare conjugate gradients on an SPD apply; returns (x, rel_res, iters).

    Stops at the relative residual target, the iteration cap, or on loss of
    positive curvature (the current iterate is returned as-is).
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, 0.0, 0
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    it = 0
    for it in range(1, max_iters + 1):
        ap = apply_fn(p)
        pap = float(p @ ap)
        if not np.isfinite(pap) or pap <= 0.0:
            break
        alpha = rs / pap
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= rel_tol * bnorm:
            return x, float(np.sqrt(rs_new) / bnorm), it
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, float(np.sqrt(rs) / bnorm), it


def _as_measurement(op, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (op.n,):
        raise ValueError(f"y must have shape ({op.n},), got {y.shape}")
    return y


def _feasible_start(op: MeasurementOperator, y: np.ndarray, eps: float,
                    cg_cap: int) -> np.ndarray | None:
    """x strictly inside the residual ball via CG on the normal equations.

    Aims deep inside (``0.1 eps``) so the cone barrier starts with slack;
    anything within ``0.9 eps`` is accepted, else None (rank-deficient A or
    an unreachable radius).
    """
    w, rel, _ = cgsolve(lambda v: op.forward(op.adjoint(v)), y,
                        0.1 * eps / max(np.linalg.norm(y), 1e-300), cg_cap)
    x = op.adjoint(w)
    if np.linalg.norm(op.forward(x) - y) <= 0.9 * eps:
        return x
    return None


def _log_line(opts: SolverOptions, stage: int, it: int, gap: float, residual: float):
    if opts.iter_log is not None:
        opts.iter_log.write(f"{stage},{it},{gap:.6e},{residual:.6e}\n")


# Per-stage Newton exit: the standard self-concordant decrement satisfies
# lambda^2 / 2 <= this pure number (lambda <= 0.25, inside the quadratic
# basin), which certifies the iterate is centered at the current barrier
# temperature and makes the (number of cones) / tau gap bound trustworthy.
_CENTER_TARGET = 0.03125


# ---------------------------------------------------------------------------
# l1 with residual cone (log-barrier Newton-CG)
# ---------------------------------------------------------------------------

def _bpdn_center(op, y, eps, x, u, tau, opts, stage, dec_tol):
    """Newton-center the epigraph barrier at temperature ``tau`` (in place).

    Returns (newton_iters, ok); ``ok`` is False when the iteration cap, the
    line search, or the CG direction gave out before the decrement target.
    The iterate always stays strictly interior; a stage that stalls simply
    hands its progress to the next barrier stage.
    """
    m = x.shape[0]
    cg_cap = opts.cg_max_iters or 4 * m
    for it in range(1, opts.max_newton_iters + 1):
        r = op.forward(x) - y
        dm = u - x
        dp = u + x
        se = 0.5 * (eps * eps - float(r @ r))
        if se <= 0.0 or dm.min() <= 0.0 or dp.min() <= 0.0:
            # rounding pushed the iterate onto a cone boundary
            return it - 1, False
        atr = op.adjoint(r)
        d1 = 1.0 / dm
        d2 = 1.0 / dp
        gx_t = d1 - d2 + atr / se                 # tau * grad_x
        gu_t = tau - d1 - d2                      # tau * grad_u
        d1sq = d1 * d1
        d2sq = d2 * d2
        sig = d1sq + d2sq
        sig_ratio = (d2sq - d1sq) / sig
        diag_main = 4.0 * d1sq * d2sq / sig

        def apply_h(w_vec):
            return (diag_main * w_vec + op.adjoint(op.forward(w_vec)) / se
                    + atr * (float(atr @ w_vec) / (se * se)))

        rhs = -gx_t + sig_ratio * gu_t
        dx, cg_rel, _ = cgsolve(apply_h, rhs, opts.cg_tolerance, cg_cap)
        if cg_rel > 0.5:
            return it, False
        du = -(gu_t + (d2sq - d1sq) * dx) / sig
        # standard Newton decrement^2 of the self-concordant barrier
        # tau * sum(u) + barrier (gx_t/gu_t are its gradient components)
        lam2 = -(float(gx_t @ dx) + float(gu_t @ du))
        phi = (float(u.sum())
               + (-np.log(dm).sum() - np.log(dp).sum() - np.log(se)) / tau)
        _log_line(opts, stage, it, lam2 / 2.0, float(np.linalg.norm(r)))
        if lam2 <= 0.0:
            return it, False
        if lam2 / 2.0 <= dec_tol:
            return it, True

        # largest feasible step, then backtrack on the barrier value
        adx = op.forward(dx)
        smax = 1.0 / 0.99
        shrink = du - dx
        neg = shrink < 0
        if np.any(neg):
            smax = min(smax, float((dm[neg] / -shrink[neg]).min()))
        grow = du + dx
        neg = grow < 0
        if np.any(neg):
            smax = min(smax, float((dp[neg] / -grow[neg]).min()))
        aq = float(adx @ adx)
        bq = float(r @ adx)
        c_m = float(r @ r) - eps * eps
        if aq > 0.0:
            smax = min(smax, (-bq + np.sqrt(bq * bq - aq * c_m)) / aq)
        elif bq > 0.0:
            smax = min(smax, -c_m / (2.0 * bq))
        step = min(1.0, 0.99 * smax)
        dirderiv = (float(gx_t @ dx) + float(gu_t @ du)) / tau
        accepted = False
        for _ in range(_LS_MAX_HALVINGS):
            xn = x + step * dx
            un = u + step * du
            rn = r + step * adx
            dmn = un - xn
            dpn = un + xn
            sen = 0.5 * (eps * eps - float(rn @ rn))
            if dmn.min() > 0.0 and dpn.min() > 0.0 and sen > 0.0:
                phin = (float(un.sum())
                        + (-np.log(dmn).sum() - np.log(dpn).sum() - np.log(sen)) / tau)
                if phin <= phi + opts.ls_alpha * step * dirderiv:
                    accepted = True
                    break
            step *= opts.ls_beta
        if not accepted:
            return it, False
        x[:] = xn
        u[:] = un
        r = rn
    return opts.max_newton_iters, False


def solve_bpdn(problem: RecoveryProblem, opts: SolverOptions | None = None) -> SolverResult:
    """Minimize ||x||_1 subject to ||A x - y||_2 <= epsilon.

    ``epsilon = 0`` is routed to :func:`solve_bp`.  When ``||y|| <= epsilon``
    the zero vector is optimal and returned immediately.  Pathological
    instances (no strictly feasible start) come back non-converged with a
    diagnostic message rather than raising.
    """
    opts = opts or SolverOptions()
    if problem.tv_shape is not None:
        raise ValueError("this is the l1 entry point; use solve_tv for tv_shape problems")
    op, y, eps = problem.op, problem.y, float(problem.epsilon)
    if eps == 0.0:
        res = solve_bp(op, y, opts)
        res.message = (res.message + " (epsilon=0 routed to the equality-constrained program)").strip()
        return res
    m = op.m
    ynorm = float(np.linalg.norm(y))
    if ynorm <= eps:
        return SolverResult(np.zeros(m), 0.0, ynorm, 0.0, 0, 0, True,
                            "zero vector is feasible, hence optimal")
    x = _feasible_start(op, y, eps, opts.cg_max_iters or 4 * m)
    if x is None:
        return SolverResult(np.zeros(m), 0.0, ynorm, np.inf, 0, 0, False,
                            "no strictly feasible start found; operator may be rank-deficient "
                            "or epsilon is too tight")
    u = 1.05 * np.abs(x) + 0.01 * np.abs(x).max()
    ncones = 2 * m + 1
    tau = max(1.0, ncones / float(u.sum()))
    stages = 0
    newton_total = 0
    uncentered = 0
    converged = False
    while stages < opts.max_barrier_stages:
        iters, ok = _bpdn_center(op, y, eps, x, u, tau, opts, stages + 1,
                                 _CENTER_TARGET)
        stages += 1
        newton_total += iters
        if not ok:
            uncentered += 1
        obj = l1_norm(x)
        gap_rel = (ncones / tau) / max(1.0, obj)
        if gap_rel <= opts.gap_tolerance:
            converged = True
            break
        tau *= opts.barrier_increase
    residual = float(np.linalg.norm(op.forward(x) - y))
    obj = l1_norm(x)
    gap_rel = (ncones / tau) / max(1.0, obj)
    if converged:
        msg = ("" if uncentered == 0 else
               f"{uncentered} stage(s) ended before reaching the centering target")
    else:
        msg = "barrier loop exhausted before reaching the gap tolerance"
    return SolverResult(x, obj, residual, gap_rel, newton_total, stages, converged, msg)


# ---------------------------------------------------------------------------
# l1 with equality constraint (primal-dual interior point on the split LP)
# ---------------------------------------------------------------------------

def solve_bp(op: MeasurementOperator, y, opts: SolverOptions | None = None) -> SolverResult:
    """Minimize ||x||_1 subject to A x = y.

    Solves the standard-form program min 1'(p+q), A(p-q) = y, p,q >= 0 by
    an infeasible primal-dual path-following method; each step solves the
    n-by-n system A diag(p/sp + q/sq) A' dnu = rhs by CG.  Raises
    RuntimeError when the least-squares initialization cannot reach ``y``
    (rank-deficient operator).
    """
    opts = opts or SolverOptions()
    y = _as_measurement(op, y)
    n, m = op.n, op.m
    ynorm = float(np.linalg.norm(y))
    if ynorm == 0.0:
        return SolverResult(np.zeros(m), 0.0, 0.0, 0.0, 0, 0, True,
                            "zero measurement vector; zero solution")
    w, rel, _ = cgsolve(lambda v: op.forward(op.adjoint(v)), y, 1e-12, max(100, 4 * n))
    if rel > 1e-6 or not np.isfinite(rel):
        raise RuntimeError(
            f"least-squares initialization failed (relative residual {rel:.3e}); "
            "the operator appears rank-deficient")
    x = op.adjoint(w)
    pad = 0.1 * float(np.abs(x).mean()) + 1e-12
    p = np.maximum(x, 0.0) + pad
    q = np.maximum(-x, 0.0) + pad
    sp = np.ones(m)
    sq = np.ones(m)
    nu = np.zeros(n)
    cg_cap = opts.cg_max_iters or 4 * n
    gap = float(p @ sp + q @ sq)
    alpha_prev = 1.0
    it = 0
    converged = False
    for it in range(1, _BP_MAX_ITERS + 1):
        rp = op.forward(p - q) - y
        atn = op.adjoint(nu)
        rdp = atn + sp - 1.0
        rdq = -atn + sq - 1.0
        gap = float(p @ sp + q @ sq)
        obj = float(p.sum() + q.sum())
        gap_rel = gap / max(1.0, obj)
        feas = float(np.linalg.norm(rp)) / max(1.0, ynorm)
        dual_feas = max(float(np.abs(rdp).max()), float(np.abs(rdq).max())) \
            if m else 0.0
        if gap_rel <= opts.gap_tolerance and feas <= 1e-8 and dual_feas <= 1e-6:
            converged = True
            break
        _log_line(opts, 0, it, gap_rel, float(np.linalg.norm(rp)))
        sigma = 0.5 if alpha_prev < 0.2 else 0.1
        tc = sigma * gap / (2 * m)
        rcp = p * sp - tc
        rcq = q * sq - tc
        dpc = p / sp
        dqc = q / sq
        diag = dpc + dqc

        def apply_normal(v):
            return op.forward(diag * op.adjoint(v))

        rhs = -rp - op.forward(dpc * rdp - dqc * rdq - rcp / sp + rcq / sq)
        cg_tol = max(opts.cg_tolerance, min(1e-3, 0.1 * gap_rel))
        dnu, _, _ = cgsolve(apply_normal, rhs, cg_tol, cg_cap)
        atdnu = op.adjoint(dnu)
        dsp = -rdp - atdnu
        dsq = -rdq + atdnu
        dp = dpc * (rdp + atdnu) - rcp / sp
        dq = dqc * (rdq - atdnu) - rcq / sq

        def max_step(z, dz):
            neg = dz < 0
            if not np.any(neg):
                return 1.0
            return min(1.0, 0.99 * float((z[neg] / -dz[neg]).min()))

        alpha_primal = min(max_step(p, dp), max_step(q, dq))
        alpha_dual = min(max_step(sp, dsp), max_step(sq, dsq))
        p += alpha_primal * dp
        q += alpha_primal * dq
        sp += alpha_dual * dsp
        sq += alpha_dual * dsq
        nu += alpha_dual * dnu
        alpha_prev = min(alpha_primal, alpha_dual)
    x = p - q
    obj = l1_norm(x)
    residual = float(np.linalg.norm(op.forward(x) - y))
    gap_rel = gap / max(1.0, float(p.sum() + q.sum()))
    msg = "" if converged else "interior-point loop exhausted before reaching tolerances"
    return SolverResult(x, obj, residual, gap_rel, it, 0, converged, msg)


# ---------------------------------------------------------------------------
# total variation with residual cone (log-barrier Newton-CG)
# ---------------------------------------------------------------------------

def _tv_center(op, y, eps, hw, x, u, a, b, tau, opts, stage, dec_tol):
    """Newton-center the per-pixel cone barrier at ``tau`` (in place)."""
    h, w = hw
    npix = h * w

    def dh(v):
        return grad_rows(v.reshape(h, w)).ravel()

    def dv(v):
        return grad_cols(v.reshape(h, w)).ravel()

    def dh_t(v):
        return grad_rows_adjoint(v.reshape(h, w)).ravel()

    def dv_t(v):
        return grad_cols_adjoint(v.reshape(h, w)).ravel()

    cg_cap = opts.cg_max_iters or 4 * npix
    for it in range(1, opts.max_newton_iters + 1):
        r = op.forward(x) - y
        a[:] = dh(x)
        b[:] = dv(x)
        s = 0.5 * (u * u - a * a - b * b)
        se = 0.5 * (eps * eps - float(r @ r))
        if se <= 0.0 or s.min() <= 0.0:
            # rounding pushed the iterate onto a cone boundary
            return it - 1, False
        atr = op.adjoint(r)
        inv_s = 1.0 / s
        gx_t = dh_t(a * inv_s) + dv_t(b * inv_s) + atr / se    # tau * grad_x
        gu_t = tau - u * inv_s                                  # tau * grad_u
        inv_s2 = inv_s * inv_s
        haa = a * a * inv_s2 + inv_s
        hbb = b * b * inv_s2 + inv_s
        hab = a * b * inv_s2
        hau = -a * u * inv_s2
        hbu = -b * u * inv_s2
        huu = (u * u - s) * inv_s2
        w11 = haa - hau * hau / huu
        w12 = hab - hau * hbu / huu
        w22 = hbb - hbu * hbu / huu

        def apply_h(v):
            dh_v = dh(v)
            dv_v = dv(v)
            out = dh_t(w11 * dh_v + w12 * dv_v) + dv_t(w12 * dh_v + w22 * dv_v)
            out += op.adjoint(op.forward(v)) / se
            out += atr * (float(atr @ v) / (se * se))
            return out

        rhs = -gx_t + dh_t(hau * gu_t / huu) + dv_t(hbu * gu_t / huu)
        dx, cg_rel, _ = cgsolve(apply_h, rhs, opts.cg_tolerance, cg_cap)
        if cg_rel > 0.5:
            return it, False
        da = dh(dx)
        db = dv(dx)
        du = -(gu_t + hau * da + hbu * db) / huu
        # standard Newton decrement^2 (see _bpdn_center)
        lam2 = -(float(gx_t @ dx) + float(gu_t @ du))
        phi = float(u.sum()) + (-np.log(s).sum() - np.log(se)) / tau
        _log_line(opts, stage, it, lam2 / 2.0, float(np.linalg.norm(r)))
        if lam2 <= 0.0:
            return it, False
        if lam2 / 2.0 <= dec_tol:
            return it, True

        adx = op.forward(dx)
        # per-pixel cone max step: c2 t^2 + 2 c1 t + c0 > 0, c0 = 2 s > 0
        c2 = du * du - da * da - db * db
        c1 = u * du - a * da - b * db
        c0 = 2.0 * s
        smax = 1.0 / 0.99
        disc = c1 * c1 - c2 * c0
        with np.errstate(invalid="ignore", divide="ignore"):
            root_quad = (-c1 - np.sqrt(np.maximum(disc, 0.0))) / c2
            root_lin = -c0 / (2.0 * c1)
        bounded = np.full(npix, np.inf)
        quad_neg = c2 < 0.0
        bounded[quad_neg] = root_quad[quad_neg]
        quad_pos = (c2 > 0.0) & (c1 < 0.0) & (disc >= 0.0)
        bounded[quad_pos] = root_quad[quad_pos]
        lin = (c2 == 0.0) & (c1 < 0.0)
        bounded[lin] = root_lin[lin]
        finite = np.isfinite(bounded)
        if np.any(finite):
            smax = min(smax, float(bounded[finite].min()))
        aq = float(adx @ adx)
        bq = float(r @ adx)
        c_m = float(r @ r) - eps * eps
        if aq > 0.0:
            smax = min(smax, (-bq + np.sqrt(bq * bq - aq * c_m)) / aq)
        elif bq > 0.0:
            smax = min(smax, -c_m / (2.0 * bq))
        step = min(1.0, 0.99 * smax)
        dirderiv = (float(gx_t @ dx) + float(gu_t @ du)) / tau
        accepted = False
        for _ in range(_LS_MAX_HALVINGS):
            un = u + step * du
            an = a + step * da
            bn = b + step * db
            rn = r + step * adx
            sn = 0.5 * (un * un - an * an - bn * bn)
            sen = 0.5 * (eps * eps - float(rn @ rn))
            if sn.min() > 0.0 and un.min() > 0.0 and sen > 0.0:
                phin = float(un.sum()) + (-np.log(sn).sum() - np.log(sen)) / tau
                if phin <= phi + opts.ls_alpha * step * dirderiv:
                    accepted = True
                    break
            step *= opts.ls_beta
        if not accepted:
            return it, False
        x += step * dx
        u[:] = un
        a[:] = an
        b[:] = bn
        r = rn
    return opts.max_newton_iters, False


def solve_tv(problem: RecoveryProblem, opts: SolverOptions | None = None) -> SolverResult:
    """Minimize total variation subject to ||A x - y||_2 <= epsilon.

    ``epsilon = 0`` is replaced by ``1e-8 * ||y||`` to keep the residual
    cone open (noted in the result message).
    """
    opts = opts or SolverOptions()
    if problem.tv_shape is None:
        raise ValueError("solve_tv needs a problem with tv_shape set")
    op, y = problem.op, problem.y
    h, w = problem.tv_shape
    eps = float(problem.epsilon)
    message = ""
    ynorm = float(np.linalg.norm(y))
    if eps == 0.0:
        eps = 1e-8 * ynorm
        message = "epsilon=0 replaced by 1e-8*||y|| to keep the residual cone open"
        if eps == 0.0:
            return SolverResult(np.zeros(op.m), 0.0, 0.0, 0.0, 0, 0, True,
                                "zero measurement vector; zero solution")
    if ynorm <= eps:
        return SolverResult(np.zeros(op.m), 0.0, ynorm, 0.0, 0, 0, True,
                            "zero vector is feasible, hence optimal")
    x = _feasible_start(op, y, eps, opts.cg_max_iters or 4 * op.m)
    if x is None:
        return SolverResult(np.zeros(op.m), 0.0, ynorm, np.inf, 0, 0, False,
                            "no strictly feasible start found; operator may be rank-deficient "
                            "or epsilon is too tight")
    a = grad_rows(x.reshape(h, w)).ravel()
    b = grad_cols(x.reshape(h, w)).ravel()
    g = np.hypot(a, b)
    u = 1.05 * g + 0.01 * float(g.max())
    floor = 1e-10 * max(1.0, ynorm)
    u = np.maximum(u, floor)
    npix = h * w
    ncones = npix + 1
    tau = max(1.0, ncones / float(u.sum()))
    stages = 0
    newton_total = 0
    uncentered = 0
    converged = False
    while stages < opts.max_barrier_stages:
        iters, ok = _tv_center(op, y, eps, (h, w), x, u, a, b, tau, opts,
                               stages + 1, _CENTER_TARGET)
        stages += 1
        newton_total += iters
        if not ok:
            uncentered += 1
        obj = tv_norm(x, h, w)
        gap_rel = (ncones / tau) / max(1.0, obj)
        if gap_rel <= opts.gap_tolerance:
            converged = True
            break
        tau *= opts.barrier_increase
    residual = float(np.linalg.norm(op.forward(x) - y))
    obj = tv_norm(x, h, w)
    gap_rel = (ncones / tau) / max(1.0, obj)
    if converged and uncentered:
        message = (message + f"; {uncentered} stage(s) ended before reaching the centering target").strip("; ")
    if not converged:
        message = (message + "; barrier loop exhausted before reaching the gap tolerance").strip("; ")
    return SolverResult(x, obj, residual, gap_rel, newton_total, stages, converged, message)


# ---------------------------------------------------------------------------
# least squares on a known support
# ---------------------------------------------------------------------------

def oracle_ls(op: MeasurementOperator, y, support) -> np.ndarray:
    """Least-squares fit of ``y`` on the given columns, zero elsewhere.

    Solves the support-restricted normal equations by CG; raises
    RuntimeError if they fail to converge (singular support Gram).
    """
    y = _as_measurement(op, y)
    t = check_index_set(support, op.m)
    sub = restrict_columns(op, t)
    aty = sub.adjoint(y)
    z, rel, _ = cgsolve(lambda v: sub.adjoint(sub.forward(v)), aty,
                        1e-12, max(200, 20 * t.size))
    if rel > 1e-8 or not np.isfinite(rel):
        raise RuntimeError(
            f"support normal equations did not converge (relative residual {rel:.3e}); "
            "the support Gram may be singular")
    x = np.zeros(op.m)
    x[t] = z
    return x
