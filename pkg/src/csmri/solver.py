"""Reconstruction algorithms: zero-filled baselines, conjugate-gradient
least squares, and proximal-gradient compressed-sensing solves for the
single-coil and multi-coil measurement models.

Slices are solved independently.  The solver enforces a monotone
objective: a step that would increase the objective triggers step
halving, and if no decrease is found the iterate is kept unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CropSpec, ImageVolume, KSpaceVolume, center_crop_array
from .coils import SensitivitySet
from .fourier import fft2c_array, ifft2c_array
from .masking import SamplingMask
from .regularizers import Regularizer, reg_prox_plane, reg_value_plane

MONOTONE_SLACK = 1e-12


class DivergenceError(RuntimeError):
    """CG residual grew for too many consecutive iterations."""


@dataclass(frozen=True)
class SolveConfig:
    lam: float = 0.01
    max_iters: int = 200
    regularizer: Regularizer = field(default_factory=Regularizer)
    step: float = 1.0
    backtracking: bool = True
    fista: bool = False
    tol: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step <= 0:
            raise ValueError("step must be positive")


@dataclass
class SolveTrace:
    objective: list
    iterations_run: int
    converged: bool

    @staticmethod
    def merge(traces: list) -> "SolveTrace":
        n = max(len(t.objective) for t in traces)
        merged = []
        for i in range(n):
            total = sum(
                t.objective[min(i, len(t.objective) - 1)] for t in traces
            )
            merged.append(total)
        return SolveTrace(
            objective=merged,
            iterations_run=max(t.iterations_run for t in traces),
            converged=all(t.converged for t in traces),
        )


def _pg_solve_plane(x0, grad_fn, data_fn, cfg: SolveConfig):
    """Monotone proximal gradient on one slice.

    grad_fn(x) is the data-term gradient, data_fn(x) the data-term value.
    """
    reg = cfg.regularizer
    lam = cfg.lam

    def objective(x):
        val = data_fn(x)
        if lam > 0:
            val += lam * reg_value_plane(reg, x)
        return val

    if cfg.fista:
        return _fista_solve_plane(x0, grad_fn, objective, cfg)

    x = x0
    obj = objective(x)
    trace = [obj]
    step = cfg.step
    converged = False
    iterations = 0
    for _ in range(cfg.max_iters):
        iterations += 1
        g = grad_fn(x)
        accepted = False
        trial_step = step
        for _ in range(30):
            x_new = reg_prox_plane(reg, x - trial_step * g, trial_step * lam)
            obj_new = objective(x_new)
            if (not cfg.backtracking) or obj_new <= obj + MONOTONE_SLACK:
                accepted = True
                break
            trial_step *= 0.5
        if accepted and obj_new <= obj + MONOTONE_SLACK:
            step = trial_step
            rel_change = abs(obj - obj_new) / max(abs(obj), 1e-30)
            x, obj = x_new, min(obj_new, obj)
            trace.append(obj)
            if rel_change < cfg.tol:
                converged = True
                break
        else:
            # no decreasing step found: stationary within precision
            trace.append(obj)
            converged = True
            break
    return x, SolveTrace(trace, iterations, converged)


def _fista_solve_plane(x0, grad_fn, objective, cfg: SolveConfig):
    """Accelerated variant; momentum breaks strict monotonicity, so the
    trace records the raw per-iterate objective without the guard."""
    reg = cfg.regularizer
    x = x0
    z = x0
    t_k = 1.0
    trace = [objective(x)]
    converged = False
    iterations = 0
    for _ in range(cfg.max_iters):
        iterations += 1
        x_new = reg_prox_plane(reg, z - cfg.step * grad_fn(z), cfg.step * cfg.lam)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        z = x_new + ((t_k - 1.0) / t_next) * (x_new - x)
        x, t_k = x_new, t_next
        obj = objective(x)
        rel_change = abs(trace[-1] - obj) / max(abs(trace[-1]), 1e-30)
        trace.append(obj)
        if rel_change < cfg.tol:
            converged = True
            break
    return x, SolveTrace(trace, iterations, converged)


def zero_filled(y_masked: KSpaceVolume, mask: SamplingMask, c: CropSpec) -> ImageVolume:
    """Inverse transform of zero-filled k-space; multi-coil volumes are
    RSS-combined before cropping."""
    data = y_masked.data * mask.keep if mask is not None else y_masked.data
    coil_images = ifft2c_array(data)
    if coil_images.shape[1] == 1:
        img = np.abs(coil_images[:, 0])
    else:
        img = np.sqrt(np.sum(np.abs(coil_images) ** 2, axis=1))
    return ImageVolume(
        center_crop_array(img, c.out_height, c.out_width), is_magnitude=True
    )


def least_squares_multicoil(
    y_masked: KSpaceVolume,
    s: SensitivitySet,
    mask: SamplingMask,
    iters: int = 50,
    c: CropSpec | None = None,
) -> ImageVolume:
    """Conjugate-gradient solve of the unregularized normal equations
    (A^H A) m = A^H y with A = P F S; returns the cropped magnitude."""
    keep = np.asarray(mask.keep)
    maps = s.maps

    def normal_op(x):  # x: (slices, H, W)
        coil = x[:, None] * maps[None]
        k = fft2c_array(coil) * keep
        return np.sum(np.conj(maps)[None] * ifft2c_array(k), axis=1)

    y = y_masked.data * keep
    b = np.sum(np.conj(maps)[None] * ifft2c_array(y), axis=1)

    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs_old = np.vdot(r, r).real
    grow_streak = 0
    for _ in range(iters):
        if rs_old == 0:
            break
        ap = normal_op(p)
        denom = np.vdot(p, ap).real
        if denom <= 0:
            break
        alpha = rs_old / denom
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = np.vdot(r, r).real
        if rs_new > rs_old:
            grow_streak += 1
            if grow_streak >= 10:
                raise DivergenceError("CG residual grew for 10 consecutive iterations")
        else:
            grow_streak = 0
        p = r + (rs_new / rs_old) * p
        rs_old = rs_new
    img = np.abs(x)
    if c is not None:
        img = center_crop_array(img, c.out_height, c.out_width)
    return ImageVolume(img, is_magnitude=True)


def cs_reconstruct_singlecoil(
    y_masked: KSpaceVolume,
    mask: SamplingMask,
    cfg: SolveConfig,
    c: CropSpec,
) -> tuple:
    """Proximal-gradient solve of
    0.5*||P(F(m)) - y||^2 + lambda*R(m) per slice."""
    if y_masked.coil_count != 1:
        raise ValueError("single-coil solver requires coil_count == 1")
    keep = np.asarray(mask.keep)
    y = y_masked.data[:, 0] * keep

    planes = []
    traces = []
    for y_plane in y:
        def grad_fn(x, y_plane=y_plane):
            return ifft2c_array(fft2c_array(x) * keep - y_plane)

        def data_fn(x, y_plane=y_plane):
            resid = fft2c_array(x) * keep - y_plane
            return 0.5 * float(np.sum(np.abs(resid) ** 2))

        x0 = ifft2c_array(y_plane)
        x, trace = _pg_solve_plane(x0, grad_fn, data_fn, cfg)
        planes.append(x)
        traces.append(trace)
    img = np.abs(np.stack(planes))
    out = ImageVolume(
        center_crop_array(img, c.out_height, c.out_width), is_magnitude=True
    )
    return out, SolveTrace.merge(traces)


def cs_reconstruct_multicoil(
    y_masked: KSpaceVolume,
    s: SensitivitySet,
    mask: SamplingMask,
    cfg: SolveConfig,
    c: CropSpec,
) -> tuple:
    """Proximal-gradient solve of
    0.5*sum_i ||P(F(S_i m)) - y_i||^2 + lambda*R(m) per slice."""
    keep = np.asarray(mask.keep)
    maps = s.maps
    y = y_masked.data * keep

    planes = []
    traces = []
    for y_slice in y:  # (coils, H, W)
        def grad_fn(x, y_slice=y_slice):
            resid_k = fft2c_array(x[None] * maps) * keep - y_slice
            return np.sum(np.conj(maps) * ifft2c_array(resid_k), axis=0)

        def data_fn(x, y_slice=y_slice):
            resid_k = fft2c_array(x[None] * maps) * keep - y_slice
            return 0.5 * float(np.sum(np.abs(resid_k) ** 2))

        x0 = np.sum(np.conj(maps) * ifft2c_array(y_slice), axis=0)
        x, trace = _pg_solve_plane(x0, grad_fn, data_fn, cfg)
        planes.append(x)
        traces.append(trace)
    img = np.abs(np.stack(planes))
    out = ImageVolume(
        center_crop_array(img, c.out_height, c.out_width), is_magnitude=True
    )
    return out, SolveTrace.merge(traces)
