"""Benchmark driver: phantom corpus generation, reconstruction sweeps,
external-reconstruction scoring, and report emission.

A corpus is a directory of volume containers (one per volume).  A plan
enumerates (track, mask kind, acceleration, model) cells over a corpus;
per-volume mask seeds derive from (plan seed, volume id) by a stable
hash so adding volumes never reshuffles existing masks.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dataio
from .coils import (
    estimate_sensitivities,
    fit_esc,
    esc_kspace,
    rss_reconstruction,
)
from .core import CropSpec, ImageVolume, KSpaceVolume, center_crop_array
from .fourier import ifft2c_array
from .masking import MaskPolicy, SamplingMask, apply_mask, make_mask
from .metrics import evaluate_pair
from .phantom import AcquisitionSpec, PhantomSpec, simulate_volume
from .regularizers import Regularizer
from .solver import (
    SolveConfig,
    cs_reconstruct_multicoil,
    cs_reconstruct_singlecoil,
    zero_filled,
)

TRACKS = ("single-coil", "multi-coil")


@dataclass
class ExperimentPlan:
    corpus_dir: str
    out_dir: str
    tracks: tuple = TRACKS
    accelerations: tuple = (4, 8)
    mask_kinds: tuple = ("random",)
    lambdas: tuple = (1e-4, 1e-3, 1e-2, 1e-1)
    regularizer: str = "TV"
    max_iters: int = 200
    seed: int = 0
    include_zero_filled: bool = True
    jobs: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentPlan":
        raw = json.loads(text)
        plan = cls(**raw)
        plan.tracks = tuple(plan.tracks)
        plan.accelerations = tuple(plan.accelerations)
        plan.mask_kinds = tuple(plan.mask_kinds)
        plan.lambdas = tuple(plan.lambdas)
        return plan

    def cell_count(self) -> int:
        models = len(self.lambdas) + (1 if self.include_zero_filled else 0)
        return (
            len(self.tracks)
            * len(self.accelerations)
            * len(self.mask_kinds)
            * models
        )


@dataclass
class ResultTable:
    rows: list  # dicts with group keys, metric means, and best flags
    per_volume: list  # raw per-volume metric dicts
    failures: list

    GROUP_KEYS = ("track", "mask_kind", "acceleration", "model", "acquisition")

    def to_json(self) -> str:
        return json.dumps(
            {"rows": self.rows, "per_volume": self.per_volume, "failures": self.failures},
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        raw = json.loads(text)
        return cls(rows=raw["rows"], per_volume=raw["per_volume"], failures=raw["failures"])


def corpus_volume_paths(corpus_dir) -> list:
    return sorted(Path(corpus_dir).glob("*.h5"))


def _mask_for(plan_seed, volume_id, kind, accel) -> tuple:
    policy = MaskPolicy.canonical(accel, kind)
    seed = dataio.stable_seed(plan_seed, volume_id, kind, accel)
    return policy, seed


def _reconstruct_one(record, mask, model, plan, crop) -> ImageVolume:
    y_masked = apply_mask(record.kspace, mask)
    if model == "zero_filled":
        return zero_filled(y_masked, mask, crop)
    lam = float(model.split("=", 1)[1])
    cfg = SolveConfig(
        lam=lam,
        max_iters=plan.max_iters,
        regularizer=Regularizer(kind=plan.regularizer),
    )
    if record.kspace.coil_count == 1:
        img, _ = cs_reconstruct_singlecoil(y_masked, mask, cfg, crop)
    else:
        sens = estimate_sensitivities(y_masked, mask)
        img, _ = cs_reconstruct_multicoil(y_masked, sens, mask, cfg, crop)
    return img


def _track_of(record) -> str:
    return "single-coil" if record.kspace.coil_count == 1 else "multi-coil"


def run_plan(plan: ExperimentPlan) -> ResultTable:
    """Execute every (track, mask kind, acceleration, model) cell over the
    corpus; per-volume failures are recorded without aborting the sweep."""
    paths = corpus_volume_paths(plan.corpus_dir)
    models = (["zero_filled"] if plan.include_zero_filled else []) + [
        f"lambda={lam:g}" for lam in plan.lambdas
    ]

    tasks = []
    for path in paths:
        record = dataio.read_volume(path)
        track = _track_of(record)
        if track not in plan.tracks:
            continue
        target = record.target()
        if target is None:
            continue
        crop = CropSpec(target.data.shape[-2], target.data.shape[-1])
        vid = path.stem
        for kind in plan.mask_kinds:
            for accel in plan.accelerations:
                for model in models:
                    tasks.append((vid, record, target, track, kind, accel, model, crop))

    per_volume = []
    failures = []

    def run_task(task):
        vid, record, target, track, kind, accel, model, crop = task
        policy, seed = _mask_for(plan.seed, vid, kind, accel)
        mask = make_mask(record.kspace.data.shape[-1], policy, seed)
        img = _reconstruct_one(record, mask, model, plan, crop)
        report = evaluate_pair(
            vid, img, target,
            acquisition_label=record.acquisition,
            acceleration=accel,
            track=track,
        )
        row = report.as_dict()
        row.update(mask_kind=kind, model=model)
        return row

    if plan.jobs > 1:
        with ThreadPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(lambda t: _safe(run_task, t), tasks))
    else:
        results = [_safe(run_task, t) for t in tasks]
    for task, (row, err) in zip(tasks, results):
        if err is not None:
            failures.append(
                {
                    "volume_id": task[0],
                    "mask_kind": task[4],
                    "acceleration": task[5],
                    "model": task[6],
                    "error": err,
                }
            )
        else:
            per_volume.append(row)

    rows = aggregate(per_volume)
    return ResultTable(rows=rows, per_volume=per_volume, failures=failures)


def _safe(fn, task):
    try:
        return fn(task), None
    except Exception as exc:
        return None, f"{type(exc).__name__}: {exc}"


def aggregate(per_volume: list) -> list:
    """Unweighted per-group means over volumes; PSNR aggregates exclude
    infinite entries and record how many were excluded."""
    groups = {}
    for row in per_volume:
        key = (
            row["track"],
            row["mask_kind"],
            row["acceleration"],
            row["model"],
            row["acquisition_label"],
        )
        groups.setdefault(key, []).append(row)

    rows = []
    for key in sorted(groups, key=lambda k: tuple(str(p) for p in k)):
        members = groups[key]
        psnrs = [r["psnr_db"] for r in members if r["psnr_db"] != "inf"]
        excluded = len(members) - len(psnrs)
        rows.append(
            {
                "track": key[0],
                "mask_kind": key[1],
                "acceleration": key[2],
                "model": key[3],
                "acquisition": key[4],
                "nmse": float(np.mean([r["nmse"] for r in members])),
                "psnr_db": float(np.mean(psnrs)) if psnrs else "inf",
                "ssim": float(np.mean([r["ssim"] for r in members])),
                "l1": float(np.mean([r["l1"] for r in members])),
                "n_volumes": len(members),
                "psnr_inf_excluded": excluded,
            }
        )
    _flag_best(rows)
    return rows


def _flag_best(rows: list) -> None:
    """Mark the extremum per (track, mask kind, acceleration, acquisition)
    group: min NMSE, max PSNR/SSIM."""
    groups = {}
    for row in rows:
        key = (row["track"], row["mask_kind"], row["acceleration"], row["acquisition"])
        groups.setdefault(key, []).append(row)
    for members in groups.values():
        finite_psnr = [r for r in members if r["psnr_db"] != "inf"]
        best_nmse = min(r["nmse"] for r in members)
        best_ssim = max(r["ssim"] for r in members)
        has_inf = any(r["psnr_db"] == "inf" for r in members)
        best_psnr = None if has_inf else max(r["psnr_db"] for r in members)
        for r in members:
            r["best_nmse"] = r["nmse"] == best_nmse
            r["best_ssim"] = r["ssim"] == best_ssim
            r["best_psnr"] = (
                r["psnr_db"] == "inf" if has_inf else r["psnr_db"] == best_psnr
            )


def score_external(recon_dir, corpus_dir, crop: CropSpec | None = None) -> ResultTable:
    """Score externally produced magnitude volumes (one container per
    corpus id, dataset name 'reconstruction') against corpus ground truths."""
    per_volume = []
    failures = []
    for path in corpus_volume_paths(corpus_dir):
        vid = path.stem
        record = dataio.read_volume(path)
        target = record.target()
        if target is None:
            continue
        recon_path = Path(recon_dir) / f"{vid}.h5"
        if not recon_path.exists():
            failures.append({"volume_id": vid, "error": "missing reconstruction"})
            continue
        try:
            recon = dataio.read_reconstruction(recon_path)
            data = recon.data
            if crop is not None:
                data = center_crop_array(data, crop.out_height, crop.out_width)
                recon = ImageVolume(data, is_magnitude=True)
            report = evaluate_pair(
                vid, recon, target,
                acquisition_label=record.acquisition,
                acceleration=record.acceleration,
                track=_track_of(record),
            )
            row = report.as_dict()
            row.update(mask_kind="external", model="external")
            per_volume.append(row)
        except Exception as exc:
            failures.append(
                {"volume_id": vid, "error": f"{type(exc).__name__}: {exc}"}
            )
    return ResultTable(rows=aggregate(per_volume), per_volume=per_volume, failures=failures)


# ------------------------------------------------------------- reporting


def format_text_table(t: ResultTable) -> str:
    headers = [
        "track", "mask", "R", "model", "acq",
        "NMSE", "PSNR", "SSIM", "n", "best",
    ]
    lines = []
    body = []
    for r in t.rows:
        best = "".join(
            flag for flag, on in (
                ("N", r.get("best_nmse")), ("P", r.get("best_psnr")), ("S", r.get("best_ssim"))
            ) if on
        )
        psnr = r["psnr_db"]
        body.append(
            [
                r["track"], r["mask_kind"], str(r["acceleration"]), r["model"],
                r["acquisition"],
                f"{r['nmse']:.6g}",
                psnr if psnr == "inf" else f"{psnr:.4f}",
                f"{r['ssim']:.6g}",
                str(r["n_volumes"]),
                best or "-",
            ]
        )
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(headers)]
    lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    if t.failures:
        lines.append("")
        lines.append("failures:")
        for f in t.failures:
            lines.append(f"  {json.dumps(f, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def format_delimited(t: ResultTable) -> str:
    cols = [
        "track", "mask_kind", "acceleration", "model", "acquisition",
        "nmse", "psnr_db", "ssim", "l1", "n_volumes", "psnr_inf_excluded",
        "best_nmse", "best_psnr", "best_ssim",
    ]
    lines = [",".join(cols)]
    for r in t.rows:
        lines.append(",".join(str(r.get(c, "")) for c in cols))
    return "\n".join(lines) + "\n"


def emit_report(t: ResultTable, out_dir, stem: str = "results") -> dict:
    """Write text, delimited, and structured outputs; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "text": out / f"{stem}.txt",
        "delimited": out / f"{stem}.csv",
        "structured": out / f"{stem}.json",
        "per_volume": out / f"{stem}_per_volume.jsonl",
    }
    paths["text"].write_text(format_text_table(t))
    paths["delimited"].write_text(format_delimited(t))
    paths["structured"].write_text(t.to_json() + "\n")
    with paths["per_volume"].open("w") as f:
        for row in t.per_volume:
            f.write(json.dumps(row, sort_keys=True) + "\n")
    return {k: str(v) for k, v in paths.items()}


# ------------------------------------------------------ corpus synthesis


def simulate_corpus(config: dict, out_dir, seed: int = 0) -> list:
    """Generate a phantom corpus from a declarative config.

    Config schema:
      {"crop": [H, W] | null,
       "volumes": [{"id": str, "height": int, "width": int,
                    "num_slices": int, "coils": int, "noise_sigma": float,
                    "track": "multi-coil" | "single-coil"}]}

    Multi-coil volumes get an RSS ground truth; single-coil volumes are
    synthesized by the emulated single-coil combination of a multi-coil
    acquisition and get the corresponding magnitude ground truth.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, vol in enumerate(config["volumes"]):
        vid = vol["id"]
        height, width = vol["height"], vol["width"]
        crop_cfg = config.get("crop")
        crop = CropSpec(*crop_cfg) if crop_cfg else CropSpec(height, width)
        vol_seed = dataio.stable_seed(seed, vid)
        spec = PhantomSpec(
            height=height,
            width=width,
            num_slices=vol.get("num_slices", 1),
            seed=vol_seed,
        )
        acq = AcquisitionSpec(
            n_c=vol.get("coils", 4),
            noise_sigma=vol.get("noise_sigma", 0.0),
            sensitivity_seed=vol_seed + 1,
        )
        img, sens, y = simulate_volume(spec, acq, noise_seed=vol_seed + 2)
        track = vol.get("track", "multi-coil")
        if track == "single-coil":
            coil_images = ImageVolume(ifft2c_array(y.data), is_magnitude=False)
            rss_full = ImageVolume(
                np.sqrt(np.sum(np.abs(coil_images.data) ** 2, axis=1)),
                is_magnitude=True,
            )
            alpha = fit_esc(coil_images, rss_full)
            y_esc = esc_kspace(y, alpha)
            gt = ImageVolume(
                center_crop_array(
                    np.abs(ifft2c_array(y_esc.data[:, 0])),
                    crop.out_height,
                    crop.out_width,
                ),
                is_magnitude=True,
            )
            record = dataio.make_train_record(
                y_esc, reconstruction_esc=gt, acquisition=y.acquisition_label
            )
        else:
            gt = rss_reconstruction(y, crop)
            record = dataio.make_train_record(
                y, reconstruction_rss=gt, acquisition=y.acquisition_label
            )
        path = out / f"{vid}.h5"
        dataio.write_volume(record, path)
        written.append(str(path))
    return written
