"""Command-line interface.

Subcommands: simulate (make noisy undersampled k-space from an image),
reconstruct (run the ADMM), tune (golden-section search over rho, then a
final reconstruction), evaluate (MSE/SSIM of a reconstruction against
ground truth), benchmark (all four methods with per-method tuning, CSV
table out).

Configuration comes from an optional JSON file (--config); individual flags
override the corresponding config fields. A single --seed drives all
randomness: the mask generator uses seed, the noise generator seed + 1.

Exit codes: 0 success, 1 usage error, 2 I/O or file-format error,
3 solver divergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio
from .fileio import FileFormatError
from .forward import MaskSpec, NoiseSpec, make_mask, simulate_measurement
from .grids import as_mask
from .metrics import SsimParams, TuneSpec, golden_section_tune, mse, ssim
from .phantoms import get_phantom, phantom_names
from .solver import METHODS, ReconResult, SolverConfig, SolverDivergenceError, solve

_MASK_KIND_ALIASES = {"vd": "variable-density-random",
                      "uniform": "uniform-random",
                      "radial": "radial-lines"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract wants 1
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    try:
        with open(p) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FileFormatError(f"{path}: config root must be a JSON object")
    return cfg


def _merged(args) -> dict:
    """Config dict with CLI flags overriding file fields."""
    cfg = _load_config(getattr(args, "config", None))
    solver = dict(cfg.get("solver", {}))
    noise = dict(cfg.get("noise", {}))
    tune = dict(cfg.get("tune", {}))
    overrides = (("method", solver, "method"), ("q", solver, "q"),
                 ("rho", solver, "rho"), ("beta", solver, "beta"),
                 ("iters", solver, "max_iters"), ("tol", solver, "primal_tol"),
                 ("sigma", noise, "sigma"))
    for flag, section, key in overrides:
        val = getattr(args, flag, None)
        if val is not None:
            section[key] = val
    for flag, key in (("image", "image"), ("mask", "mask"), ("truth", "truth"),
                      ("kspace", "kspace"), ("out", "output_dir"), ("seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[key] = val
    cfg["solver"] = solver
    cfg["noise"] = noise
    cfg["tune"] = tune
    return cfg


def _solver_config(cfg: dict) -> SolverConfig:
    s = cfg.get("solver", {})
    try:
        return SolverConfig(
            rho=float(s.get("rho", 0.1)),
            beta=None if s.get("beta") is None else float(s["beta"]),
            q=float(s.get("q", 0.5)),
            max_iters=int(s.get("max_iters", 1000)),
            primal_tol=float(s.get("primal_tol", 1e-4)),
            method=str(s.get("method", "qshs")),
            constraint_set=str(s.get("constraint_set", "positive-orthant")),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver settings: {exc}") from exc


def _seeds(cfg: dict):
    seed = int(cfg.get("seed", 0))
    return seed, seed + 1  # mask seed, noise seed


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ssim_params(cfg: dict) -> SsimParams:
    s = cfg.get("ssim", {})
    return SsimParams(
        k1=float(s.get("k1", 0.01)), k2=float(s.get("k2", 0.03)),
        dynamic_range=float(s.get("dynamic_range", 255.0)),
        window_radius=int(s.get("window_radius", 5)),
        window_sigma=float(s.get("window_sigma", 1.5)))


def _tune_spec(cfg: dict) -> TuneSpec:
    t = cfg.get("tune", {})
    try:
        return TuneSpec(
            log10_lo=float(t.get("log10_lo", -3.0)),
            log10_hi=float(t.get("log10_hi", 2.0)),
            tol=float(t.get("tol", 0.05)),
            objective=str(t.get("objective", "mse")))
    except ValueError as exc:
        raise UsageError(f"invalid tune settings: {exc}") from exc


def _load_image_or_phantom(token) -> np.ndarray:
    if token is None:
        raise UsageError("an input image is required (path or phantom token)")
    name = str(token).partition(":")[0]
    if name in phantom_names():
        return get_phantom(str(token))
    path = Path(token)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {token}")
    return fileio.read_image(path)


def _parse_mask_arg(token, width: int, seed: int):
    """Mask from 'kind:density[:center_fraction]' spec or a PGM path."""
    if token is None:
        token = "vd:0.18"
    token = str(token)
    head = token.partition(":")[0]
    if head in _MASK_KIND_ALIASES:
        parts = token.split(":")
        if len(parts) not in (2, 3):
            raise UsageError(f"bad mask spec {token!r}; expected kind:density[:center_fraction]")
        try:
            density = float(parts[1])
            cf = float(parts[2]) if len(parts) == 3 else 0.06
            spec = MaskSpec(density=density, kind=_MASK_KIND_ALIASES[head],
                            center_fraction=cf, seed=seed)
        except ValueError as exc:
            raise UsageError(f"bad mask spec {token!r}: {exc}") from exc
        return make_mask(width, spec), token
    path = Path(token)
    if not path.is_file():
        raise FileNotFoundError(f"mask not found: {token}")
    return fileio.read_mask_pgm(path), str(path)


def _write_traces(path, result: ReconResult) -> None:
    rows = [(k + 1, f"{o:.10g}", f"{ru:.10g}", f"{rh:.10g}")
            for k, (o, ru, rh) in enumerate(zip(result.objective_trace,
                                                result.primal_residual_u_trace,
                                                result.primal_residual_H_trace))]
    fileio.write_csv(path, ("iteration", "objective", "primal_residual_u",
                            "primal_residual_H"), rows)


def _solver_manifest(scfg: SolverConfig) -> dict:
    return {"rho": scfg.rho, "beta": scfg.beta, "q": scfg.q,
            "max_iters": scfg.max_iters, "primal_tol": scfg.primal_tol,
            "method": scfg.method, "constraint_set": scfg.constraint_set}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _merged(args)
    mask_seed, noise_seed = _seeds(cfg)
    u = _load_image_or_phantom(cfg.get("image"))
    mask, mask_desc = _parse_mask_arg(cfg.get("mask"), u.shape[0], mask_seed)
    sigma = float(cfg.get("noise", {}).get("sigma", 0.0))
    m = simulate_measurement(u, mask, NoiseSpec(sigma=sigma, seed=noise_seed))
    out = _out_dir(cfg)
    fileio.write_kspace(out / "kspace.ksp1", m)
    fileio.write_mask_pgm(out / "mask.pgm", mask)
    fileio.write_imgf(out / "truth.imgf", u)
    fileio.write_image_pgm16(out / "truth.pgm", u)
    density = float(mask.sum()) / mask.size
    fileio.write_manifest(out / "manifest.json", {
        "command": "simulate", "image": str(cfg.get("image")),
        "mask": mask_desc, "realized_density": density, "sigma": sigma,
        "seed": int(cfg.get("seed", 0)), "mask_seed": mask_seed,
        "noise_seed": noise_seed, "width": int(u.shape[0]),
        "files": ["kspace.ksp1", "mask.pgm", "truth.imgf", "truth.pgm"]})
    print(f"simulated {u.shape[0]}x{u.shape[1]} -> {out} "
          f"(density {density:.4f}, sigma {sigma})")
    return 0


def _reconstruct_core(cfg: dict, scfg: SolverConfig):
    ks_path = cfg.get("kspace")
    if ks_path is None:
        raise UsageError("reconstruct needs --kspace (KSP1 file)")
    ks_path = Path(ks_path)
    if not ks_path.is_file():
        raise FileNotFoundError(f"k-space not found: {ks_path}")
    m = fileio.read_kspace(ks_path)
    mask_seed, _ = _seeds(cfg)
    mask, mask_desc = _parse_mask_arg(cfg.get("mask"), m.shape[0], mask_seed)
    if mask.shape != m.shape:
        raise FileFormatError(
            f"mask {mask.shape} does not match k-space {m.shape}")
    result = solve(m, mask, scfg)
    return m, mask, mask_desc, result


def _metrics_rows(u, truth, params: SsimParams):
    return [("mse", f"{mse(u, truth):.10g}"), ("ssim", f"{ssim(u, truth, params):.10g}")]


def cmd_reconstruct(args) -> int:
    cfg = _merged(args)
    scfg = _solver_config(cfg)
    m, mask, mask_desc, result = _reconstruct_core(cfg, scfg)
    out = _out_dir(cfg)
    fileio.write_imgf(out / "recon.imgf", result.u_final)
    fileio.write_image_pgm16(out / "recon.pgm", result.u_final)
    _write_traces(out / "traces.csv", result)
    manifest = {"command": "reconstruct", "kspace": str(cfg.get("kspace")),
                "mask": mask_desc, "solver": _solver_manifest(scfg),
                "seed": int(cfg.get("seed", 0)),
                "iterations_run": result.iterations_run,
                "converged": bool(result.converged),
                "files": ["recon.imgf", "recon.pgm", "traces.csv"]}
    truth_token = cfg.get("truth")
    if truth_token is not None:
        truth = _load_image_or_phantom(truth_token)
        rows = _metrics_rows(result.u_final, truth, _ssim_params(cfg))
        fileio.write_csv(out / "metrics.csv", ("metric", "value"), rows)
        manifest["files"].append("metrics.csv")
        manifest["metrics"] = {k: float(v) for k, v in rows}
    fileio.write_manifest(out / "manifest.json", manifest)
    print(f"reconstructed ({scfg.method}) in {result.iterations_run} iterations, "
          f"converged={result.converged} -> {out}")
    return 0


def cmd_tune(args) -> int:
    cfg = _merged(args)
    scfg = _solver_config(cfg)
    tspec = _tune_spec(cfg)
    truth_token = cfg.get("truth")
    if truth_token is None:
        raise UsageError("tune needs --truth (metric oracle)")
    truth = _load_image_or_phantom(truth_token)
    ks_path = cfg.get("kspace")
    if ks_path is None:
        raise UsageError("tune needs --kspace (KSP1 file)")
    if not Path(ks_path).is_file():
        raise FileNotFoundError(f"k-space not found: {ks_path}")
    m = fileio.read_kspace(ks_path)
    mask_seed, _ = _seeds(cfg)
    mask, mask_desc = _parse_mask_arg(cfg.get("mask"), m.shape[0], mask_seed)
    params = _ssim_params(cfg)
    probe_cfg = replace(scfg, max_iters=min(scfg.max_iters, 300))
    probes = []

    def eval_at(log10_rho: float) -> float:
        res = solve(m, mask, replace(probe_cfg, rho=10.0 ** log10_rho))
        val = mse(res.u_final, truth) if tspec.objective == "mse" \
            else -ssim(res.u_final, truth, params)
        probes.append((len(probes) + 1, 10.0 ** log10_rho, log10_rho, val))
        return val

    best_x, best_f = golden_section_tune(eval_at, tspec)
    h0 = tspec.log10_hi - tspec.log10_lo
    if h0 <= tspec.tol:
        bracket = h0
    else:
        n = math.ceil(math.log(tspec.tol / h0) / math.log((math.sqrt(5.0) - 1.0) / 2.0))
        bracket = h0 * (((math.sqrt(5.0) - 1.0) / 2.0) ** n)
    final_cfg = replace(scfg, rho=10.0 ** best_x)
    result = solve(m, mask, final_cfg)
    out = _out_dir(cfg)
    fileio.write_csv(out / "tune_trace.csv",
                     ("probe", "rho", "log10_rho", "objective"),
                     [(i, f"{r:.10g}", f"{x:.10g}", f"{v:.10g}") for i, r, x, v in probes])
    fileio.write_imgf(out / "recon.imgf", result.u_final)
    fileio.write_image_pgm16(out / "recon.pgm", result.u_final)
    _write_traces(out / "traces.csv", result)
    rows = _metrics_rows(result.u_final, truth, params)
    fileio.write_csv(out / "metrics.csv", ("metric", "value"), rows)
    fileio.write_manifest(out / "manifest.json", {
        "command": "tune", "kspace": str(ks_path), "mask": mask_desc,
        "solver": _solver_manifest(final_cfg), "seed": int(cfg.get("seed", 0)),
        "objective": tspec.objective, "best_rho": 10.0 ** best_x,
        "best_log10_rho": best_x, "best_objective": best_f,
        "probes": len(probes), "bracket_width": bracket, "tol": tspec.tol,
        "iterations_run": result.iterations_run,
        "converged": bool(result.converged),
        "metrics": {k: float(v) for k, v in rows},
        "files": ["tune_trace.csv", "recon.imgf", "recon.pgm", "traces.csv",
                  "metrics.csv"]})
    print(f"tuned {scfg.method}: best rho = {10.0 ** best_x:.6g} "
          f"({tspec.objective} = {best_f:.6g}, {len(probes)} probes) -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _merged(args)
    if cfg.get("image") is None or cfg.get("truth") is None:
        raise UsageError("evaluate needs --image and --truth")
    u = _load_image_or_phantom(cfg.get("image"))
    truth = _load_image_or_phantom(cfg.get("truth"))
    rows = _metrics_rows(u, truth, _ssim_params(cfg))
    out = _out_dir(cfg)
    fileio.write_csv(out / "metrics.csv", ("metric", "value"), rows)
    for name, value in rows:
        print(f"{name} = {value}")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _merged(args)
    scfg = _solver_config(cfg)
    tspec = _tune_spec(cfg)
    bench = cfg.get("benchmark", {})
    images = bench.get("images", [cfg.get("image") or "shepp-logan"])
    masks = bench.get("masks", [cfg.get("mask") or "vd:0.18"])
    methods = bench.get("methods", list(METHODS))
    sigma = float(cfg.get("noise", {}).get("sigma", 0.0))
    mask_seed, noise_seed = _seeds(cfg)
    params = _ssim_params(cfg)
    out = _out_dir(cfg)
    rows = []
    for image_token in images:
        truth = _load_image_or_phantom(image_token)
        for mask_token in masks:
            mask, mask_desc = _parse_mask_arg(mask_token, truth.shape[0], mask_seed)
            m = simulate_measurement(truth, mask, NoiseSpec(sigma=sigma, seed=noise_seed))
            for method in methods:
                tag = f"{_slug(image_token)}__{_slug(mask_desc)}__{method}"
                try:
                    mcfg = replace(scfg, method=method,
                                   q=scfg.q if method == "qshs" else 1.0)
                    probe_cfg = replace(mcfg, max_iters=min(mcfg.max_iters, 300))

                    def eval_at(x, _pc=probe_cfg):
                        res = solve(m, mask, replace(_pc, rho=10.0 ** x))
                        if tspec.objective == "mse":
                            return mse(res.u_final, truth)
                        return -ssim(res.u_final, truth, params)

                    best_x, _ = golden_section_tune(eval_at, tspec)
                    result = solve(m, mask, replace(mcfg, rho=10.0 ** best_x))
                    fileio.write_imgf(out / f"{tag}.imgf", result.u_final)
                    fileio.write_image_pgm16(out / f"{tag}.pgm", result.u_final)
                    rows.append((image_token, mask_desc, method,
                                 f"{10.0 ** best_x:.10g}",
                                 f"{mse(result.u_final, truth):.10g}",
                                 f"{ssim(result.u_final, truth, params):.10g}",
                                 result.iterations_run, "ok"))
                except (SolverDivergenceError, ValueError, ArithmeticError) as exc:
                    rows.append((image_token, mask_desc, method, "", "", "", 0,
                                 f"error: {exc}"))
    fileio.write_csv(out / "table.csv",
                     ("image", "mask", "method", "rho", "mse", "ssim",
                      "iterations", "status"), rows)
    fileio.write_manifest(out / "manifest.json", {
        "command": "benchmark", "images": [str(i) for i in images],
        "masks": [str(t) for t in masks], "methods": list(methods),
        "sigma": sigma, "seed": int(cfg.get("seed", 0)),
        "tune": {"log10_lo": tspec.log10_lo, "log10_hi": tspec.log10_hi,
                 "tol": tspec.tol, "objective": tspec.objective},
        "solver": _solver_manifest(scfg), "files": ["table.csv"]})
    print(f"benchmark: {len(rows)} cells -> {out / 'table.csv'}")
    return 0


def _slug(token) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in str(token))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--q", type=float, help="shrinkage exponent in (0, 1]")
    p.add_argument("--rho", type=float, help="regularization weight")
    p.add_argument("--beta", type=float, help="quadratic coupling weight")
    p.add_argument("--iters", type=int, help="iteration cap")
    p.add_argument("--tol", type=float, help="relative primal-residual tolerance")
    p.add_argument("--mask", help="mask PGM path or spec kind:density[:center_fraction] "
                                  "with kind one of vd|uniform|radial")
    p.add_argument("--sigma", type=float, help="k-space noise std per component")
    p.add_argument("--seed", type=int, help="master seed (mask=seed, noise=seed+1)")
    p.add_argument("--out", help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qshs",
                     description="Image restoration from undersampled Fourier "
                                 "measurements with Hessian-spectrum shrinkage priors.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    ps = sub.add_parser("simulate", help="synthesize noisy undersampled k-space")
    ps.add_argument("--image", help=f"input image path or phantom token "
                                    f"({'|'.join(phantom_names())})[:n]")
    ps.set_defaults(func=cmd_simulate)
    pr = sub.add_parser("reconstruct", help="run the ADMM reconstruction")
    pr.add_argument("--kspace", help="KSP1 measurement file")
    pr.add_argument("--truth", help="ground-truth image for metrics (optional)")
    pr.set_defaults(func=cmd_reconstruct)
    pt = sub.add_parser("tune", help="golden-section search over rho, then reconstruct")
    pt.add_argument("--kspace", help="KSP1 measurement file")
    pt.add_argument("--truth", help="ground-truth image (required)")
    pt.set_defaults(func=cmd_tune)
    pe = sub.add_parser("evaluate", help="MSE/SSIM of an image against ground truth")
    pe.add_argument("--image", help="image to score")
    pe.add_argument("--truth", help="reference image")
    pe.set_defaults(func=cmd_evaluate)
    pb = sub.add_parser("benchmark", help="all methods with per-method tuning")
    pb.add_argument("--image", help="default image when config lists none")
    pb.set_defaults(func=cmd_benchmark)
    for p in (ps, pr, pt, pe, pb):
        _add_common(p)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            print("qshs: a subcommand is required", file=sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
