"""Command line interface.

Subcommands:

* render-kernel: sample one kernel to an image file,
* filter: smooth an image with one uniform elliptical kernel,
* adapt: structure-tensor adaptive smoothing,
* bench: timing table demonstrating scale-independent cost,
* lut-build / lut-inspect: create and examine lookup-table files.

Outputs are written atomically.  Exit codes: 0 success, 2 usage
errors (argparse), 3 infeasible or out-of-grid parameters, 4 file
I/O problems, 5 invalid values elsewhere.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from . import __version__
from .engine import filter_space_invariant, thread_cap
from .geometry import covariance_from_params
from .oracle import sample_kernel_exact, synthesize_kernel
from .pgmio import quantize, read_pgm, read_raw_plane, write_pgm, write_raw_plane
from .solver import (
    Infeasible,
    OutOfGrid,
    build_lut,
    load_lut,
    lookup,
    optimize_scale_vector,
    save_lut,
)
from .tensor import adaptive_smooth

EXIT_INFEASIBLE = 3
EXIT_IO = 4
EXIT_INVALID = 5


def _solve(args) -> np.ndarray:
    target = covariance_from_params(args.size, args.elongation, args.orientation)
    return optimize_scale_vector(target)


def _write_image(path, values, maxval: int) -> None:
    path = str(path)
    if path.endswith(".f64"):
        write_raw_plane(path, values)
    else:
        write_pgm(path, quantize(values, maxval), maxval)


def cmd_render_kernel(args) -> int:
    a = _solve(args)
    if args.iterations == 1:
        diag = float(a[1] + a[3]) / math.sqrt(2.0)
        half = 0.5 * (max(float(a[0]), float(a[2])) + diag) + 1.0
        n = max(int(math.ceil(2.0 * half / args.step)) | 1, 3)
        c = n // 2
        x = (np.arange(n) - c) * args.step
        values = sample_kernel_exact(a, x[None, :], x[:, None])
    else:
        k = synthesize_kernel(
            a / math.sqrt(args.iterations), args.iterations, step=args.step
        )
        values = k.values
    if str(args.out).endswith(".f64"):
        _write_image(args.out, values, args.maxval)
    else:
        peak = float(values.max())
        if peak <= 0.0:
            raise ValueError("kernel rendered to all zeros")
        _write_image(args.out, values * (args.maxval / peak), args.maxval)
    print(f"wrote {args.out} ({values.shape[0]}x{values.shape[1]}, step {args.step})")
    return 0


def _read_input_image(path):
    path = str(path)
    if path.endswith(".f64"):
        return read_raw_plane(path), None
    samples, maxval = read_pgm(path)
    return samples.astype(np.float64), maxval


def cmd_filter(args) -> int:
    f, maxval = _read_input_image(args.input)
    a = _solve(args)
    out = filter_space_invariant(f, a, args.iterations)
    _write_image(args.out, out, args.maxval if maxval is None else maxval)
    print(f"wrote {args.out}")
    return 0


def cmd_adapt(args) -> int:
    f, maxval = _read_input_image(args.input)
    lut = load_lut(args.lut) if args.lut else None
    out = adaptive_smooth(
        f,
        args.noise_sigma,
        window_sigma=args.window_sigma,
        iterations=args.iterations,
        lut=lut,
    )
    _write_image(args.out, out, args.maxval if maxval is None else maxval)
    print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    sizes = [float(s) for s in args.scales.split(",") if s]
    if not sizes or any(s <= 0.0 for s in sizes):
        raise ValueError("scales must be a comma list of positive numbers")
    rng = np.random.default_rng(args.seed)
    f = rng.random((args.n, args.n))
    print(f"# image {args.n}x{args.n}, {args.runs} runs, thread cap {thread_cap()}")
    print("size_s\tmean_s\tstd_s\tmin_s")
    means = []
    for s in sizes:
        a = np.full(4, math.sqrt(3.0 * s))
        for _ in range(args.warmup):
            filter_space_invariant(f, a)
        times = []
        for _ in range(args.runs):
            t0 = time.perf_counter()
            filter_space_invariant(f, a)
            times.append(time.perf_counter() - t0)
        times = np.asarray(times)
        means.append(times.mean())
        print(f"{s:g}\t{times.mean():.4f}\t{times.std():.4f}\t{times.min():.4f}")
    ratio = max(means) / min(means)
    print(f"# max/min mean ratio: {ratio:.3f}")
    return 0


def cmd_lut_build(args) -> int:
    lut = build_lut(
        n_rho=args.rho_points,
        n_phi=args.phi_points,
        rho_max=args.rho_max,
        eps=args.eps,
    )
    save_lut(lut, args.out)
    print(
        f"wrote {args.out} ({args.rho_points}x{args.phi_points}, "
        f"elongation up to {args.rho_max:g})"
    )
    return 0


def cmd_lut_inspect(args) -> int:
    lut = load_lut(args.input)
    from .geometry import covariance_of, covariance_from_params as cfp

    worst = 0.0
    for i, rho in enumerate(lut.rho_grid):
        for ji, phi in enumerate(lut.phi_grid):
            target = cfp(1.0, float(rho), float(phi))
            err = np.linalg.norm(covariance_of(lut.entries[i, ji]) - target)
            worst = max(worst, err / np.linalg.norm(target))
    print(f"table {lut.rho_grid.shape[0]}x{lut.phi_grid.shape[0]}")
    print(f"elongation {lut.rho_grid[0]:g} .. {lut.rho_grid[-1]:g} (geometric)")
    print(
        f"orientation {lut.phi_grid[0]:.6g} .. {lut.phi_grid[-1]:.6g} rad "
        "(cell-centred quarter turn)"
    )
    print(f"worst node covariance error: {worst:.3e}")
    sample = lookup(lut, 1.0, float(lut.rho_grid[-1]) ** 0.5, 0.3)
    print(f"sample lookup (s=1, mid elongation, 0.3 rad): {sample}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rubs",
        description="Space-variant elliptical filtering with box-spline kernels.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_ellipse(p):
        p.add_argument("--size", type=float, required=True, help="covariance trace")
        p.add_argument(
            "--elongation", type=float, default=1.0, help="eigenvalue ratio >= 1"
        )
        p.add_argument(
            "--orientation",
            type=float,
            default=0.0,
            help="major-axis angle in radians, [0, pi)",
        )
        p.add_argument("--iterations", type=int, default=1, help="smoothing passes")

    p = sub.add_parser("render-kernel", help="sample one kernel to a file")
    add_ellipse(p)
    p.add_argument("--step", type=float, default=0.125, help="sample spacing")
    p.add_argument("--maxval", type=int, default=255, help="PGM maxval")
    p.add_argument("--out", required=True, help="output .pgm or .f64")
    p.set_defaults(func=cmd_render_kernel)

    p = sub.add_parser("filter", help="uniform elliptical smoothing")
    add_ellipse(p)
    p.add_argument("--in", dest="input", required=True, help="input .pgm or .f64")
    p.add_argument("--maxval", type=int, default=255, help="PGM maxval for raw inputs")
    p.add_argument("--out", required=True, help="output .pgm or .f64")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("adapt", help="structure-tensor adaptive smoothing")
    p.add_argument("--in", dest="input", required=True, help="input .pgm or .f64")
    p.add_argument("--noise-sigma", type=float, required=True)
    p.add_argument("--window-sigma", type=float, default=1.5)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--lut", default=None, help="lookup table file (else built)")
    p.add_argument("--maxval", type=int, default=255, help="PGM maxval for raw inputs")
    p.add_argument("--out", required=True, help="output .pgm or .f64")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("bench", help="timing across kernel sizes")
    p.add_argument("--n", type=int, default=512, help="square image side")
    p.add_argument("--scales", default="1,2,4,8,16", help="comma list of sizes")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("lut-build", help="precompute a lookup table file")
    p.add_argument("--out", required=True)
    p.add_argument("--rho-points", type=int, default=64)
    p.add_argument("--phi-points", type=int, default=64)
    p.add_argument("--rho-max", type=float, default=5.8)
    p.add_argument("--eps", type=float, default=1e-6)
    p.set_defaults(func=cmd_lut_build)

    p = sub.add_parser("lut-inspect", help="validate and describe a table file")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_lut_inspect)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Infeasible, OutOfGrid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
