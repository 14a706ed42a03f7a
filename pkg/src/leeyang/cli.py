"""Command-line surface: spectra, zeros, cumulants, tilts, densities,
limit checks, Monte Carlo, Herglotz numerics, and the boundary-condition
comparison. Every run writes a manifest; spectra are cached by a
canonical parameter hash and cache hits return byte-identical files.

Exit codes: 0 success, 2 precision escalation needed (root deficit),
3 invalid parameters.
"""

import argparse
import csv
import hashlib
import json
import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from . import analysis as an
from . import herglotz as hz
from . import montecarlo as mc
from . import spectrum as sp
from . import zeros as zr
from .lattice import FREE, PERIODIC, build_lattice, chain_lattice
from .zeros import RootDeficitError

MANIFEST_SCHEMA = 1


# ---------------------------------------------------------------------------
# Manifests and cache.
# ---------------------------------------------------------------------------

def _manifest(command, params, input_keys, wall_time):
    body = {
        "schema_version": MANIFEST_SCHEMA,
        "command": command,
        "params": {k: str(v) for k, v in sorted(params.items())},
        "input_keys": sorted(input_keys),
        "tool_version": __version__,
    }
    ident = hashlib.sha256(
        json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]
    body["manifest_key"] = ident
    body["wall_time_s"] = round(wall_time, 6)
    return body


def write_manifest(cache_dir, out_path, command, params, input_keys, wall_time):
    body = _manifest(command, params, input_keys, wall_time)
    cache_dir.mkdir(parents=True, exist_ok=True)
    with open(cache_dir / "manifests.jsonl", "a") as f:
        f.write(json.dumps(body, sort_keys=True) + "\n")
    if out_path is not None:
        mpath = Path(str(out_path) + ".manifest.json")
        with open(mpath, "w") as f:
            json.dump(body, f, sort_keys=True, indent=1)
            f.write("\n")
    return body


def manifest_argv(manifest):
    """Reconstruct the argv that reproduces a manifest's outputs."""
    argv = [manifest["command"]]
    for k, v in manifest["params"].items():
        if v == "True":
            argv.append(f"--{k}")
        elif v not in ("None", "False"):
            argv.extend([f"--{k}", v])
    return argv


def _spectra_dir(cache_dir):
    d = Path(cache_dir) / "spectra"
    d.mkdir(parents=True, exist_ok=True)
    return d


def cached_spectrum(cache_dir, build, key):
    """Fetch-or-build a spectrum file; returns (spec, path, hit)."""
    path = _spectra_dir(cache_dir) / f"{key}.json"
    if path.exists():
        spec = sp.load_spectrum(path)
        if spec.cache_key != key:
            raise ValueError(f"cache collision for key {key}")
        return spec, path, True
    spec = build()
    if spec.cache_key != key:
        raise ValueError("engine produced an unexpected cache key")
    sp.save_spectrum(spec, path)
    return spec, path, False


# ---------------------------------------------------------------------------
# Shared argument plumbing.
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", default=None, help="output file path")
    p.add_argument("--cache-dir", default=".leeyang-cache")
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--precision-bits", type=int, default=106)
    p.add_argument("--seed", type=int, default=1)


def _add_lattice_args(p):
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=None, help="box radius (side 2n+1)")
    p.add_argument("--N", type=int, default=None, help="chain length (d=1 only)")
    p.add_argument("--boundary", choices=[FREE, PERIODIC], default=FREE)


def _build_lattice(args):
    if args.N is not None:
        if args.d != 1:
            raise ValueError("--N is a chain length; needs --d 1")
        return chain_lattice(args.N, args.boundary)
    if args.n is None:
        raise ValueError("need --n (box radius) or --N (chain length)")
    return build_lattice(args.d, args.n, args.boundary)


def _resolve_engine(args, lat):
    engine = args.engine
    if engine == "auto":
        if float(args.beta) == 0.0:
            return "curie-weiss"
        if lat.dimension == 1:
            return "transfer1d"
        if lat.dimension == 2 and lat.radius >= 0 and 2 * lat.radius + 1 <= 9:
            return "transfer2d"
        return "brute"
    return {"brute": "brute", "transfer": None, "cw": "curie-weiss"}.get(engine, engine)


def _build_spectrum(args, lat, engine):
    beta = float(args.beta)
    if engine == "curie-weiss":
        return sp.curie_weiss_spectrum(lat.site_count, args.precision_bits)
    if engine == "brute":
        return sp.enumerate_spectrum(lat, beta, args.precision_bits)
    if engine == "transfer1d":
        return sp.transfer_spectrum_1d(lat.site_count, lat.boundary, beta,
                                       args.precision_bits)
    if engine == "transfer2d":
        return sp.transfer_spectrum_2d(lat.radius, lat.boundary, beta,
                                       args.precision_bits)
    raise ValueError(f"unknown engine {engine!r}")


def _write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, sort_keys=True, indent=1)
        f.write("\n")


def _load_spec_arg(path):
    return sp.load_spectrum(path)


# ---------------------------------------------------------------------------
# Commands.
# ---------------------------------------------------------------------------

def cmd_spectrum(args):
    t0 = time.time()
    lat = _build_lattice(args)
    engine = _resolve_engine(args, lat)
    if engine is None:  # "transfer": pick by dimension
        engine = "transfer1d" if lat.dimension == 1 else "transfer2d"
    key = sp.spectrum_cache_key(lat.dimension, lat.site_count, lat.boundary,
                                float(args.beta), args.precision_bits, engine)
    spec, cache_path, hit = cached_spectrum(
        Path(args.cache_dir), lambda: _build_spectrum(args, lat, engine), key)
    out = Path(args.out) if args.out else cache_path
    if out != cache_path:
        shutil.copyfile(cache_path, out)
    write_manifest(Path(args.cache_dir), out, "spectrum",
                   {"d": lat.dimension, "n": args.n, "N": args.N,
                    "beta": repr(float(args.beta)), "boundary": lat.boundary,
                    "engine": engine, "precision-bits": args.precision_bits},
                   [key], time.time() - t0)
    print(f"spectrum {key} engine={engine} N={spec.site_count} "
          f"cache_hit={hit} -> {out}")
    return 0


def cmd_zeros(args):
    t0 = time.time()
    spec = _load_spec_arg(args.spectrum)
    ly = zr.find_angles(spec, grid_points=args.grid, theta_tol=args.tol)
    K = args.K
    if K is None:
        K = zr.choose_replication_depth(spec.site_count, ly.theta_min)
    mz = zr.mgf_zeros(ly, K)
    resid = zr.factorization_residual(spec, mz)
    out = Path(args.out) if args.out else Path(f"zeros_{spec.cache_key}.json")
    data = zr.zeros_to_dict(ly)
    data["replication_depth"] = K
    data["factorization_residual"] = repr(resid)
    data["factorization_tail_bound"] = repr(zr.factorization_tail_bound(mz, 1.0))
    _write_json(out, data)
    write_manifest(Path(args.cache_dir), out, "zeros",
                   {"spectrum": args.spectrum, "grid": args.grid,
                    "tol": repr(args.tol), "K": K},
                   [spec.cache_key], time.time() - t0)
    print(f"zeros: {spec.site_count} angles, theta_min={ly.theta_min:.6f}, "
          f"residual={ly.residual:.2e}, factorization={resid:.2e} -> {out}")
    return 0


def cmd_cumulants(args):
    t0 = time.time()
    spec = _load_spec_arg(args.spectrum)
    cums = an.cumulants_from_spectrum(spec)
    consts = an.scaling_constants(spec, cums)
    report = {
        "u2": repr(cums.u2), "u4": repr(cums.u4), "u6": repr(cums.u6),
        "source": "spectrum",
        "gamma_n": repr(consts.gamma_n), "lambda_n": repr(consts.lambda_n),
        "c_n": repr(consts.c_n), "d_n": repr(consts.d_n),
        "tilt_normalizer": repr(consts.tilt_normalizer),
        "source_key": spec.cache_key,
    }
    keys = [spec.cache_key]
    if args.zeros:
        ly = zr.load_zeros(args.zeros)
        mz = zr.mgf_zeros(ly, zr.choose_replication_depth(
            ly.site_count, ly.theta_min))
        u4z, bound = an.cumulants_from_zeros(mz, 4)
        report["u4_from_zeros"] = repr(u4z)
        report["u4_truncation_bound"] = repr(bound)
    out = Path(args.out) if args.out else Path(f"cumulants_{spec.cache_key}.json")
    _write_json(out, report)
    write_manifest(Path(args.cache_dir), out, "cumulants",
                   {"spectrum": args.spectrum, "zeros": args.zeros},
                   keys, time.time() - t0)
    print(f"u2={cums.u2:.9g} u4={cums.u4:.9g} c_n={consts.c_n:.6f} -> {out}")
    return 0


def cmd_tilt(args):
    t0 = time.time()
    spec = _load_spec_arg(args.spectrum)
    if args.gamma == "auto":
        tilted = an.critical_tilt(spec)
    else:
        tilted = an.tilt_spectrum(spec, float(args.gamma))
    ex2 = tilted.moment(2)
    ex4 = tilted.moment(4)
    report = {
        "gamma": repr(tilted.gamma),
        "tilt_normalizer": repr(tilted.tilt_normalizer),
        "EX2": repr(ex2), "EX4": repr(ex4),
        "kurtosis": repr(ex4 / ex2 ** 2),
        "source_key": spec.cache_key,
    }
    out = Path(args.out) if args.out else Path(f"tilt_{spec.cache_key}.json")
    _write_json(out, report)
    write_manifest(Path(args.cache_dir), out, "tilt",
                   {"spectrum": args.spectrum, "gamma": args.gamma},
                   [spec.cache_key], time.time() - t0)
    print(f"gamma={tilted.gamma:.6g} EX2={ex2:.6f} kurtosis={ex4/ex2**2:.6f} -> {out}")
    return 0


def cmd_density(args):
    t0 = time.time()
    spec = _load_spec_arg(args.spectrum)
    cums = an.cumulants_from_spectrum(spec, orders=(2, 4))
    consts = an.scaling_constants(spec, cums)
    xs = np.linspace(-args.xmax, args.xmax, args.points)
    lower, val, upper = an.density_sandwich(spec, xs, consts)
    if args.zeros:
        ly = zr.load_zeros(args.zeros)
    else:
        ly = zr.find_angles(spec)
    mz = zr.mgf_zeros(ly, zr.choose_replication_depth(
        ly.site_count, ly.theta_min, tol=1e-12))
    fz = an.w_density_zeros(spec, mz, xs, consts, cums)
    out = Path(args.out) if args.out else Path(f"density_{spec.cache_key}.csv")
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "f_spectrum", "f_zeros", "lower_bound", "upper_bound"])
        for row in zip(xs, val, fz, lower, upper):
            w.writerow([repr(float(v)) for v in row])
    write_manifest(Path(args.cache_dir), out, "density",
                   {"spectrum": args.spectrum, "zeros": args.zeros,
                    "xmax": repr(args.xmax), "points": args.points},
                   [spec.cache_key], time.time() - t0)
    print(f"density grid ({args.points} pts, c_n={consts.c_n:.6f}) -> {out}")
    return 0


def cmd_limitcheck(args):
    t0 = time.time()
    sizes = [int(s) for s in args.sizes.split(",")]
    beta = float(args.beta)
    qm = an.quartic_model()
    rows = []
    keys = []
    for N in sizes:
        if args.family == "cw":
            spec = sp.curie_weiss_spectrum(N, args.precision_bits)
        else:
            spec = sp.transfer_spectrum_1d(N, args.boundary, beta,
                                           args.precision_bits)
        keys.append(spec.cache_key)
        cums = an.cumulants_from_spectrum(spec, orders=(2, 4))
        tilted = an.critical_tilt(spec)
        kurt = tilted.normalized_kurtosis()
        dist = an.kolmogorov_distance(tilted, qm)
        ly = zr.find_angles(spec)
        alpha1 = ly.theta_min / 2.0
        rows.append({
            "N": N,
            "kurtosis": kurt,
            "kolmogorov": dist,
            "theta_1": ly.theta_min,
            "alpha1_scaled": alpha1 * (-cums.u4 / 24.0) ** 0.25,
            "u2": cums.u2,
            "u4": cums.u4,
        })
    out = Path(args.out) if args.out else Path(f"limitcheck_{args.family}.csv")
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(list(rows[0].keys()))
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v
                        for v in r.values()])
    write_manifest(Path(args.cache_dir), out, "limitcheck",
                   {"family": args.family, "beta": repr(beta),
                    "sizes": args.sizes, "boundary": args.boundary},
                   keys, time.time() - t0)
    for r in rows:
        print(f"N={r['N']:>6d} kurt={r['kurtosis']:.6f} "
              f"KS={r['kolmogorov']:.6f} theta1={r['theta_1']:.6f} "
              f"alpha1*(-u4/4!)^.25={r['alpha1_scaled']:.6f}")
    print(f"quartic kurtosis target {qm.kurtosis():.6f} -> {out}")
    return 0


def cmd_mc(args):
    t0 = time.time()
    lat = _build_lattice(args)
    gamma = args.gamma if args.gamma == "auto" else float(args.gamma)
    config = mc.McConfig(lattice=lat, beta=float(args.beta), gamma=gamma,
                         sweeps=args.sweeps, burn_in=args.burn_in,
                         chains=args.chains, master_seed=args.seed,
                         thinning=args.thinning, n_batches=args.batches)
    spec = None
    if gamma == "auto":
        small_2d = lat.dimension == 2 and 0 <= lat.radius <= 3
        if lat.site_count <= 26 or lat.dimension == 1 or small_2d:
            spec = sp.spectrum_for_lattice(lat, float(args.beta),
                                           args.precision_bits)
    est = mc.mc_run(config, spectrum=spec)
    out = Path(args.out) if args.out else Path("mc_results.json")
    report = {
        "config": {"d": lat.dimension, "N": lat.site_count,
                   "boundary": lat.boundary, "beta": repr(float(args.beta)),
                   "gamma": repr(est.gamma), "gamma_mode": est.gamma_mode,
                   "sweeps": args.sweeps, "burn_in": args.burn_in,
                   "chains": args.chains, "master_seed": args.seed,
                   "thinning": args.thinning, "batches": args.batches},
        "EY2": repr(est.moments[2][0]), "EY2_se": repr(est.moments[2][1]),
        "EY4": repr(est.moments[4][0]), "EY4_se": repr(est.moments[4][1]),
        "acceptance_rate": repr(est.acceptance_rate),
        "chain_seeds": est.chain_seeds,
        "n_samples": est.n_samples,
        "batch_means_Y2": [repr(float(v)) for v in est.batch_means[2]],
    }
    _write_json(out, report)
    hist_path = Path(str(out).replace(".json", "") + "_hist.csv")
    centers, mass = mc.mc_histogram(est, max(10, args.bins))
    with open(hist_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin_center", "mass"])
        for c, p in zip(centers, mass):
            w.writerow([repr(float(c)), repr(float(p))])
    write_manifest(Path(args.cache_dir), out, "mc",
                   {"d": lat.dimension, "n": args.n, "N": args.N,
                    "boundary": lat.boundary, "beta": repr(float(args.beta)),
                    "gamma": args.gamma, "sweeps": args.sweeps,
                    "burn-in": args.burn_in, "chains": args.chains,
                    "seed": args.seed, "thinning": args.thinning,
                    "batches": args.batches, "bins": args.bins},
                   [], time.time() - t0)
    print(f"EY2={est.moments[2][0]:.4f}+-{est.moments[2][1]:.4f} "
          f"EY4={est.moments[4][0]:.4f}+-{est.moments[4][1]:.4f} "
          f"acc={est.acceptance_rate:.3f} gamma={est.gamma:.6g} "
          f"({est.gamma_mode}) -> {out}")
    return 0


def cmd_herglotz(args):
    t0 = time.time()
    spec = _load_spec_arg(args.spectrum)
    if args.zeros:
        ly = zr.load_zeros(args.zeros)
    else:
        ly = zr.find_angles(spec)
    hs = [float(x) for x in args.h.split(",")] if args.h else []
    evals = []
    for h in hs:
        z = math.exp(-2.0 * h)
        mz = hz.m_from_zeros(ly, z)
        md = hz.m_direct(spec, h)
        evals.append({"h": repr(h), "z": repr(z),
                      "m_zeros": repr(mz.value.real),
                      "m_direct": repr(md.value.real),
                      "difference": repr(abs(mz.value - md.value))})
    report = {"source_key": spec.cache_key, "evaluations": evals}
    keys = [spec.cache_key]
    if args.arc:
        a, b = (float(x) for x in args.arc)
        est = hz.stieltjes_arc_mass(ly, (a, b),
                                    radii=tuple(float(r) for r in
                                                args.radii.split(",")))
        report["arc"] = {"a": repr(a), "b": repr(b),
                         "radii": [repr(r) for r in est.radii],
                         "estimates": [repr(float(v)) for v in est.estimates],
                         "extrapolated": repr(est.extrapolated),
                         "zero_free": est.zero_free}
        csv_path = Path(str(args.out or 'herglotz') + "_arc.csv")
        with open(csv_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["r", "arc_mass"])
            for r, v in zip(est.radii, est.estimates):
                w.writerow([repr(r), repr(float(v))])
    out = Path(args.out) if args.out else Path(f"herglotz_{spec.cache_key}.json")
    _write_json(out, report)
    write_manifest(Path(args.cache_dir), out, "herglotz",
                   {"spectrum": args.spectrum, "zeros": args.zeros,
                    "h": args.h, "arc": " ".join(map(str, args.arc)) if args.arc else None,
                    "radii": args.radii},
                   keys, time.time() - t0)
    for e in evals:
        print(f"h={e['h']}: m_direct={e['m_direct']} diff={e['difference']}")
    if args.arc:
        print(f"arc mass extrapolated={report['arc']['extrapolated']} "
              f"zero_free={report['arc']['zero_free']}")
    print(f"-> {out}")
    return 0


def cmd_compare_bc(args):
    t0 = time.time()
    beta = float(args.beta)
    rows = {}
    keys = []
    for boundary in (FREE, PERIODIC):
        spec = sp.transfer_spectrum_2d(args.n, boundary, beta,
                                       args.precision_bits) \
            if args.d == 2 else \
            sp.transfer_spectrum_1d(2 * args.n + 1, boundary, beta,
                                    args.precision_bits)
        keys.append(spec.cache_key)
        cums = an.cumulants_from_spectrum(spec, orders=(2, 4))
        ly = zr.find_angles(spec)
        alphas = np.sort(ly.with_multiplicity() / 2.0)[:args.levels]
        rows[boundary] = alphas * (-cums.u4) ** 0.25
    out = Path(args.out) if args.out else Path("compare_bc.csv")
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["j", "free", "periodic", "ratio"])
        for j in range(min(len(rows[FREE]), len(rows[PERIODIC]))):
            w.writerow([j + 1, repr(float(rows[FREE][j])),
                        repr(float(rows[PERIODIC][j])),
                        repr(float(rows[FREE][j] / rows[PERIODIC][j]))])
    write_manifest(Path(args.cache_dir), out, "compare-bc",
                   {"d": args.d, "n": args.n, "beta": repr(beta),
                    "levels": args.levels},
                   keys, time.time() - t0)
    for j in range(min(3, args.levels)):
        print(f"j={j+1}: free={rows[FREE][j]:.6f} periodic={rows[PERIODIC][j]:.6f}")
    print(f"-> {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser and dispatch.
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="leeyang",
        description="Finite-volume Ising magnetization spectra, Lee-Yang "
                    "zeros, and Curie-Weiss perturbation diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="compute and cache a spectrum")
    _add_common(p)
    _add_lattice_args(p)
    p.add_argument("--beta", required=True)
    p.add_argument("--engine", default="auto",
                   choices=["auto", "brute", "transfer", "cw"])
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("zeros", help="locate circle zeros + factorization")
    _add_common(p)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--K", type=int, default=None)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("cumulants", help="cumulants and scaling constants")
    _add_common(p)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--zeros", default=None)
    p.set_defaults(func=cmd_cumulants)

    p = sub.add_parser("tilt", help="exponential tilt moments")
    _add_common(p)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--gamma", default="auto")
    p.set_defaults(func=cmd_tilt)

    p = sub.add_parser("density", help="Gaussian-transform density grid")
    _add_common(p)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--zeros", default=None)
    p.add_argument("--xmax", type=float, default=3.0)
    p.add_argument("--points", type=int, default=1001)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("limitcheck", help="quartic-limit convergence table")
    _add_common(p)
    p.add_argument("--family", choices=["cw", "chain"], required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--sizes", required=True, help="comma-separated N list")
    p.add_argument("--boundary", choices=[FREE, PERIODIC], default=FREE)
    p.set_defaults(func=cmd_limitcheck)

    p = sub.add_parser("mc", help="Metropolis sampling of the tilted model")
    _add_common(p)
    _add_lattice_args(p)
    p.add_argument("--beta", required=True)
    p.add_argument("--gamma", default="0")
    p.add_argument("--sweeps", type=int, default=4096)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=512)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--batches", type=int, default=32)
    p.add_argument("--bins", type=int, default=21)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("herglotz", help="magnetization density evaluations")
    _add_common(p)
    p.add_argument("--spectrum", required=True)
    p.add_argument("--zeros", default=None)
    p.add_argument("--h", default=None, help="comma-separated field values")
    p.add_argument("--arc", nargs=2, type=float, default=None)
    p.add_argument("--radii", default="0.99,0.999,0.9999")
    p.set_defaults(func=cmd_herglotz)

    p = sub.add_parser("compare-bc", help="free vs periodic zero scalings")
    _add_common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--levels", type=int, default=10)
    p.set_defaults(func=cmd_compare_bc)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 3 if e.code not in (0, None) else 0
    if args.threads:
        kernels.set_threads(args.threads)
    try:
        return args.func(args)
    except RootDeficitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
