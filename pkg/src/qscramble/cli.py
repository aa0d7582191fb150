"""Command-line entry point: reproducible scrambling experiments.

Every subcommand writes a CSV table plus a JSON metadata sidecar with the
same basename (version, full configuration, seed, timings, results).
Identical configuration and seed reproduce the CSV byte for byte; seeds
default to 0, never to the clock.

Exit codes: 0 success, 2 configuration error, 3 resource cap exceeded,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .core import NumericalError, ResourceLimitError

FLOAT_FMT = "%.17g"


def _fmt(x):
    return FLOAT_FMT % float(x)


def _out_paths(args, name):
    outdir = args.out or os.environ.get("QSCRAMBLE_OUTDIR", ".")
    os.makedirs(outdir, exist_ok=True)
    base = args.tag or name
    return (os.path.join(outdir, base + ".csv"),
            os.path.join(outdir, base + ".json"))


def _write_csv(path, header, rows, meta):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# qscramble v{__version__}\n")
        for k in sorted(meta):
            f.write(f"# {k}: {meta[k]}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) if isinstance(x, (int, float, np.floating))
                             else str(x) for x in row) + "\n")


def _write_json(path, subcommand, config, results, t0, seed):
    payload = {
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "results": results,
        "timing_s": round(time.time() - t0, 3),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def _config_dict(args, skip=("func", "out", "tag")):
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and not callable(v)}


def _field_rows(field, extra_cols=()):
    rows = []
    for i, r in enumerate(field.sites):
        for j, t in enumerate(field.times):
            row = [int(r), t, field.values[i, j]]
            for col in extra_cols:
                row.append(col[i, j])
            rows.append(row)
    return rows


# ------------------------------------------------------------- subcommands


def cmd_otoc_ed(args):
    from .hamiltonian import mixed_field_ising
    from .otoc_exact import OtocRequest, otoc_ed

    t0 = time.time()
    H = mixed_field_ising(args.sites, args.j, args.hx, args.hz)
    times = np.linspace(0.0, args.t_max, args.t_points)
    probe = tuple(args.probe_sites) if args.probe_sites else None
    req = OtocRequest(args.w_label, args.w_site, args.v_label, times,
                      probe_sites=probe, seed=args.seed)
    fields = otoc_ed(H, req)
    csv_path, json_path = _out_paths(args, "otoc-ed")
    _write_csv(csv_path, ["site", "time", "C", "F"],
               _field_rows(fields.C, [fields.F.values]),
               {"method": "ed", "config": json.dumps(_config_dict(args),
                                                     sort_keys=True)})
    _write_json(json_path, "otoc-ed", _config_dict(args),
                {"csv": os.path.basename(csv_path)}, t0, args.seed)
    return 0


def cmd_otoc_krylov(args):
    from .hamiltonian import mixed_field_ising
    from .otoc_exact import OtocRequest, otoc_krylov_state

    t0 = time.time()
    H = mixed_field_ising(args.sites, args.j, args.hx, args.hz)
    times = np.linspace(0.0, args.t_max, args.t_points)
    probe = tuple(args.probe_sites) if args.probe_sites else None
    req = OtocRequest(args.w_label, args.w_site, args.v_label, times,
                      probe_sites=probe, krylov_dim=args.krylov_dim,
                      num_typical_states=args.typical_states, seed=args.seed)
    fields = otoc_krylov_state(H, req, threads=args.threads)
    extra = [fields.F.values]
    header = ["site", "time", "C", "F"]
    if fields.stderr is not None:
        extra.append(fields.stderr.values)
        header.append("stderr")
    csv_path, json_path = _out_paths(args, "otoc-krylov")
    _write_csv(csv_path, header, _field_rows(fields.C, extra),
               {"method": "krylov-state",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "otoc-krylov", _config_dict(args),
                {"csv": os.path.basename(csv_path)}, t0, args.seed)
    return 0


def cmd_otoc_mpo(args):
    from .hamiltonian import mixed_field_ising
    from .tensor_network import contour_analysis, squared_commutator_field

    t0 = time.time()
    H = mixed_field_ising(args.sites, args.j, args.hx, args.hz)
    times = np.round(np.arange(args.t_sample, args.t_max + 1e-9,
                               args.t_sample) / args.dt) * args.dt
    times = np.concatenate([[0.0], times])
    res = squared_commutator_field(H, args.w_label, args.w_site, times,
                                   chi_max=args.chi, dt=args.dt)
    csv_path, json_path = _out_paths(args, "otoc-mpo")
    _write_csv(csv_path, ["site", "time", "C"], _field_rows(res.C),
               {"method": "tebd-mpo",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    results = {
        "csv": os.path.basename(csv_path),
        "final_discarded_weight": res.discarded_weight[-1][1],
        "max_bond_dim": int(max(b for _, b in res.bond_dims)),
    }
    if args.contours:
        fit = contour_analysis(res.C)
        results["contour_fit"] = {
            "v_b": fit.v_b, "p_gap": fit.p_gap, "p_fit": fit.p_fit,
            "lam": fit.lam, "gap_slope": fit.gap_slope,
        }
    _write_json(json_path, "otoc-mpo", _config_dict(args), results, t0,
                args.seed)
    return 0


def cmd_circuit_front(args):
    from .random_circuit import evolve_front

    t0 = time.time()
    res = evolve_front(args.sites, args.q, args.layers)
    csv_path, json_path = _out_paths(args, "circuit-front")
    _write_csv(csv_path, ["site", "time", "C"], _field_rows(res.field),
               {"method": "endpoint-walk",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "circuit-front", _config_dict(args), {
        "csv": os.path.basename(csv_path),
        "v_b": res.v_b, "v_b_expected": res.v_b_expected,
        "diffusion": res.diffusion,
        "diffusion_expected": res.diffusion_expected,
        "fit_layers": list(res.fit_layers),
    }, t0, args.seed)
    return 0


def cmd_hp_decode(args):
    from .core import haar_matrix
    from .hayden_preskill import (HPInstance, f_epr_haar, renyi2_mutual_r_mem_e,
                                  yk_decode_probabilistic)

    t0 = time.time()
    rows = []
    max_id_dev = 0.0
    for i in range(args.seeds):
        rng = np.random.default_rng(args.seed + i)
        U = haar_matrix(2 ** args.n, rng)
        inst = HPInstance.default_window(args.n, args.e, U, seed=args.seed + i)
        res = yk_decode_probabilistic(inst)
        i2 = renyi2_mutual_r_mem_e(inst)
        max_id_dev = max(max_id_dev,
                         abs(4.0 * res.delta * res.f_epr - 1.0),
                         abs(res.delta - 2.0 ** (-i2)))
        rows.append([args.seed + i, res.delta, res.f_epr])
    csv_path, json_path = _out_paths(args, "hp-decode")
    _write_csv(csv_path, ["seed", "delta", "f_epr"], rows,
               {"method": "yoshida-kitaev",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    f_mean = float(np.mean([r[2] for r in rows]))
    _write_json(json_path, "hp-decode", _config_dict(args), {
        "csv": os.path.basename(csv_path),
        "e_size": args.e,
        "f_epr_mean": f_mean,
        "f_epr_analytic": f_epr_haar(args.e),
        "max_identity_deviation": max_id_dev,
    }, t0, args.seed)
    return 0


def cmd_mutual_info(args):
    from .info_dynamics import (ReferenceSetup, haar_average_mutual_info_profile,
                                haar_renyi_mutual_closed_form,
                                haar_renyi_mutual_exact_mean)

    t0 = time.time()
    setup = ReferenceSetup(args.n, args.kind, args.s)
    rng = np.random.default_rng(args.seed)
    ls, est, sig = haar_average_mutual_info_profile(setup, args.samples, rng)
    rows = []
    for l, e, s in zip(ls, est, sig):
        closed = haar_renyi_mutual_closed_form(args.n, l, args.kind, args.s)
        exact = (haar_renyi_mutual_exact_mean(args.n, l)
                 if args.kind == "pure" else float("nan"))
        rows.append([l, e, s, closed, exact])
    csv_path, json_path = _out_paths(args, "mutual-info")
    _write_csv(csv_path, ["l", "I2_mc", "sigma", "closed_form", "exact_mean"],
               rows, {"method": "haar-mc",
                      "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "mutual-info", _config_dict(args),
                {"csv": os.path.basename(csv_path)}, t0, args.seed)
    return 0


def cmd_freefermion(args):
    from .free_fermion import (airy_tail_fit, freefermion_otoc,
                               max_group_velocity, nearest_neighbor_chain)

    t0 = time.time()
    model = nearest_neighbor_chain(args.ring)
    sites = np.arange(0, args.r_max + 1)
    times = np.linspace(args.t_min, args.t_max, args.t_points)
    fld = freefermion_otoc(model, sites, times)
    fit = airy_tail_fit(fld)
    csv_path, json_path = _out_paths(args, "freefermion")
    _write_csv(csv_path, ["site", "time", "C"], _field_rows(fld),
               {"method": "free-fermion",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "freefermion", _config_dict(args), {
        "csv": os.path.basename(csv_path),
        "v_b": fit.v_b, "broadening_p": fit.broadening_p,
        "gap_slope": fit.gap_slope,
        "max_group_velocity": max_group_velocity(model),
    }, t0, args.seed)
    return 0


def cmd_phenom_fit(args):
    from .fields import read_field_csv
    from .phenomenology import fit_growth_form

    t0 = time.time()
    fld = read_field_csv(args.input)
    t_window = None
    if args.t_min is not None and args.t_max is not None:
        t_window = (args.t_min, args.t_max)
    fit = fit_growth_form(fld, c_window=(args.c_min, args.c_max),
                          t_window=t_window)
    csv_path, json_path = _out_paths(args, "phenom-fit")
    _write_csv(csv_path, ["lam", "v_b", "p", "residual_rms", "condition"],
               [[fit.form.lam, fit.form.v_b, fit.form.p, fit.residual_rms,
                 fit.condition_number]],
               {"method": "growth-form-fit",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "phenom-fit", _config_dict(args), {
        "csv": os.path.basename(csv_path),
        "lam": fit.form.lam, "v_b": fit.form.v_b, "p": fit.form.p,
        "residual_rms": fit.residual_rms, "flagged": fit.flagged,
        "condition_number": fit.condition_number,
    }, t0, args.seed)
    return 0


def cmd_fkpp(args):
    from .phenomenology import FKPPConfig, fkpp_integrate

    t0 = time.time()
    res = fkpp_integrate(FKPPConfig(args.g, dr=args.dr, r_max=args.r_max),
                         args.time)
    csv_path, json_path = _out_paths(args, "fkpp")
    rows = [[t, f] for t, f in zip(res.times, res.front)]
    _write_csv(csv_path, ["time", "front_position"], rows,
               {"method": "fkpp",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "fkpp", _config_dict(args), {
        "csv": os.path.basename(csv_path),
        "v_front": res.v_front, "v_b_expected": res.v_b_expected,
        "lambda_tail": res.lambda_tail,
        "lambda_expected": res.lambda_expected,
    }, t0, args.seed)
    return 0


def cmd_lr_check(args):
    from .hamiltonian import mixed_field_ising
    from .otoc_exact import lieb_robinson_certificate

    t0 = time.time()
    H = mixed_field_ising(args.sites, args.j, args.hx, args.hz)
    r_values = np.arange(1, args.sites - args.w_site)
    t_values = np.linspace(args.t_min, args.t_max, args.t_points)
    cert = lieb_robinson_certificate(H, args.w_label, args.w_site,
                                     args.v_label, r_values, t_values)
    rows = []
    for i, r in enumerate(cert.r_values):
        for j, t in enumerate(cert.t_values):
            rows.append([int(r), t, cert.exact_norms[i, j],
                         cert.bound_values[i, j],
                         int(cert.regime_mask[i, j])])
    csv_path, json_path = _out_paths(args, "lr-check")
    _write_csv(csv_path, ["r", "time", "exact_norm", "bound", "in_regime"],
               rows, {"method": "lieb-robinson",
                      "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "lr-check", _config_dict(args), {
        "csv": os.path.basename(csv_path),
        "certified": bool(cert.certified),
        "local_scale": cert.local_scale,
        "points_in_regime": int(cert.regime_mask.sum()),
    }, t0, args.seed)
    return 0 if cert.certified else 4


def cmd_bench(args):
    from .hamiltonian import mixed_field_ising
    from .otoc_exact import OtocRequest, otoc_ed, otoc_krylov_state
    from .random_circuit import evolve_front
    from .tensor_network import squared_commutator_field

    t0 = time.time()
    timings = {}
    H = mixed_field_ising(8)
    t1 = time.time()
    otoc_ed(H, OtocRequest("Z", 0, "Z", np.linspace(0, 2, 5), probe_sites=(7,)))
    timings["otoc_ed_n8"] = round(time.time() - t1, 3)
    t1 = time.time()
    otoc_krylov_state(H, OtocRequest("Z", 0, "Z", np.linspace(0, 2, 5),
                                     probe_sites=(7,), num_typical_states=8))
    timings["otoc_krylov_n8_m8"] = round(time.time() - t1, 3)
    t1 = time.time()
    evolve_front(400, 2, 300)
    timings["circuit_front_400x300"] = round(time.time() - t1, 3)
    t1 = time.time()
    squared_commutator_field(mixed_field_ising(16), "Z", 8,
                             np.arange(0, 1.01, 0.5), chi_max=16, dt=0.05)
    timings["tebd_n16_t1"] = round(time.time() - t1, 3)
    csv_path, json_path = _out_paths(args, "bench")
    _write_csv(csv_path, ["kernel", "seconds"],
               [[k, v] for k, v in sorted(timings.items())],
               {"method": "bench",
                "config": json.dumps(_config_dict(args), sort_keys=True)})
    _write_json(json_path, "bench", _config_dict(args), timings, t0, args.seed)
    for k, v in sorted(timings.items()):
        print(f"{k}: {v}s")
    return 0


# ------------------------------------------------------------------ parser


def _add_common(p):
    p.add_argument("--out", default=None, help="output directory "
                   "(default: $QSCRAMBLE_OUTDIR or '.')")
    p.add_argument("--tag", default=None, help="output basename override")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _add_ising(p, default_n):
    p.add_argument("--sites", type=int, default=default_n)
    p.add_argument("--j", type=float, default=1.0)
    p.add_argument("--hx", type=float, default=1.05)
    p.add_argument("--hz", type=float, default=0.5)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="qscramble",
        description="Quantum information scrambling laboratory: OTOCs, "
                    "operator spreading, and many-body teleportation.")
    ap.add_argument("--version", action="version",
                    version=f"qscramble {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("otoc-ed", help="OTOC by exact diagonalization")
    _add_common(p); _add_ising(p, 10)
    p.add_argument("--w-label", default="Z")
    p.add_argument("--w-site", type=int, default=0)
    p.add_argument("--v-label", default="Z")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-points", type=int, default=21)
    p.add_argument("--probe-sites", type=int, nargs="*", default=None)
    p.set_defaults(func=cmd_otoc_ed)

    p = sub.add_parser("otoc-krylov", help="OTOC by Krylov-State typicality")
    _add_common(p); _add_ising(p, 12)
    p.add_argument("--w-label", default="Z")
    p.add_argument("--w-site", type=int, default=0)
    p.add_argument("--v-label", default="Z")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-points", type=int, default=21)
    p.add_argument("--probe-sites", type=int, nargs="*", default=None)
    p.add_argument("--typical-states", type=int, default=1)
    p.add_argument("--krylov-dim", type=int, default=30)
    p.set_defaults(func=cmd_otoc_krylov)

    p = sub.add_parser("otoc-mpo", help="squared commutator by TEBD-MPO")
    _add_common(p); _add_ising(p, 64)
    p.add_argument("--w-label", default="Z")
    p.add_argument("--w-site", type=int, default=None)
    p.add_argument("--chi", type=int, default=32)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--t-sample", type=float, default=1.0)
    p.add_argument("--contours", action="store_true",
                   help="run contour/broadening analysis on the result")
    p.set_defaults(func=cmd_otoc_mpo)

    p = sub.add_parser("circuit-front",
                       help="random-circuit endpoint walk, v_B and D")
    _add_common(p)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--sites", type=int, default=400)
    p.add_argument("--layers", type=int, default=400)
    p.set_defaults(func=cmd_circuit_front)

    p = sub.add_parser("hp-decode", help="Yoshida-Kitaev probabilistic decoder")
    _add_common(p)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--e", type=int, default=1, help="size of Bob's window E")
    p.add_argument("--seeds", type=int, default=100)
    p.set_defaults(func=cmd_hp_decode)

    p = sub.add_parser("mutual-info",
                       help="Haar-averaged Renyi-2 mutual information profile")
    _add_common(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--kind", default="pure",
                   choices=["pure", "mixed", "maximally_mixed"])
    p.add_argument("--s", type=int, default=0)
    p.set_defaults(func=cmd_mutual_info)

    p = sub.add_parser("freefermion", help="free-fermion OTOC and Airy tail")
    _add_common(p)
    p.add_argument("--ring", type=int, default=2048)
    p.add_argument("--r-max", type=int, default=500)
    p.add_argument("--t-min", type=float, default=10.0)
    p.add_argument("--t-max", type=float, default=300.0)
    p.add_argument("--t-points", type=int, default=80)
    p.set_defaults(func=cmd_freefermion)

    p = sub.add_parser("phenom-fit", help="fit the growth form to a field CSV")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--c-min", type=float, default=1e-8)
    p.add_argument("--c-max", type=float, default=0.5)
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.set_defaults(func=cmd_phenom_fit)

    p = sub.add_parser("fkpp", help="noiseless FKPP front integration")
    _add_common(p)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--dr", type=float, default=0.05)
    p.add_argument("--r-max", type=float, default=300.0)
    p.add_argument("--time", type=float, default=40.0)
    p.set_defaults(func=cmd_fkpp)

    p = sub.add_parser("lr-check", help="Lieb-Robinson bound certificate")
    _add_common(p); _add_ising(p, 10)
    p.add_argument("--w-label", default="Z")
    p.add_argument("--w-site", type=int, default=0)
    p.add_argument("--v-label", default="Z")
    p.add_argument("--t-min", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=0.35)
    p.add_argument("--t-points", type=int, default=25)
    p.set_defaults(func=cmd_lr_check)

    p = sub.add_parser("bench", help="quick kernel timings")
    _add_common(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "w_site", "absent") is None:
        args.w_site = args.sites // 2
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
