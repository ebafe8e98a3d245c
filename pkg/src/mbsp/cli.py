"""Command-line front end.

Every subcommand reads one scenario (``--config``: a JSON path or the name
of a shipped scenario), writes its artifacts into ``--out-dir`` and records
a ``manifest.json`` with the config hash, seeds and library versions.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .bands import expanded_index_sets, support_metrics
from .design import check_rank, greedy_augment, sensitivity
from .errors import NumericalError, ValidationError
from .io import manifest, read_samples, write_csv, write_json, write_samples
from .music import assemble_data, estimate_support, music_spectrum, threshold_db
from .reconstruct import (BoundEvaluator, ErrorBudget, SampleStore, block_coefficients,
                          error_bound, plan_block, stream_reconstruct)
from .scenario import SHIPPED, Scenario
from .scheme import build_scheme, consecutive_moduli
from .solver import build_folded_system
from .window import certified_epsilon, design_window, tail_bound

log = logging.getLogger("mbsp")


def _db(x):
    with np.errstate(divide="ignore"):
        return 20 * np.log10(np.abs(x))


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


class _Run:
    """Collects output paths and writes the manifest at the end."""

    def __init__(self, command: str, scenario: Scenario | None, out_dir, argv=None):
        self.command, self.scenario = command, scenario
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.argv = argv
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(p)
        return p

    def finish(self, extra_seeds: dict | None = None) -> dict:
        seeds = {}
        if self.scenario is not None:
            s = self.scenario.seeds()
            seeds = {"scenario": self.scenario.seed, "components": s[:-1], "noise": s[-1]}
        seeds.update(extra_seeds or {})
        doc = manifest(self.command, self.scenario.doc if self.scenario else {}, seeds,
                       [f.name for f in self.files], self.argv)
        write_json(self.out / "manifest.json", doc)
        return doc


# -- pipelines ---------------------------------------------------------------------

def run_window_info(Bw: float, T: float, T1: float, delta=None, out_dir=".",
                    n_csv: int = 0, scenario=None, argv=None) -> dict:
    win = design_window(Bw, T, T1, delta)
    run = _Run("window-info", scenario, out_dir, argv)
    doc = win.to_dict() | {"BwT": win.BwT, "certified_epsilon": certified_epsilon(win)}
    write_json(run.path("window.json"), doc)
    if n_csv:
        t = np.linspace(-T / 2, T / 2, n_csv)
        write_csv(run.path("window.csv"), ["t", "w", "tail_bound"],
                  [t, win(t), tail_bound(win, t)])
    run.finish()
    return doc


def run_design(scenario: Scenario, out_dir=".", moduli=None, augment: bool | None = None,
               threads: int = 1, argv=None) -> dict:
    """Scheme, rank report, Gamma curve and occupancy for a band plan."""
    sup = scenario.support
    sets = expanded_index_sets(sup)
    opts = scenario.doc.get("design", {})
    if moduli is not None:
        base = build_scheme(moduli, 0.0, sup.T)
    elif scenario.has_scheme() and not augment:
        base = scenario.scheme()
    else:
        base = build_scheme(consecutive_moduli(len(sets.union), int(opts.get("K", 4))), 0.0, sup.T)
    grid = int(opts.get("grid_density", 8192))
    rank = check_rank(base, sets)
    if not rank.full_rank:
        raise NumericalError(f"folded system rank {rank.rank} < {rank.cols} for moduli {base.moduli}")
    log_steps = []
    scheme = base
    if augment:
        lo_hi = opts.get("candidates")
        cands = range(int(lo_hi[0]), int(lo_hi[1]) + 1) if lo_hi else None
        res = greedy_augment(base, sets, cands, float(opts.get("target_db", -np.inf)),
                             int(opts.get("max_added", 8)), grid, threads)
        scheme, log_steps = res.scheme, res.log
        rank = check_rank(scheme, sets)
    sens = sensitivity(scheme, sets, grid_density=grid)
    occ = support_metrics(sup)
    run = _Run("design", scenario, out_dir, argv)
    doc = scheme.to_dict() | {"rank": rank.to_dict(), "gamma_max_db": sens.gamma_max_db,
                              "grid_density": grid, "base_moduli": list(base.moduli),
                              "augment_log": log_steps}
    write_json(run.path("scheme.json"), doc)
    write_json(run.path("rank.json"), rank.to_dict())
    write_json(run.path("index_sets.json"), sets.to_dict())
    write_csv(run.path("gamma.csv"), ["t", "gamma", "gamma_db"], [sens.t, sens.gamma, sens.gamma_db])
    occ_doc = {"nyquist_span": occ.nyquist_span, "landau": occ.landau,
               "windowed_landau": occ.windowed_landau, "sampling_rate": scheme.n_instants / sup.T}
    occ_doc |= occ.ratios(scheme.n_instants / sup.T)
    write_json(run.path("occupancy.json"), occ_doc)
    run.finish()
    return {"scheme": doc, "occupancy": occ_doc}


def _source_store(scenario: Scenario, scheme, taus, samples_path=None):
    """Sample store for the blocks: from a file or freshly generated.

    Returns the store and the mixture (``None`` when no signals are defined).
    """
    mix = scenario.mixture(taus) if scenario.doc.get("signals") else None
    if samples_path is not None:
        n, k, q, vals = read_samples(samples_path)
        store = SampleStore.from_grid_coords(scheme, n, k, q, vals)
        if mix is not None:
            store.clean = np.asarray(mix(store.times), dtype=complex)
        return store, mix
    if mix is None:
        raise ValidationError("no sample file given and the scenario defines no signals")
    rng = np.random.Generator(np.random.PCG64(scenario.seeds()[-1]))
    return SampleStore.from_function(scheme, mix, taus, scenario.snr_db, rng), mix


def run_generate(scenario: Scenario, out_dir=".", schedule: str = "reconstruct",
                 fmt: str = "bin", grid_rate: float | None = None, argv=None) -> dict:
    scheme = scenario.scheme()
    taus = scenario.block_taus() if schedule == "reconstruct" else scenario.blind_taus()
    store, mix = _source_store(scenario, scheme, taus)
    n, k, q = store.grid_coords()
    run = _Run("generate", scenario, out_dir, argv)
    name = "samples.csv" if fmt == "csv" else "samples.mbsp"
    write_samples(run.path(name), n, k, q, store.values)
    if grid_rate:
        lo, hi = float(min(taus)) - scheme.T / 2, float(max(taus)) + scheme.T / 2
        t = np.arange(math.ceil(lo * grid_rate), math.ceil(hi * grid_rate)) / grid_rate
        v = mix(t)
        write_csv(run.path("signal.csv"), ["t", "re", "im"], [t, v.real, v.imag])
    run.finish()
    return {"count": len(store.values), "file": str(run.out / name)}


def _truth(mix, bands, m, t):
    out = np.zeros(len(t), dtype=complex)
    for c, b in zip(mix.components, bands):
        if b == m:
            out += c(t)
    return out


def run_reconstruct(scenario: Scenario, out_dir=".", samples_path=None, tau_step=None,
                    n_blocks=None, out_rate=None, components=None, threads: int = 1,
                    argv=None) -> dict:
    """Reconstruct ``z`` and components block by block; write curves, bounds and a summary."""
    sup, scheme, window = scenario.support, scenario.scheme(), scenario.window()
    sets = expanded_index_sets(sup)
    system = build_folded_system(scheme, sets.union)
    system.require_rank()
    blk = scenario.blocks()
    if tau_step is not None:
        blk["tau_step"] = tau_step
    if n_blocks is not None:
        blk["count"] = n_blocks
    if out_rate is not None:
        blk["out_rate"] = out_rate
    scenario.doc["blocks"] = blk
    taus = scenario.block_taus()
    if components is None:
        components = scenario.doc.get("outputs", {}).get("components", list(range(sup.M)))
    components = [int(m) for m in components]
    if any(not 0 <= m < sup.M for m in components):
        raise ValidationError(f"components must lie in 0..{sup.M - 1}")
    store, mix = _source_store(scenario, scheme, taus, samples_path)
    bands = scenario.component_bands()

    eps = certified_epsilon(window)
    A_s = tuple(float(max(1, bands.count(m))) if mix is not None else 1.0 for m in range(sup.M))
    evaluator = BoundEvaluator(scheme, system)
    sigma = None
    if mix is None and math.isfinite(scenario.snr_db):
        power = np.mean(np.abs(store.values) ** 2)
        sigma = math.sqrt(power / 10 ** (scenario.snr_db / 10))

    rows = {"t": []}
    sig_e = noise_e = 0.0
    results = stream_reconstruct(scheme, system, window, sets, store, blk["tau_step"],
                                 int(blk["count"]), float(blk["out_rate"]), blk["tau0"],
                                 components, threads)
    for tau, res in zip(taus, results):
        plan = plan_block(scheme, tau)
        rel = res.out_t - res.tau
        if store.clean is not None:
            eta = store.sample(plan) - store.sample_clean(plan)
            budget = ErrorBudget(float(np.linalg.norm(eta)), A_s, eps, scheme.n_instants)
            c_clean = block_coefficients(plan, system, window, store.sample_clean(plan))
            sig_e += float(np.sum(np.abs(c_clean) ** 2))
            noise_e += float(np.sum(np.abs(res.c_p - c_clean) ** 2))
        elif sigma is not None:
            budget = ErrorBudget.from_sigma(sigma, A_s, eps, scheme.n_instants)
        else:
            budget = ErrorBudget(0.0, A_s, eps, scheme.n_instants)
        rows["t"].append(res.out_t)
        rows.setdefault("z_re", []).append(res.z.real)
        rows.setdefault("z_im", []).append(res.z.imag)
        rows.setdefault("bound_z", []).append(
            error_bound(budget, window, evaluator, sets.union, rel, res.tau) if len(rel) else rel)
        if mix is not None:
            rows.setdefault("error_z", []).append(np.abs(res.z - mix(res.out_t)))
        for m in components:
            s = res.components[m]
            rows.setdefault(f"s{m}_re", []).append(s.real)
            rows.setdefault(f"s{m}_im", []).append(s.imag)
            rows.setdefault(f"bound_{m}", []).append(
                error_bound(budget, window, evaluator, sets.per_component[m], rel, res.tau, m)
                if len(rel) else rel)
            if mix is not None:
                rows.setdefault(f"error_{m}", []).append(np.abs(s - _truth(mix, bands, m, res.out_t)))
    cols = {k: np.concatenate(v) for k, v in rows.items()}

    run = _Run("reconstruct", scenario, out_dir, argv)
    t = cols["t"]
    write_csv(run.path("z.csv"), ["t", "re", "im"], [t, cols["z_re"], cols["z_im"]])
    for m in components:
        write_csv(run.path(f"component_{m}.csv"), ["t", "re", "im"],
                  [t, cols[f"s{m}_re"], cols[f"s{m}_im"]])
    keys = ["bound_z"] + (["error_z"] if "error_z" in cols else [])
    for m in components:
        keys += [f"bound_{m}"] + ([f"error_{m}"] if f"error_{m}" in cols else [])
    write_csv(run.path("error_budget.csv"), ["t"] + keys + [k + "_db" for k in keys],
              [t] + [cols[k] for k in keys] + [_db(cols[k]) for k in keys])
    summary = {"blocks": len(taus), "tau": [float(x) for x in taus], "n_instants": scheme.n_instants,
               "epsilon": eps, "snr_db": _finite(scenario.snr_db),
               "coefficient_snr_db": _finite(10 * np.log10(sig_e / noise_e)) if noise_e > 0 else None,
               "max_bound_z": float(np.max(cols["bound_z"]))}
    if "error_z" in cols:
        summary["max_error_z"] = float(np.max(cols["error_z"]))
        summary["min_error_z_db"] = float(np.min(_db(cols["error_z"])))
        summary["max_error_z_db"] = float(np.max(_db(cols["error_z"])))
        summary["components"] = {str(m): {"max_error": float(np.max(cols[f"error_{m}"])),
                                          "max_bound": float(np.max(cols[f"bound_{m}"])),
                                          "min_error_db": float(np.min(_db(cols[f"error_{m}"])))}
                                 for m in components}
    write_json(run.path("summary.json"), summary)
    run.finish()
    return summary


def run_blind(scenario: Scenario, out_dir=".", samples_path=None, n_blocks=None,
              subspace_dim=None, threads: int = 1, argv=None) -> dict:
    """MUSIC scan: chi(p) curve and the detected support."""
    scheme, window = scenario.scheme(), scenario.window()
    opts = scenario.blind()
    if n_blocks is not None:
        opts["blocks"] = int(n_blocks)
    if subspace_dim is not None:
        opts["subspace_dim"] = subspace_dim
    scenario.doc["blind"] = opts
    taus = scenario.blind_taus()
    truth = expanded_index_sets(scenario.support)
    P = opts["subspace_dim"]
    P = len(truth.union) if P == "auto" else int(P)
    store, _ = _source_store(scenario, scheme, taus, samples_path)
    data = assemble_data(scheme, window, store, taus, opts.get("candidate_range"))
    if P >= data.N:
        raise ValidationError(f"subspace dimension {P} must be below N = {data.N}")
    if data.H < P:
        log.warning("H=%d blocks is below the subspace dimension P=%d", data.H, P)
    res = music_spectrum(data, P, threads=threads)
    support = estimate_support(res, min_width=int(opts["min_width"]))
    run = _Run("blind-scan", scenario, out_dir, argv)
    write_csv(run.path("chi.csv"), ["p", "chi", "chi_db"], [res.candidates, res.spectrum, res.spectrum_db])
    doc = support.to_dict() | {"subspace_dim": P, "blocks": data.H, "n_instants": data.N,
                               "threshold_db": threshold_db(res.spectrum_db),
                               "candidate_range": list(data.candidate_range)}
    write_json(run.path("support.json"), doc)
    run.finish()
    return doc


# -- argument parsing --------------------------------------------------------------

def _load(args) -> Scenario:
    if args.config is None:
        raise ValidationError("--config is required for this subcommand")
    p = Path(args.config)
    if not p.exists() and args.config in SHIPPED:
        return Scenario.shipped(args.config, args.seed)
    return Scenario.load(p, args.seed)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _dim(text):
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or 'auto'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"scenario JSON path or shipped name {SHIPPED}")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out-dir", default=".", help="directory for all outputs")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="mbsp", description="Multiband sampling and reconstruction")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("window-info", parents=[common], help="window parameters and tail bound")
    p.add_argument("--bwt", type=float, help="Bw*T (overrides the scenario)")
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--T1", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--csv-points", type=int, default=0, help="also write (t, w, tail_bound) samples")

    p = sub.add_parser("design", parents=[common], help="scheme, rank and noise sensitivity")
    p.add_argument("--moduli", type=_int_list, help="base moduli, e.g. 68,69,70,71")
    p.add_argument("--augment", action="store_true", help="greedily add moduli per the design section")

    p = sub.add_parser("generate", parents=[common], help="write a sample file for a scenario")
    p.add_argument("--schedule", choices=("reconstruct", "blind"), default="reconstruct")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--grid-rate", type=float, default=None, help="also write the clean signal on a uniform grid")

    p = sub.add_parser("reconstruct", parents=[common], help="block reconstruction with error bounds")
    p.add_argument("--samples", help="sample file (binary or .csv); generated when omitted")
    p.add_argument("--tau-step", type=float)
    p.add_argument("--blocks", type=int)
    p.add_argument("--out-rate", type=float)
    p.add_argument("--components", type=_int_list)

    p = sub.add_parser("blind-scan", parents=[common], help="MUSIC support estimation")
    p.add_argument("--samples")
    p.add_argument("--blocks", type=int)
    p.add_argument("--subspace-dim", type=_dim)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "window-info":
            sc = _load(args) if args.config else None
            if sc is not None:
                w = sc.doc.get("window", {})
                Bw, T = sc.support.Bw, sc.support.T
                T1, delta = w.get("T1", T / 2), w.get("delta")
            elif args.bwt is None:
                raise ValidationError("window-info needs --config or --bwt")
            else:
                T = 1.0 if args.T is None else args.T
                Bw, T1, delta = args.bwt / T, T / 2, None
            if args.bwt is not None and sc is not None:
                Bw = args.bwt / T
            T1 = args.T1 if args.T1 is not None else T1
            delta = args.delta if args.delta is not None else delta
            out = run_window_info(Bw, T, T1, delta, args.out_dir, args.csv_points, sc, argv)
        elif args.command == "design":
            out = run_design(_load(args), args.out_dir, args.moduli, args.augment, args.threads, argv)
        elif args.command == "generate":
            out = run_generate(_load(args), args.out_dir, args.schedule, args.format,
                               args.grid_rate, argv)
        elif args.command == "reconstruct":
            out = run_reconstruct(_load(args), args.out_dir, args.samples, args.tau_step,
                                  args.blocks, args.out_rate, args.components, args.threads, argv)
        else:
            out = run_blind(_load(args), args.out_dir, args.samples, args.blocks,
                            args.subspace_dim, args.threads, argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    log.info("%s done: %s", args.command, out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
