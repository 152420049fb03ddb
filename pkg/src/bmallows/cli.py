"""Command-line interface.

Every command writes ``config.json`` (the resolved options), its outputs and
``manifest.json`` (config plus SHA-256 of every output) into ``--out``.
Passing a manifest or config file through ``--config`` reruns with the same
options; flags given on the command line override it.

Exit codes: 0 success, 2 invalid input, 3 numerical or alpha-range failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as bio
from . import summaries as S
from .augmentation import run_chain_partial
from .dynamics import DynamicPriors, run_dynamic_chain
from .mixture import MixturePriors, classify, run_mixture_chain, within_cluster_ss
from .partition import (AlphaRangeError, LogPartitionTable, build_table, default_grid,
                        default_scale, grid_convergence_check, reference_log_z)
from .ranking import ItemCatalog, PreferenceCycleError, as_metric, check_ranking
from .sampler import Priors, Tuning, generate_by_perturbation, sample_mallows

log = logging.getLogger("bmallows")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
# options that never enter the recorded config
UNRECORDED = {"config", "out", "verbose"}


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- parser


def _add(p, *names, suppress=False, **kw):
    if suppress:
        kw.pop("default", None)
    p.add_argument(*names, **kw)


def _common(p, suppress):
    _add(p, "--config", suppress=suppress, default=None,
         help="manifest.json or config.json of an earlier run")
    _add(p, "--out", suppress=suppress, default=None, help="output directory")
    _add(p, "-v", "--verbose", suppress=suppress, action="store_true", default=False)


def _tuning_args(p, suppress):
    a = lambda *n, **k: _add(p, *n, suppress=suppress, **k)  # noqa: E731
    a("--metric", default="footrule", help="footrule, spearman or kendall")
    a("--table", default=None, help="table JSON from 'table build', or 'auto'")
    a("--lam", type=float, default=0.1, help="rate of the exponential prior on alpha")
    a("--iterations", type=int, default=100_000)
    a("--burn-in", type=int, default=10_000)
    a("--thinning", type=int, default=10)
    a("--L", type=int, default=1, help="leap size")
    a("--sigma-alpha", type=float, default=None, help="alpha random-walk scale")
    a("--alpha-init", type=float, default=1.0)
    a("--seed", type=int, default=1)
    a("--aug-frequency", type=int, default=1)
    a("--tie-interval", type=int, default=10)
    a("--exact-ratio", action="store_true", default=False,
      help="include the leap-and-shift transition ratio in the acceptance")
    a("--chains", type=int, default=1, help="independent chains with derived streams")


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    """The full parser; with ``suppress`` no defaults are filled in."""
    kw = {"argument_default": argparse.SUPPRESS} if suppress else {}
    parser = argparse.ArgumentParser(prog="bmallows", description=__doc__.split("\n")[0],
                                     **kw)
    if not suppress:
        parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    table = sub.add_parser("table", help="log-partition tables", **kw)
    tsub = table.add_subparsers(dest="action", required=True)
    tb = tsub.add_parser("build", help="compute and fit log Z on an alpha grid", **kw)
    _common(tb, suppress)
    _add(tb, "--n", type=int, suppress=suppress, default=None)
    _add(tb, "--metric", suppress=suppress, default="footrule")
    _add(tb, "--method", suppress=suppress, default="auto",
         choices=["auto", "closed_form", "exact_enum", "importance_sampling"])
    _add(tb, "--K", type=int, suppress=suppress, default=100_000,
         help="importance samples per grid point")
    _add(tb, "--seed", type=int, suppress=suppress, default=1)
    _add(tb, "--grid", type=float, nargs=3, metavar=("LO", "HI", "NUM"), suppress=suppress,
         default=None)
    _add(tb, "--degree", type=int, suppress=suppress, default=10)
    _add(tb, "--workers", type=int, suppress=suppress, default=1)
    tc = tsub.add_parser("check", help="compare a table with exact values or a rebuild", **kw)
    _common(tc, suppress)
    _add(tc, "--table", suppress=suppress, default=None)
    _add(tc, "--K", type=int, suppress=suppress, default=None,
         help="importance samples for the rebuild (default: the table's K)")

    fit = sub.add_parser("fit", help="single-population posterior", **kw)
    _common(fit, suppress)
    _add(fit, "--data", suppress=suppress, default=None, help="rank matrix CSV")
    _add(fit, "--preferences", suppress=suppress, default=None,
         help="pairwise preference CSV (assessor_id, less_preferred, more_preferred)")
    _add(fit, "--save-augmented", action="store_true", suppress=suppress, default=False)
    _tuning_args(fit, suppress)

    mix = sub.add_parser("fit-mixture", help="mixture of Mallows models", **kw)
    _common(mix, suppress)
    _add(mix, "--data", suppress=suppress, default=None)
    _add(mix, "--C", type=int, suppress=suppress, default=2)
    _add(mix, "--psi", type=float, suppress=suppress, default=2.0)
    _add(mix, "--alpha-mode", suppress=suppress, default="ordered",
         choices=["ordered", "free", "shared"])
    _add(mix, "--corrected", action="store_true", suppress=suppress, default=False,
         help="include proposal densities in the ordered-alpha acceptance")
    _tuning_args(mix, suppress)

    dyn = sub.add_parser("fit-dynamic", help="time-dependent model", **kw)
    _common(dyn, suppress)
    _add(dyn, "--data", suppress=suppress, default=None, help="timed rank CSV (column t first)")
    _add(dyn, "--lam-beta", type=float, suppress=suppress, default=None)
    _add(dyn, "--a", type=float, suppress=suppress, default=1.0)
    _add(dyn, "--b", type=float, suppress=suppress, default=1.0)
    _add(dyn, "--step-beta", type=float, suppress=suppress, default=0.04)
    _add(dyn, "--beta-init", type=float, suppress=suppress, default=1.0)
    _tuning_args(dyn, suppress)

    sm = sub.add_parser("summarize", help="summaries of sample files", **kw)
    _common(sm, suppress)
    _add(sm, "--samples", nargs="+", suppress=suppress, default=None,
         help="one or more sample files of the same model (pooled)")
    _add(sm, "--top-t", type=int, suppress=suppress, default=None)
    _add(sm, "--level", type=float, suppress=suppress, default=0.9)
    _add(sm, "--truth", suppress=suppress, default=None,
         help="CSV with one complete ranking giving the true ranks")

    pr = sub.add_parser("predict", help="P(assessor prefers b to a) from latent rankings",
                        **kw)
    _common(pr, suppress)
    _add(pr, "--samples", suppress=suppress, default=None,
         help="samples.txt of a fit run with --save-augmented")
    _add(pr, "--assessor", type=int, suppress=suppress, default=0,
         help="0-based assessor row")
    _add(pr, "--pair", nargs=2, action="append", metavar=("A", "B"), suppress=suppress,
         default=None, help="item labels; repeatable")

    cl = sub.add_parser("classify", help="class probabilities for unlabelled assessors", **kw)
    _common(cl, suppress)
    _add(cl, "--train", suppress=suppress, default=None)
    _add(cl, "--labels", suppress=suppress, default=None, help="one class label per line")
    _add(cl, "--test", suppress=suppress, default=None)
    _add(cl, "--psi", type=float, suppress=suppress, default=2.0)
    _add(cl, "--alpha-mode", suppress=suppress, default="shared", choices=["shared", "free"])
    _tuning_args(cl, suppress)

    sim = sub.add_parser("simulate", help="synthetic rank data", **kw)
    _common(sim, suppress)
    _add(sim, "--n", type=int, suppress=suppress, default=None)
    _add(sim, "--rho", suppress=suppress, default=None,
         help="comma-separated generating ranks (default 1..n)")
    _add(sim, "--N", type=int, suppress=suppress, default=10)
    _add(sim, "--method", suppress=suppress, default="perturb", choices=["perturb", "mallows"])
    _add(sim, "--n-leap", type=int, suppress=suppress, default=10,
         help="leap-and-shift moves per assessor (perturb)")
    _add(sim, "--L", type=int, suppress=suppress, default=1)
    _add(sim, "--alpha", type=float, suppress=suppress, default=1.0, help="(mallows)")
    _add(sim, "--metric", suppress=suppress, default="footrule", help="(mallows)")
    _add(sim, "--seed", type=int, suppress=suppress, default=1)
    return parser


def _read_config_file(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: not valid JSON ({e})") from None
    return d.get("config", d) if isinstance(d, dict) else {}


def resolve_args(argv) -> argparse.Namespace:
    """Defaults, overridden by ``--config``, overridden by explicit flags."""
    ns = build_parser().parse_args(argv)
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    if ns.config:
        cfg = _read_config_file(ns.config)
        for key in ("command", "action"):
            if key in cfg and cfg[key] != getattr(ns, key, None):
                raise UsageError(f"config file is for '{cfg[key]}', not '{getattr(ns, key)}'")
        for k, v in cfg.items():
            if k not in explicit and k not in UNRECORDED and hasattr(ns, k):
                setattr(ns, k, v)
    return ns


def recorded(ns) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in UNRECORDED}


# ---------------------------------------------------------------- helpers


def _need(ns, *names):
    for name in names:
        if getattr(ns, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _outdir(ns) -> Path:
    _need(ns, "out")
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(ns, out: Path, files: list[str]) -> None:
    """Write config.json and manifest.json; the manifest hashes every output."""
    cfg = recorded(ns)
    bio.dump_json(out / "config.json", cfg)
    outputs = {name: bio.sha256(out / name) for name in sorted(set(files) | {"config.json"})}
    bio.dump_json(out / "manifest.json", {"version": __version__, "config": cfg,
                                          "outputs": outputs})


def _tuning(ns, save_augmented: bool = False) -> Tuning:
    return Tuning(iterations=ns.iterations, burn_in=ns.burn_in, thinning=ns.thinning, L=ns.L,
                  sigma_alpha=ns.sigma_alpha, seed=ns.seed, alpha_init=ns.alpha_init,
                  exact_ratio=ns.exact_ratio, aug_frequency=ns.aug_frequency,
                  tie_interval=ns.tie_interval, save_augmented=save_augmented)


def _table(ns, n: int) -> LogPartitionTable:
    if ns.table is None:
        raise UsageError("--table is required (a table file, or 'auto' to build one)")
    m = as_metric(ns.metric)
    if ns.table == "auto":
        return build_table(n, m)
    table = LogPartitionTable.load(ns.table)
    if table.n != n:
        raise UsageError(f"table is for n={table.n} but the data have n={n} items")
    if table.metric is not m:
        raise UsageError(f"table is for {table.metric.value}, not {m.value}")
    return table


def _chain_files(k: int) -> list[str]:
    return ["samples.txt"] + [f"samples_chain{c}.txt" for c in range(1, k)]


def _run_chains(ns, run, catalog: ItemCatalog, out: Path, meta: dict | None = None):
    """Run ``ns.chains`` chains with streams 0..k-1; write one sample file each."""
    if ns.chains < 1:
        raise UsageError("--chains must be positive")
    files, diags, results = [], {}, []
    for c, name in enumerate(_chain_files(ns.chains)):
        res = run(c)
        bio.write_samples(out / name, res, catalog, dict(meta or {}, stream=c))
        files.append(name)
        diags[f"chain{c}"] = res.diagnostics
        results.append(res)
    return files, diags, results


def _load_static_data(ns):
    if ns.data is None and ns.preferences is None:
        raise UsageError("--data or --preferences is required")
    data, catalog = [], None
    if ns.data is not None:
        data, catalog = bio.load_rank_matrix(ns.data)
    if ns.preferences is not None:
        prefs, catalog = bio.read_preferences(ns.preferences, catalog)
        data = list(data) + list(prefs)
    if catalog is None:
        raise UsageError("no items found in the data")
    return data, catalog


# ---------------------------------------------------------------- commands


def cmd_table_build(ns) -> int:
    _need(ns, "n")
    out = _outdir(ns)
    alphas = None if ns.grid is None else default_grid(
        ns.grid[0], ns.grid[1], int(ns.grid[2]), scale=default_scale(ns.n, ns.metric))
    table = build_table(ns.n, ns.metric, method=ns.method, alphas=alphas, K=ns.K,
                        seed=ns.seed, degree=ns.degree, workers=ns.workers)
    table.save(out / "table.json")
    diag = {"method": table.method, "fit_residual": table.fit_residual,
            "alpha_range": [table.alpha_min, table.alpha_max]}
    if table.std_error is not None:
        diag["max_std_error"] = float(np.max(table.std_error))
    bio.dump_json(out / "diagnostics.json", diag)
    _finish(ns, out, ["table.json", "diagnostics.json"])
    print(f"wrote {out / 'table.json'} ({table.method}, fit residual {table.fit_residual:.3g})")
    return EXIT_OK


def cmd_table_check(ns) -> int:
    _need(ns, "table")
    out = _outdir(ns)
    table = LogPartitionTable.load(ns.table)
    ref = reference_log_z(table.n, table.metric, table.alphas)
    if ref is not None:
        against = "exact"
        eps = float(np.max(np.abs(table.log_z - ref) / np.maximum(np.abs(ref), 1e-300)))
    else:
        if table.method != "importance_sampling":
            raise UsageError("no exact reference for this table and it is not an "
                             "importance-sampling table")
        against = "rebuild"
        other = build_table(table.n, table.metric, method=table.method, alphas=table.alphas,
                            K=ns.K or table.K, seed=(table.seed or 0) + 1)
        eps = grid_convergence_check(other, table)
    res = {"n": table.n, "metric": table.metric.value, "reference": against, "epsilon": eps}
    bio.dump_json(out / "check.json", res)
    _finish(ns, out, ["check.json"])
    print(f"epsilon vs {against}: {eps:.3e}")
    return EXIT_OK


def cmd_fit(ns) -> int:
    data, catalog = _load_static_data(ns)
    out = _outdir(ns)
    table = _table(ns, catalog.n)
    tuning = _tuning(ns, save_augmented=ns.save_augmented)
    run = lambda c: run_chain_partial(data, ns.metric, Priors(ns.lam), tuning, table,  # noqa
                                      n=catalog.n, stream=c)
    files, diags, results = _run_chains(ns, run, catalog, out)
    if ns.save_augmented:
        bio.write_augmented(out / "augmented.txt", results[0].iteration, results[0].augmented)
        files.append("augmented.txt")
    bio.dump_json(out / "diagnostics.json", diags)
    _finish(ns, out, files + ["diagnostics.json"])
    print(f"wrote {ns.chains} sample file(s) to {out}")
    return EXIT_OK


def cmd_fit_mixture(ns) -> int:
    _need(ns, "data")
    data, catalog = bio.load_rank_matrix(ns.data)
    out = _outdir(ns)
    table = _table(ns, catalog.n)
    tuning = _tuning(ns)
    priors = MixturePriors(ns.lam, ns.psi)
    run = lambda c: run_mixture_chain(data, ns.C, ns.metric, priors, tuning, table,  # noqa
                                      alpha_mode=ns.alpha_mode, corrected=ns.corrected,
                                      n=catalog.n, stream=c)
    files, diags, results = _run_chains(ns, run, catalog, out)
    complete = bio.complete_matrix(data)
    if complete is not None:
        diags["within_cluster_ss"] = float(np.mean(within_cluster_ss(results[0], complete)))
    bio.dump_json(out / "diagnostics.json", diags)
    probs = results[0].assignment_probabilities()
    (out / "assignments.csv").write_text(S.to_csv(
        [[j] + [repr(float(p)) for p in row] for j, row in enumerate(probs)],
        ["assessor"] + [f"cluster_{c + 1}" for c in range(ns.C)]))
    _finish(ns, out, files + ["diagnostics.json", "assignments.csv"])
    print(f"wrote {ns.chains} sample file(s) to {out}")
    return EXIT_OK


def cmd_fit_dynamic(ns) -> int:
    _need(ns, "data")
    data, catalog = bio.load_timed_ranks(ns.data)
    out = _outdir(ns)
    table = _table(ns, catalog.n)
    tuning = _tuning(ns)
    priors = DynamicPriors(ns.lam, ns.lam_beta, ns.a, ns.b)
    run = lambda c: run_dynamic_chain(data, ns.metric, priors, tuning, table,  # noqa
                                      n=catalog.n, step_beta=ns.step_beta,
                                      beta_init=ns.beta_init, stream=c)
    files, diags, _ = _run_chains(ns, run, catalog, out, {"counts": list(data.counts)})
    bio.dump_json(out / "diagnostics.json", diags)
    _finish(ns, out, files + ["diagnostics.json"])
    print(f"wrote {ns.chains} sample file(s) to {out}")
    return EXIT_OK


def _pool(paths):
    loaded = [bio.read_samples(p) for p in paths]
    first, catalog = loaded[0]
    for s, cat in loaded[1:]:
        if s.model != first.model or cat.labels != catalog.labels:
            raise UsageError("sample files to pool must share model and items")
    rho = np.concatenate([s.rho for s, _ in loaded])
    alpha = np.concatenate([s.alpha for s, _ in loaded])
    return first.model, rho, alpha, catalog, loaded


def _block(rho, alpha, labels, ns, truth) -> tuple[dict, str]:
    class View:
        pass
    v = View()
    v.rho, v.alpha = rho, alpha
    table = S.summary_table(v, labels, top_t=ns.top_t, level=ns.level, rho_true=truth)
    return table, S.heat_triplets(np.array(table["marginal_rank_matrix"]))


def cmd_summarize(ns) -> int:
    _need(ns, "samples")
    out = _outdir(ns)
    model, rho, alpha, catalog, loaded = _pool(ns.samples)
    labels = list(catalog.labels)
    truth = None
    if ns.truth is not None:
        rows, tcat = bio.load_rank_matrix(ns.truth)
        if tcat.labels != catalog.labels:
            raise UsageError("truth file items differ from the samples")
        truth = check_ranking(rows[0].entries)
    files = []
    if model == "static":
        summary, heat = _block(rho, alpha, labels, ns, truth)
        (out / "heat.dat").write_text(heat)
        files.append("heat.dat")
        cp = summary["cp_ordering"]
        (out / "cp.csv").write_text(S.to_csv([[lab, repr(p)] for lab, p in cp],
                                             ["item", "cumulative_probability"]))
        files.append("cp.csv")
    else:
        blocks = rho.shape[1]
        key = "cluster" if model == "mixture" else "t"
        summary = {"model": model, key: []}
        for b in range(blocks):
            part, heat = _block(rho[:, b], alpha[:, b], labels, ns, truth)
            summary[key].append(part)
            name = f"heat_{key}{b + (1 if model == 'mixture' else 0)}.dat"
            (out / name).write_text(heat)
            files.append(name)
        if model == "mixture":
            z = np.concatenate([s.z for s, _ in loaded])
            summary["assignment_probabilities"] = [
                [float(np.mean(z[:, j] == c)) for c in range(blocks)] for j in range(z.shape[1])]
        if model == "dynamic":
            summary["beta_mean"] = float(np.mean(np.concatenate([s.beta for s, _ in loaded])))
            summary["sigma2_mean"] = float(np.mean(np.concatenate([s.sigma2 for s, _ in loaded])))
    summary["samples"] = int(rho.shape[0])
    (out / "summary.json").write_text(S.to_json(summary))
    files.append("summary.json")
    _finish(ns, out, files)
    if model == "static" and ns.top_t is not None:
        probs = summary["top_t_probability"]
        for lab in labels:
            print(f"{lab}\t{probs[lab]:.3f}")
    else:
        print(f"wrote summary of {rho.shape[0]} samples to {out}")
    return EXIT_OK


def cmd_predict(ns) -> int:
    _need(ns, "samples", "pair")
    out = _outdir(ns)
    _, catalog = bio.read_samples(ns.samples)
    aug_path = Path(ns.samples).with_name("augmented.txt")
    if not aug_path.exists():
        raise UsageError(f"{aug_path} not found; fit with --save-augmented")
    _, aug = bio.read_augmented(aug_path)
    if not 0 <= ns.assessor < aug.shape[1]:
        raise UsageError(f"assessor {ns.assessor} outside 0..{aug.shape[1] - 1}")
    rows = []
    for a, b in ns.pair:
        try:
            p = S.preference_predictive(aug, ns.assessor, catalog[a], catalog[b])
        except KeyError as e:
            raise UsageError(e.args[0]) from None
        rows.append([a, b, repr(p)])
        print(f"P({b} preferred to {a}) = {p:.4f}")
    (out / "predictions.csv").write_text(S.to_csv(rows, ["a", "b", "prob_b_preferred"]))
    _finish(ns, out, ["predictions.csv"])
    return EXIT_OK


def cmd_classify(ns) -> int:
    _need(ns, "train", "labels", "test")
    train, catalog = bio.load_rank_matrix(ns.train)
    test, tcat = bio.load_rank_matrix(ns.test)
    if tcat.labels != catalog.labels:
        raise UsageError("training and test files have different items")
    names = bio.load_labels(ns.labels)
    if len(names) != len(train):
        raise UsageError(f"{len(names)} labels for {len(train)} training assessors")
    classes = sorted(set(names))
    y = np.array([classes.index(x) for x in names], dtype=np.int64)
    out = _outdir(ns)
    table = _table(ns, catalog.n)
    tuning = _tuning(ns)
    res = classify(train, y, test, ns.metric, MixturePriors(ns.lam, ns.psi), tuning, table,
                   C=len(classes), alpha_mode=ns.alpha_mode, n=catalog.n)
    bio.write_samples(out / "samples.txt", res.samples, catalog, {"classes": classes})
    rows = [[j, classes[int(np.argmax(p))]] + [repr(float(x)) for x in p]
            for j, p in enumerate(res.probabilities)]
    (out / "class_probabilities.csv").write_text(
        S.to_csv(rows, ["assessor", "map_class"] + classes))
    bio.dump_json(out / "diagnostics.json", res.samples.diagnostics)
    _finish(ns, out, ["samples.txt", "class_probabilities.csv", "diagnostics.json"])
    print(f"classified {len(test)} assessors into {len(classes)} classes")
    return EXIT_OK


def cmd_simulate(ns) -> int:
    if ns.rho is not None:
        try:
            rho = check_ranking([int(x) for x in ns.rho.split(",")])
        except ValueError as e:
            raise UsageError(f"--rho: {e}") from None
    else:
        _need(ns, "n")
        rho = np.arange(1, ns.n + 1)
    out = _outdir(ns)
    if ns.method == "perturb":
        data = generate_by_perturbation(rho, ns.N, ns.n_leap, ns.L, ns.seed)
    else:
        data = sample_mallows(rho, ns.alpha, ns.metric, ns.N, ns.seed, L=ns.L)
    catalog = ItemCatalog.default(rho.size)
    bio.write_rank_matrix(out / "data.csv", data, catalog)
    bio.write_rank_matrix(out / "truth.csv", rho[None, :], catalog)
    _finish(ns, out, ["data.csv", "truth.csv"])
    print(f"wrote {ns.N} rankings of {rho.size} items to {out / 'data.csv'}")
    return EXIT_OK


COMMANDS = {
    ("table", "build"): cmd_table_build,
    ("table", "check"): cmd_table_check,
    ("fit", None): cmd_fit,
    ("fit-mixture", None): cmd_fit_mixture,
    ("fit-dynamic", None): cmd_fit_dynamic,
    ("summarize", None): cmd_summarize,
    ("predict", None): cmd_predict,
    ("classify", None): cmd_classify,
    ("simulate", None): cmd_simulate,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = resolve_args(argv)
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[(ns.command, getattr(ns, "action", None))](ns)
    except AlphaRangeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, PreferenceCycleError, bio.DataValidationError, ValueError,
            KeyError, OSError) as e:
        print(f"error: {e.args[0] if isinstance(e, KeyError) else e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
