"""Command-line front door: training, checkpoint evaluation, preference-BO
benchmarks, closed-loop workflow scenarios, and contract-file validation.

Every file a subcommand writes embeds a short manifest hash so an artifact
can be traced back to the invocation that produced it: CSV files carry a
``# manifest_hash,<hex>`` comment row, JSON reports a ``manifest_hash`` key,
and checkpoints store it in their metadata block.  Reruns with the same
manifest in deterministic mode produce byte-identical CSV output.

Output directory resolution order: ``--out``, the ``INTENTCTL_OUT``
environment variable (joined with the subcommand name), then
``./runs/<subcommand>``.  Exit codes: 0 success, 1 domain error (bad data,
missing files), 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import workflow as wf
from .bo.problems import get_problem, run_benchmark
from .morl.train import (
    ChecksumMismatch,
    canonical_config,
    config_hash,
    desk_config,
    dst_eval_prefs,
    evaluate_front,
    ftn_eval_prefs,
    load_checkpoint,
    make_env,
    recover_front,
    run_deql,
    run_eql_baseline,
)
from .otm import OtmError, parse_otm
from .pareto import hypervolume, pareto_filter, sparsity
from .simplex import sample_dirichlet

OUT_ENV_VAR = "INTENTCTL_OUT"

# Hypervolume reference points per environment family, chosen below the
# reachable return range so every front member contributes volume.
_HV_REF = {
    "dst": (0.0, -25.0),
    "la": (0.0, -5.0),
}


class MissingCheckpoint(FileNotFoundError):
    """Eval or workflow pointed at a checkpoint path that does not exist."""


class EmptyFront(ValueError):
    """An evaluation would produce no recovered returns."""


@dataclass(frozen=True)
class RunManifest:
    """What was run: enough to reproduce the invocation byte-for-byte."""

    subcommand: str
    config_path: str
    seeds: tuple[int, ...]
    out_dir: str
    config_hash: str

    @property
    def hash(self) -> str:
        # The output directory is a record, not an input: moving artifacts
        # elsewhere must not change their identity.
        blob = json.dumps(
            [self.subcommand, list(self.seeds), self.config_hash], sort_keys=True
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _hash_dict(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _resolve_out(explicit: str | None, subcommand: str) -> str:
    if explicit:
        return explicit
    root = os.environ.get(OUT_ENV_VAR)
    if root:
        return os.path.join(root, subcommand)
    return os.path.join("runs", subcommand)


def _write_manifest(manifest: RunManifest) -> str:
    os.makedirs(manifest.out_dir, exist_ok=True)
    path = os.path.join(manifest.out_dir, "run_manifest.json")
    doc = asdict(manifest)
    doc["seeds"] = list(manifest.seeds)
    doc["hash"] = manifest.hash
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path: str, header: list[str], rows: list[list], manifest_hash: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# manifest_hash", manifest_hash])
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x) -> str:
    return f"{float(x):.9g}"


def _jsonable(x):
    """NaN-free, list-based view of a value for strict-JSON reports."""
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _apply_threads(n: int | None):
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:  # BLAS pools already started keep their size unless capped here.
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


# ---------------------------------------------------------------------------
# train


def _train_config(args, parser: argparse.ArgumentParser):
    if args.depth is not None and args.env != "ftn":
        parser.error("--depth applies to the ftn environment only")
    env = f"ftn:{args.depth}" if args.env == "ftn" and args.depth else args.env
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    cfg = desk_config(env) if args.desk else canonical_config(env)
    try:
        cfg = replace(cfg, **overrides)
    except TypeError as exc:
        raise ValueError(f"bad config override in {args.config}: {exc}") from None
    cfg = replace(cfg, seed=args.seed)
    if args.steps is not None:
        cfg = replace(cfg, max_env_steps=args.steps)
    return cfg


def _stamp_telemetry(path: str, manifest_hash: str, deterministic: bool):
    """Prepend the hash row; deterministic runs zero the wall-clock column."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if deterministic and "samples_per_sec" in header:
        col = header.index("samples_per_sec")
        for row in body:
            row[col] = "0"
    _write_csv(path, header, body, manifest_hash)


def _stamp_checkpoint(path: str, manifest_hash: str):
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta"]))
    meta["manifest_hash"] = manifest_hash
    np.savez(
        path,
        online=data["online"],
        target=data["target"],
        meta=np.array(json.dumps(meta)),
    )


def cmd_train(args, parser) -> int:
    cfg = _train_config(args, parser)
    out_dir = _resolve_out(args.out, "train")
    manifest = RunManifest(
        subcommand="train",
        config_path=args.config or "",
        seeds=(args.seed,),
        out_dir=out_dir,
        config_hash=config_hash(cfg),
    )
    _write_manifest(manifest)
    runner = run_eql_baseline if args.algo == "eql" else run_deql
    result = runner(cfg, out_dir)
    _stamp_telemetry(result.telemetry_path, manifest.hash, args.deterministic)
    _stamp_checkpoint(result.checkpoint_path, manifest.hash)
    _write_json(
        os.path.join(out_dir, "result.json"),
        {
            "manifest_hash": manifest.hash,
            "env": cfg.env,
            "algo": args.algo,
            "seed": cfg.seed,
            "env_steps": result.env_steps,
            "grad_steps": result.grad_steps,
            "wall_time_s": 0.0 if args.deterministic else round(result.wall_time, 3),
            "checkpoint": result.checkpoint_path,
            "telemetry": result.telemetry_path,
        },
    )
    print(
        f"trained {cfg.env} ({args.algo}): {result.env_steps} env steps, "
        f"{result.grad_steps} grad steps -> {result.checkpoint_path}"
    )
    return 0


# ---------------------------------------------------------------------------
# eval


def _safe_hv(front: np.ndarray, ref: np.ndarray) -> tuple[float, float, int]:
    """Hypervolume of the ref-dominating subset.

    Weak checkpoints can return points beyond the reference (e.g. a wandering
    policy paying far more step cost than any optimal route); those carry no
    volume and would otherwise make the estimator refuse the whole front.
    Returns (value, std_error, n_dominating).
    """
    nd = pareto_filter(np.unique(np.round(front, 9), axis=0))
    dom = nd[np.all(nd > ref, axis=1)]
    if dom.shape[0] == 0:
        return 0.0, 0.0, 0
    hv = hypervolume(dom, ref)
    return hv.value, hv.std_error, int(dom.shape[0])


def _eval_prefs(env, n: int) -> np.ndarray:
    m = env.spec.reward_dim
    if m == 2:
        return dst_eval_prefs(n)
    witnesses = ftn_eval_prefs(env)
    if n <= witnesses.shape[0]:
        return witnesses[:n]
    rng = np.random.default_rng([4817, n])
    fill = np.stack(
        [sample_dirichlet(np.ones(m), rng) for _ in range(n - witnesses.shape[0])]
    )
    return np.vstack([witnesses, fill])


def cmd_eval(args, parser) -> int:
    if args.n_prefs < 1:
        raise EmptyFront("cannot evaluate an empty preference sweep (--n-prefs < 1)")
    if not os.path.exists(args.checkpoint):
        raise MissingCheckpoint(f"no checkpoint at {args.checkpoint}")
    online, _, cfg = load_checkpoint(args.checkpoint)
    env = make_env(cfg)
    prefs = _eval_prefs(env, args.n_prefs)
    front = recover_front(online, env, prefs)
    if front.shape[0] == 0:
        raise EmptyFront("recovered front is empty")

    kind = cfg.env_kind()
    ref = np.zeros(env.spec.reward_dim) if kind == "ftn" else np.array(_HV_REF[kind])
    try:
        truth = env.true_pareto_set()
    except NotImplementedError:
        truth = None
    if truth is not None:
        metrics = evaluate_front(front, truth)
    else:
        uniq = np.unique(np.round(front, 9), axis=0)
        nd = pareto_filter(uniq)
        metrics = {
            "crf1": None,
            "n_returns": int(front.shape[0]),
            "n_unique": int(uniq.shape[0]),
            "front_size": int(nd.shape[0]),
            "sparsity": sparsity(nd) if nd.shape[0] >= 2 else float("nan"),
        }
    hv, hv_se, n_dom = _safe_hv(front, ref)
    metrics["hypervolume"] = hv
    metrics["hypervolume_se"] = hv_se
    metrics["hv_dominating"] = n_dom

    out_dir = _resolve_out(args.out, "eval")
    manifest = RunManifest(
        subcommand="eval",
        config_path=args.checkpoint,
        seeds=(cfg.seed,),
        out_dir=out_dir,
        config_hash=_hash_dict({"checkpoint": config_hash(cfg), "n_prefs": args.n_prefs}),
    )
    _write_manifest(manifest)
    m = env.spec.reward_dim
    header = [f"w{i + 1}" for i in range(m)] + [f"r{j + 1}" for j in range(m)]
    rows = [[_fmt(v) for v in np.concatenate([w, r])] for w, r in zip(prefs, front)]
    _write_csv(os.path.join(out_dir, "front.csv"), header, rows, manifest.hash)
    _write_json(
        os.path.join(out_dir, "eval.json"),
        {
            "manifest_hash": manifest.hash,
            "checkpoint": args.checkpoint,
            "env": cfg.env,
            "n_prefs": args.n_prefs,
            "metrics": _jsonable(metrics),
        },
    )
    shown = "n/a" if metrics["crf1"] is None else f"{metrics['crf1']:.4f}"
    print(
        f"evaluated {cfg.env}: crf1={shown} front_size={metrics['front_size']} "
        f"hv={metrics['hypervolume']:.4f}"
    )
    return 0


# ---------------------------------------------------------------------------
# paxbo


_TRACE_COLS = ["t", "w1", "true_objective", "observed_objective", "true_residual_max", "event"]


def cmd_paxbo(args, parser) -> int:
    problem = get_problem(args.problem)
    out_dir = _resolve_out(args.out, "paxbo")
    manifest = RunManifest(
        subcommand="paxbo",
        config_path="",
        seeds=(args.seed,),
        out_dir=out_dir,
        config_hash=_hash_dict(
            {"problem": args.problem, "tr": args.tr, "evals": args.evals}
        ),
    )
    _write_manifest(manifest)
    variants = {"on": (True,), "off": (False,), "both": (True, False)}[args.tr]
    summary: dict = {"manifest_hash": manifest.hash, "problem": args.problem}
    for tr in variants:
        bench = run_benchmark(problem, trust_region=tr, seed=args.seed, n_evals=args.evals)
        tag = "tr_on" if tr else "tr_off"
        rows = [
            [row["t"]] + [_fmt(row[k]) for k in _TRACE_COLS[1:-1]] + [row["event"]]
            for row in bench.trace
        ]
        _write_csv(os.path.join(out_dir, f"paxbo_{tag}.csv"), _TRACE_COLS, rows, manifest.hash)
        summary[tag] = _jsonable(
            {
                "best_true": bench.best_true,
                "best_w": None if bench.best_w is None else bench.best_w,
                "true_violations": bench.true_violations,
                "n_evals": bench.n_evals,
            }
        )
        shown = "none" if bench.best_true is None else f"{bench.best_true:.5f}"
        print(f"{args.problem} {tag}: best_true={shown} violations={bench.true_violations}")
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return 0


# ---------------------------------------------------------------------------
# workflow


def cmd_workflow(args, parser) -> int:
    if args.checkpoint:
        if not os.path.exists(args.checkpoint):
            raise MissingCheckpoint(f"no checkpoint at {args.checkpoint}")
        net, _, net_cfg = load_checkpoint(args.checkpoint)
        if net_cfg.env_kind() != "la":
            raise ValueError(
                f"workflow scenarios drive the link environment; checkpoint "
                f"was trained on {net_cfg.env!r}"
            )
    else:
        cfg = desk_config("la", seed=args.seed, max_env_steps=args.train_steps)
        net = run_deql(cfg).online
    out_dir = _resolve_out(args.out, "workflow")
    manifest = RunManifest(
        subcommand="workflow",
        config_path=args.checkpoint or "",
        seeds=(args.seed,),
        out_dir=out_dir,
        config_hash=_hash_dict(
            {
                "scenario": args.scenario,
                "ticks": args.ticks,
                "train_steps": None if args.checkpoint else args.train_steps,
            }
        ),
    )
    _write_manifest(manifest)
    kwargs = {} if args.ticks is None else {"ticks": args.ticks}
    result = wf.SCENARIOS[args.scenario](net, args.seed, **kwargs)
    paths = result.save(out_dir)
    # The trace already opens with the scenario's own hash row; the run
    # manifest is appended as a second comment so both identities survive.
    with open(paths["trace"], newline="") as fh:
        rows = list(csv.reader(fh))
    rows.insert(1, ["# run_manifest_hash", manifest.hash])
    with open(paths["trace"], "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    rec = result.recommendation
    rec_shown = "none" if rec is None else np.array2string(rec[0], precision=3)
    print(
        f"{args.scenario} seed {args.seed}: mean objective "
        f"{result.objective_mean:.4f}, recommended w1 per service {rec_shown}"
    )
    return 0


# ---------------------------------------------------------------------------
# otm


def cmd_otm_validate(args, parser) -> int:
    with open(args.path) as fh:
        text = fh.read()
    otm = parse_otm(text)
    modified = sum(1 for c in otm.constraints if c.modified)
    print(
        f"{args.path}: valid ({otm.objective.kpi}/{otm.objective.service} objective, "
        f"{len(otm.constraints)} constraints ({modified} adapted), "
        f"{len(otm.metadata.adaptation_log)} log entries)"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="intentctl",
        description="Train, evaluate, and orchestrate the intent-control stack.",
    )
    parser.add_argument(
        "--threads", type=int, default=None, help="cap BLAS/OpenMP thread pools"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a multi-objective controller")
    p.add_argument("--env", choices=("dst", "ftn", "la"), required=True)
    p.add_argument("--algo", choices=("deql", "eql"), default="deql")
    p.add_argument("--depth", type=int, default=None, help="tree depth (ftn only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--desk", action="store_true", help="workstation-sized config")
    p.add_argument("--steps", type=int, default=None, help="override env-step budget")
    p.add_argument("--config", default=None, help="JSON file of config overrides")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="recover and score a checkpoint's front")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n-prefs", type=int, default=480)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("paxbo", help="preference BO benchmark traces")
    p.add_argument("--problem", choices=("synthetic1", "synthetic2"), default="synthetic1")
    p.add_argument("--tr", choices=("on", "off", "both"), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--evals", type=int, default=60)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_paxbo)

    p = sub.add_parser("workflow", help="closed-loop scenario runs")
    p.add_argument("--scenario", choices=sorted(wf.SCENARIOS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ticks", type=int, default=None)
    p.add_argument("--checkpoint", default=None, help="link-environment checkpoint")
    p.add_argument(
        "--train-steps",
        type=int,
        default=20_000,
        help="budget for the throwaway net when no checkpoint is given",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_workflow)

    p = sub.add_parser("otm", help="contract-file tools")
    osub = p.add_subparsers(dest="otm_command", required=True)
    v = osub.add_parser("validate", help="parse and check a contract file")
    v.add_argument("path")
    v.set_defaults(func=cmd_otm_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    try:
        return args.func(args, parser)
    except (
        OtmError,
        ChecksumMismatch,
        MissingCheckpoint,
        EmptyFront,
        FileNotFoundError,
        json.JSONDecodeError,
        KeyError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
