"""Command-line entry point: corpus generation, training, detection,
benchmarking, and the label service.

Every run writes a ``manifest.json`` beside its outputs capturing the
command, the resolved configuration, and the file paths involved, so a
run can be reproduced from the manifest alone. Output bytes depend only
on the seed and configuration; timestamps live in the manifest, never
in report files.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .active import (ActiveConfig, DetectionLoop, GroundTruthOracle,
                     run_active_detection, write_alarm_csv, write_query_log)
from .bench import (Exp3Config, _event_start_reset, build_meta_corpus,
                    resolve_generator, run_experiment, write_report)
from .features import WindowSpec, read_corpus, write_corpus
from .naive_bayes import GaussianNaiveBayes, prequential_run
from .proto import MetaDetector, TrainConfig, train_meta_detector
from .service import DEFAULT_PORT, serve, trace_feed
from .streams import (DriftKind, DriftSpec, generate_drifting_stream,
                      read_stream_csv, read_trace, write_stream_csv)

log = logging.getLogger(__name__)

OUT_DIR_ENV = "DRIFTLAB_OUT"


@dataclass
class RunManifest:
    """Everything needed to rerun one CLI invocation."""

    command: str
    config: dict
    seed: int | None
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    started: str = ""
    finished: str = ""

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), sort_keys=True, indent=2)
                        + "\n")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _manifest(args: argparse.Namespace, command: str) -> RunManifest:
    config = {k: v for k, v in vars(args).items()
              if k not in ("func", "config") and v is not None}
    config = {k: (str(v) if isinstance(v, Path) else v)
              for k, v in config.items()}
    return RunManifest(command=command, config=config,
                       seed=getattr(args, "seed", None), started=_now())


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def read_config_file(path: str | Path) -> dict:
    """key = value lines; values parsed as JSON when possible.

    Keys use the flag spelling with dashes or underscores; '#' starts a
    comment.
    """
    overrides: dict = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    return overrides


# --- gen ----------------------------------------------------------------

def cmd_gen(args: argparse.Namespace) -> int:
    manifest = _manifest(args, "gen")
    if args.kind == "meta-corpus" and (args.l is None or args.n is None):
        print("error: gen --kind meta-corpus requires --l and --n",
              file=sys.stderr)
        return 2
    out = _out_dir(args)
    if args.kind == "meta-corpus":
        spec = WindowSpec(n=args.n, L=args.l)
        corpus = build_meta_corpus(spec, args.per_class, args.seed)
        path = out / "corpus.csv"
        write_corpus(corpus, path)
        print(f"wrote {len(corpus)} meta-samples to {path}")
    else:
        generator = resolve_generator(args.generator)
        positions = [(i + 1) * args.length // (args.drifts + 1)
                     for i in range(args.drifts)]
        drifts = [DriftSpec(kind=DriftKind.SUDDEN, position=p,
                            magnitude=args.magnitude)
                  for p in positions]
        stream = generate_drifting_stream(generator, args.length, drifts,
                                          seed=args.seed, noise=args.noise)
        path = out / f"{generator}.csv"
        write_stream_csv(stream, path,
                         meta={"generator": generator, "seed": args.seed,
                               "noise": args.noise,
                               "drifts": [d.to_dict() for d in drifts]})
        print(f"wrote {len(stream)} samples to {path}")
    manifest.outputs = [str(path)]
    manifest.finished = _now()
    manifest.write(out)
    return 0


# --- train --------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    manifest = _manifest(args, "train")
    manifest.inputs = [str(args.corpus)]
    out = _out_dir(args)
    corpus = read_corpus(args.corpus)
    spec = WindowSpec(n=args.n, L=corpus[0].gaps.shape[0])
    cfg = TrainConfig(episodes=args.episodes, n_support=args.ns,
                      n_query=args.nq, lr=args.lr,
                      weight_decay=args.weight_decay, seed=args.seed)
    detector, report = train_meta_detector(corpus, spec, arch=args.arch,
                                           embed_dim=args.embed_dim,
                                           config=cfg)
    checkpoint = out / "checkpoint.json"
    detector.save(checkpoint)
    losses = out / "losses.csv"
    with open(losses, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("episode", "loss"))
        writer.writerows(enumerate(report.losses, start=1))
    print(f"trained {args.arch} for {report.episodes_run} episodes "
          f"(best val loss {report.best_val_loss:.4f}); "
          f"checkpoint at {checkpoint}")
    manifest.outputs = [str(checkpoint), str(losses)]
    manifest.finished = _now()
    manifest.write(out)
    return 0


# --- detect -------------------------------------------------------------

def cmd_detect(args: argparse.Namespace) -> int:
    manifest = _manifest(args, "detect")
    out = _out_dir(args)
    if (args.trace is None) == (args.stream is None):
        raise ValueError("pass exactly one of --trace or --stream")
    detector = MetaDetector.load(args.checkpoint)
    source_path = args.trace if args.trace is not None else args.stream
    manifest.inputs = [str(args.checkpoint), str(source_path)]

    if args.trace is not None:
        source, meta = read_trace(args.trace)
    else:
        source, meta = read_stream_csv(args.stream)
    drifts = [DriftSpec.from_dict(d) for d in (meta or {}).get("drifts", [])]

    budget = 0 if args.oracle == "none" else args.budget
    cfg = ActiveConfig(label_budget=budget, expire_after=args.expire_after)
    oracle = None
    if args.oracle == "ground-truth":
        if not drifts:
            raise ValueError("ground-truth oracle needs drift metadata in "
                             "the input file")
        oracle = GroundTruthOracle(drifts, detector.spec)

    if args.trace is not None and args.oracle != "service":
        result = run_active_detection(source, detector, cfg, oracle=oracle)
    else:
        learner = GaussianNaiveBayes()
        reset = _event_start_reset(learner, detector.spec.required_length)
        loop = DetectionLoop(detector, cfg, oracle=oracle, reset_hook=reset)
        pace = args.pace if args.oracle == "service" else 0.0
        if args.trace is not None:
            feed = trace_feed(loop, (int(v) for v in source), pace=pace)
        else:
            def feed() -> None:
                def hook(t, sample, error):
                    loop.push(error)
                    if pace > 0:
                        time.sleep(pace)
                prequential_run(source, learner, hook=hook)

        if args.oracle == "service":
            serve(loop, feed, host=args.host, port=args.port)
        else:
            feed()
        result = loop.finish()

    alarms = out / "alarms.csv"
    queries = out / "queries.jsonl"
    write_alarm_csv(result.alarms, alarms)
    write_query_log(result.queries, queries)
    print(f"{len(result.events)} drift events, {len(result.alarms)} alarms, "
          f"{len(result.queries)} queries; logs in {out}")
    manifest.outputs = [str(alarms), str(queries)]
    manifest.finished = _now()
    manifest.write(out)
    return 0


# --- bench --------------------------------------------------------------

def cmd_bench(args: argparse.Namespace) -> int:
    manifest = _manifest(args, f"bench {args.experiment}")
    out = _out_dir(args)
    kwargs: dict = {}
    if args.experiment == "exp3" and args.generators:
        names = tuple(g.strip() for g in args.generators.split(",") if g.strip())
        kwargs["config"] = Exp3Config(generators=names)
    if args.experiment == "exp4" and args.datasets:
        kwargs["datasets"] = [Path(p) for p in args.datasets]
    report = run_experiment(args.experiment, seed=args.seed, **kwargs)
    json_path, txt_path = write_report(report, out)
    print(txt_path.read_text())
    print(f"report at {json_path}")
    manifest.outputs = [str(json_path), str(txt_path)]
    manifest.finished = _now()
    manifest.write(out)
    return 0


# --- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftlab",
        description="concept drift detection workbench")
    parser.add_argument("--config", type=Path, default=None,
                        help="key = value file; flags override it")
    default_out = os.environ.get(OUT_DIR_ENV, "runs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=7)
        p.add_argument("--out-dir", type=Path, default=Path(default_out))

    gen = sub.add_parser("gen", help="generate corpora and toy streams")
    common(gen)
    gen.add_argument("--kind", choices=("meta-corpus", "toy"))
    gen.add_argument("--per-class", type=int, default=200)
    gen.add_argument("--l", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--generator", default="sea")
    gen.add_argument("--length", type=int, default=10000)
    gen.add_argument("--drifts", type=int, default=3)
    gen.add_argument("--magnitude", type=float, default=0.8)
    gen.add_argument("--noise", type=float, default=0.0)
    gen.set_defaults(func=cmd_gen)

    train = sub.add_parser("train", help="train a meta-detector")
    common(train)
    train.add_argument("--corpus", type=Path)
    train.add_argument("--arch", choices=("fcn", "rnn"), default="fcn")
    train.add_argument("--n", type=int, default=25,
                       help="window width the corpus was built with")
    train.add_argument("--ns", type=int, default=5)
    train.add_argument("--nq", type=int, default=15)
    train.add_argument("--episodes", type=int, default=2000)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--weight-decay", type=float, default=0.0)
    train.add_argument("--embed-dim", type=int, default=16)
    train.set_defaults(func=cmd_train)

    detect = sub.add_parser("detect", help="run streaming detection")
    common(detect)
    detect.add_argument("--checkpoint", type=Path)
    detect.add_argument("--trace", type=Path)
    detect.add_argument("--stream", type=Path)
    detect.add_argument("--oracle",
                        choices=("ground-truth", "service", "none"),
                        default="none")
    detect.add_argument("--budget", type=int, default=20)
    detect.add_argument("--expire-after", type=int, default=10)
    detect.add_argument("--host", default="127.0.0.1")
    detect.add_argument("--port", type=int, default=DEFAULT_PORT)
    detect.add_argument("--pace", type=float, default=0.05,
                        help="seconds per stream sample in service mode")
    detect.set_defaults(func=cmd_detect)

    bench = sub.add_parser("bench", help="run a benchmark experiment")
    common(bench)
    bench.add_argument("experiment",
                       choices=("exp1", "exp2", "exp3", "exp4"))
    bench.add_argument("--generators",
                       help="comma-separated generator subset (exp3)")
    bench.add_argument("--datasets", nargs="*",
                       help="real dataset CSV paths (exp4)")
    bench.set_defaults(func=cmd_bench)
    return parser


# Flags a run cannot proceed without; kept out of argparse's required
# set so a config file may supply them.
_REQUIRED = {"gen": ("kind",), "train": ("corpus",), "detect": ("checkpoint",)}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        overrides = read_config_file(args.config)
        unknown = [k for k in overrides if not hasattr(args, k)]
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        # Flags that were given explicitly beat the config file.
        given = {a.split("=", 1)[0].replace("-", "_").lstrip("_")
                 for a in (argv if argv is not None else sys.argv[1:])
                 if a.startswith("--")}
        for key, value in overrides.items():
            if key not in given:
                setattr(args, key, value)
    missing = [k for k in _REQUIRED.get(args.command, ())
               if getattr(args, k) is None]
    if missing:
        parser.error("the following arguments are required: "
                     + ", ".join(f"--{k}" for k in missing))
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
